// Wire shapes of the planning service API. The console never computes
// planning numbers itself; everything rendered traces back to these fields.

export type Cell = [number, number];

export interface ModeSpec {
    type: 'Balanced' | 'FastWithinRisk' | 'SafeWithinTime';
    alpha?: number;
    max_risk?: number;
    budget_s?: number;
}

export interface MissionRequest {
    start: Cell;
    goal: Cell;
    mode: ModeSpec;
    formation_width_m: number;
    replan_slack: number;
}

export interface Kpis {
    total_time_s: number;
    total_distance_m: number;
    total_log_risk: number;
    survival_probability: number;
}

export interface PlanResultDoc {
    path: Cell[];
    kpis: Kpis;
    cpa_m: Record<string, number>;
    exposure_m: { low: number; medium: number; high: number };
    mode: Record<string, unknown>;
    flags: {
        fallback_used: boolean;
        effective_max_risk: number | null;
        full_replan_used: boolean;
        anytime: boolean;
    };
    stats: Record<string, number>;
}

export interface StoredPlan {
    planId: string;
    request: MissionRequest;
    result: PlanResultDoc;
}

export interface RiskFieldDoc {
    rows: number;
    cols: number;
    cell_size_m: number;
    origin: [number, number];
    formation_width_m: number;
    p_det: number[];
    risk: number[];
    risk_form: number[];
    log_risk: number[];
    land_cover: number[];
    elevation: number[];
    obstacles: number[];
    threats: ThreatDoc[];
}

export interface ThreatDoc {
    id: string;
    R_m: number;
    phi: number;
    p: number;
    impact: number | number[];
    prior: { cells: [number, number, number][] };
}

export interface ProfilePoint {
    row: number;
    col: number;
    x_m: number;
    y_m: number;
    distance_m: number;
    time_s: number;
    altitude_m: number;
    risk: number;
    log_risk: number;
    land_cover: number;
}

export interface PatchReport {
    risk_log: { pre: number; post: number; delta_pct: number };
    time_s: { pre: number; post: number; delta_pct: number };
    survival: { pre: number; post: number; delta_abs: number };
}

export interface EventResponse {
    plan_id: string;
    result: PlanResultDoc;
    report: PatchReport;
    comparison: {
        pre: Record<string, number>;
        patch: Record<string, number>;
        full: Record<string, number>;
        risk_gap_pct: number;
        wall_time_s: { patch: number; full: number };
        full_replan_used: boolean;
    };
}

export interface ScenarioUpload {
    terrain: Record<string, unknown>;
    mobility?: Record<string, unknown> | null;
    threats: ThreatDoc[];
}

export class ServiceError extends Error {
    constructor(
        message: string,
        readonly status: number,
        readonly minTimeS?: number,
    ) {
        super(message);
    }
}
