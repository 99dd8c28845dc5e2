import { ApiClient } from './api';
import {
    Cell,
    MissionRequest,
    RiskFieldDoc,
    StoredPlan,
    ThreatDoc,
} from './types';

export type Listener = () => void;

/**
 * Single source of truth for the console. Plans are immutable once stored;
 * re-planning always creates a new plan id, which is what makes comparisons
 * meaningful. At most one solve is in flight per scenario.
 */
export class ConsoleState {
    scenarioId: string | null = null;
    field: RiskFieldDoc | null = null;
    start: Cell | null = null;
    goal: Cell | null = null;
    formationWidth = 0;
    plans = new Map<string, StoredPlan>();
    activePlanId: string | null = null;
    comparePlanId: string | null = null;
    solving = false;
    heartbeats = 0;
    lastError: string | null = null;
    private abort: AbortController | null = null;
    private listeners: Listener[] = [];

    constructor(readonly api: ApiClient) {}

    subscribe(fn: Listener): void {
        this.listeners.push(fn);
    }

    private emit(): void {
        for (const fn of this.listeners) fn();
    }

    activePlan(): StoredPlan | null {
        return this.activePlanId ? this.plans.get(this.activePlanId) ?? null : null;
    }

    comparePlan(): StoredPlan | null {
        return this.comparePlanId ? this.plans.get(this.comparePlanId) ?? null : null;
    }

    async loadScenario(payload: Parameters<ApiClient['uploadScenario']>[0]): Promise<void> {
        this.lastError = null;
        this.scenarioId = await this.api.uploadScenario(payload);
        this.plans.clear();
        this.activePlanId = this.comparePlanId = null;
        await this.refreshField();
    }

    async refreshField(): Promise<void> {
        if (!this.scenarioId) return;
        this.field = await this.api.riskField(this.scenarioId, this.formationWidth);
        this.emit();
    }

    placeStart(cell: Cell): void {
        this.start = cell;
        this.emit();
    }

    placeGoal(cell: Cell): void {
        this.goal = cell;
        this.emit();
    }

    async setFormationWidth(width: number): Promise<void> {
        this.formationWidth = width;
        await this.refreshField();
    }

    cancelSolve(): void {
        this.abort?.abort();
    }

    async solve(request: MissionRequest): Promise<StoredPlan | null> {
        if (!this.scenarioId) throw new Error('no scenario loaded');
        if (this.solving) return null; // one in-flight solve per scenario
        this.solving = true;
        this.heartbeats = 0;
        this.lastError = null;
        this.abort = new AbortController();
        this.emit();
        try {
            const { planId, result } = await this.api.plan(this.scenarioId, request, {
                signal: this.abort.signal,
                onHeartbeat: () => {
                    this.heartbeats += 1;
                    this.emit();
                },
            });
            const stored: StoredPlan = { planId, request, result };
            this.plans.set(planId, stored);
            this.comparePlanId = this.activePlanId;
            this.activePlanId = planId;
            return stored;
        } catch (err) {
            this.lastError = err instanceof Error ? err.message : String(err);
            return null;
        } finally {
            this.solving = false;
            this.abort = null;
            this.emit();
        }
    }

    async injectEvent(
        atIndex: number,
        threats: ThreatDoc[],
        slack?: number,
    ): Promise<ReturnType<ApiClient['injectEvent']> extends Promise<infer T> ? T | null : never> {
        const active = this.activePlan();
        if (!this.scenarioId || !active) throw new Error('no active plan');
        this.lastError = null;
        try {
            const resp = await this.api.injectEvent(
                this.scenarioId, active.planId, atIndex, threats, slack,
            );
            this.plans.set(resp.plan_id, {
                planId: resp.plan_id,
                request: active.request,
                result: resp.result,
            });
            this.comparePlanId = active.planId;
            this.activePlanId = resp.plan_id;
            await this.refreshField(); // event threats are now part of the scenario
            return resp;
        } catch (err) {
            this.lastError = err instanceof Error ? err.message : String(err);
            this.emit();
            return null;
        }
    }
}
