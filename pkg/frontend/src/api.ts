import {
    EventResponse,
    MissionRequest,
    PlanResultDoc,
    RiskFieldDoc,
    ScenarioUpload,
    ServiceError,
    ThreatDoc,
    ProfilePoint,
} from './types';

async function fail(resp: Response): Promise<never> {
    let message = `${resp.status}`;
    let minTime: number | undefined;
    try {
        const body = await resp.json();
        message = body.error ?? message;
        minTime = body.min_time_s;
    } catch {
        // non-JSON error body; keep the status text
    }
    throw new ServiceError(message, resp.status, minTime);
}

export class ApiClient {
    constructor(readonly baseUrl: string = '') {}

    private url(path: string): string {
        return `${this.baseUrl}${path}`;
    }

    async uploadScenario(payload: ScenarioUpload): Promise<string> {
        const resp = await fetch(this.url('/scenario'), {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify(payload),
        });
        if (!resp.ok) await fail(resp);
        return (await resp.json()).scenario_id;
    }

    async riskField(scenarioId: string, formationWidth: number): Promise<RiskFieldDoc> {
        const resp = await fetch(
            this.url(`/scenario/${scenarioId}/riskfield?formation_width=${formationWidth}`),
        );
        if (!resp.ok) await fail(resp);
        return resp.json();
    }

    /**
     * Solve one mission. Uses the streaming endpoint so long solves keep the
     * console responsive: heartbeat lines invoke the callback, the final line
     * carries the plan. Abort via the signal cancels the request.
     */
    async plan(
        scenarioId: string,
        request: MissionRequest,
        opts: { onHeartbeat?: () => void; signal?: AbortSignal } = {},
    ): Promise<{ planId: string; result: PlanResultDoc }> {
        const resp = await fetch(this.url(`/scenario/${scenarioId}/plan?stream=1`), {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify(request),
            signal: opts.signal,
        });
        if (!resp.ok || !resp.body) await fail(resp);
        const reader = resp.body!.getReader();
        const decoder = new TextDecoder();
        let buffer = '';
        let last: Record<string, unknown> | null = null;
        for (;;) {
            const { done, value } = await reader.read();
            if (value) buffer += decoder.decode(value, { stream: true });
            let idx: number;
            while ((idx = buffer.indexOf('\n')) >= 0) {
                const line = buffer.slice(0, idx).trim();
                buffer = buffer.slice(idx + 1);
                if (!line) continue;
                const record = JSON.parse(line);
                if ('heartbeat' in record) opts.onHeartbeat?.();
                else last = record;
            }
            if (done) break;
        }
        if (!last) throw new ServiceError('empty response from solver', 502);
        if ('error' in last) {
            throw new ServiceError(String(last.error), 409, last.min_time_s as number);
        }
        return { planId: String(last.plan_id), result: last.result as PlanResultDoc };
    }

    async injectEvent(
        scenarioId: string,
        planId: string,
        atIndex: number,
        threats: ThreatDoc[],
        slack?: number,
    ): Promise<EventResponse> {
        const body: Record<string, unknown> = {
            plan_id: planId,
            at_index: atIndex,
            threats,
        };
        if (slack !== undefined) body.slack = slack;
        const resp = await fetch(this.url(`/scenario/${scenarioId}/event`), {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify(body),
        });
        if (!resp.ok) await fail(resp);
        return resp.json();
    }

    async profile(scenarioId: string, planId: string): Promise<ProfilePoint[]> {
        const resp = await fetch(this.url(`/scenario/${scenarioId}/profile?plan=${planId}`));
        if (!resp.ok) await fail(resp);
        return (await resp.json()).points;
    }

    async waypoints(scenarioId: string, planId: string, decimate = 1): Promise<string> {
        const resp = await fetch(
            this.url(`/scenario/${scenarioId}/waypoints?plan=${planId}&decimate=${decimate}`),
        );
        if (!resp.ok) await fail(resp);
        return resp.text();
    }
}
