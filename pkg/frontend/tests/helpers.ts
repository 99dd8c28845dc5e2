import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import type {
    EventResponse,
    MissionRequest,
    PlanResultDoc,
    RiskFieldDoc,
    ProfilePoint,
    ScenarioUpload,
} from '../src/types';

interface Fixtures {
    scenarioUpload: ScenarioUpload;
    scenarioId: string;
    planId: string;
    planResult: PlanResultDoc;
    fastPlanId: string;
    fastPlanResult: PlanResultDoc;
    missionSafe: MissionRequest;
    missionFast: MissionRequest;
    riskField: RiskFieldDoc;
    profile: { plan_id: string; points: ProfilePoint[] };
    eventRequest: Record<string, unknown>;
    eventResponse: EventResponse;
    waypointsText: string;
}

const here = dirname(fileURLToPath(import.meta.url));

/** Responses recorded once from the live service and frozen. */
export const fixtures: Fixtures = JSON.parse(
    readFileSync(join(here, 'fixtures.json'), 'utf-8'),
);

export type FetchRoute = (url: string, init?: RequestInit) => Response | Promise<Response>;

export function jsonResponse(body: unknown, status = 200, headers: Record<string, string> = {}) {
    return new Response(JSON.stringify(body), {
        status,
        headers: { 'content-type': 'application/json', ...headers },
    });
}

export function ndjsonResponse(lines: unknown[]): Response {
    const text = lines.map((l) => JSON.stringify(l)).join('\n') + '\n';
    return new Response(text, {
        status: 200,
        headers: { 'content-type': 'application/x-ndjson' },
    });
}

/** Install a route-table fetch mock; returns the list of calls observed. */
export function mockFetch(routes: Record<string, FetchRoute>) {
    const calls: { url: string; init?: RequestInit }[] = [];
    globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
        const url = String(input);
        calls.push({ url, init });
        for (const [prefix, route] of Object.entries(routes)) {
            if (url.includes(prefix)) return route(url, init);
        }
        throw new Error(`unmocked fetch: ${url}`);
    }) as typeof fetch;
    return calls;
}
