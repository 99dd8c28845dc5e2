import { fmtMeters, fmtPercent, fmtSeconds, fmtSigned } from '../format';
import { ProfilePoint, StoredPlan } from '../types';

const LAND_COVER_NAMES: Record<number, string> = {
    0: 'open ground',
    1: 'road',
    2: 'forest',
};

/** Polyline chart on a small canvas; silently skips when 2D is unavailable. */
function drawSeries(
    canvas: HTMLCanvasElement,
    xs: number[],
    ys: number[],
    color: string,
): void {
    const ctx = canvas.getContext('2d');
    if (!ctx || xs.length < 2) return;
    const w = canvas.width;
    const h = canvas.height;
    ctx.clearRect(0, 0, w, h);
    const xMin = xs[0];
    const xMax = xs[xs.length - 1] || 1;
    const yMin = Math.min(...ys);
    const yMax = Math.max(...ys);
    const span = yMax - yMin || 1;
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    xs.forEach((x, i) => {
        const px = ((x - xMin) / (xMax - xMin || 1)) * (w - 20) + 10;
        const py = h - 12 - ((ys[i] - yMin) / span) * (h - 24);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
    });
    ctx.stroke();
}

export class Dashboard {
    constructor(readonly el: HTMLElement) {
        this.el.innerHTML = `
            <div class="tabs">
                <button data-tab="profile" class="active">Altitude profile</button>
                <button data-tab="exposure">Risk exposure</button>
                <button data-tab="terrain">Terrain mix</button>
                <button data-tab="cpa">Threat CPA</button>
                <button data-tab="compare">Compare</button>
            </div>
            <div id="tab-profile" class="tab"><canvas width="640" height="160"></canvas>
                <div class="muted">altitude (m) along the route</div></div>
            <div id="tab-exposure" class="tab" hidden></div>
            <div id="tab-terrain" class="tab" hidden></div>
            <div id="tab-cpa" class="tab" hidden></div>
            <div id="tab-compare" class="tab" hidden></div>
            <button id="download-waypoints">Download waypoints</button>
        `;
        this.el.querySelectorAll('.tabs button').forEach((btn) => {
            btn.addEventListener('click', () => this.showTab((btn as HTMLElement).dataset.tab!));
        });
    }

    showTab(name: string): void {
        this.el.querySelectorAll('.tab').forEach((tab) => {
            (tab as HTMLElement).hidden = tab.id !== `tab-${name}`;
        });
        this.el.querySelectorAll('.tabs button').forEach((btn) => {
            btn.classList.toggle('active', (btn as HTMLElement).dataset.tab === name);
        });
    }

    renderProfile(points: ProfilePoint[]): void {
        const canvas = this.el.querySelector('#tab-profile canvas') as HTMLCanvasElement;
        drawSeries(
            canvas,
            points.map((p) => p.distance_m),
            points.map((p) => p.altitude_m),
            '#3b6ea5',
        );
    }

    renderExposure(plan: StoredPlan): void {
        const host = this.el.querySelector('#tab-exposure') as HTMLElement;
        const { exposure_m } = plan.result;
        const total = exposure_m.low + exposure_m.medium + exposure_m.high || 1;
        const row = (label: string, meters: number, cls: string) => `
            <div class="bar-row">
                <span class="bar-label">${label}</span>
                <div class="bar"><div class="bar-fill ${cls}"
                     style="width:${(meters / total) * 100}%"></div></div>
                <span class="bar-value" data-raw="${meters}">${fmtMeters(meters)}</span>
            </div>`;
        host.innerHTML =
            row('low (&lt;0.15)', exposure_m.low, 'low') +
            row('medium (0.15-0.5)', exposure_m.medium, 'medium') +
            row('high (&gt;0.5)', exposure_m.high, 'high');
    }

    /** Distance per land-cover class accumulated from the profile series. */
    renderTerrainMix(points: ProfilePoint[]): void {
        const host = this.el.querySelector('#tab-terrain') as HTMLElement;
        const byClass = new Map<number, number>();
        for (let i = 1; i < points.length; i++) {
            const leg = points[i].distance_m - points[i - 1].distance_m;
            byClass.set(points[i].land_cover, (byClass.get(points[i].land_cover) ?? 0) + leg);
        }
        const rows = [...byClass.entries()]
            .sort((a, b) => b[1] - a[1])
            .map(([cls, meters]) => `
                <tr><td>${LAND_COVER_NAMES[cls] ?? `class ${cls}`}</td>
                    <td data-raw="${meters}">${fmtMeters(meters)}</td></tr>`)
            .join('');
        host.innerHTML = `<table><thead><tr><th>Land cover</th><th>Distance</th></tr></thead>
            <tbody>${rows}</tbody></table>`;
    }

    renderCpa(plan: StoredPlan): void {
        const host = this.el.querySelector('#tab-cpa') as HTMLElement;
        const entries = Object.entries(plan.result.cpa_m);
        if (!entries.length) {
            host.innerHTML = '<div class="muted">No threats in this scenario.</div>';
            return;
        }
        const rows = entries
            .sort((a, b) => a[1] - b[1])
            .map(([id, meters]) => `
                <tr><td>${id}</td><td data-raw="${meters}">${fmtMeters(meters)}</td></tr>`)
            .join('');
        host.innerHTML = `<table><thead><tr><th>Threat</th>
            <th>Closest approach</th></tr></thead><tbody>${rows}</tbody></table>`;
    }

    /** Side-by-side KPI deltas between the active plan and another. */
    renderCompare(active: StoredPlan | null, other: StoredPlan | null): void {
        const host = this.el.querySelector('#tab-compare') as HTMLElement;
        if (!active || !other) {
            host.innerHTML = '<div class="muted">Plan twice to compare two routes.</div>';
            return;
        }
        const a = active.result.kpis;
        const b = other.result.kpis;
        const row = (label: string, left: string, right: string, delta: string) => `
            <tr><td>${label}</td><td>${left}</td><td>${right}</td>
                <td class="delta">${delta}</td></tr>`;
        host.innerHTML = `
            <table><thead><tr><th></th><th>${other.planId}</th><th>${active.planId}</th>
                <th>delta</th></tr></thead><tbody>
            ${row('Time', fmtSeconds(b.total_time_s), fmtSeconds(a.total_time_s),
                fmtSigned(a.total_time_s - b.total_time_s, 1, ' s'))}
            ${row('Distance', fmtMeters(b.total_distance_m), fmtMeters(a.total_distance_m),
                fmtSigned(a.total_distance_m - b.total_distance_m, 0, ' m'))}
            ${row('Survival', fmtPercent(b.survival_probability),
                fmtPercent(a.survival_probability),
                fmtSigned((a.survival_probability - b.survival_probability) * 100, 2, ' pp'))}
            ${row('Log-risk', b.total_log_risk.toFixed(3), a.total_log_risk.toFixed(3),
                fmtSigned(a.total_log_risk - b.total_log_risk, 3, ''))}
            </tbody></table>`;
    }
}
