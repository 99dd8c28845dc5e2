import { fmtPercent, fmtSeconds, fmtSigned } from '../format';
import { Cell, EventResponse, ThreatDoc } from '../types';

/**
 * Mid-mission threat injection: the operator arms the tool, drops a threat
 * on the map, sets slack, and reads the pre/post repair table.
 */
export class EventPanel {
    arming = false;
    pendingCell: Cell | null = null;
    rangeM = 150;
    plateau = 0.5;
    decay = 2.0;
    impact = 1.0;
    priorRadiusCells = 0; // 0: point prior; >0: uniform disk of cells
    slack = 0.5;
    onInject: ((threats: ThreatDoc[], slack: number) => void) | null = null;

    constructor(readonly el: HTMLElement) {
        this.el.innerHTML = `
            <button id="arm-threat">Drop new threat</button>
            <div id="threat-form" hidden>
                <span id="pending-cell" class="muted">click the map...</span>
                <label>Range (m) <input id="threat-range" type="number" value="150" /></label>
                <label>Plateau fraction <input id="threat-phi" type="number"
                    step="0.05" min="0.05" max="0.95" value="0.5" /></label>
                <label>Decay exponent <input id="threat-p" type="number"
                    step="0.5" min="0.5" value="2" /></label>
                <label>Impact <input id="threat-impact" type="number"
                    step="0.1" min="0" max="1" value="1" /></label>
                <label>Prior radius (cells, 0 = point)
                    <input id="threat-prior-radius" type="number"
                        step="1" min="0" max="6" value="0" /></label>
                <label>Slack <input id="event-slack" type="number"
                    step="0.1" min="0" value="0.5" /></label>
                <button id="inject-event" disabled>Repair route</button>
            </div>
            <div id="event-result"></div>
        `;
        (this.el.querySelector('#arm-threat') as HTMLButtonElement).addEventListener(
            'click', () => {
                this.arming = !this.arming;
                (this.el.querySelector('#threat-form') as HTMLElement).hidden = !this.arming;
            },
        );
        const bind = (id: string, setter: (v: number) => void) => {
            const input = this.el.querySelector(id) as HTMLInputElement;
            input.addEventListener('input', () => setter(Number(input.value)));
        };
        bind('#threat-range', (v) => (this.rangeM = v));
        bind('#threat-phi', (v) => (this.plateau = v));
        bind('#threat-p', (v) => (this.decay = v));
        bind('#threat-impact', (v) => (this.impact = v));
        bind('#threat-prior-radius', (v) => (this.priorRadiusCells = Math.max(0, Math.round(v))));
        bind('#event-slack', (v) => (this.slack = v));
        (this.el.querySelector('#inject-event') as HTMLButtonElement).addEventListener(
            'click', () => {
                if (!this.pendingCell || !this.onInject) return;
                this.onInject(this.buildThreats(), this.slack);
            },
        );
    }

    takeMapClick(cell: Cell): boolean {
        if (!this.arming) return false;
        this.pendingCell = cell;
        (this.el.querySelector('#pending-cell') as HTMLElement).textContent =
            `threat at (${cell[0]}, ${cell[1]})`;
        (this.el.querySelector('#inject-event') as HTMLButtonElement).disabled = false;
        return true;
    }

    buildThreats(): ThreatDoc[] {
        const [row, col] = this.pendingCell!;
        const cells: [number, number, number][] = [];
        const k = this.priorRadiusCells;
        for (let dr = -k; dr <= k; dr++) {
            for (let dc = -k; dc <= k; dc++) {
                if (dr * dr + dc * dc <= k * k) cells.push([row + dr, col + dc, 1.0]);
            }
        }
        return [{
            id: `popup-${row}-${col}`,
            R_m: this.rangeM,
            phi: this.plateau,
            p: this.decay,
            impact: this.impact,
            prior: { cells },
        }];
    }

    renderOutcome(resp: EventResponse | null, error: string | null): void {
        const host = this.el.querySelector('#event-result') as HTMLElement;
        if (error) {
            host.innerHTML = `<div class="banner error">Repair failed: ${error}</div>`;
            return;
        }
        if (!resp) {
            host.innerHTML = '';
            return;
        }
        const r = resp.report;
        const unchanged = Math.abs(r.risk_log.delta_pct) < 1e-12
            && Math.abs(r.time_s.delta_pct) < 1e-12;
        const banner = unchanged
            ? '<div class="banner">No change: the new threat does not touch the route.</div>'
            : resp.comparison.full_replan_used
                ? '<div class="banner">Patch window infeasible; a full replan was used.</div>'
                : '';
        host.innerHTML = `
            ${banner}
            <table id="patch-table"><thead>
                <tr><th></th><th>Pre</th><th>Post</th><th>delta</th></tr>
            </thead><tbody>
                <tr><td>Risk (log)</td>
                    <td data-raw="${r.risk_log.pre}">${r.risk_log.pre.toFixed(2)}</td>
                    <td data-raw="${r.risk_log.post}">${r.risk_log.post.toFixed(2)}</td>
                    <td class="delta" data-raw="${r.risk_log.delta_pct}">
                        ${fmtSigned(r.risk_log.delta_pct)}</td></tr>
                <tr><td>Time</td>
                    <td data-raw="${r.time_s.pre}">${fmtSeconds(r.time_s.pre)}</td>
                    <td data-raw="${r.time_s.post}">${fmtSeconds(r.time_s.post)}</td>
                    <td class="delta" data-raw="${r.time_s.delta_pct}">
                        ${fmtSigned(r.time_s.delta_pct)}</td></tr>
                <tr><td>Survival</td>
                    <td data-raw="${r.survival.pre}">${fmtPercent(r.survival.pre)}</td>
                    <td data-raw="${r.survival.post}">${fmtPercent(r.survival.post)}</td>
                    <td class="delta" data-raw="${r.survival.delta_abs}">
                        ${fmtSigned(r.survival.delta_abs * 100, 2, ' pp')}</td></tr>
            </tbody></table>`;
    }
}
