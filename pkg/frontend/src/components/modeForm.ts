import { MissionRequest, ModeSpec, Cell } from '../types';

export type ModeName = 'Balanced' | 'FastWithinRisk' | 'SafeWithinTime';

/**
 * Mode selector that reveals only the parameters relevant to the chosen
 * mode, with client-side validation so obviously bad requests never reach
 * the service.
 */
export class ModeForm {
    mode: ModeName = 'Balanced';
    alpha = 0.5;
    maxRisk = 0.3;
    budgetS = 600;
    formationWidth = 0;
    replanSlack = 0.5;

    constructor(readonly el: HTMLElement) {
        this.renderSkeleton();
    }

    private renderSkeleton(): void {
        this.el.innerHTML = `
            <label>Mode
                <select id="mode-select">
                    <option value="Balanced">Balanced</option>
                    <option value="FastWithinRisk">Fast within risk</option>
                    <option value="SafeWithinTime">Safe within time</option>
                </select>
            </label>
            <div id="mode-params"></div>
            <label>Formation width (m)
                <input id="formation-width" type="range" min="0" max="500" step="25" value="0" />
                <span id="formation-width-value">0</span>
            </label>
            <label>Replan slack
                <input id="replan-slack" type="number" min="0" step="0.1" value="0.5" />
            </label>
            <div id="mode-error" class="error" hidden></div>
        `;
        const select = this.el.querySelector('#mode-select') as HTMLSelectElement;
        select.addEventListener('change', () => {
            this.mode = select.value as ModeName;
            this.renderParams();
        });
        const width = this.el.querySelector('#formation-width') as HTMLInputElement;
        width.addEventListener('input', () => {
            this.formationWidth = Number(width.value);
            (this.el.querySelector('#formation-width-value') as HTMLElement).textContent =
                width.value;
        });
        const slack = this.el.querySelector('#replan-slack') as HTMLInputElement;
        slack.addEventListener('input', () => {
            this.replanSlack = Number(slack.value);
        });
        this.renderParams();
    }

    /** Swap parameter controls in place when the mode changes. */
    renderParams(): void {
        const host = this.el.querySelector('#mode-params') as HTMLElement;
        if (this.mode === 'Balanced') {
            host.innerHTML = `
                <label>Time vs risk weight (alpha)
                    <input id="param-alpha" type="range" min="0" max="1" step="0.05"
                           value="${this.alpha}" />
                    <span id="param-alpha-value">${this.alpha.toFixed(2)}</span>
                </label>`;
            const input = host.querySelector('#param-alpha') as HTMLInputElement;
            input.addEventListener('input', () => {
                this.alpha = Number(input.value);
                (host.querySelector('#param-alpha-value') as HTMLElement).textContent =
                    this.alpha.toFixed(2);
            });
        } else if (this.mode === 'FastWithinRisk') {
            host.innerHTML = `
                <label>Per-cell risk ceiling
                    <input id="param-maxrisk" type="range" min="0" max="1" step="0.01"
                           value="${this.maxRisk}" />
                    <span id="param-maxrisk-value">${this.maxRisk.toFixed(2)}</span>
                </label>`;
            const input = host.querySelector('#param-maxrisk') as HTMLInputElement;
            input.addEventListener('input', () => {
                this.maxRisk = Number(input.value);
                (host.querySelector('#param-maxrisk-value') as HTMLElement).textContent =
                    this.maxRisk.toFixed(2);
            });
        } else {
            host.innerHTML = `
                <label>Mission time budget (s)
                    <input id="param-budget" type="number" min="1" step="10"
                           value="${this.budgetS}" />
                </label>`;
            const input = host.querySelector('#param-budget') as HTMLInputElement;
            input.addEventListener('input', () => {
                this.budgetS = Number(input.value);
            });
        }
    }

    /** Validation error for the current inputs, or null when sendable. */
    validationError(start: Cell | null, goal: Cell | null): string | null {
        if (!start || !goal) return 'place both start and goal markers';
        if (start[0] === goal[0] && start[1] === goal[1]) return 'start and goal must differ';
        if (this.mode === 'SafeWithinTime' && !(this.budgetS > 0)) {
            return 'time budget must be positive';
        }
        if (this.mode === 'Balanced' && (this.alpha < 0 || this.alpha > 1)) {
            return 'alpha must be within [0, 1]';
        }
        if (this.mode === 'FastWithinRisk' && (this.maxRisk < 0 || this.maxRisk > 1)) {
            return 'risk ceiling must be within [0, 1]';
        }
        return null;
    }

    showError(message: string | null): void {
        const box = this.el.querySelector('#mode-error') as HTMLElement;
        box.hidden = !message;
        box.textContent = message ?? '';
    }

    buildRequest(start: Cell, goal: Cell): MissionRequest {
        const mode: ModeSpec =
            this.mode === 'Balanced'
                ? { type: 'Balanced', alpha: this.alpha }
                : this.mode === 'FastWithinRisk'
                    ? { type: 'FastWithinRisk', max_risk: this.maxRisk }
                    : { type: 'SafeWithinTime', budget_s: this.budgetS };
        return {
            start,
            goal,
            mode,
            formation_width_m: this.formationWidth,
            replan_slack: this.replanSlack,
        };
    }
}
