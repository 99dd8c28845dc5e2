import { fmtMeters, fmtPercent, fmtSeconds } from '../format';
import { StoredPlan } from '../types';

/** KPI banner: distance, time, survival, log-risk, plus solver flags. */
export function renderKpiBanner(el: HTMLElement, plan: StoredPlan | null): void {
    el.innerHTML = '';
    if (!plan) {
        el.innerHTML = '<span class="muted">No plan yet - place start and goal, then Plan.</span>';
        return;
    }
    const { kpis, flags } = plan.result;
    const chips: [string, string, string][] = [
        ['Distance', fmtMeters(kpis.total_distance_m), String(kpis.total_distance_m)],
        ['Est. time', fmtSeconds(kpis.total_time_s), String(kpis.total_time_s)],
        ['Survival', fmtPercent(kpis.survival_probability), String(kpis.survival_probability)],
        ['Log-risk', kpis.total_log_risk.toFixed(3), String(kpis.total_log_risk)],
    ];
    for (const [label, value, raw] of chips) {
        const chip = document.createElement('div');
        chip.className = 'kpi';
        chip.innerHTML = `<span class="kpi-label">${label}</span><span class="kpi-value"></span>`;
        const valueEl = chip.querySelector('.kpi-value') as HTMLElement;
        valueEl.textContent = value;
        valueEl.dataset.raw = raw; // exact service value, for tests and tooltips
        valueEl.title = raw;
        el.appendChild(chip);
    }
    const notes: string[] = [];
    if (flags.fallback_used && flags.effective_max_risk !== null) {
        notes.push(`risk ceiling relaxed to ${flags.effective_max_risk.toFixed(3)}`);
    }
    if (flags.full_replan_used) notes.push('full replan used');
    if (flags.anytime) notes.push('anytime result (solver hit its limit)');
    if (notes.length) {
        const note = document.createElement('div');
        note.className = 'kpi-note';
        note.textContent = notes.join(' | ');
        el.appendChild(note);
    }
}
