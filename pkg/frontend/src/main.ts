import { ApiClient } from './api';
import { MapCanvas } from './canvas';
import { Dashboard } from './components/dashboard';
import { EventPanel } from './components/eventPanel';
import { renderKpiBanner } from './components/kpi';
import { ModeForm } from './components/modeForm';
import { ConsoleState } from './state';
import { Cell, ScenarioUpload } from './types';

type PlaceTool = 'start' | 'goal';

export function mountConsole(root: HTMLElement, api = new ApiClient()): {
    state: ConsoleState;
    map: MapCanvas;
    modeForm: ModeForm;
    dashboard: Dashboard;
    eventPanel: EventPanel;
} {
    root.innerHTML = `
        <div id="layout">
            <aside id="control-panel">
                <section>
                    <h3>Scenario</h3>
                    <input id="scenario-file" type="file" accept=".json" />
                    <div id="scenario-status" class="muted">no scenario loaded</div>
                    <label><input type="checkbox" id="layer-risk" checked /> risk heat</label>
                    <label><input type="checkbox" id="layer-cover" checked /> land cover</label>
                </section>
                <section>
                    <h3>Mission</h3>
                    <div id="place-tools">
                        <button id="place-start">Place start</button>
                        <button id="place-goal">Place goal</button>
                    </div>
                    <div id="mode-form"></div>
                    <button id="run-plan">Plan</button>
                    <button id="cancel-plan" hidden>Cancel</button>
                    <div id="solve-status" class="muted"></div>
                </section>
                <section>
                    <h3>Dynamic events</h3>
                    <div id="event-panel"></div>
                </section>
            </aside>
            <main id="main-canvas">
                <div id="kpi-banner"></div>
                <canvas id="map"></canvas>
                <div id="dashboard"></div>
            </main>
        </div>
    `;

    const state = new ConsoleState(api);
    const map = new MapCanvas(root.querySelector('#map') as HTMLCanvasElement);
    const modeForm = new ModeForm(root.querySelector('#mode-form') as HTMLElement);
    const dashboard = new Dashboard(root.querySelector('#dashboard') as HTMLElement);
    const eventPanel = new EventPanel(root.querySelector('#event-panel') as HTMLElement);

    let placeTool: PlaceTool | null = null;
    (root.querySelector('#place-start') as HTMLButtonElement).addEventListener(
        'click', () => (placeTool = 'start'),
    );
    (root.querySelector('#place-goal') as HTMLButtonElement).addEventListener(
        'click', () => (placeTool = 'goal'),
    );

    map.onCellClick = (cell: Cell) => {
        if (eventPanel.takeMapClick(cell)) return;
        if (placeTool === 'start') state.placeStart(cell);
        else if (placeTool === 'goal') state.placeGoal(cell);
        placeTool = null;
    };

    const layerRisk = root.querySelector('#layer-risk') as HTMLInputElement;
    const layerCover = root.querySelector('#layer-cover') as HTMLInputElement;
    const syncLayers = () => {
        map.layers = { risk: layerRisk.checked, landCover: layerCover.checked };
        map.render();
    };
    layerRisk.addEventListener('change', syncLayers);
    layerCover.addEventListener('change', syncLayers);

    const fileInput = root.querySelector('#scenario-file') as HTMLInputElement;
    fileInput.addEventListener('change', async () => {
        const file = fileInput.files?.[0];
        if (!file) return;
        const payload = JSON.parse(await file.text()) as ScenarioUpload;
        await state.loadScenario(payload);
        (root.querySelector('#scenario-status') as HTMLElement).textContent =
            `scenario ${state.scenarioId}`;
    });

    const runBtn = root.querySelector('#run-plan') as HTMLButtonElement;
    const cancelBtn = root.querySelector('#cancel-plan') as HTMLButtonElement;
    runBtn.addEventListener('click', async () => {
        const problem = modeForm.validationError(state.start, state.goal);
        modeForm.showError(problem);
        if (problem) return; // invalid input never reaches the service
        await state.setFormationWidth(modeForm.formationWidth);
        const plan = await state.solve(modeForm.buildRequest(state.start!, state.goal!));
        if (plan && state.scenarioId) {
            dashboard.renderProfile(await api.profile(state.scenarioId, plan.planId));
        }
    });
    cancelBtn.addEventListener('click', () => state.cancelSolve());

    eventPanel.onInject = async (threats, slack) => {
        const active = state.activePlan();
        const resp = await state.injectEvent(
            active ? Math.min(2, active.result.path.length - 1) : 0, threats, slack,
        );
        eventPanel.renderOutcome(resp, resp ? null : state.lastError);
    };

    (root.querySelector('#download-waypoints') as HTMLButtonElement).addEventListener(
        'click', async () => {
            const active = state.activePlan();
            if (!active || !state.scenarioId) return;
            const text = await api.waypoints(state.scenarioId, active.planId);
            const blob = new Blob([text], { type: 'text/plain' });
            const link = document.createElement('a');
            link.href = URL.createObjectURL(blob);
            link.download = `${active.planId}.waypoints`;
            link.click();
            URL.revokeObjectURL(link.href);
        },
    );

    state.subscribe(() => {
        if (state.field) map.setField(state.field);
        map.start = state.start;
        map.goal = state.goal;
        const active = state.activePlan();
        const compare = state.comparePlan();
        map.paths = [];
        if (compare) map.paths.push({ cells: compare.result.path, color: '#888', dashed: true });
        if (active) map.paths.push({ cells: active.result.path, color: '#1d6fd1' });
        map.render();

        renderKpiBanner(root.querySelector('#kpi-banner') as HTMLElement, active);
        if (active) {
            dashboard.renderExposure(active);
            dashboard.renderCpa(active);
            dashboard.renderCompare(active, compare);
        }
        runBtn.disabled = state.solving;
        cancelBtn.hidden = !state.solving;
        (root.querySelector('#solve-status') as HTMLElement).textContent = state.solving
            ? `solving... (${state.heartbeats} heartbeats)`
            : state.lastError ?? '';
    });

    return { state, map, modeForm, dashboard, eventPanel };
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
    mountConsole(document.getElementById('app') as HTMLElement);
}
