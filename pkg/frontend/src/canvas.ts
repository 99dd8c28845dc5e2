import { landCoverColor, OBSTACLE_COLOR, rasterToRgba, riskColor } from './colormap';
import { Cell, RiskFieldDoc } from './types';

export interface MapLayers {
    landCover: boolean;
    risk: boolean;
}

export interface PathOverlay {
    cells: Cell[];
    color: string;
    dashed?: boolean;
}

/**
 * Canvas renderer for the tactical map: raster layers, path polylines and
 * start/goal/threat markers. Picking math is independent of the 2D context
 * so click handling stays testable where canvas rendering is unavailable.
 */
export class MapCanvas {
    private field: RiskFieldDoc | null = null;
    private scale = 24;
    layers: MapLayers = { landCover: true, risk: true };
    paths: PathOverlay[] = [];
    start: Cell | null = null;
    goal: Cell | null = null;
    markers: { cell: Cell; label: string }[] = [];
    onCellClick: ((cell: Cell) => void) | null = null;

    constructor(readonly el: HTMLCanvasElement) {
        el.addEventListener('click', (ev) => {
            const cell = this.pick(ev);
            if (cell && this.onCellClick) this.onCellClick(cell);
        });
    }

    setField(field: RiskFieldDoc, maxPx = 720): void {
        this.field = field;
        this.scale = Math.max(4, Math.floor(maxPx / Math.max(field.rows, field.cols)));
        this.el.width = field.cols * this.scale;
        this.el.height = field.rows * this.scale;
        this.render();
    }

    pick(ev: { clientX: number; clientY: number }): Cell | null {
        if (!this.field) return null;
        const rect = this.el.getBoundingClientRect();
        const col = Math.floor((ev.clientX - rect.left) / this.scale);
        const row = Math.floor((ev.clientY - rect.top) / this.scale);
        if (row < 0 || col < 0 || row >= this.field.rows || col >= this.field.cols) return null;
        return [row, col];
    }

    cellCenterPx(cell: Cell): [number, number] {
        return [(cell[1] + 0.5) * this.scale, (cell[0] + 0.5) * this.scale];
    }

    render(): void {
        const field = this.field;
        const ctx = this.el.getContext('2d');
        if (!field || !ctx) return;
        const { rows, cols } = field;
        ctx.clearRect(0, 0, this.el.width, this.el.height);
        ctx.imageSmoothingEnabled = false;

        const compose = (values: Uint8ClampedArray<ArrayBuffer>) => {
            const tile = new ImageData(values, cols, rows);
            const off = document.createElement('canvas');
            off.width = cols;
            off.height = rows;
            const octx = off.getContext('2d');
            if (!octx) return;
            octx.putImageData(tile, 0, 0);
            ctx.drawImage(off, 0, 0, cols * this.scale, rows * this.scale);
        };

        if (this.layers.landCover) {
            const base = rasterToRgba(field.land_cover, rows, cols, landCoverColor);
            for (let i = 0; i < rows * cols; i++) {
                if (field.obstacles[i]) {
                    base[i * 4] = OBSTACLE_COLOR.r;
                    base[i * 4 + 1] = OBSTACLE_COLOR.g;
                    base[i * 4 + 2] = OBSTACLE_COLOR.b;
                    base[i * 4 + 3] = OBSTACLE_COLOR.a;
                }
            }
            compose(base);
        }
        if (this.layers.risk) {
            compose(rasterToRgba(field.risk_form, rows, cols, riskColor));
        }

        for (const overlay of this.paths) {
            ctx.strokeStyle = overlay.color;
            ctx.lineWidth = Math.max(2, this.scale / 5);
            ctx.setLineDash(overlay.dashed ? [8, 6] : []);
            ctx.beginPath();
            overlay.cells.forEach((cell, i) => {
                const [x, y] = this.cellCenterPx(cell);
                if (i === 0) ctx.moveTo(x, y);
                else ctx.lineTo(x, y);
            });
            ctx.stroke();
            ctx.setLineDash([]);
        }

        const dot = (cell: Cell, color: string, label: string) => {
            const [x, y] = this.cellCenterPx(cell);
            ctx.fillStyle = color;
            ctx.beginPath();
            ctx.arc(x, y, Math.max(4, this.scale / 3), 0, Math.PI * 2);
            ctx.fill();
            ctx.fillStyle = '#fff';
            ctx.font = `${Math.max(9, this.scale / 2)}px sans-serif`;
            ctx.textAlign = 'center';
            ctx.textBaseline = 'middle';
            ctx.fillText(label, x, y);
        };
        if (this.start) dot(this.start, '#1d6fd1', 'S');
        if (this.goal) dot(this.goal, '#7a2ea0', 'G');
        for (const marker of this.markers) dot(marker.cell, '#c22', marker.label);
    }
}
