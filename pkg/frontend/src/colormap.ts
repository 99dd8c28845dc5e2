// Fixed colormap stops for the client-rendered raster overlays.

export interface Rgba {
    r: number;
    g: number;
    b: number;
    a: number;
}

// risk heat: transparent green through yellow/orange to red
export const RISK_STOPS: [number, Rgba][] = [
    [0.0, { r: 40, g: 160, b: 60, a: 0 }],
    [0.15, { r: 230, g: 220, b: 60, a: 110 }],
    [0.5, { r: 240, g: 140, b: 30, a: 160 }],
    [1.0, { r: 210, g: 30, b: 30, a: 210 }],
];

export const LAND_COVER_COLORS: Record<number, Rgba> = {
    0: { r: 168, g: 188, b: 140, a: 255 },  // open ground
    1: { r: 120, g: 120, b: 124, a: 255 },  // road
    2: { r: 60, g: 110, b: 70, a: 255 },    // forest
    3: { r: 150, g: 170, b: 200, a: 255 },
};

export const OBSTACLE_COLOR: Rgba = { r: 30, g: 30, b: 34, a: 255 };
const FALLBACK_COVER: Rgba = { r: 180, g: 180, b: 180, a: 255 };

export function riskColor(value: number): Rgba {
    const v = Math.min(Math.max(value, 0), 1);
    for (let i = 1; i < RISK_STOPS.length; i++) {
        const [hiV, hiC] = RISK_STOPS[i];
        if (v <= hiV) {
            const [loV, loC] = RISK_STOPS[i - 1];
            const t = hiV === loV ? 0 : (v - loV) / (hiV - loV);
            return {
                r: Math.round(loC.r + t * (hiC.r - loC.r)),
                g: Math.round(loC.g + t * (hiC.g - loC.g)),
                b: Math.round(loC.b + t * (hiC.b - loC.b)),
                a: Math.round(loC.a + t * (hiC.a - loC.a)),
            };
        }
    }
    return RISK_STOPS[RISK_STOPS.length - 1][1];
}

export function landCoverColor(cls: number): Rgba {
    return LAND_COVER_COLORS[cls] ?? FALLBACK_COVER;
}

/** Row-major raster to an RGBA byte buffer (one pixel per cell). */
export function rasterToRgba(
    values: number[],
    rows: number,
    cols: number,
    toColor: (v: number) => Rgba,
) {
    // explicit ArrayBuffer keeps the result assignable to ImageData input
    const out = new Uint8ClampedArray(new ArrayBuffer(rows * cols * 4));
    for (let i = 0; i < rows * cols; i++) {
        const c = toColor(values[i]);
        out[i * 4] = c.r;
        out[i * 4 + 1] = c.g;
        out[i * 4 + 2] = c.b;
        out[i * 4 + 3] = c.a;
    }
    return out;
}
