// Shared display formatting. The underlying numbers always come verbatim
// from service responses; only their presentation is decided here.

export function fmtSeconds(s: number): string {
    const minutes = Math.floor(s / 60);
    const seconds = Math.round(s - minutes * 60);
    return `${minutes}:${String(seconds).padStart(2, '0')}`;
}

export function fmtMeters(m: number): string {
    return m >= 1000 ? `${(m / 1000).toFixed(2)} km` : `${Math.round(m)} m`;
}

export function fmtPercent(p: number, digits = 2): string {
    return `${(p * 100).toFixed(digits)}%`;
}

export function fmtSigned(value: number, digits = 1, unit = '%'): string {
    const sign = value > 0 ? '+' : '';
    return `${sign}${value.toFixed(digits)}${unit}`;
}
