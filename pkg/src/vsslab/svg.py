"""Deterministic static SVG line plots of trace signals."""
from __future__ import annotations

import math

import numpy as np

WIDTH, HEIGHT = 720, 360
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 45
COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#16a085", "#7f8c8d")
MAX_COLUMNS = 1200


def available_signals(trace) -> list[str]:
    out = ["z", "u", "s", "omega", "q", "theta"]
    if trace.v is not None:
        out.append("validities")
    if trace.s_i is not None:
        out.append("surfaces")
    return out


def _series(trace, signal: str) -> list[tuple[str, np.ndarray]]:
    names = {"omega": 0, "q": 1, "theta": 2, "z": 3}
    if signal in names:
        return [(signal, trace.x[:, names[signal]])]
    if signal == "u":
        return [("u", trace.u)]
    if signal == "s":
        return [("s", trace.s)]
    if signal == "validities" and trace.v is not None:
        return [(f"v{i + 1}", trace.v[:, i]) for i in range(trace.v.shape[1])]
    if signal == "surfaces" and trace.s_i is not None:
        return [(f"s{i + 1}", trace.s_i[:, i]) for i in range(trace.s_i.shape[1])]
    raise ValueError(f"signal {signal!r} is not in this trace; available: {', '.join(available_signals(trace))}")


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    raw = span / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9)
    ticks = []
    i = first
    while i * step <= hi + 1e-9 * step:
        ticks.append(round(i * step, 12) + 0.0)
        i += 1
    return ticks


def _decimate(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Keep first/min/max/last per column so chattering envelopes survive."""
    if t.shape[0] <= 2 * MAX_COLUMNS:
        return t, y
    edges = np.linspace(0, t.shape[0], MAX_COLUMNS + 1).astype(int)
    ts, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = y[a:b]
        idx = sorted({a, a + int(np.argmin(seg)), a + int(np.argmax(seg)), b - 1})
        ts.extend(t[idx])
        ys.extend(y[idx])
    return np.asarray(ts), np.asarray(ys)


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def emit_plot(trace, signal: str) -> str:
    """One SVG document for ``signal`` against time."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    series = _series(trace, signal)
    t = np.asarray(trace.t, dtype=float)
    ymin = min(float(np.min(y)) for _, y in series)
    ymax = max(float(np.max(y)) for _, y in series)
    if ymax - ymin <= 1e-12 * max(1.0, abs(ymax)):
        pad = 0.1 * abs(ymax) if ymax != 0 else 1.0
        ymin, ymax = ymin - pad, ymax + pad
    t0, t1 = float(t[0]), float(t[-1])
    if t1 <= t0:
        t1 = t0 + 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(tv):
        return LEFT + (tv - t0) / (t1 - t0) * pw

    def py(yv):
        return TOP + (ymax - yv) / (ymax - ymin) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{LEFT}" y="18" font-size="13">{signal} ({trace.kind})</text>']
    for tv in nice_ticks(ymin, ymax):
        y = py(tv)
        out.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{LEFT + pw}" y2="{y:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{_fmt_tick(tv)}</text>')
    for tv in nice_ticks(t0, t1):
        x = px(tv)
        out.append(f'<line x1="{x:.2f}" y1="{TOP}" x2="{x:.2f}" y2="{TOP + ph}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 16}" text-anchor="middle">{_fmt_tick(tv)}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle">t [s]</text>')
    for i, (name, y) in enumerate(series):
        td, yd = _decimate(t, np.asarray(y, dtype=float))
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(td, yd))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        if len(series) > 1:
            out.append(f'<text x="{LEFT + pw - 40}" y="{TOP + 14 + 14 * i}" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
