"""Minimal self-contained SVG charts (no plotting dependency)."""

from __future__ import annotations

from xml.sax.saxutils import escape

W, H = 480, 340
LEFT, RIGHT, TOP, BOTTOM = 64, 16, 36, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / n
    return [lo + i * step for i in range(n + 1)]


def _frame(title: str, xlabel: str, ylabel: str, xr, yr) -> tuple[list[str], callable, callable]:
    x0, x1 = xr
    y0, y1 = yr
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{LEFT + pw / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{TOP + ph / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {TOP + ph / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        parts.append(f'<line x1="{sx(t):.1f}" y1="{TOP + ph}" x2="{sx(t):.1f}" y2="{TOP + ph + 4}" stroke="black"/>')
        parts.append(f'<text x="{sx(t):.1f}" y="{TOP + ph + 16}" text-anchor="middle" font-size="10">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        parts.append(f'<line x1="{LEFT - 4}" y1="{sy(t):.1f}" x2="{LEFT}" y2="{sy(t):.1f}" stroke="black"/>')
        parts.append(f'<text x="{LEFT - 6}" y="{sy(t) + 3:.1f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    return parts, sx, sy


def _legend(parts: list[str], names) -> None:
    for n, name in enumerate(names):
        y = TOP + 12 + 14 * n
        c = COLORS[n % len(COLORS)]
        parts.append(f'<line x1="{W - RIGHT - 90}" y1="{y}" x2="{W - RIGHT - 72}" y2="{y}" stroke="{c}" stroke-width="2"/>')
        parts.append(f'<text x="{W - RIGHT - 68}" y="{y + 4}" font-size="11">{escape(str(name))}</text>')


def _empty(title: str) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">'
        f'<text x="{W / 2}" y="{H / 2}" text-anchor="middle">{escape(title)}: no data</text></svg>'
    )


def step_chart(series: dict, xlabel: str, ylabel: str, title: str) -> str:
    """Empirical CDFs: ``series`` maps name -> [(value, probability), ...]."""
    pts = [p for s in series.values() for p in s]
    if not pts:
        return _empty(title)
    xs = [p[0] for p in pts]
    pad = 0.05 * (max(xs) - min(xs) or 1.0)
    parts, sx, sy = _frame(title, xlabel, ylabel, (min(xs) - pad, max(xs) + pad), (0.0, 1.0))
    for n, (name, s) in enumerate(series.items()):
        if not s:
            continue
        d = f"M{sx(min(xs) - pad):.1f},{sy(0):.1f}"
        prev = 0.0
        for v, p in s:
            d += f" L{sx(v):.1f},{sy(prev):.1f} L{sx(v):.1f},{sy(p):.1f}"
            prev = p
        d += f" L{sx(max(xs) + pad):.1f},{sy(prev):.1f}"
        parts.append(f'<path d="{d}" fill="none" stroke="{COLORS[n % len(COLORS)]}" stroke-width="2"/>')
    _legend(parts, series.keys())
    parts.append("</svg>")
    return "\n".join(parts)


def line_chart(series: dict, xlabel: str, ylabel: str, title: str) -> str:
    pts = [p for s in series.values() for p in s]
    if not pts:
        return _empty(title)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    parts, sx, sy = _frame(title, xlabel, ylabel, (min(xs), max(xs)), (0.0, max(ys) * 1.1))
    for n, (name, s) in enumerate(series.items()):
        s = sorted(s)
        c = COLORS[n % len(COLORS)]
        d = " ".join(("M" if i == 0 else "L") + f"{sx(x):.1f},{sy(y):.1f}" for i, (x, y) in enumerate(s))
        parts.append(f'<path d="{d}" fill="none" stroke="{c}" stroke-width="2"/>')
        for x, y in s:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{c}"/>')
    _legend(parts, series.keys())
    parts.append("</svg>")
    return "\n".join(parts)


def stacked_bars(groups: dict, ylabel: str, title: str) -> str:
    """``groups`` maps bar name -> {component: value}."""
    if not groups:
        return _empty(title)
    totals = [sum(v.values()) for v in groups.values()]
    parts, sx, sy = _frame(title, "", ylabel, (0.0, float(len(groups))), (0.0, max(totals) * 1.15 or 1.0))
    comps = list(next(iter(groups.values())).keys())
    for n, (name, vals) in enumerate(groups.items()):
        base = 0.0
        for j, comp in enumerate(comps):
            v = vals[comp]
            y_top, y_bot = sy(base + v), sy(base)
            parts.append(
                f'<rect x="{sx(n + 0.2):.1f}" y="{y_top:.1f}" width="{sx(n + 0.8) - sx(n + 0.2):.1f}" '
                f'height="{max(y_bot - y_top, 0):.1f}" fill="{COLORS[j % len(COLORS)]}"/>'
            )
            base += v
        parts.append(f'<text x="{sx(n + 0.5):.1f}" y="{TOP - 4}" text-anchor="middle" font-size="11">{escape(name)}</text>')
    _legend(parts, comps)
    parts.append("</svg>")
    return "\n".join(parts)


def write(path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
