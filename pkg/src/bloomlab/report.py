"""Deterministic CSV tables and a minimal static SVG line-plot writer.

Every CSV row carries the config hash; floats are written with repr so a
rerun under the same seed is byte-identical.  Plots regenerate from the CSV
columns alone and depend on no plotting package.
"""

from __future__ import annotations

import math
from pathlib import Path

__all__ = ["write_csv", "read_csv", "write_svg_lines"]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, columns: list[str], rows: list[tuple], config_hash: str, meta: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    cols, rows = [], []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not cols:
                cols = line.split(",")
            else:
                rows.append(line.split(","))
    return cols, rows


def write_svg_lines(
    path,
    series: list[tuple[list[float], list[float], str]],
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    logy: bool = False,
) -> None:
    """Polyline plot of (xs, ys, label) series on a 640x480 canvas."""
    w, hgt = 640, 480
    ml, mr, mt, mb = 70, 20, 40, 50

    def tx(vals, log):
        return [math.log10(v) for v in vals] if log else list(vals)

    pts = [(tx(xs, logx), tx(ys, logy), lab) for xs, ys, lab in series if xs]
    if not pts:
        Path(path).write_text("<svg xmlns='http://www.w3.org/2000/svg'/>")
        return
    all_x = [v for xs, _, _ in pts for v in xs]
    all_y = [v for _, ys, _ in pts for v in ys]
    x0, x1 = min(all_x), max(all_x)
    y0, y1 = min(all_y), max(all_y)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * (w - ml - mr)

    def sy(v):
        return hgt - mb - (v - y0) / (y1 - y0) * (hgt - mt - mb)

    colors = ["#1f6fb2", "#c1403d", "#3f8f4a", "#8451a1", "#b0762c"]
    out = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{w}' height='{hgt}' font-family='monospace' font-size='12'>",
        f"<rect width='{w}' height='{hgt}' fill='white'/>",
        f"<text x='{w/2:.1f}' y='20' text-anchor='middle'>{title}</text>",
        f"<line x1='{ml}' y1='{hgt-mb}' x2='{w-mr}' y2='{hgt-mb}' stroke='black'/>",
        f"<line x1='{ml}' y1='{mt}' x2='{ml}' y2='{hgt-mb}' stroke='black'/>",
        f"<text x='{w/2:.1f}' y='{hgt-10}' text-anchor='middle'>{xlabel}</text>",
        f"<text x='15' y='{hgt/2:.1f}' text-anchor='middle' transform='rotate(-90 15 {hgt/2:.1f})'>{ylabel}</text>",
    ]
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(
            f"<text x='{sx(xv):.1f}' y='{hgt-mb+16}' text-anchor='middle'>{xv:.3g}</text>"
        )
        out.append(f"<text x='{ml-6}' y='{sy(yv)+4:.1f}' text-anchor='end'>{yv:.3g}</text>")
    for i, (xs, ys, lab) in enumerate(pts):
        color = colors[i % len(colors)]
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        out.append(f"<polyline points='{coords}' fill='none' stroke='{color}' stroke-width='1.5'/>")
        out.append(f"<text x='{w-mr-5}' y='{mt+15*(i+1)}' text-anchor='end' fill='{color}'>{lab}</text>")
    out.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(out))
