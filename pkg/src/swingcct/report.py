"""Report emission: sweep CSV, dual-axis trend plot, branch diagram (SVG)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .equilibria import Branch
from .sweep import SweepRow

SWEEP_HEADER = "param,tau,tau_H,tau_A,dE,E_c,admissible,verdicts"
BRANCH_HEADER = "param,delta_norm,type_index,E_pot,fold"

# series colors: true CCT green, energy CCT blue, analytic CCT red, margin black
_TREND_STYLE = (
    ("tau", "#2ca02c", "tau"),
    ("tau_H", "#1f77b4", "tau_H"),
    ("tau_A", "#d62728", "tau_A"),
)
_TYPE_COLORS = {0: "#1f77b4", 1: "#d62728", 2: "#2ca02c"}


def _cell(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> Path:
    path = Path(path)
    lines = [SWEEP_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    repr(float(r.param)),
                    _cell(r.tau),
                    _cell(r.tau_H),
                    _cell(r.tau_A),
                    _cell(r.dE),
                    _cell(r.E_c),
                    "true" if r.admissible else "false",
                    r.verdicts,
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    """Parse a sweep CSV back into rows (closest-UEP hook is not serialized)."""
    text = Path(path).read_text().splitlines()
    if not text or text[0] != SWEEP_HEADER:
        raise ValueError(f"{path}: not a sweep CSV (bad header)")

    def num(s: str) -> float | None:
        return None if s == "" else float(s)

    rows = []
    for line in text[1:]:
        if not line:
            continue
        param, tau, tau_h, tau_a, de, ec, adm, verdicts = line.split(",", 7)
        rows.append(
            SweepRow(
                param=float(param),
                tau=num(tau),
                tau_H=num(tau_h),
                tau_A=num(tau_a),
                dE=num(de),
                E_c=num(ec),
                admissible=adm == "true",
                verdicts=verdicts,
            )
        )
    return rows


def write_branch_csv(branches: Sequence[Branch], path: str | Path) -> Path:
    path = Path(path)
    lines = [BRANCH_HEADER]
    for br in branches:
        fold_params = {min(br.points, key=lambda q: abs(q[0] - f))[0] for f in br.folds}
        for p, pt in br.points:
            norm = float(np.linalg.norm(pt.delta))
            lines.append(
                ",".join(
                    [
                        repr(float(p)),
                        repr(norm),
                        str(pt.type_index),
                        repr(float(pt.energy)),
                        "1" if p in fold_params else "0",
                    ]
                )
            )
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# Minimal SVG line plotting (self-contained, no plotting dependency)
# ---------------------------------------------------------------------------

_W, _H = 760, 480
_ML, _MR, _MT, _MB = 70, 70, 36, 52


class _Frame:
    """Maps (x, y-left/right) data coordinates onto the SVG pixel frame."""

    def __init__(self, x_range, y_range, y2_range=None):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.y2 = y2_range

    def px(self, x: float) -> float:
        span = self.x1 - self.x0 or 1.0
        return _ML + (x - self.x0) / span * (_W - _ML - _MR)

    def py(self, y: float, right: bool = False) -> float:
        lo, hi = (self.y2 if right else (self.y0, self.y1))
        span = hi - lo or 1.0
        return _H - _MB - (y - lo) / span * (_H - _MT - _MB)


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min((m for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10) * mag
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step / 2, step)]


def _polyline(points: list[tuple[float, float]], color: str, width: float = 1.6, dash: str = "") -> str:
    if len(points) < 2:
        return ""
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash_attr} points="{pts}"/>'
    )


def _text(x: float, y: float, s: str, size: int = 12, anchor: str = "middle", color: str = "#333") -> str:
    return (
        f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" font-family="sans-serif" '
        f'text-anchor="{anchor}" fill="{color}">{s}</text>'
    )


def _axes(frame: _Frame, x_label: str, y_label: str, y2_label: str | None) -> list[str]:
    parts = [
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        'fill="none" stroke="#888" stroke-width="1"/>'
    ]
    for tx in _ticks(frame.x0, frame.x1):
        px = frame.px(tx)
        parts.append(_polyline([(px, _H - _MB), (px, _H - _MB + 5)], "#888", 1.0))
        parts.append(_text(px, _H - _MB + 18, f"{tx:g}"))
    for ty in _ticks(frame.y0, frame.y1):
        py = frame.py(ty)
        parts.append(_polyline([(_ML - 5, py), (_ML, py)], "#888", 1.0))
        parts.append(_text(_ML - 8, py + 4, f"{ty:g}", anchor="end"))
    if frame.y2 is not None:
        for ty in _ticks(*frame.y2):
            py = frame.py(ty, right=True)
            parts.append(_polyline([(_W - _MR, py), (_W - _MR + 5, py)], "#888", 1.0))
            parts.append(_text(_W - _MR + 8, py + 4, f"{ty:g}", anchor="start"))
    parts.append(_text((_ML + _W - _MR) / 2, _H - 14, x_label))
    parts.append(
        f'<text x="16" y="{(_MT+_H-_MB)/2:.1f}" font-size="12" font-family="sans-serif" '
        f'text-anchor="middle" fill="#333" transform="rotate(-90 16 {(_MT+_H-_MB)/2:.1f})">{y_label}</text>'
    )
    if y2_label:
        parts.append(
            f'<text x="{_W-16}" y="{(_MT+_H-_MB)/2:.1f}" font-size="12" font-family="sans-serif" '
            f'text-anchor="middle" fill="#333" transform="rotate(90 {_W-16} {(_MT+_H-_MB)/2:.1f})">{y2_label}</text>'
        )
    return parts


def _svg(parts: list[str]) -> str:
    body = "\n".join(p for p in parts if p)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n<rect width="100%" height="100%" fill="white"/>\n'
        f"{body}\n</svg>\n"
    )


def _admissible_runs(rows: Sequence[SweepRow], attr: str) -> list[list[tuple[float, float]]]:
    runs: list[list[tuple[float, float]]] = []
    current: list[tuple[float, float]] = []
    for r in rows:
        v = getattr(r, attr) if r.admissible else None
        if v is None:
            if current:
                runs.append(current)
                current = []
        else:
            current.append((r.param, v))
    if current:
        runs.append(current)
    return runs


def trend_svg(rows: Sequence[SweepRow], path: str | Path, x_label: str = "parameter") -> Path:
    """Dual-axis trend plot: clearing times on the left axis, margin right."""
    path = Path(path)
    time_vals = [
        v for attr, _c, _l in _TREND_STYLE for _p, v in sum(_admissible_runs(rows, attr), [])
    ]
    de_vals = [v for _p, v in sum(_admissible_runs(rows, "dE"), [])]
    params = [r.param for r in rows]
    if not params:
        raise ValueError("empty sweep table")
    y_hi = max(time_vals) * 1.08 if time_vals else 1.0
    y2_hi = max(de_vals) * 1.08 if de_vals else 1.0
    frame = _Frame((min(params), max(params)), (0.0, y_hi), (0.0, y2_hi))

    parts = _axes(frame, x_label, "clearing time [s]", "energy margin [p.u.]")
    for attr, color, _label in _TREND_STYLE:
        for run in _admissible_runs(rows, attr):
            parts.append(_polyline([(frame.px(p), frame.py(v)) for p, v in run], color))
    for run in _admissible_runs(rows, "dE"):
        parts.append(
            _polyline([(frame.px(p), frame.py(v, right=True)) for p, v in run], "#222", 1.6, dash="5,3")
        )
    legend_y = _MT + 14
    for i, (attr, color, label) in enumerate(list(_TREND_STYLE) + [("dE", "#222", "dE (right)")]):
        parts.append(_polyline([(_ML + 10, legend_y + 16 * i), (_ML + 34, legend_y + 16 * i)], color, 2.0))
        parts.append(_text(_ML + 40, legend_y + 4 + 16 * i, label, anchor="start"))
    path.write_text(_svg(parts))
    return path


def branch_svg(branches: Sequence[Branch], path: str | Path, x_label: str = "parameter") -> Path:
    """Branch diagram: |delta| against the parameter, stability color-coded.

    The closest UEP (lowest-energy type-1 point at each parameter) is drawn
    with a thick overlay; folds are marked with dotted vertical lines.
    """
    path = Path(path)
    all_points = [(p, pt) for br in branches for p, pt in br.points]
    if not all_points:
        raise ValueError("no branch points to plot")
    params = [p for p, _ in all_points]
    norms = [float(np.linalg.norm(pt.delta)) for _, pt in all_points]
    frame = _Frame((min(params), max(params)), (0.0, max(norms) * 1.08))
    parts = _axes(frame, x_label, "|delta| [rad]", None)

    # branch curves, split into stability runs
    for br in branches:
        run: list[tuple[float, float]] = []
        run_type: int | None = None
        for p, pt in br.points:
            if run_type is None or pt.type_index == run_type:
                run_type = pt.type_index
            else:
                parts.append(_polyline(run, _TYPE_COLORS.get(run_type, "#777")))
                run = run[-1:]
                run_type = pt.type_index
            run.append((frame.px(p), frame.py(float(np.linalg.norm(pt.delta)))))
        parts.append(_polyline(run, _TYPE_COLORS.get(run_type, "#777")))

    # thick overlay on the closest UEP
    type1 = sorted(
        ((p, pt) for p, pt in all_points if pt.type_index == 1), key=lambda q: q[0]
    )
    if type1:
        ps = np.array([p for p, _ in type1])
        es = np.array([pt.energy for _, pt in type1])
        ns = np.array([float(np.linalg.norm(pt.delta)) for _, pt in type1])
        bucket = max((max(params) - min(params)) / 200.0, 1e-9)
        overlay: list[tuple[float, float]] = []
        for i in range(len(type1)):
            near = np.abs(ps - ps[i]) <= bucket
            if es[i] <= es[near].min() + 1e-12:
                overlay.append((frame.px(ps[i]), frame.py(ns[i])))
            elif len(overlay) >= 2:
                parts.append(_polyline(overlay, "#d62728", 4.0))
                overlay = []
        if len(overlay) >= 2:
            parts.append(_polyline(overlay, "#d62728", 4.0))

    for br in branches:
        for f in br.folds:
            parts.append(
                _polyline([(frame.px(f), _MT), (frame.px(f), _H - _MB)], "#999", 1.0, dash="3,3")
            )
    for i, (t, color) in enumerate(sorted(_TYPE_COLORS.items())):
        parts.append(_polyline([(_ML + 10, _MT + 14 + 16 * i), (_ML + 34, _MT + 14 + 16 * i)], color, 2.0))
        parts.append(_text(_ML + 40, _MT + 18 + 16 * i, f"type-{t}", anchor="start"))
    path.write_text(_svg(parts))
    return path


def emit_reports(
    rows: Sequence[SweepRow],
    branches: Sequence[Branch] | None,
    out_dir: str | Path,
    x_label: str = "parameter",
    outputs: Sequence[str] = ("csv", "svg"),
) -> dict[str, Path]:
    """Write the requested sweep/branch outputs into `out_dir`."""
    if not rows and not branches:
        raise ValueError("nothing to report")
    unknown = set(outputs) - {"csv", "svg"}
    if unknown:
        raise ValueError(f"unknown output kinds: {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if rows:
        if "csv" in outputs:
            written["sweep_csv"] = write_sweep_csv(rows, out / "sweep.csv")
        if "svg" in outputs:
            written["trend_svg"] = trend_svg(rows, out / "trend.svg", x_label)
    if branches:
        if "csv" in outputs:
            written["branch_csv"] = write_branch_csv(branches, out / "branches.csv")
        if "svg" in outputs:
            written["branch_svg"] = branch_svg(branches, out / "branches.svg", x_label)
    return written
