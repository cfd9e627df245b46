"""Parametric sweep driver: one fault study per load-parameter value."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .equilibria import wrapped_distance
from .errors import ScenarioFormatError
from .faultstudy import FaultScenario, FaultStudyResult, run_fault_study

METRICS = ("tau", "tau_H", "tau_A", "dE")


def parse_param_path(sc: FaultScenario, param: str) -> tuple[str, str]:
    """Split '<bus>.G' / '<bus>.B' and validate against the scenario."""
    if "." not in param:
        raise ScenarioFormatError(f"param path {param!r}: expected '<bus>.G' or '<bus>.B'")
    bus, part = param.rsplit(".", 1)
    if part not in ("G", "B"):
        raise ScenarioFormatError(f"param path {param!r}: part must be 'G' or 'B'")
    if bus not in {b.id for b in sc.net.buses}:
        raise ScenarioFormatError(f"param path {param!r}: no bus {bus!r} in scenario")
    return bus, part


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: which load component to vary, over what grid."""

    scenario: FaultScenario
    param: str          # "<bus>.G" or "<bus>.B"
    lo: float
    hi: float
    step: float
    jobs: int = 1
    resolution: float = 1e-4
    horizon: float = 1.0
    window: float = 3.0
    tol: float = 1e-8
    grid_density: int = 40
    outputs: tuple[str, ...] = ("csv", "svg")

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ScenarioFormatError(f"range [{self.lo}, {self.hi}]: lo must be below hi")
        if self.step <= 0:
            raise ScenarioFormatError(f"step {self.step}: must be positive")
        parse_param_path(self.scenario, self.param)

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1e-12, self.step)


@dataclass(frozen=True)
class SweepRow:
    """One parameter point of a sweep (CSV-facing fields plus the UEP hook)."""

    param: float
    tau: float | None
    tau_H: float | None
    tau_A: float | None
    dE: float | None
    E_c: float | None
    admissible: bool
    verdicts: str                       # canonical "key=value;..." encoding
    closest: tuple[float, ...] | None = field(default=None, compare=False)


def _verdict_string(result: FaultStudyResult) -> str:
    parts = []
    for key in sorted(result.verdicts):
        parts.append(f"{key}={result.verdicts[key]}")
    return ";".join(parts)


def _row_from_result(value: float, result: FaultStudyResult) -> SweepRow:
    def num(x: float | str | None) -> float | None:
        return x if isinstance(x, float) else None

    closest = None
    if result.closest_uep is not None:
        closest = tuple(float(v) for v in result.closest_uep.delta)
    return SweepRow(
        param=float(value),
        tau=num(result.tau),
        tau_H=num(result.tau_H),
        tau_A=num(result.tau_A),
        dE=result.delta_E,
        E_c=result.E_c,
        admissible=result.admissible,
        verdicts=_verdict_string(result),
        closest=closest,
    )


def _eval_point(args: tuple) -> SweepRow:
    spec, value = args
    bus, part = parse_param_path(spec.scenario, spec.param)
    base = spec.scenario.net.shunt_loads.get(bus, 0j)
    Y = complex(value, base.imag) if part == "G" else complex(base.real, value)
    result = run_fault_study(
        spec.scenario.with_load(bus, Y),
        resolution=spec.resolution,
        horizon=spec.horizon,
        window=spec.window,
        tol=spec.tol,
        grid_density=spec.grid_density,
    )
    return _row_from_result(value, result)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Evaluate every grid point, ascending; rows keep inadmissible points.

    With jobs > 1 the points are farmed out to a process pool; assembly is
    order-preserving, so parallel and serial runs produce identical tables.
    """
    tasks = [(spec, float(v)) for v in spec.values]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            return list(pool.map(_eval_point, tasks))
    return [_eval_point(t) for t in tasks]


def find_optimum(rows: Sequence[SweepRow], metric: str) -> tuple[float, float]:
    """(parameter, value) of the admissible argmax; ties go to the smaller
    parameter (rows are scanned in ascending order)."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    best: tuple[float, float] | None = None
    for row in rows:
        if not row.admissible:
            continue
        value = getattr(row, metric)
        if value is None:
            continue
        if best is None or value > best[1]:
            best = (row.param, value)
    if best is None:
        raise ValueError(f"no admissible rows carry metric {metric!r}")
    return best


def detect_uep_switches(rows: Sequence[SweepRow], jump_tol: float = 0.5) -> list[float]:
    """Parameter values where the closest UEP jumps between branches.

    Reported as the midpoint of the first grid interval whose endpoints hold
    closest-UEP positions further apart than jump_tol (angles modulo 2*pi).
    """
    switches = []
    prev: SweepRow | None = None
    for row in rows:
        if not row.admissible or row.closest is None:
            prev = None
            continue
        if prev is not None and wrapped_distance(np.array(row.closest), np.array(prev.closest)) > jump_tol:
            switches.append(0.5 * (prev.param + row.param))
        prev = row
    return switches
