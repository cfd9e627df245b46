"""Swing-equation dynamics: exact and dissipation-frozen fields, integration.

Machine convention: all vectors over machines have length n (machine order =
generator bus order).  One machine may be marked infinite; it is excluded
from the state vector and its angle is pinned to 0, which serves as the
reference for the other rotor angles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InadmissibleScenario, IntegrationError
from .netmodel import ReducedNetwork

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GeneratorParams:
    """Per-machine constants of the swing model.

    M holds the lumped inertia 2*H/omega0 for each machine (np.inf for the
    infinite machine); Pm the mechanical input powers; E the EMF magnitudes.
    """

    M: np.ndarray
    Pm: np.ndarray
    E: np.ndarray
    infinite_index: int | None = None

    def __post_init__(self) -> None:
        M = np.asarray(self.M, dtype=float)
        Pm = np.asarray(self.Pm, dtype=float)
        E = np.asarray(self.E, dtype=float)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Pm", Pm)
        object.__setattr__(self, "E", E)
        if not (M.shape == Pm.shape == E.shape) or M.ndim != 1:
            raise ValueError("M, Pm, E must be equal-length vectors")
        if self.infinite_index is not None and not 0 <= self.infinite_index < M.size:
            raise ValueError("infinite_index out of range")
        act = self.active
        if np.any(M[act] <= 0.0) or not np.all(np.isfinite(M[act])):
            raise ValueError("modeled machines need positive finite inertia")

    @property
    def n(self) -> int:
        return self.M.size

    @property
    def active(self) -> np.ndarray:
        """Indices of the modeled (non-infinite) machines."""
        idx = np.arange(self.n)
        if self.infinite_index is None:
            return idx
        return idx[idx != self.infinite_index]

    @property
    def n_active(self) -> int:
        return self.n - (0 if self.infinite_index is None else 1)

    def full_angles(self, delta: np.ndarray) -> np.ndarray:
        """Embed active-machine angles into a length-n vector (infinite at 0)."""
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (self.n_active,):
            raise ValueError(f"expected {self.n_active} angles, got {delta.shape}")
        if self.infinite_index is None:
            return delta.copy()
        full = np.empty(self.n)
        full[self.active] = delta
        full[self.infinite_index] = 0.0
        return full


def wrap_angle(x: np.ndarray | float) -> np.ndarray | float:
    """Wrap to (-pi, pi]."""
    w = np.mod(np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.isscalar(x) else w


@dataclass(frozen=True)
class SystemState:
    """Rotor angles and speed deviations of the modeled machines."""

    delta: np.ndarray
    omega: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.delta, dtype=float)
        w = np.asarray(self.omega, dtype=float)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "omega", w)
        if d.shape != w.shape or d.ndim != 1:
            raise ValueError("delta and omega must be equal-length vectors")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite state")

    @property
    def m(self) -> int:
        return self.delta.size

    def packed(self) -> np.ndarray:
        return np.concatenate([self.delta, self.omega])

    @classmethod
    def from_packed(cls, y: np.ndarray) -> "SystemState":
        y = np.asarray(y, dtype=float)
        m = y.size // 2
        return cls(delta=y[:m], omega=y[m:])

    def wrapped(self) -> "SystemState":
        """Angles wrapped to (-pi, pi] for reporting."""
        return SystemState(delta=wrap_angle(self.delta), omega=self.omega.copy())


def conductance_power(red: ReducedNetwork, delta_full: np.ndarray) -> np.ndarray:
    """Power drawn by the conductive part of the network at each machine.

    P_i = E_i^2 G_ii + sum_k E_i E_k G_ik cos(d_i - d_k).
    """
    d = np.subtract.outer(delta_full, delta_full)
    PG = np.outer(red.E, red.E) * red.G
    return (PG * np.cos(d)).sum(axis=1)


def electrical_power(red: ReducedNetwork, delta_full: np.ndarray) -> np.ndarray:
    """Total electric power leaving each machine at the given angles."""
    d = np.subtract.outer(delta_full, delta_full)
    return conductance_power(red, delta_full) + (red.Pbar * np.sin(d)).sum(axis=1)


def swing_field(red: ReducedNetwork, gp: GeneratorParams) -> Field:
    """Exact right-hand side over the packed state [delta; omega]."""
    act = gp.active
    m = act.size
    n = gp.n
    PG = np.outer(red.E, red.E) * red.G
    Pbar = red.Pbar
    Pm_act = gp.Pm[act]
    Minv = 1.0 / gp.M[act]
    template = np.zeros(n)

    def field(y: np.ndarray) -> np.ndarray:
        full = template.copy()
        full[act] = y[:m]
        d = np.subtract.outer(full, full)
        Pe = (PG * np.cos(d) + Pbar * np.sin(d)).sum(axis=1)
        out = np.empty(2 * m)
        out[:m] = y[m:]
        out[m:] = (Pm_act - Pe[act]) * Minv
        return out

    return field


def anchored_field(red: ReducedNetwork, gp: GeneratorParams, anchor: np.ndarray) -> Field:
    """Conservative field: conductance power frozen at the anchor angles."""
    act = gp.active
    m = act.size
    n = gp.n
    Pa = conductance_power(red, gp.full_angles(np.asarray(anchor, dtype=float)))
    Pbar = red.Pbar
    drive = gp.Pm[act] - Pa[act]
    Minv = 1.0 / gp.M[act]
    template = np.zeros(n)

    def field(y: np.ndarray) -> np.ndarray:
        full = template.copy()
        full[act] = y[:m]
        d = np.subtract.outer(full, full)
        s = (Pbar * np.sin(d)).sum(axis=1)
        out = np.empty(2 * m)
        out[:m] = y[m:]
        out[m:] = (drive - s[act]) * Minv
        return out

    return field


def rhs(red: ReducedNetwork, gp: GeneratorParams, x: SystemState) -> np.ndarray:
    """Packed derivative [ddelta/dt; domega/dt] of the exact swing equations."""
    return swing_field(red, gp)(x.packed())


def rhs_hamiltonian(
    red: ReducedNetwork, gp: GeneratorParams, anchor: np.ndarray, x: SystemState
) -> np.ndarray:
    """Packed derivative of the dissipation-frozen (conservative) field."""
    return anchored_field(red, gp, anchor)(x.packed())


@dataclass(frozen=True)
class Trajectory:
    """Accepted integrator samples plus a dense interpolant between them."""

    t: np.ndarray
    states: np.ndarray  # shape (len(t), 2m)
    _dense: object

    def __post_init__(self) -> None:
        if self.t[0] != 0.0 or np.any(np.diff(self.t) <= 0.0):
            raise ValueError("trajectory times must start at 0 and increase strictly")

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def sample(self, ts: np.ndarray) -> np.ndarray:
        """Dense-output states at the requested times, shape (len(ts), 2m)."""
        ts = np.asarray(ts, dtype=float)
        return np.asarray(self._dense(ts)).T

    def state(self, t: float) -> SystemState:
        return SystemState.from_packed(np.asarray(self._dense(t)))


def integrate(
    field: Field,
    x0: SystemState | np.ndarray,
    t_end: float,
    tol: float = 1e-8,
    atol: float = 1e-10,
) -> Trajectory:
    """Adaptive RK5(4) integration of an autonomous field with dense output."""
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    y0 = x0.packed() if isinstance(x0, SystemState) else np.asarray(x0, dtype=float)
    sol = solve_ivp(
        lambda _t, y: field(y),
        (0.0, t_end),
        y0,
        method="RK45",
        rtol=tol,
        atol=atol,
        dense_output=True,
    )
    if not sol.success:
        t_bad = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integration failed at t={t_bad:.6g}: {sol.message}", time=t_bad)
    return Trajectory(t=sol.t, states=sol.y.T, _dense=sol.sol)


def dispatch_from_angles(
    red_pre: ReducedNetwork,
    delta_pre: np.ndarray,
    infinite_index: int | None = None,
) -> np.ndarray:
    """Mechanical powers that make (delta_pre, 0) stationary pre-fault.

    delta_pre covers the modeled machines; the infinite machine sits at 0.
    Returns the full-length Pm vector (the infinite machine's entry is its
    electrical output, kept for bookkeeping only).  Modeled machines must
    come out as generators (Pm > 0), otherwise the scenario is rejected.
    """
    delta_pre = np.asarray(delta_pre, dtype=float)
    n = red_pre.n
    if infinite_index is None:
        full = delta_pre.copy()
        act = np.arange(n)
    else:
        act = np.array([i for i in range(n) if i != infinite_index])
        full = np.zeros(n)
        full[act] = delta_pre
    pairwise = np.abs(np.subtract.outer(full, full))
    if np.any(pairwise >= np.pi / 2.0):
        raise ValueError("pre-fault angles must satisfy |d_i - d_k| < pi/2 pairwise")
    Pm = electrical_power(red_pre, full)
    if np.any(Pm[act] <= 0.0):
        bad = [int(i) for i in act[Pm[act] <= 0.0]]
        raise InadmissibleScenario(
            f"dispatch gives non-positive mechanical power for machines {bad}",
            code="pm-nonpositive",
        )
    return Pm
