"""Energy functions and the two energy-based clearing-time metrics.

The post-fault system is made conservative by freezing the conductance power
at the post-fault stable equilibrium; its Hamiltonian supplies the critical
level E_c (from the closest type-1 saddle) and the margin dE.  tau_H locates
the first crossing of E_c along the fault-on trajectory; tau_A solves the
closed-form quartic obtained from a constant-acceleration fault trajectory
and a quadratic expansion of the angle coupling terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleScenario
from .netmodel import ReducedNetwork
from .swing import (
    GeneratorParams,
    SystemState,
    Trajectory,
    anchored_field,
    conductance_power,
    electrical_power,
    integrate,
    swing_field,
)

#: verdict strings for metrics that do not produce a time
NO_REAL_ROOT = "no-real-root"
NO_CROSSING = "no-crossing"

_ALPHA_DEGENERATE = 1e-12


@dataclass(frozen=True)
class HamiltonianModel:
    """Conservative post-fault model anchored at the post-fault SEP."""

    red: ReducedNetwork
    gp: GeneratorParams
    Pa: np.ndarray        # frozen conductance power, full machine vector
    anchor: np.ndarray    # SEP angles of the modeled machines

    @classmethod
    def at_anchor(cls, red: ReducedNetwork, gp: GeneratorParams, anchor: np.ndarray) -> "HamiltonianModel":
        anchor = np.asarray(anchor, dtype=float)
        Pa = conductance_power(red, gp.full_angles(anchor))
        return cls(red=red, gp=gp, Pa=Pa, anchor=anchor)


@dataclass(frozen=True)
class FaultOnHamiltonianModel:
    """Fault-on network with conductance power frozen at the pre-fault SEP."""

    red_on: ReducedNetwork
    Pa_on: np.ndarray
    anchor: np.ndarray    # pre-fault SEP angles of the modeled machines

    @classmethod
    def at_prefault(cls, red_on: ReducedNetwork, gp: GeneratorParams, delta_pre: np.ndarray) -> "FaultOnHamiltonianModel":
        delta_pre = np.asarray(delta_pre, dtype=float)
        Pa_on = conductance_power(red_on, gp.full_angles(delta_pre))
        return cls(red_on=red_on, Pa_on=Pa_on, anchor=delta_pre)


def kinetic(gp: GeneratorParams, omega: np.ndarray) -> float:
    """Sum of (1/2) M_i w_i^2 over the modeled machines."""
    omega = np.asarray(omega, dtype=float)
    return float(0.5 * np.sum(gp.M[gp.active] * omega**2))


def potential(hm: HamiltonianModel, delta: np.ndarray) -> float:
    """Potential energy of the conservative post-fault system."""
    gp = hm.gp
    act = gp.active
    full = gp.full_angles(np.asarray(delta, dtype=float))
    drive = gp.Pm[act] - hm.Pa[act]
    d = np.subtract.outer(full, full)
    pair = np.triu(hm.red.Pbar * np.cos(d), k=1).sum()
    return float(-(drive @ full[act]) - pair)


def potential_gradient(hm: HamiltonianModel, delta: np.ndarray) -> np.ndarray:
    """Analytic gradient of `potential` with respect to the modeled angles."""
    gp = hm.gp
    act = gp.active
    full = gp.full_angles(np.asarray(delta, dtype=float))
    d = np.subtract.outer(full, full)
    s = (hm.red.Pbar * np.sin(d)).sum(axis=1)
    return -(gp.Pm[act] - hm.Pa[act]) + s[act]


def hamiltonian(hm: HamiltonianModel, x: SystemState) -> float:
    """Total energy: kinetic plus potential."""
    return kinetic(hm.gp, x.omega) + potential(hm, x.delta)


def hamiltonian_batch(hm: HamiltonianModel, states: np.ndarray) -> np.ndarray:
    """Total energy for a (k, 2m) stack of packed states."""
    gp = hm.gp
    act = gp.active
    m = act.size
    states = np.atleast_2d(np.asarray(states, dtype=float))
    delta, omega = states[:, :m], states[:, m:]
    kin = 0.5 * (gp.M[act][None, :] * omega**2).sum(axis=1)
    full = np.zeros((states.shape[0], gp.n))
    full[:, act] = delta
    d = full[:, :, None] - full[:, None, :]
    pair = (np.triu(hm.red.Pbar, k=1)[None, :, :] * np.cos(d)).sum(axis=(1, 2))
    drive = gp.Pm[act] - hm.Pa[act]
    return kin - delta @ drive - pair


def energy_margin(E_c: float, hm: HamiltonianModel, x_pre: SystemState) -> float:
    """Energy headroom E_c - H(x_pre) of the pre-fault operating point."""
    return float(E_c - hamiltonian(hm, x_pre))


def initial_accelerations(fom: FaultOnHamiltonianModel, gp: GeneratorParams) -> np.ndarray:
    """Rotor accelerations at fault inception, full machine vector.

    u_i = (Pm_i - Pe_on_i(delta_pre)) / M_i for modeled machines; the
    infinite machine contributes u = 0.
    """
    full = gp.full_angles(fom.anchor)
    Pe = electrical_power(fom.red_on, full)
    u = np.zeros(gp.n)
    act = gp.active
    u[act] = (gp.Pm[act] - Pe[act]) / gp.M[act]
    return u


@dataclass(frozen=True)
class QuarticCoefficients:
    """Coefficients of alpha t^4 + beta t^2 - gamma = 0 plus the accelerations."""

    alpha: float
    beta: float
    gamma: float
    u: np.ndarray
    u_ik: np.ndarray  # pairwise differences u_i - u_k

    def h_alt(self, t: np.ndarray | float) -> np.ndarray | float:
        """Polynomial energy surrogate relative to the pre-fault energy."""
        t2 = np.asarray(t, dtype=float) ** 2
        return self.alpha * t2**2 + self.beta * t2


def quartic_coefficients(
    hm: HamiltonianModel,
    fom: FaultOnHamiltonianModel,
    gp: GeneratorParams,
    x_pre: SystemState,
    E_c: float,
) -> QuarticCoefficients:
    """Assemble the quartic coefficients from the two reduced networks."""
    u = initial_accelerations(fom, gp)
    du = np.subtract.outer(u, u)
    full_pre = gp.full_angles(x_pre.delta)
    dpre = np.subtract.outer(full_pre, full_pre)
    dPbar = hm.red.Pbar - fom.red_on.Pbar

    alpha = float(np.triu(dPbar * du**2, k=1).sum() / 8.0)
    beta = float(
        0.5 * np.triu(dPbar * du * dpre, k=1).sum()
        + 0.5 * float((hm.Pa - fom.Pa_on) @ u)
    )
    gamma = energy_margin(E_c, hm, x_pre)
    return QuarticCoefficients(alpha=alpha, beta=beta, gamma=gamma, u=u, u_ik=du)


def tau_A(qc: QuarticCoefficients) -> float | str:
    """Smallest positive real root of the quartic; a verdict if none exists."""
    if qc.gamma <= 0.0:
        raise InadmissibleScenario(
            f"energy margin is not positive (gamma={qc.gamma:.6g})", code="negative-margin"
        )
    a, b, g = qc.alpha, qc.beta, qc.gamma
    if abs(a) < _ALPHA_DEGENERATE:
        if b <= 0.0:
            return NO_REAL_ROOT
        return float(np.sqrt(g / b))
    disc = b * b + 4.0 * a * g
    if disc < 0.0:
        return NO_REAL_ROOT
    # roots of a y^2 + b y - g = 0 in y = t^2, cancellation-free
    q = -0.5 * (b + np.copysign(np.sqrt(disc), b if b != 0.0 else 1.0))
    roots = [q / a, -g / q] if q != 0.0 else [0.0]
    positive = [y for y in roots if y > 0.0]
    if not positive:
        return NO_REAL_ROOT
    return float(np.sqrt(min(positive)))


def fault_on_trajectory(
    fom: FaultOnHamiltonianModel,
    gp: GeneratorParams,
    x_pre: SystemState,
    horizon: float,
    tol: float = 1e-8,
    atol: float = 1e-10,
    hamiltonian_fault_on: bool = False,
) -> Trajectory:
    """Integrate the fault-on dynamics from the pre-fault operating point.

    By default the exact fault-on field is used; set hamiltonian_fault_on to
    integrate the dissipation-frozen variant instead.
    """
    if hamiltonian_fault_on:
        field = anchored_field(fom.red_on, gp, fom.anchor)
    else:
        field = swing_field(fom.red_on, gp)
    return integrate(field, x_pre, horizon, tol=tol, atol=atol)


def tau_H(
    fom: FaultOnHamiltonianModel,
    gp: GeneratorParams,
    x_pre: SystemState,
    hm: HamiltonianModel,
    E_c: float,
    horizon: float = 2.0,
    tol: float = 1e-8,
    atol: float = 1e-10,
    locate_tol: float = 1e-6,
    hamiltonian_fault_on: bool = False,
    trajectory: Trajectory | None = None,
) -> float | str:
    """First time the post-fault energy of the fault-on trajectory hits E_c.

    The crossing is bracketed on a fine sampling of the dense output and
    located by bisection to `locate_tol` seconds.  Returns NO_CROSSING if the
    level is never reached within the horizon.
    """
    gamma = energy_margin(E_c, hm, x_pre)
    if gamma < 0.0:
        raise InadmissibleScenario(
            f"energy margin is negative (dE={gamma:.6g})", code="negative-margin"
        )
    if gamma == 0.0:
        return 0.0

    traj = trajectory
    if traj is None or traj.t_end < horizon:
        traj = fault_on_trajectory(
            fom, gp, x_pre, horizon, tol=tol, atol=atol,
            hamiltonian_fault_on=hamiltonian_fault_on,
        )

    def excess(ts: np.ndarray) -> np.ndarray:
        return hamiltonian_batch(hm, traj.sample(ts)) - E_c

    ts = np.unique(np.concatenate([traj.t[traj.t <= horizon], np.arange(0.0, horizon, 1e-3), [horizon]]))
    g = excess(ts)
    above = np.nonzero(g >= 0.0)[0]
    if above.size == 0:
        return NO_CROSSING
    k = int(above[0])
    if k == 0:
        return 0.0
    lo, hi = float(ts[k - 1]), float(ts[k])
    while hi - lo > locate_tol:
        mid = 0.5 * (lo + hi)
        if excess(np.array([mid]))[0] >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
