"""Three-regime fault study: true CCT, energy CCT, analytic CCT, margin."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from . import energy as en
from . import equilibria as eq
from . import netmodel as nm
from . import swing as sw
from .errors import EquilibriumError, InadmissibleScenario, IntegrationError

UNBOUNDED = "unbounded"

#: first-swing divergence threshold on pairwise angle excursions [rad]
DIVERGENCE_THRESHOLD = np.pi
#: pairs moving less than this never count as diverging-without-return [rad]
SMALL_SWING = 0.05


@dataclass(frozen=True)
class FaultScenario:
    """One fault case: network, fault location, clearing action, operating point."""

    net: nm.BusNetwork
    fault_bus: str
    clearing_branch: str
    prefault_angles: Mapping[str, float]  # generator bus id -> rotor angle [rad]
    name: str = ""

    @property
    def frequency(self) -> float:
        return self.net.frequency

    def with_load(self, bus_id: str, Y: complex) -> "FaultScenario":
        return replace(self, net=nm.set_load(self.net, bus_id, Y))


@dataclass(frozen=True)
class FaultStudyResult:
    """All stability metrics for one scenario; times carry verdict strings
    (or None) when a numeric value does not exist."""

    tau: float | str | None
    tau_H: float | str | None
    tau_A: float | str | None
    delta_E: float | None
    E_c: float | None
    closest_uep: eq.EquilibriumPoint | None
    admissible: bool
    verdicts: Mapping[str, str]


@dataclass(frozen=True)
class StudyContext:
    """Prepared pipeline shared by the metric computations."""

    sc: FaultScenario
    red_pre: nm.ReducedNetwork
    red_on: nm.ReducedNetwork
    red_post: nm.ReducedNetwork
    gp: sw.GeneratorParams
    x_pre: sw.SystemState
    sep: eq.EquilibriumPoint
    hm: en.HamiltonianModel
    fom: en.FaultOnHamiltonianModel
    crit: eq.CriticalEnergy
    delta_E: float


def regimes(sc: FaultScenario) -> tuple[nm.ReducedNetwork, nm.ReducedNetwork, nm.ReducedNetwork]:
    """Reduced admittance parameters for pre-fault, fault-on and post-fault."""
    pre = sc.net
    on = nm.apply_fault(pre, sc.fault_bus)
    post = nm.apply_clearing(pre, sc.clearing_branch)
    return (
        nm.reduce_to_generators(pre),
        nm.reduce_to_generators(on),
        nm.reduce_to_generators(post),
    )


def prefault_state(sc: FaultScenario) -> tuple[np.ndarray, int | None]:
    """Modeled-machine pre-fault angles and the infinite machine index."""
    gen_buses = sc.net.generator_buses
    inf_bus = sc.net.infinite_bus
    infinite_index = gen_buses.index(inf_bus) if inf_bus is not None else None
    delta = []
    for i, bus in enumerate(gen_buses):
        if i == infinite_index:
            continue
        if bus not in sc.prefault_angles:
            raise InadmissibleScenario(
                f"missing pre-fault angle for generator bus {bus!r}", code="bad-angles"
            )
        delta.append(float(sc.prefault_angles[bus]))
    return np.array(delta), infinite_index


def generator_params(sc: FaultScenario, red_pre: nm.ReducedNetwork) -> sw.GeneratorParams:
    """Machine constants plus the dispatched mechanical powers."""
    delta_pre, infinite_index = prefault_state(sc)
    omega0 = 2.0 * np.pi * sc.frequency
    gen_buses = sc.net.generator_buses
    M = np.array([2.0 * sc.net.generators[b].inertia / omega0 for b in gen_buses])
    if infinite_index is not None:
        M[infinite_index] = np.inf
    Pm = sw.dispatch_from_angles(red_pre, delta_pre, infinite_index)
    return sw.GeneratorParams(M=M, Pm=Pm, E=red_pre.E, infinite_index=infinite_index)


def build_context(sc: FaultScenario, grid_density: int = 40) -> StudyContext:
    """Run the full pipeline up to the critical energy.

    Raises InadmissibleScenario (with a reason code) when the scenario fails
    one of the admissibility constraints.
    """
    red_pre, red_on, red_post = regimes(sc)
    gp = generator_params(sc, red_pre)
    delta_pre, _ = prefault_state(sc)
    x_pre = sw.SystemState(delta=delta_pre, omega=np.zeros_like(delta_pre))

    try:
        sep, hm = eq.find_sep(red_post, gp, delta_pre)
    except EquilibriumError as exc:
        raise InadmissibleScenario(f"no post-fault SEP: {exc}", code="no-sep") from exc

    ueps = eq.enumerate_ueps(hm, grid_density=grid_density)
    try:
        crit = eq.closest_uep(ueps, hm)
    except EquilibriumError as exc:
        raise InadmissibleScenario(str(exc), code="no-boundary") from exc

    delta_E = en.energy_margin(crit.E_c, hm, x_pre)
    fom = en.FaultOnHamiltonianModel.at_prefault(red_on, gp, delta_pre)
    return StudyContext(
        sc=sc, red_pre=red_pre, red_on=red_on, red_post=red_post, gp=gp,
        x_pre=x_pre, sep=sep, hm=hm, fom=fom, crit=crit, delta_E=delta_E,
    )


def _pair_excursions(ctx: StudyContext, states: np.ndarray) -> np.ndarray:
    """|pairwise angle difference - its SEP value| for each sample row."""
    gp = ctx.gp
    m = gp.n_active
    full_sep = gp.full_angles(ctx.sep.delta)
    n = gp.n
    iu, ku = np.triu_indices(n, k=1)
    ref = full_sep[iu] - full_sep[ku]
    full = np.zeros((states.shape[0], n))
    full[:, gp.active] = states[:, :m]
    diff = full[:, iu] - full[:, ku]
    return np.abs(diff - ref[None, :])


def first_swing_stable(
    sc_or_ctx: FaultScenario | StudyContext,
    t_cl: float,
    window: float = 3.0,
    tol: float = 1e-8,
    fault_on: sw.Trajectory | None = None,
) -> bool:
    """First-swing verdict for a fault cleared at t_cl.

    Stable means every pairwise rotor-angle difference stays within
    DIVERGENCE_THRESHOLD of its post-fault equilibrium value over the
    observation window and swings back (reaches a peak and retreats).
    """
    if t_cl < 0.0:
        raise ValueError("clearing time must be non-negative")
    ctx = sc_or_ctx if isinstance(sc_or_ctx, StudyContext) else build_context(sc_or_ctx)

    if t_cl == 0.0:
        x0 = ctx.x_pre
    elif fault_on is not None and fault_on.t_end >= t_cl:
        x0 = fault_on.state(t_cl)
    else:
        try:
            traj = en.fault_on_trajectory(ctx.fom, ctx.gp, ctx.x_pre, t_cl, tol=tol)
        except IntegrationError:
            return False
        x0 = traj.state(t_cl)

    field = sw.swing_field(ctx.red_post, ctx.gp)
    n_pairs = ctx.gp.n * (ctx.gp.n - 1) // 2
    peak = np.zeros(n_pairs)
    returned = np.zeros(n_pairs, dtype=bool)
    chunk = 0.75
    dt = 0.005
    t_done = 0.0
    state = x0
    # the divergence bound is enforced over the whole window: an orbit may
    # complete its first return swing and still run away afterwards
    while t_done < window:
        t_span = min(chunk, window - t_done)
        try:
            traj = sw.integrate(field, state, t_span, tol=tol)
        except IntegrationError:
            return False
        ts = np.arange(0.0, t_span, dt)
        ts = np.append(ts, t_span)
        exc = _pair_excursions(ctx, traj.sample(ts))
        for row in exc:
            if np.any(row >= DIVERGENCE_THRESHOLD):
                return False
            returned |= row < peak - 1e-2
            peak = np.maximum(peak, row)
        state = traj.state(t_span)
        t_done += t_span
    return bool(np.all(returned | (peak < SMALL_SWING)))


def true_cct(
    sc_or_ctx: FaultScenario | StudyContext,
    resolution: float = 1e-4,
    horizon: float = 1.0,
    window: float = 3.0,
    tol: float = 1e-8,
) -> tuple[float | str, str | None]:
    """Binary search for the largest stable clearing time.

    Returns (value, verdict): value is the lower end of the final bracket,
    UNBOUNDED when stable at the horizon; verdict flags the degenerate case
    of a post-fault system unstable even at instant clearing.
    """
    ctx = sc_or_ctx if isinstance(sc_or_ctx, StudyContext) else build_context(sc_or_ctx)
    if not first_swing_stable(ctx, 0.0, window=window, tol=tol):
        return 0.0, "unstable-at-zero"
    fault_on = en.fault_on_trajectory(ctx.fom, ctx.gp, ctx.x_pre, horizon, tol=tol)
    if first_swing_stable(ctx, horizon, window=window, tol=tol, fault_on=fault_on):
        return UNBOUNDED, None
    lo, hi = 0.0, horizon
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if first_swing_stable(ctx, mid, window=window, tol=tol, fault_on=fault_on):
            lo = mid
        else:
            hi = mid
    return lo, None


def run_fault_study(
    sc: FaultScenario,
    resolution: float = 1e-4,
    horizon: float = 1.0,
    window: float = 3.0,
    tau_h_horizon: float = 2.0,
    tol: float = 1e-8,
    grid_density: int = 40,
    hamiltonian_fault_on: bool = False,
) -> FaultStudyResult:
    """Compute tau, tau_H, tau_A and the energy margin for one scenario."""
    verdicts: dict[str, str] = {}
    try:
        ctx = build_context(sc, grid_density=grid_density)
    except InadmissibleScenario as exc:
        return FaultStudyResult(
            tau=None, tau_H=None, tau_A=None, delta_E=None, E_c=None,
            closest_uep=None, admissible=False, verdicts={"scenario": exc.code},
        )

    if ctx.delta_E < 0.0:
        return FaultStudyResult(
            tau=None, tau_H=None, tau_A=None, delta_E=ctx.delta_E, E_c=ctx.crit.E_c,
            closest_uep=ctx.crit.closest_uep, admissible=False,
            verdicts={"scenario": "negative-margin"},
        )

    qc = en.quartic_coefficients(ctx.hm, ctx.fom, ctx.gp, ctx.x_pre, ctx.crit.E_c)
    t_A = en.tau_A(qc)
    if isinstance(t_A, str):
        verdicts["tau_A"] = t_A

    t_H = en.tau_H(
        ctx.fom, ctx.gp, ctx.x_pre, ctx.hm, ctx.crit.E_c,
        horizon=tau_h_horizon, tol=tol, hamiltonian_fault_on=hamiltonian_fault_on,
    )
    if isinstance(t_H, str):
        verdicts["tau_H"] = t_H

    t, t_verdict = true_cct(ctx, resolution=resolution, horizon=horizon, window=window, tol=tol)
    if isinstance(t, str):
        verdicts["tau"] = t
    elif t_verdict is not None:
        verdicts["tau"] = t_verdict

    return FaultStudyResult(
        tau=t, tau_H=t_H, tau_A=t_A, delta_E=ctx.delta_E, E_c=ctx.crit.E_c,
        closest_uep=ctx.crit.closest_uep, admissible=True, verdicts=verdicts,
    )


def hamiltonian_model_factory(
    sc: FaultScenario, bus_id: str, part: str
) -> "eq.ModelFactory":
    """Post-fault anchored-model builder as a function of one load parameter."""
    base = sc.net.shunt_loads.get(bus_id, 0j)

    def factory(value: float) -> en.HamiltonianModel:
        if part == "G":
            Y = complex(value, base.imag)
        elif part == "B":
            Y = complex(base.real, value)
        else:
            raise ValueError(f"parameter part must be 'G' or 'B', got {part!r}")
        sc_p = sc.with_load(bus_id, Y)
        # the fault-on regime plays no role in equilibrium continuation
        red_pre = nm.reduce_to_generators(sc_p.net)
        red_post = nm.reduce_to_generators(nm.apply_clearing(sc_p.net, sc_p.clearing_branch))
        gp = generator_params(sc_p, red_pre)
        delta_pre, _ = prefault_state(sc_p)
        try:
            _sep, hm = eq.find_sep(red_post, gp, delta_pre)
        except EquilibriumError as exc:
            raise InadmissibleScenario(f"no post-fault SEP: {exc}", code="no-sep") from exc
        return hm

    return factory
