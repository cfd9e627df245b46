"""Stationary points of the conservative post-fault system.

SEP location solves the anchored field self-consistently (the frozen
conductance power depends on the equilibrium it anchors).  Saddles come from
a batched multi-start Newton over a grid around the SEP, wrapped into the
2*pi cell centered on it; the lowest type-1 saddle defines the critical
energy.  Branches of equilibria under a load-parameter change are traced by
a natural-parameter predictor/corrector with fold refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .energy import HamiltonianModel, potential
from .errors import EquilibriumError, InadmissibleScenario
from .netmodel import ReducedNetwork
from .swing import GeneratorParams, electrical_power

_EIG_AXIS_TOL = 1e-9
MARGINAL = "marginal"


def anchored_residual(
    red: ReducedNetwork, gp: GeneratorParams, Pa: np.ndarray, delta: np.ndarray
) -> np.ndarray:
    """Pm - Pa - (sine coupling) over the modeled machines (zero at equilibria)."""
    full = gp.full_angles(np.asarray(delta, dtype=float))
    d = np.subtract.outer(full, full)
    s = (red.Pbar * np.sin(d)).sum(axis=1)
    act = gp.active
    return gp.Pm[act] - Pa[act] - s[act]


def exact_residual(red: ReducedNetwork, gp: GeneratorParams, delta: np.ndarray) -> np.ndarray:
    """Pm - Pe over the modeled machines for the exact (lossy) field."""
    full = gp.full_angles(np.asarray(delta, dtype=float))
    act = gp.active
    return gp.Pm[act] - electrical_power(red, full)[act]


def _exact_jacobian(red: ReducedNetwork, gp: GeneratorParams, delta: np.ndarray) -> np.ndarray:
    act = gp.active
    full = gp.full_angles(np.asarray(delta, dtype=float))
    d = np.subtract.outer(full, full)
    PG = np.outer(red.E, red.E) * red.G
    C = red.Pbar * np.cos(d) - PG * np.sin(d)
    J = C[np.ix_(act, act)]
    np.fill_diagonal(J, 0.0)
    J[np.diag_indices_from(J)] = -C[act, :].sum(axis=1)
    return J


def hessian(red: ReducedNetwork, gp: GeneratorParams, delta: np.ndarray) -> np.ndarray:
    """Hessian of the potential energy in the modeled angles."""
    act = gp.active
    full = gp.full_angles(np.asarray(delta, dtype=float))
    d = np.subtract.outer(full, full)
    C = red.Pbar * np.cos(d)
    H = -C[np.ix_(act, act)]
    np.fill_diagonal(H, 0.0)
    diag = C[act, :].sum(axis=1)
    H[np.diag_indices_from(H)] = diag
    return H


def _newton(
    red: ReducedNetwork,
    gp: GeneratorParams,
    Pa: np.ndarray,
    guess: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 50,
    max_step: float = 1.0,
) -> tuple[np.ndarray, int]:
    """Damped Newton on the anchored residual; returns (root, iterations)."""
    delta = np.asarray(guess, dtype=float).copy()
    for it in range(1, max_iter + 1):
        r = anchored_residual(red, gp, Pa, delta)
        if np.max(np.abs(r)) <= tol:
            return delta, it
        H = hessian(red, gp, delta)
        try:
            step = np.linalg.solve(H, r)
        except np.linalg.LinAlgError:
            raise EquilibriumError("singular Hessian in Newton iteration") from None
        norm = np.max(np.abs(step))
        if norm > max_step:
            step *= max_step / norm
        delta = delta + step
        if not np.all(np.isfinite(delta)):
            raise EquilibriumError("Newton iteration diverged to non-finite angles")
    raise EquilibriumError(f"Newton did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class EquilibriumPoint:
    """A stationary point of the conservative system (omega = 0 implied)."""

    delta: np.ndarray
    energy: float
    type_index: int
    spectrum: np.ndarray

    def distance(self, other_delta: np.ndarray) -> float:
        return float(np.max(np.abs(self.delta - np.asarray(other_delta, dtype=float))))


@dataclass(frozen=True)
class CriticalEnergy:
    """Closest type-1 saddle and its potential energy level."""

    closest_uep: EquilibriumPoint
    E_c: float
    candidates: tuple[EquilibriumPoint, ...]


def classify(hm: HamiltonianModel, delta: np.ndarray) -> int | str:
    """Count of Jacobian eigenvalues with real part above the axis tolerance.

    Near-zero eigenvalues (both parts within the tolerance, i.e. a fold
    degeneracy) yield the MARGINAL verdict instead of a count; the purely
    imaginary pairs of this undamped model classify as stable.
    """
    spectrum = _spectrum(hm, delta)
    if np.any((np.abs(spectrum.real) <= _EIG_AXIS_TOL) & (np.abs(spectrum.imag) <= _EIG_AXIS_TOL)):
        return MARGINAL
    return int(np.sum(spectrum.real > _EIG_AXIS_TOL))


def _spectrum(hm: HamiltonianModel, delta: np.ndarray) -> np.ndarray:
    gp = hm.gp
    m = gp.n_active
    H = hessian(hm.red, gp, delta)
    Minv = 1.0 / gp.M[gp.active]
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -(Minv[:, None] * H)
    return np.linalg.eigvals(J)


def _equilibrium_point(hm: HamiltonianModel, delta: np.ndarray) -> EquilibriumPoint:
    spectrum = _spectrum(hm, delta)
    near_zero = (np.abs(spectrum.real) <= _EIG_AXIS_TOL) & (np.abs(spectrum.imag) <= _EIG_AXIS_TOL)
    if np.any(near_zero):
        raise EquilibriumError("marginal equilibrium: eigenvalue at the origin")
    t = int(np.sum(spectrum.real > _EIG_AXIS_TOL))
    delta = np.asarray(delta, dtype=float).copy()
    # energy is always that of the canonical-cell representative, so traced
    # (unwrapped) points stay comparable with enumerated ones
    canonical = _wrap_to_cell(delta, np.asarray(hm.anchor, dtype=float))
    return EquilibriumPoint(
        delta=delta,
        energy=potential(hm, canonical),
        type_index=t,
        spectrum=spectrum,
    )


def find_sep(
    red: ReducedNetwork,
    gp: GeneratorParams,
    guess: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[EquilibriumPoint, HamiltonianModel]:
    """Locate the stable post-fault equilibrium and its anchored model.

    The anchored field with the anchor at its own equilibrium has the same
    residual as the exact field, so the joint fixed point (equilibrium plus
    frozen conductance power) is found in one Newton run on the exact field.
    """
    guess = np.asarray(guess, dtype=float)
    delta = guess.copy()
    for _ in range(max_iter):
        r = exact_residual(red, gp, delta)
        if np.max(np.abs(r)) <= tol:
            break
        J = _exact_jacobian(red, gp, delta)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise EquilibriumError("singular Jacobian while locating the SEP") from None
        norm = np.max(np.abs(step))
        if norm > 1.0:
            step *= 1.0 / norm
        delta = delta + step
        if not np.all(np.isfinite(delta)):
            raise EquilibriumError("SEP Newton diverged to non-finite angles")
    else:
        raise EquilibriumError(f"SEP Newton did not converge in {max_iter} iterations")
    if np.max(np.abs(delta - guess)) >= np.pi:
        raise EquilibriumError("Newton left the principal cell of the initial guess")
    hm = HamiltonianModel.at_anchor(red, gp, delta)
    if np.max(np.abs(anchored_residual(red, gp, hm.Pa, delta))) > 1e-10:
        raise EquilibriumError("anchored residual check failed at the SEP")
    point = _equilibrium_point(hm, delta)
    if point.type_index != 0:
        raise EquilibriumError(f"converged point is type-{point.type_index}, not a SEP")
    return point, hm


def _batched_newton(
    hm: HamiltonianModel, starts: np.ndarray, tol: float = 1e-12, max_iter: int = 60
) -> np.ndarray:
    """Vectorised damped Newton from many starts; returns converged roots."""
    gp = hm.gp
    red = hm.red
    act = gp.active
    m = act.size
    n = gp.n
    S = starts.shape[0]
    drive = gp.Pm[act] - hm.Pa[act]
    Pbar = red.Pbar

    X = starts.copy()
    alive = np.ones(S, dtype=bool)
    converged = np.zeros(S, dtype=bool)
    for _ in range(max_iter):
        work = alive & ~converged
        if not np.any(work):
            break
        full = np.zeros((S, n))
        full[:, act] = X
        D = full[:, :, None] - full[:, None, :]
        s = (Pbar[None, :, :] * np.sin(D)).sum(axis=2)
        R = drive[None, :] - s[:, act]
        res = np.max(np.abs(R), axis=1)
        newly = work & (res <= tol)
        converged |= newly
        work &= ~newly
        if not np.any(work):
            break
        C = Pbar[None, :, :] * np.cos(D)
        H = -C[:, act[:, None], act[None, :]]
        diag = C[:, act, :].sum(axis=2)
        H[:, np.arange(m), np.arange(m)] = diag
        step = np.full_like(X, np.nan)
        if m == 2:
            det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
            ok = work & (np.abs(det) > 1e-14)
            b0, b1 = R[:, 0], R[:, 1]
            step[ok, 0] = (H[ok, 1, 1] * b0[ok] - H[ok, 0, 1] * b1[ok]) / det[ok]
            step[ok, 1] = (-H[ok, 1, 0] * b0[ok] + H[ok, 0, 0] * b1[ok]) / det[ok]
            alive &= ~(work & ~ok)
            work &= ok
        else:
            for i in np.nonzero(work)[0]:
                try:
                    step[i] = np.linalg.solve(H[i], R[i])
                except np.linalg.LinAlgError:
                    alive[i] = False
                    work[i] = False
        norms = np.max(np.abs(step), axis=1)
        scale = np.where(norms > 1.0, 1.0 / np.maximum(norms, 1e-300), 1.0)
        upd = work & np.all(np.isfinite(step), axis=1)
        X[upd] += step[upd] * scale[upd, None]
        alive &= np.all(np.isfinite(X), axis=1)
    return X[converged & alive & np.all(np.isfinite(X), axis=1)]


def _wrap_to_cell(delta: np.ndarray, center: np.ndarray) -> np.ndarray:
    # subtract whole turns only, so in-cell coordinates pass through bit-exact;
    # the lower cell edge belongs to the +pi side (half-open cell)
    d = delta - center
    w = d - 2.0 * np.pi * np.round(d / (2.0 * np.pi))
    w = np.where(w <= -np.pi + 1e-9, w + 2.0 * np.pi, w)
    return center + w


def wrapped_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-norm distance between angle vectors modulo 2*pi per coordinate."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    w = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
    return float(np.max(np.abs(w)))


def stationary_points(
    hm: HamiltonianModel,
    box: tuple[np.ndarray, np.ndarray] | None = None,
    grid_density: int = 40,
) -> list[EquilibriumPoint]:
    """All stationary points in the SEP-centered angle cell, classified.

    Starts a Newton run from each node of a grid over `box` (default: the
    anchor plus/minus 2*pi in every modeled angle), wraps the converged roots
    into the canonical cell and deduplicates at 1e-6.
    """
    gp = hm.gp
    m = gp.n_active
    center = np.asarray(hm.anchor, dtype=float)
    if box is None:
        box = (center - 2.0 * np.pi, center + 2.0 * np.pi)
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    axes = [np.linspace(lo[i], hi[i], grid_density) for i in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    starts = np.stack([g.ravel() for g in mesh], axis=1)

    roots = _batched_newton(hm, starts)
    if roots.size == 0:
        return []
    roots = _wrap_to_cell(roots, center)

    kept: list[np.ndarray] = []
    for r in sorted(map(tuple, np.round(roots, 12))):
        r = np.array(r)
        # modulo-2*pi comparison: boundary pairs (-pi / +pi) are one point
        if all(wrapped_distance(r, k) > 1e-6 for k in kept):
            kept.append(r)

    points = []
    for r in kept:
        res = anchored_residual(hm.red, gp, hm.Pa, r)
        if np.max(np.abs(res)) > 1e-10:
            continue
        try:
            points.append(_equilibrium_point(hm, r))
        except EquilibriumError:
            continue  # marginal point exactly at a fold; unusable for typing
    points.sort(key=lambda p: tuple(np.round(p.delta, 9)))
    return points


def enumerate_ueps(
    hm: HamiltonianModel,
    box: tuple[np.ndarray, np.ndarray] | None = None,
    grid_density: int = 40,
) -> list[EquilibriumPoint]:
    """Type-1 saddles around the SEP (the critical-energy candidate set)."""
    return [p for p in stationary_points(hm, box, grid_density) if p.type_index == 1]


def closest_uep(S: Sequence[EquilibriumPoint], hm: HamiltonianModel) -> CriticalEnergy:
    """Minimum-energy type-1 saddle; non-type-1 entries are filtered out."""
    type1 = sorted(
        (p for p in S if p.type_index == 1),
        key=lambda p: (p.energy, tuple(np.round(p.delta, 9))),
    )
    if not type1:
        raise EquilibriumError("no energy boundary: type-1 UEP set is empty")
    best = type1[0]
    return CriticalEnergy(closest_uep=best, E_c=best.energy, candidates=tuple(type1))


# ---------------------------------------------------------------------------
# Natural-parameter continuation
# ---------------------------------------------------------------------------

ModelFactory = Callable[[float], HamiltonianModel]


@dataclass
class Branch:
    """One traced solution branch: ordered (parameter, equilibrium) samples."""

    points: list[tuple[float, EquilibriumPoint]] = field(default_factory=list)
    folds: list[float] = field(default_factory=list)

    @property
    def params(self) -> np.ndarray:
        return np.array([p for p, _ in self.points])

    def segments(self) -> list[tuple[int, float, float]]:
        """Stability segments as (type_index, param_lo, param_hi) runs."""
        out: list[tuple[int, float, float]] = []
        for p, pt in self.points:
            if out and out[-1][0] == pt.type_index:
                t, a, b = out[-1]
                out[-1] = (t, min(a, p), max(b, p))
            else:
                out.append((pt.type_index, p, p))
        return out

    def nearest(self, param: float) -> tuple[float, EquilibriumPoint]:
        k = int(np.argmin(np.abs(self.params - param)))
        return self.points[k]

    def covers(self, param: float, slack: float) -> bool:
        ps = self.params
        return bool(ps.min() - slack <= param <= ps.max() + slack)


def _correct(
    factory: ModelFactory, param: float, guess: np.ndarray, jump_guard: float = 0.45
) -> tuple[HamiltonianModel, EquilibriumPoint] | None:
    """Newton-correct a predicted point at `param`; None on failure or jump."""
    try:
        hm = factory(param)
    except (InadmissibleScenario, EquilibriumError):
        return None
    try:
        root, _ = _newton(hm.red, hm.gp, hm.Pa, guess, tol=1e-12, max_iter=25)
    except EquilibriumError:
        return None
    if np.max(np.abs(root - guess)) > jump_guard:
        return None
    try:
        return hm, _equilibrium_point(hm, root)
    except EquilibriumError:
        return None


def _trace(
    factory: ModelFactory,
    p0: float,
    point0: EquilibriumPoint,
    p_stop: float,
    initial_step: float,
    fold_tol: float = 1e-4,
    step_floor: float = 1e-5,
) -> Branch:
    """Trace one branch from (p0, point0) towards p_stop."""
    branch = Branch(points=[(p0, point0)])
    direction = 1.0 if p_stop >= p0 else -1.0
    step = abs(initial_step)
    p_prev, d_prev = p0, point0.delta
    last_type = point0.type_index
    p_prev2: float | None = None
    d_prev2: np.ndarray | None = None

    while direction * (p_stop - p_prev) > 1e-12:
        p_next = p_prev + direction * min(step, abs(p_stop - p_prev))
        if p_prev2 is not None and abs(p_prev - p_prev2) > 1e-14:
            slope = (d_prev - d_prev2) / (p_prev - p_prev2)
            guess = d_prev + slope * (p_next - p_prev)
        else:
            guess = d_prev
        result = _correct(factory, p_next, guess)
        if result is not None:
            _hm, point = result
            branch.points.append((p_next, point))
            p_prev2, d_prev2 = p_prev, d_prev
            p_prev, d_prev = p_next, point.delta
            last_type = point.type_index
            step = min(step * 1.5, abs(initial_step))
            continue
        if step > step_floor:
            step = max(step / 2.0, step_floor)
            continue
        # persistent corrector failure at the floor: bracket the end point
        lo, hi = p_prev, p_next
        try:
            factory(p_next)
            domain_edge = False
        except InadmissibleScenario as exc:
            # a model that dies because its SEP vanished is the SEP branch
            # folding, not a domain edge
            domain_edge = not (exc.code == "no-sep" and last_type == 0)
        except EquilibriumError:
            domain_edge = last_type != 0
        while abs(hi - lo) > fold_tol:
            mid = 0.5 * (lo + hi)
            result = _correct(factory, mid, d_prev)
            if result is not None:
                _hm, point = result
                branch.points.append((mid, point))
                p_prev, d_prev = mid, point.delta
                last_type = point.type_index
                lo = mid
            else:
                hi = mid
        if not domain_edge:
            branch.folds.append(0.5 * (lo + hi))
        break
    return branch


def continue_branch(
    source,
    prange: tuple[float, float],
    initial_step: float = 0.05,
    checkpoint_fraction: float = 0.05,
    grid_density: int = 40,
    param: str | None = None,
) -> list[Branch]:
    """Trace all equilibrium branches over a load-parameter range.

    `source` is either a model factory (parameter value -> anchored model) or
    a fault scenario, in which case `param` selects the swept shunt-load
    component ("<bus>.G" / "<bus>.B").  Seeds come from a full enumeration at
    the range start, re-enumerated at regular checkpoints to pick up
    disconnected branches; every new seed is traced in both directions.
    Fold locations are refined to 1e-4 in the parameter.
    """
    if callable(source):
        factory: ModelFactory = source
    else:
        if param is None:
            raise ValueError("a parameter path is required when passing a scenario")
        from .faultstudy import hamiltonian_model_factory
        from .sweep import parse_param_path

        bus, part = parse_param_path(source, param)
        factory = hamiltonian_model_factory(source, bus, part)
    lo, hi = prange
    if hi <= lo:
        raise ValueError("empty parameter range")
    branches: list[Branch] = []

    def is_covered(param: float, delta: np.ndarray) -> bool:
        # comparisons are modulo 2*pi: traced branches are left unwrapped for
        # continuity while enumeration wraps into the SEP-centered cell
        for br in branches:
            if not br.covers(param, slack=initial_step):
                continue
            p_near, pt = br.nearest(param)
            if abs(p_near - param) <= 1e-12 and wrapped_distance(pt.delta, delta) <= 1e-6:
                return True
            refit = _correct(factory, param, pt.delta)
            if refit is not None and wrapped_distance(refit[1].delta, delta) <= 1e-6:
                return True
        return False

    checkpoints = np.arange(lo, hi + 1e-12, (hi - lo) * checkpoint_fraction)
    for cp in checkpoints:
        try:
            hm = factory(float(cp))
        except (InadmissibleScenario, EquilibriumError):
            continue
        for seed in stationary_points(hm, grid_density=grid_density):
            if is_covered(float(cp), seed.delta):
                continue
            fwd = _trace(factory, float(cp), seed, hi, initial_step)
            bwd = _trace(factory, float(cp), seed, lo, initial_step)
            merged = Branch(
                points=list(reversed(bwd.points[1:])) + fwd.points,
                folds=bwd.folds + fwd.folds,
            )
            branches.append(merged)
    return branches


def fold_locations(branches: Sequence[Branch], merge_tol: float = 0.02) -> list[float]:
    """Pooled fold parameter values, deduplicated across branch ends."""
    raw = sorted(f for br in branches for f in br.folds)
    out: list[float] = []
    for f in raw:
        if not out or abs(f - out[-1]) > merge_tol:
            out.append(f)
    return out
