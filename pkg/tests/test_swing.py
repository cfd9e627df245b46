"""Swing-equation fields, integration, and pre-fault dispatch."""

import math

import numpy as np
import pytest

from conftest import smib
from swingcct import faultstudy as fs
from swingcct import swing as sw
from swingcct.errors import InadmissibleScenario, IntegrationError
from swingcct.netmodel import ReducedNetwork

RNG = np.random.default_rng(3)


def hand_electrical_power(red, delta):
    """Term-by-term scalar evaluation of the power equations."""
    n = red.n
    out = []
    for i in range(n):
        p = red.E[i] ** 2 * red.G[i, i]
        for k in range(n):
            if k == i:
                continue
            p += red.E[i] * red.E[k] * red.G[i, k] * math.cos(delta[i] - delta[k])
            p += red.Pbar[i, k] * math.sin(delta[i] - delta[k])
        out.append(p)
    return np.array(out)


# ---------------------------------------------------------------------------
# electrical power and fields
# ---------------------------------------------------------------------------


def test_power_zero_angles_zero_conductance():
    red, _gp = smib(Pbar=1.3)
    assert np.allclose(sw.electrical_power(red, np.zeros(2)), 0.0, atol=0)


def test_power_sine_peak():
    red, _gp = smib(Pbar=1.0)
    Pe = sw.electrical_power(red, np.array([np.pi / 2, 0.0]))
    assert Pe[0] == pytest.approx(1.0, rel=1e-15)


def test_power_matches_hand_evaluation(nominal_ctx):
    full = nominal_ctx.gp.full_angles(nominal_ctx.x_pre.delta)
    got = sw.electrical_power(nominal_ctx.red_pre, full)
    assert np.allclose(got, hand_electrical_power(nominal_ctx.red_pre, full), atol=1e-14)


def test_rhs_zero_at_stationary_point(nominal_ctx):
    d = sw.rhs(nominal_ctx.red_pre, nominal_ctx.gp, nominal_ctx.x_pre)
    assert np.max(np.abs(d)) <= 1e-12


def test_rhs_kinematic_identity():
    red, gp = smib()
    x = sw.SystemState(delta=np.array([0.3]), omega=np.array([1.7]))
    assert sw.rhs(red, gp, x)[0] == 1.7


def test_rhs_hand_arithmetic():
    red, gp = smib(Pm=0.5, Pbar=1.0, M=0.1)
    x = sw.SystemState(delta=np.zeros(1), omega=np.zeros(1))
    d = sw.rhs(red, gp, x)
    assert d[1] == pytest.approx(5.0, rel=1e-15)


def test_hamiltonian_field_equals_exact_without_conductance():
    red, gp = smib(Pm=0.4)
    anchor = np.array([0.2])
    for _ in range(5):
        x = sw.SystemState(delta=RNG.normal(size=1), omega=RNG.normal(size=1))
        assert np.allclose(
            sw.rhs(red, gp, x), sw.rhs_hamiltonian(red, gp, anchor, x), atol=1e-15
        )


def test_hamiltonian_field_zero_at_own_anchor(nominal_ctx):
    sep = nominal_ctx.sep.delta
    x = sw.SystemState(delta=sep, omega=np.zeros_like(sep))
    d = sw.rhs_hamiltonian(nominal_ctx.red_post, nominal_ctx.gp, sep, x)
    assert np.max(np.abs(d)) <= 1e-10


def test_tmib_equations_reproduced(nominal_ctx):
    """Generic field specialised to two machines matches the explicit form."""
    red, gp = nominal_ctx.red_post, nominal_ctx.gp
    Pa = nominal_ctx.hm.Pa
    anchor = nominal_ctx.hm.anchor
    for _ in range(10):
        d1, d2 = RNG.uniform(-np.pi, np.pi, 2)
        w1, w2 = RNG.normal(size=2)
        x = sw.SystemState(delta=np.array([d1, d2]), omega=np.array([w1, w2]))
        got = sw.rhs_hamiltonian(red, gp, anchor, x)
        # machine indices: 0 infinite, 1 and 2 modeled; pairwise maxima
        P13, P23, P12 = red.Pbar[1, 0], red.Pbar[2, 0], red.Pbar[1, 2]
        expect = np.array(
            [
                w1,
                w2,
                (gp.Pm[1] - Pa[1] - P13 * np.sin(d1) - P12 * np.sin(d1 - d2)) / gp.M[1],
                (gp.Pm[2] - Pa[2] - P23 * np.sin(d2) - P12 * np.sin(d2 - d1)) / gp.M[2],
            ]
        )
        assert np.max(np.abs(got - expect)) <= 1e-12


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def test_integrate_zero_field_is_constant():
    x0 = sw.SystemState(delta=np.array([0.5]), omega=np.array([-0.2]))
    traj = sw.integrate(lambda y: np.zeros_like(y), x0, 1.0)
    assert np.allclose(traj.sample(np.linspace(0, 1, 7)), x0.packed(), atol=0)


def test_integrate_harmonic_period():
    red, gp = smib(Pm=0.5, Pbar=1.0, M=0.1)
    delta_s = math.asin(0.5)
    T = 2 * math.pi * math.sqrt(gp.M[0] / (red.Pbar[0, 1] * math.cos(delta_s)))
    x0 = sw.SystemState(delta=np.array([delta_s + 1e-3]), omega=np.zeros(1))
    traj = sw.integrate(sw.swing_field(red, gp), x0, 3.2 * T, tol=1e-10, atol=1e-12)
    ts = np.linspace(0, traj.t_end, 20001)
    d = traj.sample(ts)[:, 0] - delta_s
    crossings = ts[1:][(d[:-1] < 0) & (d[1:] >= 0)]
    assert len(crossings) >= 3
    period = np.mean(np.diff(crossings))
    assert period == pytest.approx(T, rel=1e-3)


def test_integrate_conserves_anchored_energy(nominal_ctx):
    from swingcct.energy import hamiltonian

    ctx = nominal_ctx
    x0 = sw.SystemState(delta=ctx.sep.delta + 0.3, omega=np.array([0.5, -0.4]))
    field = sw.anchored_field(ctx.red_post, ctx.gp, ctx.hm.anchor)
    traj = sw.integrate(field, x0, 1.0, tol=1e-8, atol=1e-10)
    h0 = hamiltonian(ctx.hm, x0)
    drift = max(
        abs(hamiltonian(ctx.hm, traj.state(t)) - h0) for t in np.linspace(0.1, 1.0, 10)
    )
    assert drift <= 1e-6 * max(1.0, abs(h0))


def test_integrate_reversibility(nominal_ctx):
    ctx = nominal_ctx
    field = sw.anchored_field(ctx.red_post, ctx.gp, ctx.hm.anchor)
    x0 = sw.SystemState(delta=ctx.sep.delta + 0.2, omega=np.array([0.1, -0.3]))
    fwd = sw.integrate(field, x0, 1.0)
    back = sw.integrate(lambda y: -field(y), fwd.state(1.0), 1.0)
    assert np.max(np.abs(back.sample(np.array([1.0]))[0] - x0.packed())) <= 1e-6


def test_integrate_blowup_reports_time():
    blowup = lambda y: y**2  # finite-time escape at t = 1
    with pytest.raises(IntegrationError) as err:
        sw.integrate(blowup, np.array([1.0]), 2.0)
    assert err.value.time is not None and 0.9 < err.value.time <= 2.0


def test_trajectory_time_axis():
    traj = sw.integrate(lambda y: -y, np.array([1.0]), 2.0)
    assert traj.t[0] == 0.0
    assert np.all(np.diff(traj.t) > 0)
    assert traj.t_end == pytest.approx(2.0)


def test_integrate_rejects_bad_horizon():
    with pytest.raises(ValueError):
        sw.integrate(lambda y: y, np.array([1.0]), 0.0)


def test_state_wrapping():
    x = sw.SystemState(delta=np.array([3.5 * np.pi]), omega=np.zeros(1))
    assert x.wrapped().delta[0] == pytest.approx(-0.5 * np.pi)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def test_dispatch_zero_angles_zero_conductance_rejected():
    red, _gp = smib()
    # P_e vanishes identically, so the machines cannot run as generators
    assert np.allclose(sw.electrical_power(red, np.zeros(2)), 0.0)
    with pytest.raises(InadmissibleScenario) as err:
        sw.dispatch_from_angles(red, np.zeros(1), infinite_index=1)
    assert err.value.code == "pm-nonpositive"


def test_dispatch_stationarity_residual(wscc, nominal_ctx):
    assert np.max(np.abs(sw.rhs(nominal_ctx.red_pre, nominal_ctx.gp, nominal_ctx.x_pre))) <= 1e-12


@pytest.mark.parametrize("b_c", [-7.5, -4.0, -1.0])
def test_dispatch_stationarity_across_sweep_points(wscc, b_c):
    sc = wscc.with_load("8", complex(0.969, b_c))
    red_pre, _, _ = fs.regimes(sc)
    gp = fs.generator_params(sc, red_pre)
    delta_pre, _ = fs.prefault_state(sc)
    x = sw.SystemState(delta=delta_pre, omega=np.zeros_like(delta_pre))
    assert np.max(np.abs(sw.rhs(red_pre, gp, x))) <= 1e-12


def test_dispatch_rejects_wide_angles():
    red, _gp = smib()
    with pytest.raises(ValueError, match="pi/2"):
        sw.dispatch_from_angles(red, np.array([1.7]), infinite_index=1)


def test_classical_dispatch_recovered(nominal_ctx):
    """The fixed operating-point dispatch lands on the classical powers."""
    assert nominal_ctx.gp.Pm[1] == pytest.approx(1.63, abs=0.005)
    assert nominal_ctx.gp.Pm[2] == pytest.approx(0.85, abs=0.005)


@pytest.mark.xfail(
    reason="both modeled machines keep positive dispatch far below B_A = -13.9 "
    "in this model; the quoted admissibility cut-off is not reproduced",
    strict=True,
)
def test_ba_sweep_dispatch_cutoff(wscc):
    base = wscc.net.shunt_loads["5"]
    sc = wscc.with_load("5", complex(base.real, -14.4))
    red_pre, _, _ = fs.regimes(sc)
    delta_pre, inf_idx = fs.prefault_state(sc)
    with pytest.raises(InadmissibleScenario):
        sw.dispatch_from_angles(red_pre, delta_pre, inf_idx)
