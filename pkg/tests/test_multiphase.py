import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscidiff.core import (
    PhaseSet,
    SchemeParams,
    TorusGrid,
    adjust_wavenumber,
    gaussian,
    linf_error,
    make_initial_data,
)
from oscidiff.multiphase import (
    MultiphaseScheme,
    PhaseStructure,
    chi_switch,
    dlf_apply,
    two_phase_scheme,
)
from oscidiff.single_phase import StabilityError, run_wcn, run_wlf

GRID = TorusGrid.from_mesh_size(-6, 12, 0.1)


def _random_fields(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_chi_switch():
    assert chi_switch(0.1, 0.5) == 1
    assert chi_switch(0.1, 1e-2) == 0
    h, eps = 0.05, 0.2
    assert chi_switch(h, eps, c=5) == int(h * h <= 5 * eps**5)
    with pytest.raises(ValueError):
        chi_switch(0.1, 0.1, c=0)


def test_two_phase_structure():
    eps = 1e-2
    ps = PhaseStructure.build(two_phase_scheme(eps, GRID, 0.01, "case2").phases, eps, GRID)
    k = ps.kappas[0]
    assert ps.R == 2 and ps.nus == ((0, 1, 0), (1, 0, 1))
    assert np.allclose(ps.kappa_nu, [3 * k, -3 * k])
    assert np.allclose(ps.delta, -4 * k * k)
    assert np.allclose(ps.omega_star, 4.5 * k * k)


@pytest.mark.parametrize("case", ["case0", "case1", "case2", "case3"])
@given(seed=st.integers(0, 10**6), lam=st.floats(-2, 2))
def test_two_phase_right_hand_sides_match_printed_formulas(case, seed, lam):
    rng = np.random.default_rng(seed)
    s = two_phase_scheme(1e-3, GRID, 0.01, case, lam=lam)
    u = _random_fields(rng, (2, GRID.M))
    wst = _random_fields(rng, (2, GRID.M))
    w = _random_fields(rng, (2, GRID.M))
    gu, gw = s.rhs(u, np.abs(u) ** 2, w, wst)
    a, b = u  # components with +kappa and -kappa
    w3, wm3 = w
    if case == "case0":
        exp_a, exp_b = np.abs(a + b) ** 2 * a, np.abs(a + b) ** 2 * b
    else:
        exp_a = (np.abs(a) ** 2 + 2 * np.abs(b) ** 2) * a
        exp_b = (np.abs(b) ** 2 + 2 * np.abs(a) ** 2) * b
    if case == "case1":
        exp_a = exp_a + a * np.conj(b) * a
        exp_b = exp_b + b * np.conj(a) * b
    if case == "case3":
        exp_a = exp_a + 2 * b * np.conj(a) * w3 + b * np.conj(wm3) * b
        exp_b = exp_b + 2 * a * np.conj(b) * wm3 + a * np.conj(w3) * a
        assert np.allclose(gw, 2 * lam * (np.abs(a) ** 2 + np.abs(b) ** 2) * wst)
    else:
        assert np.allclose(gw, 0)
    assert np.allclose(gu[0], lam * exp_a) and np.allclose(gu[1], lam * exp_b)


def test_slaved_and_initial_corrections():
    eps = 1e-3
    s = two_phase_scheme(eps, GRID, 0.01, "case3")
    st0 = s.initial_state()
    a, b = st0.u_curr
    w = s.slaved_w(st0.u_curr)
    assert np.allclose(w[0], eps / s.delta[0] * a * np.conj(b) * a)
    assert np.allclose(st0.ws_curr, -w)
    # the corrections cancel at t = 0, so the assembled field is the initial datum
    u0 = make_initial_data(s.phases, eps, GRID)
    assert linf_error(s.assemble(st0), u0) < 1e-15


def test_extended_uses_chi_and_drops_corrections():
    s = two_phase_scheme(0.5, GRID, 0.001, "extended", enforce_stability=False)
    assert s.chi == 1 and not s.with_w
    s = two_phase_scheme(1e-3, GRID, 0.01, "extended")
    assert s.chi == 0 and s.with_w


def test_leapfrog_stability_enforced_on_corrections():
    # (eps, h, tau) = (1e-4, 0.05, 0.025): the 3 kappa component has theta > 1
    g = TorusGrid.from_mesh_size(-6, 12, 0.05)
    with pytest.raises(StabilityError):
        two_phase_scheme(1e-4, g, 0.025, "case3")
    s = two_phase_scheme(1e-4, g, 0.025, "case3", enforce_stability=False)
    assert np.max(s.theta) > 1
    assert np.max(two_phase_scheme(1e-4, g, 0.025, "case1").theta) < 1


@pytest.mark.parametrize("method", ["lf", "cn"])
@given(eps=st.floats(1e-3, 0.1))
def test_single_phase_input_reduces_to_single_phase_scheme(method, eps):
    k = adjust_wavenumber(1.0, eps, GRID)
    phases = PhaseSet((k,), (gaussian(),))
    tau = 0.5 * GRID.h**2 / (2 * eps * (1 + max(k * GRID.h / eps, 1)))
    s = MultiphaseScheme(phases, GRID, eps, 1.0, tau, method=method)
    assert s.nus == ()
    u0 = make_initial_data(phases, eps, GRID)
    p = SchemeParams(eps, 1.0, k, tau, GRID.h)
    ref = run_wlf(u0, p, 6) if method == "lf" else run_wcn(u0, p, 6)
    assert linf_error(s.run(6), ref) < 1e-13


def test_nonresonance_violation_is_rejected():
    eps = 1e-2
    d = 2 * np.pi * eps / GRID.length
    phases = PhaseSet((10 * d, -10 * d, 30 * d), (gaussian(),) * 3)
    with pytest.raises(ValueError, match="nonresonance"):
        MultiphaseScheme(phases, GRID, eps, 1.0, 0.001)


def test_dlf_vanishes_on_linear_plane_wave():
    eps, tau = 1e-2, 0.002
    k = adjust_wavenumber(1.0, eps, GRID)
    x = GRID.nodes
    om = 0.5 * k * k
    u = [np.exp(1j * (k * x - om * t) / eps) for t in (0, tau, 2 * tau)]
    d = dlf_apply(*u, om * tau / eps, k * GRID.h / eps, eps, tau, GRID.h)
    assert np.max(np.abs(d)) < 1e-11


@pytest.mark.parametrize("method", ["lf", "cn"])
def test_two_phase_extended_second_order_in_h(method):
    # self-convergence at eps = 1e-3 against the h = 0.025 run of the same scheme
    eps, T = 1e-3, 0.5
    out = {}
    for h in (0.1, 0.05, 0.025):
        g = TorusGrid.from_mesh_size(-6, 12, h)
        k = adjust_wavenumber(1.0, eps, g)
        tau = h / 2
        if method == "lf":
            tau = min(tau, h * h / (2 * eps * (1 + max(3 * k * h / eps, 1))))
        n = int(np.ceil(T / tau - 1e-9))
        out[h] = two_phase_scheme(eps, g, T / n, "extended", method=method).run(n)
    e = [np.max(np.abs(out[h].values - out[0.025].values[::int(round(h / 0.025))]))
         for h in (0.1, 0.05)]
    # with e(h) ~ C h^2 the differences behave like 15 : 3
    assert 3.5 < e[0] / e[1] < 6.5
