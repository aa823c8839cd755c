import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscidiff.core import ComplexField, SchemeParams, TorusGrid
from oscidiff.spectral import (
    UnstableModeError,
    amplification_matrix,
    analyze_modes,
    dft,
    gamma_k,
    gamma_of_beta,
    gamma_sharp,
    idft,
    pair_norm,
    stability_check,
    stability_check_ratio_form,
    triple_norm,
    wiener_norm,
)
from oscidiff.single_phase import lf_update


def test_dft_normalization_and_roundtrip():
    g = TorusGrid(0.0, 1.0, 8)
    u = ComplexField(g, np.full(8, 2 - 1j))
    c = dft(u)
    assert c[0] == pytest.approx(2 - 1j) and np.allclose(c[1:], 0)
    v = ComplexField(g, np.random.default_rng(0).normal(size=8) + 0j)
    assert np.allclose(idft(dft(v), g).values, v.values)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_wiener_norm_of_constant_is_modulus(c):
    g = TorusGrid(0.0, 1.0, 12)
    assert wiener_norm(ComplexField(g, np.full(12, c))) == pytest.approx(abs(c), abs=1e-12)


def test_wiener_norm_of_modes_sums_amplitudes():
    g = TorusGrid(0.0, 2 * np.pi, 32)
    x = g.nodes
    u = 2 * np.exp(3j * x) - 0.5 * np.exp(-5j * x) + 1.5
    assert wiener_norm(u) == pytest.approx(4.0)
    assert wiener_norm(np.zeros(0)) == 0.0


@given(st.integers(0, 10**6).map(lambda s: np.random.default_rng(s)))
def test_wiener_norm_is_subadditive_and_dominates_max(rng):
    u = rng.normal(size=24) + 1j * rng.normal(size=24)
    v = rng.normal(size=24) + 1j * rng.normal(size=24)
    assert wiener_norm(u + v) <= wiener_norm(u) + wiener_norm(v) + 1e-12
    assert np.max(np.abs(u)) <= wiener_norm(u) + 1e-12


@given(st.floats(-50, 50), st.floats(-np.pi, np.pi))
def test_gamma_sharp_bounds_symbol(beta, theta):
    g = np.cos(beta - theta) + beta * np.sin(beta - theta) - 1
    assert abs(g) <= gamma_sharp(beta) * (1 + 1e-12)


def test_gamma_of_beta_is_not_an_upper_bound():
    # at beta = 1 the symbol reaches 1 + sqrt 2 while gamma(beta) = 2
    beta = 1.0
    theta = np.linspace(-np.pi, np.pi, 200001)
    sup = np.max(np.abs(np.cos(beta - theta) + beta * np.sin(beta - theta) - 1))
    assert sup == pytest.approx(gamma_sharp(beta), rel=1e-8)
    assert sup > gamma_of_beta(beta)


def test_gamma_k_mode_convention():
    assert gamma_k(0.0, 0, 0.1) == pytest.approx(0.0)
    # beta = 0: gamma_k = cos(kh) - 1
    assert gamma_k(0.0, 3, 0.1, 2 * np.pi) == pytest.approx(np.cos(0.3) - 1)


def test_stability_forms_agree():
    p = SchemeParams(1e-3, 1.0, 1.0, 0.025, 0.05)
    res = stability_check(p)
    assert res.stable and res.theta == pytest.approx(1e-3 * 0.025 * (1 + 50) / 0.0025)
    assert stability_check_ratio_form(p) == res.stable
    q = p.with_tau(0.05)
    assert stability_check(q).stable == stability_check_ratio_form(q) == False  # noqa: E712


@given(st.floats(1e-4, 0.1), st.sampled_from([0.1, 0.05, 0.025]), st.floats(0.05, 0.8))
def test_roots_on_unit_circle_below_sharp_threshold(eps, h, frac):
    # with the sharp constant, theta < 1 does imply |mu_k| < 1
    g = TorusGrid.from_mesh_size(-6, 12, h)
    beta = 1.0 * h / eps
    tau = frac * h * h / (eps * gamma_sharp(beta))
    p = SchemeParams(eps, 1.0, 1.0, tau, h)
    for m in analyze_modes(p, g)[::7]:
        assert abs(m.mu_k) < 1
        assert abs(abs(m.lambda_plus) - 1) < 1e-12 and abs(abs(m.lambda_minus) - 1) < 1e-12


def test_amplification_matrix_eigenvalues():
    p = SchemeParams(1e-2, 1.0, 1.0, 0.001, 0.05)
    m = amplification_matrix(p, 5, 12.0)
    ev = np.sort_complex(np.linalg.eigvals(m.G))
    assert np.allclose(ev, np.sort_complex(np.array([m.lambda_plus, m.lambda_minus])))
    # P diagonalizes G
    D = np.linalg.solve(m.P, m.G @ m.P)
    assert np.allclose(D, np.diag([m.lambda_plus, m.lambda_minus]), atol=1e-12)
    assert m.stable and np.isfinite(m.condition)


@given(st.integers(0, 10**6))
def test_triple_norm_conserved_by_linear_leapfrog(seed):
    rng = np.random.default_rng(seed)
    eps, h = 10 ** rng.uniform(-3, -1), 0.1
    g = TorusGrid.from_mesh_size(-6, 12, h)
    tau = 0.5 * h * h / (eps * gamma_sharp(h / eps))
    p = SchemeParams(eps, 0.0, 1.0, tau, h)
    u0 = rng.normal(size=g.M) + 1j * rng.normal(size=g.M)
    u1 = rng.normal(size=g.M) + 1j * rng.normal(size=g.M)
    n0 = triple_norm((ComplexField(g, u1), ComplexField(g, u0)), p)
    for _ in range(50):
        u0, u1 = u1, lf_update(u0, u1, p.alpha, p.beta, eps, tau, h, 0)
    n1 = triple_norm((ComplexField(g, u1), ComplexField(g, u0)), p)
    assert n1 == pytest.approx(n0, rel=1e-10)
    assert pair_norm((ComplexField(g, u1), ComplexField(g, u0))) > 0


def test_triple_norm_rejects_unstable_modes():
    g = TorusGrid.from_mesh_size(-6, 12, 0.1)
    p = SchemeParams(0.1, 0.0, 0.0, 1.0, 0.1)
    u = ComplexField.zeros(g)
    with pytest.raises(UnstableModeError):
        triple_norm((u, u), p)
