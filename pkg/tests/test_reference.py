import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscidiff.core import (
    ComplexField,
    PhaseSet,
    TorusGrid,
    adjust_wavenumber,
    carrier,
    constant,
    gaussian,
    linf_error,
    make_initial_data,
)
from oscidiff.reference import (
    ModulationBlowUp,
    OracleError,
    assemble_mfe,
    cached,
    fine_grid,
    oracle_solution,
    read_field,
    reference_field,
    resolve_reference_kind,
    restrict,
    solve_modulation,
    solve_two_phase_modulation,
    splitstep_oracle,
    standard_lf,
    write_field,
)

PERIOD = TorusGrid(-6.0, 12.0, 120)


def _constant_phase(eps, c=1.0, grid=PERIOD):
    k = adjust_wavenumber(1.0, eps, grid)
    return PhaseSet((k,), (constant(c),)), k


def test_oracle_reproduces_constant_profile_solution():
    eps, lam, T, c = 0.05, 1.0, 0.5, 0.8
    phases, k = _constant_phase(eps, c)
    g = fine_grid([PERIOD], eps)
    u = splitstep_oracle(make_initial_data(phases, eps, g), eps, lam, T, 8)
    exact = c * np.exp(-1j * lam * c * c * T) * carrier(g, k, 0.5 * k * k, eps, T)
    assert np.max(np.abs(u.values - exact)) < 1e-12


def test_oracle_rejects_unresolved_grid():
    phases, _ = _constant_phase(0.05)
    u0 = make_initial_data(phases, 0.05, PERIOD)
    with pytest.raises(ValueError, match="unresolved grid"):
        splitstep_oracle(u0, 0.05, 1.0, 0.5, 4)


def test_oracle_reports_self_convergence_failure():
    eps = 0.1
    g = fine_grid([PERIOD], eps)
    u0 = make_initial_data(PhaseSet((adjust_wavenumber(1.0, eps, g),), (gaussian(),)), eps, g)
    with pytest.raises(OracleError, match="self-convergence failure"):
        oracle_solution(u0, eps, 1.0, 0.5, n_start=2, tol=1e-14, max_steps=8)


def test_fine_grid_nests_coarse_grids():
    coarse = [TorusGrid.from_mesh_size(-6, 12, h) for h in (0.1, 0.05, 0.025)]
    g = fine_grid(coarse, 0.01)
    assert all(g.M % c.M == 0 for c in coarse)
    assert g.h <= 0.01 / 8 and g.h > 0.01 / 16
    with pytest.raises(ValueError, match="unresolved grid"):
        fine_grid(coarse, 1e-5)
    u = ComplexField(g, np.exp(1j * g.nodes))
    r = restrict(u, coarse[0])
    assert np.allclose(r.values, np.exp(1j * coarse[0].nodes))


def test_mfe_initial_value_is_initial_datum():
    eps = 1e-2
    k = adjust_wavenumber(1.0, eps, PERIOD)
    phases = PhaseSet((k, -k), (gaussian(amplitude=0.5),) * 2)
    ms = solve_modulation(phases, eps, 1.0, 0.5, PERIOD, times=[0.0, 0.5], n_steps=256)
    u0 = make_initial_data(phases, eps, PERIOD)
    assert linf_error(assemble_mfe(ms, 0.0, PERIOD), u0) < 1e-14
    with pytest.raises(ValueError):
        ms.index(0.7)
    with pytest.raises(ValueError):
        ms.index(0.25)


def test_general_modulation_solver_matches_dedicated_two_phase_solver():
    eps, lam, T = 1e-2, 1.0, 0.5
    k = adjust_wavenumber(1.0, eps, PERIOD)
    prof = gaussian(amplitude=0.5)
    phases = PhaseSet((k, -k), (prof, prof))
    ms = solve_modulation(phases, eps, lam, T, PERIOD, n_steps=512)
    ded = solve_two_phase_modulation(prof, k, eps, lam, T, PERIOD, n_steps=512)
    assert np.max(np.abs(ms.a[-1] - ded[:2])) < 1e-13
    assert np.max(np.abs(ms.bstar[-1] - ded[2:])) < 1e-13


def test_single_phase_modulation_constant_profile():
    eps, lam, T, c = 1e-3, 1.0, 0.5, 0.7
    phases, _ = _constant_phase(eps, c)
    ms = solve_modulation(phases, eps, lam, T, PERIOD, n_steps=64)
    assert np.allclose(ms.a[-1, 0], c * np.exp(-1j * lam * c * c * T), atol=1e-13)


def test_modulation_blowup_detected():
    eps = 1e-2
    phases = PhaseSet((adjust_wavenumber(1.0, eps, PERIOD),), (gaussian(amplitude=3.0),))
    with pytest.raises(ModulationBlowUp, match="blow-up"):
        solve_modulation(phases, eps, 1.0, 0.5, PERIOD, n_steps=64, cap=2.0)


def test_reference_kind_rules():
    coarse = [TorusGrid.from_mesh_size(-6, 12, h) for h in (0.1, 0.05, 0.025)]
    one, _ = _constant_phase(1e-3)
    assert resolve_reference_kind(one, 1e-3, coarse) == "oracle"
    one, _ = _constant_phase(1e-4)
    assert resolve_reference_kind(one, 1e-4, coarse) == "mfe"
    k = adjust_wavenumber(1.0, 3e-3, coarse[0])
    two = PhaseSet((k, -k), (gaussian(),) * 2)
    assert resolve_reference_kind(two, 3e-3, coarse) == "mfe"
    assert resolve_reference_kind(two, 3e-3, coarse, "oracle") == "oracle"


def test_oracle_and_mfe_agree_for_single_phase(tmp_path, monkeypatch):
    # one phase: the expansion is a_1 e_1 with no correction; both approach the same solution
    monkeypatch.setenv("OSCIDIFF_CACHE", str(tmp_path))
    eps = 0.01
    phases = PhaseSet((adjust_wavenumber(1.0, eps, PERIOD),), (gaussian(),))
    o = reference_field(phases, eps, 1.0, 0.5, [PERIOD], "oracle")[PERIOD.M]
    m = reference_field(phases, eps, 1.0, 0.5, [PERIOD], "mfe")[PERIOD.M]
    assert linf_error(o, m) < 5e-3
    assert len(list(tmp_path.iterdir())) == 1
    again = reference_field(phases, eps, 1.0, 0.5, [PERIOD], "oracle")[PERIOD.M]
    assert linf_error(o, again) == 0.0


@given(st.integers(1, 40), st.lists(st.floats(-1e3, 1e3), max_size=3),
       st.lists(st.integers(-2**40, 2**40), max_size=3), st.integers(0, 2**31))
def test_field_container_roundtrip(M, scalars, counts, seed):
    rng = np.random.default_rng(seed)
    g = TorusGrid(-1.5, 3.0, M)
    u = ComplexField(g, rng.normal(size=M) + 1j * rng.normal(size=M))
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "f.bin"
        write_field(p, u, scalars, counts)
        v, s, c = read_field(p)
    assert v.grid == g and np.array_equal(v.values, u.values)
    assert list(s) == scalars and list(c) == counts


def test_corrupt_cache_entry_is_recomputed(tmp_path, monkeypatch):
    monkeypatch.setenv("OSCIDIFF_CACHE", str(tmp_path))
    g = TorusGrid(0.0, 1.0, 4)
    calls = []

    def compute():
        calls.append(1)
        return ComplexField(g, np.arange(4) + 0j)

    cached({"a": 1}, compute)
    for f in tmp_path.iterdir():
        f.write_bytes(b"junk")
    u = cached({"a": 1}, compute)
    assert len(calls) == 2 and np.array_equal(u.values, np.arange(4))
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValueError, match="not a field container"):
        read_field(bad)


def test_standard_leapfrog_is_unweighted():
    eps = 0.1
    g = TorusGrid(-6.0, 12.0, 120)
    u0 = ComplexField(g, np.exp(-g.nodes**2) + 0j)
    u = standard_lf(u0, eps, 0.0, 0.001, 10)
    assert u.grid == g and np.all(np.isfinite(u.values))
