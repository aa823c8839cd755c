"""Reference solutions.

* ``solve_modulation``: the modulation system of the modulated Fourier
  expansion on a coarse spectral grid, integrated with the Lawson (integrating
  factor) fourth-order Runge-Kutta method.
* ``assemble_mfe``: the expansion sampled on a target grid.
* ``splitstep_oracle``: a fine-grid Fourier split-step solver for the full
  equation, fourth order by triple-jump composition of Strang steps.
* a small binary cache for expensive reference fields.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from oscidiff.core import (
    ComplexField,
    PhaseSet,
    SchemeParams,
    TorusGrid,
    carrier,
    make_initial_data,
    trig_interpolate,
)
from oscidiff.multiphase import PhaseStructure
from oscidiff.single_phase import run_wcn, run_wlf

M_MOD = 256
MOD_STEPS = 2048
BLOWUP_CAP = 1e3
ORACLE_TOL = 1e-8
MAX_FINE = 2**20
# below this eps the expansion (error O(eps^2)) is used instead of the oracle
ORACLE_EPS_MIN = 2e-4
# with nonresonant corrections the oracle must resolve the detuning frequency
# |delta|/eps in time, so its cost grows like eps^-2; the expansion takes over below this
ORACLE_EPS_MIN_MULTI = 1e-2


class ModulationBlowUp(FloatingPointError):
    """A modulation function exceeded the configured cap."""


class OracleError(RuntimeError):
    """The split-step oracle could not reach its self-convergence target."""


# ---------------------------------------------------------------------------
# modulation system


def _lawson_rk4(y, dt, n_steps, symbol, rhs, cap):
    """Integrating-factor RK4 for y' = L y + N(y), L diagonal in Fourier space.

    ``y`` has shape (components, M); ``symbol`` has the same shape.
    """
    E = np.exp(symbol * dt)
    E2 = np.exp(symbol * dt / 2)

    def lin(v, f):
        return np.fft.ifft(f * np.fft.fft(v, axis=-1), axis=-1)

    for _ in range(n_steps):
        k1 = rhs(y)
        y2 = lin(y + 0.5 * dt * k1, E2)
        k2 = rhs(y2)
        ey = lin(y, E2)
        y3 = ey + 0.5 * dt * k2
        k3 = rhs(y3)
        y4 = lin(ey, E2) + dt * lin(k3, E2)
        k4 = rhs(y4)
        y = lin(y + dt / 6 * k1, E) + dt / 3 * lin(k2 + k3, E2) + dt / 6 * k4
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > cap:
            raise ModulationBlowUp(f"modulation blow-up: max |a| exceeds {cap:g}")
    return y


def _integrate(y0, times, n_steps, T, symbol, rhs, cap):
    """Snapshots of the Lawson RK4 solution at ``times`` (step about T/n_steps)."""
    dt_target = T / n_steps
    out, t, y = [], 0.0, y0
    for t_next in times:
        if t_next < t - 1e-14:
            raise ValueError("snapshot times must be increasing")
        span = t_next - t
        m = max(1, math.ceil(span / dt_target - 1e-9)) if span > 0 else 0
        if m:
            y = _lawson_rk4(y, span / m, m, symbol, rhs, cap)
        out.append(y.copy())
        t = t_next
    return np.array(out)


@dataclass(frozen=True, eq=False)
class ModulationSolution:
    """Profiles a_r and b*_nu on a coarse grid at the stored times."""

    grid: TorusGrid
    times: np.ndarray
    a: np.ndarray  # (times, R, M)
    bstar: np.ndarray  # (times, |N|, M)
    structure: PhaseStructure
    epsilon: float
    lam: float

    def index(self, t: float) -> int:
        if t > self.times[-1] + 1e-12:
            raise ValueError(f"t = {t} lies beyond the solved range [0, {self.times[-1]}]")
        hits = np.nonzero(np.abs(self.times - t) <= 1e-12)[0]
        if not hits.size:
            raise ValueError(f"t = {t} is not a stored time")
        return int(hits[0])

    def b(self, t: float) -> np.ndarray:
        """b_nu = a_i conj(a_j) a_k / delta_nu at time t."""
        a = self.a[self.index(t)]
        ps = self.structure
        out = np.zeros((len(ps.nus), self.grid.M), dtype=complex)
        for s, (i, j, k) in enumerate(ps.nus):
            out[s] = a[i] * np.conj(a[j]) * a[k] / ps.delta[s]
        return out


def modulation_rhs(structure: PhaseStructure, epsilon: float, lam: float) -> Callable:
    """Nonlinear part of the modulation system on the stacked (a, b*) array."""
    ps = structure
    R, nn = ps.R, len(ps.nus)
    el2 = epsilon * lam * lam

    def rhs(y):
        a, bs = y[:R], y[R:]
        out = np.zeros_like(y)
        b = [a[i] * np.conj(a[j]) * a[k] / ps.delta[s] for s, (i, j, k) in enumerate(ps.nus)]
        for r, k, l, m in ps.terms.cubic:
            out[r] += -1j * lam * a[k] * np.conj(a[l]) * a[m]
        for r, s, p, q in ps.terms.w_a:
            out[r] += -2j * el2 * b[s] * np.conj(a[p]) * a[q]
        for r, p, s, q in ps.terms.w_b:
            out[r] += -1j * el2 * a[p] * np.conj(b[s]) * a[q]
        if nn:
            mass = np.sum(np.abs(a) ** 2, axis=0)
            out[R:] = -2j * lam * mass * bs
        return out

    return rhs


def solve_modulation(phases: PhaseSet, epsilon: float, lam: float, T: float,
                     period: TorusGrid, times: Sequence[float] | None = None,
                     M_mod: int = M_MOD, n_steps: int = MOD_STEPS,
                     cap: float = BLOWUP_CAP) -> ModulationSolution:
    """Solve the modulation system for the profiles of ``phases``.

    ``period`` fixes the spatial period (its M is irrelevant); wave numbers
    must lie on the periodicity lattice for ``epsilon``.
    """
    ps = PhaseStructure.build(phases, epsilon, period)
    grid = TorusGrid(period.x_left, period.length, M_mod)
    x = grid.nodes
    R, nn = ps.R, len(ps.nus)
    a0 = np.zeros((R, M_mod), dtype=complex)
    for r, profile in enumerate(phases.profiles):
        a0[r] = np.asarray(profile(x), dtype=complex)
    bs0 = np.array([-a0[i] * np.conj(a0[j]) * a0[k] / ps.delta[s]
                    for s, (i, j, k) in enumerate(ps.nus)]).reshape(nn, M_mod)
    y0 = np.concatenate([a0, bs0])
    xi = grid.wavenumbers
    kap = np.concatenate([ps.kappas, ps.kappa_nu])[:, None]
    symbol = -1j * kap * xi[None, :] - 0.5j * epsilon * xi[None, :] ** 2
    times = [T] if times is None else sorted(times)
    if times[-1] > T + 1e-12:
        raise ValueError("snapshot times beyond T")
    snaps = _integrate(y0, [0.0] + [t for t in times if t > 0], n_steps, T, symbol,
                       modulation_rhs(ps, epsilon, lam), cap)
    all_times = np.array([0.0] + [t for t in times if t > 0])
    return ModulationSolution(grid, all_times, snaps[:, :R], snaps[:, R:], ps, epsilon, lam)


def solve_two_phase_modulation(a0: Callable, kappa: float, epsilon: float, lam: float, T: float,
                               period: TorusGrid, M_mod: int = M_MOD,
                               n_steps: int = MOD_STEPS) -> np.ndarray:
    """Dedicated solver for two opposite phases +-kappa sharing the profile a0.

    Returns (a_1, a_-1, b*_3, b*_-3) at time T on the coarse grid; written out
    term by term, independently of the general index machinery.
    """
    grid = TorusGrid(period.x_left, period.length, M_mod)
    x, xi = grid.nodes, grid.wavenumbers
    d3 = -4 * kappa**2
    p = np.asarray(a0(x), dtype=complex)
    y0 = np.array([p, p, -p * np.conj(p) * p / d3, -p * np.conj(p) * p / d3])
    kap = np.array([kappa, -kappa, 3 * kappa, -3 * kappa])[:, None]
    symbol = -1j * kap * xi - 0.5j * epsilon * xi**2

    def rhs(y):
        a1, am, s3, sm3 = y
        b3 = a1 * np.conj(am) * a1 / d3
        bm3 = am * np.conj(a1) * am / d3
        m1, mm = np.abs(a1) ** 2, np.abs(am) ** 2
        f1 = -1j * lam * ((m1 + 2 * mm) * a1
                          + epsilon * lam * (2 * am * np.conj(a1) * b3 + am * np.conj(bm3) * am))
        fm = -1j * lam * ((mm + 2 * m1) * am
                          + epsilon * lam * (2 * a1 * np.conj(am) * bm3 + a1 * np.conj(b3) * a1))
        return np.array([f1, fm, -2j * lam * (m1 + mm) * s3, -2j * lam * (m1 + mm) * sm3])

    return _integrate(y0, [T], n_steps, T, symbol, rhs, BLOWUP_CAP)[-1]


def assemble_mfe(ms: ModulationSolution, t: float, grid: TorusGrid) -> ComplexField:
    """u_MFE(t) = sum_r a_r e_r + eps lam sum_nu (b*_nu e*_nu + b_nu e_nu) on ``grid``."""
    if grid.length != ms.grid.length or grid.x_left != ms.grid.x_left:
        raise ValueError("target grid has a different period")
    idx = ms.index(t)
    ps, eps = ms.structure, ms.epsilon
    x = grid.nodes
    u = np.zeros(grid.M, dtype=complex)
    for r in range(ps.R):
        u += trig_interpolate(ms.a[idx, r], ms.grid, x) * carrier(
            grid, ps.kappas[r], ps.omegas[r], eps, t)
    if ps.nus:
        b = ms.b(t)
        for s in range(len(ps.nus)):
            u += eps * ms.lam * (
                trig_interpolate(ms.bstar[idx, s], ms.grid, x)
                * carrier(grid, ps.kappa_nu[s], ps.omega_star[s], eps, t)
                + trig_interpolate(b[s], ms.grid, x)
                * carrier(grid, ps.kappa_nu[s], ps.omega_nu[s], eps, t))
    return ComplexField(grid, u)


# ---------------------------------------------------------------------------
# split-step oracle

_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


def splitstep_oracle(u0: ComplexField, epsilon: float, lam: float, T: float,
                     n_steps: int) -> ComplexField:
    """Split-step Fourier solution of i eps u_t + eps^2/2 u_xx = eps lam |u|^2 u.

    Each step composes three Strang steps (w1, w0, w1) tau; both flows are
    solved exactly, the nonlinear one as u -> u exp(-i lam |u|^2 s).
    """
    grid = u0.grid
    if grid.h > epsilon / 8 * (1 + 1e-12):
        raise ValueError(f"unresolved grid: h = {grid.h:.3g} > eps/8 = {epsilon / 8:.3g}")
    tau = T / n_steps
    xi = grid.wavenumbers
    L1 = np.exp(-0.5j * epsilon * xi**2 * _W1 * tau)
    L0 = np.exp(-0.5j * epsilon * xi**2 * _W0 * tau)
    mid = 0.5 * (_W1 + _W0) * tau

    def nl(u, s):
        return u * np.exp(-1j * lam * s * (u.real**2 + u.imag**2))

    def lin(u, f):
        return np.fft.ifft(f * np.fft.fft(u))

    # neighbouring nonlinear half steps are merged (|u| is invariant under them)
    u = nl(u0.values, 0.5 * _W1 * tau)
    for step in range(n_steps):
        u = lin(u, L1)
        u = nl(u, mid)
        u = lin(u, L0)
        u = nl(u, mid)
        u = lin(u, L1)
        u = nl(u, _W1 * tau if step < n_steps - 1 else 0.5 * _W1 * tau)
    return ComplexField(grid, u)


def fine_grid(coarse: Sequence[TorusGrid], epsilon: float, max_nodes: int = MAX_FINE) -> TorusGrid:
    """Smallest grid M_base * 2^p with h <= min(eps/8, h_coarse/4) whose nodes
    contain every coarse grid's nodes."""
    g0 = coarse[0]
    if any(g.length != g0.length or g.x_left != g0.x_left for g in coarse):
        raise ValueError("coarse grids must share the period")
    base = math.lcm(*(g.M for g in coarse))
    h_req = min(epsilon / 8, min(g.h for g in coarse) / 4)
    M = base
    while g0.length / M > h_req * (1 + 1e-12):
        M *= 2
    if M > max_nodes:
        raise ValueError(f"unresolved grid: oracle would need {M} > {max_nodes} nodes")
    return TorusGrid(g0.x_left, g0.length, M)


def restrict(u: ComplexField, grid: TorusGrid) -> ComplexField:
    """Samples of a fine-grid field at the nodes of a coarser nested grid."""
    if u.grid.M % grid.M or u.grid.length != grid.length or u.grid.x_left != grid.x_left:
        raise ValueError("grids are not nested")
    return ComplexField(grid, u.values[:: u.grid.M // grid.M])


def oracle_solution(u0: ComplexField, epsilon: float, lam: float, T: float,
                    n_start: int = 16, tol: float = ORACLE_TOL,
                    max_steps: int = 4096) -> tuple[ComplexField, int]:
    """Split-step solution with step halving until successive results agree to ``tol``.

    Returns the finer of the last two solutions and its step count.
    """
    n = n_start
    prev = splitstep_oracle(u0, epsilon, lam, T, n)
    while n < max_steps:
        n *= 2
        cur = splitstep_oracle(u0, epsilon, lam, T, n)
        if np.max(np.abs(cur.values - prev.values)) < tol:
            return cur, n
        prev = cur
    raise OracleError(f"self-convergence failure: step halving above {tol:g} at {n} steps")


# ---------------------------------------------------------------------------
# standard (unweighted) finite differences


def standard_lf(u0: ComplexField, epsilon: float, lam: float, tau: float, n_steps: int) -> ComplexField:
    """Classical leapfrog with the plain second difference (alpha = beta = 0)."""
    return run_wlf(u0, SchemeParams(epsilon, lam, 0.0, tau, u0.grid.h), n_steps)


def standard_cn(u0: ComplexField, epsilon: float, lam: float, tau: float, n_steps: int) -> ComplexField:
    return run_wcn(u0, SchemeParams(epsilon, lam, 0.0, tau, u0.grid.h), n_steps)


# ---------------------------------------------------------------------------
# cache

_MAGIC = b"OSCD"
_VERSION = 1


def cache_dir() -> Path | None:
    d = os.environ.get("OSCIDIFF_CACHE")
    return Path(d) if d else None


def cache_key(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:32]


def write_field(path: Path, u: ComplexField, scalars: Sequence[float] = (),
                counts: Sequence[int] = ()) -> None:
    """Little-endian container: magic, version, two counts, the grid as doubles
    and M, extra scalars and counts, then interleaved re/im values."""
    g = u.grid
    doubles = np.array([g.x_left, g.length, *scalars], dtype="<f8")
    ints = np.array([g.M, *counts], dtype="<i8")
    data = np.empty(2 * g.M, dtype="<f8")
    data[0::2], data[1::2] = u.values.real, u.values.imag
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as f:
        f.write(_MAGIC + struct.pack("<Iqq", _VERSION, doubles.size, ints.size))
        f.write(doubles.tobytes() + ints.tobytes() + data.tobytes())
    os.replace(tmp, path)


def read_field(path: Path) -> tuple[ComplexField, np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError("not a field container")
    version, nd, ni = struct.unpack_from("<Iqq", raw, 4)
    if version != _VERSION:
        raise ValueError(f"unsupported container version {version}")
    off = 4 + struct.calcsize("<Iqq")
    doubles = np.frombuffer(raw, "<f8", nd, off)
    off += 8 * nd
    ints = np.frombuffer(raw, "<i8", ni, off)
    off += 8 * ni
    M = int(ints[0])
    data = np.frombuffer(raw, "<f8", 2 * M, off)
    grid = TorusGrid(float(doubles[0]), float(doubles[1]), M)
    return ComplexField(grid, data[0::2] + 1j * data[1::2]), doubles[2:], ints[1:]


def cached(key_payload: dict, compute: Callable[[], ComplexField]) -> ComplexField:
    """Return the cached field for ``key_payload`` or compute and store it."""
    d = cache_dir()
    if d is None:
        return compute()
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{cache_key(key_payload)}.bin"
    if path.exists():
        try:
            return read_field(path)[0]
        except (ValueError, OSError):
            pass
    u = compute()
    write_field(path, u)
    return u


def resolve_reference_kind(phases: PhaseSet, epsilon: float, coarse: Sequence[TorusGrid],
                           kind: str = "auto") -> str:
    """Concrete reference kind ("oracle" or "mfe") that "auto" stands for."""
    if kind != "auto":
        return kind
    multi = bool(PhaseStructure.build(phases, epsilon, coarse[0]).nus)
    if epsilon >= (ORACLE_EPS_MIN_MULTI if multi else ORACLE_EPS_MIN):
        try:
            fine_grid(coarse, epsilon)
            return "oracle"
        except ValueError:
            pass
    return "mfe"


def reference_field(phases: PhaseSet, epsilon: float, lam: float, T: float,
                    coarse: Sequence[TorusGrid], kind: str = "auto") -> dict[int, ComplexField]:
    """Reference solution at time T restricted to each coarse grid (keyed by M).

    ``kind`` is "oracle", "mfe" or "auto" (oracle for eps >= ORACLE_EPS_MIN,
    or ORACLE_EPS_MIN_MULTI when nonresonant triples exist, provided its fine
    grid fits; else the modulated Fourier expansion).
    """
    multi = bool(PhaseStructure.build(phases, epsilon, coarse[0]).nus)
    kind = resolve_reference_kind(phases, epsilon, coarse, kind)
    g0 = coarse[0]
    key = {"kind": kind, "eps": epsilon, "lam": lam, "T": T, "kappas": phases.kappas,
           "x_left": g0.x_left, "L": g0.length, "profiles": _profile_tag(phases),
           "tol": ORACLE_TOL, "rev": 2}
    out = {}
    if kind == "oracle":
        fg = fine_grid(coarse, epsilon)
        key["M_fine"] = fg.M
        # detuned corrections oscillate on time scales of order eps
        n_start = max(16, 2 ** math.ceil(math.log2(T / epsilon))) if multi else 16
        u = cached(key, lambda: oracle_solution(make_initial_data(phases, epsilon, fg),
                                                epsilon, lam, T, n_start=n_start)[0])
        for g in coarse:
            out[g.M] = restrict(u, g)
        return out
    if kind != "mfe":
        raise ValueError(f"unknown reference kind {kind!r}")
    ms = solve_modulation(phases, epsilon, lam, T, g0)
    for g in coarse:
        out[g.M] = assemble_mfe(ms, T, g)
    return out


def _profile_tag(phases: PhaseSet) -> list:
    """Identify profiles by their samples on a fixed probe set."""
    probe = np.linspace(-3.0, 3.0, 13)
    return [np.round(np.asarray(p(probe), dtype=complex).view(float), 15).tolist()
            for p in phases.profiles]
