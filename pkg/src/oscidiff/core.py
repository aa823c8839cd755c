"""Grids, fields, scheme parameters and the shared weighted stencil."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Profile = Callable[[np.ndarray], np.ndarray]

# relative slack when deciding whether kappa*L/(2*pi*eps) is an integer
PERIODICITY_TOL = 1e-9


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid x_j = x_left + j*h, j = 0..M-1, h = L/M."""

    x_left: float
    length: float
    M: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"period must be positive, got {self.length}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"number of cells must be a positive integer, got {self.M}")

    @property
    def h(self) -> float:
        return self.length / self.M

    @property
    def nodes(self) -> np.ndarray:
        return self.x_left + self.h * np.arange(self.M)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wave numbers xi_k of the DFT modes, in numpy FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.h)

    def refine(self, factor: int) -> "TorusGrid":
        return TorusGrid(self.x_left, self.length, self.M * factor)

    @classmethod
    def from_mesh_size(cls, x_left: float, length: float, h: float) -> "TorusGrid":
        M = int(round(length / h))
        if abs(M * h - length) > 1e-9 * length:
            raise ValueError(f"h={h} does not divide the period {length}")
        return cls(x_left, length, M)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        if not self.T > 0 or self.N < 1:
            raise ValueError("need T > 0 and N >= 1")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @classmethod
    def from_step(cls, T: float, tau: float) -> "TimeGrid":
        """Smallest uniform grid on [0, T] whose step does not exceed tau."""
        N = max(1, math.ceil(T / tau - 1e-9))
        return cls(T, N)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Grid function: one complex value per node of ``grid``."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("field contains non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "ComplexField":
        return cls(grid, np.zeros(grid.M, dtype=complex))

    def shift(self, s: int) -> "ComplexField":
        """Field with values[j] -> values[j + s], indices taken modulo M."""
        return ComplexField(self.grid, np.roll(self.values, -s))

    def __add__(self, other: "ComplexField") -> "ComplexField":
        _check_same_grid(self, other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        _check_same_grid(self, other)
        return ComplexField(self.grid, self.values - other.values)


@dataclass(frozen=True)
class SchemeParams:
    """(eps, lam, kappa, tau, h); omega, alpha and beta are derived on access."""

    epsilon: float
    lam: float
    kappa: float
    tau: float
    h: float

    def __post_init__(self):
        if not 0 < self.epsilon:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.tau > 0 and self.h > 0):
            raise ValueError("tau and h must be positive")

    @property
    def omega(self) -> float:
        return 0.5 * self.kappa**2

    @property
    def alpha(self) -> float:
        return self.omega * self.tau / self.epsilon

    @property
    def beta(self) -> float:
        return self.kappa * self.h / self.epsilon

    @property
    def alpha_reduced(self) -> float:
        """alpha modulo 4 pi, formed in extended precision; used for the phase weights."""
        return float(phase_angle(0.5 * np.longdouble(self.kappa) ** 2, self.tau, self.epsilon))

    def with_tau(self, tau: float) -> "SchemeParams":
        return SchemeParams(self.epsilon, self.lam, self.kappa, tau, self.h)


@dataclass(frozen=True)
class PhaseSet:
    """Initial wave numbers with their profile functions."""

    kappas: tuple[float, ...]
    profiles: tuple[Profile, ...] = field(compare=False)

    def __post_init__(self):
        kappas = tuple(float(k) for k in self.kappas)
        if len(kappas) != len(self.profiles):
            raise ValueError("one profile per wave number is required")
        if any(k == 0 for k in kappas):
            raise ValueError("wave numbers must be nonzero")
        if len(set(kappas)) != len(kappas):
            raise ValueError("wave numbers must be pairwise distinct")
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "profiles", tuple(self.profiles))

    def __len__(self) -> int:
        return len(self.kappas)

    def adjusted(self, epsilon: float, grid: TorusGrid) -> "PhaseSet":
        return PhaseSet(
            tuple(adjust_wavenumber(k, epsilon, grid) for k in self.kappas), self.profiles
        )


def gaussian(center: float = 0.0, width: float = 1.0, amplitude: complex = 1.0) -> Profile:
    """amplitude * exp(-((x - center) / width)^2)"""

    def profile(x):
        return amplitude * np.exp(-(((np.asarray(x) - center) / width) ** 2))

    return profile


def constant(c: complex = 1.0) -> Profile:
    def profile(x):
        return np.full(np.shape(x), c, dtype=complex)

    return profile


def lattice_spacing(epsilon: float, grid: TorusGrid) -> float:
    """Spacing 2*pi*eps/L of the wave numbers whose carriers are L-periodic."""
    return 2 * np.pi * epsilon / grid.length


def lattice_index(kappa: float, epsilon: float, grid: TorusGrid) -> int:
    """Integer n with kappa = n * 2*pi*eps/L; raises if kappa is off the lattice."""
    q = kappa / lattice_spacing(epsilon, grid)
    n = round(q)
    if abs(q - n) > PERIODICITY_TOL * max(1.0, abs(q)):
        raise ValueError(
            f"non-periodic phase: kappa*L/(2*pi*eps) = {q!r} is not an integer"
        )
    return int(n)


def adjust_wavenumber(kappa: float, epsilon: float, grid: TorusGrid) -> float:
    """Nearest wave number whose carrier exp(i kappa x / eps) is grid-periodic."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = lattice_spacing(epsilon, grid)
    return d * round(kappa / d)


_TWO_PI = 8 * np.arctan(np.longdouble(1))


def phase_exp(kappa: float, x, omega: float, t: float, epsilon: float,
              k_over_eps=None) -> np.ndarray:
    """exp(i (kappa x - omega t) / eps) with the phase formed in extended precision.

    The phase reaches |x|/eps radians, so forming it in double precision would
    cost about |x|/eps ulps; it is reduced modulo 2 pi before the exponential.
    ``k_over_eps`` overrides kappa/eps (used for exact lattice wave numbers).
    """
    ld = np.longdouble
    k = ld(kappa) / ld(epsilon) if k_over_eps is None else k_over_eps
    ph = k * np.asarray(x, dtype=ld) - ld(omega) * ld(t) / ld(epsilon)
    return np.exp(1j * np.fmod(ph, _TWO_PI).astype(float))


def phase_angle(omega, tau: float, epsilon: float):
    """omega tau / eps reduced modulo 4 pi in extended precision.

    The angle exceeds T omega / (N eps), so in double precision every step
    would lose a few ulps of it. Reducing modulo 4 pi keeps exp(+-i a/2) intact.
    """
    ld = np.longdouble
    a = np.asarray(omega, dtype=ld) * ld(tau) / ld(epsilon)
    return np.fmod(a, 2 * _TWO_PI).astype(float)


def extended_nodes(grid: TorusGrid) -> np.ndarray:
    """Grid nodes x_left + j L / M in extended precision."""
    ld = np.longdouble
    return ld(grid.x_left) + ld(grid.length) * np.arange(grid.M, dtype=ld) / ld(grid.M)


def make_initial_data(phases: PhaseSet, epsilon: float, grid: TorusGrid) -> ComplexField:
    x = grid.nodes
    u = np.zeros(grid.M, dtype=complex)
    for kappa, profile in zip(phases.kappas, phases.profiles):
        lattice_index(kappa, epsilon, grid)
        u += np.asarray(profile(x), dtype=complex) * carrier(grid, kappa, 0.0, epsilon, 0.0)
    return ComplexField(grid, u)


def carrier(grid: TorusGrid, kappa: float, omega: float, epsilon: float, t: float) -> np.ndarray:
    """exp(i (kappa x_j - omega t) / eps) on the grid nodes.

    A wave number on the periodic lattice enters as 2 pi n / L exactly, so the
    carrier is periodic to rounding in the last place.
    """
    q = kappa / lattice_spacing(epsilon, grid)
    k_over_eps = None
    if abs(q - round(q)) <= PERIODICITY_TOL * max(1.0, abs(q)):
        k_over_eps = _TWO_PI * round(q) / np.longdouble(grid.length)
    return phase_exp(kappa, extended_nodes(grid), omega, t, epsilon, k_over_eps)


def demodulate(u: ComplexField, params: SchemeParams, t: float) -> ComplexField:
    """Profile values a_j = u_j exp(-i (kappa x_j - omega t) / eps)."""
    c = carrier(u.grid, params.kappa, params.omega, params.epsilon, t)
    return ComplexField(u.grid, u.values * np.conj(c))


def modulate(a: ComplexField, params: SchemeParams, t: float) -> ComplexField:
    c = carrier(a.grid, params.kappa, params.omega, params.epsilon, t)
    return ComplexField(a.grid, a.values * c)


def _check_same_grid(u: ComplexField, v: ComplexField) -> None:
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")


def linf_error(u: ComplexField, v: ComplexField) -> float:
    _check_same_grid(u, v)
    return float(np.max(np.abs(u.values - v.values))) if u.grid.M else 0.0


def weighted_second_difference(u: np.ndarray, beta) -> np.ndarray:
    """e^{-i beta}(1+i beta) u_{j+1} - 2 u_j + e^{i beta}(1-i beta) u_{j-1}.

    Periodic in the last axis; ``beta`` broadcasts against the leading axes.
    """
    beta = np.asarray(beta)
    if beta.ndim:
        beta = beta[..., None]
    cp = np.exp(-1j * beta) * (1 + 1j * beta)
    cm = np.exp(1j * beta) * (1 - 1j * beta)
    return cp * np.roll(u, -1, axis=-1) - 2 * u + cm * np.roll(u, 1, axis=-1)


def stencil_symbol(beta, theta) -> np.ndarray:
    """Fourier symbol of ``weighted_second_difference`` at phase theta = xi*h.

    Equals 2*gamma_k with gamma_k = cos(beta - theta) + beta sin(beta - theta) - 1.
    """
    phi = np.asarray(beta) - np.asarray(theta)
    return 2 * (np.cos(phi) + np.asarray(beta) * np.sin(phi) - 1)


def trig_interpolate(values: np.ndarray, grid: TorusGrid, x: Sequence[float] | np.ndarray,
                     chunk: int = 4096) -> np.ndarray:
    """Evaluate the trigonometric interpolant of grid ``values`` at points ``x``.

    The Nyquist mode of an even-length grid is split symmetrically so real data
    interpolate to real values.
    """
    x = np.asarray(x, dtype=float)
    M = grid.M
    coeffs = np.fft.fft(values) / M
    xi = grid.wavenumbers
    if M % 2 == 0:
        nyq = M // 2
        coeffs = np.concatenate([coeffs, [0.5 * coeffs[nyq]]])
        coeffs[nyq] *= 0.5
        xi = np.concatenate([xi, [-xi[nyq]]])
    out = np.empty(x.shape, dtype=complex)
    flat_x = x.ravel()
    flat_out = out.reshape(-1)
    for s in range(0, flat_x.size, chunk):
        xs = flat_x[s : s + chunk] - grid.x_left
        flat_out[s : s + chunk] = np.exp(1j * np.outer(xs, xi)) @ coeffs
    return out


def interpolate_solution(u: ComplexField, params: SchemeParams, t: float, x) -> np.ndarray:
    """Values of a single-phase solution between grid points.

    The smooth profile is interpolated and the fast carrier re-applied exactly.
    """
    a = demodulate(u, params, t)
    x = np.asarray(x, dtype=float)
    phase = phase_exp(params.kappa, x, params.omega, t, params.epsilon)
    return trig_interpolate(a.values, u.grid, x) * phase
