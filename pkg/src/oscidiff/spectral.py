"""DFT helpers, the Wiener norm, and per-mode linear stability of the weighted leapfrog."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from oscidiff.core import ComplexField, SchemeParams, TorusGrid, stencil_symbol


class UnstableModeError(ValueError):
    """Some Fourier mode has |mu_k| >= 1."""


def dft(u: ComplexField) -> np.ndarray:
    """Coefficients c_k with u(x) = sum_k c_k exp(2 pi i k (x - x_left) / L); c_0 is the mean."""
    return np.fft.fft(u.values) / u.grid.M


def idft(coeffs: np.ndarray, grid: TorusGrid) -> ComplexField:
    return ComplexField(grid, np.fft.ifft(np.asarray(coeffs) * grid.M))


def wiener_norm(u: ComplexField | np.ndarray) -> float:
    """l1 norm of the M discrete Fourier coefficients (the grid-truncated Wiener norm)."""
    values = u.values if isinstance(u, ComplexField) else np.asarray(u)
    if values.size == 0:
        return 0.0
    return float(np.sum(np.abs(np.fft.fft(values, axis=-1)), axis=-1) / values.shape[-1])


def gamma_of_beta(beta: float) -> float:
    return 1.0 + max(abs(beta), 1.0)


def gamma_sharp(beta: float) -> float:
    """Exact sup over theta of |cos(beta - theta) + beta sin(beta - theta) - 1|.

    This is 1 + sqrt(1 + beta^2), which exceeds gamma_of_beta(beta) for every
    beta != 0 (by at most a factor (1 + sqrt 2)/2 at |beta| = 1).
    """
    return 1.0 + float(np.hypot(1.0, beta))


def gamma_k(beta: float, k, h: float, length: float = 2 * np.pi):
    """gamma_k = cos(beta - k h) + beta sin(beta - k h) - 1 for mode index k.

    On a period ``length`` the mode k has angular wave number 2 pi k / length.
    """
    theta = 2 * np.pi * np.asarray(k) * h / length
    return 0.5 * stencil_symbol(beta, theta)


class StabilityResult(NamedTuple):
    stable: bool
    theta: float


def stability_check(params: SchemeParams, gamma=gamma_of_beta) -> StabilityResult:
    """Leapfrog step-size condition eps*tau < h^2/gamma; theta = eps*tau*gamma/h^2."""
    theta = params.epsilon * params.tau * gamma(params.beta) / params.h**2
    return StabilityResult(bool(theta < 1.0), float(theta))


def stability_check_ratio_form(params: SchemeParams) -> bool:
    """alpha / beta^2 < 1 / (2 gamma); meaningful for beta != 0."""
    return params.alpha / params.beta**2 < 1.0 / (2.0 * gamma_of_beta(params.beta))


@dataclass(frozen=True)
class ModeAnalysis:
    k: int
    gamma_k: float
    mu_k: float
    alpha: float
    lambda_plus: complex
    lambda_minus: complex
    cond_factors: tuple[float, float]

    @property
    def stable(self) -> bool:
        return abs(self.mu_k) < 1.0

    @property
    def G(self) -> np.ndarray:
        """One-step propagation matrix acting on (u^n_k, u^{n-1}_k)."""
        e = np.exp(-1j * self.alpha)
        return np.array([[2j * self.mu_k * e, e * e], [1.0, 0.0]])

    @property
    def P(self) -> np.ndarray:
        return np.array([[self.lambda_plus, self.lambda_minus], [1.0, 1.0]])

    @property
    def condition(self) -> float:
        return self.cond_factors[0] * self.cond_factors[1]


def _roots(mu, alpha):
    s = np.sqrt(np.asarray(1 - np.asarray(mu) ** 2, dtype=complex))
    e = np.exp(-1j * np.asarray(alpha))
    return (1j * mu + s) * e, (1j * mu - s) * e


def _cond_factors(mu):
    m = np.abs(mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(m < 1, 1 / np.sqrt(2 * np.maximum(1 - m, 0.0)), np.inf)
    return np.sqrt(2 * (1 + m)), inv


def mu_k(params: SchemeParams, k, length: float = 2 * np.pi):
    return params.epsilon * params.tau / params.h**2 * gamma_k(params.beta, k, params.h, length)


def amplification_matrix(params: SchemeParams, k: int, length: float = 2 * np.pi) -> ModeAnalysis:
    """Spectral data of the linear weighted-leapfrog propagation matrix for mode k.

    ``ModeAnalysis.stable`` is False when |mu_k| >= 1 (roots leave the unit circle).
    """
    g = float(gamma_k(params.beta, k, params.h, length))
    mu = params.epsilon * params.tau / params.h**2 * g
    lp, lm = _roots(mu, params.alpha)
    p, pinv = _cond_factors(mu)
    return ModeAnalysis(int(k), g, mu, params.alpha, complex(lp), complex(lm), (float(p), float(pinv)))


def analyze_modes(params: SchemeParams, grid: TorusGrid) -> list[ModeAnalysis]:
    ks = np.fft.fftfreq(grid.M, d=1.0 / grid.M).astype(int)
    return [amplification_matrix(params, k, grid.length) for k in ks]


def _grid_mu(params: SchemeParams, grid: TorusGrid) -> np.ndarray:
    theta = grid.wavenumbers * grid.h
    return params.epsilon * params.tau / params.h**2 * 0.5 * stencil_symbol(params.beta, theta)


def triple_norm(U: tuple[ComplexField, ComplexField], params: SchemeParams) -> float:
    """sum_k |P_k^{-1} (u^{n+1}_k, u^n_k)|_2, conserved by the linear weighted leapfrog."""
    upper, lower = U
    grid = upper.grid
    if lower.grid != grid:
        raise ValueError("grid mismatch")
    mu = _grid_mu(params, grid)
    if np.any(np.abs(mu) >= 1):
        raise UnstableModeError(f"unstable mode: max |mu_k| = {np.max(np.abs(mu)):.6g}")
    lp, lm = _roots(mu, params.alpha)
    y1, y2 = dft(upper), dft(lower)
    det = lp - lm
    z1 = (y1 - lm * y2) / det
    z2 = (-y1 + lp * y2) / det
    return float(np.sum(np.sqrt(np.abs(z1) ** 2 + np.abs(z2) ** 2)))


def pair_norm(U: tuple[ComplexField, ComplexField]) -> float:
    """Sum of the Wiener norms of the two levels."""
    return wiener_norm(U[0]) + wiener_norm(U[1])
