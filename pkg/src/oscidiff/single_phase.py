"""Single-phase weighted leapfrog and weighted Crank-Nicolson steppers."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from oscidiff.core import (
    ComplexField,
    SchemeParams,
    TorusGrid,
    carrier,
    stencil_symbol,
    weighted_second_difference,
)
from oscidiff.spectral import stability_check


class StabilityError(ValueError):
    """The leapfrog step-size condition eps*tau < h^2/gamma(beta) is violated."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration of an implicit step did not converge."""


def lf_update(u_prev, u_curr, alpha, beta, epsilon, tau, h, g):
    """Explicit weighted leapfrog update.

    ``g`` is the nonlinear right-hand side divided by eps (lam |u|^2 u for one
    phase). ``alpha``/``beta`` broadcast over leading axes of stacked components.
    """
    ea = np.exp(-1j * np.asarray(alpha))
    if ea.ndim:
        ea = ea[..., None]
    lap = weighted_second_difference(u_curr, beta)
    return ea * (ea * u_prev + (1j * tau * epsilon / h**2) * lap - 2j * tau * g)


def euler_update(u0, alpha, beta, epsilon, tau, h, g):
    """Weighted explicit Euler step used to start the leapfrog."""
    ea = np.exp(-1j * np.asarray(alpha))
    if ea.ndim:
        ea = ea[..., None]
    lap = weighted_second_difference(u0, beta)
    return ea * (u0 + (0.5j * tau * epsilon / h**2) * lap - 1j * tau * g)


def cn_mode_factor(beta, grid: TorusGrid, epsilon: float, tau: float) -> np.ndarray:
    """c_k = eps tau gamma_k / (2 h^2) for every DFT mode (numpy FFT order)."""
    theta = grid.wavenumbers * grid.h
    beta = np.asarray(beta)
    if beta.ndim:
        beta = beta[..., None]
    gk = 0.5 * stencil_symbol(beta, theta)
    return epsilon * tau * gk / (2 * grid.h**2)


def cn_solve(V: np.ndarray, c: np.ndarray, tau: float, g: np.ndarray) -> np.ndarray:
    """Solve (1 - i c) W_k = (1 + i c) V_k - i tau g_k mode by mode.

    V, W are phase-shifted levels; g is the (averaged) right-hand side over eps.
    """
    Vh = np.fft.fft(V, axis=-1)
    gh = np.fft.fft(g, axis=-1)
    Wh = ((1 + 1j * c) * Vh - 1j * tau * gh) / (1 - 1j * c)
    return np.fft.ifft(Wh, axis=-1)


@dataclass(frozen=True)
class LeapfrogState:
    u_prev: ComplexField
    u_curr: ComplexField
    n: int
    params: SchemeParams

    def __post_init__(self):
        if self.u_prev.grid != self.u_curr.grid:
            raise ValueError("both levels must live on the same grid")
        if abs(self.u_curr.grid.h - self.params.h) > 1e-12 * self.params.h:
            raise ValueError("params.h does not match the grid")
        ok, theta = stability_check(self.params)
        if not ok:
            raise StabilityError(f"weighted leapfrog unstable: theta = {theta:.4g} >= 1")


def wlf_step(state: LeapfrogState) -> ComplexField:
    p = state.params
    u = state.u_curr.values
    g = p.lam * np.abs(u) ** 2 * u
    new = lf_update(state.u_prev.values, u, p.alpha_reduced, p.beta, p.epsilon, p.tau, p.h, g)
    return ComplexField(state.u_curr.grid, new)


def wlf_start(u0: ComplexField, params: SchemeParams) -> ComplexField:
    u = u0.values
    g = params.lam * np.abs(u) ** 2 * u
    new = euler_update(u, params.alpha_reduced, params.beta, params.epsilon, params.tau, params.h, g)
    return ComplexField(u0.grid, new)


def advance_wlf(state: LeapfrogState) -> LeapfrogState:
    return LeapfrogState(state.u_curr, wlf_step(state), state.n + 1, state.params)


def run_wlf(u0: ComplexField, params: SchemeParams, n_steps: int,
            callback: Callable[[LeapfrogState], None] | None = None) -> ComplexField:
    """Integrate n_steps weighted leapfrog steps from u0 (Euler start-up)."""
    if n_steps == 0:
        return u0
    state = LeapfrogState(u0, wlf_start(u0, params), 1, params)
    if callback:
        callback(state)
    while state.n < n_steps:
        state = advance_wlf(state)
        if callback:
            callback(state)
    return state.u_curr


@dataclass(frozen=True)
class CnState:
    u_curr: ComplexField
    n: int
    params: SchemeParams
    fp_tol: float = 1e-12
    fp_maxit: int = 50

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")


def wcn_step(state: CnState) -> ComplexField:
    """One weighted Crank-Nicolson step of length tau.

    The two-level formula is used with tau -> tau/2, so the phase weight is
    exp(+-i alpha/2). The nonlinearity is resolved by Picard iteration with
    |u^{n+1}|^2 frozen at the previous iterate; each linear solve is exact in
    Fourier space.
    """
    p = state.params
    grid = state.u_curr.grid
    half = 0.5 * p.alpha_reduced
    eh = np.exp(1j * half)
    u = state.u_curr.values
    V = u / eh
    c = cn_mode_factor(p.beta, grid, p.epsilon, p.tau)
    abs_u2 = np.abs(u) ** 2
    W = u * eh
    for _ in range(state.fp_maxit):
        g = p.lam * 0.25 * (abs_u2 + np.abs(W) ** 2) * (W + V)
        W_new = cn_solve(V, c, p.tau, g)
        diff = np.max(np.abs(W_new - W))
        W = W_new
        if diff <= state.fp_tol:
            return ComplexField(grid, W / eh)
    raise ConvergenceError(
        f"fixed-point non-convergence after {state.fp_maxit} iterations (last change {diff:.3g})"
    )


def run_wcn(u0: ComplexField, params: SchemeParams, n_steps: int, fp_tol: float = 1e-12,
            fp_maxit: int = 50, callback: Callable[[CnState], None] | None = None) -> ComplexField:
    state = CnState(u0, 0, params, fp_tol, fp_maxit)
    while state.n < n_steps:
        state = replace(state, u_curr=wcn_step(state), n=state.n + 1)
        if callback:
            callback(state)
    return state.u_curr


def compute_defect(a_exact: Callable[[float, np.ndarray], np.ndarray], params: SchemeParams,
                   t: float, grid: TorusGrid) -> ComplexField:
    """Residual of the weighted leapfrog scheme for u = a exp(i(kappa x - omega t)/eps).

    ``a_exact(t, x)`` returns the profile at time t on the points x.
    """
    if abs(grid.h - params.h) > 1e-12 * params.h:
        raise ValueError("params.h does not match the grid")
    eps, k, w = params.epsilon, params.kappa, params.omega
    x = grid.nodes

    def u(s):
        return np.asarray(a_exact(s, x), dtype=complex) * carrier(grid, k, w, eps, s)

    ea = np.exp(1j * params.alpha_reduced)
    un = u(t)
    d = (1j * eps * (ea * u(t + params.tau) - u(t - params.tau) / ea) / (2 * params.tau)
         + 0.5 * eps**2 * weighted_second_difference(un, params.beta) / params.h**2
         - eps * params.lam * np.abs(un) ** 2 * un)
    return ComplexField(grid, d)


def constant_profile_solution(c: complex, lam: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """Profile a(t, x) = c exp(-i lam |c|^2 t) of the exact solution from constant data."""

    def a(t, x):
        return np.full(np.shape(x), c * np.exp(-1j * lam * abs(c) ** 2 * t), dtype=complex)

    return a


def modulation_leapfrog(a0: np.ndarray, kappa: float, epsilon: float, lam: float, tau: float,
                        h: float, n_steps: int) -> np.ndarray:
    """Standard (unweighted) leapfrog with central differences for the profile equation

        a_t + kappa a_x - (i eps / 2) a_xx = -i lam |a|^2 a,

    started with one explicit Euler step.
    """

    def rate(a):
        ap, am = np.roll(a, -1), np.roll(a, 1)
        return (-kappa * (ap - am) / (2 * h) + 0.5j * epsilon * (ap - 2 * a + am) / h**2
                - 1j * lam * np.abs(a) ** 2 * a)

    prev = np.asarray(a0, dtype=complex)
    if n_steps == 0:
        return prev
    curr = prev + tau * rate(prev)
    for _ in range(n_steps - 1):
        prev, curr = curr, prev + 2 * tau * rate(curr)
    return curr
