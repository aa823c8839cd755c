"""Multiphase weighted schemes: the two-phase case variants and the general
extended leapfrog / Crank-Nicolson methods with the switching function chi.

Every wave number is handled through its integer lattice index n with
kappa = n * 2 pi eps / L, so the resonance bookkeeping is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from oscidiff.core import (
    ComplexField,
    PhaseSet,
    TorusGrid,
    adjust_wavenumber,
    carrier,
    gaussian,
    lattice_index,
    lattice_spacing,
    phase_angle,
    weighted_second_difference,
)
from oscidiff.resonance import ResonanceStructure, check_nonresonance, saturate
from oscidiff.single_phase import (
    ConvergenceError,
    StabilityError,
    cn_mode_factor,
    cn_solve,
    euler_update,
    lf_update,
)
from oscidiff.spectral import gamma_of_beta

CASES = ("case0", "case1", "case2", "case3", "extended")


def chi_switch(h: float, epsilon: float, c: float = 5.0) -> int:
    """1 if h^2 <= c eps^5, else 0."""
    if not c > 0:
        raise ValueError("c must be positive")
    return int(h * h <= c * epsilon**5)


def dlf_apply(u_prev, u_curr, u_next, alpha, beta, epsilon, tau, h) -> np.ndarray:
    """Weighted leapfrog difference operator evaluated at the middle level."""
    ea = np.exp(1j * np.asarray(alpha))
    if ea.ndim:
        ea = ea[..., None]
    return (1j * epsilon * (ea * u_next - u_prev / ea) / (2 * tau)
            + 0.5 * epsilon**2 * weighted_second_difference(u_curr, beta) / h**2)


@dataclass(frozen=True)
class TermIndex:
    """Index lists of the nonlinear terms, in the order they are summed.

    cubic:  (r, k, l, m)    u_k conj(u_l) u_m, resonant with kappa sum kappa_r
    chi:    (r, k, l)       u_k conj(u_l) u_r for (k, l, r) in N
    w_a:    (r, nu, p, q)   2 w_nu conj(u_p) u_q
    w_b:    (r, p, nu, q)   u_p conj(w_nu) u_q
    """

    cubic: tuple
    chi: tuple
    w_a: tuple
    w_b: tuple


def build_terms(n: Sequence[int], rs: ResonanceStructure) -> TermIndex:
    """Enumerate the term sets for integer wave numbers ``n`` (all of K) and N.

    Frequencies are compared through 2 omega = n^2; a term enters only if its
    wave number matches kappa_r and its frequency matches omega_r.
    """
    n = [int(v) for v in n]
    R = len(n)
    S = [v * v for v in n]
    nus = [t.nu for t in rs.N]
    n_nu = [n[i] - n[j] + n[k] for i, j, k in nus]
    S_nu = [S[i] - S[j] + S[k] for i, j, k in nus]
    cubic, chi, w_a, w_b = [], [], [], []
    for r in range(R):
        for k in range(R):
            for l in range(R):
                for m in range(R):
                    if n[k] - n[l] + n[m] == n[r] and S[k] - S[l] + S[m] == S[r]:
                        cubic.append((r, k, l, m))
        for k, l, m in nus:
            if m == r:
                chi.append((r, k, l))
        for a in range(len(nus)):
            for p in range(R):
                for q in range(R):
                    if n_nu[a] - n[p] + n[q] == n[r] and S_nu[a] - S[p] + S[q] == S[r]:
                        w_a.append((r, a, p, q))
        for p in range(R):
            for a in range(len(nus)):
                for q in range(R):
                    if n[p] - n_nu[a] + n[q] == n[r] and S[p] - S_nu[a] + S[q] == S[r]:
                        w_b.append((r, p, a, q))
    return TermIndex(tuple(cubic), tuple(chi), tuple(w_a), tuple(w_b))


@dataclass(frozen=True, eq=False)
class PhaseStructure:
    """Saturated wave numbers of a phase set on the lattice of one period.

    Inputs come first; profiles of added wave numbers are zero.
    """

    rs: ResonanceStructure
    n: np.ndarray
    kappas: np.ndarray
    nus: tuple
    kappa_nu: np.ndarray
    omega_nu: np.ndarray
    delta: np.ndarray
    terms: TermIndex

    @classmethod
    def build(cls, phases: PhaseSet, epsilon: float, grid: TorusGrid) -> "PhaseStructure":
        n_in = [lattice_index(k, epsilon, grid) for k in phases.kappas]
        rs = saturate(n_in)
        ok, bad = check_nonresonance(rs)
        if not ok:
            raise ValueError(f"nonresonance condition violated: {bad[0]}")
        n = np.array([int(v[0]) for v in rs.K])
        dk = lattice_spacing(epsilon, grid)
        return cls(
            rs, n, n * dk, tuple(t.nu for t in rs.N),
            np.array([float(t.kappa[0]) * dk for t in rs.N]),
            np.array([float(t.omega) * dk**2 for t in rs.N]),
            np.array([float(t.delta) * dk**2 for t in rs.N]),
            build_terms(n, rs),
        )

    @property
    def R(self) -> int:
        return len(self.n)

    @property
    def omegas(self) -> np.ndarray:
        return 0.5 * self.kappas**2

    @property
    def omega_star(self) -> np.ndarray:
        return 0.5 * self.kappa_nu**2


@dataclass(frozen=True)
class MultiphaseState:
    """Two time levels of the components u_[r] (R, M) and w*_[nu] (|N|, M).

    For the Crank-Nicolson method only the ``*_curr`` levels are used.
    """

    u_prev: np.ndarray
    u_curr: np.ndarray
    ws_prev: np.ndarray
    ws_curr: np.ndarray
    n: int


class MultiphaseScheme:
    """Weighted multiphase scheme on a periodic grid.

    ``case`` selects the right-hand side:
      case0     lam |sum u|^2 u_r (naive coupling)
      case1     resonant terms plus the oscillatory mixed terms (chi = 1)
      case2     resonant terms only
      case3     resonant terms plus the w and w* corrections (chi = 0)
      extended  chi chosen by ``chi_switch(h, eps, c_chi)``
    ``method`` is "lf" (weighted leapfrog) or "cn" (weighted Crank-Nicolson).
    """

    def __init__(self, phases: PhaseSet, grid: TorusGrid, epsilon: float, lam: float,
                 tau: float, case: str = "extended", method: str = "lf",
                 c_chi: float = 5.0, enforce_stability: bool = True,
                 fp_tol: float = 1e-12, fp_maxit: int = 50):
        if case not in CASES:
            raise ValueError(f"unknown case {case!r}")
        if method not in ("lf", "cn"):
            raise ValueError(f"unknown method {method!r}")
        if not (epsilon > 0 and tau > 0):
            raise ValueError("epsilon and tau must be positive")
        self.phases, self.grid = phases, grid
        self.epsilon, self.lam, self.tau = float(epsilon), float(lam), float(tau)
        self.case, self.method = case, method
        self.fp_tol, self.fp_maxit = fp_tol, fp_maxit
        h = grid.h

        ps = PhaseStructure.build(phases, epsilon, grid)
        self.structure = ps
        self.rs, self.n, self.terms = ps.rs, ps.n, ps.terms
        self.kappas, self.omegas, self.R = ps.kappas, ps.omegas, ps.R
        self.nus = ps.nus
        self.kappa_nu, self.omega_nu = ps.kappa_nu, ps.omega_nu
        self.omega_star, self.delta = ps.omega_star, ps.delta

        if case == "extended":
            self.chi = chi_switch(h, epsilon, c_chi)
        else:
            self.chi = {"case0": 0, "case1": 1, "case2": 0, "case3": 0}[case]
        # the correction components are carried only when they can be nonzero
        self.with_w = case in ("case3", "extended") and self.chi == 0 and len(self.nus) > 0

        self.alpha_u = phase_angle(self.omegas, tau, epsilon)
        self.beta_u = self.kappas * h / epsilon
        self.alpha_ws = phase_angle(self.omega_star, tau, epsilon)
        self.alpha_w = phase_angle(self.omega_nu, tau, epsilon)
        self.beta_nu = self.kappa_nu * h / epsilon
        self.theta = self.stability_numbers()
        if method == "lf" and enforce_stability and self.theta.size and np.max(self.theta) >= 1:
            raise StabilityError(
                f"weighted leapfrog unstable: max theta = {np.max(self.theta):.4g} >= 1")

    # -- parameters -------------------------------------------------------

    def stability_numbers(self) -> np.ndarray:
        """eps tau gamma(beta_mu) / h^2 for every stepped component."""
        betas = list(self.beta_u) + (list(self.beta_nu) if self.with_w else [])
        h = self.grid.h
        return np.array([self.epsilon * self.tau * gamma_of_beta(b) / h**2 for b in betas])

    @property
    def n_nu(self) -> int:
        return len(self.nus)

    # -- nonlinear terms ----------------------------------------------------

    def slaved_w(self, u: np.ndarray) -> np.ndarray:
        """w_nu = (1 - chi) (eps lam / delta_nu) u_k conj(u_l) u_m."""
        w = np.zeros((self.n_nu, self.grid.M), dtype=complex)
        if not self.with_w:
            return w
        for a, (k, l, m) in enumerate(self.nus):
            w[a] = (self.epsilon * self.lam / self.delta[a]) * u[k] * np.conj(u[l]) * u[m]
        return w

    def rhs(self, ut, m2, wt, wst):
        """Right-hand sides divided by eps, for u (R, M) and w* (|N|, M).

        ``ut``/``wt``/``wst`` are the values entering products (current level
        for leapfrog, tilde averages for Crank-Nicolson); ``m2`` holds the
        moduli |u_r|^2 (averaged for Crank-Nicolson).
        """
        lam = self.lam
        gu = np.zeros_like(ut)
        gw = np.zeros_like(wst)
        if self.case == "case0":
            s = ut.sum(axis=0)
            return lam * np.abs(s) ** 2 * ut, gw
        for r, k, l, m in self.terms.cubic:
            if k == l:
                gu[r] += m2[k] * ut[m]
            elif l == m:
                gu[r] += ut[k] * m2[l]
            else:
                gu[r] += ut[k] * np.conj(ut[l]) * ut[m]
        if self.chi:
            for r, k, l in self.terms.chi:
                gu[r] += ut[k] * np.conj(ut[l]) * ut[r]
        if self.with_w:
            for r, a, p, q in self.terms.w_a:
                gu[r] += 2 * wt[a] * np.conj(ut[p]) * ut[q]
            for r, p, a, q in self.terms.w_b:
                gu[r] += ut[p] * np.conj(wt[a]) * ut[q]
            gw = 2 * m2.sum(axis=0) * wst
        return lam * gu, lam * gw

    # -- states -------------------------------------------------------------

    def initial_state(self) -> MultiphaseState:
        x = self.grid.nodes
        u0 = np.zeros((self.R, self.grid.M), dtype=complex)
        for r, profile in enumerate(self.phases.profiles):
            u0[r] = np.asarray(profile(x), dtype=complex) * carrier(self.grid, self.kappas[r], 0.0,
                                                                    self.epsilon, 0.0)
        ws0 = -self.slaved_w(u0)
        return MultiphaseState(u0, u0, ws0, ws0, 0)

    def assemble(self, state: MultiphaseState) -> ComplexField:
        """u = sum_r u_[r] + sum_nu w*_[nu] + sum_nu w_[nu] at the current level."""
        u = state.u_curr
        total = u.sum(axis=0)
        if self.with_w:
            total = total + state.ws_curr.sum(axis=0) + self.slaved_w(u).sum(axis=0)
        return ComplexField(self.grid, total)

    # -- leapfrog -----------------------------------------------------------

    def _lf_rhs(self, u, ws):
        return self.rhs(u, np.abs(u) ** 2, self.slaved_w(u), ws)

    def lf_start(self, state: MultiphaseState) -> MultiphaseState:
        eps, tau, h = self.epsilon, self.tau, self.grid.h
        u, ws = state.u_curr, state.ws_curr
        gu, gw = self._lf_rhs(u, ws)
        u1 = euler_update(u, self.alpha_u, self.beta_u, eps, tau, h, gu)
        ws1 = ws
        if self.with_w:
            ws1 = euler_update(ws, self.alpha_ws, self.beta_nu, eps, tau, h, gw)
        return MultiphaseState(u, u1, ws, ws1, state.n + 1)

    def lf_step(self, state: MultiphaseState) -> MultiphaseState:
        eps, tau, h = self.epsilon, self.tau, self.grid.h
        u, ws = state.u_curr, state.ws_curr
        gu, gw = self._lf_rhs(u, ws)
        u_new = lf_update(state.u_prev, u, self.alpha_u, self.beta_u, eps, tau, h, gu)
        ws_new = ws
        if self.with_w:
            ws_new = lf_update(state.ws_prev, ws, self.alpha_ws, self.beta_nu, eps, tau, h, gw)
        return MultiphaseState(u, u_new, ws, ws_new, state.n + 1)

    # -- Crank-Nicolson -----------------------------------------------------

    def cn_step(self, state: MultiphaseState) -> MultiphaseState:
        """One step of length tau (two-level form with half phases), Picard iteration."""
        eps, tau, grid = self.epsilon, self.tau, self.grid
        eu = np.exp(0.5j * self.alpha_u)[:, None]
        es = np.exp(0.5j * self.alpha_ws)[:, None]
        ew = np.exp(0.5j * self.alpha_w)[:, None]
        cu = cn_mode_factor(self.beta_u, grid, eps, tau)
        cs = cn_mode_factor(self.beta_nu, grid, eps, tau)
        u, ws = state.u_curr, state.ws_curr
        Vu, Vs = u / eu, ws / es
        Vw = self.slaved_w(u) / ew
        m_old = np.abs(u) ** 2
        Wu, Ws = u * eu, ws * es
        for _ in range(self.fp_maxit):
            u_next = Wu / eu
            Ww = self.slaved_w(u_next) * ew
            m2 = 0.5 * (m_old + np.abs(u_next) ** 2)
            gu, gw = self.rhs(0.5 * (Wu + Vu), m2, 0.5 * (Ww + Vw), 0.5 * (Ws + Vs))
            Wu_new = cn_solve(Vu, cu, tau, gu)
            diff = np.max(np.abs(Wu_new - Wu))
            Wu = Wu_new
            if self.with_w:
                Ws_new = cn_solve(Vs, cs, tau, gw)
                diff = max(diff, np.max(np.abs(Ws_new - Ws)))
                Ws = Ws_new
            if diff <= self.fp_tol:
                return MultiphaseState(u, Wu / eu, ws, Ws / es, state.n + 1)
        raise ConvergenceError(
            f"fixed-point non-convergence after {self.fp_maxit} iterations (last change {diff:.3g})")

    # -- driver -------------------------------------------------------------

    def step(self, state: MultiphaseState) -> MultiphaseState:
        if self.method == "cn":
            return self.cn_step(state)
        if state.n == 0:
            return self.lf_start(state)
        return self.lf_step(state)

    def run(self, n_steps: int, state: MultiphaseState | None = None) -> ComplexField:
        state = self.initial_state() if state is None else state
        for _ in range(n_steps):
            state = self.step(state)
        if not np.all(np.isfinite(state.u_curr)):
            raise FloatingPointError("non-finite values in the multiphase solution")
        return self.assemble(state)


def two_phase_scheme(epsilon: float, grid: TorusGrid, tau: float, case: str, kappa: float = 1.0,
                     profile=None, lam: float = 1.0, **kw) -> MultiphaseScheme:
    """Scheme for data a(x) (e^{i kappa x/eps} + e^{-i kappa x/eps}).

    The default profile is exp(-x^2) / 2 for each phase.
    """
    profile = profile or gaussian(amplitude=0.5)
    k = adjust_wavenumber(kappa, epsilon, grid)
    return MultiphaseScheme(PhaseSet((k, -k), (profile, profile)), grid, epsilon, lam, tau,
                            case=case, **kw)


__all__ = [
    "CASES",
    "MultiphaseScheme",
    "MultiphaseState",
    "PhaseStructure",
    "TermIndex",
    "build_terms",
    "chi_switch",
    "dlf_apply",
    "two_phase_scheme",
]
