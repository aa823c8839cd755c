"""Resonance combinatorics for multiphase wave vectors.

Frequencies follow the dispersion relation omega = |kappa|^2 / 2. Internally
everything is kept as ``two_omega = |kappa|^2`` so integer input stays exact;
integer or ``Fraction`` input takes an exact path (object arrays), floats use
the absolute tolerance ``tol_res``.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

TOL_RES = 1e-9
TOL_NEAR = 1e-6
MAX_ROUNDS = 8
# growth past this many vectors is treated as a saturation failure right away
MAX_SIZE = 32


class SaturationError(RuntimeError):
    """The wave-vector set keeps growing: no finite saturated set was found."""


class NearResonanceError(ValueError):
    """A triple is neither resonant nor safely detuned."""


def _is_exact(values: Iterable) -> bool:
    return all(isinstance(v, Rational) and not isinstance(v, bool) for v in values)


def as_wave_vectors(vectors: Sequence) -> np.ndarray:
    """(R, d) array of wave vectors; object dtype of Fractions if the input is rational."""
    rows = [np.atleast_1d(np.asarray(v, dtype=object)) for v in vectors]
    if not rows:
        return np.zeros((0, 1))
    d = rows[0].size
    if any(r.size != d for r in rows):
        raise ValueError("all wave vectors must have the same dimension")
    flat = [x for r in rows for x in r]
    if _is_exact(flat):
        out = np.empty((len(rows), d), dtype=object)
        for i, r in enumerate(rows):
            out[i] = [Fraction(x) for x in r]
        return out
    arr = np.array([[float(x) for x in r] for r in rows], dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wave vectors must be finite")
    return arr


def _sq(K: np.ndarray) -> np.ndarray:
    return np.sum(K * K, axis=-1)


def kappa_omega_of_multiindex(mu: Sequence[int], K) -> tuple[np.ndarray, object]:
    """Alternating sums kappa_mu = sum (-1)^i kappa_{m_i}, omega_mu likewise.

    Indices are 0-based positions in ``K``.
    """
    if len(mu) % 2 != 1:
        raise ValueError(f"multi-index must have odd length, got {len(mu)}")
    K = as_wave_vectors(K) if not isinstance(K, np.ndarray) else K
    kap = K[mu[0]] * 0
    two_om = _sq(K[mu[0]]) * 0
    for i, m in enumerate(mu):
        s = 1 if i % 2 == 0 else -1
        kap = kap + s * K[m]
        two_om = two_om + s * _sq(K[m])
    omega = Fraction(two_om) / 2 if K.dtype == object else 0.5 * two_om
    return kap, omega


def detuning_of_multiindex(mu, K):
    """omega_mu - |kappa_mu|^2 / 2 (zero for resonant multi-indices)."""
    kap, om = kappa_omega_of_multiindex(mu, K)
    sq = _sq(kap)
    return om - (Fraction(sq) / 2 if K.dtype == object else 0.5 * sq)


def is_resonant(mu: Sequence[int], K, tol: float = TOL_RES) -> bool:
    K = as_wave_vectors(K) if not isinstance(K, np.ndarray) else K
    d = detuning_of_multiindex(mu, K)
    if K.dtype == object:
        return d == 0
    return abs(d) <= tol


@dataclass(frozen=True)
class NonresonantTriple:
    nu: tuple[int, int, int]
    kappa: np.ndarray = field(compare=False)
    omega: object
    omega_star: object
    delta: object


@dataclass(frozen=True)
class ResonanceStructure:
    """Saturated wave-vector set K (first ``n_inputs`` are the inputs) and the set N."""

    K: np.ndarray
    n_inputs: int
    N: tuple[NonresonantTriple, ...]
    k_star: int
    tol: float = TOL_RES

    @property
    def exact(self) -> bool:
        return self.K.dtype == object

    @property
    def R(self) -> int:
        return len(self.K)

    @property
    def omegas(self) -> np.ndarray:
        sq = _sq(self.K)
        return np.array([Fraction(s) / 2 for s in sq], dtype=object) if self.exact else 0.5 * sq

    def is_zero(self, value) -> bool:
        return value == 0 if self.exact else abs(value) <= self.tol


class _Ops:
    """Exact or tolerant comparisons on (two_omega, |kappa|^2) data."""

    def __init__(self, exact: bool, tol: float, tol_vec: float):
        self.exact, self.tol, self.tol_vec = exact, tol, tol_vec

    def zero(self, x):
        if self.exact:
            return x == 0
        return np.abs(x) <= 2 * self.tol

    def same(self, a: np.ndarray, b: np.ndarray) -> bool:
        if self.exact:
            return bool(np.all(a == b))
        return bool(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))) <= self.tol_vec)


def _contains(K: list, v, ops: _Ops) -> bool:
    return any(ops.same(k, v) for k in K)


def _round_candidates(K: np.ndarray, ops: _Ops) -> np.ndarray:
    """Wave vectors produced by rules (i)-(ii) on K, in canonical lexicographic order.

    For a fixed triple (i, j, k) either rule (i) applies (resonant) or rule (ii)
    applies over (p, q, bracketing), so the ordering key is (i, j, k, p, q, slot)
    with the rule (i) candidate stored in the (0, 0, 0) slot.
    """
    R, d = K.shape
    S = _sq(K)
    out = []
    for i in range(R):
        kap = K[i][None, None, :] - K[:, None, :] + K[None, :, :]  # (j, k, d)
        two_om = S[i] - S[:, None] + S[None, :]
        res = np.asarray(ops.zero(two_om - _sq(kap)), dtype=bool)
        # quintuples (mu, p, q) and (p, mu, q) for every (j, k, p, q)
        kap5a = kap[:, :, None, None, :] - K[None, None, :, None, :] + K[None, None, None, :, :]
        om5a = two_om[:, :, None, None] - S[None, None, :, None] + S[None, None, None, :]
        kap5b = K[None, None, :, None, :] - kap[:, :, None, None, :] + K[None, None, None, :, :]
        om5b = S[None, None, :, None] - two_om[:, :, None, None] + S[None, None, None, :]
        cand = np.stack([kap5a, kap5b], axis=4)  # (j, k, p, q, slot, d)
        mask = np.stack([ops.zero(om5a - _sq(kap5a)), ops.zero(om5b - _sq(kap5b))], axis=4)
        mask = np.asarray(mask, dtype=bool) & ~res[:, :, None, None, None]
        cand[res, 0, 0, 0] = kap[res]
        mask[res, 0, 0, 0] = True
        out.append(cand[mask])
    return np.concatenate(out, axis=0) if out else np.zeros((0, d), dtype=K.dtype)


def _nonresonant_triples(K: np.ndarray, ops: _Ops, tol_near: float,
                         scale: int = 1) -> tuple[NonresonantTriple, ...]:
    """Nonresonant triples of K. For the exact path K holds integers equal to
    ``scale`` times the true wave vectors."""
    R = len(K)
    S = _sq(K)
    kap = K[:, None, None, :] - K[None, :, None, :] + K[None, None, :, :]
    two_om = S[:, None, None] - S[None, :, None] + S[None, None, :]
    two_delta = two_om - _sq(kap)
    N = []
    for i in range(R):
        for j in range(R):
            for k in range(R):
                td = two_delta[i, j, k]
                if ops.zero(td):
                    continue
                if not ops.exact and abs(td) <= 2 * tol_near:
                    raise NearResonanceError(
                        f"triple {(i, j, k)} is near-resonant: delta = {td / 2:.3g}")
                if ops.exact:
                    s2 = 2 * scale * scale
                    omega = Fraction(int(two_om[i, j, k]), s2)
                    omega_star = Fraction(int(_sq(kap[i, j, k])), s2)
                    delta = Fraction(int(td), s2)
                    N.append(NonresonantTriple((i, j, k), _to_fractions(kap[i, j, k], scale),
                                               omega, omega_star, delta))
                    continue
                else:
                    omega, omega_star, delta = 0.5 * two_om[i, j, k], 0.5 * _sq(kap[i, j, k]), 0.5 * td
                N.append(NonresonantTriple((i, j, k), kap[i, j, k], omega, omega_star, delta))
    return tuple(N)


def _to_fractions(v: np.ndarray, scale: int) -> np.ndarray:
    return np.array([Fraction(int(x), scale) for x in np.atleast_1d(v)], dtype=object)


def _integer_lattice(K0: np.ndarray) -> tuple[np.ndarray, int]:
    """Scale rational vectors to int64 by the common denominator.

    Resonance relations are homogeneous quadratic, so scaling preserves them.
    """
    scale = math.lcm(*(x.denominator for x in K0.ravel()))
    Kint = np.array([[int(x * scale) for x in row] for row in K0], dtype=np.int64)
    if np.max(np.abs(Kint), initial=0) > 2**24:
        raise ValueError("rational wave vectors too large for the exact path")
    return Kint, scale


def saturate(inputs: Sequence, max_rounds: int = MAX_ROUNDS, tol: float = TOL_RES,
             tol_vec: float = 1e-9, tol_near: float = TOL_NEAR,
             max_size: int = MAX_SIZE) -> ResonanceStructure:
    """Close the input wave vectors under the augmentation rules and enumerate N.

    Raises SaturationError if K still grows after ``max_rounds`` rounds or
    exceeds ``max_size`` vectors.
    """
    K0 = as_wave_vectors(inputs)
    exact = K0.dtype == object
    ops = _Ops(exact, tol, tol_vec)
    for a in range(len(K0)):
        if ops.same(K0[a], K0[a] * 0):
            raise ValueError("wave vectors must be nonzero")
        for b in range(a):
            if ops.same(K0[a], K0[b]):
                raise ValueError("wave vectors must be pairwise distinct")
    work, scale = _integer_lattice(K0) if exact else (K0, 1)
    K = [row for row in work]
    k_star = 0
    for rnd in range(max_rounds + 1):
        current = np.array(K, dtype=work.dtype)
        cand = _round_candidates(current, ops)
        if exact:
            _, first = np.unique(cand, axis=0, return_index=True)
            seen = {tuple(v) for v in K}
            added = [cand[f] for f in np.sort(first) if tuple(cand[f]) not in seen]
        else:
            added = []
            for v in cand:
                if not (_contains(K, v, ops) or _contains(added, v, ops)):
                    added.append(v)
                    if len(K) + len(added) > max_size:
                        break
        if len(K) + len(added) > max_size:
            raise SaturationError(
                f"saturation failure: wave-vector set exceeds {max_size} vectors "
                f"in round {rnd + 1}")
        if not added:
            k_star = rnd
            break
        if rnd == max_rounds:
            raise SaturationError(
                f"saturation failure: wave-vector set still growing after {max_rounds} rounds "
                f"(size {len(K) + len(added)})")
        K.extend(added)
    Kw = np.array(K, dtype=work.dtype)
    N = _nonresonant_triples(Kw, ops, tol_near, scale)
    Karr = np.array([_to_fractions(v, scale) for v in Kw], dtype=object) if exact else Kw
    return ResonanceStructure(Karr, len(K0), N, k_star, tol)


@dataclass(frozen=True)
class Violation:
    form: str  # "nu-q+r" or "p-nu+r"
    nu: tuple[int, int, int]
    p: int | None
    q: int | None
    r: int


def check_nonresonance(rs: ResonanceStructure) -> tuple[bool, list[Violation]]:
    """Verify the nonresonance condition for every nu in N and p, q, r with q != r."""
    K = rs.K
    om = rs.omegas
    R = rs.R
    violations = []
    for t in rs.N:
        for q in range(R):
            for r in range(R):
                if q == r:
                    continue
                v = K[r] * 0 + t.kappa - K[q] + K[r]
                lhs = t.omega_star - om[q] + om[r]
                rhs = (Fraction(_sq(v)) / 2) if rs.exact else 0.5 * _sq(v)
                if rs.is_zero(lhs - rhs):
                    violations.append(Violation("nu-q+r", t.nu, None, q, r))
        for p in range(R):
            for r in range(R):
                v = K[p] - t.kappa + K[r]
                lhs = om[p] - t.omega_star + om[r]
                rhs = (Fraction(_sq(v)) / 2) if rs.exact else 0.5 * _sq(v)
                if rs.is_zero(lhs - rhs):
                    violations.append(Violation("p-nu+r", t.nu, p, None, r))
    return (not violations), violations
