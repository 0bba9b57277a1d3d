"""Truncated total-variation distances and the entropy Lipschitz bound.

``d_t(P, Q) = sum_{|v| = t} |P(v) - Q(v)|`` is non-decreasing in ``t`` and
converges to the total-variation distance of the two sources, so a finite
sequence of values is a certified lower bound, never the limit itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .entropy import _plogp
from .errors import InputError, ResourceError
from .source import walk

INV_E = 1.0 / math.e
COUNTEREXAMPLE_MAX_N = 10**12
SIMPLEX_TOL = 1e-12


def _tv_levels(p, q, t_max):
    """``(t, d_t, H_t(P), H_t(Q))`` for ``t = 0..t_max`` from one joint walk."""
    if p.alphabet != q.alphabet:
        raise InputError(f"alphabet mismatch: {p.alphabet.symbols} vs {q.alphabet.symbols}")
    for t, _, probs in walk([p, q], t_max):
        yield t, math.fsum(np.abs(probs[:, 0] - probs[:, 1])), _plogp(probs[:, 0]), _plogp(probs[:, 1])


def tv_distance_t(p, q, t):
    """``sum |P(v) - Q(v)|`` over the union of both supports at horizon ``t``."""
    if t < 0:
        raise InputError(f"horizon must be >= 0, got {t}")
    for level in _tv_levels(p, q, t):
        d = level[1]
    return d


@dataclass(frozen=True)
class TvSequence:
    """``d_t`` for ``t = 1..t_max``.

    ``converged`` only says the last increment fell below the tolerance; the
    asymptotic distance may still be larger than ``values[t_max]``.
    """

    values: dict
    t_max: int
    converged: bool
    last_increment: float

    def as_array(self):
        return np.array([self.values[t] for t in range(1, self.t_max + 1)])


def tv_distance_estimate(p, q, t_max, tol=1e-9):
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")
    if t_max < 1:
        raise InputError(f"t_max must be >= 1, got {t_max}")
    values = {t: d for t, d, _, _ in _tv_levels(p, q, t_max)}
    increment = values[t_max] - values[t_max - 1]
    values.pop(0)
    return TvSequence(values, t_max, increment < tol, increment)


def iid_tv_distance_t(p_probs, q_probs, t):
    """``d_t`` between two i.i.d. sources by summing over symbol counts.

    Words with the same counts share their probability under both sources,
    so the sum has ``C(t + m - 1, m - 1)`` terms instead of ``m**t``.
    """
    p_probs = np.asarray(p_probs, dtype=float)
    q_probs = np.asarray(q_probs, dtype=float)
    if p_probs.shape != q_probs.shape:
        raise InputError("i.i.d. laws must share an alphabet")
    m = len(p_probs)
    with np.errstate(divide="ignore"):
        log_p, log_q = np.log(p_probs), np.log(q_probs)
    terms = []
    for cut in itertools.combinations(range(t + m - 1), m - 1):
        bounds = (-1,) + cut + (t + m - 1,)
        counts = np.diff(bounds) - 1
        log_mult = math.lgamma(t + 1) - sum(math.lgamma(c + 1) for c in counts)
        a = math.exp(log_mult + _count_dot(counts, log_p))
        b = math.exp(log_mult + _count_dot(counts, log_q))
        terms.append(abs(a - b))
    return math.fsum(terms)


def _count_dot(counts, logs):
    mask = counts > 0
    return float(np.dot(counts[mask], logs[mask])) if mask.any() else 0.0


def lipschitz_bound(d, m, t):
    """``(log m + (1/t) log(1/d)) * d`` with ``0 log(inf) = 0``."""
    if d == 0:
        return 0.0
    return (math.log(m) + math.log(1.0 / d) / t) * d


class LipschitzCheck(NamedTuple):
    lhs: float
    rhs: float
    applicable: bool
    d_tv: float
    t: int


def lipschitz_profile(p, q, t_max):
    """:func:`lipschitz_check` for every ``t = 1..t_max`` from one joint walk."""
    m = p.alphabet.size
    rows = []
    for t, d, hp, hq in _tv_levels(p, q, t_max):
        if t:
            rows.append(LipschitzCheck(abs(hp - hq) / t, lipschitz_bound(d, m, t), d <= INV_E, d, t))
    return rows


def lipschitz_check(p, q, t):
    """Compare ``|H^t(P) - H^t(Q)|`` with the TV bound at horizon ``t``.

    The bound is only claimed when ``applicable`` (``d_t <= 1/e``); outside
    that range the two sides are reported without a verdict.
    """
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    return lipschitz_profile(p, q, t)[-1]


def h_function(x):
    """``x log(1/x)`` on ``[0, 1]`` with ``h(0) = 0``; works elementwise on arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise InputError("h is defined on [0, 1] only")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr > 0, -arr * np.log(np.where(arr > 0, arr, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def scaled_entropy(x):
    """Shannon entropy of a point of the simplex divided by ``log n``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise InputError(f"need a vector with at least 2 entries, got shape {x.shape}")
    if np.any(x < 0) or abs(math.fsum(x) - 1.0) > SIMPLEX_TOL:
        raise InputError("vector is not on the probability simplex")
    return _plogp(x) / math.log(len(x))


class Counterexample(NamedTuple):
    m: int
    N: int
    norm_gap: float
    entropy_gap: float


def _block_gap_norm(m, N, p):
    """``||x*_{m,N} - x*_{N,N}||_p`` where ``x*_{m,N}`` is uniform on the first ``m`` of ``N`` slots."""
    return (m * (1.0 / m - 1.0 / N) ** p + (N - m) * (1.0 / N) ** p) ** (1.0 / p)


def _block_entropy_gap(m, N):
    return 1.0 - math.log(m) / math.log(N)


def _verify(m, N, p):
    if N <= 10**6:
        x = np.zeros(N)
        x[:m] = 1.0 / m
        y = np.full(N, 1.0 / N)
        norm = float(np.sum(np.abs(x - y) ** p) ** (1.0 / p))
        gap = abs(scaled_entropy(x) - scaled_entropy(y))
    else:
        norm = _block_gap_norm(m, N, p)
        gap = _block_entropy_gap(m, N)
    return norm, gap


def counterexample_construct(p, delta):
    """Simplex points that are ``delta``-close in p-norm but far in scaled entropy.

    Searches ``m > 1/delta`` upward; for each ``m`` the entropy gap exceeds
    1/2 exactly when ``N > m**2``, and the smallest such ``N`` whose p-norm
    distance is below ``delta`` is taken.  Both predicates are re-evaluated
    before returning, on explicit vectors when ``N <= 1e6``.
    """
    if p < 2:
        raise InputError(f"p must be >= 2, got {p}")
    if delta <= 0:
        raise InputError(f"delta must be positive, got {delta}")
    m = max(2, math.floor(1.0 / delta) + 1)
    while m * m < COUNTEREXAMPLE_MAX_N:
        N = m * m + 1
        if _block_gap_norm(m, N, p) >= delta:
            N = _grow_until_close(m, N, p, delta)
        if N is not None:
            norm, gap = _verify(m, N, p)
            if norm < delta and gap > 0.5:
                return Counterexample(m, N, norm, gap)
        m += 1
    raise ResourceError(f"no counterexample with N <= {COUNTEREXAMPLE_MAX_N} for p={p}, delta={delta}")


def _grow_until_close(m, N, p, delta):
    if m ** (1.0 / p - 1.0) >= delta:
        return None
    lo = hi = N
    while _block_gap_norm(m, hi, p) >= delta:
        lo, hi = hi, hi * 2
        if hi > COUNTEREXAMPLE_MAX_N:
            return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _block_gap_norm(m, mid, p) < delta:
            hi = mid
        else:
            lo = mid
    return hi
