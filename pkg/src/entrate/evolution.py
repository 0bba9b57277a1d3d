"""Shift and Cesaro operators, evolution dimension and the stationary mean.

A source has finite evolution dimension when its shifts ``P o T^-k`` span a
finite-dimensional space of signed measures.  Each measure is represented
here by its values on every word of length ``<= L``; the shift acts linearly
on that span, and the Cesaro averages of the shift applied to ``P``
converge to a shift-invariant measure, the stationary mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cesaro import DEFAULT_MAX_N, cesaro_average
from .errors import InputError
from .source import CombinationSource, ShiftedSource, mixture_source, walk
from .tv import tv_distance_t

DEFAULT_HORIZON = 4
DEFAULT_RANK_TOL = 1e-8
NEGATIVE_CLAMP = 1e-9


def generic_shift(source, k, closed_form=True):
    """``P o T^-k``; model closed forms are used unless ``closed_form`` is False."""
    if k < 0:
        raise InputError(f"shift must be non-negative, got {k}")
    if k == 0:
        return source
    return source.shifted(k) if closed_form else ShiftedSource(source, k)


def cesaro_mean(source, n):
    """Uniform mixture of the first ``n`` shifts, ``P_n``."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if n == 1:
        return source
    return mixture_source([generic_shift(source, i) for i in range(n)], [1.0 / n] * n)


def shift_coordinates(source, k_count, L=DEFAULT_HORIZON):
    """Matrix whose row ``k`` lists ``(P o T^-k)(v)`` for every word with ``|v| <= L``.

    Columns are ordered by length, then lexicographically.  Nothing is
    pruned, so all rows share the same columns.
    """
    if k_count < 1 or L < 0:
        raise InputError(f"need k_count >= 1 and L >= 0, got {k_count}, {L}")
    shifts = [generic_shift(source, k) for k in range(k_count)]
    blocks = [probs.T for _, _, probs in walk(shifts, L, prune=False)]
    return np.hstack(blocks)


class EvolutionDimension(NamedTuple):
    rank: int
    singular_values: np.ndarray
    k_max: int
    L: int
    tol: float

    @property
    def gap(self):
        """Ratio between the last kept and first dropped singular value."""
        s = self.singular_values
        if self.rank >= len(s):
            return math.inf
        return math.inf if s[self.rank] == 0 else float(s[self.rank - 1] / s[self.rank])

    def as_dict(self):
        return {
            "rank": self.rank,
            "singular_values": self.singular_values.tolist(),
            "k_max": self.k_max,
            "L": self.L,
            "tol": self.tol,
        }


def _numerical_rank(s, tol):
    return int(np.sum(s > tol * s[0])) if len(s) and s[0] > 0 else 0


def evolution_dimension(source, k_max, L=DEFAULT_HORIZON, tol=DEFAULT_RANK_TOL):
    """Numerical rank of the first ``k_max`` shifted measures on words of length ``<= L``.

    Singular values below ``tol`` times the largest are treated as zero.
    """
    if k_max < 1:
        raise InputError(f"k_max must be >= 1, got {k_max}")
    s = np.linalg.svd(shift_coordinates(source, k_max, L), compute_uv=False)
    return EvolutionDimension(_numerical_rank(s, tol), s, k_max, L, tol)


@dataclass(frozen=True)
class ShiftRepresentation:
    """The shift map restricted to the span of the shifted measures.

    ``coord_matrix`` has one column per basis measure (its values on all
    words of length ``<= horizon``); column ``j`` of ``op_matrix`` holds the
    basis coordinates of the shift of basis measure ``j``.
    """

    basis_shifts: tuple
    coord_matrix: np.ndarray
    op_matrix: np.ndarray
    residual: float
    horizon: int
    k_max: int
    tol: float

    @property
    def rank(self):
        return len(self.basis_shifts)

    @property
    def reliable(self):
        return self.residual <= self.tol

    def as_dict(self):
        return {
            "basis_shifts": list(self.basis_shifts),
            "op_matrix": self.op_matrix.tolist(),
            "residual": self.residual,
            "rank": self.rank,
            "horizon": self.horizon,
            "k_max": self.k_max,
            "reliable": self.reliable,
        }


def build_shift_representation(source, k_max=8, L=DEFAULT_HORIZON, tol=DEFAULT_RANK_TOL):
    """Pick a basis among the first ``k_max`` shifts and fit the shift map in it.

    Shifts are scanned in order and kept while they stay linearly
    independent (smallest singular value above ``tol`` times the largest of
    the full matrix), which yields the Krylov basis ``P, PT^-1, ...``.  The
    operator is the least-squares solution mapping each basis measure to
    its successor; ``residual`` is the worst l2 error of expressing any of
    the shifts ``0..k_max`` in the basis.
    """
    if k_max < 1:
        raise InputError(f"k_max must be >= 1, got {k_max}")
    coords = shift_coordinates(source, k_max + 1, L)
    scale = np.linalg.svd(coords[:k_max], compute_uv=False)[0]
    basis = []
    for k in range(k_max):
        trial = coords[basis + [k]].T
        if np.linalg.svd(trial, compute_uv=False)[-1] > tol * scale:
            basis.append(k)
    C = coords[basis].T
    D = coords[[k + 1 for k in basis]].T
    op, *_ = np.linalg.lstsq(C, D, rcond=None)
    every, *_ = np.linalg.lstsq(C, coords.T, rcond=None)
    residual = float(np.max(np.linalg.norm(C @ every - coords.T, axis=0)))
    return ShiftRepresentation(tuple(basis), C, op, residual, L, k_max, tol)


@dataclass(frozen=True)
class StationaryMean:
    """Reconstructed stationary mean with its diagnostics.

    ``source`` is the signed combination ``sum_j c_j P o T^-basis_j``.
    ``negativity`` is the most negative marginal value seen on words of
    length ``<= horizon``; values down to ``-1e-9`` count as rounding and are
    pruned like zeros by the enumeration, anything lower marks the result
    invalid.
    """

    source: CombinationSource
    coefficients: np.ndarray
    basis_shifts: tuple
    n_used: int
    converged: bool
    stationarity_gap: float
    negativity: float
    horizon: int

    @property
    def valid(self):
        return self.converged and self.negativity <= NEGATIVE_CLAMP

    def to_model(self, base_model):
        return {
            "kind": "linear_combination",
            "alphabet": list(self.source.alphabet.symbols),
            "base": base_model,
            "shifts": list(self.basis_shifts),
            "weights": self.coefficients.tolist(),
        }


def stationary_mean(source, rep, tol=1e-10, max_n=DEFAULT_MAX_N):
    """Cesaro limit of the shift orbit of ``source``, computed in basis coordinates."""
    if not rep.reliable:
        raise InputError(
            f"shift representation residual {rep.residual:.3g} exceeds {rep.tol:.3g}; "
            "raise k_max or L before computing the stationary mean"
        )
    if 0 in rep.basis_shifts:
        x = np.zeros(rep.rank)
        x[rep.basis_shifts.index(0)] = 1.0
    else:
        own = shift_coordinates(source, 1, rep.horizon)[0]
        x, *_ = np.linalg.lstsq(rep.coord_matrix, own, rcond=None)
    coeffs, n_used, converged, _ = cesaro_average(rep.op_matrix, x, tol, max_n, mass_preserving=True)
    members = [generic_shift(source, k) for k in rep.basis_shifts]
    mean = CombinationSource(
        members,
        coeffs,
        {"kind": "linear_combination", "shifts": list(rep.basis_shifts), "base": source.descriptor},
    )
    lowest = min(float(probs.min()) for _, _, probs in walk([mean], rep.horizon, prune=False))
    gap = tv_distance_t(mean, mean.shifted(1), rep.horizon)
    return StationaryMean(mean, coeffs, rep.basis_shifts, n_used, converged, gap, max(0.0, -lowest), rep.horizon)


def tv_convergence_profile(source, mean, n_max, t):
    """``[(n, d_t(P_n, mean)) for n = 1..n_max]`` from a single joint walk."""
    if n_max < 1:
        raise InputError(f"n_max must be >= 1, got {n_max}")
    shifts = [generic_shift(source, i) for i in range(n_max)]
    profile = []
    for level_t, _, probs in walk([mean] + shifts, t):
        if level_t == t:
            target = probs[:, 0]
            running = np.cumsum(probs[:, 1:], axis=1)
            for n in range(1, n_max + 1):
                profile.append((n, math.fsum(np.abs(running[:, n - 1] / n - target))))
    return profile


def stationarity_check(source, t, tol=1e-9):
    """``d_t(P, P o T^-1)`` and whether it is within ``tol``."""
    if t < 1:
        raise InputError(f"t must be >= 1, got {t}")
    gap = tv_distance_t(source, generic_shift(source, 1), t)
    return gap <= tol, gap


def shift_contraction_check(p, q, t):
    """``(d_t(P o T^-1, Q o T^-1), d_{t+1}(P, Q))``; the first never exceeds the second."""
    lhs = tv_distance_t(generic_shift(p, 1), generic_shift(q, 1), t)
    rhs = tv_distance_t(p, q, t + 1)
    return lhs, rhs
