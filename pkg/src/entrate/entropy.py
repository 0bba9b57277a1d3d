"""Block entropies and finite-horizon entropy rates.

All quantities are in nats; ``EntropyCurve.to_base(2)`` converts for
display.  ``H_t`` is the Shannon entropy of the length-``t`` marginal and
``H^t = H_t / t`` the finite-horizon entropy rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ContractError, InputError, ResourceError
from .source import horizon_support, mixture_source, walk

BASES = {"e": 1.0, "2": math.log(2)}


def _plogp(probs):
    p = probs[probs > 0]
    return math.fsum(-p * np.log(p))


def block_entropy(source, t):
    """Entropy of the length-``t`` marginal, with ``0 log(1/0) = 0``."""
    if t < 0:
        raise InputError(f"horizon must be >= 0, got {t}")
    return horizon_support(source, t).entropy()


def finite_entropy_rate(source, t):
    if t < 1:
        raise InputError(f"entropy rate needs t >= 1, got {t}")
    return block_entropy(source, t) / t


@dataclass(frozen=True)
class EntropyCurve:
    """``H^t`` for ``t = 1..t_max`` in the unit given by ``base``."""

    values: dict
    t_max: int
    base: str = "e"
    descriptor: dict = field(default_factory=dict)

    def to_base(self, base):
        if base not in BASES:
            raise InputError(f"unknown log base {base!r}; choose from {sorted(BASES)}")
        scale = BASES[self.base] / BASES[base]
        return EntropyCurve({t: h * scale for t, h in self.values.items()}, self.t_max, base, self.descriptor)

    def as_array(self):
        return np.array([self.values[t] for t in range(1, self.t_max + 1)])

    def to_csv(self, fh):
        fh.write("t,entropy_rate\n")
        for t in range(1, self.t_max + 1):
            fh.write(f"{t},{self.values[t]!r}\n")

    def metadata(self):
        return {"base": self.base, "t_max": self.t_max, "source": self.descriptor}

    def write(self, path):
        """CSV at ``path`` plus a JSON sidecar ``path + '.json'``."""
        with open(path, "w") as fh:
            self.to_csv(fh)
        with open(f"{path}.json", "w") as fh:
            json.dump(self.metadata(), fh, indent=2)


def entropy_curve(source, t_max, base="e"):
    """Tabulate ``H^t`` for ``t = 1..t_max`` from a single prefix-tree walk."""
    if t_max < 1:
        raise InputError(f"t_max must be >= 1, got {t_max}")
    values = {}
    try:
        for t, _, probs in walk([source], t_max):
            if t:
                values[t] = _plogp(probs[:, 0]) / t
    except ResourceError as exc:
        raise ResourceError(f"entropy curve stopped at t={len(values) + 1}: {exc}") from exc
    return EntropyCurve(values, t_max, "e", source.descriptor).to_base(base)


@dataclass(frozen=True)
class EntropyRateEstimate:
    """Window max/min of ``H^t``: finite-horizon stand-ins for limsup/liminf."""

    window_lo: int
    window_hi: int
    upper_est: float
    lower_est: float

    @property
    def cauchy_gap(self):
        return self.upper_est - self.lower_est

    def as_dict(self):
        return {
            "window_lo": self.window_lo,
            "window_hi": self.window_hi,
            "upper_est": self.upper_est,
            "lower_est": self.lower_est,
            "cauchy_gap": self.cauchy_gap,
        }


def entropy_rate_estimate(source, window_lo, window_hi):
    if not 1 <= window_lo <= window_hi:
        raise InputError(f"need 1 <= window_lo <= window_hi, got [{window_lo}, {window_hi}]")
    curve = entropy_curve(source, window_hi)
    window = [curve.values[t] for t in range(window_lo, window_hi + 1)]
    return EntropyRateEstimate(window_lo, window_hi, max(window), min(window))


class ShiftResiduals(NamedTuple):
    I: float
    J: float


def _lookup(codes, probs, keys):
    pos = np.searchsorted(codes, keys)
    pos = np.minimum(pos, len(codes) - 1)
    if not np.array_equal(codes[pos], keys):
        raise ContractError("a word of positive probability has a prefix or suffix of probability zero")
    return probs[pos]


def shift_residuals(source, k, t):
    """The two conditional-entropy residuals linking ``H^t`` of ``P`` and ``P o T^-k``.

    ``I = (1/t) sum_{v in S^k, w in S^t} P(vw) log(P T^-k (w) / P(vw))`` and
    ``J = (1/t) sum_{v in S^t, w in S^k} P(vw) log(P(v) / P(vw))``, so that
    ``H^t(P) + J = I + H^t(P o T^-k)``.  ``J`` conditions the last ``k``
    symbols on the first ``t``.
    """
    if k < 1 or t < 1:
        raise InputError(f"need k >= 1 and t >= 1, got k={k}, t={t}")
    m = source.alphabet.size
    joint = horizon_support(source, k + t)
    codes = joint.codes()
    p = joint.probs

    tail = horizon_support(source.shifted(k), t)
    q_tail = _lookup(tail.codes(), tail.probs, codes % m**t)
    head = horizon_support(source, t)
    q_head = _lookup(head.codes(), head.probs, codes // m**k)

    I = math.fsum(p * np.log(q_tail / p)) / t
    J = math.fsum(p * np.log(q_head / p)) / t
    return ShiftResiduals(I, J)


class EntropySandwich(NamedTuple):
    lower: float
    mid: float
    upper: float


def cesaro_entropy_sandwich(source, n, t):
    """Bounds on the entropy of the Cesaro mean by the average shifted entropy.

    ``lower`` averages ``H^t`` over the first ``n`` shifts, ``mid`` is
    ``H^t`` of their uniform mixture and ``upper = lower + (n/t) log 2``.
    """
    if n < 1 or t < 1:
        raise InputError(f"need n >= 1 and t >= 1, got n={n}, t={t}")
    shifts = [source.shifted(i) for i in range(n)]
    lower = math.fsum(finite_entropy_rate(s, t) for s in shifts) / n
    mid = finite_entropy_rate(mixture_source(shifts, [1.0 / n] * n), t)
    return EntropySandwich(lower, mid, lower + n / t * math.log(2))
