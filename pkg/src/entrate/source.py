"""Alphabets, words, word-probability sources and exact horizon enumeration.

A :class:`Source` is anything that can report the probability ``P(v)`` that
it emits the word ``v`` as its first ``len(v)`` symbols.  Besides scalar
evaluation every source exposes a small batched-state protocol
(``_root`` / ``_expand`` / ``_take``) so that all words of a horizon can be
enumerated level by level without recomputing shared prefixes.  The
enumeration walks the prefix tree breadth first, drops a prefix as soon as
its probability is ``<= min_prob`` and emits words in lexicographic order of
symbol indices.
"""

from __future__ import annotations

import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InputError, ResourceError

DEFAULT_MAX_SUPPORT = 10**7
MAX_SUPPORT_ENV = "ENTRATE_MAX_SUPPORT"
DEFAULT_TOL = 1e-9
MAX_SHIFT_PREFIXES = 10**6


def max_support():
    """Enumeration cap, read from ``ENTRATE_MAX_SUPPORT`` on every call."""
    raw = os.environ.get(MAX_SUPPORT_ENV)
    if raw is None:
        return DEFAULT_MAX_SUPPORT
    try:
        cap = int(float(raw))
    except ValueError:
        raise InputError(f"{MAX_SUPPORT_ENV}={raw!r} is not an integer") from None
    if cap < 1:
        raise InputError(f"{MAX_SUPPORT_ENV} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class Alphabet:
    """Ordered, duplicate-free tuple of symbol labels.

    The position of a label is its symbol index; indices ``0..m-1`` are the
    encoding used everywhere else.
    """

    symbols: tuple

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise InputError(f"an alphabet needs at least 2 symbols, got {len(symbols)}")
        if len(set(symbols)) != len(symbols):
            raise InputError(f"alphabet labels must be distinct: {symbols}")

    @classmethod
    def of_size(cls, m):
        return cls(tuple(str(i) for i in range(m)))

    @property
    def size(self):
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def index(self, label):
        try:
            return self.symbols.index(str(label))
        except ValueError:
            raise InputError(f"symbol {label!r} is not in alphabet {self.symbols}") from None

    def encode(self, word):
        """Turn a word into a tuple of symbol indices.

        Accepts a string of concatenated single-character labels, a sequence
        of labels, or a sequence of integer indices.
        """
        if isinstance(word, str):
            if all(len(s) == 1 for s in self.symbols):
                return tuple(self.index(c) for c in word)
            if word == "":
                return ()
            return tuple(self.index(s) for s in word.split())
        out = []
        for a in word:
            if isinstance(a, (int, np.integer)) and not isinstance(a, bool):
                if not 0 <= a < self.size:
                    raise InputError(f"symbol index {a} out of range for alphabet of size {self.size}")
                out.append(int(a))
            else:
                out.append(self.index(a))
        return tuple(out)

    def render(self, word):
        return "".join(self.symbols[a] for a in word)


class Source(ABC):
    """A discrete random source given by its word probabilities.

    Subclasses implement the batched-state protocol:

    ``_root()``
        ``(state, probs)`` for the empty word, ``probs`` of shape ``(1,)``.
    ``_expand(state)``
        children of every word in the batch, parent-major and symbol-minor,
        as ``(child_state, probs)`` with ``probs`` of shape ``(B * m,)``.
    ``_take(state, idx)``
        the sub-batch selected by an integer index array.
    """

    def __init__(self, alphabet, descriptor=None):
        if not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(tuple(alphabet))
        self._alphabet = alphabet
        self._descriptor = dict(descriptor or {})

    @property
    def alphabet(self):
        return self._alphabet

    @property
    def descriptor(self):
        return dict(self._descriptor)

    @abstractmethod
    def _root(self):
        ...

    @abstractmethod
    def _expand(self, state):
        ...

    @abstractmethod
    def _take(self, state, idx):
        ...

    def probability(self, word):
        """Probability that the source emits ``word`` first."""
        word = self._alphabet.encode(word)
        state, probs = self._root()
        p = probs[0]
        for a in word:
            children, probs = self._expand(state)
            state = self._take(children, np.array([a]))
            p = probs[a]
        return float(p)

    def __call__(self, word):
        return self.probability(word)

    def shifted(self, k):
        """The source started ``k`` steps later, ``P o T^-k``.

        The default sums over all length-``k`` prefixes; model classes
        override this with closed forms.
        """
        if k == 0:
            return self
        return ShiftedSource(self, k)

    def to_model(self):
        """JSON-serializable model document, if the source has one."""
        raise InputError(f"source of kind {self._descriptor.get('kind', '?')!r} has no model-file form")

    def __repr__(self):
        return f"{type(self).__name__}({self._descriptor})"


def word_probability(source, v):
    return source.probability(v)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a model validator: pass flag, messages and raw residuals."""

    passed: bool
    problems: tuple = ()
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {"passed": self.passed, "problems": list(self.problems), **self.details}


class FunctionSource(Source):
    """Source backed by a plain Python callable on index tuples.

    Nothing about the callable is trusted; use :func:`check_consistency`.
    """

    def __init__(self, alphabet, evaluator: Callable, descriptor=None):
        super().__init__(alphabet, {"kind": "function", **(descriptor or {})})
        self._fn = evaluator

    def probability(self, word):
        return float(self._fn(self._alphabet.encode(word)))

    def _root(self):
        return [()], np.array([float(self._fn(()))])

    def _expand(self, state):
        m = self._alphabet.size
        children = [w + (a,) for w in state for a in range(m)]
        return children, np.array([float(self._fn(w)) for w in children], dtype=float)

    def _take(self, state, idx):
        return [state[i] for i in idx]


class CombinationSource(Source):
    """Pointwise linear combination ``sum_i c_i P_i`` of sources.

    With non-negative weights summing to one this is a mixture; the
    stationary-mean reconstruction also uses signed coefficients.
    """

    def __init__(self, sources, weights, descriptor=None):
        sources = list(sources)
        if not sources:
            raise InputError("a combination needs at least one source")
        alphabet = sources[0].alphabet
        for s in sources[1:]:
            if s.alphabet != alphabet:
                raise InputError(f"alphabet mismatch: {s.alphabet.symbols} vs {alphabet.symbols}")
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(sources),):
            raise InputError(f"expected {len(sources)} weights, got shape {weights.shape}")
        desc = {
            "kind": "combination",
            "weights": weights.tolist(),
            "members": [s.descriptor for s in sources],
        }
        desc.update(descriptor or {})
        super().__init__(alphabet, desc)
        self.sources = tuple(sources)
        self.weights = weights

    def probability(self, word):
        vals = [s.probability(word) for s in self.sources]
        return math.fsum(w * v for w, v in zip(self.weights, vals))

    def _root(self):
        roots = [s._root() for s in self.sources]
        return [r[0] for r in roots], self._combine([r[1] for r in roots])

    def _expand(self, state):
        out = [s._expand(st) for s, st in zip(self.sources, state)]
        return [o[0] for o in out], self._combine([o[1] for o in out])

    def _take(self, state, idx):
        return [s._take(st, idx) for s, st in zip(self.sources, state)]

    def _combine(self, probs):
        return np.tensordot(self.weights, np.vstack(probs), axes=1)

    def shifted(self, k):
        if k == 0:
            return self
        desc = dict(self._descriptor)
        desc["shift"] = desc.get("shift", 0) + k
        return CombinationSource([s.shifted(k) for s in self.sources], self.weights, desc)


def mixture_source(sources, weights):
    """Convex combination of sources over a common alphabet."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise InputError(f"mixture weights must be non-negative: {weights.tolist()}")
    if abs(math.fsum(weights) - 1.0) > 1e-12:
        raise InputError(f"mixture weights must sum to 1, got {math.fsum(weights)!r}")
    return CombinationSource(sources, weights, {"kind": "mixture"})


def linear_combination(sources, weights, descriptor=None):
    return CombinationSource(sources, weights, descriptor)


class ShiftedSource(Source):
    """Generic ``P o T^-k``: every word is preceded by all length-``k`` prefixes.

    The batched state of a word ``w`` is the base state of every ``uw`` with
    ``P(u) > 0``; zero-probability prefixes contribute nothing for a genuine
    probability measure.
    """

    def __init__(self, base, k):
        if k < 0:
            raise InputError(f"shift must be non-negative, got {k}")
        if isinstance(base, ShiftedSource):
            base, k = base.base, base.k + k
        m = base.alphabet.size
        if m**k > MAX_SHIFT_PREFIXES:
            raise ResourceError(
                f"generic shift by {k} sums over {m}**{k} prefixes, above the guard {MAX_SHIFT_PREFIXES}"
            )
        desc = {"kind": "shift", "k": k, "base": base.descriptor}
        super().__init__(base.alphabet, desc)
        self.base = base
        self.k = k
        self._prefix_state = None

    def _prefixes(self):
        if self._prefix_state is None:
            level = None
            for level in _walk_states([self.base], self.k, 0.0, True):
                pass
            self._prefix_state = (level.states[0], len(level.words), math.fsum(level.probs[:, 0]))
        return self._prefix_state

    def _root(self):
        state, r, total = self._prefixes()
        return (state, r), np.array([total])

    def _expand(self, state):
        base_state, r = state
        children, probs = self.base._expand(base_state)
        m = self._alphabet.size
        b = len(probs) // (r * m)
        perm = np.arange(b * r * m).reshape(b, r, m).transpose(0, 2, 1).ravel()
        children = self.base._take(children, perm)
        return (children, r), probs.reshape(b, r, m).sum(axis=1).ravel()

    def _take(self, state, idx):
        base_state, r = state
        rows = (np.asarray(idx)[:, None] * r + np.arange(r)).ravel()
        return (self.base._take(base_state, rows), r)

    def shifted(self, k):
        if k == 0:
            return self
        return ShiftedSource(self.base, self.k + k)


@dataclass
class _Level:
    t: int
    words: np.ndarray
    probs: np.ndarray
    states: list = field(default_factory=list)


def _check_common_alphabet(sources):
    alphabet = sources[0].alphabet
    for s in sources[1:]:
        if s.alphabet != alphabet:
            raise InputError(f"alphabet mismatch: {s.alphabet.symbols} vs {alphabet.symbols}")
    return alphabet


def _walk_states(sources, t_max, min_prob, prune):
    alphabet = _check_common_alphabet(sources)
    m = alphabet.size
    cap = max_support()
    roots = [s._root() for s in sources]
    states = [r[0] for r in roots]
    probs = np.column_stack([r[1] for r in roots])
    words = np.zeros((1, 0), dtype=np.int64)
    t = 0
    while True:
        if prune:
            keep = np.flatnonzero(np.any(probs > min_prob, axis=1))
            if len(keep) < len(words):
                words = words[keep]
                probs = probs[keep]
                states = [s._take(st, keep) for s, st in zip(sources, states)]
        yield _Level(t, words, probs, states)
        if t == t_max:
            return
        if len(words) * m > cap:
            raise ResourceError(
                f"horizon {t + 1} may need {len(words) * m} entries, above the enumeration cap {cap} "
                f"(set {MAX_SUPPORT_ENV} to raise it)"
            )
        expanded = [s._expand(st) for s, st in zip(sources, states)]
        states = [e[0] for e in expanded]
        probs = np.column_stack([e[1] for e in expanded])
        words = np.hstack([np.repeat(words, m, axis=0), np.tile(np.arange(m), len(words))[:, None]])
        t += 1


def walk(sources, t_max, min_prob=0.0, prune=True):
    """Joint prefix-tree walk over several sources sharing an alphabet.

    Yields one level per horizon ``t = 0..t_max`` with ``words`` of shape
    ``(K, t)`` and ``probs`` of shape ``(K, len(sources))``.  A word is kept
    while any source gives it probability above ``min_prob``, so the rows
    cover the union of the supports.
    """
    sources = list(sources)
    if t_max < 0:
        raise InputError(f"horizon must be >= 0, got {t_max}")
    for level in _walk_states(sources, t_max, min_prob, prune):
        yield level.t, level.words, level.probs


@dataclass(frozen=True)
class FiniteDistribution:
    """Distribution of one source over the words of a fixed length."""

    alphabet: Alphabet
    horizon: int
    words: np.ndarray
    probs: np.ndarray
    total: float

    @classmethod
    def from_arrays(cls, alphabet, horizon, words, probs):
        words = np.asarray(words, dtype=np.int64).reshape(len(probs), horizon)
        probs = np.asarray(probs, dtype=float)
        return cls(alphabet, horizon, words, probs, math.fsum(probs))

    def __len__(self):
        return len(self.probs)

    def items(self):
        for w, p in zip(self.words, self.probs):
            yield tuple(int(a) for a in w), float(p)

    def as_dict(self):
        """``{rendered word: probability}`` in lexicographic order."""
        return {self.alphabet.render(w): p for w, p in self.items()}

    def codes(self):
        """Base-``m`` integer code of every word; preserves lexicographic order."""
        m = self.alphabet.size
        if self.horizon * math.log2(m) >= 62:
            raise ResourceError(f"words of length {self.horizon} over {m} symbols overflow 64-bit codes")
        weights = m ** np.arange(self.horizon - 1, -1, -1, dtype=np.int64)
        return self.words @ weights if self.horizon else np.zeros(len(self.probs), dtype=np.int64)

    def entropy(self):
        p = self.probs[self.probs > 0]
        return math.fsum(-p * np.log(p))

    def is_consistent(self, tol=DEFAULT_TOL):
        return abs(self.total - 1.0) <= tol

    def to_csv(self, fh):
        fh.write("word,probability\n")
        for w, p in self.items():
            fh.write(f"{self.alphabet.render(w)},{p!r}\n")


def iter_supports(source, t_max, min_prob=0.0):
    """Yield the horizon marginals for ``t = 0..t_max`` from one shared walk."""
    for t, words, probs in walk([source], t_max, min_prob):
        yield FiniteDistribution.from_arrays(source.alphabet, t, words, probs[:, 0])


def horizon_support(source, t, min_prob=0.0):
    """All words of length ``t`` with probability above ``min_prob``.

    Prefixes with probability ``<= min_prob`` are pruned during the walk, so
    sparse sources stay cheap.  Raises :class:`ResourceError` when the walk
    would exceed the enumeration cap.
    """
    if min_prob < 0:
        raise InputError(f"min_prob must be >= 0, got {min_prob}")
    dist = None
    for dist in iter_supports(source, t, min_prob):
        pass
    return dist


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-horizon mass and additivity errors of a source.

    ``rows`` holds ``(t, |sum_v P(v) - 1|, max_v |P(v) - sum_a P(va)|)``.
    """

    tol: float
    rows: tuple

    @property
    def passed(self):
        return all(total <= self.tol and add <= self.tol for _, total, add in self.rows)

    @property
    def first_failure(self):
        for t, total, add in self.rows:
            if total > self.tol or add > self.tol:
                return t
        return None

    def as_dict(self):
        return {
            "passed": self.passed,
            "tol": self.tol,
            "first_failure": self.first_failure,
            "rows": [{"t": t, "total_error": a, "additivity_error": b} for t, a, b in self.rows],
        }


def check_consistency(source, t_max, tol=DEFAULT_TOL, prune=False):
    """Check normalization and additivity of a source for every ``t <= t_max``.

    By default nothing is pruned, so mass hidden beneath a zero-probability
    prefix is still detected; ``prune=True`` skips zero subtrees and trades
    that guarantee for speed on sparse sources.
    """
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")
    m = source.alphabet.size
    cap = max_support()
    state, probs = source._root()
    rows = []
    for t in range(t_max + 1):
        total_err = abs(math.fsum(probs) - 1.0)
        if len(probs) * m > cap:
            raise ResourceError(
                f"consistency check at horizon {t + 1} needs {len(probs) * m} entries, above the cap {cap}"
            )
        children, child_probs = source._expand(state)
        sums = child_probs.reshape(len(probs), m).sum(axis=1)
        add_err = float(np.max(np.abs(probs - sums))) if len(probs) else 0.0
        rows.append((t, total_err, add_err))
        if prune:
            keep = np.flatnonzero(child_probs > 0)
            children, child_probs = source._take(children, keep), child_probs[keep]
        state, probs = children, child_probs
    return ConsistencyReport(tol, tuple(rows))
