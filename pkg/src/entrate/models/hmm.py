"""Hidden Markov sources.

A model ``(pi, A, E)`` emits ``v_1 v_2 ...`` by drawing a first hidden state
from ``pi``, emitting from row ``E[i]`` of the current state and moving along
``A``.  Word probabilities come from the forward recursion; shifting the
source only moves the initial distribution, ``pi -> pi A^k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..cesaro import DEFAULT_MAX_N, DEFAULT_TOL, cesaro_average
from ..errors import InputError, ValidationError
from ..source import Alphabet, Source, ValidationReport

STOCHASTIC_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Hmm:
    """Parameter triple of a hidden Markov model over ``alphabet``."""

    pi: np.ndarray
    A: np.ndarray
    E: np.ndarray
    alphabet: Alphabet = None

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi))
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "E", _frozen(self.E))
        alphabet = self.alphabet
        if alphabet is None:
            alphabet = Alphabet.of_size(self.E.shape[1] if self.E.ndim == 2 else 2)
        elif not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(tuple(alphabet))
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def n(self):
        return len(self.pi)

    @property
    def m(self):
        return self.alphabet.size

    def to_dict(self):
        return {
            "kind": "hmm",
            "alphabet": list(self.alphabet.symbols),
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "E": self.E.tolist(),
        }


def _stochastic_rows(M, name, problems, bad):
    rows = []
    for i, row in enumerate(M):
        if np.any(row < 0) or abs(row.sum() - 1.0) > STOCHASTIC_TOL:
            rows.append(i)
            problems.append(f"{name} row {i} is not a probability vector (sum {float(row.sum())!r}, min {float(row.min())!r})")
    bad[name] = rows


def hmm_validate(model):
    """Check shapes, finiteness and stochasticity of ``pi``, ``A`` and ``E``.

    Never raises; offending rows are listed in ``details["bad_rows"]``.
    """
    problems = []
    bad = {}
    pi, A, E = model.pi, model.A, model.E
    n = len(pi) if pi.ndim == 1 else -1
    if pi.ndim != 1 or n < 1:
        problems.append(f"pi must be a non-empty vector, got shape {pi.shape}")
    if A.shape != (n, n):
        problems.append(f"A must have shape ({n}, {n}), got {A.shape}")
    if E.shape != (n, model.m):
        problems.append(f"E must have shape ({n}, {model.m}), got {E.shape}")
    if problems:
        return ValidationReport(False, tuple(problems), {"bad_rows": bad})
    for name, arr in (("pi", pi), ("A", A), ("E", E)):
        if not np.all(np.isfinite(arr)):
            problems.append(f"{name} has non-finite entries")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
        problems.append(f"pi is not a probability vector (sum {float(pi.sum())!r}, min {float(pi.min())!r})")
        bad["pi"] = [0]
    _stochastic_rows(A, "A", problems, bad)
    _stochastic_rows(E, "E", problems, bad)
    return ValidationReport(not problems, tuple(problems), {"bad_rows": bad})


def hmm_word_probability(model, v):
    """Forward recursion: emission first, then transition, per symbol."""
    word = model.alphabet.encode(v)
    alpha = model.pi
    for t, a in enumerate(word):
        alpha = alpha * model.E[:, a]
        if t + 1 < len(word):
            alpha = alpha @ model.A
    return float(alpha.sum())


def hmm_shift(model, k):
    """Model of the source started ``k`` steps later: ``(pi A^k, A, E)``.

    ``pi`` is pushed through ``A`` one step at a time, so shifting by ``j``
    then ``k`` gives bit-identical parameters to shifting by ``j + k``.
    """
    if k < 0:
        raise InputError(f"shift must be non-negative, got {k}")
    pi = model.pi
    for _ in range(k):
        pi = pi @ model.A
    return Hmm(pi, model.A, model.E, model.alphabet)


class StationaryInitial(NamedTuple):
    pi_bar: np.ndarray
    n_used: int
    converged: bool
    residual: float


def hmm_stationary_initial(model, tol=DEFAULT_TOL, max_n=DEFAULT_MAX_N):
    """Cesaro limit of ``pi A^k``, the initial law of the stationary mean.

    ``residual`` is ``||pi_bar A - pi_bar||_1``; ``converged`` is False if
    ``max_n`` terms were averaged without the increment dropping below
    ``tol``.
    """
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")
    pi_bar, n, converged, _ = cesaro_average(model.A.T, model.pi, tol, max_n, mass_preserving=True)
    residual = float(np.abs(pi_bar @ model.A - pi_bar).sum())
    return StationaryInitial(pi_bar, n, converged, residual)


def circular_example(pi=(1.0, 0.0, 0.0)):
    """Three hidden states visited cyclically, binary output.

    State 1 always emits ``1``, state 2 a fair bit and state 3 always ``0``.
    Starting in state 1 makes the source non-stationary; the uniform start
    is its stationary mean.
    """
    A = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
    E = [[0, 1], [0.5, 0.5], [1, 0]]
    return Hmm(pi, A, E, Alphabet(("0", "1")))


def iid_model(probs, alphabet=None):
    """Single-state HMM emitting i.i.d. symbols with law ``probs``."""
    probs = np.asarray(probs, dtype=float)
    return Hmm([1.0], [[1.0]], probs[None, :], alphabet or Alphabet.of_size(len(probs)))


def bernoulli(p):
    """i.i.d. binary source emitting ``1`` with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"Bernoulli parameter must lie in [0, 1], got {p}")
    return iid_model([1.0 - p, p], Alphabet(("0", "1")))


def markov_model(pi, A, alphabet=None):
    """Visible Markov chain: hidden states are the symbols themselves."""
    A = np.asarray(A, dtype=float)
    return Hmm(pi, A, np.eye(len(A)), alphabet or Alphabet.of_size(len(A)))


class HmmSource(Source):
    """Source induced by a validated :class:`Hmm`.

    Batched state: forward vectors ``alpha[b, j] = P(v_b, next state j)``.
    """

    def __init__(self, model, descriptor=None):
        report = hmm_validate(model)
        if not report.passed:
            raise ValidationError("invalid HMM: " + "; ".join(report.problems), report)
        desc = {"kind": "hmm", "states": model.n}
        desc.update(descriptor or {})
        super().__init__(model.alphabet, desc)
        self.model = model

    def probability(self, word):
        return hmm_word_probability(self.model, word)

    def _root(self):
        return self.model.pi[None, :], np.array([self.model.pi.sum()])

    def _expand(self, state):
        weighted = state[:, None, :] * self.model.E.T[None, :, :]
        probs = weighted.sum(axis=2).ravel()
        children = (weighted @ self.model.A).reshape(-1, self.model.n)
        return children, probs

    def _take(self, state, idx):
        return state[idx]

    def shifted(self, k):
        if k == 0:
            return self
        desc = dict(self._descriptor)
        desc["shift"] = desc.get("shift", 0) + k
        return HmmSource(hmm_shift(self.model, k), desc)

    def to_model(self):
        return self.model.to_dict()


def hmm_source(model, **descriptor):
    return HmmSource(model, descriptor)


def _matrix(d, key):
    try:
        return np.array(d[key], dtype=float)
    except KeyError:
        raise InputError(f"model file is missing field {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"field {key!r} is not a numeric array: {exc}") from None


def _alphabet(d, m):
    if "alphabet" in d:
        return Alphabet(tuple(d["alphabet"]))
    return Alphabet.of_size(m)


def hmm_from_dict(d):
    E = _matrix(d, "E")
    return Hmm(_matrix(d, "pi"), _matrix(d, "A"), E, _alphabet(d, E.shape[-1]))


def iid_from_dict(d):
    p = _matrix(d, "probs")
    return iid_model(p, _alphabet(d, len(p)))


def markov_from_dict(d):
    A = _matrix(d, "A")
    return markov_model(_matrix(d, "pi"), A, _alphabet(d, len(A)))
