"""Quantum random walks observed as classical symbol sources.

The walker's wave function lives on the directed edges ``(node, direction)``
of a K-regular graph.  Each step applies the unitary ``U`` and then measures
which node the walker sits at; the measured node sequence is the emitted
word.  Multiplying the unnormalized projections together,

    p(u_1 ... u_t) = || Proj_{u_t} U ... Proj_{u_1} U psi0 ||^2,

gives the same numbers as collapsing and renormalizing after every step and
stays defined after a zero-probability outcome.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import InputError, ValidationError
from ..source import Alphabet, Source, ValidationReport

UNITARY_TOL = 1e-10
NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Qrw:
    """Graph size, degree, evolution operator, initial state and edge index.

    ``edge_order[j] = (node, direction)`` names the edge behind coordinate
    ``j`` of ``U`` and ``psi0``.
    """

    n_nodes: int
    degree: int
    U: np.ndarray
    psi0: np.ndarray
    edge_order: np.ndarray
    alphabet: Alphabet = None

    def __post_init__(self):
        U = np.array(self.U, dtype=complex)
        psi0 = np.array(self.psi0, dtype=complex)
        edges = np.array(self.edge_order, dtype=np.int64).reshape(-1, 2)
        for a in (U, psi0, edges):
            a.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "psi0", psi0)
        object.__setattr__(self, "edge_order", edges)
        alphabet = self.alphabet
        if alphabet is None:
            alphabet = Alphabet.of_size(self.n_nodes)
        elif not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(tuple(alphabet))
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def dim(self):
        return self.n_nodes * self.degree

    def node_masks(self):
        """Boolean ``(n_nodes, N)`` array; row ``u`` selects the edges of node ``u``."""
        masks = np.zeros((self.n_nodes, len(self.edge_order)), dtype=bool)
        for j, (u, _) in enumerate(self.edge_order):
            if 0 <= u < self.n_nodes:
                masks[u, j] = True
        return masks

    def to_dict(self):
        return {
            "kind": "qrw",
            "alphabet": list(self.alphabet.symbols),
            "nodes": self.n_nodes,
            "degree": self.degree,
            "U": [[[z.real, z.imag] for z in row] for row in self.U],
            "psi0": [[z.real, z.imag] for z in self.psi0],
            "edge_order": self.edge_order.tolist(),
        }


def qrw_validate(model):
    """Unitarity residual, initial-state norm and edge-index bijectivity."""
    problems = []
    details = {}
    N = model.dim
    if model.alphabet.size != model.n_nodes:
        problems.append(f"alphabet has {model.alphabet.size} labels for {model.n_nodes} nodes")
    if model.U.shape != (N, N) or model.psi0.shape != (N,):
        problems.append(f"U must be {N}x{N} and psi0 length {N}, got {model.U.shape} and {model.psi0.shape}")
        return ValidationReport(False, tuple(problems), details)
    residual = float(np.max(np.abs(model.U.conj().T @ model.U - np.eye(N))))
    details["unitarity_residual"] = residual
    if not residual <= UNITARY_TOL:
        problems.append(f"U is not unitary: max |U^H U - I| = {residual:.3g}")
    norm_err = abs(float(np.linalg.norm(model.psi0)) - 1.0)
    details["psi0_norm_error"] = norm_err
    if not norm_err <= NORM_TOL:
        problems.append(f"psi0 does not have unit norm: | ||psi0|| - 1 | = {norm_err:.3g}")
    expected = set(itertools.product(range(model.n_nodes), range(model.degree)))
    seen = [tuple(e) for e in model.edge_order.tolist()]
    bijective = len(seen) == N and set(seen) == expected
    details["edge_index_bijective"] = bijective
    if not bijective:
        problems.append("edge_order is not a bijection onto (node, direction) pairs")
    return ValidationReport(not problems, tuple(problems), details)


def qrw_word_probability(model, v):
    """Squared norm of the projected product for the node sequence ``v``."""
    word = model.alphabet.encode(v)
    masks = model.node_masks()
    psi = model.psi0
    for u in word:
        psi = (model.U @ psi) * masks[u]
    return float(np.vdot(psi, psi).real)


def qrw_collapse_probability(model, v):
    """Evolve, measure, renormalize, repeat; product of the outcome probabilities.

    Undefined after a zero-probability outcome, where 0 is returned.
    """
    word = model.alphabet.encode(v)
    masks = model.node_masks()
    psi = model.psi0
    total = 1.0
    for u in word:
        phi = (model.U @ psi) * masks[u]
        p = float(np.vdot(phi, phi).real)
        if p == 0.0:
            return 0.0
        total *= p
        psi = phi / np.sqrt(p)
    return total


def coined_cycle_example(n_nodes=4, start_node=0, start_direction=0):
    """Hadamard-coined walk on the directed cycle with ``n_nodes`` nodes.

    Edge ``(u, 0)`` points to ``u + 1`` and ``(u, 1)`` to ``u - 1``; the coin
    mixes the two edges of a node and the shift moves each amplitude along
    its edge.  The walker starts on one edge.
    """
    if n_nodes < 3:
        raise InputError(f"a cycle needs at least 3 nodes, got {n_nodes}")
    N = 2 * n_nodes
    coin = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    C = np.kron(np.eye(n_nodes), coin)
    S = np.zeros((N, N))
    for u in range(n_nodes):
        S[2 * ((u + 1) % n_nodes), 2 * u] = 1.0
        S[2 * ((u - 1) % n_nodes) + 1, 2 * u + 1] = 1.0
    psi0 = np.zeros(N, dtype=complex)
    psi0[2 * start_node + start_direction] = 1.0
    edges = [(u, x) for u in range(n_nodes) for x in range(2)]
    return Qrw(n_nodes, 2, S @ C, psi0, edges)


class QrwSource(Source):
    """Source of measured node sequences.

    Pure states are carried as batched vectors.  Shifting the source turns
    the start into the density matrix left after ``k`` unrecorded
    measurements, after which batches hold density matrices.
    """

    def __init__(self, model, rho=None, descriptor=None):
        report = qrw_validate(model)
        if not report.passed:
            raise ValidationError("invalid QRW: " + "; ".join(report.problems), report)
        desc = {"kind": "qrw", "nodes": model.n_nodes, "degree": model.degree}
        desc.update(descriptor or {})
        super().__init__(model.alphabet, desc)
        self.model = model
        self.rho = None if rho is None else np.array(rho, dtype=complex)
        self._masks = model.node_masks()
        self._blocks = np.stack([np.outer(m, m) for m in self._masks])

    def probability(self, word):
        if self.rho is None:
            return qrw_word_probability(self.model, word)
        return super().probability(word)

    def _root(self):
        if self.rho is None:
            psi = self.model.psi0
            return psi[None, :], np.array([float(np.vdot(psi, psi).real)])
        return self.rho[None, :, :], np.array([float(np.trace(self.rho).real)])

    def _expand(self, state):
        U = self.model.U
        N = U.shape[0]
        if self.rho is None:
            phi = state @ U.T
            children = phi[:, None, :] * self._masks[None, :, :]
            probs = (children.real**2 + children.imag**2).sum(axis=2).ravel()
            return children.reshape(-1, N), probs
        evolved = U @ state @ U.conj().T
        children = evolved[:, None, :, :] * self._blocks[None, :, :, :]
        probs = np.trace(children, axis1=2, axis2=3).real.ravel()
        return children.reshape(-1, N, N), probs

    def _take(self, state, idx):
        return state[idx]

    def shifted(self, k):
        if k == 0:
            return self
        rho = self.rho
        if rho is None:
            rho = np.outer(self.model.psi0, self.model.psi0.conj())
        same_node = self._blocks.any(axis=0)
        U = self.model.U
        for _ in range(k):
            rho = (U @ rho @ U.conj().T) * same_node
        desc = dict(self._descriptor)
        desc["shift"] = desc.get("shift", 0) + k
        return QrwSource(self.model, rho, desc)

    def to_model(self):
        if self.rho is not None:
            raise InputError("a shifted QRW source has a mixed start and no model-file form")
        return self.model.to_dict()


def _complex_array(d, key):
    try:
        raw = np.array(d[key], dtype=float)
    except KeyError:
        raise InputError(f"model file is missing field {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"field {key!r} is not an array of [re, im] pairs: {exc}") from None
    if raw.shape[-1] != 2:
        raise InputError(f"field {key!r} must hold [re, im] pairs, got trailing shape {raw.shape[-1]}")
    return raw[..., 0] + 1j * raw[..., 1]


def qrw_from_dict(d):
    try:
        n_nodes, degree = int(d["nodes"]), int(d["degree"])
        edges = d["edge_order"]
    except KeyError as exc:
        raise InputError(f"model file is missing field {exc.args[0]!r}") from None
    alphabet = Alphabet(tuple(d["alphabet"])) if "alphabet" in d else Alphabet.of_size(n_nodes)
    return Qrw(n_nodes, degree, _complex_array(d, "U"), _complex_array(d, "psi0"), edges, alphabet)
