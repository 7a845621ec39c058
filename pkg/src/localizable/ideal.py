"""Localizing ideal (state-outputting) measurements in nice Bell bases.

The protocol shares ``|M_j^T>> (x) |M_j^dagger>>``. Alice measures
``{|M_i>>}`` on her target and first resource half, Bob does the same on his,
and each then applies ``sqrt(d) M_{i_A}`` (Alice) or ``sqrt(d) M_{i_B}^T`` (Bob)
to the second resource half, which ends up in ``|M_{f(i_A, i_B)}>>``.

Everything here is simulated on the full tensor space of all registers and
compared with the ideal instrument ``rho -> P_c rho P_c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bipartite import DoubleKet, MeasurementBasis, validate_measurement_basis
from .error_basis import LatinSquare
from .localizability import NotLocalizableError, classify_equal_resource, triple_product_closure
from .numeric import DEFAULT_TOL, Tolerance, dagger, is_unitary, random_unitary


@dataclass(frozen=True)
class IdealProtocol:
    basis: MeasurementBasis
    j: int
    resource: Tuple[DoubleKet, DoubleKet]
    relabel: LatinSquare

    @property
    def d(self) -> int:
        return self.basis.dim

    def alice_correction(self, i: int) -> np.ndarray:
        return np.sqrt(self.d) * self.basis.ops[i]

    def bob_correction(self, i: int) -> np.ndarray:
        return np.sqrt(self.d) * self.basis.ops[i].T


@dataclass
class Instrument:
    """Outcome label -> list of Kraus operators."""

    elements: Dict[object, List[np.ndarray]]

    def apply(self, label, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dagger(k) for k in self.elements[label])

    def choi(self, label) -> np.ndarray:
        vs = [k.reshape(-1) for k in self.elements[label]]
        return sum(np.outer(v, np.conj(v)) for v in vs)

    def trace_preservation_error(self) -> float:
        ks = [k for ops in self.elements.values() for k in ops]
        n = ks[0].shape[1]
        return float(np.linalg.norm(sum(dagger(k) @ k for k in ks) - np.eye(n)))


def ideal_instrument(basis: MeasurementBasis) -> Instrument:
    return Instrument({c: [p] for c, p in enumerate(basis.projectors())})


def instrument_distance(a: Instrument, b: Instrument) -> float:
    """Largest Frobenius distance between per-outcome Choi matrices."""
    labels = set(a.elements) | set(b.elements)
    out = 0.0
    for c in labels:
        ca = a.choi(c) if c in a.elements else 0.0
        cb = b.choi(c) if c in b.elements else 0.0
        out = max(out, float(np.linalg.norm(ca - cb)))
    return out


def build_ideal_protocol(b: MeasurementBasis, j: int = 0, tol: Tolerance = DEFAULT_TOL) -> IdealProtocol:
    n = len(b)
    if not 0 <= j < n:
        raise IndexError(f"resource index {j} outside [0, {n})")
    verdict = classify_equal_resource(b, tol)
    if not verdict.localizable:
        raise NotLocalizableError(f"ideal protocol needs a nice Bell basis ({verdict.reason.value})")
    closure = triple_product_closure(b, tol)
    relabel = LatinSquare(closure.table[:, j, :])
    m_j = b.ops[j]
    return IdealProtocol(b, j, (DoubleKet(m_j.T), DoubleKet(dagger(m_j))), relabel)


def branch_kraus(p: IdealProtocol) -> np.ndarray:
    """Kraus operators ``K[i_A, i_B]`` from ``S_A S_B`` to the output registers.

    Built on the six-register space ``S_A S_B R_A1 R_B1 R_A2 R_B2``: append the
    resource, regroup into Alice's and Bob's labs, then apply each party's
    projection-and-correction map.
    """
    d = p.d
    n = d * d
    r1 = p.resource[0].vector_out_in()
    r2 = p.resource[1].vector_out_in()
    attach = np.kron(np.eye(n), np.kron(r1, r2)[:, None])
    attach = attach.reshape([d] * 6 + [n])
    # S_A S_B R_A1 R_B1 R_A2 R_B2 -> (S_A R_A1 R_A2)(S_B R_B1 R_B2)
    attach = attach.transpose(0, 2, 4, 1, 3, 5, 6).reshape(d**6, n)

    alice = []
    bob = []
    for i in range(n):
        m = p.basis.ops[i]
        bra_a = np.conj(m.reshape(-1))[None, :]
        bra_b = np.conj(m.T.reshape(-1))[None, :]
        alice.append(np.kron(bra_a, p.alice_correction(i)))
        bob.append(np.kron(bra_b, p.bob_correction(i)))
    kraus = np.empty((n, n, n, n), dtype=np.complex128)
    for ia in range(n):
        for ib in range(n):
            kraus[ia, ib] = np.kron(alice[ia], bob[ib]) @ attach
    return kraus


def protocol_instrument(p: IdealProtocol) -> Instrument:
    kraus = branch_kraus(p)
    n = len(p.basis)
    elements: Dict[object, List[np.ndarray]] = {c: [] for c in range(n)}
    for ia in range(n):
        for ib in range(n):
            elements[p.relabel(ia, ib)].append(kraus[ia, ib])
    return Instrument(elements)


@dataclass
class SimulationResult:
    probabilities: np.ndarray
    states: List[Optional[np.ndarray]]
    transcript: List[Tuple[int, int, int, float]]
    counts: Optional[np.ndarray] = None
    seed: Optional[int] = None
    shots: Optional[int] = None
    branch_counts: Dict[int, int] = field(default_factory=dict)


def _check_state(rho: np.ndarray, n: int, tol: Tolerance) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (n, n):
        raise ValueError(f"input state has shape {rho.shape}, expected {(n, n)}")
    if np.linalg.norm(rho - dagger(rho)) > tol.eps_sum or abs(np.trace(rho) - 1) > tol.eps_sum:
        raise ValueError("input is not a unit-trace Hermitian operator")
    if np.linalg.eigvalsh(rho)[0] < -tol.eps_sum:
        raise ValueError("input is not positive semidefinite")
    return rho


def _run(branches, rho, n_outcomes, shots, seed) -> SimulationResult:
    """``branches`` is a list of ``(label_tuple, outcome, kraus)``."""
    probs = np.zeros(n_outcomes)
    states = [np.zeros_like(rho) for _ in range(n_outcomes)]
    transcript = []
    branch_probs = []
    branch_counts: Dict[int, int] = {}
    for labels, c, k in branches:
        out = k @ rho @ dagger(k)
        pr = float(np.trace(out).real)
        probs[c] += pr
        states[c] = states[c] + out
        transcript.append((*labels, c, pr))
        branch_probs.append(pr)
        branch_counts[c] = branch_counts.get(c, 0) + 1
    cond = [s / pr if pr > 0 else None for s, pr in zip(states, probs)]
    result = SimulationResult(probs, cond, transcript, branch_counts=branch_counts)
    if shots is not None:
        if seed is None:
            raise ValueError("sampling requires an explicit seed")
        rng = np.random.default_rng(seed)
        bp = np.clip(np.array(branch_probs), 0.0, None)
        draws = rng.choice(len(bp), size=shots, p=bp / bp.sum())
        outcomes = np.array([branches[k][1] for k in draws], dtype=int)
        result.counts = np.bincount(outcomes, minlength=n_outcomes)
        result.seed, result.shots = seed, shots
    return result


def simulate_ideal(
    p: IdealProtocol,
    rho: np.ndarray,
    seed: Optional[int] = None,
    shots: Optional[int] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> SimulationResult:
    """Enumerate every ``(i_A, i_B)`` branch; optionally draw ``shots`` samples.

    Transcript rows are ``(i_A, i_B, f(i_A, i_B), probability)``.
    """
    n = len(p.basis)
    rho = _check_state(rho, n, tol)
    kraus = branch_kraus(p)
    branches = [((ia, ib), p.relabel(ia, ib), kraus[ia, ib]) for ia in range(n) for ib in range(n)]
    return _run(branches, rho, n, shots, seed)


def ideal_outcomes(basis: MeasurementBasis, rho: np.ndarray) -> Tuple[np.ndarray, List[Optional[np.ndarray]]]:
    """Born probabilities ``Tr[P_c rho]`` and states ``P_c rho P_c / Tr``."""
    probs, states = [], []
    for proj in basis.projectors():
        out = proj @ rho @ proj
        pr = float(np.trace(out).real)
        probs.append(pr)
        states.append(out / pr if pr > 1e-14 else None)
    return np.array(probs), states


@dataclass(frozen=True)
class BlockBasisSpec:
    inner: MeasurementBasis
    r_a: int
    r_b: int
    w_a: Tuple[np.ndarray, ...]
    w_b: Tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return self.inner.dim

    def embedding_a(self, p: int) -> np.ndarray:
        """``W^A_p`` as an isometry ``C^d -> S_A``."""
        return _block(self.r_a, self.d, p) @ self.w_a[p]

    def embedding_b(self, q: int) -> np.ndarray:
        return _block(self.r_b, self.d, q) @ self.w_b[q]

    def labels(self) -> List[Tuple[int, int, int]]:
        n = len(self.inner)
        return [(p, q, i) for p in range(self.r_a) for q in range(self.r_b) for i in range(n)]

    def flat_basis(self) -> MeasurementBasis:
        ops = [
            self.embedding_a(p) @ self.inner.ops[i] @ self.embedding_b(q).T
            for p, q, i in self.labels()
        ]
        return MeasurementBasis(np.array(ops))


def _block(r: int, d: int, p: int) -> np.ndarray:
    e = np.zeros((r * d, d))
    e[p * d:(p + 1) * d, :] = np.eye(d)
    return e


def build_block_basis(
    inner: MeasurementBasis,
    r_a: int,
    r_b: int,
    w_a: Optional[Sequence[np.ndarray]] = None,
    w_b: Optional[Sequence[np.ndarray]] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> Tuple[BlockBasisSpec, MeasurementBasis]:
    """Assemble ``{W^A_p (x) W^B_q |M_i>>}`` and validate it as an orthonormal basis.

    Omitted isomorphisms default to the identity.
    """
    d = inner.dim
    if not classify_equal_resource(inner, tol).localizable:
        raise NotLocalizableError("inner basis must be a nice Bell basis")
    w_a = tuple(np.eye(d) for _ in range(r_a)) if w_a is None else tuple(np.asarray(w) for w in w_a)
    w_b = tuple(np.eye(d) for _ in range(r_b)) if w_b is None else tuple(np.asarray(w) for w in w_b)
    if len(w_a) != r_a or len(w_b) != r_b:
        raise ValueError("need one isomorphism per subspace")
    for w in w_a + w_b:
        if w.shape != (d, d) or not is_unitary(w, tol):
            raise ValueError("subspace isomorphisms must be d x d unitaries")
    spec = BlockBasisSpec(inner, r_a, r_b, w_a, w_b)
    return spec, validate_measurement_basis(spec.flat_basis(), tol)


def random_block_spec(d: int, r_a: int, r_b: int, rng: np.random.Generator, inner: Optional[MeasurementBasis] = None):
    from .error_basis import gen_weyl_heisenberg

    inner = gen_weyl_heisenberg(d).to_measurement_basis() if inner is None else inner
    w_a = [random_unitary(d, rng) for _ in range(r_a)]
    w_b = [random_unitary(d, rng) for _ in range(r_b)]
    return build_block_basis(inner, r_a, r_b, w_a, w_b)


def block_branches(spec: BlockBasisSpec, j: int = 0, tol: Tolerance = DEFAULT_TOL):
    """Branches ``((p, q, i_A, i_B), flat_outcome, kraus)`` of the three-stage protocol:
    which-subspace measurement followed by ``W^dagger``, the inner nice-Bell
    protocol, then ``W`` back into the chosen subspaces."""
    proto = build_ideal_protocol(spec.inner, j, tol)
    inner = branch_kraus(proto)
    n = len(spec.inner)
    out = []
    for p in range(spec.r_a):
        ea = spec.embedding_a(p)
        for q in range(spec.r_b):
            eb = spec.embedding_b(q)
            pre = np.kron(dagger(ea), dagger(eb))
            post = np.kron(ea, eb)
            for ia in range(n):
                for ib in range(n):
                    c = (p * spec.r_b + q) * n + proto.relabel(ia, ib)
                    out.append(((p, q, ia, ib), c, post @ inner[ia, ib] @ pre))
    return out


def block_instrument(spec: BlockBasisSpec, j: int = 0, tol: Tolerance = DEFAULT_TOL) -> Instrument:
    elements: Dict[object, List[np.ndarray]] = {}
    for _, c, k in block_branches(spec, j, tol):
        elements.setdefault(c, []).append(k)
    return Instrument(elements)


def simulate_block_protocol(
    spec: BlockBasisSpec,
    rho: np.ndarray,
    j: int = 0,
    seed: Optional[int] = None,
    shots: Optional[int] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> SimulationResult:
    """Run the block protocol; outcome ``c`` indexes :meth:`BlockBasisSpec.labels`."""
    n_total = spec.r_a * spec.r_b * len(spec.inner)
    size = spec.r_a * spec.d * spec.r_b * spec.d
    rho = _check_state(rho, size, tol)
    return _run(block_branches(spec, j, tol), rho, n_total, shots, seed)
