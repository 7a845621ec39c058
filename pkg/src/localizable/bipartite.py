"""Double-ket representation of bipartite vectors, POVMs and partial traces.

Conventions
-----------
For an operator ``E: H_in -> H_out`` the double ket ``|E>> = (I (x) E) sum_i |i>|i>``
lives on ``H_in (x) H_out`` and its component on ``|i>_in |j>_out`` is ``E[j, i]``.
The roles used throughout the package are

=========  ==========  ===========
system     input       output
=========  ==========  ===========
Alice      R_A         S_A
Bob        S_B         R_B
target     S_B         S_A
resource   R_B         R_A
=========  ==========  ===========

User-facing two-party vectors are always ordered ``S_A (x) S_B`` with ``S_A``
major, so a target vector reshapes row-major into its operator ``M: S_B -> S_A``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .numeric import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    dagger,
    numeric_rank,
    phase_fix,
    proportional_up_to_scalar,
    svd,
)


class ValidationError(ValueError):
    """Input failed a structural check; ``detail`` carries a diagnostic dict."""

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


@dataclass(frozen=True)
class DoubleKet:
    op: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "op", as_matrix(self.op, "double-ket operator"))

    @property
    def dim_in(self) -> int:
        return self.op.shape[1]

    @property
    def dim_out(self) -> int:
        return self.op.shape[0]

    def vector_in_out(self) -> np.ndarray:
        """Amplitudes on ``H_in (x) H_out`` (the native double-ket ordering)."""
        return self.op.T.reshape(-1)

    def vector_out_in(self) -> np.ndarray:
        """Amplitudes on ``H_out (x) H_in``."""
        return self.op.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.op))


def to_double_ket(vector, d: int, d_b: Optional[int] = None) -> DoubleKet:
    """Reshape an ``S_A (x) S_B`` amplitude vector into ``M: S_B -> S_A``."""
    d_b = d if d_b is None else d_b
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    if v.size != d * d_b:
        raise ValueError(f"vector of length {v.size} does not match {d}x{d_b}")
    return DoubleKet(v.reshape(d, d_b))


def from_double_ket(ket: DoubleKet) -> np.ndarray:
    """Inverse of :func:`to_double_ket`: the ``S_A (x) S_B`` amplitude vector."""
    return ket.vector_out_in()


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v).reshape(-1)
    return np.outer(v, np.conj(v))


def contract_triple(a: DoubleKet, r: DoubleKet, b: DoubleKet) -> DoubleKet:
    """The operator ``A R^* B: S_B -> S_A`` (Alice ``A``, resource ``R``, Bob ``B``).

    ``|A R^* B>>`` is the partial inner product of ``|R>>`` against ``|A>>|B>>``
    over ``R_A (x) R_B``.
    """
    if a.dim_in != r.dim_out:
        raise ValueError(f"Alice input R_A={a.dim_in} != resource output R_A={r.dim_out}")
    if r.dim_in != b.dim_out:
        raise ValueError(f"resource input R_B={r.dim_in} != Bob output R_B={b.dim_out}")
    return DoubleKet(a.op @ np.conj(r.op) @ b.op)


def schmidt_rank(v: DoubleKet, tol: Tolerance = DEFAULT_TOL) -> int:
    return numeric_rank(v.op, tol)


def partial_trace(rho, keep: int, dims: Tuple[int, int]) -> np.ndarray:
    """Trace out one factor of a two-factor operator; ``keep`` is 0 or 1."""
    rho = np.asarray(rho, dtype=np.complex128)
    d1, d2 = dims
    if rho.shape != (d1 * d2, d1 * d2):
        raise ValueError(f"operator shape {rho.shape} inconsistent with dims {dims}")
    t = rho.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ijkj->ik", t)
    if keep == 1:
        return np.einsum("ijil->jl", t)
    raise ValueError("keep must be 0 or 1")


def is_maximally_entangled(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the unit-norm square ``m`` satisfies ``m m^dagger = I/d``."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"maximal entanglement needs a square operator, got {m.shape}")
    d = m.shape[0]
    return bool(np.linalg.norm(m @ dagger(m) - np.eye(d) / d) <= tol.eps_sum)


@dataclass(frozen=True)
class MeasurementBasis:
    """A rank-1 PVM stored as operators ``M_i: S_B -> S_A`` (array ``(n, dA, dB)``)."""

    ops: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=np.complex128)
        if ops.ndim != 3:
            raise ValueError(f"expected a stack of matrices, got shape {ops.shape}")
        object.__setattr__(self, "ops", ops)

    @property
    def dim_a(self) -> int:
        return self.ops.shape[1]

    @property
    def dim_b(self) -> int:
        return self.ops.shape[2]

    @property
    def dim(self) -> int:
        if self.dim_a != self.dim_b:
            raise ValueError(f"basis on {self.dim_a}x{self.dim_b} is not square")
        return self.dim_a

    def __len__(self) -> int:
        return self.ops.shape[0]

    def vectors(self) -> np.ndarray:
        """Amplitude vectors on ``S_A (x) S_B``, one per row."""
        return self.ops.reshape(len(self), -1)

    def projectors(self) -> np.ndarray:
        v = self.vectors()
        return np.einsum("ni,nj->nij", v, np.conj(v))

    def ranks(self, tol: Tolerance = DEFAULT_TOL) -> List[int]:
        return [numeric_rank(m, tol) for m in self.ops]

    def transformed(self, u_a: np.ndarray, u_b: np.ndarray) -> "MeasurementBasis":
        """Apply ``u_a (x) u_b`` to every vector: ``M -> u_a M u_b^T``."""
        return MeasurementBasis(np.einsum("ij,njk,lk->nil", u_a, self.ops, u_b))

    @classmethod
    def from_vectors(cls, vectors, dim_a: int, dim_b: Optional[int] = None) -> "MeasurementBasis":
        dim_b = dim_a if dim_b is None else dim_b
        v = np.asarray(vectors, dtype=np.complex128)
        return cls(v.reshape(v.shape[0], dim_a, dim_b))


def validate_measurement_basis(ops, tol: Tolerance = DEFAULT_TOL) -> MeasurementBasis:
    """Check ``Tr[M_i^dagger M_j] = delta_ij`` over a full set of ``dA*dB`` operators.

    Raises :class:`ValidationError` naming the first offending pair.
    """
    basis = ops if isinstance(ops, MeasurementBasis) else MeasurementBasis(ops)
    n = len(basis)
    if n != basis.dim_a * basis.dim_b:
        raise ValidationError(
            f"expected {basis.dim_a * basis.dim_b} elements, got {n}",
            kind="cardinality", expected=basis.dim_a * basis.dim_b, found=n,
        )
    if not np.all(np.isfinite(basis.ops)):
        raise ValidationError("non-finite entries", kind="finite")
    v = basis.vectors()
    gram = np.conj(v) @ v.T
    dev = np.abs(gram - np.eye(n))
    bad = np.argwhere(dev > tol.eps_sum)
    if bad.size:
        i, j = (int(x) for x in bad[0])
        raise ValidationError(
            f"elements {i} and {j} overlap: |Tr[M_{i}^dag M_{j}] - delta| = {dev[i, j]:.3g}",
            kind="orthonormality", pair=(i, j), overlap=complex(gram[i, j]), deviation=float(dev[i, j]),
        )
    return basis


@dataclass(frozen=True)
class Povm:
    elements: Tuple[np.ndarray, ...]
    labels: Tuple = ()

    def __post_init__(self):
        elems = tuple(as_matrix(e, "POVM element") for e in self.elements)
        object.__setattr__(self, "elements", elems)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(len(elems))))
        if len(self.labels) != len(elems):
            raise ValueError("labels and elements differ in length")

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def check(self, tol: Tolerance = DEFAULT_TOL) -> "Povm":
        n = self.dim
        total = np.zeros((n, n), dtype=np.complex128)
        for k, e in enumerate(self.elements):
            if e.shape != (n, n):
                raise ValidationError(f"element {k} has shape {e.shape}", kind="shape", index=k)
            if np.linalg.norm(e - dagger(e)) > tol.eps_sum:
                raise ValidationError(f"element {k} is not Hermitian", kind="hermitian", index=k)
            lo = float(np.linalg.eigvalsh((e + dagger(e)) / 2)[0])
            if lo < -tol.eps_sum:
                raise ValidationError(
                    f"element {k} has eigenvalue {lo:.3g}", kind="positivity", index=k, min_eig=lo
                )
            total += e
        dev = float(np.linalg.norm(total - np.eye(n)))
        if dev > tol.eps_sum:
            raise ValidationError(f"elements sum to identity only within {dev:.3g}", kind="completeness", deviation=dev)
        return self

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.array([np.trace(e @ rho).real for e in self.elements])


@dataclass(frozen=True)
class RankOnePovm:
    """Rank-1 POVM with element ``c`` equal to ``|K_c>><<K_c|``.

    The kets are stored as operators in a stack ``(n, dim_out, dim_in)``; which
    tensor ordering the elements act on depends on the role (see module docs).
    A plain vector is a double ket with a one-dimensional input space.
    """

    kets: np.ndarray

    def __post_init__(self):
        kets = np.asarray(self.kets, dtype=np.complex128)
        if kets.ndim != 3:
            raise ValueError(f"expected stack of operators, got shape {kets.shape}")
        object.__setattr__(self, "kets", kets)

    def __len__(self) -> int:
        return self.kets.shape[0]

    @property
    def dim_out(self) -> int:
        return self.kets.shape[1]

    @property
    def dim_in(self) -> int:
        return self.kets.shape[2]

    def ket(self, c: int) -> DoubleKet:
        return DoubleKet(self.kets[c])

    def elements(self, order: str = "out_in") -> np.ndarray:
        """Element matrices on ``H_out (x) H_in`` (``"out_in"``) or ``H_in (x) H_out``."""
        if order == "out_in":
            v = self.kets.reshape(len(self), -1)
        elif order == "in_out":
            v = np.swapaxes(self.kets, 1, 2).reshape(len(self), -1)
        else:
            raise ValueError(order)
        return np.einsum("ni,nj->nij", v, np.conj(v))

    def check(self, tol: Tolerance = DEFAULT_TOL, non_redundant: bool = True) -> "RankOnePovm":
        total = self.elements().sum(axis=0)
        dev = float(np.linalg.norm(total - np.eye(total.shape[0])))
        if dev > tol.eps_sum:
            raise ValidationError(f"rank-1 POVM incomplete within {dev:.3g}", kind="completeness", deviation=dev)
        if non_redundant:
            for i in range(len(self)):
                for j in range(i + 1, len(self)):
                    if proportional_up_to_scalar(self.kets[i], self.kets[j], tol) is not None:
                        raise ValidationError(f"kets {i} and {j} are proportional", kind="redundant", pair=(i, j))
        return self


@dataclass
class RefinedPovm:
    """Output of :func:`refine_povm`.

    ``merge[m]`` lists ``(original_outcome, weight)`` pairs: refined outcome ``m``
    is reported as original outcome ``a`` with probability ``weight``. The
    weights of each ``merge[m]`` sum to one. ``dropped`` lists original outcomes
    with a zero element (they have no rank-1 pieces).
    """

    povm: RankOnePovm
    merge: List[List[Tuple[object, float]]]
    dropped: List[object] = field(default_factory=list)

    def preimages(self) -> Dict[object, List[int]]:
        out: Dict[object, List[int]] = {}
        for m, pairs in enumerate(self.merge):
            for a, _ in pairs:
                out.setdefault(a, []).append(m)
        for a in self.dropped:
            out.setdefault(a, [])
        return out

    def original_probabilities(self, rho: np.ndarray, labels: Sequence) -> np.ndarray:
        refined = np.array([np.trace(e @ rho).real for e in self.povm.elements()])
        index = {a: k for k, a in enumerate(labels)}
        out = np.zeros(len(labels))
        for m, pairs in enumerate(self.merge):
            for a, w in pairs:
                out[index[a]] += w * refined[m]
        return out


def refine_povm(p: Povm, tol: Tolerance = DEFAULT_TOL) -> RefinedPovm:
    """Split every element into rank-1 pieces, then sum proportional pieces.

    Eigenvectors come from the SVD of each (positive) element in descending
    order, phase-fixed so their first nonzero entry is real positive. The merge
    weights are the trace ratios ``Tr[piece] / Tr[merged element]``.
    """
    p.check(tol)
    pieces: List[Tuple[object, np.ndarray, float]] = []
    dropped = []
    for label, e in zip(p.labels, p.elements):
        herm = (e + dagger(e)) / 2
        if np.linalg.norm(herm) == 0.0:
            dropped.append(label)
            continue
        u, s, _ = svd(herm)
        r = numeric_rank(herm, tol)
        if r == 0:
            dropped.append(label)
            continue
        for i in range(r):
            pieces.append((label, phase_fix(u[:, i]), float(s[i])))

    groups: List[List[Tuple[object, np.ndarray, float]]] = []
    reps: List[np.ndarray] = []
    for piece in pieces:
        proj = projector(piece[1])
        for g, rep in enumerate(reps):
            if proportional_up_to_scalar(proj, rep, tol) is not None:
                groups[g].append(piece)
                break
        else:
            reps.append(proj)
            groups.append([piece])

    kets = []
    merge = []
    for group in groups:
        total = sum(piece[2] for piece in group)
        element = sum(piece[2] * projector(piece[1]) for piece in group)
        u, s, _ = svd(element)
        kets.append(np.sqrt(s[0]) * phase_fix(u[:, 0]))
        weights: Dict[object, float] = {}
        for label, _, w in group:
            weights[label] = weights.get(label, 0.0) + w / total
        merge.append(list(weights.items()))
    povm = RankOnePovm(np.array(kets)[:, :, None])
    return RefinedPovm(povm=povm, merge=merge, dropped=dropped)
