"""Classification of two-qubit rank-1 PVMs localizable with a Schmidt-number-2 resource.

Up to local unitaries, element order and phases the localizable bases are the
computational basis, the Bell basis and the BB84 basis (in either party
orientation). Product bases are reduced to the form
``{|00>, |01>, |1 e0>, |1 e1>}`` (orientation ``"L"``) or
``{|00>, |10>, |e0 1>, |e1 1>}`` (orientation ``"R"``) and classified by
``mu = |<e0|0>|^2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .bipartite import DoubleKet, MeasurementBasis, RankOnePovm, ValidationError, is_maximally_entangled
from .localizability import Localization, PatternFunction, construct_localization
from .numeric import DEFAULT_TOL, Tolerance, dagger, numeric_rank, svd

KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)
PLUS = np.array([1, 1], dtype=np.complex128) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=np.complex128) / np.sqrt(2)
PAULIS = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=np.complex128)


class TwoQubitTag(str, enum.Enum):
    COMPUTATIONAL = "Computational"
    BELL = "Bell"
    BB84 = "BB84"
    NOT_LOCALIZABLE = "NotLocalizable"


@dataclass
class TwoQubitClass:
    tag: TwoQubitTag
    u_a: np.ndarray
    u_b: np.ndarray
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"tag": self.tag.value, **{k: v for k, v in self.detail.items() if k != "e_basis"}}


@dataclass
class ProductCanonicalForm:
    """``(u_a (x) u_b)`` maps the input onto the canonical product form.

    ``order[k]`` is the input index landing on canonical position ``k``, and
    ``e_basis`` holds ``e0, e1`` as columns.
    """

    orientation: str
    u_a: np.ndarray
    u_b: np.ndarray
    e_basis: np.ndarray
    order: Tuple[int, int, int, int]

    @property
    def mu(self) -> float:
        return float(abs(self.e_basis[0, 0]) ** 2)


def _kets(*pairs) -> MeasurementBasis:
    return MeasurementBasis(np.array([np.outer(a, b) for a, b in pairs]))


def computational_basis(d: int = 2) -> MeasurementBasis:
    ops = np.zeros((d * d, d, d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            ops[a * d + b, a, b] = 1.0
    return MeasurementBasis(ops)


def bell_basis() -> MeasurementBasis:
    """Pauli operators over sqrt(2): ``|Phi+>, |Psi+>, i|Psi->, |Phi->``."""
    return MeasurementBasis(PAULIS / np.sqrt(2))


def bb84_basis(orientation: str = "L", theta: float = 0.0) -> MeasurementBasis:
    rz = np.diag([1.0, np.exp(1j * theta)])
    e0, e1 = rz @ PLUS, rz @ MINUS
    if orientation == "L":
        return _kets((KET0, KET0), (KET0, KET1), (KET1, e0), (KET1, e1))
    if orientation == "R":
        return _kets((KET0, KET0), (KET1, KET0), (e0, KET1), (e1, KET1))
    raise ValueError("orientation must be 'L' or 'R'")


def pbsm_basis() -> MeasurementBasis:
    s = 1 / np.sqrt(2)
    return MeasurementBasis(np.array([
        [[1, 0], [0, 0]],
        [[0, 0], [0, 1]],
        [[0, s], [s, 0]],
        [[0, s], [-s, 0]],
    ], dtype=np.complex128))


def product_basis(mu: float, phi: float = 0.0, orientation: str = "L") -> MeasurementBasis:
    """``{|00>, |01>, |1 e0>, |1 e1>}`` with ``|<e0|0>|^2 = mu`` (or the party swap)."""
    e0 = np.array([np.sqrt(mu), np.sqrt(1 - mu) * np.exp(1j * phi)])
    e1 = np.array([-np.sqrt(1 - mu) * np.exp(-1j * phi), np.sqrt(mu)])
    if orientation == "L":
        return _kets((KET0, KET0), (KET0, KET1), (KET1, e0), (KET1, e1))
    return _kets((KET0, KET0), (KET1, KET0), (e0, KET1), (e1, KET1))


def iso_entangled_basis(theta: float) -> MeasurementBasis:
    """All four elements share Schmidt coefficients ``(cos theta, sin theta)``."""
    c, s = np.cos(theta), np.sin(theta)
    return MeasurementBasis(np.array([
        [[c, 0], [0, s]],
        [[s, 0], [0, -c]],
        [[0, c], [s, 0]],
        [[0, s], [-c, 0]],
    ], dtype=np.complex128))


def _factor(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """``m ~ alpha beta^T`` for a rank-1 ``m`` (unit factors, phase in beta)."""
    u, s, vh = svd(m)
    return u[:, 0], s[0] * vh[0]


def _perp(v: np.ndarray) -> np.ndarray:
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def _ray_groups(vectors: List[np.ndarray], tol: Tolerance) -> Optional[List[List[int]]]:
    """Partition into two orthogonal rays of two vectors each, or ``None``."""
    groups: List[List[int]] = []
    for k, v in enumerate(vectors):
        for g in groups:
            if 1.0 - abs(np.vdot(vectors[g[0]], v)) ** 2 <= tol.eps_sum:
                g.append(k)
                break
        else:
            groups.append([k])
    if len(groups) != 2 or any(len(g) != 2 for g in groups):
        return None
    if abs(np.vdot(vectors[groups[0][0]], vectors[groups[1][0]])) ** 2 > tol.eps_sum:
        return None
    return groups


def canonicalize_product_basis(b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> ProductCanonicalForm:
    if b.ops.shape != (4, 2, 2):
        raise ValueError("expected four two-qubit vectors")
    for k, m in enumerate(b.ops):
        if numeric_rank(m, tol) != 1:
            raise ValueError(f"vector {k} is not a product vector")
    factors = [_factor(m) for m in b.ops]
    alphas = [f[0] for f in factors]
    betas = [f[1] / np.linalg.norm(f[1]) for f in factors]
    for orientation, grouped, other in (("L", alphas, betas), ("R", betas, alphas)):
        groups = _ray_groups(grouped, tol)
        if groups is None:
            continue
        (g00, g01), (g10, g11) = groups
        if abs(np.vdot(other[g00], other[g01])) ** 2 > tol.eps_sum:
            continue
        u_grouped = np.array([np.conj(grouped[g00]), np.conj(_perp(grouped[g00]))])
        u_other = np.array([np.conj(other[g00]), np.conj(_perp(other[g00]))])
        e_basis = np.column_stack([u_other @ other[g10], u_other @ other[g11]])
        if orientation == "L":
            u_a, u_b = u_grouped, u_other
        else:
            u_a, u_b = u_other, u_grouped
        return ProductCanonicalForm(orientation, u_a, u_b, e_basis, (g00, g01, g10, g11))
    raise ValidationError("no party admits a 2+2 grouping into orthogonal rays", kind="product_structure")


def _bell_unitaries(b: MeasurementBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Local unitaries taking a two-qubit maximally entangled basis onto the Bell basis."""
    us = np.sqrt(2) * b.ops
    ws = us @ dagger(us[0])
    herm = []
    for w in ws[1:]:
        lam = np.sqrt((w @ w)[0, 0])
        h = w / lam
        herm.append((h + dagger(h)) / 2)
    _, vecs = np.linalg.eigh(herm[0])
    u1 = dagger(vecs[:, ::-1])
    k = u1 @ herm[1] @ dagger(u1)
    phi = np.angle(k[1, 0])
    u_a = np.diag([1.0, np.exp(-1j * phi)]) @ u1
    u_b = (dagger(us[0]) @ dagger(u_a)).T
    return u_a, u_b


def _nearest(mu: float, tol: Tolerance) -> Tuple[Optional[TwoQubitTag], bool]:
    for target, tag in ((0.0, TwoQubitTag.COMPUTATIONAL), (1.0, TwoQubitTag.COMPUTATIONAL), (0.5, TwoQubitTag.BB84)):
        gap = abs(mu - target)
        if gap <= tol.eps_sum:
            return tag, False
        if gap <= 10 * tol.eps_sum:
            return tag, True
    return None, False


def classify_two_qubit(b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> TwoQubitClass:
    if b.ops.shape != (4, 2, 2):
        raise ValueError(f"two-qubit classification needs a 4-element basis on C2xC2, got {b.ops.shape}")
    ranks = b.ranks(tol)
    if max(ranks) == 2:
        not_me = [i for i, m in enumerate(b.ops) if not is_maximally_entangled(m, tol)]
        if not_me:
            eye = np.eye(2)
            return TwoQubitClass(TwoQubitTag.NOT_LOCALIZABLE, eye, eye, {
                "reason": "entangled element present but basis not maximally entangled",
                "witness": next((i for i in not_me if ranks[i] == 2), not_me[0]),
                "ranks": ranks,
            })
        u_a, u_b = _bell_unitaries(b)
        return TwoQubitClass(TwoQubitTag.BELL, u_a, u_b, {})

    form = canonicalize_product_basis(b, tol)
    mu = form.mu
    tag, low = _nearest(mu, tol)
    detail = {"orientation": form.orientation, "mu": mu, "low_confidence": low, "e_basis": form.e_basis}
    if tag is None:
        detail["reason"] = "product basis with e-basis neither computational nor unbiased"
        return TwoQubitClass(TwoQubitTag.NOT_LOCALIZABLE, form.u_a, form.u_b, detail)
    u_a, u_b = form.u_a, form.u_b
    if tag is TwoQubitTag.BB84:
        e0 = form.e_basis[:, 0]
        theta = float(np.angle(e0[1] / e0[0]))
        undo = np.diag([1.0, np.exp(-1j * theta)])
        if form.orientation == "L":
            u_b = undo @ u_b
        else:
            u_a = undo @ u_a
        detail["theta"] = theta
    return TwoQubitClass(tag, u_a, u_b, detail)


def canonical_basis(cls: TwoQubitClass) -> Optional[MeasurementBasis]:
    if cls.tag is TwoQubitTag.COMPUTATIONAL:
        return computational_basis(2)
    if cls.tag is TwoQubitTag.BELL:
        return bell_basis()
    if cls.tag is TwoQubitTag.BB84:
        return bb84_basis(cls.detail["orientation"])
    return None


def same_ray_set(a: MeasurementBasis, b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Equality of two bases as sets of rank-1 projectors."""
    overlaps = np.abs(np.conj(a.vectors()) @ b.vectors().T) ** 2
    n = len(a)
    return len(b) == n and bool(np.all(np.abs(np.sort(overlaps, axis=1)[:, -1] - 1) <= tol.eps_sum)) and \
        len(set(np.argmax(overlaps, axis=1).tolist())) == n


def pattern_from_products(alice: RankOnePovm, resource: DoubleKet, bob: RankOnePovm, target: MeasurementBasis) -> PatternFunction:
    """``f(a, b)`` = the target element with the largest overlap with ``A_a R^* B_b``."""
    prods = np.einsum("aij,jk,bkl->abil", alice.kets, np.conj(resource.op), bob.kets)
    overlaps = np.abs(np.einsum("cil,abil->abc", np.conj(target.ops), prods))
    return PatternFunction(np.argmax(overlaps, axis=2), len(target))


def _bb84_canonical(orientation: str) -> Tuple[DoubleKet, np.ndarray, np.ndarray]:
    """Bell measurement on one side against a shared ``|Phi+>``; the other
    side's target qubit picks the basis in which its resource half is read."""
    pauli_kets = np.array([PAULIS[0], PAULIS[1], PAULIS[3], PAULIS[1] @ PAULIS[3]]) / np.sqrt(2)
    basis_kets = [(0, KET0), (0, KET1), (1, PLUS), (1, MINUS)]
    if orientation == "R":
        alice = pauli_kets
        bob = np.array([np.outer(phi, np.eye(2)[s]) for s, phi in basis_kets])
    else:
        alice = np.array([np.outer(np.eye(2)[s], phi) for s, phi in basis_kets])
        bob = pauli_kets
    return DoubleKet(np.eye(2) / np.sqrt(2)), alice, bob


def build_two_qubit_localization(b: MeasurementBasis, cls: TwoQubitClass, tol: Tolerance = DEFAULT_TOL) -> Localization:
    """Explicit localization for a basis classified as localizable."""
    if cls.tag is TwoQubitTag.BELL:
        return construct_localization(b, 0, tol)
    u_a, u_b = cls.u_a, cls.u_b
    if cls.tag is TwoQubitTag.COMPUTATIONAL:
        resource = DoubleKet(np.ones((1, 1)))
        alice = RankOnePovm(np.array([dagger(u_a)[:, [a]] for a in range(2)]))
        bob = RankOnePovm(np.array([dagger(u_b)[:, [s]].T for s in range(2)]))
    elif cls.tag is TwoQubitTag.BB84:
        resource, alice_c, bob_c = _bb84_canonical(cls.detail["orientation"])
        alice = RankOnePovm(np.einsum("ij,njk->nik", dagger(u_a), alice_c))
        bob = RankOnePovm(np.einsum("nij,jk->nik", bob_c, np.conj(u_b)))
    else:
        raise ValueError(f"no localization exists for class {cls.tag.value}")
    return Localization(resource, alice, bob, pattern_from_products(alice, resource, bob, b))
