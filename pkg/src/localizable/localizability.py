"""Deciding, synthesizing and verifying localizations of rank-1 PVMs.

A localization of a target basis ``{|M_c>>}`` is a resource ``|R>>`` on
``R_A (x) R_B`` together with rank-1 local POVMs ``{|A_a>>}`` (Alice, on
``S_A (x) R_A``) and ``{|B_b>>}`` (Bob, on ``S_B (x) R_B``) and a pattern
function ``f`` such that ``A_a R^* B_b`` is proportional to ``M_{f(a,b)}``.
:func:`verify_localization` checks such tuples by evaluating the defining
partial-trace formula on the full four-party space, with no shortcuts.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from .bipartite import (
    DoubleKet,
    MeasurementBasis,
    Povm,
    RankOnePovm,
    ValidationError,
    is_maximally_entangled,
)
from .error_basis import basis_to_ueb, check_lu_equivalent_to_nice, is_latin
from .numeric import DEFAULT_TOL, Tolerance, dagger, numeric_rank, random_isometry, svd


class OutOfHypothesisError(ValueError):
    """The basis has no element of maximal Schmidt rank, so the equal-resource
    characterization says nothing about it."""


class SingularElementError(ValueError):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class NotLocalizableError(ValueError):
    pass


class Reason(str, enum.Enum):
    LOCALIZABLE = "Localizable"
    NOT_MAX_ENTANGLED = "NotMaxEntangledBasis"
    NOT_NICE = "NotNice"
    MIXED_RANKS = "MixedRanks"


@dataclass(frozen=True)
class Verdict:
    localizable: bool
    reason: Reason
    witness: Optional[Tuple[int, ...]] = None
    tags: FrozenSet[Reason] = frozenset()

    def as_dict(self) -> dict:
        return {
            "localizable": self.localizable,
            "reason": self.reason.value,
            "witness": None if self.witness is None else list(self.witness),
            "tags": sorted(t.value for t in self.tags),
        }


@dataclass(frozen=True)
class PatternFunction:
    table: np.ndarray
    z_size: int

    def __post_init__(self):
        t = np.asarray(self.table, dtype=int)
        if t.ndim != 2:
            raise ValueError("pattern table must be 2-d")
        if t.size and (t.min() < 0 or t.max() >= self.z_size):
            raise ValueError(f"pattern values must lie in [0, {self.z_size})")
        object.__setattr__(self, "table", t)

    @property
    def x_size(self) -> int:
        return self.table.shape[0]

    @property
    def y_size(self) -> int:
        return self.table.shape[1]

    def __call__(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def is_latin(self) -> bool:
        return self.x_size == self.y_size == self.z_size and is_latin(self.table)

    def conditional(self) -> np.ndarray:
        """Deterministic ``p(c|a,b)`` as an ``(X, Y, Z)`` array."""
        p = np.zeros((self.x_size, self.y_size, self.z_size))
        a, b = np.indices(self.table.shape)
        p[a, b, self.table] = 1.0
        return p

    def derived(self) -> Tuple[np.ndarray, np.ndarray]:
        """For a Latin pattern, ``f1[i2, i3] = i1`` and ``f2[i3, i1] = i2``
        whenever ``f[i1, i2] = i3``."""
        n = self.z_size
        f1 = np.empty((n, n), dtype=int)
        f2 = np.empty((n, n), dtype=int)
        for i1 in range(self.x_size):
            for i2 in range(self.y_size):
                i3 = self.table[i1, i2]
                f1[i2, i3] = i1
                f2[i3, i1] = i2
        return f1, f2


@dataclass(frozen=True)
class Localization:
    """``resource`` is ``R: R_B -> R_A``; Alice's kets are ``A_a: R_A -> S_A``
    and Bob's are ``B_b: S_B -> R_B``."""

    resource: DoubleKet
    alice: RankOnePovm
    bob: RankOnePovm
    pattern: PatternFunction

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        """``(S_A, R_A, S_B, R_B)``."""
        return (self.alice.dim_out, self.alice.dim_in, self.bob.dim_in, self.bob.dim_out)

    def to_general(self) -> "GeneralLocalization":
        r = self.resource.vector_out_in()
        return GeneralLocalization(
            resource=np.outer(r, np.conj(r)),
            alice=self.alice.elements("out_in"),
            bob=self.bob.elements("in_out"),
            p=self.pattern.conditional(),
            dims=self.dims,
        )


@dataclass(frozen=True)
class GeneralLocalization:
    """Mixed resource on ``R_A (x) R_B``, local POVM elements on ``S_A (x) R_A``
    and ``S_B (x) R_B``, and a conditional distribution ``p[a, b, c]``."""

    resource: np.ndarray
    alice: np.ndarray
    bob: np.ndarray
    p: np.ndarray
    dims: Tuple[int, int, int, int]


@dataclass
class VerificationReport:
    residual: float
    residuals: List[float]
    eq2_ok: Optional[bool] = None
    eq3_ok: Optional[bool] = None
    lemma7: Optional[Dict[str, bool]] = None
    notes: List[str] = field(default_factory=list)

    def passed(self, threshold: float) -> bool:
        return self.residual < threshold

    def as_dict(self) -> dict:
        return {
            "residual": self.residual,
            "residuals": list(self.residuals),
            "eq2_ok": self.eq2_ok,
            "eq3_ok": self.eq3_ok,
            "lemma7": self.lemma7,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ClosureResult:
    """``table[i, j, k] = l`` with ``M_l`` proportional to ``M_i M_j^{-1} M_k``."""

    table: Optional[np.ndarray]
    failing: Optional[Tuple[int, int, int]] = None

    @property
    def holds(self) -> bool:
        return self.table is not None


def triple_product_closure(b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> ClosureResult:
    ops = b.ops
    n = len(b)
    for j, m in enumerate(ops):
        if numeric_rank(m, tol) < m.shape[0]:
            raise SingularElementError(
                f"element {j} is rank-deficient; a localizable basis with a full-rank "
                "element must have all elements full-rank", index=j,
            )
    inv = np.linalg.inv(ops)
    prods = np.einsum("iab,jbc,kcd->ijkad", ops, inv, ops)
    overlaps = np.einsum("lad,ijkad->ijkl", np.conj(ops), prods)
    best = np.argmax(np.abs(overlaps), axis=3)
    alpha = np.take_along_axis(overlaps, best[..., None], axis=3)[..., 0]
    fit = alpha[..., None, None] * ops[best]
    resid = np.linalg.norm((prods - fit).reshape(n, n, n, -1), axis=3)
    scale = np.linalg.norm(prods.reshape(n, n, n, -1), axis=3)
    bad = np.argwhere(resid > tol.eps_prop * scale)
    if bad.size:
        return ClosureResult(None, tuple(int(x) for x in bad[0]))
    return ClosureResult(best.astype(int))


def classify_equal_resource(b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Decide localizability of a square basis by a ``d x d`` resource.

    Requires at least one element of Schmidt rank ``d``; otherwise raises
    :class:`OutOfHypothesisError`. Checks maximal entanglement of every element
    first, then niceness of ``{M_0^{-1} M_i}``. Rank-deficient elements add the
    ``MixedRanks`` tag to a ``NotMaxEntangledBasis`` verdict.
    """
    d = b.dim
    ranks = b.ranks(tol)
    if max(ranks) < d:
        raise OutOfHypothesisError(f"no element has Schmidt rank {d} (ranks {ranks})")
    tags = set()
    if min(ranks) < d:
        tags.add(Reason.MIXED_RANKS)
    not_me = [i for i, m in enumerate(b.ops) if not is_maximally_entangled(m, tol)]
    if not_me:
        tags.add(Reason.NOT_MAX_ENTANGLED)
        # a full-rank element that is not maximally entangled is the sharper witness
        witness = next((i for i in not_me if ranks[i] == d), not_me[0])
        return Verdict(False, Reason.NOT_MAX_ENTANGLED, (witness,), frozenset(tags))
    ueb = basis_to_ueb(b, tol)
    nice, _ = check_lu_equivalent_to_nice(ueb, tol)
    if not nice:
        closure = triple_product_closure(b, tol)
        return Verdict(False, Reason.NOT_NICE, closure.failing, frozenset({Reason.NOT_NICE}))
    return Verdict(True, Reason.LOCALIZABLE)


def construct_localization(b: MeasurementBasis, j: int = 0, tol: Tolerance = DEFAULT_TOL) -> Localization:
    """Both parties measure ``{|M_i>>}``; the resource is ``|M_j^T>>``.

    Then ``A_i R^* B_k = M_i M_j^dagger M_k = M_i M_j^{-1} M_k / d``, which the
    niceness condition makes proportional to a single ``M_l``.
    """
    n = len(b)
    if not 0 <= j < n:
        raise IndexError(f"resource index {j} outside [0, {n})")
    verdict = classify_equal_resource(b, tol)
    if not verdict.localizable:
        raise NotLocalizableError(f"basis is not localizable: {verdict.reason.value}")
    closure = triple_product_closure(b, tol)
    pattern = PatternFunction(closure.table[:, j, :], n)
    kets = RankOnePovm(b.ops.copy())
    return Localization(DoubleKet(b.ops[j].T), kets, kets, pattern)


def _target_elements(target: Union[MeasurementBasis, Povm]) -> Tuple[np.ndarray, Optional[Tuple[int, int]]]:
    if isinstance(target, MeasurementBasis):
        return target.projectors(), (target.dim_a, target.dim_b)
    return np.array(target.elements), None


def verify_localization(
    target: Union[MeasurementBasis, Povm],
    loc: Union[Localization, GeneralLocalization],
    tol: Tolerance = DEFAULT_TOL,
) -> VerificationReport:
    """Evaluate ``sum_ab p(c|a,b) Tr_{R_A R_B}[(A_a (x) B_b)(I (x) psi_R)]`` for
    every outcome and report the largest Frobenius distance to ``M_c``."""
    general = loc.to_general() if isinstance(loc, Localization) else loc
    s_a, r_a, s_b, r_b = general.dims
    targets, target_dims = _target_elements(target)
    if target_dims is not None and target_dims != (s_a, s_b):
        raise ValueError(f"target acts on {target_dims}, localization on {(s_a, s_b)}")
    n_a, n_b = s_a * r_a, s_b * r_b
    if general.alice.shape[1:] != (n_a, n_a) or general.bob.shape[1:] != (n_b, n_b):
        raise ValueError("local POVM elements do not match the declared dimensions")
    if general.resource.shape != (r_a * r_b, r_a * r_b):
        raise ValueError("resource does not match the declared dimensions")
    if targets.shape[0] != general.p.shape[2]:
        raise ValueError(f"{targets.shape[0]} target outcomes but p has {general.p.shape[2]}")
    for name, elems, dim in (("Alice", general.alice, n_a), ("Bob", general.bob, n_b)):
        dev = np.linalg.norm(elems.sum(axis=0) - np.eye(dim))
        if dev > tol.eps_sum:
            raise ValidationError(f"{name}'s elements are not a POVM (completeness {dev:.3g})", kind="completeness")

    effective = effective_povm(general)
    residuals = [float(np.linalg.norm(effective[c] - targets[c])) for c in range(targets.shape[0])]
    report = VerificationReport(residual=max(residuals), residuals=residuals)
    if isinstance(loc, Localization) and target_dims is not None:
        _structural_checks(target, loc, tol, report)
    return report


def effective_povm(loc: Union[Localization, GeneralLocalization]) -> np.ndarray:
    """The POVM on ``S_A (x) S_B`` that a localization actually implements."""
    general = loc.to_general() if isinstance(loc, Localization) else loc
    s_a, r_a, s_b, r_b = general.dims
    n_a, n_b = s_a * r_a, s_b * r_b
    # I_{S_A S_B} (x) psi_R arranged on S_A R_A S_B R_B
    psi = general.resource.reshape(r_a, r_b, r_a, r_b)
    embed = np.einsum("ik,jl,abcd->iajbkcld", np.eye(s_a), np.eye(s_b), psi)
    embed = embed.reshape(n_a * n_b, n_a * n_b)
    out = []
    for c in range(general.p.shape[2]):
        weighted_b = np.einsum("ab,bkl->akl", general.p[:, :, c], general.bob)
        g = np.einsum("aij,akl->ikjl", general.alice, weighted_b).reshape(n_a * n_b, n_a * n_b)
        full = (g @ embed).reshape(s_a, r_a, s_b, r_b, s_a, r_a, s_b, r_b)
        out.append(np.einsum("iajbkalb->ijkl", full).reshape(s_a * s_b, s_a * s_b))
    return np.array(out)


def _structural_checks(target: MeasurementBasis, loc: Localization, tol: Tolerance, report: VerificationReport):
    target_rank = max(target.ranks(tol))
    resource_rank = numeric_rank(loc.resource.op, tol)
    report.eq2_ok = resource_rank >= target_rank
    if not report.eq2_ok:
        report.notes.append(f"resource Schmidt rank {resource_rank} < target Schmidt rank {target_rank}")
    alice_rank = max(numeric_rank(k, tol) for k in loc.alice.kets)
    bob_rank = max(numeric_rank(k, tol) for k in loc.bob.kets)
    report.eq3_ok = alice_rank >= target_rank and bob_rank >= target_rank
    s_a, r_a, s_b, r_b = loc.dims
    if s_a == s_b == r_a == r_b and target_rank == s_a:
        d = s_a
        report.lemma7 = {
            "pvm_sizes": len(loc.alice) == len(loc.bob) == d * d,
            "alice_full_rank": all(numeric_rank(k, tol) == d for k in loc.alice.kets),
            "bob_full_rank": all(numeric_rank(k, tol) == d for k in loc.bob.kets),
            "target_full_rank": all(r == d for r in target.ranks(tol)),
            "latin_pattern": loc.pattern.is_latin(),
        }


def compress_resource(loc: Localization, d: Optional[int] = None, tol: Tolerance = DEFAULT_TOL) -> Localization:
    """Move a localization with a Schmidt-rank ``<= d`` resource onto ``C^d (x) C^d``.

    With ``R = U S V^dagger`` the isometries are ``V_A = U[:, :d]`` and
    ``V_B = conj(V[:, :d])``; the compressed resource is ``V_A^dagger R V_B^*``
    (diagonal) and the local kets become ``A V_A^*`` and ``V_B^dagger B``, which
    leaves every product ``A R^* B`` unchanged.
    """
    d = loc.alice.dim_out if d is None else d
    r = loc.resource.op
    rank = numeric_rank(r, tol)
    if rank > d:
        raise ValueError(f"resource Schmidt rank {rank} exceeds {d}")
    if min(r.shape) < d:
        raise ValueError(f"resource spaces {r.shape} are smaller than {d}")
    u, _, vh = svd(r)
    v_a = u[:, :d]
    v_b = np.conj(dagger(vh)[:, :d])
    new_r = dagger(v_a) @ r @ np.conj(v_b)
    alice = RankOnePovm(np.einsum("nij,jk->nik", loc.alice.kets, np.conj(v_a)))
    bob = RankOnePovm(np.einsum("ij,njk->nik", dagger(v_b), loc.bob.kets))
    return Localization(DoubleKet(new_r), alice, bob, loc.pattern)


def embed_localization(loc: Localization, dim_ra: int, dim_rb: int, rng: np.random.Generator) -> Localization:
    """Inflate the resource spaces with random isometries, completing the local
    POVMs by product kets on the unused support (mapped to outcome 0)."""
    s_a, r_a, s_b, r_b = loc.dims
    w_a = random_isometry(dim_ra, r_a, rng)
    w_b = random_isometry(dim_rb, r_b, rng)
    resource = DoubleKet(w_a @ loc.resource.op @ w_b.T)
    alice = list(np.einsum("nij,kj->nik", loc.alice.kets, w_a))
    bob = list(np.einsum("ij,njk->nik", w_b, loc.bob.kets))
    comp_a = _complement(w_a)
    comp_b = _complement(w_b)
    extra_a = [np.outer(np.eye(s_a)[s], w) for s in range(s_a) for w in comp_a.T]
    # Bob's kets are R_B x S_B matrices; |s>_{S_B}|w>_{R_B} has operator w <s|
    extra_b = [np.outer(w, np.eye(s_b)[s]) for s in range(s_b) for w in comp_b.T]
    table = loc.pattern.table
    x, y = table.shape
    new_table = np.zeros((x + len(extra_a), y + len(extra_b)), dtype=int)
    new_table[:x, :y] = table
    return Localization(
        resource,
        RankOnePovm(np.array(alice + extra_a)),
        RankOnePovm(np.array(bob + extra_b)),
        PatternFunction(new_table, loc.pattern.z_size),
    )


def _complement(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the orthogonal complement of range(w)."""
    u, _, _ = svd(w)
    return u[:, w.shape[1]:]


def outcome_bound(z_size: int, dim_sa: int, dim_sb: int, dim_ra: int, dim_rb: int) -> int:
    """Largest number of local outcomes a rank-1 non-redundant localization needs."""
    for v in (z_size, dim_sa, dim_sb, dim_ra, dim_rb):
        if v < 1:
            raise ValueError("sizes must be positive")
    return (z_size - 1) * (dim_sa * dim_sb * dim_ra * dim_rb) ** 2 + 1
