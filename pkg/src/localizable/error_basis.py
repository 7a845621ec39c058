"""Unitary error bases, niceness certificates and standard generators."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .bipartite import MeasurementBasis, ValidationError
from .numeric import (
    DEFAULT_TOL,
    Tolerance,
    dagger,
    proportional_up_to_scalar,
    random_unitary,
)


@dataclass(frozen=True)
class LatinSquare:
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=int)
        object.__setattr__(self, "table", t)
        n = t.shape[0]
        if t.shape != (n, n):
            raise ValueError(f"Latin square must be square, got {t.shape}")
        target = np.arange(n)
        for r in range(n):
            if not np.array_equal(np.sort(t[r]), target):
                raise ValueError(f"row {r} is not a permutation: {t[r]}")
            if not np.array_equal(np.sort(t[:, r]), target):
                raise ValueError(f"column {r} is not a permutation: {t[:, r]}")

    @property
    def n(self) -> int:
        return self.table.shape[0]

    def __call__(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def column_solver(self) -> "LatinSquare":
        """``J[k, i] = j`` iff ``K[i, j] = k``."""
        n = self.n
        out = np.empty_like(self.table)
        for i in range(n):
            for j in range(n):
                out[self.table[i, j], i] = j
        return LatinSquare(out)

    def row_solver(self) -> "LatinSquare":
        """``I[j, k] = i`` iff ``K[i, j] = k``."""
        n = self.n
        out = np.empty_like(self.table)
        for i in range(n):
            for j in range(n):
                out[j, self.table[i, j]] = i
        return LatinSquare(out)


def is_latin(table) -> bool:
    try:
        LatinSquare(table)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class UnitaryErrorBasis:
    unitaries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "unitaries", np.asarray(self.unitaries, dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    def __len__(self) -> int:
        return self.unitaries.shape[0]

    def transformed(self, w1: np.ndarray, w2: np.ndarray, phases: Optional[np.ndarray] = None) -> "UnitaryErrorBasis":
        """``U_i -> c_i W1 U_i W2`` (an LU-equivalent basis)."""
        us = np.einsum("ij,njk,kl->nil", w1, self.unitaries, w2)
        if phases is not None:
            us = us * np.asarray(phases)[:, None, None]
        return UnitaryErrorBasis(us)

    def to_measurement_basis(self) -> MeasurementBasis:
        return MeasurementBasis(self.unitaries / np.sqrt(self.dim))


@dataclass(frozen=True)
class NicenessCertificate:
    """``U_i U_j = phases[i, j] * U_{k_table(i, j)}``."""

    k_table: LatinSquare
    phases: np.ndarray


def validate_ueb(unitaries, tol: Tolerance = DEFAULT_TOL) -> UnitaryErrorBasis:
    us = np.asarray(unitaries, dtype=np.complex128)
    if us.ndim != 3 or us.shape[1] != us.shape[2]:
        raise ValidationError(f"expected a stack of square matrices, got {us.shape}", kind="shape")
    n, d, _ = us.shape
    if n != d * d:
        raise ValidationError(f"expected {d * d} unitaries, got {n}", kind="cardinality", expected=d * d, found=n)
    eye = np.eye(d)
    for i, u in enumerate(us):
        dev = float(np.linalg.norm(dagger(u) @ u - eye))
        if dev > tol.eps_sum:
            raise ValidationError(f"element {i} is not unitary (deviation {dev:.3g})", kind="unitarity", index=i)
    flat = us.reshape(n, -1)
    gram = np.conj(flat) @ flat.T
    dev = np.abs(gram - d * np.eye(n))
    bad = np.argwhere(dev > tol.eps_sum * d)
    if bad.size:
        i, j = (int(x) for x in bad[0])
        raise ValidationError(
            f"elements {i} and {j} overlap: Tr[U_{i}^dag U_{j}] = {gram[i, j]:.6g}",
            kind="orthogonality", pair=(i, j), overlap=complex(gram[i, j]),
        )
    return UnitaryErrorBasis(us)


def check_nice(ueb: UnitaryErrorBasis, tol: Tolerance = DEFAULT_TOL, debug: bool = False) -> Optional[NicenessCertificate]:
    """Niceness certificate for ``ueb`` or ``None``.

    For each pair ``(i, j)`` the candidate ``k`` is the one with the largest
    Hilbert-Schmidt overlap with ``U_i U_j`` (only it can satisfy the
    proportionality test, the basis being orthogonal); it is then confirmed with
    :func:`proportional_up_to_scalar`. With ``debug=True`` every ``k`` is tested
    and a second match raises, which would mean the tolerances are misconfigured.
    """
    us = ueb.unitaries
    n = len(ueb)
    prods = np.einsum("iab,jbc->ijac", us, us)
    overlaps = np.einsum("kab,ijab->ijk", np.conj(us), prods)
    best = np.argmax(np.abs(overlaps), axis=2)
    k_table = np.empty((n, n), dtype=int)
    phases = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            if debug:
                hits = [k for k in range(n) if _unit_multiple(prods[i, j], us[k], tol) is not None]
                if len(hits) > 1:
                    raise AssertionError(f"U_{i} U_{j} matches several elements {hits}; tolerance too loose")
                if not hits:
                    return None
                k = hits[0]
            else:
                k = int(best[i, j])
            c = _unit_multiple(prods[i, j], us[k], tol)
            if c is None:
                return None
            k_table[i, j] = k
            phases[i, j] = c
    if not is_latin(k_table):
        return None
    return NicenessCertificate(LatinSquare(k_table), phases)


def _unit_multiple(a: np.ndarray, b: np.ndarray, tol: Tolerance) -> Optional[complex]:
    c = proportional_up_to_scalar(a, b, tol)
    if c is None or abs(abs(c) - 1.0) > tol.eps_prop:
        return None
    return c


def check_lu_equivalent_to_nice(
    ueb: UnitaryErrorBasis, tol: Tolerance = DEFAULT_TOL, j: int = 0, exhaustive: bool = False
) -> Tuple[bool, Optional[int]]:
    """Decide LU-equivalence to a nice basis by testing ``{U_j^dagger U_i}_i``.

    Returns ``(verdict, witness_j)``. In exhaustive mode every ``j`` is tried and
    the verdict is True only if all of them give a nice family; a disagreement
    between indices is reported by raising ``AssertionError``.
    """
    indices = range(len(ueb)) if exhaustive else [j]
    verdicts = {}
    for jj in indices:
        family = UnitaryErrorBasis(np.einsum("ab,ibc->iac", dagger(ueb.unitaries[jj]), ueb.unitaries))
        verdicts[jj] = check_nice(family, tol) is not None
    values = set(verdicts.values())
    if len(values) > 1:
        raise AssertionError(f"niceness of U_j^dag U_i depends on j: {verdicts}")
    verdict = values.pop()
    return verdict, (indices[0] if verdict else None)


def shift_and_clock(d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic shift ``X|k> = |k+1>`` and clock ``Z|k> = w^k |k>``, ``w = exp(2 pi i/d)``."""
    x = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


def gen_weyl_heisenberg(d: int) -> UnitaryErrorBasis:
    """``{X^a Z^b}`` ordered with index ``a*d + b``."""
    if d < 1:
        raise ValueError("d must be positive")
    x, z = shift_and_clock(d)
    us = [np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b) for a in range(d) for b in range(d)]
    return UnitaryErrorBasis(np.array(us))


def gen_pauli() -> UnitaryErrorBasis:
    """``{I, X, Y, Z}``."""
    return UnitaryErrorBasis(np.array([
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ], dtype=np.complex128))


def basis_to_ueb(b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> Optional[UnitaryErrorBasis]:
    """Lift a maximally entangled basis to ``U_i = sqrt(d) M_i``; ``None`` if not ME."""
    return lift_to_ueb(b, tol)[0]


def lift_to_ueb(b: MeasurementBasis, tol: Tolerance = DEFAULT_TOL) -> Tuple[Optional[UnitaryErrorBasis], Optional[int]]:
    """Like :func:`basis_to_ueb` but also returns the first failing index."""
    d = b.dim
    us = np.sqrt(d) * b.ops
    eye = np.eye(d)
    for i, u in enumerate(us):
        if np.linalg.norm(dagger(u) @ u - eye) > tol.eps_sum * d:
            return None, i
    return UnitaryErrorBasis(us), None


def random_hadamard(d: int, rng: np.random.Generator) -> np.ndarray:
    """Fourier matrix dressed with random row and column phases."""
    f = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d)
    rows = np.exp(2j * np.pi * rng.random(d))
    cols = np.exp(2j * np.pi * rng.random(d))
    return rows[:, None] * f * cols[None, :]


def shift_and_multiply(hadamards: Sequence[np.ndarray], latin: np.ndarray) -> UnitaryErrorBasis:
    """Werner's construction ``U_{ij} = sum_k H^{(j)}_{ik} |L(j,k)><k|``."""
    d = len(hadamards)
    us = np.zeros((d * d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                us[i * d + j, latin[j][k], k] = hadamards[j][i, k]
    return UnitaryErrorBasis(us)


def random_ueb(d: int, rng: np.random.Generator) -> UnitaryErrorBasis:
    """Generic unitary error basis: shift-and-multiply with random Hadamards,
    then a random LU dressing and random element phases."""
    latin = [[(j + k) % d for k in range(d)] for j in range(d)]
    base = shift_and_multiply([random_hadamard(d, rng) for _ in range(d)], latin)
    phases = np.exp(2j * np.pi * rng.random(d * d))
    return base.transformed(random_unitary(d, rng), random_unitary(d, rng), phases)


def random_me_basis(d: int, rng: np.random.Generator) -> MeasurementBasis:
    return random_ueb(d, rng).to_measurement_basis()
