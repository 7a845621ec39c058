"""Dense complex linear algebra with an explicit tolerance policy.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every numerical
decision in the package (proportionality, rank, completeness) goes through a
:class:`Tolerance` so the thresholds are visible and overridable.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import unitary_group

ENV_PREFIX = "LOCALIZABLE_"


@dataclass(frozen=True)
class Tolerance:
    eps_prop: float = 1e-9
    eps_rank: float = 1e-8
    eps_sum: float = 1e-9

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (0.0 < value < 1e-2):
                raise ValueError(f"tolerance {name}={value!r} must lie in (0, 1e-2)")

    @classmethod
    def from_env(cls, environ=None) -> "Tolerance":
        """Defaults overridden by ``LOCALIZABLE_EPS_PROP`` etc. when set."""
        environ = os.environ if environ is None else environ
        kwargs = {}
        for name in ("eps_prop", "eps_rank", "eps_sum"):
            raw = environ.get(ENV_PREFIX + name.upper())
            if raw is not None:
                kwargs[name] = float(raw)
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = Tolerance()


class SvdConvergenceError(RuntimeError):
    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d complex array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr[a^dagger b]."""
    return complex(np.vdot(a, b))


def proportional_up_to_scalar(
    a, b, tol: Tolerance = DEFAULT_TOL
) -> Optional[complex]:
    """Return ``alpha`` with ``a == alpha * b`` or ``None``.

    The relation is asymmetric: the zero matrix is proportional to anything
    (``alpha = 0``), while nothing nonzero is proportional to zero.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return 0j if norm_a == 0.0 else None
    if norm_a <= tol.eps_prop * norm_b:
        return 0j
    alpha = np.vdot(b, a) / norm_b**2
    if np.linalg.norm(a - alpha * b) <= tol.eps_prop * norm_a:
        return complex(alpha)
    return None


def svd(a) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(U, s, Vh)`` with ``a = U @ diag(s) @ Vh`` and ``s`` descending."""
    m = as_matrix(a)
    try:
        return np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge for {m.shape[0]}x{m.shape[1]} matrix "
            f"(LAPACK gesdd; iteration count not exposed): {exc}\n{m!r}"
        ) from exc


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(as_matrix(a), compute_uv=False)


def numeric_rank(a, tol: Tolerance = DEFAULT_TOL) -> int:
    s = singular_values(a)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.eps_rank * s[0]))


def is_full_rank(a, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = np.asarray(a)
    return numeric_rank(m, tol) == min(m.shape)


def inverse(a, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Inverse of a square matrix that passes the numeric full-rank test."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"cannot invert non-square {m.shape}")
    r = numeric_rank(m, tol)
    if r != m.shape[0]:
        raise np.linalg.LinAlgError(f"matrix has numeric rank {r} < {m.shape[0]}")
    return np.linalg.inv(m)


def is_unitary(u, tol: Tolerance = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) <= tol.eps_sum


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary."""
    if d == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(d, random_state=rng)


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(rows, rng)[:, :cols]


def random_state_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_density_matrix(n: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Random mixed state from a Ginibre matrix of the given rank."""
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def phase_fix(v: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-negligible entry is real positive."""
    v = np.asarray(v, dtype=np.complex128)
    scale = np.max(np.abs(v)) if v.size else 0.0
    if scale == 0.0:
        return v
    idx = int(np.argmax(np.abs(v) > cutoff * scale))
    return v * (np.conj(v[idx]) / abs(v[idx]))
