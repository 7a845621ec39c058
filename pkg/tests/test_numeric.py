import numpy as np
import pytest
from hypothesis import given, strategies as st

from localizable.numeric import (
    DEFAULT_TOL,
    Tolerance,
    inverse,
    is_unitary,
    numeric_rank,
    phase_fix,
    proportional_up_to_scalar,
    random_density_matrix,
    random_unitary,
    svd,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def test_proportional_exact_multiple():
    assert proportional_up_to_scalar(SX, 1j * SX) == pytest.approx(-1j)


def test_proportional_orthogonal_is_absent():
    assert proportional_up_to_scalar(SX, SZ) is None


def test_zero_is_proportional_to_everything():
    assert proportional_up_to_scalar(np.zeros((2, 2)), SX) == 0


def test_nothing_nonzero_is_proportional_to_zero():
    assert proportional_up_to_scalar(SX, np.zeros((2, 2))) is None
    assert proportional_up_to_scalar(np.zeros((2, 2)), np.zeros((2, 2))) == 0


def test_shape_mismatch():
    with pytest.raises(ValueError):
        proportional_up_to_scalar(SX, np.eye(3))


@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_proportional_recovers_scalar(seed, alpha):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    got = proportional_up_to_scalar(alpha * b, b)
    assert got is not None
    assert abs(got - alpha) <= 1e-9 * abs(alpha)


@given(st.integers(0, 2**32 - 1))
def test_perturbation_beyond_tolerance_rejected(seed):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    e = rng.normal(size=(3, 3)).astype(complex)
    e -= np.vdot(b, e) / np.vdot(b, b) * b
    a = 2 * b + 1e-6 * np.linalg.norm(b) * e / np.linalg.norm(e)
    assert proportional_up_to_scalar(a, b) is None


@pytest.mark.parametrize("field", ["eps_prop", "eps_rank", "eps_sum"])
@pytest.mark.parametrize("value", [0.0, -1e-9, 1e-2, 0.5])
def test_tolerance_bounds(field, value):
    with pytest.raises(ValueError):
        Tolerance(**{field: value})


def test_tolerance_from_env():
    tol = Tolerance.from_env({"LOCALIZABLE_EPS_SUM": "1e-7", "UNRELATED": "x"})
    assert tol.eps_sum == 1e-7
    assert tol.eps_prop == DEFAULT_TOL.eps_prop
    with pytest.raises(ValueError):
        Tolerance.from_env({"LOCALIZABLE_EPS_RANK": "abc"})


def test_svd_descending_and_reconstructs(rng):
    a = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
    u, s, vh = svd(a)
    assert np.all(np.diff(s) <= 0)
    assert np.allclose(u[:, :3] * s @ vh, a)


def test_numeric_rank_and_inverse(rng):
    v = rng.normal(size=3)
    assert numeric_rank(np.outer(v, v)) == 1
    assert numeric_rank(np.eye(3)) == 3
    with pytest.raises(ValueError):
        inverse(np.outer(v, v))
    u = random_unitary(3, rng)
    assert np.allclose(inverse(u), u.conj().T)


def test_random_objects(rng):
    for d in (1, 2, 5):
        assert is_unitary(random_unitary(d, rng))
    rho = random_density_matrix(4, rng, rank=2)
    assert np.isclose(np.trace(rho), 1)
    assert np.linalg.eigvalsh(rho)[0] > -1e-12
    assert numeric_rank(rho) == 2


def test_phase_fix():
    v = phase_fix(np.array([0, 1j, 1]))
    assert v[1] == pytest.approx(1)
    assert v[2] == pytest.approx(-1j)
