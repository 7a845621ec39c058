import numpy as np
import pytest
from hypothesis import given, strategies as st

from localizable.bipartite import MeasurementBasis, Povm, RankOnePovm
from localizable.error_basis import gen_pauli, gen_weyl_heisenberg, random_me_basis
from localizable.localizability import (
    GeneralLocalization,
    Localization,
    NotLocalizableError,
    OutOfHypothesisError,
    PatternFunction,
    Reason,
    SingularElementError,
    classify_equal_resource,
    compress_resource,
    construct_localization,
    effective_povm,
    embed_localization,
    outcome_bound,
    triple_product_closure,
    verify_localization,
)
from localizable.numeric import numeric_rank, random_unitary
from localizable.two_qubit import computational_basis, iso_entangled_basis, pbsm_basis


def wh(d):
    return gen_weyl_heisenberg(d).to_measurement_basis()


def mixed_rank_qutrit_basis():
    """Three maximally entangled vectors on span{|00>,|11>,|22>} plus six product vectors."""
    w = np.exp(2j * np.pi / 3)
    ops = [np.diag([1, w**k, w ** (2 * k)]) / np.sqrt(3) for k in range(3)]
    for a in range(3):
        for b in range(3):
            if a != b:
                m = np.zeros((3, 3), dtype=complex)
                m[a, b] = 1
                ops.append(m)
    return MeasurementBasis(np.array(ops))


def dressed(b, rng, permute=True):
    d = b.dim
    out = b.transformed(random_unitary(d, rng), random_unitary(d, rng))
    ops = out.ops * np.exp(2j * np.pi * rng.random(len(b)))[:, None, None]
    if permute:
        ops = ops[rng.permutation(len(b))]
    return MeasurementBasis(ops)


@pytest.mark.parametrize("d", [2, 3])
def test_synthesis_all_j(d):
    b = wh(d)
    for j in range(d * d):
        loc = construct_localization(b, j)
        rep = verify_localization(b, loc)
        assert rep.residual < 1e-11
        assert rep.eq2_ok and rep.eq3_ok
        assert all(rep.lemma7.values())


def test_synthesis_d4_sample_j():
    b = wh(4)
    for j in (0, 7, 15):
        assert verify_localization(b, construct_localization(b, j)).residual < 1e-11


def test_pauli_pattern_frozen():
    loc = construct_localization(gen_pauli().to_measurement_basis(), 0)
    expected = np.array([[i ^ k for k in range(4)] for i in range(4)])
    assert np.array_equal(loc.pattern.table, expected)


def test_resource_is_unit_vector():
    loc = construct_localization(wh(3), 4)
    assert loc.resource.norm() == pytest.approx(1.0)


def test_corrupted_pattern_residual():
    b = gen_pauli().to_measurement_basis()
    loc = construct_localization(b, 0)
    t = loc.pattern.table.copy()
    t[0, 0] = (t[0, 0] + 1) % 4
    bad = Localization(loc.resource, loc.alice, loc.bob, PatternFunction(t, 4))
    rep = verify_localization(b, bad)
    assert rep.residual == pytest.approx(0.25, abs=1e-12)
    assert rep.lemma7["latin_pattern"] is False


def test_pbsm_verdict():
    v = classify_equal_resource(pbsm_basis())
    assert not v.localizable
    assert v.reason is Reason.NOT_MAX_ENTANGLED
    assert v.tags == {Reason.NOT_MAX_ENTANGLED, Reason.MIXED_RANKS}
    assert v.witness == (0,)


def test_iso_entangled_verdict():
    v = classify_equal_resource(iso_entangled_basis(0.3))
    assert v.reason is Reason.NOT_MAX_ENTANGLED
    assert Reason.MIXED_RANKS not in v.tags


def test_mixed_rank_qutrit_verdict():
    b = mixed_rank_qutrit_basis()
    assert sorted(b.ranks()) == [1] * 6 + [3] * 3
    v = classify_equal_resource(b)
    assert v.reason is Reason.NOT_MAX_ENTANGLED
    assert Reason.MIXED_RANKS in v.tags
    assert b.ranks()[v.witness[0]] == 1
    with pytest.raises(SingularElementError) as exc:
        triple_product_closure(b)
    assert exc.value.index == 3


def test_out_of_hypothesis():
    with pytest.raises(OutOfHypothesisError):
        classify_equal_resource(computational_basis(3))


def test_generic_qutrit_not_nice():
    b = random_me_basis(3, np.random.default_rng(0))
    v = classify_equal_resource(b)
    assert v.reason is Reason.NOT_NICE
    assert len(v.witness) == 3
    with pytest.raises(NotLocalizableError):
        construct_localization(b)


def test_j_out_of_range():
    with pytest.raises(IndexError):
        construct_localization(wh(2), 4)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_verdict_invariant_under_lu_permutation_phase(seed, d):
    rng = np.random.default_rng(seed)
    for base in (wh(d), random_me_basis(d, rng)):
        before = classify_equal_resource(base)
        after = classify_equal_resource(dressed(base, rng))
        assert before.localizable == after.localizable
        assert before.reason == after.reason


@given(st.integers(0, 2**32 - 1))
def test_dressed_basis_localizes(seed):
    rng = np.random.default_rng(seed)
    b = dressed(wh(3), rng)
    j = int(rng.integers(9))
    assert verify_localization(b, construct_localization(b, j)).residual < 1e-11


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_closure_agrees_with_niceness(seed, d):
    rng = np.random.default_rng(seed)
    for b in (dressed(wh(d), rng), random_me_basis(d, rng)):
        closure = triple_product_closure(b).holds
        assert closure == classify_equal_resource(b).localizable


def test_closure_tables_are_latin():
    res = triple_product_closure(wh(3))
    for j in range(9):
        assert PatternFunction(res.table[:, j, :], 9).is_latin()


def test_pattern_derived_functions():
    p = construct_localization(wh(2), 1).pattern
    f1, f2 = p.derived()
    for a in range(4):
        for b in range(4):
            c = p(a, b)
            assert f1[b, c] == a and f2[c, a] == b


def test_schmidt_monotonicity_on_synthesized():
    for d in (2, 3):
        loc = construct_localization(wh(d), 0)
        local = max(max(numeric_rank(k) for k in loc.alice.kets), max(numeric_rank(k) for k in loc.bob.kets))
        assert local >= max(wh(d).ranks())


@given(st.integers(0, 2**32 - 1))
def test_embed_then_compress_preserves_residual(seed):
    rng = np.random.default_rng(seed)
    b = wh(2)
    loc = construct_localization(b, int(rng.integers(4)))
    big = embed_localization(loc, 3, 4, rng)
    r_big = verify_localization(b, big).residual
    small = compress_resource(big, 2)
    assert small.dims == (2, 2, 2, 2)
    assert r_big < 1e-11
    assert abs(verify_localization(b, small).residual - r_big) < 1e-11


def test_compress_rejects_large_rank():
    loc = construct_localization(wh(3), 0)
    with pytest.raises(ValueError):
        compress_resource(loc, 2)


def test_stochastic_post_processing():
    b = wh(2)
    loc = construct_localization(b, 0)
    g = loc.to_general()
    p = 0.5 * g.p + 0.5 / 4
    noisy = GeneralLocalization(g.resource, g.alice, g.bob, p, g.dims)
    target = Povm([0.5 * pc + np.eye(4) / 8 for pc in b.projectors()])
    assert verify_localization(target, noisy).residual < 1e-12


def test_coarse_grained_target():
    b = wh(2)
    g = construct_localization(b, 0).to_general()
    groups = np.array([0, 0, 1, 1])
    p = np.zeros(g.p.shape[:2] + (2,))
    for c in range(4):
        p[:, :, groups[c]] += g.p[:, :, c]
    coarse = GeneralLocalization(g.resource, g.alice, g.bob, p, g.dims)
    proj = b.projectors()
    target = Povm([proj[0] + proj[1], proj[2] + proj[3]])
    assert verify_localization(target, coarse).residual < 1e-12


def test_effective_povm_is_complete():
    loc = construct_localization(wh(3), 2)
    assert np.allclose(effective_povm(loc).sum(axis=0), np.eye(9))


def test_verify_rejects_incomplete_local_povm():
    b = wh(2)
    loc = construct_localization(b, 0)
    broken = Localization(loc.resource, RankOnePovm(loc.alice.kets[:3]), loc.bob, PatternFunction(loc.pattern.table[:3], 4))
    with pytest.raises(ValueError):
        verify_localization(b, broken)


@pytest.mark.parametrize(
    "args, expected",
    [((4, 2, 2, 2, 2), 769), ((1, 3, 3, 3, 3), 1), ((2, 2, 2, 1, 1), 17)],
)
def test_outcome_bound(args, expected):
    assert outcome_bound(*args) == expected


def test_outcome_bound_rejects_nonpositive():
    with pytest.raises(ValueError):
        outcome_bound(0, 2, 2, 2, 2)
