import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soficlab.groups import GroupSpec, Window, coind_group
from soficlab.processes import (
    BernoulliOracle,
    bernoulli,
    coinduced,
    coset_iid,
    decode_patterns,
    pattern_count,
    periodic_orbit,
    power_process,
    process_from_json,
    product_process,
    shift_invariance_gap,
    tree_markov,
    tv_distance,
)

F2 = GroupSpec.free(2)
Z = GroupSpec.integers()
CG = coind_group()


def test_bernoulli_point_mass():
    mu = bernoulli((1.0, 0.0), F2)
    probs = mu.marginal(Window(F2, F2.ball(1))).probs
    assert probs[0] == 1.0
    assert probs[1:].sum() == 0.0


def test_bernoulli_uniform_cube():
    mu = bernoulli((0.5, 0.5), F2)
    probs = mu.marginal_elems(((), (1,), (2,)))
    np.testing.assert_allclose(probs, np.full(8, 0.125))


def test_bernoulli_biased_pair():
    mu = bernoulli((0.75, 0.25), F2)
    probs = mu.marginal(Window(F2, ((), (1,)))).probs
    np.testing.assert_allclose(probs, [9 / 16, 3 / 16, 3 / 16, 1 / 16])


def test_bernoulli_rejects_bad_weights():
    with pytest.raises(ValueError):
        bernoulli((0.5, 0.4), F2)
    with pytest.raises(ValueError):
        bernoulli((1.5, -0.5), F2)


def test_tree_markov_flip_chain():
    mu = tree_markov([[0.7, 0.3], [0.3, 0.7]], (0.5, 0.5), F2)
    probs = mu.marginal(Window(F2, ((), (1,)))).probs
    # P(00) = pi_0 * P[0,0] = 0.5 * 0.7
    np.testing.assert_allclose(probs, [0.35, 0.15, 0.15, 0.35])


def test_tree_markov_identity_chain():
    mu = tree_markov([[1.0, 0.0], [0.0, 1.0]], (0.5, 0.5), F2)
    probs = mu.marginal(Window(F2, ((), (1,)))).probs
    np.testing.assert_allclose(probs, [0.5, 0.0, 0.0, 0.5])


def test_tree_markov_uniform_rows_is_iid():
    mu = tree_markov([[0.5, 0.5], [0.5, 0.5]], (0.5, 0.5), F2)
    iid = bernoulli((0.5, 0.5), F2)
    W = Window(F2, F2.ball(1))
    assert mu.marginal(W).tv(iid.marginal(W)) < 1e-12


def test_tree_markov_rejects_nonstationary():
    with pytest.raises(ValueError):
        tree_markov([[0.7, 0.3], [0.3, 0.7]], (0.9, 0.1), F2)


def test_tree_markov_rejects_detailed_balance_violation():
    # doubly stochastic 3-state cycle: uniform is stationary but pi_i P_ij
    # is not symmetric
    P = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
    with pytest.raises(ValueError):
        tree_markov(P, (1 / 3, 1 / 3, 1 / 3), F2)


def test_tree_markov_rejects_nonfree_group():
    with pytest.raises(ValueError):
        tree_markov([[1.0]], (1.0,), GroupSpec.cyclic(4))


def test_periodic_orbit_alternating():
    mu = periodic_orbit("01", Z)
    np.testing.assert_allclose(mu.marginal_elems(((),)), [0.5, 0.5])
    probs = mu.marginal(Window(Z, ((), (1,)))).probs
    np.testing.assert_allclose(probs, [0.0, 0.5, 0.5, 0.0])


def test_periodic_orbit_rejects_imprimitive_pattern():
    with pytest.raises(ValueError):
        periodic_orbit("0101", Z)
    with pytest.raises(ValueError):
        periodic_orbit("", Z)
    with pytest.raises(ValueError):
        periodic_orbit("01", F2)


def test_periodic_orbit_fixed_point():
    mu = periodic_orbit("0", Z)
    probs = mu.marginal(Window(Z, ((), (1,), (-1,)))).probs
    assert probs[0] == 1.0
    assert probs.sum() == 1.0


def test_coset_iid_same_coset():
    mu = coset_iid((0.75, 0.25), CG)
    # e and a lie in the same right H-coset, so the pair is diagonal
    probs = mu.marginal(Window(CG, ((), (1,)))).probs
    np.testing.assert_allclose(probs, [0.75, 0.0, 0.0, 0.25])


def test_coset_iid_cross_coset():
    mu = coset_iid((0.75, 0.25), CG)
    # e and a' lie in distinct cosets, hence independent
    probs = mu.marginal(Window(CG, ((), (3,)))).probs
    np.testing.assert_allclose(probs, [9 / 16, 3 / 16, 3 / 16, 1 / 16])


def test_coset_iid_second_factor():
    mu = coset_iid((0.75, 0.25), CG, factor=1)
    probs = mu.marginal(Window(CG, ((), (3,)))).probs
    np.testing.assert_allclose(probs, [0.75, 0.0, 0.0, 0.25])


def test_coset_iid_rejects_wrong_group():
    with pytest.raises(ValueError):
        coset_iid((0.5, 0.5), F2)
    with pytest.raises(ValueError):
        coset_iid((0.5, 0.5), CG, factor=2)


def test_coinduced_same_fiber_recovers_base():
    base = bernoulli((0.75, 0.25), F2)
    mu = coinduced(base, Z)
    same = mu.marginal_elems((((), ()), ((1,), ())))
    np.testing.assert_allclose(same, base.marginal_elems(((), (1,))))


def test_coinduced_cross_fiber_product():
    base = tree_markov([[0.7, 0.3], [0.3, 0.7]], (0.5, 0.5), F2)
    mu = coinduced(base, Z)
    cross = mu.marginal_elems((((), ()), ((1,), (1,))))
    one = base.marginal_elems(((),))
    np.testing.assert_allclose(cross, np.outer(one, one).ravel())


def test_product_pair_alphabet_row_major():
    mu = coset_iid((0.75, 0.25), CG)
    pair = product_process(mu, mu)
    assert pair.alphabet.labels == ("00", "01", "10", "11")
    probs = pair.marginal_elems(((),))
    # independent coordinates: P((1, 0)) sits at code 1*2+0
    assert probs[2] == pytest.approx(3 / 16)
    np.testing.assert_allclose(probs, [9 / 16, 3 / 16, 3 / 16, 1 / 16])


def test_product_of_bernoullis_is_bernoulli():
    p = bernoulli((0.75, 0.25), F2)
    q = bernoulli((0.5, 0.5), F2)
    pair = product_process(p, q)
    joint = BernoulliOracle((0.375, 0.375, 0.125, 0.125), F2, alphabet=pair.alphabet)
    W = Window(F2, ((), (1,), (2,)))
    assert pair.marginal(W).tv(joint.marginal(W)) < 1e-12


def test_product_rejects_mixed_groups():
    with pytest.raises(ValueError):
        product_process(bernoulli((0.5, 0.5), F2), bernoulli((0.5, 0.5), Z))


def test_power_process_degenerate_and_square():
    mu = bernoulli((0.75, 0.25), F2)
    assert power_process(mu, 1) is mu
    sq = power_process(mu, 2)
    np.testing.assert_allclose(sq.marginal_elems(((),)), [9 / 16, 3 / 16, 3 / 16, 1 / 16])
    W = Window(F2, ((), (1,)))
    pair = product_process(mu, mu)
    assert sq.marginal(W).tv(pair.marginal(W)) < 1e-12


def test_power_process_alphabet_overflow():
    mu = bernoulli((0.25,) * 4, F2)
    with pytest.raises(ValueError):
        power_process(mu, 5)
    with pytest.raises(ValueError):
        power_process(mu, 0)


def test_pattern_count_and_decode():
    assert pattern_count(2, 3) == 8
    pats = decode_patterns(3, 2)
    assert pats.shape == (9, 2)
    assert tuple(pats[5]) == (1, 2)
    with pytest.raises(ValueError):
        pattern_count(2, 64)


def test_pattern_distribution_project_and_tv():
    mu = bernoulli((0.75, 0.25), F2)
    W = Window(F2, ((), (1,), (2,)))
    dist = mu.marginal(W)
    np.testing.assert_allclose(dist.project([0]), [0.75, 0.25])
    np.testing.assert_allclose(dist.project([1, 2]), mu.marginal_elems(((1,), (2,))))
    assert dist.pattern_tuple(5) == (1, 0, 1)
    assert dist.tv(dist) == 0.0
    assert tv_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)


ORACLES = [
    bernoulli((0.75, 0.25), F2),
    tree_markov([[0.7, 0.3], [0.3, 0.7]], (0.5, 0.5), F2),
]


@pytest.mark.parametrize("mu", ORACLES, ids=["bernoulli", "tree_markov"])
def test_shift_invariance_gap_zero(mu):
    W = Window(F2, F2.ball(1))
    for g in ((1,), (-2,), (1, 2)):
        assert shift_invariance_gap(mu, W, g) < 1e-12


def test_shift_invariance_gap_coset_process():
    mu = coset_iid((0.75, 0.25), CG)
    W = Window(CG, CG.ball(1))
    for g in ((1,), (3,), (1, 3)):
        assert shift_invariance_gap(mu, W, g) < 1e-12


@given(st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=25, deadline=None)
def test_marginal_projection_consistency(i, j):
    mu = tree_markov([[0.7, 0.3], [0.3, 0.7]], (0.5, 0.5), F2)
    big = Window(F2, F2.ball(1))
    positions = sorted({i, j})
    sub = tuple(big.elements[q] for q in positions)
    np.testing.assert_allclose(
        mu.marginal(big).project(positions),
        mu.marginal_elems(sub),
        atol=1e-12,
    )


def test_process_from_json_round_trip():
    mu = process_from_json(
        {"process": "bernoulli", "weights": [0.75, 0.25]}, F2
    )
    np.testing.assert_allclose(mu.marginal_elems(((),)), [0.75, 0.25])
    pair = process_from_json(
        {
            "process": "product",
            "factors": [
                {"process": "coset_iid", "mu0": [0.75, 0.25]},
                {"process": "coset_iid", "mu0": [0.75, 0.25]},
            ],
        },
        CG,
    )
    assert pair.marginal_elems(((),))[2] == pytest.approx(3 / 16)
    power = process_from_json(
        {"process": "power", "k": 2, "base": {"process": "bernoulli", "weights": [0.5, 0.5]}},
        F2,
    )
    np.testing.assert_allclose(power.marginal_elems(((),)), np.full(4, 0.25))
    with pytest.raises(ValueError):
        process_from_json({"process": "mystery"}, F2)
