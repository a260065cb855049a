import json
import math

import numpy as np
import pytest

from soficlab.covering import ModelMeasure, bernoulli_cov_eps
from soficlab.entropy import (
    EntropyCurve,
    EntropyRow,
    entropy_curve,
    hps_curve,
    hq_lower_curve,
    shannon_entropy,
)
from soficlab.groups import GroupSpec, Window
from soficlab.models import enumerate_good_models, letter_frequency_count
from soficlab.processes import bernoulli
from soficlab.sofic import quotient_map

Z = GroupSpec.integers()


def test_shannon_entropy_values():
    assert shannon_entropy((0.5, 0.5)) == pytest.approx(math.log(2))
    assert shannon_entropy((1.0, 0.0)) == 0.0
    assert shannon_entropy((0.25,) * 4) == pytest.approx(math.log(4))
    with pytest.raises(ValueError):
        shannon_entropy((0.5, 0.4))


def test_curve_append_rejects_overflow():
    curve = EntropyCurve(2)
    with pytest.raises(ValueError):
        curve.append(EntropyRow(4, 4, 0, 0.1, 4.0, math.log(2) + 1e-3, "exhaustive", None))
    curve.append(EntropyRow(4, 4, 0, 0.1, 4 * math.log(2), math.log(2), "exhaustive", None))
    assert curve.values() == [math.log(2)]


def test_letter_exact_matches_definition():
    mu = bernoulli((0.75, 0.25), Z)
    sizes = [4, 8, 12]
    curve = entropy_curve(lambda n: quotient_map(Z, n), mu, 0, 0.2, sizes, method="letter-exact")
    for row, n in zip(curve.rows, sizes):
        count = letter_frequency_count((0.75, 0.25), n, 0.2).count
        assert row.log_count == pytest.approx(math.log(count))
        assert row.value == pytest.approx(math.log(count) / n)
        assert row.method == "letter-exact"


def test_exhaustive_equals_letter_exact_at_identity_window():
    mu = bernoulli((0.5, 0.5), Z)
    a = entropy_curve(lambda n: quotient_map(Z, n), mu, 0, 0.3, [6], method="exhaustive")
    b = entropy_curve(lambda n: quotient_map(Z, n), mu, 0, 0.3, [6], method="letter-exact")
    assert a.rows[0].log_count == pytest.approx(b.rows[0].log_count)


def test_mc_curve_within_four_se():
    mu = bernoulli((0.5, 0.5), Z)
    exact = entropy_curve(lambda n: quotient_map(Z, n), mu, 0, 0.25, [10], method="exhaustive")
    est = entropy_curve(
        lambda n: quotient_map(Z, n), mu, 0, 0.25, [10], method="mc", samples=4000, seed=99
    )
    row = est.rows[0]
    assert row.standard_error is not None and row.standard_error > 0
    count_exact = math.exp(exact.rows[0].log_count)
    count_est = math.exp(row.log_count)
    assert abs(count_est - count_exact) <= 4 * row.standard_error


def test_monotone_in_eps_and_window():
    mu = bernoulli((0.5, 0.5), Z)
    fam = lambda n: quotient_map(Z, n)
    tight = entropy_curve(fam, mu, 0, 0.1, [8]).rows[0].log_count
    loose = entropy_curve(fam, mu, 0, 0.4, [8]).rows[0].log_count
    assert tight <= loose
    big_window = entropy_curve(fam, mu, 1, 0.2, [8]).rows[0].log_count
    small_window = entropy_curve(fam, mu, 0, 0.2, [8]).rows[0].log_count
    assert big_window <= small_window
    assert loose / 8 <= math.log(2) + 1e-9


def test_minus_infinity_sentinel():
    mu = bernoulli((0.5, 0.5), Z)
    # n = 1 forces empirical TV 1/2 at the identity window; eps below that
    # leaves no good model at all
    curve = entropy_curve(lambda n: quotient_map(Z, n), mu, 0, 0.25, [1])
    row = curve.rows[0]
    assert row.log_count == float("-inf")
    assert row.value == float("-inf")
    payload = json.dumps(curve.to_json())
    assert "-inf" in payload
    assert curve.csv_lines()[1].split(",")[4] == "-inf"


def test_hq_lower_point_mass_is_zero():
    fam = lambda n: quotient_map(Z, n)
    measures = lambda n: ModelMeasure.point_mass(np.zeros(n, dtype=np.uint8))
    curve = hq_lower_curve(fam, measures, 0.2, [4, 8], 2)
    assert curve.values() == [0.0, 0.0]


def test_hq_lower_two_atom_orbit():
    fam = lambda n: quotient_map(Z, n)

    def measures(n):
        x0 = (np.arange(n) % 2).astype(np.uint8)
        return ModelMeasure.from_support(np.stack([x0, 1 - x0]), np.array([0.5, 0.5]))

    curve = hq_lower_curve(fam, measures, 0.2, [8], 2)
    assert curve.rows[0].value == pytest.approx(math.log(2) / 8)


def test_hq_lower_bernoulli_matches_type_count():
    vertices = 4096
    count, log_count = bernoulli_cov_eps((0.5, 0.5), vertices, 0.1)
    assert abs(log_count / vertices - math.log(2)) < 0.05

    def measures(n):
        support = np.zeros((2, n), dtype=np.uint8)
        support[1] = 1
        return ModelMeasure.from_support(support, np.array([0.5, 0.5]))

    # small sanity of the curve plumbing itself
    curve = hq_lower_curve(lambda n: quotient_map(Z, n), measures, 0.3, [4], 2)
    assert curve.rows[0].log_count == pytest.approx(math.log(2))


def test_hq_never_exceeds_h_on_enumerated_instance():
    vertices = 8
    eps = 0.25
    mu = bernoulli((0.5, 0.5), Z)
    sigma = quotient_map(Z, vertices)
    W = Window(Z, [()])
    got = enumerate_good_models(sigma, mu, W, eps)
    # model measure living on the good set: its eps-covering number can
    # never beat the cardinality of the set it lives on
    nu = ModelMeasure.from_support(got.configs, np.full(got.count, 1.0 / got.count))
    curve = hq_lower_curve(lambda n: sigma, lambda n: nu, eps, [vertices], 2)
    assert curve.rows[0].log_count <= got.log_count_nats + 1e-12


def test_hps_curve_k1_and_power_scaling():
    mu = bernoulli((0.5, 0.5), Z)
    fam = lambda n: quotient_map(Z, n)
    curves = hps_curve(fam, mu, 0, 0.2, 2, [8])
    base = entropy_curve(fam, mu, 0, 0.2, [8])
    assert curves[1].rows[0].log_count == pytest.approx(base.rows[0].log_count)
    assert curves[1].rows[0].value == pytest.approx(base.rows[0].value)
    # the k = 2 good set is cut by two marginal constraints, so its
    # per-copy rate cannot beat the k = 1 rate for a product target
    assert curves[2].rows[0].value <= curves[1].rows[0].value + 1e-12


def test_hps_curve_overflow_refusal():
    mu = bernoulli((0.25,) * 4, Z)
    # two vertices keep every k <= 4 enumeration tiny; k = 5 pushes the
    # pair alphabet past the 256-symbol packing cap
    with pytest.raises(ValueError, match="alphabet overflow"):
        hps_curve(lambda n: quotient_map(Z, n), mu, 0, 0.2, 5, [2])
