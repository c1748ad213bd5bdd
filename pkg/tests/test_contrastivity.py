import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_distribution, oracle_kl
from xaieval.contrastivity import (DEFAULT_EPSILON, aggregate_contrastivity,
                                   evaluate_contrastivity, kl_divergence,
                                   pair_contrastivity,
                                   sign_split_contrastivity, to_distribution)
from xaieval.corpus import ContrastPair, SaliencyRecord, Variant, build_index

CELL = ("d", "m", "x")


def rec(iid, target, scores, predicted="pos"):
    tokens = tuple(f"t{i}" for i in range(len(scores)))
    return SaliencyRecord(iid, "d", "m", "x", Variant.original(),
                          predicted, target, tokens, tuple(scores))


# ---------------------------------------------------------------------------
# smoothing into a distribution


def test_distribution_uses_magnitudes():
    probs = to_distribution([2.0, -1.0, 1.0])
    assert probs == pytest.approx((0.5, 0.25, 0.25), abs=1e-9)


def test_all_zero_scores_come_out_uniform():
    probs = to_distribution([0.0, 0.0, 0.0])
    assert probs == pytest.approx((1 / 3, 1 / 3, 1 / 3), rel=1e-15)


def test_distribution_validates_inputs():
    with pytest.raises(ValueError, match="epsilon"):
        to_distribution([1.0], epsilon=0.0)
    with pytest.raises(ValueError, match="no scores"):
        to_distribution([])


@pytest.mark.properties
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=30))
@settings(max_examples=100)
def test_distribution_is_positive_and_sums_to_one(scores):
    probs = to_distribution(scores)
    assert all(p > 0.0 for p in probs)
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
    assert probs == pytest.approx(oracle_distribution(scores, DEFAULT_EPSILON),
                                  rel=1e-12)


# ---------------------------------------------------------------------------
# KL


def test_kl_of_identical_distributions_is_exactly_zero():
    p = (0.5, 0.25, 0.25)
    assert kl_divergence(p, p) == 0.0


# frozen: 0.5*ln2 - 0.25*ln2 = 0.25 nats-per-ln2, i.e. 0.25 bits
def test_kl_frozen_example():
    p = (0.5, 0.25, 0.25)
    q = (0.25, 0.25, 0.5)
    assert kl_divergence(p, q) == pytest.approx(0.25 * math.log(2.0), rel=1e-15)
    assert kl_divergence(p, q, log_base=2.0) == pytest.approx(0.25, rel=1e-15)


def test_kl_skips_zero_mass_terms():
    assert kl_divergence((1.0, 0.0), (0.5, 0.5)) == \
        pytest.approx(math.log(2.0), rel=1e-15)


def test_kl_validates_inputs():
    with pytest.raises(ValueError, match="length mismatch"):
        kl_divergence((1.0,), (0.5, 0.5))
    for base in (0.0, -2.0, 1.0):
        with pytest.raises(ValueError, match="log base"):
            kl_divergence((1.0,), (1.0,), log_base=base)


def test_disjoint_support_stays_finite_through_epsilon():
    p = to_distribution([1.0, 0.0])
    q = to_distribution([0.0, 1.0])
    kl = kl_divergence(p, q)
    assert math.isfinite(kl)
    # roughly ln(1/epsilon), the cap the smoothing imposes
    assert 20.0 < kl < math.log(1.0 / DEFAULT_EPSILON) + 1.0


@pytest.mark.properties
@given(st.lists(st.tuples(st.floats(-100, 100, allow_nan=False),
                          st.floats(-100, 100, allow_nan=False)),
                min_size=1, max_size=30))
@settings(max_examples=100)
def test_kl_nonnegative_and_matches_oracle(pairs):
    p = to_distribution([a for a, _ in pairs])
    q = to_distribution([b for _, b in pairs])
    kl = kl_divergence(p, q)
    assert kl >= -1e-12
    assert abs(kl - oracle_kl(p, q)) <= 1e-12


# ---------------------------------------------------------------------------
# pairing modes


def test_pair_contrastivity_is_asymmetric():
    a = rec("i1", "pos", [0.7, 0.3])
    b = rec("i1", "neg", [0.2, 0.8])
    forward = pair_contrastivity(ContrastPair(a, b))
    backward = pair_contrastivity(ContrastPair(b, a))
    assert forward > 0.0 and backward > 0.0
    assert forward != backward


def test_pair_contrastivity_rejects_token_count_mismatch():
    pair = ContrastPair(rec("i1", "pos", [0.7, 0.3]), rec("i1", "neg", [1.0]))
    with pytest.raises(ValueError, match="token count"):
        pair_contrastivity(pair)


# frozen: pos half (0.75, 0.25) against uniform -> 0.75*ln1.5 + 0.25*ln0.5
def test_sign_split_all_positive_scores_contrast_against_uniform():
    expected = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
    assert sign_split_contrastivity([3.0, 1.0]) == pytest.approx(expected, abs=1e-9)


def test_sign_split_opposed_signs_diverge_strongly():
    assert sign_split_contrastivity([2.0, -2.0, 1.0, -1.0]) > 20.0


def test_aggregate_is_the_mean():
    assert aggregate_contrastivity([0.1, 0.3]) == pytest.approx(0.2, rel=1e-15)


# ---------------------------------------------------------------------------
# driver


def contrast_corpus():
    records = [
        rec("i0", "pos", [0.9, 0.1]), rec("i0", "neg", [0.1, 0.9]),
        rec("i1", "pos", [0.6, 0.4]), rec("i1", "neg", [0.5, 0.5]),
    ]
    return build_index(records, [], [])


def test_driver_per_class_uses_contrast_pairs():
    result = evaluate_contrastivity(contrast_corpus(), CELL)
    assert result.mode == "per_class"
    assert result.n_evaluated == 2
    assert [iid for iid, _ in result.per_instance] == ["i0", "i1"]
    kls = dict(result.per_instance)
    assert kls["i0"] > kls["i1"] > 0.0
    assert result.mean_kl == pytest.approx(
        (kls["i0"] + kls["i1"]) / 2.0, rel=1e-15)


def test_driver_per_class_without_pairs_is_none():
    index = build_index([rec("i0", "pos", [0.9, 0.1])], [], [])
    assert evaluate_contrastivity(index, CELL) is None


def test_driver_sign_split_needs_only_predicted_records():
    index = build_index([rec("i0", "pos", [0.9, -0.1]),
                         rec("i1", "pos", [0.6, -0.4])], [], [])
    result = evaluate_contrastivity(index, CELL, mode="sign_split")
    assert result.mode == "sign_split"
    assert result.n_evaluated == 2
    assert result.mean_kl > 0.0


def test_driver_rejects_unknown_mode():
    with pytest.raises(ValueError, match="mode"):
        evaluate_contrastivity(contrast_corpus(), CELL, mode="ratio")


def test_driver_log_base_rescales():
    nats = evaluate_contrastivity(contrast_corpus(), CELL)
    bits = evaluate_contrastivity(contrast_corpus(), CELL, log_base=2.0)
    assert bits.mean_kl == pytest.approx(nats.mean_kl / math.log(2.0), rel=1e-12)


def test_driver_parallelism_changes_nothing():
    serial = evaluate_contrastivity(contrast_corpus(), CELL)
    threaded = evaluate_contrastivity(contrast_corpus(), CELL, parallelism=4)
    assert serial == threaded
