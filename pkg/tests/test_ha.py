import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_ap, oracle_mean
from xaieval.corpus import (HumanRationale, SaliencyRecord, TokenNormalizer,
                            Variant, build_index)
from xaieval.ha import (average_precision, evaluate_ha, instance_ap,
                        mean_average_precision, rank_relevance)


def record(tokens, scores, instance_id="i1"):
    return SaliencyRecord(instance_id, "d", "m", "x", Variant.original(),
                          "pos", "pos", tuple(tokens), tuple(scores))


def test_position_exact_relevance():
    rel = rank_relevance(["good", "bad", "plot"], ["good", "plot", "bad"])
    assert rel == (1, 0, 0)


def test_relevance_normalizes_before_comparing():
    rel = rank_relevance(["Good!", "BAD"], ["good", "bad"])
    assert rel == (1, 1)
    strict = TokenNormalizer(lowercase=False, strip_outer_punctuation=False)
    assert rank_relevance(["Good!", "BAD"], ["good", "bad"], strict) == (0, 0)


def test_relevance_beyond_rationale_length_is_zero():
    assert rank_relevance(["a", "b", "c"], ["a"]) == (1, 0, 0)


# frozen: rel [1,1,1,0,0] over a 5-token rationale gives 3/5
def test_ap_worked_example():
    assert average_precision([1, 1, 1, 0, 0], 5) == 0.6


# frozen: swapping the last two of three identical rankings gives 1/3
def test_ap_single_leading_hit():
    assert average_precision([1, 0, 0], 3) == pytest.approx(1 / 3, abs=1e-15)


def test_ap_rejects_empty_rationale():
    with pytest.raises(ValueError, match="rationale length"):
        average_precision([1], 0)


def test_map_is_the_mean():
    assert mean_average_precision([0.5, 1.0]) == 0.75


@pytest.mark.properties
@given(rel=st.lists(st.sampled_from([0, 1]), min_size=1, max_size=30),
       extra=st.integers(0, 10))
@settings(max_examples=100)
def test_ap_bounded_and_matches_oracle_exactly(rel, extra):
    n = max(sum(rel), 1) + extra  # rationale at least as long as the hit count
    ap = average_precision(rel, n)
    assert 0.0 <= ap <= 1.0
    assert ap == oracle_ap(rel, n)


def test_instance_ap_via_ranking():
    # scores rank the tokens c, a, b; rationale says c, b, a
    ap = instance_ap(record(["a", "b", "c"], [0.5, 0.1, 0.9]),
                     HumanRationale("i1", "d", ("c", "b", "a")))
    assert ap == pytest.approx(oracle_ap([1, 0, 0], 3), abs=0)


def test_evaluate_ha_skips_instances_without_rationale():
    records = [record(["a", "b"], [0.9, 0.1], "i1"),
               record(["a", "b"], [0.9, 0.1], "i2")]
    rationales = [HumanRationale("i1", "d", ("a", "b"))]
    index = build_index(records, rationales, [])
    result, skips = evaluate_ha(index, ("d", "m", "x"))
    assert result.n_evaluated == 1
    assert result.map_score == 1.0
    assert [s.instance_id for s in skips] == ["i2"]
    assert skips[0].reason == "no human rationale"


def test_evaluate_ha_parallelism_changes_nothing():
    records = [record([f"t{j}" for j in range(6)],
                      [(j * 7 + i) % 5 + 0.1 * j for j in range(6)],
                      f"i{i}") for i in range(9)]
    rationales = [HumanRationale(f"i{i}", "d", tuple(f"t{j}" for j in range(6)))
                  for i in range(9)]
    index = build_index(records, rationales, [])
    serial, _ = evaluate_ha(index, ("d", "m", "x"), parallelism=1)
    threaded, _ = evaluate_ha(index, ("d", "m", "x"), parallelism=4)
    assert serial == threaded


def test_map_equals_oracle_mean():
    aps = [0.1, 0.7, 0.35, 1.0, 0.0, 0.625]
    assert mean_average_precision(aps) == oracle_mean(aps)
