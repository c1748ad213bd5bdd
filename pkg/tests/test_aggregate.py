import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_cws
from xaieval.aggregate import (DEFAULT_WEIGHTS, CellScores, MetricTable,
                               MetricWeights, combined_weighted_score,
                               crosscheck_reference, finish_cell,
                               load_reference, render_crosscheck,
                               render_report, render_token_heatmap,
                               table_from_results, table_to_results)
from xaieval.corpus import SkipEntry

dyadic = st.integers(-1024, 1024).map(lambda n: n / 64.0)


# ---------------------------------------------------------------------------
# weights


def test_default_weights_are_uniform():
    assert DEFAULT_WEIGHTS.as_dict() == {"ha": 0.25, "cn": 0.25, "ct": 0.25, "r": 0.25}


def test_weights_must_be_convex():
    MetricWeights(0.4, 0.3, 0.2, 0.1)
    with pytest.raises(ValueError, match="non-negative"):
        MetricWeights(-0.1, 0.5, 0.3, 0.3)
    with pytest.raises(ValueError, match="sum to 1"):
        MetricWeights(0.5, 0.5, 0.5, 0.5)


def test_weights_parse_round_trip():
    w = MetricWeights.parse("ha=0.4, cn=0.3, ct=0.2, r=0.1")
    assert w == MetricWeights(0.4, 0.3, 0.2, 0.1)


@pytest.mark.parametrize("text,message", [
    ("ha=0.5,cn=0.5", "missing weight keys"),
    ("ha=0.25,cn=0.25,ct=0.25,r=0.25,ha=0.0", "duplicate"),
    ("ha=0.25,cn=0.25,ct=0.25,foo=0.25", "bad weight component"),
    ("ha=x,cn=0.25,ct=0.25,r=0.25", "not a number"),
])
def test_weights_parse_rejects_malformed(text, message):
    with pytest.raises(ValueError, match=message):
        MetricWeights.parse(text)


# ---------------------------------------------------------------------------
# combined score


def test_cws_equal_weights_is_the_mean_with_robustness_flipped():
    cws = combined_weighted_score(0.8, 0.2, 0.6, 0.4)
    assert cws == pytest.approx(0.25 * (0.8 + 0.6 + 0.4 + 0.8), rel=1e-15)


# frozen: raw attention row with negative consistency -> 0.1824
def test_cws_keeps_negative_consistency_unclamped():
    cws = combined_weighted_score(0.1437, 0.0237, -0.9593, 0.5689)
    assert cws == pytest.approx(0.1824, abs=5e-4)
    clamped = combined_weighted_score(0.1437, 0.0237, 0.0, 0.5689)
    assert cws < clamped


@pytest.mark.properties
@given(ha=dyadic, r=dyadic, cn=dyadic, ct=dyadic,
       raw=st.tuples(*[st.integers(1, 100)] * 4))
@settings(max_examples=100)
def test_cws_matches_oracle_under_any_weights(ha, r, cn, ct, raw):
    total = sum(raw)
    w = MetricWeights(*[x / total for x in raw])
    got = combined_weighted_score(ha, r, cn, ct, w)
    assert got == pytest.approx(oracle_cws(ha, r, cn, ct, w.ha, w.cn, w.ct, w.r),
                                abs=1e-12)


# dyadic inputs keep every addend exact, so shifts land exactly
@pytest.mark.properties
@given(ha=dyadic, r=dyadic, cn=dyadic, ct=dyadic,
       delta=st.integers(1, 128).map(lambda n: n / 64.0))
@settings(max_examples=100)
def test_cws_is_affine_and_monotone_per_input(ha, r, cn, ct, delta):
    base = combined_weighted_score(ha, r, cn, ct)
    assert combined_weighted_score(ha + delta, r, cn, ct) - base == 0.25 * delta
    assert combined_weighted_score(ha, r, cn + delta, ct) > base
    assert combined_weighted_score(ha, r, cn, ct + delta) > base
    # robustness is lower-is-better: raising it must lower the score
    assert combined_weighted_score(ha, r + delta, cn, ct) < base


# ---------------------------------------------------------------------------
# cells and the table


def cell(method="x", **kw):
    defaults = dict(ha=0.8, robustness=0.2, consistency=0.6, contrastivity=0.4)
    defaults.update(kw)
    return CellScores("d", "m", method, **defaults)


def test_finish_cell_fills_cws():
    done = finish_cell(cell())
    assert done.cws == pytest.approx(0.65, rel=1e-15)
    assert done.notes == ()


def test_finish_cell_names_missing_metrics():
    done = finish_cell(cell(ha=None, contrastivity=None))
    assert done.cws is None
    assert done.notes == ("cws undefined: missing ha, contrastivity",)


def test_finish_cell_honours_custom_weights():
    done = finish_cell(cell(), MetricWeights(1.0, 0.0, 0.0, 0.0))
    assert done.cws == 0.8


def test_table_build_sorts_cells():
    table = MetricTable.build([cell("z"), cell("a"), cell("m")])
    assert [c.method for c in table.cells] == ["a", "m", "z"]


# ---------------------------------------------------------------------------
# rendering


def sample_table():
    cells = [finish_cell(cell("lime")),
             finish_cell(cell("shap", consistency=None, robustness=0.9))]
    skips = (SkipEntry("ha", "d", "m", "lime", "i9", "no human rationale"),)
    return MetricTable.build(cells, metadata=(("tool", "xaieval"),), skips=skips)


@pytest.mark.parametrize("fmt", ["csv", "markdown", "jsonl", "html_heatmap"])
def test_rendering_is_deterministic(fmt):
    table = sample_table()
    assert render_report(table, fmt) == render_report(table, fmt)


def test_csv_layout():
    text = render_report(sample_table(), "csv")
    lines = text.splitlines()
    assert lines[0] == "# tool=xaieval"
    assert lines[1] == "# robustness is lower-is-better; cws uses (1 - robustness)"
    assert lines[2] == "dataset,model,method,ha,robustness,consistency,contrastivity,cws"
    assert lines[3] == "d,m,lime,0.800000,0.200000,0.600000,0.400000,0.650000"
    # missing metrics stay empty rather than faking zeros
    assert lines[4] == "d,m,shap,0.800000,0.900000,,0.400000,"
    assert "# note: d/m/shap: cws undefined: missing consistency" in lines
    assert any(line.startswith("# skip: ") and "no human rationale" in line
               for line in lines)


def test_markdown_layout():
    text = render_report(sample_table(), "markdown")
    assert "## Configuration" in text
    assert "- `tool` = `xaieval`" in text
    assert "| d | m | lime | 0.8000 | 0.2000 | 0.6000 | 0.4000 | 0.6500 |" in text
    assert "## Notes" in text
    assert "## Skipped instances" in text


def test_jsonl_layout():
    lines = render_report(sample_table(), "jsonl").splitlines()
    assert json.loads(lines[0]) == {"meta": {"tool": "xaieval"}}
    first = json.loads(lines[1])
    assert first["method"] == "lime" and first["cws"] == pytest.approx(0.65)
    second = json.loads(lines[2])
    assert second["consistency"] is None and second["cws"] is None
    skip = json.loads(lines[3])["skip"]
    assert skip["instance_id"] == "i9"


def test_html_escapes_and_inverts_robustness_shading():
    cells = [finish_cell(cell("a<b", robustness=0.0)),
             finish_cell(cell("plain", robustness=1.0))]
    text = render_report(MetricTable.build(cells), "html_heatmap")
    assert "a&lt;b" in text and "a<b</td>" not in text
    rows = [line for line in text.splitlines() if line.startswith("<tr><td>")]
    low, high = (r for r in rows if "a&lt;b" in r), (r for r in rows if "plain" in r)
    # lower robustness is better, so it gets the saturated end of the ramp
    assert "#87ff87" in next(iter(low))
    assert "#ffffff" in next(iter(high))


def test_render_report_rejects_unknown_format():
    with pytest.raises(ValueError, match="format"):
        render_report(sample_table(), "pdf")


def test_token_heatmap_marks_sign_and_magnitude():
    out = render_token_heatmap(["good", "<bad>", "meh"], [1.0, -0.5, 0.0])
    assert "rgba(255,80,80,1.000)" in out
    assert "rgba(80,80,255,0.500)" in out
    assert "rgba(255,80,80,0.000)" in out
    assert "&lt;bad&gt;" in out and "<bad>" not in out
    with pytest.raises(ValueError, match="length mismatch"):
        render_token_heatmap(["a"], [1.0, 2.0])


# ---------------------------------------------------------------------------
# results round-trip


def test_results_round_trip_preserves_everything():
    table = sample_table()
    loaded = table_from_results(json.loads(json.dumps(table_to_results(table))))
    assert loaded == table


def test_results_loader_rejects_malformed_payloads():
    with pytest.raises(ValueError, match="malformed results"):
        table_from_results({"cells": [{"model": "m"}]})
    with pytest.raises(ValueError, match="malformed results"):
        table_from_results({})


# ---------------------------------------------------------------------------
# reference cross-check


def test_reference_has_full_grid():
    reference = load_reference()
    assert len(reference["rows"]) == 60
    assert set(reference["weights"]) == {"ha", "cn", "ct", "r"}


def by_cell(rows):
    return {(r.dataset, r.model, r.method): r for r in rows}


def test_crosscheck_flags_follow_tolerance():
    rows = by_cell(crosscheck_reference())
    assert rows[("IMDB", "TinyBERT", "LIME")].reconciled
    assert rows[("IMDB", "XLM-R", "LIME")].reconciled
    bad = rows[("IMDB", "BERTbase", "LIME")]
    assert not bad.reconciled
    assert bad.recomputed == pytest.approx(0.84725, abs=5e-4)
    assert bad.printed == 0.8755


def test_crosscheck_notes_both_consistency_readings():
    rows = by_cell(crosscheck_reference())
    noted = rows[("TSE", "DeBERTa-xlarge", "SHAP")]
    assert "0.9324" in noted.note and "0.09324" in noted.note


def test_crosscheck_rendering():
    rows = crosscheck_reference()
    md = render_crosscheck(rows)
    assert "of 60 cells reconcile" in md
    assert "**NO**" in md
    csv = render_crosscheck(rows, "csv")
    assert csv.splitlines()[0] == \
        "dataset,model,method,recomputed,printed,delta,reconciled"
    assert ",NO" in csv
    with pytest.raises(ValueError, match="crosscheck format"):
        render_crosscheck(rows, "jsonl")
