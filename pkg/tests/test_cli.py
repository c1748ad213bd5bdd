import json
import os
import subprocess
import sys

import pytest

from xaieval.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def saliency(iid, variant, scores, tokens=("good", "movie"), target="pos"):
    return {"instance_id": iid, "dataset": "imdb", "model": "bert",
            "method": "lime", "variant": variant, "predicted_label": "pos",
            "target_label": target, "tokens": list(tokens),
            "scores": list(scores)}


def write_jsonl(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


@pytest.fixture
def corpus(tmp_path):
    explanations = [
        saliency("i1", "original", [0.9, 0.1]),
        saliency("i1", "perturbed:mask_top_k", [0.4, 0.1], tokens=("[MASK]", "movie")),
        saliency("i1", "original", [0.1, 0.9], target="neg"),
        saliency("i1", "seed:1", [0.8, 0.2]),
        saliency("i1", "seed:2", [0.6, 0.4]),
        saliency("i2", "original", [0.7, 0.3, 0.5], tokens=("bad", "film", "plot")),
        saliency("i2", "perturbed:mask_top_k", [0.2, 0.3, 0.5],
                 tokens=("[MASK]", "film", "plot")),
        saliency("i2", "original", [0.2, 0.8, 0.1],
                 tokens=("bad", "film", "plot"), target="neg"),
        saliency("i2", "seed:1", [0.5, 0.5, 0.2], tokens=("bad", "film", "plot")),
        saliency("i2", "seed:2", [0.45, 0.55, 0.2], tokens=("bad", "film", "plot")),
    ]
    rationales = [
        {"instance_id": "i1", "dataset": "imdb", "ranked_tokens": ["good"]},
        {"instance_id": "i2", "dataset": "imdb", "ranked_tokens": ["bad", "film"]},
    ]
    attention = [
        {"instance_id": "i1", "model": "bert", "seed": 1, "avg_attention": [0.7, 0.3]},
        {"instance_id": "i1", "model": "bert", "seed": 2, "avg_attention": [0.5, 0.5]},
        {"instance_id": "i2", "model": "bert", "seed": 1,
         "avg_attention": [0.5, 0.3, 0.2]},
        {"instance_id": "i2", "model": "bert", "seed": 2,
         "avg_attention": [0.49, 0.31, 0.2]},
    ]
    return {
        "explanations": write_jsonl(tmp_path / "explanations.jsonl", explanations),
        "rationales": write_jsonl(tmp_path / "rationales.jsonl", rationales),
        "attention": write_jsonl(tmp_path / "attention.jsonl", attention),
        "dir": tmp_path,
    }


@pytest.fixture
def broken_file(tmp_path):
    lines = [
        json.dumps(saliency("i1", "original", [0.9, 0.1])),
        json.dumps(saliency("i2", "original", [0.9])),  # 2 tokens vs 1 score
        json.dumps(saliency("i3", "original", [0.5, 0.5])),
        '{"instance_id":"i4","dataset":"imdb","model":"bert","method":"lime",'
        '"variant":"original","predicted_label":"pos","target_label":"pos",'
        '"tokens":["a","b"],"scores":[0.1,NaN]}',
        '{broken',
    ]
    path = tmp_path / "broken.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# entry point and validate


def test_module_entry_point_reports_version():
    out = subprocess.run([sys.executable, "-m", "xaieval", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.startswith("xaieval ")


def test_validate_accepts_a_clean_corpus(capsys, corpus):
    code, out, err = run(capsys, "validate",
                         "--explanations", str(corpus["explanations"]),
                         "--rationales", str(corpus["rationales"]),
                         "--attention", str(corpus["attention"]))
    assert code == 0
    assert out == "OK: 16 record(s) valid\n"
    assert err == ""


def test_validate_reports_every_fault_with_location(capsys, broken_file):
    code, _, err = run(capsys, "validate", "--explanations", str(broken_file))
    assert code == 2
    assert f"{broken_file}:2: tokens and scores length mismatch (2 vs 1)" in err
    assert f"{broken_file}:4: scores[1] is non-finite" in err
    assert f"{broken_file}:5: invalid JSON" in err
    assert "3 validation error(s)" in err


def test_validate_with_no_inputs_is_a_usage_error(capsys):
    code, _, err = run(capsys, "validate")
    assert code == 2
    assert "nothing to validate" in err


def test_missing_file_is_reported_not_raised(capsys, tmp_path):
    code, _, err = run(capsys, "validate",
                       "--explanations", str(tmp_path / "nope.jsonl"))
    assert code == 2
    assert f"error: file not found: {tmp_path / 'nope.jsonl'}" in err


def test_error_output_is_plain_when_not_a_tty(broken_file):
    env = dict(os.environ, XAIEVAL_NO_COLOR="1")
    out = subprocess.run(
        [sys.executable, "-m", "xaieval", "validate",
         "--explanations", str(broken_file)],
        capture_output=True, text=True, env=env)
    assert out.returncode == 2
    assert "\x1b[" not in out.stderr


# ---------------------------------------------------------------------------
# evaluate


def test_evaluate_produces_the_full_table(capsys, corpus):
    code, out, _ = run(capsys, "evaluate",
                       "--explanations", str(corpus["explanations"]),
                       "--rationales", str(corpus["rationales"]),
                       "--attention", str(corpus["attention"]),
                       "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    data = [l for l in lines if l.startswith("imdb,")]
    assert len(data) == 1
    # ha: i1 scores 1.0, i2's second-ranked token misses its slot -> 0.5;
    # robustness: ADs 0.45 and 0.7/3; consistency: i1 drifts more everywhere
    assert data[0].startswith("imdb,bert,lime,0.750000,0.341667,1.000000,")
    contrastivity, cws = data[0].split(",")[6:8]
    assert float(contrastivity) > 0
    assert cws != ""
    assert any(l.startswith("# weights=") or "weights=" in l for l in lines)


def test_evaluate_infers_format_from_extension(capsys, corpus, tmp_path):
    out_path = tmp_path / "report.csv"
    code, _, _ = run(capsys, "evaluate",
                     "--explanations", str(corpus["explanations"]),
                     "--rationales", str(corpus["rationales"]),
                     "--attention", str(corpus["attention"]),
                     "--out", str(out_path))
    assert code == 0
    text = out_path.read_text(encoding="utf-8")
    assert "dataset,model,method,ha,robustness,consistency,contrastivity,cws" in text


def test_explicit_format_beats_extension(capsys, corpus, tmp_path):
    out_path = tmp_path / "report.csv"
    run(capsys, "evaluate",
        "--explanations", str(corpus["explanations"]),
        "--rationales", str(corpus["rationales"]),
        "--attention", str(corpus["attention"]),
        "--out", str(out_path), "--format", "jsonl")
    first = out_path.read_text(encoding="utf-8").splitlines()[0]
    assert json.loads(first).keys() == {"meta"}


def test_metric_subset_skips_missing_inputs(capsys, corpus):
    code, out, _ = run(capsys, "evaluate",
                       "--explanations", str(corpus["explanations"]),
                       "--metrics", "robustness,contrastivity",
                       "--format", "csv")
    assert code == 0
    row = [l for l in out.splitlines() if l.startswith("imdb,")][0]
    fields = row.split(",")
    assert fields[3] == "" and fields[5] == ""  # ha and consistency not run
    assert fields[4] == "0.341667"


def test_ha_requires_rationales(capsys, corpus):
    code, _, err = run(capsys, "evaluate",
                       "--explanations", str(corpus["explanations"]),
                       "--metrics", "ha")
    assert code == 2
    assert "--rationales is required" in err


def test_unknown_metric_is_rejected(capsys, corpus):
    code, _, err = run(capsys, "evaluate",
                       "--explanations", str(corpus["explanations"]),
                       "--metrics", "ha,accuracy")
    assert code == 2
    assert "unknown metrics: accuracy" in err


def test_weights_only_apply_to_the_full_run(capsys, corpus):
    code, _, err = run(capsys, "evaluate",
                       "--explanations", str(corpus["explanations"]),
                       "--metrics", "contrastivity",
                       "--weights", "ha=0.25,cn=0.25,ct=0.25,r=0.25")
    assert code == 2
    assert "--weights only applies" in err


def test_invalid_weights_are_a_usage_error(capsys, corpus):
    code, _, err = run(capsys, "evaluate",
                       "--explanations", str(corpus["explanations"]),
                       "--rationales", str(corpus["rationales"]),
                       "--attention", str(corpus["attention"]),
                       "--weights", "ha=2,cn=0,ct=0,r=0")
    assert code == 2
    assert "sum to 1" in err


def test_evaluate_rejects_broken_corpus_with_locations(capsys, broken_file, corpus):
    code, _, err = run(capsys, "evaluate",
                       "--explanations", str(broken_file),
                       "--rationales", str(corpus["rationales"]),
                       "--attention", str(corpus["attention"]))
    assert code == 2
    assert f"{broken_file}:2:" in err
    assert "validation error(s)" in err


# ---------------------------------------------------------------------------
# config file


def test_config_supplies_defaults_and_flags_win(capsys, corpus, tmp_path):
    cfg = tmp_path / "xaieval.cfg"
    cfg.write_text("rank-by = abs  # magnitude ranking\n", encoding="utf-8")
    base = ["evaluate", "--explanations", str(corpus["explanations"]),
            "--rationales", str(corpus["rationales"]),
            "--metrics", "ha", "--format", "csv", "--config", str(cfg)]

    _, out, _ = run(capsys, *base)
    assert "# rank_by=abs" in out.splitlines()

    _, out, _ = run(capsys, *base, "--rank-by", "raw")
    assert "# rank_by=raw" in out.splitlines()


def test_unknown_config_key_fails(capsys, corpus, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n", encoding="utf-8")
    code, _, err = run(capsys, "validate",
                       "--explanations", str(corpus["explanations"]),
                       "--config", str(cfg))
    assert code == 2
    assert "unknown config key 'bogus'" in err


def test_config_boolean_values_are_checked(capsys, corpus, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no-lowercase = maybe\n", encoding="utf-8")
    code, _, err = run(capsys, "validate",
                       "--explanations", str(corpus["explanations"]),
                       "--config", str(cfg))
    assert code == 2
    assert "expects a boolean" in err


def test_config_syntax_error_names_the_line(capsys, corpus, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("# fine\njust text\n", encoding="utf-8")
    code, _, err = run(capsys, "validate",
                       "--explanations", str(corpus["explanations"]),
                       "--config", str(cfg))
    assert code == 2
    assert f"{cfg}:2: expected key=value" in err


# ---------------------------------------------------------------------------
# single-metric subcommands and notes


def test_single_metric_commands_leave_cws_empty(capsys, corpus):
    code, out, _ = run(capsys, "consistency",
                       "--explanations", str(corpus["explanations"]),
                       "--attention", str(corpus["attention"]),
                       "--distance", "euclidean", "--format", "csv")
    assert code == 0
    row = [l for l in out.splitlines() if l.startswith("imdb,")][0]
    assert row.split(",")[5] == "1.000000"
    assert row.endswith(",")  # no cws without the other metrics


def test_multiple_strategies_get_a_note(capsys, corpus, tmp_path):
    extra = saliency("i1", "perturbed:remove_bottom_k", [0.9], tokens=("good",))
    path = tmp_path / "multi.jsonl"
    lines = corpus["explanations"].read_text(encoding="utf-8")
    path.write_text(lines + json.dumps(extra) + "\n", encoding="utf-8")

    _, out, _ = run(capsys, "robustness", "--explanations", str(path),
                    "--format", "csv")
    assert "several strategies present (mask_top_k, remove_bottom_k)" in out

    _, out, _ = run(capsys, "robustness", "--explanations", str(path),
                    "--strategy", "remove_bottom_k", "--format", "csv")
    assert "several strategies" not in out

    _, out, _ = run(capsys, "robustness", "--explanations", str(path),
                    "--strategy", "nope", "--format", "csv")
    assert "strategy 'nope' absent here" in out


def test_ha_skips_are_listed(capsys, corpus, tmp_path):
    extra = saliency("i3", "original", [0.4, 0.6], tokens=("meh", "plot"))
    path = tmp_path / "more.jsonl"
    lines = corpus["explanations"].read_text(encoding="utf-8")
    path.write_text(lines + json.dumps(extra) + "\n", encoding="utf-8")
    _, out, _ = run(capsys, "ha", "--explanations", str(path),
                    "--rationales", str(corpus["rationales"]), "--format", "csv")
    assert "# skip: ha: imdb/bert/lime instance i3: no human rationale" in out


# ---------------------------------------------------------------------------
# save-results / report


def test_saved_results_re_render_identically(capsys, corpus, tmp_path):
    first = tmp_path / "direct.md"
    results = tmp_path / "results.json"
    run(capsys, "evaluate",
        "--explanations", str(corpus["explanations"]),
        "--rationales", str(corpus["rationales"]),
        "--attention", str(corpus["attention"]),
        "--out", str(first), "--save-results", str(results))

    second = tmp_path / "replayed.md"
    code, _, _ = run(capsys, "report", "--results", str(results),
                     "--out", str(second))
    assert code == 0
    assert first.read_bytes() == second.read_bytes()


def test_report_rejects_malformed_results(capsys, tmp_path):
    path = tmp_path / "results.json"
    path.write_text('{"cells": [{"model": "m"}]}', encoding="utf-8")
    code, _, err = run(capsys, "report", "--results", str(path))
    assert code == 2
    assert "malformed results" in err


def test_report_crosscheck_summarizes_reconciliation(capsys, tmp_path):
    code, out, _ = run(capsys, "report", "--crosscheck")
    assert code == 0
    assert "of 60 cells reconcile" in out

    out_path = tmp_path / "crosscheck.csv"
    run(capsys, "report", "--crosscheck", "--out", str(out_path))
    text = out_path.read_text(encoding="utf-8")
    assert "BERTbase,LIME" in text
    assert ",NO" in text


# ---------------------------------------------------------------------------
# perturb and synth


def test_perturb_round_trip(capsys, corpus, tmp_path):
    out_path = tmp_path / "perturbed.jsonl"
    code, out, _ = run(capsys, "perturb",
                       "--explanations", str(corpus["explanations"]),
                       "--strategy", "mask_top_k", "--out", str(out_path))
    assert code == 0
    assert "wrote 2 perturbed input(s)" in out
    lines = out_path.read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["meta"]["strategy"] == "mask_top_k"
    entries = [json.loads(l) for l in lines[1:]]
    assert entries[0]["tokens"] == ["[MASK]", "movie"]
    assert entries[1]["tokens"] == ["[MASK]", "film", "plot"]


def test_perturb_synonyms_need_a_lexicon(capsys, corpus, tmp_path):
    code, _, err = run(capsys, "perturb",
                       "--explanations", str(corpus["explanations"]),
                       "--strategy", "synonym_replace",
                       "--out", str(tmp_path / "p.jsonl"))
    assert code == 2
    assert "needs --lexicon" in err


def test_synth_then_evaluate_hits_the_designed_score(capsys, tmp_path):
    code, out, _ = run(capsys, "synth", "--kind", "ha", "--out", str(tmp_path),
                       "--n-instances", "10", "--seed", "3")
    assert code == 0
    paths = dict(line.split(": ", 1) for line in out.splitlines())
    code, out, _ = run(capsys, "ha",
                       "--explanations", paths["explanations"],
                       "--rationales", paths["rationales"], "--format", "csv")
    assert code == 0
    row = [l for l in out.splitlines() if l.startswith("synth-ha,")][0]
    assert row.split(",")[3] == "1.000000"


# ---------------------------------------------------------------------------
# determinism


@pytest.mark.properties
def test_reports_are_byte_identical_across_parallelism(capsys, corpus, tmp_path):
    outputs = []
    for workers in ("1", "4"):
        out_path = tmp_path / f"report-{workers}.csv"
        code, _, _ = run(capsys, "evaluate",
                         "--explanations", str(corpus["explanations"]),
                         "--rationales", str(corpus["rationales"]),
                         "--attention", str(corpus["attention"]),
                         "--parallelism", workers, "--out", str(out_path))
        assert code == 0
        outputs.append(out_path.read_bytes())
    assert outputs[0] == outputs[1]
