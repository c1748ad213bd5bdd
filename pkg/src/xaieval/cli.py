"""Command line driver.

Subcommands: validate, ha, robustness, consistency, contrastivity,
evaluate, perturb, synth, report.  Exit codes: 0 success, 1 internal
error, 2 validation or configuration failure.

A config file of ``key = value`` lines (keys match long flag names) can
pre-set any flag of the invoked subcommand; explicit flags win.  Reports
are byte-identical for identical config and inputs no matter the
--parallelism value, so neither --parallelism nor output paths are part
of the embedded report metadata.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .aggregate import (DEFAULT_WEIGHTS, CellScores, MetricTable, MetricWeights,
                        REPORT_FORMATS, crosscheck_reference, finish_cell,
                        render_crosscheck, render_report, table_from_results,
                        table_to_results)
from .consistency import MEASURES, evaluate_consistency
from .contrastivity import DEFAULT_EPSILON, MODES, evaluate_contrastivity
from .corpus import (CorpusError, CorpusIndex, ScanResult, TokenNormalizer,
                     ValidationError, build_index, cross_checks, scan_attention,
                     scan_rationales, scan_saliency)
from .figures import save_metric_figures
from .ha import evaluate_ha
from .ranking import RANK_BY_CHOICES
from .robustness import (DEFAULT_MASK_TOKEN, PerturbationSpec, STRATEGIES,
                         evaluate_robustness, generate_perturbations,
                         load_lexicon, write_perturbed_inputs)
from .synth import KINDS, SynthConfig, write_synth_corpus

METRICS = ("ha", "robustness", "consistency", "contrastivity")

_EXT_FORMATS = {".csv": "csv", ".md": "markdown", ".markdown": "markdown",
                ".jsonl": "jsonl", ".html": "html_heatmap", ".htm": "html_heatmap"}


class UsageError(Exception):
    """Bad flags or config; reported as exit code 2."""


def _color_enabled() -> bool:
    if os.environ.get("XAIEVAL_NO_COLOR"):
        return False
    return hasattr(sys.stderr, "isatty") and sys.stderr.isatty()


def _print_error(text: str):
    if _color_enabled():
        text = f"\x1b[31m{text}\x1b[0m"
    print(text, file=sys.stderr)


# ---------------------------------------------------------------------------
# parser


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", help="report file (format inferred from extension)")
    p.add_argument("--format", choices=REPORT_FORMATS,
                   help="report format (default: from --out extension, else markdown)")
    p.add_argument("--figures", metavar="DIR",
                   help="also render one PNG heatmap per metric into DIR")


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file supplying flag defaults")
    p.add_argument("--parallelism", type=int, default=1,
                   help="worker threads for instance-level loops (results identical)")
    p.add_argument("--no-lowercase", action="store_true",
                   help="match tokens case-sensitively")
    p.add_argument("--keep-punctuation", action="store_true",
                   help="do not strip outer punctuation when matching tokens")


def _add_ha_flags(p):
    p.add_argument("--rank-by", choices=RANK_BY_CHOICES, default="raw",
                   help="rank tokens by signed score or by magnitude")


def _add_consistency_flags(p):
    p.add_argument("--distance", choices=MEASURES, default="cosine")


def _add_contrastivity_flags(p):
    p.add_argument("--mode", choices=MODES, default="per_class")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="smoothing added to |score| before normalizing")
    p.add_argument("--log-base", type=float, default=None,
                   help="log base for KL (default: natural log)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="xaieval",
        description="Score token-level model explanations: human agreement, "
                    "robustness, consistency, contrastivity, and a combined "
                    "weighted score.")
    parser.add_argument("--version", action="version", version=f"xaieval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        subparsers[name] = p
        return p

    p = command("validate", "check corpus files, reporting every violation")
    p.add_argument("--explanations")
    p.add_argument("--rationales")
    p.add_argument("--attention")
    _add_common_flags(p)

    p = command("ha", "agreement between explanation rankings and human rationales")
    p.add_argument("--explanations", required=True)
    p.add_argument("--rationales", required=True)
    _add_ha_flags(p)
    _add_common_flags(p)
    _add_output_flags(p)

    p = command("robustness", "explanation stability under input perturbations")
    p.add_argument("--explanations", required=True)
    p.add_argument("--strategy", help="perturbation tag to report for cws")
    _add_common_flags(p)
    _add_output_flags(p)

    p = command("consistency", "explanation drift vs attention drift across seeds")
    p.add_argument("--explanations", required=True)
    p.add_argument("--attention", required=True)
    _add_consistency_flags(p)
    _add_common_flags(p)
    _add_output_flags(p)

    p = command("contrastivity", "divergence between class-wise explanations")
    p.add_argument("--explanations", required=True)
    _add_contrastivity_flags(p)
    _add_common_flags(p)
    _add_output_flags(p)

    p = command("evaluate", "all selected metrics plus the combined weighted score")
    p.add_argument("--explanations", required=True)
    p.add_argument("--rationales")
    p.add_argument("--attention")
    p.add_argument("--metrics", default=",".join(METRICS),
                   help="comma list of metrics to run (default: all)")
    p.add_argument("--weights", help="cws weights, e.g. ha=0.25,cn=0.25,ct=0.25,r=0.25")
    p.add_argument("--strategy", help="perturbation tag feeding the cws robustness term")
    _add_ha_flags(p)
    _add_consistency_flags(p)
    _add_contrastivity_flags(p)
    _add_common_flags(p)
    _add_output_flags(p)
    p.add_argument("--save-results", metavar="PATH",
                   help="write full-precision results JSON for later re-rendering")

    p = command("perturb", "emit perturbed token sequences for re-explanation")
    p.add_argument("--explanations", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--rate", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-token", default=DEFAULT_MASK_TOKEN)
    p.add_argument("--lexicon", help="two-column synonym file for synonym_replace")
    p.add_argument("--out", required=True, help="perturbed_inputs.jsonl destination")
    _add_common_flags(p)

    p = command("synth", "generate a synthetic corpus with known metric values")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--n-instances", type=int, default=100)
    p.add_argument("--tokens-per-instance", type=int, default=12)
    p.add_argument("--swap-rate", type=float, default=0.0)
    p.add_argument("--noise-sigma", type=float, default=0.1)
    p.add_argument("--coupling-noise", type=float, default=0.0)
    p.add_argument("--antitone", action="store_true")
    p.add_argument("--config")

    p = command("report", "re-render saved results, or cross-check the "
                          "bundled reference benchmark")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--results", help="results JSON from evaluate --save-results")
    group.add_argument("--crosscheck", action="store_true",
                       help="recompute the bundled reference scores and flag "
                            "cells that do not reconcile")
    p.add_argument("--weights", help="cws weights for --crosscheck")
    p.add_argument("--tolerance", type=float, default=0.0005)
    p.add_argument("--config")
    _add_output_flags(p)

    return parser, subparsers


# ---------------------------------------------------------------------------
# config file


def _parse_config_file(path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = text.partition("=")
            if not sep:
                raise UsageError(f"{path}:{line_no}: expected key=value")
            mapping[key.strip().replace("-", "_")] = value.strip()
    return mapping


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert_config_value(action: argparse.Action, raw: str, key: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        lowered = raw.lower()
        if lowered in _TRUE:
            return isinstance(action, argparse._StoreTrueAction)
        if lowered in _FALSE:
            return not isinstance(action, argparse._StoreTrueAction)
        raise UsageError(f"config key {key!r} expects a boolean, got {raw!r}")
    value = action.type(raw) if action.type else raw
    if action.choices and value not in action.choices:
        raise UsageError(f"config key {key!r} must be one of "
                         f"{sorted(action.choices)}, got {raw!r}")
    return value


def _apply_config(parser, subparsers, args, argv) -> argparse.Namespace:
    config_path = getattr(args, "config", None)
    if not config_path:
        return args
    mapping = _parse_config_file(config_path)
    sub = subparsers[args.command]
    actions = {a.dest: a for a in sub._actions}
    overrides = {}
    for key, raw in mapping.items():
        if key in ("help", "config") or key not in actions:
            raise UsageError(f"unknown config key {key!r} for command {args.command!r}")
        overrides[key] = _convert_config_value(actions[key], raw, key)
    sub.set_defaults(**overrides)
    # explicit command-line flags still win over config-file values
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# shared plumbing


def _normalizer(args) -> TokenNormalizer:
    return TokenNormalizer(lowercase=not args.no_lowercase,
                           strip_outer_punctuation=not args.keep_punctuation)


def _scan_or_fail(args, need_rationales: bool, need_attention: bool):
    """Scan the input files; print every diagnostic and fail on any error."""
    normalizer = _normalizer(args)
    scans: dict[str, ScanResult | None] = {"rationales": None, "attention": None}
    errors: list[ValidationError] = []

    explanation_scan = scan_saliency(args.explanations)
    errors.extend(explanation_scan.errors)
    if need_rationales:
        scans["rationales"] = scan_rationales(args.rationales, normalizer)
        errors.extend(scans["rationales"].errors)
    if need_attention:
        scans["attention"] = scan_attention(args.attention)
        errors.extend(scans["attention"].errors)
        errors.extend(cross_checks(explanation_scan, scans["attention"]))

    if errors:
        for e in errors:
            _print_error(str(e))
        _print_error(f"{len(errors)} validation error(s)")
        raise SystemExit(2)

    rationales = scans["rationales"].records if scans["rationales"] else []
    attention = scans["attention"].records if scans["attention"] else []
    index = build_index(explanation_scan.records, rationales, attention, normalizer)

    input_meta = {}
    if explanation_scan.meta:
        input_meta["explanations"] = explanation_scan.meta
    for kind in ("rationales", "attention"):
        if scans[kind] and scans[kind].meta:
            input_meta[kind] = scans[kind].meta
    return index, input_meta


def _format_for(args) -> str:
    if args.format:
        return args.format
    if args.out:
        fmt = _EXT_FORMATS.get(Path(args.out).suffix.lower())
        if fmt:
            return fmt
    return "markdown"


def _emit_table(table: MetricTable, args) -> None:
    fmt = _format_for(args)
    text = render_report(table, fmt)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.figures:
        save_metric_figures(table, args.figures)
    if getattr(args, "save_results", None):
        payload = json.dumps(table_to_results(table), ensure_ascii=False, indent=2)
        Path(args.save_results).write_text(payload + "\n", encoding="utf-8")


def _metadata(args, metrics, weights: MetricWeights | None, input_meta: dict):
    """Effective config for the report header.

    Deliberately excludes --parallelism and output paths: they cannot
    change any score, and reports must be byte-identical across
    parallelism settings.
    """
    entries: list[tuple[str, str]] = [
        ("tool", f"xaieval {__version__}"),
        ("command", args.command),
        ("metrics", ",".join(metrics)),
        ("explanations", str(args.explanations)),
    ]
    if getattr(args, "rationales", None):
        entries.append(("rationales", str(args.rationales)))
    if getattr(args, "attention", None):
        entries.append(("attention", str(args.attention)))
    entries.append(("normalizer.lowercase", str(not args.no_lowercase).lower()))
    entries.append(("normalizer.strip_outer_punctuation",
                    str(not args.keep_punctuation).lower()))
    if "ha" in metrics:
        entries.append(("rank_by", args.rank_by))
    if "robustness" in metrics:
        entries.append(("strategy", getattr(args, "strategy", None) or "auto"))
    if "consistency" in metrics:
        entries.append(("distance", args.distance))
    if "contrastivity" in metrics:
        entries.append(("mode", args.mode))
        entries.append(("epsilon", repr(args.epsilon)))
        entries.append(("log_base", "e" if args.log_base is None else repr(args.log_base)))
    if weights is not None:
        w = weights.as_dict()
        entries.append(("weights", ",".join(f"{k}={w[k]!r}" for k in ("ha", "cn", "ct", "r"))))
    for kind in sorted(input_meta):
        entries.append((f"{kind}.meta",
                        json.dumps(input_meta[kind], ensure_ascii=False,
                                   sort_keys=True, separators=(",", ":"))))
    return entries


def _evaluate_cell(index: CorpusIndex, cell, args, metrics,
                   ha_skips: list) -> CellScores:
    dataset, model, method = cell
    notes: list[str] = []
    scores: dict[str, float | None] = dict.fromkeys(METRICS)

    if "ha" in metrics:
        result, skips = evaluate_ha(index, cell, args.rank_by, args.parallelism)
        ha_skips.extend(skips)
        if result is not None:
            scores["ha"] = result.map_score
        else:
            notes.append("ha: no instances with a human rationale")

    if "robustness" in metrics:
        by_tag = evaluate_robustness(index, cell, args.parallelism)
        if not by_tag:
            notes.append("robustness: no original/perturbed pairs")
        else:
            tag = getattr(args, "strategy", None)
            if tag is not None and tag not in by_tag:
                notes.append(f"robustness: strategy {tag!r} absent here "
                             f"(present: {', '.join(sorted(by_tag))})")
                tag = None
            elif tag is None:
                tags = sorted(by_tag)
                tag = tags[0]
                if len(tags) > 1:
                    notes.append(f"robustness: several strategies present "
                                 f"({', '.join(tags)}); using {tag!r} "
                                 f"(pass --strategy to choose)")
            if tag is not None:
                scores["robustness"] = by_tag[tag].mad_score

    if "consistency" in metrics:
        result, cnotes = evaluate_consistency(index, cell, args.distance,
                                              args.parallelism)
        notes.extend(f"consistency: {n}" for n in cnotes)
        if result is not None:
            scores["consistency"] = result.rho

    if "contrastivity" in metrics:
        result = evaluate_contrastivity(index, cell, args.mode, args.epsilon,
                                        args.log_base, args.parallelism)
        if result is not None:
            scores["contrastivity"] = result.mean_kl
        else:
            notes.append("contrastivity: no usable records")

    return CellScores(dataset, model, method,
                      ha=scores["ha"], robustness=scores["robustness"],
                      consistency=scores["consistency"],
                      contrastivity=scores["contrastivity"],
                      notes=tuple(notes))


def _run_metrics(args, metrics, weights: MetricWeights | None) -> MetricTable:
    need_rationales = "ha" in metrics
    need_attention = "consistency" in metrics
    if need_rationales and not getattr(args, "rationales", None):
        raise UsageError("--rationales is required when the ha metric is evaluated")
    if need_attention and not getattr(args, "attention", None):
        raise UsageError("--attention is required when the consistency metric is evaluated")

    index, input_meta = _scan_or_fail(args, need_rationales, need_attention)
    ha_skips: list = []
    cells = [_evaluate_cell(index, cell, args, metrics, ha_skips)
             for cell in index.cells]
    if weights is not None:
        cells = [finish_cell(c, weights) for c in cells]

    skips = tuple(sorted(
        list(index.skips_for(metrics)) + ha_skips,
        key=lambda s: (s.metric, s.dataset, s.model, s.method, s.instance_id)))
    return MetricTable.build(cells, _metadata(args, metrics, weights, input_meta), skips)


def _parse_metric_list(text: str) -> tuple[str, ...]:
    wanted = {part.strip() for part in text.split(",") if part.strip()}
    unknown = wanted - set(METRICS)
    if unknown:
        raise UsageError(f"unknown metrics: {', '.join(sorted(unknown))} "
                         f"(choose from {', '.join(METRICS)})")
    if not wanted:
        raise UsageError("--metrics selected nothing")
    return tuple(m for m in METRICS if m in wanted)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    if not (args.explanations or args.rationales or args.attention):
        raise UsageError("nothing to validate: pass --explanations, "
                         "--rationales and/or --attention")
    normalizer = _normalizer(args)
    errors: list[ValidationError] = []
    total = 0
    explanation_scan = None
    if args.explanations:
        explanation_scan = scan_saliency(args.explanations)
        errors.extend(explanation_scan.errors)
        total += len(explanation_scan.records)
    if args.rationales:
        scan = scan_rationales(args.rationales, normalizer)
        errors.extend(scan.errors)
        total += len(scan.records)
    if args.attention:
        scan = scan_attention(args.attention)
        errors.extend(scan.errors)
        total += len(scan.records)
        if explanation_scan is not None:
            errors.extend(cross_checks(explanation_scan, scan))
    if errors:
        for e in errors:
            _print_error(str(e))
        _print_error(f"{len(errors)} validation error(s)")
        return 2
    print(f"OK: {total} record(s) valid")
    return 0


def cmd_single_metric(args, metric: str) -> int:
    _emit_table(_run_metrics(args, (metric,), weights=None), args)
    return 0


def cmd_evaluate(args) -> int:
    metrics = _parse_metric_list(args.metrics)
    weights = None
    if set(metrics) == set(METRICS):
        try:
            weights = MetricWeights.parse(args.weights) if args.weights else DEFAULT_WEIGHTS
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif args.weights:
        raise UsageError("--weights only applies when all four metrics run")
    _emit_table(_run_metrics(args, metrics, weights), args)
    return 0


def cmd_perturb(args) -> int:
    scan = scan_saliency(args.explanations)
    if scan.errors:
        for e in scan.errors:
            _print_error(str(e))
        return 2
    lexicon = load_lexicon(args.lexicon) if args.lexicon else {}
    if args.strategy == "synonym_replace" and not lexicon:
        raise UsageError("synonym_replace needs --lexicon")
    spec = PerturbationSpec(strategy=args.strategy, k=args.k, rate=args.rate,
                            seed=args.seed, mask_token=args.mask_token,
                            lexicon=lexicon)
    entries = generate_perturbations(scan.records, spec, _normalizer(args))
    write_perturbed_inputs(entries, args.out,
                           meta={"strategy": args.strategy, "seed": args.seed})
    print(f"wrote {len(entries)} perturbed input(s) to {args.out}")
    return 0


def cmd_synth(args) -> int:
    config = SynthConfig(kind=args.kind, seed=args.seed,
                         n_instances=args.n_instances,
                         tokens_per_instance=args.tokens_per_instance,
                         swap_rate=args.swap_rate, noise_sigma=args.noise_sigma,
                         coupling_noise=args.coupling_noise, antitone=args.antitone)
    paths = write_synth_corpus(config, args.out)
    for role in sorted(paths):
        print(f"{role}: {paths[role]}")
    return 0


def cmd_report(args) -> int:
    if args.crosscheck:
        weights = MetricWeights.parse(args.weights) if args.weights else DEFAULT_WEIGHTS
        rows = crosscheck_reference(weights, args.tolerance)
        fmt = _format_for(args)
        if fmt not in ("csv", "markdown"):
            fmt = "markdown"
        text = render_crosscheck(rows, fmt)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    with open(args.results, encoding="utf-8") as fh:
        table = table_from_results(json.load(fh))
    _emit_table(table, args)
    return 0


# ---------------------------------------------------------------------------


def _run(argv) -> int:
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(parser, subparsers, args, argv)

    if args.command == "validate":
        return cmd_validate(args)
    if args.command in METRICS:
        return cmd_single_metric(args, args.command)
    if args.command == "evaluate":
        return cmd_evaluate(args)
    if args.command == "perturb":
        return cmd_perturb(args)
    if args.command == "synth":
        return cmd_synth(args)
    if args.command == "report":
        return cmd_report(args)
    raise UsageError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        return _run(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0 if code is None else 2
    except UsageError as exc:
        _print_error(f"error: {exc}")
        return 2
    except (ValidationError, CorpusError) as exc:
        _print_error(str(exc))
        return 2
    except FileNotFoundError as exc:
        name = exc.filename or exc
        _print_error(f"error: file not found: {name}")
        return 2
    except ValueError as exc:
        _print_error(f"error: {exc}")
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        _print_error(f"internal error: {exc!r}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
