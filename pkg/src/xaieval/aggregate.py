"""Combining per-metric scores into one table and rendering reports.

The combined weighted score (CWS) folds the four metrics into one
number per (dataset, model, method) cell.  Robustness is the only
lower-is-better input, so it enters as (1 - R); a negative consistency
simply drags the sum down, it is not clamped.

Reports are rendered deterministically: the same table produces the
same bytes, whatever parallelism produced it.
"""

from __future__ import annotations

import html
import json
import math
from dataclasses import dataclass
from importlib.resources import files

from .corpus import SkipEntry

METRIC_COLUMNS = ("ha", "robustness", "consistency", "contrastivity", "cws")
REPORT_FORMATS = ("csv", "markdown", "jsonl", "html_heatmap")

WEIGHT_KEYS = ("ha", "cn", "ct", "r")
_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MetricWeights:
    """Convex weights for CWS; must sum to 1 and be non-negative."""

    ha: float = 0.25
    cn: float = 0.25
    ct: float = 0.25
    r: float = 0.25

    def __post_init__(self):
        values = [self.ha, self.cn, self.ct, self.r]
        if any(w < 0 for w in values):
            raise ValueError(f"weights must be non-negative, got {values}")
        total = math.fsum(values)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {total!r}")

    @staticmethod
    def parse(text: str) -> "MetricWeights":
        """Parse 'ha=0.25,cn=0.25,ct=0.25,r=0.25'; all four keys required."""
        parts: dict[str, float] = {}
        for chunk in text.split(","):
            key, sep, value = chunk.partition("=")
            key = key.strip()
            if not sep or key not in WEIGHT_KEYS:
                raise ValueError(f"bad weight component {chunk!r} "
                                 f"(expected ha=..,cn=..,ct=..,r=..)")
            if key in parts:
                raise ValueError(f"duplicate weight key {key!r}")
            try:
                parts[key] = float(value)
            except ValueError:
                raise ValueError(f"weight {key!r} is not a number: {value!r}") from None
        missing = [k for k in WEIGHT_KEYS if k not in parts]
        if missing:
            raise ValueError(f"missing weight keys {missing}")
        return MetricWeights(**parts)

    def as_dict(self) -> dict[str, float]:
        return {"ha": self.ha, "cn": self.cn, "ct": self.ct, "r": self.r}


DEFAULT_WEIGHTS = MetricWeights()


def combined_weighted_score(ha: float, robustness: float, consistency: float,
                            contrastivity: float,
                            weights: MetricWeights = DEFAULT_WEIGHTS) -> float:
    return (weights.ha * ha
            + weights.cn * consistency
            + weights.ct * contrastivity
            + weights.r * (1.0 - robustness))


@dataclass(frozen=True)
class CellScores:
    """One table row.  None means the metric could not be computed."""

    dataset: str
    model: str
    method: str
    ha: float | None = None
    robustness: float | None = None
    consistency: float | None = None
    contrastivity: float | None = None
    cws: float | None = None
    notes: tuple[str, ...] = ()

    @property
    def cell(self) -> tuple[str, str, str]:
        return (self.dataset, self.model, self.method)


@dataclass(frozen=True)
class MetricTable:
    cells: tuple[CellScores, ...]
    metadata: tuple[tuple[str, str], ...] = ()  # ordered key/value pairs
    skips: tuple[SkipEntry, ...] = ()

    @staticmethod
    def build(cells, metadata=(), skips=()) -> "MetricTable":
        ordered = tuple(sorted(cells, key=lambda c: c.cell))
        return MetricTable(ordered, tuple(metadata), tuple(skips))


def finish_cell(scores: CellScores, weights: MetricWeights = DEFAULT_WEIGHTS) -> CellScores:
    """Fill in the CWS column when all four inputs are present."""
    inputs = (scores.ha, scores.robustness, scores.consistency, scores.contrastivity)
    if any(v is None for v in inputs):
        missing = [name for name, v in zip(METRIC_COLUMNS, inputs) if v is None]
        note = f"cws undefined: missing {', '.join(missing)}"
        return CellScores(scores.dataset, scores.model, scores.method,
                          scores.ha, scores.robustness, scores.consistency,
                          scores.contrastivity, None, scores.notes + (note,))
    cws = combined_weighted_score(scores.ha, scores.robustness, scores.consistency,
                                  scores.contrastivity, weights)
    return CellScores(scores.dataset, scores.model, scores.method,
                      scores.ha, scores.robustness, scores.consistency,
                      scores.contrastivity, cws, scores.notes)


# ---------------------------------------------------------------------------
# rendering


def _fmt(value: float | None, places: int = 6) -> str:
    return "" if value is None else f"{value:.{places}f}"


def _render_csv(table: MetricTable) -> str:
    lines = [f"# {k}={v}" for k, v in table.metadata]
    lines.append("# robustness is lower-is-better; cws uses (1 - robustness)")
    lines.append("dataset,model,method,ha,robustness,consistency,contrastivity,cws")
    for c in table.cells:
        lines.append(",".join([c.dataset, c.model, c.method,
                               _fmt(c.ha), _fmt(c.robustness), _fmt(c.consistency),
                               _fmt(c.contrastivity), _fmt(c.cws)]))
    for c in table.cells:
        for note in c.notes:
            lines.append(f"# note: {c.dataset}/{c.model}/{c.method}: {note}")
    for s in table.skips:
        lines.append(f"# skip: {s.as_line()}")
    return "\n".join(lines) + "\n"


def _render_markdown(table: MetricTable) -> str:
    out = ["# Explanation metric report", ""]
    if table.metadata:
        out.append("## Configuration")
        out.append("")
        out.extend(f"- `{k}` = `{v}`" for k, v in table.metadata)
        out.append("")
    out.append("## Scores")
    out.append("")
    out.append("| dataset | model | method | ha | robustness (lower=better) "
               "| consistency | contrastivity | cws |")
    out.append("|---|---|---|---|---|---|---|---|")
    for c in table.cells:
        out.append("| " + " | ".join([
            c.dataset, c.model, c.method,
            _fmt(c.ha, 4), _fmt(c.robustness, 4), _fmt(c.consistency, 4),
            _fmt(c.contrastivity, 4), _fmt(c.cws, 4)]) + " |")
    out.append("")
    notes = [(c, n) for c in table.cells for n in c.notes]
    if notes:
        out.append("## Notes")
        out.append("")
        out.extend(f"- {c.dataset}/{c.model}/{c.method}: {n}" for c, n in notes)
        out.append("")
    if table.skips:
        out.append("## Skipped instances")
        out.append("")
        out.extend(f"- {s.as_line()}" for s in table.skips)
        out.append("")
    return "\n".join(out)


def _render_jsonl(table: MetricTable) -> str:
    lines = [json.dumps({"meta": dict(table.metadata)},
                        ensure_ascii=False, separators=(",", ":"))]
    for c in table.cells:
        obj = {"dataset": c.dataset, "model": c.model, "method": c.method,
               "ha": c.ha, "robustness": c.robustness, "consistency": c.consistency,
               "contrastivity": c.contrastivity, "cws": c.cws}
        if c.notes:
            obj["notes"] = list(c.notes)
        lines.append(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
    for s in table.skips:
        lines.append(json.dumps(
            {"skip": {"metric": s.metric, "dataset": s.dataset, "model": s.model,
                      "method": s.method, "instance_id": s.instance_id,
                      "reason": s.reason}},
            ensure_ascii=False, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def _heat_color(value: float | None, lo: float, hi: float, invert: bool = False) -> str:
    if value is None:
        return "#eeeeee"
    span = hi - lo
    t = 0.5 if span == 0 else (value - lo) / span
    if invert:
        t = 1.0 - t
    # white -> green ramp
    level = int(round(255 - 120 * t))
    return f"#{level:02x}ff{level:02x}"


def _render_html(table: MetricTable) -> str:
    cols = METRIC_COLUMNS
    ranges = {}
    for name in cols:
        values = [getattr(c, name) for c in table.cells if getattr(c, name) is not None]
        ranges[name] = (min(values), max(values)) if values else (0.0, 0.0)

    out = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\">",
           "<title>Explanation metric report</title>",
           "<style>table{border-collapse:collapse}td,th{border:1px solid #999;"
           "padding:4px 8px;font-family:monospace}</style>",
           "</head><body>", "<h1>Explanation metric report</h1>"]
    if table.metadata:
        out.append("<dl>")
        for k, v in table.metadata:
            out.append(f"<dt>{html.escape(str(k))}</dt><dd>{html.escape(str(v))}</dd>")
        out.append("</dl>")
    out.append("<table>")
    out.append("<tr><th>dataset</th><th>model</th><th>method</th>"
               + "".join(f"<th>{c}</th>" for c in cols) + "</tr>")
    for c in table.cells:
        row = [f"<td>{html.escape(c.dataset)}</td>",
               f"<td>{html.escape(c.model)}</td>",
               f"<td>{html.escape(c.method)}</td>"]
        for name in cols:
            value = getattr(c, name)
            lo, hi = ranges[name]
            color = _heat_color(value, lo, hi, invert=(name == "robustness"))
            row.append(f"<td style=\"background:{color}\">{_fmt(value, 4)}</td>")
        out.append("<tr>" + "".join(row) + "</tr>")
    out.append("</table>")
    notes = [(c, n) for c in table.cells for n in c.notes]
    if notes:
        out.append("<h2>Notes</h2><ul>")
        out.extend(f"<li>{html.escape(f'{c.dataset}/{c.model}/{c.method}: {n}')}</li>"
                   for c, n in notes)
        out.append("</ul>")
    if table.skips:
        out.append("<h2>Skipped instances</h2><ul>")
        out.extend(f"<li>{html.escape(s.as_line())}</li>" for s in table.skips)
        out.append("</ul>")
    out.append("</body></html>")
    return "\n".join(out) + "\n"


def render_report(table: MetricTable, fmt: str = "markdown") -> str:
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}, got {fmt!r}")
    renderer = {"csv": _render_csv, "markdown": _render_markdown,
                "jsonl": _render_jsonl, "html_heatmap": _render_html}[fmt]
    return renderer(table)


def render_token_heatmap(tokens, scores) -> str:
    """Inline-HTML saliency view of one explanation: red over, blue under."""
    if len(tokens) != len(scores):
        raise ValueError("tokens and scores length mismatch")
    peak = max((abs(s) for s in scores), default=0.0)
    spans = []
    for tok, s in zip(tokens, scores):
        alpha = 0.0 if peak == 0 else abs(s) / peak
        color = "255,80,80" if s >= 0 else "80,80,255"
        spans.append(f"<span style=\"background:rgba({color},{alpha:.3f})\">"
                     f"{html.escape(tok)}</span>")
    return " ".join(spans)


# ---------------------------------------------------------------------------
# results round-trip (evaluate --save-results / report --results)


def table_to_results(table: MetricTable) -> dict:
    return {
        "metadata": [[k, v] for k, v in table.metadata],
        "cells": [{"dataset": c.dataset, "model": c.model, "method": c.method,
                   "ha": c.ha, "robustness": c.robustness,
                   "consistency": c.consistency, "contrastivity": c.contrastivity,
                   "cws": c.cws, "notes": list(c.notes)}
                  for c in table.cells],
        "skips": [{"metric": s.metric, "dataset": s.dataset, "model": s.model,
                   "method": s.method, "instance_id": s.instance_id,
                   "reason": s.reason} for s in table.skips],
    }


def table_from_results(obj: dict) -> MetricTable:
    try:
        cells = tuple(CellScores(
            dataset=c["dataset"], model=c["model"], method=c["method"],
            ha=c.get("ha"), robustness=c.get("robustness"),
            consistency=c.get("consistency"), contrastivity=c.get("contrastivity"),
            cws=c.get("cws"), notes=tuple(c.get("notes", ())))
            for c in obj["cells"])
        metadata = tuple((k, v) for k, v in obj.get("metadata", []))
        skips = tuple(SkipEntry(**s) for s in obj.get("skips", []))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed results file: {exc}") from exc
    return MetricTable(cells, metadata, skips)


# ---------------------------------------------------------------------------
# reference benchmark cross-check


@dataclass(frozen=True)
class CrossCheckRow:
    dataset: str
    model: str
    method: str
    recomputed: float
    printed: float
    delta: float
    reconciled: bool
    note: str = ""


def load_reference() -> dict:
    """The bundled reference benchmark (published per-cell scores)."""
    text = files("xaieval.data").joinpath("benchmark_scores.json").read_text("utf-8")
    return json.loads(text)


def crosscheck_reference(weights: MetricWeights = DEFAULT_WEIGHTS,
                         tolerance: float = 0.0005) -> list[CrossCheckRow]:
    """Recompute every reference CWS cell and compare to its printed value.

    Cells with a corrected metric reading are recomputed from the
    corrected value; the note records both readings' deltas so nothing
    is silently smoothed over.
    """
    reference = load_reference()
    rows = []
    for entry in reference["rows"]:
        consistency = entry["consistency"]
        note = ""
        corrected = entry.get("consistency_corrected")
        if corrected is not None:
            from_printed = combined_weighted_score(
                entry["ha"], entry["robustness"], consistency,
                entry["contrastivity"], weights)
            consistency = corrected
            note = (f"consistency read as {corrected} (printed "
                    f"{entry['consistency']}; printed reading gives "
                    f"cws {from_printed:.4f})")
        recomputed = combined_weighted_score(
            entry["ha"], entry["robustness"], consistency,
            entry["contrastivity"], weights)
        printed = entry["cws_printed"]
        delta = recomputed - printed
        rows.append(CrossCheckRow(
            dataset=entry["dataset"], model=entry["model"], method=entry["method"],
            recomputed=recomputed, printed=printed, delta=delta,
            reconciled=abs(delta) <= tolerance, note=note))
    return rows


def render_crosscheck(rows, fmt: str = "markdown") -> str:
    """Discrepancy report: one line per cell, unreconciled cells flagged."""
    if fmt == "csv":
        lines = ["dataset,model,method,recomputed,printed,delta,reconciled"]
        for r in rows:
            lines.append(",".join([
                r.dataset, r.model, r.method, f"{r.recomputed:.6f}",
                f"{r.printed:.6f}", f"{r.delta:+.6f}",
                "yes" if r.reconciled else "NO"]))
        for r in rows:
            if r.note:
                lines.append(f"# note: {r.dataset}/{r.model}/{r.method}: {r.note}")
        return "\n".join(lines) + "\n"
    if fmt != "markdown":
        raise ValueError(f"crosscheck format must be csv or markdown, got {fmt!r}")
    bad = [r for r in rows if not r.reconciled]
    out = ["# Reference benchmark cross-check", "",
           f"{len(rows) - len(bad)} of {len(rows)} cells reconcile with the "
           f"printed combined scores.", "",
           "| dataset | model | method | recomputed | printed | delta | ok |",
           "|---|---|---|---|---|---|---|"]
    for r in rows:
        out.append(f"| {r.dataset} | {r.model} | {r.method} | {r.recomputed:.4f} "
                   f"| {r.printed:.4f} | {r.delta:+.4f} "
                   f"| {'yes' if r.reconciled else '**NO**'} |")
    notes = [r for r in rows if r.note]
    if notes:
        out.append("")
        out.append("## Notes")
        out.append("")
        out.extend(f"- {r.dataset}/{r.model}/{r.method}: {r.note}" for r in notes)
    out.append("")
    return "\n".join(out)
