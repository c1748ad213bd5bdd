"""Interchange corpus: record types, JSONL parsing, validation, indexing.

Three line-oriented JSONL file kinds move between explanation producers
and the metric engine: token-level saliency explanations, human
rationale rankings, and per-layer (or pre-averaged) attention.  Parsers
are strict: a record either matches the schema exactly or the offending
file and line number are reported.  Writers emit a canonical byte form
so that write(parse(f)) == f for files we produced ourselves.
"""

from __future__ import annotations

import json
import logging
import math
import string
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Callable, Mapping

logger = logging.getLogger(__name__)

# (dataset, model, method)
Cell = tuple[str, str, str]


class ValidationError(Exception):
    """A record failed schema validation.  Rendered as ``path:line: message``."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.message = message


class CorpusError(Exception):
    """Cross-record inconsistency found while indexing already-parsed records."""


_VARIANT_KINDS = ("original", "perturbed", "seed")


@dataclass(frozen=True)
class Variant:
    """Which run of the explainer a saliency record came from.

    Wire form is a single string: ``original``, ``perturbed:<tag>`` where
    the tag names the perturbation strategy, or ``seed:<n>`` for a
    retrained-model run.
    """

    kind: str
    tag: str = ""
    seed: int = 0

    @staticmethod
    def original() -> "Variant":
        return Variant("original")

    @staticmethod
    def perturbed(tag: str) -> "Variant":
        if not tag:
            raise ValueError("perturbation tag must be non-empty")
        return Variant("perturbed", tag=tag)

    @staticmethod
    def seeded(seed: int) -> "Variant":
        return Variant("seed", seed=seed)

    @staticmethod
    def parse(text: str) -> "Variant":
        if text == "original":
            return Variant.original()
        kind, sep, rest = text.partition(":")
        if sep and kind == "perturbed" and rest:
            return Variant.perturbed(rest)
        if sep and kind == "seed":
            try:
                return Variant.seeded(int(rest))
            except ValueError:
                pass
        raise ValueError(f"unrecognized variant {text!r}")

    @property
    def wire(self) -> str:
        if self.kind == "original":
            return "original"
        if self.kind == "perturbed":
            return f"perturbed:{self.tag}"
        return f"seed:{self.seed}"

    @property
    def sort_key(self) -> tuple[int, str, int]:
        return (_VARIANT_KINDS.index(self.kind), self.tag, self.seed)


@dataclass(frozen=True)
class SaliencyRecord:
    """One explanation: a score per token for one (instance, target label)."""

    instance_id: str
    dataset: str
    model: str
    method: str
    variant: Variant
    predicted_label: str
    target_label: str
    tokens: tuple[str, ...]
    scores: tuple[float, ...]

    @property
    def cell(self) -> Cell:
        return (self.dataset, self.model, self.method)

    @property
    def key(self) -> tuple:
        return (self.dataset, self.model, self.method, self.instance_id,
                self.variant.wire, self.target_label)


@dataclass(frozen=True)
class HumanRationale:
    """Annotator-ranked tokens for one instance, most important first."""

    instance_id: str
    dataset: str
    ranked_tokens: tuple[str, ...]

    @property
    def key(self) -> tuple[str, str]:
        return (self.dataset, self.instance_id)


@dataclass(frozen=True)
class AttentionRecord:
    """Per-token attention mass for one (instance, model, seed).

    Carries either ``layers`` (one row of length T per layer) or a
    pre-averaged ``avg_attention`` row, never both.
    """

    instance_id: str
    model: str
    seed: int
    layers: tuple[tuple[float, ...], ...] | None = None
    avg_attention: tuple[float, ...] | None = None

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.instance_id, self.model, self.seed)

    @property
    def length(self) -> int:
        if self.avg_attention is not None:
            return len(self.avg_attention)
        assert self.layers is not None
        return len(self.layers[0])


_PUNCT = string.punctuation + "¡¿‘’“”–—…«»"


@dataclass(frozen=True)
class TokenNormalizer:
    """Canonical token form used when matching tokens across files.

    normalize() is idempotent.  Stripping that would empty a token (an
    all-punctuation token like ``!!``) is skipped so nothing maps to "".
    """

    lowercase: bool = True
    strip_outer_punctuation: bool = True

    def normalize(self, token: str) -> str:
        out = token.lower() if self.lowercase else token
        if self.strip_outer_punctuation:
            stripped = out.strip(_PUNCT)
            if stripped:
                out = stripped
        return out

    def normalize_all(self, tokens) -> tuple[str, ...]:
        return tuple(self.normalize(t) for t in tokens)


# ---------------------------------------------------------------------------
# field checks


def _fail(path: str, line: int, message: str):
    raise ValidationError(path, line, message)


def _require(obj: dict, key: str, path: str, line: int) -> Any:
    if key not in obj:
        _fail(path, line, f"missing field '{key}'")
    return obj[key]


def _require_str(obj: dict, key: str, path: str, line: int) -> str:
    value = _require(obj, key, path, line)
    if not isinstance(value, str):
        _fail(path, line, f"field '{key}' must be a string")
    if not value:
        _fail(path, line, f"field '{key}' must be non-empty")
    return value


def _require_int(obj: dict, key: str, path: str, line: int) -> int:
    value = _require(obj, key, path, line)
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, line, f"field '{key}' must be an integer")
    return value


def _check_row(values: Any, what: str, path: str, line: int,
               nonneg: bool = False) -> tuple[float, ...]:
    if not isinstance(values, list) or not values:
        _fail(path, line, f"{what} must be a non-empty array of numbers")
    out = []
    for i, x in enumerate(values):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            _fail(path, line, f"{what}[{i}] is not a number")
        if not math.isfinite(x):
            _fail(path, line, f"{what}[{i}] is non-finite")
        if nonneg and x < 0:
            _fail(path, line, f"{what}[{i}] is negative")
        out.append(float(x))
    return tuple(out)


def _check_tokens(values: Any, what: str, path: str, line: int) -> tuple[str, ...]:
    if not isinstance(values, list) or not values:
        _fail(path, line, f"{what} must be a non-empty array of strings")
    for i, t in enumerate(values):
        if not isinstance(t, str) or not t:
            _fail(path, line, f"{what}[{i}] must be a non-empty string")
    return tuple(values)


def _check_no_extras(obj: dict, allowed: frozenset, path: str, line: int):
    extras = sorted(set(obj) - allowed)
    if extras:
        _fail(path, line, f"unexpected field '{extras[0]}'")


_SALIENCY_FIELDS = frozenset({"instance_id", "dataset", "model", "method",
                              "variant", "predicted_label", "target_label",
                              "tokens", "scores"})
_RATIONALE_FIELDS = frozenset({"instance_id", "dataset", "ranked_tokens"})
_ATTENTION_FIELDS = frozenset({"instance_id", "model", "seed",
                               "layers", "avg_attention"})


def _saliency_from_obj(obj: dict, path: str, line: int) -> SaliencyRecord:
    _check_no_extras(obj, _SALIENCY_FIELDS, path, line)
    variant_text = _require_str(obj, "variant", path, line)
    try:
        variant = Variant.parse(variant_text)
    except ValueError as exc:
        _fail(path, line, str(exc))
    tokens = _check_tokens(_require(obj, "tokens", path, line), "tokens", path, line)
    scores = _check_row(_require(obj, "scores", path, line), "scores", path, line)
    if len(tokens) != len(scores):
        _fail(path, line,
              f"tokens and scores length mismatch ({len(tokens)} vs {len(scores)})")
    return SaliencyRecord(
        instance_id=_require_str(obj, "instance_id", path, line),
        dataset=_require_str(obj, "dataset", path, line),
        model=_require_str(obj, "model", path, line),
        method=_require_str(obj, "method", path, line),
        variant=variant,
        predicted_label=_require_str(obj, "predicted_label", path, line),
        target_label=_require_str(obj, "target_label", path, line),
        tokens=tokens,
        scores=scores,
    )


def _rationale_builder(normalizer: TokenNormalizer) -> Callable:
    def build(obj: dict, path: str, line: int) -> HumanRationale:
        _check_no_extras(obj, _RATIONALE_FIELDS, path, line)
        ranked = _check_tokens(_require(obj, "ranked_tokens", path, line),
                               "ranked_tokens", path, line)
        normalized = normalizer.normalize_all(ranked)
        if len(set(normalized)) != len(normalized):
            dupe = next(t for i, t in enumerate(normalized) if t in normalized[:i])
            _fail(path, line, f"ranked_tokens not unique after normalization ({dupe!r})")
        return HumanRationale(
            instance_id=_require_str(obj, "instance_id", path, line),
            dataset=_require_str(obj, "dataset", path, line),
            ranked_tokens=ranked,
        )
    return build


def _attention_from_obj(obj: dict, path: str, line: int) -> AttentionRecord:
    _check_no_extras(obj, _ATTENTION_FIELDS, path, line)
    has_layers = "layers" in obj
    has_avg = "avg_attention" in obj
    if has_layers == has_avg:
        _fail(path, line, "exactly one of 'layers' and 'avg_attention' is required")
    layers = None
    avg = None
    if has_layers:
        raw = obj["layers"]
        if not isinstance(raw, list) or not raw:
            _fail(path, line, "layers must be a non-empty array of rows")
        rows = [_check_row(r, f"layers[{i}]", path, line, nonneg=True)
                for i, r in enumerate(raw)]
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            _fail(path, line, f"layers rows have unequal lengths {sorted(widths)}")
        layers = tuple(rows)
    else:
        avg = _check_row(obj["avg_attention"], "avg_attention", path, line, nonneg=True)
    return AttentionRecord(
        instance_id=_require_str(obj, "instance_id", path, line),
        model=_require_str(obj, "model", path, line),
        seed=_require_int(obj, "seed", path, line),
        layers=layers,
        avg_attention=avg,
    )


# ---------------------------------------------------------------------------
# scanning and parsing


@dataclass
class ScanResult:
    """Everything one validation pass over a JSONL file produced."""

    path: str
    records: list
    errors: list[ValidationError]
    meta: dict
    lines: list[int]  # source line of each record, parallel to records


def _scan(path, build: Callable, key_of: Callable) -> ScanResult:
    """Scan a JSONL file, collecting records and every diagnostic.

    A first line of the form ``{"meta": {...}}`` is not a record; its
    payload is surfaced so reports can carry producer metadata through.
    """
    records: list = []
    errors: list[ValidationError] = []
    lines: list[int] = []
    seen: dict = {}
    meta: dict = {}
    path = str(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.rstrip("\n")
            if not text.strip():
                errors.append(ValidationError(path, line_no, "blank line"))
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                errors.append(ValidationError(path, line_no, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict):
                errors.append(ValidationError(path, line_no, "record must be a JSON object"))
                continue
            if set(obj) == {"meta"}:
                if line_no == 1 and isinstance(obj["meta"], dict):
                    meta = obj["meta"]
                else:
                    errors.append(ValidationError(
                        path, line_no, "meta line only allowed as line 1 with an object value"))
                continue
            try:
                rec = build(obj, path, line_no)
            except ValidationError as exc:
                errors.append(exc)
                continue
            k = key_of(rec)
            if k in seen:
                errors.append(ValidationError(
                    path, line_no,
                    f"duplicate record key {k!r} (first seen at line {seen[k]})"))
                continue
            seen[k] = line_no
            records.append(rec)
            lines.append(line_no)
    return ScanResult(path, records, errors, meta, lines)


def scan_saliency(path) -> ScanResult:
    return _scan(path, _saliency_from_obj, lambda r: r.key)


def scan_rationales(path, normalizer: TokenNormalizer | None = None) -> ScanResult:
    normalizer = normalizer or TokenNormalizer()
    return _scan(path, _rationale_builder(normalizer), lambda r: r.key)


def scan_attention(path) -> ScanResult:
    return _scan(path, _attention_from_obj, lambda r: r.key)


def _parse(scan_result: ScanResult) -> list:
    if scan_result.errors:
        raise scan_result.errors[0]
    return scan_result.records


def parse_saliency(path) -> list[SaliencyRecord]:
    """Parse a saliency JSONL file, raising on the first violation."""
    return _parse(scan_saliency(path))


def parse_rationales(path, normalizer: TokenNormalizer | None = None) -> list[HumanRationale]:
    """Parse a human-rationale JSONL file, raising on the first violation."""
    return _parse(scan_rationales(path, normalizer))


def parse_attention(path) -> list[AttentionRecord]:
    """Parse an attention JSONL file, raising on the first violation."""
    return _parse(scan_attention(path))


# ---------------------------------------------------------------------------
# canonical writers


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def saliency_to_obj(rec: SaliencyRecord) -> dict:
    return {
        "instance_id": rec.instance_id,
        "dataset": rec.dataset,
        "model": rec.model,
        "method": rec.method,
        "variant": rec.variant.wire,
        "predicted_label": rec.predicted_label,
        "target_label": rec.target_label,
        "tokens": list(rec.tokens),
        "scores": list(rec.scores),
    }


def rationale_to_obj(rec: HumanRationale) -> dict:
    return {
        "instance_id": rec.instance_id,
        "dataset": rec.dataset,
        "ranked_tokens": list(rec.ranked_tokens),
    }


def attention_to_obj(rec: AttentionRecord) -> dict:
    obj: dict = {"instance_id": rec.instance_id, "model": rec.model, "seed": rec.seed}
    if rec.layers is not None:
        obj["layers"] = [list(row) for row in rec.layers]
    else:
        obj["avg_attention"] = list(rec.avg_attention or ())
    return obj


def write_jsonl(objs, path, meta: dict | None = None):
    """Write dicts as canonical JSONL (UTF-8, compact, one object per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(_dump_line({"meta": meta}) + "\n")
        for obj in objs:
            fh.write(_dump_line(obj) + "\n")


def write_saliency(records, path, meta: dict | None = None):
    write_jsonl((saliency_to_obj(r) for r in records), path, meta)


def write_rationales(records, path, meta: dict | None = None):
    write_jsonl((rationale_to_obj(r) for r in records), path, meta)


def write_attention(records, path, meta: dict | None = None):
    write_jsonl((attention_to_obj(r) for r in records), path, meta)


# ---------------------------------------------------------------------------
# index


@dataclass(frozen=True)
class RobustnessPair:
    original: SaliencyRecord
    perturbed: SaliencyRecord

    @property
    def tag(self) -> str:
        return self.perturbed.variant.tag


@dataclass(frozen=True)
class SeedPair:
    seed_a: int
    seed_b: int
    explanation_a: SaliencyRecord
    explanation_b: SaliencyRecord
    attention_a: AttentionRecord
    attention_b: AttentionRecord


@dataclass(frozen=True)
class ContrastPair:
    predicted: SaliencyRecord
    contrast: SaliencyRecord


@dataclass(frozen=True)
class SkipEntry:
    """An instance left out of one metric, with the reason kept on record."""

    metric: str
    dataset: str
    model: str
    method: str
    instance_id: str
    reason: str

    def as_line(self) -> str:
        return (f"{self.metric}: {self.dataset}/{self.model}/{self.method} "
                f"instance {self.instance_id}: {self.reason}")


def _saliency_sort_key(rec: SaliencyRecord):
    return (rec.dataset, rec.model, rec.method, rec.instance_id,
            rec.variant.sort_key, rec.target_label)


@dataclass(frozen=True)
class CorpusIndex:
    """Immutable lookup structure over one parsed corpus.

    Building is deterministic: the same records in any input order
    produce an equal index, including skip-entry order.
    """

    normalizer: TokenNormalizer
    records: tuple[SaliencyRecord, ...]
    rationales: Mapping[tuple[str, str], HumanRationale]
    attention: Mapping[tuple[str, str, int], AttentionRecord]
    cells: tuple[Cell, ...]
    predicted_by_cell: Mapping[Cell, tuple[SaliencyRecord, ...]]
    robustness_by_cell: Mapping[Cell, tuple[RobustnessPair, ...]]
    seed_pairs_by_cell: Mapping[Cell, tuple[SeedPair, ...]]
    contrast_by_cell: Mapping[Cell, tuple[ContrastPair, ...]]
    skips: tuple[SkipEntry, ...]

    def rationale_for(self, dataset: str, instance_id: str) -> HumanRationale | None:
        return self.rationales.get((dataset, instance_id))

    def attention_for(self, instance_id: str, model: str, seed: int) -> AttentionRecord | None:
        return self.attention.get((instance_id, model, seed))

    def predicted_for(self, cell: Cell) -> tuple[SaliencyRecord, ...]:
        return self.predicted_by_cell.get(cell, ())

    def robustness_pairs_for(self, cell: Cell) -> tuple[RobustnessPair, ...]:
        return self.robustness_by_cell.get(cell, ())

    def robustness_tags_for(self, cell: Cell) -> tuple[str, ...]:
        return tuple(sorted({p.tag for p in self.robustness_pairs_for(cell)}))

    def seed_pairs_for(self, cell: Cell) -> tuple[SeedPair, ...]:
        return self.seed_pairs_by_cell.get(cell, ())

    def contrast_pairs_for(self, cell: Cell) -> tuple[ContrastPair, ...]:
        return self.contrast_by_cell.get(cell, ())

    def skips_for(self, metrics) -> tuple[SkipEntry, ...]:
        wanted = set(metrics)
        return tuple(s for s in self.skips if s.metric in wanted)


def build_index(saliency, rationales, attention,
                normalizer: TokenNormalizer | None = None) -> CorpusIndex:
    """Index parsed records into per-cell pairings for the four metrics.

    Instances lacking a required partner become skip entries rather than
    errors.  Genuine inconsistencies (duplicate keys across inputs,
    attention length not matching its paired explanation, conflicting
    predicted labels for one instance) raise CorpusError.
    """
    normalizer = normalizer or TokenNormalizer()

    records = tuple(sorted(saliency, key=_saliency_sort_key))
    keys = [r.key for r in records]
    if len(set(keys)) != len(keys):
        dupe = next(k for i, k in enumerate(keys) if k in keys[:i])
        raise CorpusError(f"duplicate saliency record key {dupe!r}")

    rationale_map: dict[tuple[str, str], HumanRationale] = {}
    for r in sorted(rationales, key=lambda r: r.key):
        if r.key in rationale_map:
            raise CorpusError(f"duplicate rationale key {r.key!r}")
        rationale_map[r.key] = r

    attention_map: dict[tuple[str, str, int], AttentionRecord] = {}
    for a in sorted(attention, key=lambda a: a.key):
        if a.key in attention_map:
            raise CorpusError(f"duplicate attention key {a.key!r}")
        attention_map[a.key] = a

    by_cell: dict[Cell, dict[str, list[SaliencyRecord]]] = {}
    for rec in records:
        by_cell.setdefault(rec.cell, {}).setdefault(rec.instance_id, []).append(rec)

    predicted_by_cell: dict[Cell, tuple[SaliencyRecord, ...]] = {}
    robustness_by_cell: dict[Cell, tuple[RobustnessPair, ...]] = {}
    seed_pairs_by_cell: dict[Cell, tuple[SeedPair, ...]] = {}
    contrast_by_cell: dict[Cell, tuple[ContrastPair, ...]] = {}
    skips: list[SkipEntry] = []

    for cell in sorted(by_cell):
        dataset, model, method = cell
        predicted: list[SaliencyRecord] = []
        rpairs: list[RobustnessPair] = []
        spairs: list[SeedPair] = []
        cpairs: list[ContrastPair] = []

        for instance_id in sorted(by_cell[cell]):
            recs = by_cell[cell][instance_id]

            def skip(metric: str, reason: str):
                skips.append(SkipEntry(metric, dataset, model, method,
                                       instance_id, reason))

            originals = {r.target_label: r for r in recs if r.variant.kind == "original"}
            predicted_recs = [r for r in originals.values()
                              if r.target_label == r.predicted_label]
            if len(predicted_recs) > 1:
                labels = sorted(r.predicted_label for r in predicted_recs)
                raise CorpusError(
                    f"instance {instance_id!r} in cell {cell!r} claims "
                    f"conflicting predicted labels {labels}")
            predicted_rec = predicted_recs[0] if predicted_recs else None
            if predicted_rec is not None:
                predicted.append(predicted_rec)

            # robustness: perturbed variants pair with the predicted-class original
            perturbed = sorted((r for r in recs if r.variant.kind == "perturbed"),
                               key=_saliency_sort_key)
            paired_any = False
            for p in perturbed:
                if predicted_rec is None or p.target_label != predicted_rec.target_label:
                    skip("robustness",
                         f"perturbed variant '{p.variant.tag}' has no "
                         f"predicted-class original partner")
                    continue
                rpairs.append(RobustnessPair(predicted_rec, p))
                paired_any = True
            if predicted_rec is not None and not paired_any:
                skip("robustness", "no perturbed partner")

            # consistency: all unordered pairs of seed variants, attention required
            seed_recs = {r.variant.seed: r for r in recs
                         if r.variant.kind == "seed"
                         and r.target_label == r.predicted_label}
            usable = []
            for seed in sorted(seed_recs):
                att = attention_map.get((instance_id, model, seed))
                if att is None:
                    skip("consistency", f"missing attention for seed {seed}")
                    continue
                rec = seed_recs[seed]
                if att.length != len(rec.tokens):
                    raise CorpusError(
                        f"attention length {att.length} != token count "
                        f"{len(rec.tokens)} for instance {instance_id!r}, "
                        f"model {model!r}, seed {seed}")
                usable.append((seed, rec, att))
            if len(usable) == 1 or (not usable and seed_recs):
                skip("consistency", "fewer than two usable seed variants")
            for i in range(len(usable)):
                for j in range(i + 1, len(usable)):
                    sa, ra, aa = usable[i]
                    sb, rb, ab = usable[j]
                    spairs.append(SeedPair(sa, sb, ra, rb, aa, ab))

            # contrastivity: predicted-class original vs smallest other label
            contrast_candidates = sorted(label for label, r in originals.items()
                                         if label != r.predicted_label)
            if predicted_rec is None:
                if contrast_candidates:
                    skip("contrastivity", "no predicted-class explanation")
            elif not contrast_candidates:
                skip("contrastivity", "no contrast-class explanation")
            else:
                cpairs.append(ContrastPair(predicted_rec,
                                           originals[contrast_candidates[0]]))

        predicted_by_cell[cell] = tuple(predicted)
        robustness_by_cell[cell] = tuple(rpairs)
        seed_pairs_by_cell[cell] = tuple(spairs)
        contrast_by_cell[cell] = tuple(cpairs)

    return CorpusIndex(
        normalizer=normalizer,
        records=records,
        rationales=MappingProxyType(rationale_map),
        attention=MappingProxyType(attention_map),
        cells=tuple(sorted(by_cell)),
        predicted_by_cell=MappingProxyType(predicted_by_cell),
        robustness_by_cell=MappingProxyType(robustness_by_cell),
        seed_pairs_by_cell=MappingProxyType(seed_pairs_by_cell),
        contrast_by_cell=MappingProxyType(contrast_by_cell),
        skips=tuple(skips),
    )


def cross_checks(saliency_scan: ScanResult, attention_scan: ScanResult) -> list[ValidationError]:
    """File-level consistency checks that need more than one file.

    Each returned diagnostic points at the attention line whose length
    disagrees with its paired seed-variant explanation.
    """
    by_key: dict[tuple[str, str, int], int] = {}
    for rec in saliency_scan.records:
        if rec.variant.kind == "seed":
            by_key[(rec.instance_id, rec.model, rec.variant.seed)] = len(rec.tokens)

    errors: list[ValidationError] = []
    for att, line_no in zip(attention_scan.records, attention_scan.lines):
        want = by_key.get(att.key)
        if want is not None and att.length != want:
            errors.append(ValidationError(
                attention_scan.path, line_no,
                f"attention length {att.length} does not match token count "
                f"{want} of seed-variant explanation for instance "
                f"{att.instance_id!r}"))
    return errors
