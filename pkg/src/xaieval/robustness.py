"""Saliency stability under small input perturbations.

A perturbed input is re-explained and its scores compared to the
original, token by token.  Tokens that survived the perturbation are
matched greedily (first unconsumed occurrence, normalized form); a
vanished token contributes its full original score as difference.  The
per-instance average difference (AD) is normalized by the original
token count, so deletions are penalized and per-strategy results stay
comparable.  Lower is better.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from ._util import fsum_mean, parallel_map
from .corpus import (Cell, CorpusIndex, RobustnessPair, SaliencyRecord,
                     SkipEntry, TokenNormalizer, write_jsonl)
from .ranking import rank_order

logger = logging.getLogger(__name__)

STRATEGIES = ("mask_top_k", "remove_bottom_k", "synonym_replace")

DEFAULT_MASK_TOKEN = "[MASK]"


@dataclass(frozen=True)
class PerturbationSpec:
    """How to derive perturbed inputs from original explanations."""

    strategy: str
    k: int = 1                    # mask_top_k / remove_bottom_k
    rate: float = 0.15            # synonym_replace: fraction of tokens
    seed: int = 0
    mask_token: str = DEFAULT_MASK_TOKEN
    lexicon: dict = field(default_factory=dict)  # normalized token -> synonym

    def validate(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.strategy in ("mask_top_k", "remove_bottom_k") and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.strategy == "synonym_replace" and not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")


@dataclass(frozen=True)
class PerturbedInput:
    instance_id: str
    strategy: str
    seed: int
    tokens: tuple[str, ...]

    def to_obj(self) -> dict:
        return {"instance_id": self.instance_id, "strategy": self.strategy,
                "seed": self.seed, "tokens": list(self.tokens)}


@dataclass(frozen=True)
class RobustnessResult:
    strategy: str
    per_instance: tuple[tuple[str, float], ...]  # (instance_id, AD), sorted
    mad_score: float
    n_evaluated: int


def align_tokens(original_tokens, perturbed_tokens,
                 normalizer: TokenNormalizer | None = None) -> tuple:
    """Match each original token to the first unconsumed perturbed token.

    Returns one entry per original position: the index of its match in
    the perturbed sequence, or None if the token did not survive.
    Matching is multiset-aware, so repeated tokens consume one
    occurrence each.
    """
    normalizer = normalizer or TokenNormalizer()
    available: dict[str, list[int]] = {}
    for j, tok in enumerate(perturbed_tokens):
        available.setdefault(normalizer.normalize(tok), []).append(j)

    alignment = []
    for tok in original_tokens:
        slots = available.get(normalizer.normalize(tok))
        alignment.append(slots.pop(0) if slots else None)
    return tuple(alignment)


def element_diff(original_scores, perturbed_scores, alignment) -> tuple[float, ...]:
    """Per-original-token absolute score difference under an alignment."""
    if len(alignment) != len(original_scores):
        raise ValueError("alignment length must match original score count")
    diffs = []
    for score, j in zip(original_scores, alignment):
        other = perturbed_scores[j] if j is not None else 0.0
        diffs.append(abs(score - other))
    return tuple(diffs)


def average_difference(diffs) -> float:
    """AD: mean over the original token count."""
    return fsum_mean(list(diffs))


def mean_average_difference(ads) -> float:
    return fsum_mean(list(ads))


def pair_ad(pair: RobustnessPair, normalizer: TokenNormalizer | None = None) -> float:
    alignment = align_tokens(pair.original.tokens, pair.perturbed.tokens, normalizer)
    diffs = element_diff(pair.original.scores, pair.perturbed.scores, alignment)
    return average_difference(diffs)


def evaluate_robustness(index: CorpusIndex, cell: Cell,
                        parallelism: int = 1) -> dict[str, RobustnessResult]:
    """MAD per perturbation strategy present in the cell, never pooled."""
    by_tag: dict[str, list[RobustnessPair]] = {}
    for pair in index.robustness_pairs_for(cell):
        by_tag.setdefault(pair.tag, []).append(pair)

    results: dict[str, RobustnessResult] = {}
    for tag in sorted(by_tag):
        pairs = by_tag[tag]
        ads = parallel_map(lambda p: pair_ad(p, index.normalizer), pairs, parallelism)
        per_instance = tuple(sorted((p.original.instance_id, ad)
                                    for p, ad in zip(pairs, ads)))
        results[tag] = RobustnessResult(
            strategy=tag,
            per_instance=per_instance,
            mad_score=mean_average_difference([ad for _, ad in per_instance]),
            n_evaluated=len(per_instance),
        )
    return results


# ---------------------------------------------------------------------------
# perturbed-input generation (consumed by explanation producers)


def _perturb_one(record: SaliencyRecord, spec: PerturbationSpec,
                 normalizer: TokenNormalizer) -> tuple[str, ...]:
    tokens = record.tokens
    n = len(tokens)
    if spec.strategy in ("mask_top_k", "remove_bottom_k") and spec.k >= n:
        raise ValueError(
            f"k={spec.k} must be smaller than the token count {n} "
            f"(instance {record.instance_id!r})")

    order = rank_order(record.scores)
    if spec.strategy == "mask_top_k":
        top = set(order[:spec.k])
        return tuple(spec.mask_token if i in top else t
                     for i, t in enumerate(tokens))
    if spec.strategy == "remove_bottom_k":
        bottom = set(order[n - spec.k:])
        return tuple(t for i, t in enumerate(tokens) if i not in bottom)

    # synonym_replace: deterministic per instance, not per corpus order
    rng = random.Random(f"{spec.seed}:{record.instance_id}")
    count = max(1, round(spec.rate * n))
    chosen = sorted(rng.sample(range(n), min(count, n)))
    out = list(tokens)
    for i in chosen:
        synonym = spec.lexicon.get(normalizer.normalize(tokens[i]))
        if synonym is None:
            logger.warning("no lexicon entry for token %r (instance %s); kept as is",
                           tokens[i], record.instance_id)
            continue
        out[i] = synonym
    return tuple(out)


def generate_perturbations(records, spec: PerturbationSpec,
                           normalizer: TokenNormalizer | None = None) -> list[PerturbedInput]:
    """Derive perturbed token sequences from original-variant records."""
    spec.validate()
    normalizer = normalizer or TokenNormalizer()
    originals = sorted((r for r in records if r.variant.kind == "original"
                        and r.target_label == r.predicted_label),
                       key=lambda r: (r.dataset, r.model, r.method, r.instance_id))
    return [PerturbedInput(r.instance_id, spec.strategy, spec.seed,
                           _perturb_one(r, spec, normalizer))
            for r in originals]


def write_perturbed_inputs(entries, path, meta: dict | None = None):
    write_jsonl((e.to_obj() for e in entries), path, meta)


def load_lexicon(path) -> dict[str, str]:
    """Two-column whitespace lexicon: token synonym.  '#' starts a comment."""
    lexicon: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected two columns, got {len(parts)}")
            lexicon[parts[0]] = parts[1]
    return lexicon
