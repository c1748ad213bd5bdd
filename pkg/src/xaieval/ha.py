"""Agreement between explanation rankings and human rationales.

An explanation's token ranking is scored against an annotator's ranking
by position-exact matches: rel(k) is 1 when the k-th ranked explanation
token equals the k-th rationale token after normalization.  The average
precision of one instance divides the running precision at each hit by
the rationale length, so explanations shorter than the rationale are
penalized rather than truncated away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._util import fsum_mean, parallel_map
from .corpus import Cell, CorpusIndex, HumanRationale, SkipEntry, TokenNormalizer
from .ranking import rank_tokens


@dataclass(frozen=True)
class HaResult:
    per_instance: tuple[tuple[str, float], ...]  # (instance_id, AP), sorted
    map_score: float
    n_evaluated: int


def rank_relevance(ranked_tokens, rationale_tokens,
                   normalizer: TokenNormalizer | None = None) -> tuple[int, ...]:
    """Position-exact relevance of each ranked token against the rationale.

    Output has one entry per ranked token; positions past the end of the
    rationale can never match.
    """
    normalizer = normalizer or TokenNormalizer()
    want = normalizer.normalize_all(rationale_tokens)
    got = normalizer.normalize_all(ranked_tokens)
    return tuple(1 if k < len(want) and tok == want[k] else 0
                 for k, tok in enumerate(got))


def average_precision(relevance, rationale_length: int) -> float:
    """AP over position-exact relevance, normalized by rationale length."""
    if rationale_length <= 0:
        raise ValueError(f"rationale length must be positive, got {rationale_length}")
    hits = 0
    contributions = []
    for k, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            contributions.append(hits / k)
    return math.fsum(contributions) / rationale_length


def mean_average_precision(aps) -> float:
    return fsum_mean(list(aps))


def instance_ap(record, rationale: HumanRationale,
                normalizer: TokenNormalizer | None = None,
                rank_by: str = "raw") -> float:
    ranked = rank_tokens(record, rank_by)
    rel = rank_relevance(ranked.ranked_tokens, rationale.ranked_tokens, normalizer)
    return average_precision(rel, len(rationale.ranked_tokens))


def evaluate_ha(index: CorpusIndex, cell: Cell, rank_by: str = "raw",
                parallelism: int = 1) -> tuple[HaResult | None, list[SkipEntry]]:
    """Score every predicted-class explanation in a cell against its rationale."""
    dataset, model, method = cell
    skips: list[SkipEntry] = []
    jobs = []
    for rec in index.predicted_for(cell):
        rationale = index.rationale_for(dataset, rec.instance_id)
        if rationale is None:
            skips.append(SkipEntry("ha", dataset, model, method,
                                   rec.instance_id, "no human rationale"))
            continue
        jobs.append((rec, rationale))
    if not jobs:
        return None, skips

    aps = parallel_map(
        lambda job: instance_ap(job[0], job[1], index.normalizer, rank_by),
        jobs, parallelism)
    per_instance = tuple((job[0].instance_id, ap) for job, ap in zip(jobs, aps))
    return HaResult(
        per_instance=per_instance,
        map_score=mean_average_precision([ap for _, ap in per_instance]),
        n_evaluated=len(per_instance),
    ), skips
