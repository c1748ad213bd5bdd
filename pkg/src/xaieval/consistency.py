"""Agreement between attention shifts and explanation shifts across seeds.

Models retrained from different seeds attend differently; a consistent
explanation method should drift by a comparable amount.  Per instance we
take the distance between the two seeds' layer-averaged attention
vectors (D_A) and the distance between their explanation score vectors
(D_E), then rank-correlate the two distance lists across instances.
rho near 1 means explanation drift tracks attention drift.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._util import fsum_mean, parallel_map
from .corpus import AttentionRecord, Cell, CorpusIndex, SaliencyRecord, SeedPair

logger = logging.getLogger(__name__)

MEASURES = ("cosine", "euclidean")


@dataclass(frozen=True)
class AttentionSummary:
    """Layer-averaged attention: one weight per token."""

    instance_id: str
    model: str
    seed: int
    vector: tuple[float, ...]


@dataclass(frozen=True)
class DistancePair:
    instance_id: str
    d_attention: float
    d_explanation: float


@dataclass(frozen=True)
class ConsistencyResult:
    per_instance: tuple[DistancePair, ...]  # sorted by instance_id
    rho: float
    n_evaluated: int
    measure: str


def average_attention(record: AttentionRecord) -> AttentionSummary:
    """Collapse per-layer rows to their element-wise mean."""
    if record.avg_attention is not None:
        vector = record.avg_attention
    else:
        vector = tuple(np.asarray(record.layers, dtype=float).mean(axis=0))
    return AttentionSummary(record.instance_id, record.model, record.seed, vector)


def vector_distance(u, v, measure: str = "cosine") -> float:
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"vector length mismatch ({a.size} vs {b.size})")
    if measure == "euclidean":
        return float(np.linalg.norm(a - b))
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        logger.warning("cosine distance against a zero vector; reporting 1.0")
        return 1.0
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def explanation_distance(rec_a: SaliencyRecord, rec_b: SaliencyRecord,
                         measure: str = "cosine") -> float:
    """Distance between two explanations of the same raw token sequence."""
    if rec_a.tokens != rec_b.tokens:
        raise ValueError(
            f"explanations disagree on the token sequence for instance "
            f"{rec_a.instance_id!r}; distances would not be comparable")
    return vector_distance(rec_a.scores, rec_b.scores, measure)


def _fractional_ranks(values) -> list[float]:
    # average rank across ties, walking the argsorted list group by group
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def spearman_rho(xs, ys) -> float:
    """Spearman correlation: Pearson over fractional (tie-averaged) ranks.

    Raises ValueError when fewer than two pairs are given or either side
    has zero rank variance (rho is undefined there, not zero).
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch ({len(xs)} vs {len(ys)})")
    if len(xs) < 2:
        raise ValueError("need at least two pairs")
    rx = np.asarray(_fractional_ranks(list(xs)))
    ry = np.asarray(_fractional_ranks(list(ys)))
    if np.ptp(rx) == 0.0 or np.ptp(ry) == 0.0:
        raise ValueError("zero variance on one side; rho undefined")
    # identical / exactly reversed rankings are +-1 by definition; the fast
    # paths keep those cases free of square-root rounding
    if np.array_equal(rx, ry):
        return 1.0
    if np.array_equal(rx + ry, np.full(len(rx), len(rx) + 1.0)):
        return -1.0
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum() / np.sqrt((rx * rx).sum() * (ry * ry).sum()))


def pair_distances(pair: SeedPair, measure: str = "cosine") -> tuple[float, float]:
    d_a = vector_distance(average_attention(pair.attention_a).vector,
                          average_attention(pair.attention_b).vector, measure)
    d_e = explanation_distance(pair.explanation_a, pair.explanation_b, measure)
    return d_a, d_e


def evaluate_consistency(index: CorpusIndex, cell: Cell, measure: str = "cosine",
                         parallelism: int = 1) -> tuple[ConsistencyResult | None, list[str]]:
    """rho over per-instance (D_A, D_E) pairs for one cell.

    Instances with several seed pairs contribute the mean of their pair
    distances, keeping one point per instance.  Returns (None, notes)
    when rho is undefined: fewer than two instances, or zero variance.
    """
    pairs = index.seed_pairs_for(cell)
    if not pairs:
        return None, ["no seed pairs"]

    distances = parallel_map(lambda p: pair_distances(p, measure), pairs, parallelism)
    by_instance: dict[str, list[tuple[float, float]]] = {}
    for pair, d in zip(pairs, distances):
        by_instance.setdefault(pair.explanation_a.instance_id, []).append(d)

    per_instance = tuple(
        DistancePair(instance_id,
                     fsum_mean([d[0] for d in ds]),
                     fsum_mean([d[1] for d in ds]))
        for instance_id, ds in sorted(by_instance.items()))
    if len(per_instance) < 2:
        return None, ["fewer than two instances with seed pairs; rho undefined"]
    try:
        rho = spearman_rho([p.d_attention for p in per_instance],
                           [p.d_explanation for p in per_instance])
    except ValueError as exc:
        return None, [f"rho undefined: {exc}"]
    return ConsistencyResult(per_instance, rho, len(per_instance), measure), []
