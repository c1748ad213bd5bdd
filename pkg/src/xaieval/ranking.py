"""Turning per-token saliency scores into token rankings.

Every metric that compares orderings goes through rank_tokens so the
tie-break rule lives in exactly one place: descending score, ties broken
by ascending token position.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import SaliencyRecord

RANK_BY_CHOICES = ("raw", "abs")


@dataclass(frozen=True)
class RankedExplanation:
    """A saliency record's tokens in rank order, positions retained."""

    instance_id: str
    order: tuple[int, ...]        # token positions, most salient first
    ranked_tokens: tuple[str, ...]
    ranked_scores: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.order)


def rank_order(scores, rank_by: str = "raw") -> tuple[int, ...]:
    """Positions sorted by descending score, ties by ascending position.

    rank_by="abs" ranks on the magnitude of each score instead of its
    signed value; useful for methods whose sign encodes direction rather
    than importance.
    """
    if rank_by not in RANK_BY_CHOICES:
        raise ValueError(f"rank_by must be one of {RANK_BY_CHOICES}, got {rank_by!r}")
    key = abs if rank_by == "abs" else float
    return tuple(sorted(range(len(scores)), key=lambda i: (-key(scores[i]), i)))


def rank_tokens(record: SaliencyRecord, rank_by: str = "raw") -> RankedExplanation:
    order = rank_order(record.scores, rank_by)
    return RankedExplanation(
        instance_id=record.instance_id,
        order=order,
        ranked_tokens=tuple(record.tokens[i] for i in order),
        ranked_scores=tuple(record.scores[i] for i in order),
    )


def truncate_to(ranked: RankedExplanation, k: int) -> RankedExplanation:
    """Keep the top k entries.  k beyond the length keeps everything."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if len(ranked) == 0:
        raise ValueError("cannot truncate an empty ranking")
    return RankedExplanation(
        instance_id=ranked.instance_id,
        order=ranked.order[:k],
        ranked_tokens=ranked.ranked_tokens[:k],
        ranked_scores=ranked.ranked_scores[:k],
    )
