"""How sharply an explanation separates the predicted class from a rival.

Saliency magnitudes are smoothed into a probability distribution over
tokens and the divergence between the predicted-class and contrast-class
distributions is measured with KL.  A method that highlights the same
tokens for both classes scores near zero.  sign_split mode instead
contrasts the positive against the negative portion of a single
explanation, for corpora without contrast-class records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._util import fsum_mean, parallel_map
from .corpus import Cell, ContrastPair, CorpusIndex

MODES = ("per_class", "sign_split")

DEFAULT_EPSILON = 1e-10


@dataclass(frozen=True)
class ImportanceDistribution:
    instance_id: str
    probs: tuple[float, ...]


@dataclass(frozen=True)
class ContrastivityResult:
    mode: str
    per_instance: tuple[tuple[str, float], ...]  # (instance_id, KL), sorted
    mean_kl: float
    n_evaluated: int


def to_distribution(scores, epsilon: float = DEFAULT_EPSILON) -> tuple[float, ...]:
    """Normalize |scores| + epsilon into a probability vector.

    epsilon keeps every token's mass positive, so KL stays finite; an
    all-zero score vector comes out uniform.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not len(scores):
        raise ValueError("cannot build a distribution from no scores")
    weights = [abs(s) + epsilon for s in scores]
    total = math.fsum(weights)
    return tuple(w / total for w in weights)


def kl_divergence(p, q, log_base: float | None = None) -> float:
    """KL(P || Q) in nats, or in the given log base when provided."""
    if len(p) != len(q):
        raise ValueError(f"distribution length mismatch ({len(p)} vs {len(q)})")
    total = math.fsum(pi * math.log(pi / qi) for pi, qi in zip(p, q) if pi > 0.0)
    if log_base is not None:
        if log_base <= 0 or log_base == 1:
            raise ValueError(f"log base must be positive and != 1, got {log_base}")
        total /= math.log(log_base)
    return total


def pair_contrastivity(pair: ContrastPair, epsilon: float = DEFAULT_EPSILON,
                       log_base: float | None = None) -> float:
    """KL between predicted-class and contrast-class token distributions."""
    if len(pair.predicted.scores) != len(pair.contrast.scores):
        raise ValueError(
            f"predicted and contrast explanations disagree on token count "
            f"for instance {pair.predicted.instance_id!r}")
    p = to_distribution(pair.predicted.scores, epsilon)
    q = to_distribution(pair.contrast.scores, epsilon)
    return kl_divergence(p, q, log_base)


def sign_split_contrastivity(scores, epsilon: float = DEFAULT_EPSILON,
                             log_base: float | None = None) -> float:
    """KL between the positive and negative halves of one explanation."""
    pos = [max(s, 0.0) for s in scores]
    neg = [max(-s, 0.0) for s in scores]
    return kl_divergence(to_distribution(pos, epsilon),
                         to_distribution(neg, epsilon), log_base)


def aggregate_contrastivity(kls) -> float:
    return fsum_mean(list(kls))


def evaluate_contrastivity(index: CorpusIndex, cell: Cell, mode: str = "per_class",
                           epsilon: float = DEFAULT_EPSILON,
                           log_base: float | None = None,
                           parallelism: int = 1) -> ContrastivityResult | None:
    """Mean instance-level contrastivity for one cell, None when no instances."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    if mode == "per_class":
        pairs = index.contrast_pairs_for(cell)
        if not pairs:
            return None
        kls = parallel_map(lambda p: pair_contrastivity(p, epsilon, log_base),
                           pairs, parallelism)
        per_instance = tuple((p.predicted.instance_id, kl)
                             for p, kl in zip(pairs, kls))
    else:
        records = index.predicted_for(cell)
        if not records:
            return None
        kls = parallel_map(lambda r: sign_split_contrastivity(r.scores, epsilon, log_base),
                           records, parallelism)
        per_instance = tuple((r.instance_id, kl) for r, kl in zip(records, kls))

    return ContrastivityResult(
        mode=mode,
        per_instance=per_instance,
        mean_kl=aggregate_contrastivity([kl for _, kl in per_instance]),
        n_evaluated=len(per_instance),
    )
