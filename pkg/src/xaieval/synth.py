"""Synthetic corpora with analytically known metric values.

Each generator is a pure function of its config: the same config
produces byte-identical files on every run.  The constructions pin the
metric outcome in closed form so the pipeline can be checked end to end
without any model in the loop:

- ha: the explanation ranking equals the human ranking except for
  adjacent-pair swaps applied with probability swap_rate, so swap_rate
  zero forces MAP = 1.0 exactly.
- robustness: the perturbed variant carries the original scores plus
  Gaussian noise over identical tokens, so MAD estimates the half-normal
  mean sigma * sqrt(2/pi).
- consistency: instance i's two seeds differ by a step of known size in
  both attention and explanation space; with coupling_noise zero the
  euclidean D_E is exactly monotone (or antitone) in D_A, forcing
  rho = +1.0 (or -1.0).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (AttentionRecord, HumanRationale, SaliencyRecord, Variant,
                     write_attention, write_rationales, write_saliency)

KINDS = ("ha", "robustness", "consistency")

ROBUSTNESS_TAG = "gauss_noise"


@dataclass(frozen=True)
class SynthConfig:
    kind: str
    seed: int = 0
    n_instances: int = 100
    tokens_per_instance: int = 12
    swap_rate: float = 0.0        # ha: probability of swapping each adjacent pair
    noise_sigma: float = 0.1      # robustness: stddev of score noise (0 disables)
    coupling_noise: float = 0.0   # consistency: jitter on the explanation step
    antitone: bool = False        # consistency: reverse the coupling direction

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n_instances < 1:
            raise ValueError(f"n_instances must be >= 1, got {self.n_instances}")
        if self.tokens_per_instance < 2:
            raise ValueError(f"tokens_per_instance must be >= 2, "
                             f"got {self.tokens_per_instance}")
        if not 0.0 <= self.swap_rate <= 1.0:
            raise ValueError(f"swap_rate must be in [0, 1], got {self.swap_rate}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.coupling_noise < 0.0:
            raise ValueError(f"coupling_noise must be >= 0, got {self.coupling_noise}")


def _tokens(i: int, count: int) -> tuple[str, ...]:
    return tuple(f"w{i:05d}t{j:03d}" for j in range(count))


def _record(config: SynthConfig, instance_id: str, variant: Variant,
            tokens, scores) -> SaliencyRecord:
    return SaliencyRecord(
        instance_id=instance_id,
        dataset=f"synth-{config.kind}",
        model="synth",
        method="synth",
        variant=variant,
        predicted_label="pos",
        target_label="pos",
        tokens=tuple(tokens),
        scores=tuple(float(s) for s in scores),
    )


def gen_ha_corpus(config: SynthConfig) -> tuple[list[SaliencyRecord], list[HumanRationale]]:
    config.validate()
    rng = np.random.default_rng(config.seed)
    explanations, rationales = [], []
    T = config.tokens_per_instance
    for i in range(config.n_instances):
        instance_id = f"i{i:05d}"
        tokens = _tokens(i, T)
        human_order = list(rng.permutation(T))
        xai_order = list(human_order)
        for p in range(0, T - 1, 2):
            if rng.random() < config.swap_rate:
                xai_order[p], xai_order[p + 1] = xai_order[p + 1], xai_order[p]
        # distinct descending scores force rank_tokens to reproduce xai_order
        scores = [0.0] * T
        for rank, position in enumerate(xai_order):
            scores[position] = 1.0 - rank / T
        explanations.append(_record(config, instance_id, Variant.original(),
                                    tokens, scores))
        rationales.append(HumanRationale(
            instance_id=instance_id,
            dataset=f"synth-{config.kind}",
            ranked_tokens=tuple(tokens[p] for p in human_order),
        ))
    return explanations, rationales


def gen_robustness_corpus(config: SynthConfig) -> list[SaliencyRecord]:
    config.validate()
    rng = np.random.default_rng(config.seed)
    records = []
    T = config.tokens_per_instance
    for i in range(config.n_instances):
        instance_id = f"i{i:05d}"
        tokens = _tokens(i, T)
        original = rng.normal(0.0, 1.0, T)
        noise = rng.normal(0.0, config.noise_sigma, T) if config.noise_sigma > 0 \
            else np.zeros(T)
        records.append(_record(config, instance_id, Variant.original(),
                               tokens, original))
        records.append(_record(config, instance_id, Variant.perturbed(ROBUSTNESS_TAG),
                               tokens, original + noise))
    return records


def gen_consistency_corpus(config: SynthConfig) \
        -> tuple[list[SaliencyRecord], list[AttentionRecord]]:
    """Two seeds per instance with controlled drift (euclidean geometry)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    explanations, attentions = [], []
    n = config.n_instances
    T = config.tokens_per_instance
    for i in range(n):
        instance_id = f"i{i:05d}"
        tokens = _tokens(i, T)

        attention_step = 0.2 * (i + 1) / n  # strictly increasing over instances
        base_attention = rng.uniform(0.5, 1.5, T)
        shifted_attention = base_attention.copy()
        shifted_attention[0] += attention_step

        coupling = (n - i) / n if config.antitone else (i + 1) / n
        if config.coupling_noise > 0:
            coupling += config.coupling_noise * rng.standard_normal()
        base_scores = rng.normal(0.0, 1.0, T)
        shifted_scores = base_scores.copy()
        shifted_scores[0] += coupling

        explanations.append(_record(config, instance_id, Variant.seeded(1),
                                    tokens, base_scores))
        explanations.append(_record(config, instance_id, Variant.seeded(2),
                                    tokens, shifted_scores))
        attentions.append(AttentionRecord(
            instance_id=instance_id, model="synth", seed=1,
            avg_attention=tuple(float(x) for x in base_attention)))
        attentions.append(AttentionRecord(
            instance_id=instance_id, model="synth", seed=2,
            avg_attention=tuple(float(x) for x in shifted_attention)))
    return explanations, attentions


def write_synth_corpus(config: SynthConfig, out_dir) -> dict[str, Path]:
    """Generate and write one corpus; returns the files by role."""
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"generator": "xaieval-synth", "kind": config.kind, "seed": config.seed,
            "n_instances": config.n_instances,
            "tokens_per_instance": config.tokens_per_instance}
    paths: dict[str, Path] = {}

    if config.kind == "ha":
        explanations, rationales = gen_ha_corpus(config)
        paths["explanations"] = out_dir / "explanations.jsonl"
        paths["rationales"] = out_dir / "rationales.jsonl"
        write_saliency(explanations, paths["explanations"],
                       meta | {"swap_rate": config.swap_rate})
        write_rationales(rationales, paths["rationales"], meta)
    elif config.kind == "robustness":
        records = gen_robustness_corpus(config)
        paths["explanations"] = out_dir / "explanations.jsonl"
        write_saliency(records, paths["explanations"],
                       meta | {"noise_sigma": config.noise_sigma})
    else:
        explanations, attentions = gen_consistency_corpus(config)
        paths["explanations"] = out_dir / "explanations.jsonl"
        paths["attention"] = out_dir / "attention.jsonl"
        write_saliency(explanations, paths["explanations"],
                       meta | {"coupling_noise": config.coupling_noise,
                               "antitone": config.antitone})
        write_attention(attentions, paths["attention"], meta)
    return paths
