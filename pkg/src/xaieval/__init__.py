"""Quality metrics for token-level model explanations.

Four metrics over a JSONL interchange corpus (explanations, human
rationales, attention), plus a combined weighted score and report
rendering.  See the CLI (``xaieval --help``) for the file formats'
entry points.
"""

__version__ = "0.1.0"

from .aggregate import (CellScores, MetricTable, MetricWeights,
                        combined_weighted_score, crosscheck_reference,
                        render_report)
from .consistency import (ConsistencyResult, evaluate_consistency,
                          spearman_rho, vector_distance)
from .contrastivity import (ContrastivityResult, evaluate_contrastivity,
                            kl_divergence, to_distribution)
from .corpus import (AttentionRecord, CorpusIndex, HumanRationale,
                     SaliencyRecord, TokenNormalizer, ValidationError, Variant,
                     build_index, parse_attention, parse_rationales,
                     parse_saliency)
from .ha import HaResult, average_precision, evaluate_ha, mean_average_precision
from .ranking import RankedExplanation, rank_order, rank_tokens, truncate_to
from .robustness import (PerturbationSpec, RobustnessResult, align_tokens,
                         average_difference, evaluate_robustness,
                         generate_perturbations)
from .synth import (SynthConfig, gen_consistency_corpus, gen_ha_corpus,
                    gen_robustness_corpus, write_synth_corpus)
