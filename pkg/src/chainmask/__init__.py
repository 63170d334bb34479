"""Budgeted chain-mask rationale extraction.

Selects a sparse, coherent subset of tokens (a binary mask over a
sentence) that best explains a relation between two entities.  The mask
is scored by per-token importance plus adjacency bonuses under a hard
budget; exact solvers, a Lagrangian/Gibbs relaxation, and a small
trainable classifier operate on top of that shared model.
"""

from .core import (
    INFEASIBLE,
    ChainModel,
    Marginals,
    Mask,
    RelaxConfig,
    lagrangian_score,
    score_of,
    segment_count,
)
from .exact import (
    Solution,
    brute_force_map,
    dp_map,
    dp_map_unbudgeted,
    enumerate_masks,
    viterbi_unbudgeted_batch,
)
from .relax import (
    SampleBatch,
    chain_marginals,
    perturb_and_map_sample,
    soft_mask,
    tune_lambda,
)
from .scoring import (
    Instance,
    build_chain_model,
    entity_vector,
    importance_scores,
    span_mean,
)
from .classifier import (
    ClassifierParams,
    TrainConfig,
    feature_vector,
    forward,
    grad_check,
    loss,
    mask_values,
    predict,
    train,
)
from .metrics import (
    EvalReport,
    evaluate,
    hard_mask,
    k_sweep,
    micro_f1,
    rationale_overlap,
)
from .data import (
    DatasetRecord,
    SynthConfig,
    generate_synthetic,
    load_dataset,
    load_instances,
    save_dataset,
)

__all__ = [
    "INFEASIBLE", "ChainModel", "Marginals", "Mask", "RelaxConfig",
    "lagrangian_score", "score_of", "segment_count",
    "Solution", "brute_force_map", "dp_map", "dp_map_unbudgeted",
    "enumerate_masks", "viterbi_unbudgeted_batch",
    "SampleBatch", "chain_marginals", "perturb_and_map_sample", "soft_mask",
    "tune_lambda",
    "Instance", "build_chain_model", "entity_vector", "importance_scores",
    "span_mean",
    "ClassifierParams", "TrainConfig", "feature_vector", "forward",
    "grad_check", "loss", "mask_values", "predict", "train",
    "EvalReport", "evaluate", "hard_mask", "k_sweep", "micro_f1",
    "rationale_overlap",
    "DatasetRecord", "SynthConfig", "generate_synthetic", "load_dataset",
    "load_instances", "save_dataset",
]

__version__ = "0.1.0"
