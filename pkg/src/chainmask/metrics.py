"""Evaluation: micro-F1, mask sparsity/coherence statistics, span overlap.

Evaluation always uses hard masks: the feasible solution from penalty
tuning (or the unbudgeted MAP when sparsity is ablated), not the soft
training mask.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import segment_count
from .exact import dp_map_unbudgeted
from .relax import tune_lambda
from .scoring import Instance, build_chain_model


@dataclass(frozen=True)
class EvalReport:
    micro_f1: float
    mean_sparsity_rate: float
    mean_segment_count: float
    rationale_precision: Optional[float] = None
    rationale_recall: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_text(self) -> str:
        return "\n".join(f"{k} = {v:.6f}" for k, v in self.to_dict().items())


def micro_f1(predictions: Sequence[str], gold: Sequence[str],
             exclude_label: Optional[str] = None) -> float:
    """F1 from true/false positives pooled over all classes.

    ``exclude_label`` drops a designated no-relation class from the pools
    (its correct predictions count for neither precision nor recall).
    """
    if len(predictions) != len(gold):
        raise ValueError("predictions and gold must have equal length")
    if not gold:
        raise ValueError("empty inputs")
    tp = fp = fn = 0
    for p, g in zip(predictions, gold):
        if p == exclude_label and g == exclude_label:
            continue
        if p == g:
            tp += 1
        else:
            if p != exclude_label:
                fp += 1
            if g != exclude_label:
                fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def rationale_overlap(mask, gold_span: Optional[Tuple[int, int]]
                      ) -> Tuple[float, float]:
    """(precision, recall) of a binary mask against an inclusive gold span."""
    bits = np.asarray(mask).astype(bool)
    if gold_span is None:
        span = np.zeros_like(bits)
    else:
        lo, hi = gold_span
        if not (0 <= lo <= hi < len(bits)):
            raise ValueError(f"gold span {gold_span} out of bounds")
        span = np.zeros_like(bits)
        span[lo:hi + 1] = True
    selected = int(bits.sum())
    span_size = int(span.sum())
    hit = int((bits & span).sum())
    if selected == 0:
        precision = 1.0 if span_size == 0 else 0.0
    else:
        precision = hit / selected
    recall = 1.0 if span_size == 0 else hit / span_size
    return precision, recall


def hard_mask(inst: Instance, cfg) -> np.ndarray:
    """Discrete evaluation mask for an instance under a train config."""
    model = build_chain_model(inst, cfg.effective_edge_bonus,
                              cfg.effective_fraction)
    if cfg.no_sparsity:
        return dp_map_unbudgeted(model).mask.bits
    return tune_lambda(model)[1].mask.bits


def evaluate(dataset: Sequence[Instance], params, cfg,
             exclude_label: Optional[str] = None) -> EvalReport:
    """Hard-mask evaluation of a trained classifier over a labeled dataset."""
    from .classifier import predict

    preds, golds, rates, segments, precs, recs = [], [], [], [], [], []
    for inst in dataset:
        bits = hard_mask(inst, cfg)
        preds.append(predict(inst, params, cfg, mask=bits))
        golds.append(inst.label)
        rates.append(bits.sum() / len(inst))
        segments.append(segment_count(bits))
        if inst.gold_rationale is not None:
            p, r = rationale_overlap(bits, inst.gold_rationale)
            precs.append(p)
            recs.append(r)
    return EvalReport(
        micro_f1=micro_f1(preds, golds, exclude_label=exclude_label),
        mean_sparsity_rate=float(np.mean(rates)),
        mean_segment_count=float(np.mean(segments)),
        rationale_precision=float(np.mean(precs)) if precs else None,
        rationale_recall=float(np.mean(recs)) if recs else None,
    )


def k_sweep(train_set: Sequence[Instance], eval_set: Sequence[Instance],
            fractions: Sequence[float], cfg) -> List[dict]:
    """Train and evaluate at each budget fraction; one result row per fraction."""
    from dataclasses import replace

    from .classifier import train

    rows = []
    for fraction in fractions:
        if not 0 < fraction <= 1:
            raise ValueError(f"fraction {fraction} not in (0, 1]")
        cfg_f = replace(cfg, budget_fraction=float(fraction))
        params, _ = train(train_set, cfg_f)
        report = evaluate(eval_set, params, cfg_f)
        rows.append({
            "fraction": float(fraction),
            "micro_f1": report.micro_f1,
            "mean_selected_rate": report.mean_sparsity_rate,
            "mean_segment_count": report.mean_segment_count,
        })
    return rows
