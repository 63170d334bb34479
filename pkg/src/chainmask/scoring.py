"""Token importance from embeddings and entity spans.

Importance of a token is its embedding's inner product with the sum of
the two (mean-pooled) entity embeddings; these scores become the unary
terms of a chain model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import ChainModel

Span = Tuple[int, int]  # inclusive token-index range


def _check_span(span: Span, n: int, name: str) -> None:
    lo, hi = span
    if not (0 <= lo <= hi < n):
        raise ValueError(f"{name}={span} out of bounds for {n} tokens")


@dataclass(frozen=True)
class Instance:
    """One sentence: tokens, a D x L embedding matrix, two entity spans."""

    tokens: Tuple[str, ...]
    embeddings: np.ndarray
    entity1_span: Span
    entity2_span: Span
    label: Optional[str] = None
    gold_rationale: Optional[Span] = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        emb = np.asarray(self.embeddings, dtype=float)
        if emb.ndim != 2 or emb.shape[1] != len(self.tokens):
            raise ValueError(
                f"embeddings shape {emb.shape} inconsistent with "
                f"{len(self.tokens)} tokens")
        emb.flags.writeable = False
        object.__setattr__(self, "embeddings", emb)
        n = len(self.tokens)
        e1, e2 = tuple(self.entity1_span), tuple(self.entity2_span)
        _check_span(e1, n, "entity1_span")
        _check_span(e2, n, "entity2_span")
        if not (e1[1] < e2[0] or e2[1] < e1[0]):
            raise ValueError(
                f"entity spans overlap: entity1_span={e1} entity2_span={e2}")
        object.__setattr__(self, "entity1_span", e1)
        object.__setattr__(self, "entity2_span", e2)
        if self.gold_rationale is not None:
            gr = tuple(self.gold_rationale)
            _check_span(gr, n, "gold_rationale")
            object.__setattr__(self, "gold_rationale", gr)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[0]


def span_mean(embeddings: np.ndarray, span: Span) -> np.ndarray:
    """Mean embedding column over an inclusive span."""
    lo, hi = span
    return embeddings[:, lo:hi + 1].mean(axis=1)


def entity_vector(inst: Instance) -> np.ndarray:
    """Sum of the two mean-pooled entity embeddings."""
    return span_mean(inst.embeddings, inst.entity1_span) + \
        span_mean(inst.embeddings, inst.entity2_span)


def importance_scores(inst: Instance) -> np.ndarray:
    """Per-token relevance: inner product with the combined entity vector."""
    return inst.embeddings.T @ entity_vector(inst)


def build_chain_model(inst: Instance, edge_bonus: float = 0.0,
                      budget_fraction: float = 0.6) -> ChainModel:
    """Chain model with importance unaries and a uniform edge bonus.

    The budget is ceil(budget_fraction * L).
    """
    if edge_bonus < 0:
        raise ValueError("edge_bonus must be >= 0")
    n = len(inst)
    edge = np.full(max(n - 1, 0), float(edge_bonus))
    return ChainModel(unary=importance_scores(inst), edge=edge,
                      budget=float(budget_fraction))
