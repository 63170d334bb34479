"""Exact MAP solvers for the budgeted chain.

``brute_force_map`` enumerates every mask and serves as the oracle for
everything else.  ``dp_map`` is the production path: a dynamic program
over (position, tokens used, previous bit).  ``viterbi_unbudgeted_batch``
drops the budget and runs a plain two-state pass; it is the inner solver
for the Lagrangian relaxation and for Perturb-and-MAP.

Tie-breaking is uniform across all solvers: among equal-score masks the
one selecting fewer tokens wins, and among those the one selecting the
earliest tokens (at the first position where two masks differ, the mask
selecting that token is preferred).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import ChainModel, Mask, score_of

BRUTE_FORCE_LIMIT = 22

NEG_INF = -np.inf


@dataclass(frozen=True)
class Solution:
    mask: Mask
    score: float
    solver_tag: str


def enumerate_masks(n: int) -> np.ndarray:
    """All 2^n binary vectors, row i = binary expansion of i (bit 0 is MSB)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    ints = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1)
    return ((ints[:, None] >> shifts) & 1).astype(np.int8)


def brute_force_map(model: ChainModel) -> Solution:
    """Exhaustive maximizer over all feasible masks."""
    n = len(model)
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force capped at L <= {BRUTE_FORCE_LIMIT}, got {n}")
    masks = enumerate_masks(n)
    scores = masks @ model.unary
    if n > 1:
        scores = scores + (masks[:, :-1] * masks[:, 1:]) @ model.edge
    counts = masks.sum(axis=1)
    scores = np.where(counts <= model.budget, scores, NEG_INF)
    tied = np.flatnonzero(scores == scores.max())
    tied = tied[counts[tied] == counts[tied].min()]
    # Larger row index = earlier token selected at the first difference.
    best = int(tied.max())
    mask = Mask.of(model, masks[best])
    return Solution(mask=mask, score=float(mask.score), solver_tag="brute")


def _prefer(new_v, new_c, cur_v, cur_c):
    """Pointwise (value, count) merge: higher value, then lower count."""
    value = np.maximum(new_v, cur_v)
    count = np.where(new_v > cur_v, new_c,
                     np.where(new_v < cur_v, cur_c, np.minimum(new_c, cur_c)))
    return value, count


def dp_map(model: ChainModel) -> Solution:
    """Exact budgeted maximizer via DP over (position, count, previous bit).

    Suffix values (and the minimal selection count among suffix optima)
    are computed right to left, then the mask is rebuilt left to right
    under the tie-break.
    """
    n, k = len(model), model.budget
    s, r = model.unary, model.edge
    if n == 0:
        return Solution(mask=Mask.of(model, []), score=0.0, solver_tag="dp")
    # value[i, c, p]: best suffix score from position i with c tokens
    # already used and previous bit p; count[...] is the fewest suffix
    # selections among suffix-optimal continuations.
    value = np.full((n + 1, k + 1, 2), NEG_INF)
    count = np.zeros((n + 1, k + 1, 2), dtype=np.int64)
    value[n] = 0.0
    for i in range(n - 1, -1, -1):
        gain_v = np.full(k + 1, NEG_INF)
        gain_c = np.full(k + 1, n + 1, dtype=np.int64)
        if k > 0:
            gain_v[:k] = s[i] + value[i + 1, 1:, 1]
            gain_c[:k] = 1 + count[i + 1, 1:, 1]
        bonus = r[i - 1] if i > 0 else 0.0
        value[i, :, 0], count[i, :, 0] = _prefer(
            gain_v, gain_c, value[i + 1, :, 0], count[i + 1, :, 0])
        value[i, :, 1], count[i, :, 1] = _prefer(
            gain_v + bonus, gain_c, value[i + 1, :, 0], count[i + 1, :, 0])
    bits = np.zeros(n, dtype=np.int8)
    c, prev = 0, 0
    for i in range(n):
        v0, c0 = value[i + 1, c, 0], count[i + 1, c, 0]
        if c < k:
            v1 = s[i] + (r[i - 1] if i > 0 and prev else 0.0) \
                + value[i + 1, c + 1, 1]
            c1 = 1 + count[i + 1, c + 1, 1]
        else:
            v1, c1 = NEG_INF, n + 1
        if v1 > v0 or (v1 == v0 and c1 <= c0):
            bits[i] = 1
            c += 1
            prev = 1
        else:
            prev = 0
    # Report through score_of so DP and brute force scores are bit-identical.
    mask = Mask.of(model, bits)
    return Solution(mask=mask, score=float(mask.score), solver_tag="dp")


def viterbi_unbudgeted_batch(unary: np.ndarray,
                             edge: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two-state Viterbi without a budget, vectorized over a batch axis.

    unary: (B, L) effective per-token gains; edge: (L-1,) shared bonuses.
    Returns (bits (B, L), scores (B,)) under the standard tie-break.
    """
    b, n = unary.shape
    if n == 0:
        return np.zeros((b, 0), dtype=np.int8), np.zeros(b)
    # value[i, p]: best suffix score from i given previous bit p.
    value = np.zeros((n + 1, 2, b))
    count = np.zeros((n + 1, 2, b), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        gain_v = unary[:, i] + value[i + 1, 1]
        gain_c = 1 + count[i + 1, 1]
        bonus = edge[i - 1] if i > 0 else 0.0
        value[i, 0], count[i, 0] = _prefer(
            gain_v, gain_c, value[i + 1, 0], count[i + 1, 0])
        value[i, 1], count[i, 1] = _prefer(
            gain_v + bonus, gain_c, value[i + 1, 0], count[i + 1, 0])
    bits = np.zeros((b, n), dtype=np.int8)
    prev = np.zeros(b)
    for i in range(n):
        bonus = edge[i - 1] if i > 0 else 0.0
        v1 = unary[:, i] + prev * bonus + value[i + 1, 1]
        c1 = 1 + count[i + 1, 1]
        v0, c0 = value[i + 1, 0], count[i + 1, 0]
        bits[:, i] = (v1 > v0) | ((v1 == v0) & (c1 <= c0))
        prev = bits[:, i]
    return bits, value[0, 0]


def dp_map_unbudgeted(model: ChainModel, unary_shift: float = 0.0) -> Solution:
    """Maximizes sum m_i (s_i - shift) + pair bonuses over all masks.

    The reported score is the maximized objective itself (no constant
    budget term added back).
    """
    shifted = (model.unary - unary_shift)[None, :]
    bits, _ = viterbi_unbudgeted_batch(shifted, model.edge)
    bits = bits[0]
    mask = Mask(bits=bits, score=score_of(model, bits, enforce_budget=False))
    return Solution(mask=mask,
                    score=float(mask.score) - unary_shift * int(bits.sum()),
                    solver_tag="dp")
