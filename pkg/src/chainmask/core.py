"""Chain factor-graph types and score functions.

A model is a chain of L binary selection variables with per-token unary
scores, nonnegative bonuses for selecting adjacent pairs, and a hard cap
on how many tokens may be selected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np


class Infeasible:
    """Marker for masks that violate the selection budget.

    A dedicated singleton rather than -inf so callers cannot accidentally
    compare infeasible scores against real ones.
    """

    _instance: Optional["Infeasible"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFEASIBLE"


INFEASIBLE = Infeasible()

Score = Union[float, Infeasible]


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.dtype == object or not np.all((arr == 0) | (arr == 1)):
        raise ValueError("mask bits must be 0/1")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class ChainModel:
    """Immutable chain instance: unary scores, edge bonuses, budget.

    ``budget`` may be given as a non-negative int (token count) or as a
    float fraction in (0, 1], resolved to ceil(fraction * L).  The float
    1.0 means "all tokens"; the int 1 means "one token".
    """

    unary: np.ndarray
    edge: np.ndarray
    budget: int

    def __init__(self, unary, edge, budget: Union[int, float]):
        unary = np.asarray(unary, dtype=float).reshape(-1)
        edge = np.asarray(edge, dtype=float).reshape(-1)
        n = len(unary)
        if len(edge) != max(n - 1, 0):
            raise ValueError(
                f"edge length {len(edge)} != unary length {n} - 1")
        if np.any(edge < 0):
            raise ValueError("edge bonuses must be >= 0")
        if isinstance(budget, float):
            if not 0 < budget <= 1:
                raise ValueError(f"fractional budget {budget} not in (0, 1]")
            budget = int(np.ceil(budget * n))
        else:
            budget = int(budget)
        if not 0 <= budget <= n:
            raise ValueError(f"budget {budget} outside [0, {n}]")
        unary.flags.writeable = False
        edge.flags.writeable = False
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "edge", edge)
        object.__setattr__(self, "budget", budget)

    def __len__(self) -> int:
        return len(self.unary)


@dataclass(frozen=True)
class Mask:
    """A binary selection over the model's tokens, with its cached score."""

    bits: np.ndarray
    score: Score

    @classmethod
    def of(cls, model: ChainModel, bits, enforce_budget: bool = True) -> "Mask":
        bits = _as_bits(bits)
        return cls(bits=bits, score=score_of(model, bits, enforce_budget))

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def __str__(self) -> str:
        return "".join(str(int(b)) for b in self.bits)


@dataclass(frozen=True)
class RelaxConfig:
    """Knobs for the relaxed (Gibbs) view of a chain model.

    ``penalty`` is the multiplier converting the hard budget into a soft
    per-token cost; ``temperature`` scales the Gibbs distribution.
    """

    penalty: float = 0.0
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")


@dataclass(frozen=True)
class Marginals:
    """Per-token selection probabilities and log partition function."""

    probs: np.ndarray
    logZ: float


def score_of(model: ChainModel, bits, enforce_budget: bool = True) -> Score:
    """Total chain score: sum of selected unaries plus adjacent-pair bonuses.

    Returns INFEASIBLE when the budget is enforced and exceeded.
    """
    bits = _as_bits(bits)
    if len(bits) != len(model):
        raise ValueError(f"mask length {len(bits)} != model length {len(model)}")
    if enforce_budget and bits.sum() > model.budget:
        return INFEASIBLE
    total = float(bits @ model.unary)
    if len(bits) > 1:
        total += float((bits[:-1] * bits[1:]) @ model.edge)
    return total


def lagrangian_score(model: ChainModel, bits, cfg: RelaxConfig) -> float:
    """Budget-free score plus penalty * (budget - #selected).

    The penalty * budget term is constant in the mask but kept so reported
    values match the relaxed objective literally.
    """
    bits = _as_bits(bits)
    base = score_of(model, bits, enforce_budget=False)
    return base + cfg.penalty * (model.budget - int(bits.sum()))


def segment_count(bits) -> int:
    """Number of maximal runs of consecutive selected tokens."""
    bits = _as_bits(bits)
    if len(bits) == 0:
        return 0
    starts = np.flatnonzero(np.diff(np.concatenate(([0], bits))) == 1)
    return len(starts)
