"""Dataset file format and the synthetic corpus generator.

Datasets are line-delimited JSON: an optional header object followed by
one record per line.  A record carries either a full embedding matrix
(row-major flat list) or precomputed per-token scores, so any encoder can
be used offline.

The generator plants, for each sentence, a contiguous block
[entity1, cue tokens..., entity2] whose label is determined by the cue
direction, plus scattered distractor tokens that mimic the cue's
importance while carrying a single competing label direction.  The block
is recorded as the gold rationale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import ChainModel
from .scoring import Instance

HEADER = {"format": "chainmask-dataset", "version": 1}

# Geometry of the synthetic embedding space (relative to the shared
# relevance direction; see generate_synthetic).
ENTITY_WEIGHT = 0.85
CUE_WEIGHT = 1.0
CUE_WEIGHT_JITTER = 0.25
CUE_LABEL_WEIGHT = 1.0
DISTRACTOR_WEIGHT = 0.75
DISTRACTOR_LABEL_WEIGHT = 2.75
BACKGROUND_WEIGHT = -0.3
BACKGROUND_LABEL_WEIGHT = 0.6
# Budget fraction the corpus is tuned for; gold blocks are clamped to fit it.
DEFAULT_BUDGET_FRACTION = 0.6


@dataclass(frozen=True)
class DatasetRecord:
    """One serialized sentence; exactly one of embeddings/scores is set."""

    tokens: Tuple[str, ...]
    e1: Tuple[int, int]
    e2: Tuple[int, int]
    embeddings: Optional[np.ndarray] = None
    scores: Optional[np.ndarray] = None
    label: Optional[str] = None
    gold: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if (self.embeddings is None) == (self.scores is None):
            raise ValueError(
                "record needs exactly one of 'embeddings' or 'scores'")
        n = len(self.tokens)
        for name, span in (("e1", self.e1), ("e2", self.e2)):
            lo, hi = span
            if not (0 <= lo <= hi < n):
                raise ValueError(f"span {name}={list(span)} out of bounds")
        if not (self.e1[1] < self.e2[0] or self.e2[1] < self.e1[0]):
            raise ValueError(
                f"overlapping spans e1={list(self.e1)} e2={list(self.e2)}")
        if self.gold is not None:
            lo, hi = self.gold
            if not (0 <= lo <= hi < n):
                raise ValueError(f"span gold={list(self.gold)} out of bounds")
        if self.scores is not None and len(self.scores) != n:
            raise ValueError(
                f"scores length {len(self.scores)} != {n} tokens")
        if self.embeddings is not None and self.embeddings.shape[1] != n:
            raise ValueError(
                f"embeddings shape {self.embeddings.shape} != D x {n}")

    @property
    def has_embeddings(self) -> bool:
        return self.embeddings is not None

    def instance(self) -> Instance:
        if self.embeddings is None:
            raise ValueError("scores-only record has no embeddings")
        return Instance(tokens=self.tokens, embeddings=self.embeddings,
                        entity1_span=self.e1, entity2_span=self.e2,
                        label=self.label, gold_rationale=self.gold)

    def chain_model(self, edge_bonus: float,
                    budget_fraction: float) -> ChainModel:
        """Chain model from raw scores (scores-only records)."""
        if self.scores is None:
            from .scoring import build_chain_model
            return build_chain_model(self.instance(), edge_bonus,
                                     budget_fraction)
        n = len(self.tokens)
        return ChainModel(self.scores, np.full(max(n - 1, 0), edge_bonus),
                          float(budget_fraction))

    def to_json(self) -> str:
        obj = {"tokens": list(self.tokens),
               "e1": list(self.e1), "e2": list(self.e2)}
        if self.embeddings is not None:
            obj["dim"] = int(self.embeddings.shape[0])
            obj["embeddings"] = [float(x) for x in self.embeddings.reshape(-1)]
        if self.scores is not None:
            obj["scores"] = [float(x) for x in self.scores]
        if self.label is not None:
            obj["label"] = self.label
        if self.gold is not None:
            obj["gold"] = list(self.gold)
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetRecord":
        tokens = tuple(obj["tokens"])
        emb = scores = None
        if "embeddings" in obj:
            flat = np.asarray(obj["embeddings"], dtype=float)
            dim = int(obj.get("dim", 0))
            if dim <= 0 or flat.size % dim:
                raise ValueError("embeddings require a consistent 'dim' field")
            emb = flat.reshape(dim, -1)
        if "scores" in obj:
            scores = np.asarray(obj["scores"], dtype=float)
        return cls(tokens=tokens, e1=tuple(obj["e1"]), e2=tuple(obj["e2"]),
                   embeddings=emb, scores=scores, label=obj.get("label"),
                   gold=tuple(obj["gold"]) if "gold" in obj else None)


def save_dataset(records: Sequence[DatasetRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(HEADER, sort_keys=True, separators=(",", ":")))
        fh.write("\n")
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def load_dataset(path) -> List[DatasetRecord]:
    """Parse a dataset file; raises ValueError with the offending line number."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON: {exc}") from exc
            if obj.get("format") == HEADER["format"]:
                continue
            try:
                records.append(DatasetRecord.from_json(obj))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
    return records


def load_instances(path) -> List[Instance]:
    """Load a dataset, requiring every record to carry embeddings."""
    instances = []
    for i, rec in enumerate(load_dataset(path)):
        if not rec.has_embeddings:
            raise ValueError(f"record {i} has scores only, not embeddings")
        instances.append(rec.instance())
    return instances


@dataclass(frozen=True)
class SynthConfig:
    n_instances: int = 2000
    length_range: Tuple[int, int] = (12, 30)
    dim: int = 8
    n_labels: int = 4
    # Cue span length as a fraction of the sentence, drawn per instance.
    cue_fraction_range: Tuple[float, float] = (0.45, 0.55)
    distractor_rate: float = 0.2
    noise_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_instances < 0:
            raise ValueError("n_instances must be >= 0")
        if self.length_range[0] < 4 or self.length_range[0] > self.length_range[1]:
            raise ValueError("invalid length_range")
        if self.dim < self.n_labels + 1:
            raise ValueError("dim must exceed the label count")
        if self.n_labels < 2:
            raise ValueError("need at least two labels")
        lo, hi = self.cue_fraction_range
        if not (0 < lo <= hi < 1):
            raise ValueError("cue_fraction_range must lie in (0, 1)")
        if not 0 <= self.distractor_rate <= 1:
            raise ValueError("distractor_rate must lie in [0, 1]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


def _synth_instance(cfg: SynthConfig, index: int) -> DatasetRecord:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    lo, hi = cfg.length_range
    n = int(rng.integers(lo, hi + 1))
    label_idx = int(rng.integers(cfg.n_labels))
    wrong_idx = int(rng.integers(cfg.n_labels - 1))
    if wrong_idx >= label_idx:
        wrong_idx += 1
    frac = rng.uniform(*cfg.cue_fraction_range)
    # Keep the full gold block [ENT1][cue...][ENT2] within the default
    # selection budget so recoverability never depends on chopping it.
    cap = int(np.ceil(DEFAULT_BUDGET_FRACTION * n)) - 2
    cue_len = max(1, min(int(round(frac * n)), n - 2, cap))
    block = cue_len + 2
    start = int(rng.integers(0, n - block + 1))
    e1 = (start, start)
    e2 = (start + block - 1, start + block - 1)
    cue = range(start + 1, start + block - 1)

    # Relevance direction is axis 0; label directions are axes 1..C.
    emb = rng.normal(scale=cfg.noise_scale, size=(cfg.dim, n))
    tokens = []
    for i in range(n):
        if i == e1[0]:
            emb[0, i] += ENTITY_WEIGHT
            tokens.append("ENT1")
        elif i == e2[0]:
            emb[0, i] += ENTITY_WEIGHT
            tokens.append("ENT2")
        elif i in cue:
            emb[0, i] += CUE_WEIGHT - CUE_WEIGHT_JITTER * rng.random()
            emb[1 + label_idx, i] += CUE_LABEL_WEIGHT
            tokens.append(f"cue{i - start - 1}")
        elif rng.random() < cfg.distractor_rate:
            emb[0, i] += DISTRACTOR_WEIGHT
            emb[1 + wrong_idx, i] += DISTRACTOR_LABEL_WEIGHT
            tokens.append(f"dis{i}")
        else:
            emb[0, i] += BACKGROUND_WEIGHT
            emb[1 + int(rng.integers(cfg.n_labels)), i] += \
                BACKGROUND_LABEL_WEIGHT
            tokens.append(f"w{i}")
    return DatasetRecord(tokens=tuple(tokens), e1=e1, e2=e2, embeddings=emb,
                         label=f"R{label_idx}",
                         gold=(start, start + block - 1))


def generate_synthetic(cfg: SynthConfig, path) -> dict:
    """Write a synthetic corpus; returns a small summary of what was written."""
    records = [_synth_instance(cfg, i) for i in range(cfg.n_instances)]
    save_dataset(records, path)
    counts = {}
    for rec in records:
        counts[rec.label] = counts.get(rec.label, 0) + 1
    return {"n_instances": cfg.n_instances, "path": str(path),
            "label_counts": dict(sorted(counts.items()))}
