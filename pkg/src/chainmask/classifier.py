"""Toy relation classifier trained end to end through the soft mask.

The feature for a sentence is the soft-masked mean of its token
embeddings concatenated with the combined entity vector; a single affine
layer plus softmax predicts the relation label.  Training optimizes the
affine layer (and optionally the edge bonus, through the relaxation) by
plain gradient descent.  ``grad_check`` validates the analytic gradients
of the whole pipeline against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import RelaxConfig
from .relax import soft_mask, tune_lambda
from .scoring import Instance, build_chain_model, entity_vector


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    temperature: float = 1.0
    edge_bonus: float = 0.5
    budget_fraction: float = 0.6
    seed: int = 0
    no_continuity: bool = False
    no_sparsity: bool = False
    no_entities: bool = False
    # None: choose the budget penalty per instance by bisection.
    penalty: Optional[float] = None
    train_edge_bonus: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.edge_bonus < 0:
            raise ValueError("edge_bonus must be >= 0")

    @property
    def effective_edge_bonus(self) -> float:
        return 0.0 if self.no_continuity else self.edge_bonus

    @property
    def effective_fraction(self) -> float:
        return 1.0 if self.no_sparsity else self.budget_fraction


@dataclass(frozen=True)
class ClassifierParams:
    weight: np.ndarray  # (C, F)
    bias: np.ndarray    # (C,)
    labels: Tuple[str, ...]

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("weight/bias shapes inconsistent")
        if len(self.labels) != w.shape[0]:
            raise ValueError("label count != weight rows")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite classifier parameters")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def zeros(cls, labels: Sequence[str], dim: int,
              with_entities: bool = True) -> "ClassifierParams":
        f = 2 * dim if with_entities else dim
        return cls(weight=np.zeros((len(labels), f)), bias=np.zeros(len(labels)),
                   labels=tuple(labels))


def resolve_penalty(inst: Instance, cfg: TrainConfig) -> float:
    """Budget penalty used for this instance's soft mask."""
    if cfg.no_sparsity:
        return 0.0
    if cfg.penalty is not None:
        return cfg.penalty
    model = build_chain_model(inst, cfg.effective_edge_bonus,
                              cfg.effective_fraction)
    return tune_lambda(model)[0]


def mask_values(inst: Instance, cfg: TrainConfig,
                penalty: Optional[float] = None) -> np.ndarray:
    """Soft mask for an instance under the training configuration."""
    if penalty is None:
        penalty = resolve_penalty(inst, cfg)
    model = build_chain_model(inst, cfg.effective_edge_bonus,
                              cfg.effective_fraction)
    return soft_mask(model, RelaxConfig(penalty=penalty,
                                        temperature=cfg.temperature))


def feature_vector(inst: Instance, mask: np.ndarray,
                   cfg: TrainConfig) -> np.ndarray:
    """Masked mean embedding, optionally concatenated with the entity vector."""
    pooled = inst.embeddings @ np.asarray(mask, dtype=float) / len(inst)
    if cfg.no_entities:
        return pooled
    return np.concatenate([pooled, entity_vector(inst)])


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(inst: Instance, params: ClassifierParams,
            cfg: TrainConfig) -> np.ndarray:
    """Label distribution for one instance (soft-mask features)."""
    feat = feature_vector(inst, mask_values(inst, cfg), cfg)
    if feat.shape[0] != params.weight.shape[1]:
        raise ValueError(
            f"feature dim {feat.shape[0]} != weight cols {params.weight.shape[1]}")
    return _softmax(params.weight @ feat + params.bias)


def predict(inst: Instance, params: ClassifierParams, cfg: TrainConfig,
            mask: Optional[np.ndarray] = None) -> str:
    """Most probable label; with ``mask`` given, uses that mask's features."""
    if mask is None:
        probs = forward(inst, params, cfg)
    else:
        feat = feature_vector(inst, mask, cfg)
        probs = _softmax(params.weight @ feat + params.bias)
    return params.labels[int(np.argmax(probs))]


def loss(batch: Sequence[Instance], params: ClassifierParams,
         cfg: TrainConfig) -> float:
    """Mean negative log-likelihood over labeled instances."""
    if not batch:
        raise ValueError("empty batch")
    total = 0.0
    for inst in batch:
        if inst.label is None:
            raise ValueError("loss requires labeled instances")
        probs = forward(inst, params, cfg)
        idx = params.labels.index(inst.label)
        total += -np.log(max(probs[idx], 1e-300))
    return total / len(batch)


# --- differentiable path (torch) -------------------------------------------

def _torch_loss(emb, weight, bias, edge_bonus, inst: Instance,
                penalty: float, cfg: TrainConfig):
    """Single-instance NLL as a torch scalar; mirrors the numpy forward."""
    import torch

    n = len(inst)
    lo1, hi1 = inst.entity1_span
    lo2, hi2 = inst.entity2_span
    ent = emb[:, lo1:hi1 + 1].mean(dim=1) + emb[:, lo2:hi2 + 1].mean(dim=1)
    s = emb.T @ ent
    u = (s - penalty) / cfg.temperature
    if cfg.no_continuity:
        w = torch.zeros(max(n - 1, 0), dtype=emb.dtype)
    else:
        w = (edge_bonus / cfg.temperature).expand(max(n - 1, 0))
    alpha = [torch.stack([torch.zeros((), dtype=emb.dtype), u[0]])]
    for i in range(1, n):
        prev = alpha[-1]
        a0 = torch.logaddexp(prev[0], prev[1])
        a1 = u[i] + torch.logaddexp(prev[0], prev[1] + w[i - 1])
        alpha.append(torch.stack([a0, a1]))
    beta = [torch.zeros(2, dtype=emb.dtype)] * n
    for i in range(n - 2, -1, -1):
        nxt = beta[i + 1]
        nxt1 = u[i + 1] + nxt[1]
        beta[i] = torch.stack([torch.logaddexp(nxt[0], nxt1),
                               torch.logaddexp(nxt[0], nxt1 + w[i])])
    log_z = torch.logaddexp(alpha[-1][0], alpha[-1][1])
    p = torch.exp(torch.stack([alpha[i][1] + beta[i][1] for i in range(n)])
                  - log_z)
    pooled = emb @ p / n
    feat = pooled if cfg.no_entities else torch.cat([pooled, ent])
    logits = weight @ feat + bias
    return logits, p


def _torch_nll(emb, weight, bias, edge_bonus, inst, penalty, cfg, label_idx):
    import torch

    logits, _ = _torch_loss(emb, weight, bias, edge_bonus, inst, penalty, cfg)
    return -torch.log_softmax(logits, dim=0)[label_idx]


def grad_check(inst: Instance, params: ClassifierParams, cfg: TrainConfig,
               epsilon: float = 1e-5) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Checked parameters: every embedding entry, every classifier weight and
    bias entry, and the edge bonus scalar.  The budget penalty is resolved
    once at the base point and held fixed across perturbations.
    """
    import torch

    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    if inst.label is None:
        raise ValueError("grad_check requires a labeled instance")
    penalty = resolve_penalty(inst, cfg)
    label_idx = params.labels.index(inst.label)

    emb0 = torch.tensor(inst.embeddings, dtype=torch.float64)
    w0 = torch.tensor(params.weight, dtype=torch.float64)
    b0 = torch.tensor(params.bias, dtype=torch.float64)
    e0 = torch.tensor(float(cfg.effective_edge_bonus), dtype=torch.float64)

    def value(emb, w, b, e):
        return _torch_nll(emb, w, b, e, inst, penalty, cfg, label_idx)

    leaves = [t.clone().requires_grad_(True) for t in (emb0, w0, b0, e0)]
    out = value(*leaves)
    out.backward()
    grads = [t.grad.detach().clone() if t.grad is not None
             else torch.zeros_like(t) for t in leaves]

    max_err = 0.0
    for which, base in enumerate((emb0, w0, b0, e0)):
        flat = base.reshape(-1)
        for j in range(flat.numel()):
            args_p = [t.clone() for t in (emb0, w0, b0, e0)]
            args_m = [t.clone() for t in (emb0, w0, b0, e0)]
            args_p[which].reshape(-1)[j] += epsilon
            args_m[which].reshape(-1)[j] -= epsilon
            with torch.no_grad():
                fd = (value(*args_p) - value(*args_m)).item() / (2 * epsilon)
            an = grads[which].reshape(-1)[j].item()
            err = abs(an - fd) / max(abs(an), abs(fd), 1.0)
            max_err = max(max_err, err)
    return max_err


# --- training ---------------------------------------------------------------

def _check_dataset(dataset: Sequence[Instance]) -> Tuple[Tuple[str, ...], int]:
    if not dataset:
        raise ValueError("empty dataset")
    dims = {inst.dim for inst in dataset}
    if len(dims) != 1:
        raise ValueError(f"inconsistent embedding dims: {sorted(dims)}")
    labels = sorted({inst.label for inst in dataset if inst.label is not None})
    if any(inst.label is None for inst in dataset):
        raise ValueError("training requires labeled instances")
    return tuple(labels), dims.pop()


def _micro_f1_from_counts(pred_idx: np.ndarray, gold_idx: np.ndarray) -> float:
    return float(np.mean(pred_idx == gold_idx))


def train(dataset: Sequence[Instance],
          cfg: TrainConfig) -> Tuple[ClassifierParams, List[dict]]:
    """Full-batch gradient descent; returns params and per-epoch history.

    With a fixed edge bonus the soft masks do not change during training,
    so features are precomputed once and only the affine layer moves.
    """
    labels, dim = _check_dataset(dataset)
    if cfg.train_edge_bonus:
        return _train_torch(dataset, cfg, labels, dim)
    feats = np.stack([
        feature_vector(inst, mask_values(inst, cfg), cfg) for inst in dataset])
    gold = np.array([labels.index(inst.label) for inst in dataset])
    n, f = feats.shape
    c = len(labels)
    onehot = np.zeros((n, c))
    onehot[np.arange(n), gold] = 1.0
    weight = np.zeros((c, f))
    bias = np.zeros(c)
    history = []
    for _ in range(cfg.epochs):
        logits = feats @ weight.T + bias
        probs = _softmax(logits)
        nll = float(np.mean(-np.log(
            np.maximum(probs[np.arange(n), gold], 1e-300))))
        delta = (probs - onehot) / n
        weight -= cfg.learning_rate * (delta.T @ feats)
        bias -= cfg.learning_rate * delta.sum(axis=0)
        pred = np.argmax(probs, axis=1)
        history.append({"loss": nll,
                        "micro_f1": _micro_f1_from_counts(pred, gold)})
    params = ClassifierParams(weight=weight, bias=bias, labels=labels)
    return params, history


def _train_torch(dataset, cfg: TrainConfig, labels, dim):
    """Slow path: gradients flow through the relaxation into the edge bonus."""
    import torch

    c = len(labels)
    f = 2 * dim if not cfg.no_entities else dim
    weight = torch.zeros((c, f), dtype=torch.float64, requires_grad=True)
    bias = torch.zeros(c, dtype=torch.float64, requires_grad=True)
    edge = torch.tensor(float(cfg.effective_edge_bonus), dtype=torch.float64,
                        requires_grad=True)
    embs = [torch.tensor(inst.embeddings, dtype=torch.float64)
            for inst in dataset]
    gold = [labels.index(inst.label) for inst in dataset]
    history = []
    for _ in range(cfg.epochs):
        # Penalties depend on the current edge bonus; retune each epoch and
        # hold them fixed within the step.
        cfg_now = replace(cfg, edge_bonus=float(edge.detach()),
                          no_continuity=cfg.no_continuity)
        penalties = [resolve_penalty(inst, cfg_now) for inst in dataset]
        total = torch.zeros((), dtype=torch.float64)
        correct = 0
        for inst, emb, pen, y in zip(dataset, embs, penalties, gold):
            nll = _torch_nll(emb, weight, bias, edge, inst, pen, cfg, y)
            total = total + nll
            logits, _ = _torch_loss(emb, weight, bias, edge, inst, pen, cfg)
            correct += int(torch.argmax(logits).item() == y)
        total = total / len(dataset)
        for t in (weight, bias, edge):
            if t.grad is not None:
                t.grad.zero_()
        total.backward()
        with torch.no_grad():
            weight -= cfg.learning_rate * weight.grad
            bias -= cfg.learning_rate * bias.grad
            edge -= cfg.learning_rate * edge.grad
            edge.clamp_(min=0.0)
        history.append({"loss": float(total.detach()),
                        "micro_f1": correct / len(dataset),
                        "edge_bonus": float(edge.detach())})
    params = ClassifierParams(weight=weight.detach().numpy(),
                              bias=bias.detach().numpy(), labels=labels)
    return params, history
