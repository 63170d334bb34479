"""Relaxation of the budgeted chain: Gibbs marginals, sampling, penalty tuning.

The hard budget is replaced by a per-token penalty, giving a smooth Gibbs
distribution over masks.  Marginals come from an exact log-space
forward-backward pass; approximate samples come from Perturb-and-MAP
(Gumbel noise on the unary potentials followed by an unbudgeted Viterbi
solve); the penalty itself is chosen by bisection against feasibility of
the inner MAP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import ChainModel, Marginals, Mask, RelaxConfig, score_of
from .exact import Solution, dp_map, dp_map_unbudgeted, viterbi_unbudgeted_batch

BISECT_ITERS = 100
GAP_SNAP = 1e-12


@dataclass(frozen=True)
class SampleBatch:
    """Masks drawn from the relaxed distribution plus their per-token rates."""

    masks: np.ndarray
    empirical_freq: np.ndarray
    seed: int


def chain_marginals(model: ChainModel, cfg: RelaxConfig) -> Marginals:
    """Exact P(m_i = 1) and logZ under the penalty-shifted Gibbs distribution.

    Potentials are (s_i - penalty) / T for selecting token i and r_i / T
    for each selected adjacent pair.  The constant penalty * budget term
    shifts logZ and leaves the marginals untouched.
    """
    n = len(model)
    shift = cfg.penalty * model.budget / cfg.temperature
    if n == 0:
        return Marginals(probs=np.zeros(0), logZ=shift)
    u = (model.unary - cfg.penalty) / cfg.temperature
    w = model.edge / cfg.temperature
    alpha = np.zeros((n, 2))
    alpha[0] = [0.0, u[0]]
    for i in range(1, n):
        stay0 = np.logaddexp(alpha[i - 1, 0], alpha[i - 1, 1])
        alpha[i, 0] = stay0
        alpha[i, 1] = u[i] + np.logaddexp(alpha[i - 1, 0],
                                          alpha[i - 1, 1] + w[i - 1])
    beta = np.zeros((n, 2))
    for i in range(n - 2, -1, -1):
        nxt1 = u[i + 1] + beta[i + 1, 1]
        beta[i, 0] = np.logaddexp(beta[i + 1, 0], nxt1)
        beta[i, 1] = np.logaddexp(beta[i + 1, 0], nxt1 + w[i])
    log_z = np.logaddexp(alpha[-1, 0], alpha[-1, 1])
    probs = np.exp(alpha[:, 1] + beta[:, 1] - log_z)
    return Marginals(probs=np.clip(probs, 0.0, 1.0), logZ=float(log_z + shift))


def soft_mask(model: ChainModel, cfg: RelaxConfig) -> np.ndarray:
    """Continuous stand-in for the binary mask: the exact chain marginals."""
    return chain_marginals(model, cfg).probs


def perturb_and_map_sample(model: ChainModel, cfg: RelaxConfig,
                           n_samples: int,
                           noise_scale: float = 1.0) -> SampleBatch:
    """Approximate Gibbs samples via Gumbel-perturbed MAP solves.

    Each sample adds independent Gumbel noise to both states of every
    token's unary potential and solves the unbudgeted chain MAP.  Noise is
    drawn sample-major from a single seeded stream, so requesting more
    samples never changes earlier ones.  noise_scale=0 collapses every
    sample onto the unperturbed MAP mask.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = len(model)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    gumbel = rng.gumbel(size=(n_samples, n, 2))
    delta = noise_scale * cfg.temperature * (gumbel[:, :, 1] - gumbel[:, :, 0])
    perturbed = (model.unary - cfg.penalty)[None, :] + delta
    bits, _ = viterbi_unbudgeted_batch(perturbed, model.edge)
    freq = bits.mean(axis=0) if n_samples else np.zeros(n)
    return SampleBatch(masks=bits, empirical_freq=freq, seed=cfg.seed)


def tune_lambda(model: ChainModel,
                cfg: RelaxConfig = RelaxConfig()) -> Tuple[float, Solution, float]:
    """Smallest penalty whose unbudgeted MAP respects the budget.

    Bisects the penalty on [0, max(s) + max(r) + 1]; the upper endpoint
    always yields the empty (feasible) mask.  The returned mask is the
    penalty-shifted solution re-solved under the hard budget at the lower
    bisection endpoint, which picks the best K tokens when the boundary
    penalty ties several selections.  Returns (penalty, feasible solution,
    duality gap); the gap is the relaxed optimum minus the feasible
    solution's budgeted score and is always >= 0.
    """
    k = model.budget
    sol = dp_map_unbudgeted(model, 0.0)
    if sol.mask.count <= k:
        feasible = Solution(mask=Mask.of(model, sol.mask.bits),
                            score=float(score_of(model, sol.mask.bits)),
                            solver_tag="dp")
        return 0.0, feasible, 0.0
    hi = float(np.max(model.unary)) + \
        (float(np.max(model.edge)) if len(model.edge) else 0.0) + 1.0
    lo = 0.0
    sol_hi = dp_map_unbudgeted(model, hi)
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        cand = dp_map_unbudgeted(model, mid)
        if cand.mask.count <= k:
            hi, sol_hi = mid, cand
        else:
            lo = mid
    shifted = ChainModel(model.unary - lo, model.edge, k)
    bits = dp_map(shifted).mask.bits
    feasible_score = float(score_of(model, bits))
    # Weak-duality bound at the returned penalty; both sides go through
    # score_of so a zero gap is exact when the masks coincide.
    bound = float(score_of(model, sol_hi.mask.bits, enforce_budget=False)) \
        + hi * (k - sol_hi.mask.count)
    gap = max(bound - feasible_score, 0.0)
    if gap <= GAP_SNAP * (1.0 + abs(bound)):
        gap = 0.0
    return hi, Solution(mask=Mask.of(model, bits), score=feasible_score,
                        solver_tag="dp"), gap
