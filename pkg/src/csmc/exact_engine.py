"""Brute-force enumeration engine for verifying samplers on tiny state spaces.

Everything the stochastic samplers do by simulation is recomputed here as
explicit matrix algebra: forward corruption likelihoods, multi-jump reverse
kernels under the oracle denoiser, the noise-and-denoise proposal kernel,
and the Metropolis kernel built from it. Stationarity and reversibility then
reduce to residual norms that must vanish to floating-point precision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Sequence, Vocabulary
from .csmc_sampler import CsmcConfig
from .denoiser import OracleDenoiser
from .forward_process import (
    ModelKind,
    TransitionModel,
    marginal_matrix,
    posterior_window_tensor,
)
from .rewards import RewardFn, evaluate_reward
from .reverse_sampler import reverse_grid

MAX_ENUMERATED_STATES = 100_000


def _enumerate_tokens(num_tokens: int, length: int) -> np.ndarray:
    """All length-L token vectors over an alphabet, lexicographic, shape (n^L, L)."""
    count = num_tokens**length
    if count > MAX_ENUMERATED_STATES:
        raise ValueError(
            f"{num_tokens}^{length} = {count} states exceeds the enumeration cap "
            f"of {MAX_ENUMERATED_STATES}"
        )
    return np.asarray(
        list(itertools.product(range(num_tokens), repeat=length)), dtype=np.int64
    ).reshape(count, length)


@dataclass(frozen=True)
class EnumeratedSpace:
    """Every clean sequence of a given length, in lexicographic order."""

    vocab: Vocabulary
    length: int
    tokens: np.ndarray

    @classmethod
    def build(cls, vocab: Vocabulary, length: int) -> "EnumeratedSpace":
        if length < 1:
            raise ValueError(f"length must be positive, got {length}")
        arr = _enumerate_tokens(vocab.size, length)
        arr.flags.writeable = False
        return cls(vocab=vocab, length=length, tokens=arr)

    @property
    def size(self) -> int:
        return self.tokens.shape[0]

    def sequences(self) -> list[Sequence]:
        return [Sequence.from_array(row) for row in self.tokens]

    def index_of(self, seq: Sequence) -> int:
        """Lexicographic rank of a clean sequence."""
        idx = 0
        for tok in seq.tokens:
            if not self.vocab.is_clean_token(tok):
                raise ValueError(f"token {tok} is not a clean token")
            idx = idx * self.vocab.size + tok
        return idx

    def data_vector(self, support: tuple[Sequence, ...], probs: np.ndarray) -> np.ndarray:
        """Embed a finite-support distribution as a dense vector over the space."""
        vec = np.zeros(self.size)
        for seq, prob in zip(support, probs):
            vec[self.index_of(seq)] = prob
        return vec


def reward_vector(space: EnumeratedSpace, reward: RewardFn) -> np.ndarray:
    """Evaluate a reward on every sequence of the space."""
    return np.asarray([evaluate_reward(reward, seq) for seq in space.sequences()])


def exact_target(space: EnumeratedSpace, p_pre: np.ndarray, rewards: np.ndarray, beta: float) -> np.ndarray:
    """Normalized reward-tilted distribution exp(r / beta) * p_pre, in log space.

    Log-space accumulation keeps small beta (strong tilts) from overflowing.
    """
    p_pre = np.asarray(p_pre, dtype=np.float64)
    rewards = np.asarray(rewards, dtype=np.float64)
    if p_pre.shape != (space.size,) or rewards.shape != (space.size,):
        raise ValueError("p_pre and rewards must be vectors over the space")
    if not (math.isfinite(beta) and beta > 0.0):
        raise ValueError(f"beta must be positive and finite, got {beta}")
    if np.any(p_pre < 0) or abs(p_pre.sum() - 1.0) > 1e-9:
        raise ValueError("p_pre must be a probability vector")
    with np.errstate(divide="ignore"):
        log_w = np.where(p_pre > 0, rewards / beta + np.log(np.where(p_pre > 0, p_pre, 1.0)), -np.inf)
    shift = log_w.max()
    if not np.isfinite(shift):
        raise ValueError("target has no support: p_pre is zero everywhere")
    w = np.exp(log_w - shift)
    return w / w.sum()


def _noisy_tokens(model: TransitionModel, length: int) -> np.ndarray:
    return _enumerate_tokens(model.num_states, length)


def _forward_likelihoods(
    model: TransitionModel, clean: np.ndarray, noisy: np.ndarray, t: int
) -> np.ndarray:
    """Matrix of p_t(x_t | x_0) for every clean row and noisy column."""
    marg = marginal_matrix(model, t)
    return np.prod(marg[clean[:, None, :], noisy[None, :, :]], axis=2)


def exact_mstep_kernel(
    space: EnumeratedSpace,
    model: TransitionModel,
    denoiser: OracleDenoiser,
    t: int,
    num_jumps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact law of the multi-jump reverse pass started at time t.

    Returns (noisy_states, kernel) where kernel[b, j] is the probability that
    a reverse pass from noisy state b ends at clean sequence j of the space.
    Noisy states that are impossible under every support point get an
    all-zero row; reachable dynamics never enter them.
    """
    noisy = _noisy_tokens(model, space.length)
    support = denoiser.support_tokens
    probs = denoiser.support_probs
    grid = reverse_grid(t, num_jumps)
    current = np.eye(noisy.shape[0])
    for upper, lower in zip(grid[:-1], grid[1:]):
        likes = np.prod(
            marginal_matrix(model, upper)[support[None, :, :], noisy[:, None, :]], axis=2
        )
        weights = likes * probs[None, :]
        totals = weights.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            denoiser_post = np.where(totals > 0, weights / totals, 0.0)
        if lower == 0:
            jump_to_support = denoiser_post
            final = current @ jump_to_support
            kernel = np.zeros((noisy.shape[0], space.size))
            support_cols = [space.index_of(Sequence.from_array(row)) for row in support]
            kernel[:, support_cols] = final
            return noisy, kernel
        tensor = posterior_window_tensor(model, lower, upper)
        per_position = tensor[support[:, None, None, :], noisy[None, :, None, :], noisy[None, None, :, :]]
        jump = np.einsum("bj,jbc->bc", denoiser_post, np.prod(per_position, axis=3))
        current = current @ jump
    raise AssertionError("reverse grid must end at time zero")


def exact_proposal_kernel(
    space: EnumeratedSpace,
    model: TransitionModel,
    denoiser: OracleDenoiser,
    config: CsmcConfig,
) -> np.ndarray:
    """Clean-to-clean proposal kernel: corrupt to a window time, reverse in M jumps.

    Averages uniformly over the integer timesteps of the window, matching the
    sampler's draw. Rows must be exact probability vectors; a row that loses
    mass means the proposal is undefined there (a masked-model state outside
    the data support) and is reported as an error.
    """
    window = config.timestep_window(model.num_steps)
    q = np.zeros((space.size, space.size))
    for t in window:
        noisy, reverse_kernel = exact_mstep_kernel(space, model, denoiser, t, config.num_jumps)
        forward = _forward_likelihoods(model, space.tokens, noisy, t)
        q += forward @ reverse_kernel
    q /= len(window)
    row_err = np.abs(q.sum(axis=1) - 1.0)
    if row_err.max() > 1e-9:
        bad = int(np.argmax(row_err))
        raise ValueError(
            f"proposal kernel row {bad} sums to {q[bad].sum():.12f}; the reverse pass is "
            "undefined from sequences the data distribution cannot produce"
        )
    return q


def exact_mh_kernel(q_prop: np.ndarray, rewards: np.ndarray, beta: float) -> np.ndarray:
    """Metropolis kernel: off-diagonal flow q * min(1, exp(dr / beta)), rest rejected.

    The diagonal absorbs all rejected mass; a diagonal entry below -1e-12
    indicates a broken proposal kernel and is rejected.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    n = q_prop.shape[0]
    if q_prop.shape != (n, n) or rewards.shape != (n,):
        raise ValueError("kernel and rewards shapes do not match")
    diff = (rewards[None, :] - rewards[:, None]) / beta
    accept = np.where(diff >= 0, 1.0, np.exp(np.minimum(diff, 0.0)))
    kernel = q_prop * accept
    off_diag = kernel.sum(axis=1) - np.diag(kernel)
    diagonal = 1.0 - off_diag
    if diagonal.min() < -1e-12:
        raise ValueError(f"Metropolis kernel has negative diagonal {diagonal.min()}")
    np.fill_diagonal(kernel, np.maximum(diagonal, 0.0))
    return kernel


def stationarity_residual(kernel: np.ndarray, dist: np.ndarray) -> float:
    """L1 norm of dist @ kernel - dist; zero iff dist is stationary."""
    return float(np.abs(dist @ kernel - dist).sum())


def reversibility_residual(q_prop: np.ndarray, dist: np.ndarray) -> float:
    """Maximum detailed-balance violation |p_a q_ab - p_b q_ba| over all pairs."""
    flow = dist[:, None] * q_prop
    return float(np.abs(flow - flow.T).max())


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance, half the L1 distance."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def power_iteration(
    kernel: np.ndarray,
    init: np.ndarray | None = None,
    tol: float = 1e-13,
    max_iters: int = 200_000,
) -> np.ndarray:
    """Left fixed point of a row-stochastic kernel by repeated multiplication."""
    n = kernel.shape[0]
    dist = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=np.float64)
    for _ in range(max_iters):
        nxt = dist @ kernel
        if np.abs(nxt - dist).sum() < tol:
            return nxt / nxt.sum()
        dist = nxt
    raise RuntimeError(f"power iteration did not converge within {max_iters} iterations")


@dataclass(frozen=True)
class VerificationReport:
    """Residuals from checking one fixture end to end."""

    num_states: int
    stationarity: float
    reversibility: float
    power_iteration_tv: float
    proposal_row_sum_error: float
    mh_row_sum_error: float

    def passes(
        self,
        stationarity_tol: float = 1e-8,
        reversibility_tol: float = 1e-9,
        power_tv_tol: float = 1e-6,
    ) -> bool:
        return (
            self.stationarity < stationarity_tol
            and self.reversibility < reversibility_tol
            and self.power_iteration_tv < power_tv_tol
        )


def verify_fixture(
    space: EnumeratedSpace,
    model: TransitionModel,
    denoiser: OracleDenoiser,
    reward: RewardFn,
    config: CsmcConfig,
) -> tuple[VerificationReport, dict[str, np.ndarray]]:
    """Build all exact objects for a fixture and measure every residual.

    Returns the report plus the underlying arrays (proposal kernel, chain
    kernel, target, rewards, pretrained vector) for export or inspection.
    """
    p_pre = space.data_vector(denoiser.data.support, denoiser.data.probs)
    rewards = reward_vector(space, reward)
    target = exact_target(space, p_pre, rewards, config.beta)
    q_prop = exact_proposal_kernel(space, model, denoiser, config)
    chain_kernel = exact_mh_kernel(q_prop, rewards, config.beta)
    stationary = power_iteration(chain_kernel)
    report = VerificationReport(
        num_states=space.size,
        stationarity=stationarity_residual(chain_kernel, target),
        reversibility=reversibility_residual(q_prop, p_pre),
        power_iteration_tv=tv_distance(stationary, target),
        proposal_row_sum_error=float(np.abs(q_prop.sum(axis=1) - 1.0).max()),
        mh_row_sum_error=float(np.abs(chain_kernel.sum(axis=1) - 1.0).max()),
    )
    arrays = {
        "proposal_kernel": q_prop,
        "chain_kernel": chain_kernel,
        "target": target,
        "rewards": rewards,
        "p_pre": p_pre,
        "power_iteration_dist": stationary,
    }
    return report, arrays
