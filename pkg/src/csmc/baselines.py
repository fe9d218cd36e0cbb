"""Guidance baselines: best-of-n, particle filtering, and stepwise candidate selection.

All three steer generation using rewards of denoiser predictions at
intermediate noise levels (except best-of-n, which only scores finished
samples). That makes them sensitive to how informative those intermediate
predictions are, which is exactly the axis on which the clean-sample chain
differs: it only ever scores clean sequences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Sequence, sample_index, sample_rows
from .denoiser import CountingDenoiser, Denoiser
from .forward_process import TransitionModel
from .rewards import RewardFn, evaluate_reward
from .reverse_sampler import denoise_step, generate, prior_sample

PROPORTIONAL_FLOOR = 1e-12


class SelectionRule(enum.Enum):
    EXPONENTIAL = "exponential"
    PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class BaselineConfig:
    """Candidate count, reward temperature, and candidate-selection rule."""

    n: int
    beta: float = 0.02
    selection_rule: SelectionRule = SelectionRule.EXPONENTIAL

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one candidate, got {self.n}")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")


def intermediate_reward(
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    x_t: Sequence,
    t: int,
    rng: np.random.Generator,
) -> float:
    """Reward of a one-shot clean prediction from a noisy state; at t=0, of the state itself."""
    if t == 0:
        return evaluate_reward(reward, x_t)
    return evaluate_reward(reward, denoiser.sample_x0(x_t, t, rng))


def selection_weights(
    rewards: np.ndarray, config: BaselineConfig
) -> tuple[np.ndarray, bool]:
    """Normalized candidate weights plus a flag for degenerate uniform fallback.

    Exponential weighting is computed in log space so large reward over beta
    ratios saturate instead of overflowing. If the weights still manage to
    be unusable, selection falls back to uniform and reports it.
    """
    r = np.asarray(rewards, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        if config.selection_rule is SelectionRule.EXPONENTIAL:
            z = r / config.beta
            w = np.exp(z - z.max())
        else:
            w = np.maximum(r - r.min(), PROPORTIONAL_FLOOR)
    total = w.sum()
    if not np.all(np.isfinite(w)) or total <= 0.0:
        return np.full(r.shape, 1.0 / r.shape[0]), True
    return w / total, False


@dataclass(frozen=True)
class BonResult:
    sequence: Sequence
    candidate_rewards: np.ndarray
    denoiser_calls: int
    reward_calls: int

    @property
    def reward(self) -> float:
        return float(self.candidate_rewards.max())


def best_of_n(
    config: BaselineConfig,
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    rng: np.random.Generator,
) -> BonResult:
    """Generate n full samples and keep the highest-reward one (first wins ties)."""
    counting = CountingDenoiser(denoiser)
    candidates = [generate(model, counting, rng) for _ in range(config.n)]
    rewards = np.asarray([evaluate_reward(reward, c) for c in candidates])
    winner = int(np.argmax(rewards))
    return BonResult(candidates[winner], rewards, counting.calls, config.n)


@dataclass(frozen=True)
class SmcResult:
    particles: tuple[Sequence, ...]
    denoiser_calls: int
    reward_calls: int
    degenerate_steps: int


def smc(
    config: BaselineConfig,
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    rng: np.random.Generator,
) -> SmcResult:
    """Particle filter: denoise, weight by predicted reward, multinomially resample.

    Runs n particles through every timestep; after each step the population
    is resampled in proportion to exp(reward of the particles' clean
    predictions over beta). Weight normalization is exact to within 1e-10.
    """
    counting = CountingDenoiser(denoiser)
    particles = [prior_sample(model, denoiser.length, rng) for _ in range(config.n)]
    reward_calls = 0
    degenerate = 0
    for t in range(model.num_steps, 0, -1):
        particles = [denoise_step(model, counting, p, t, rng) for p in particles]
        step_rewards = np.asarray(
            [intermediate_reward(model, counting, reward, p, t - 1, rng) for p in particles]
        )
        reward_calls += config.n
        weights, fell_back = selection_weights(step_rewards, config)
        degenerate += int(fell_back)
        idx = sample_rows(np.tile(weights, (config.n, 1)), rng)
        particles = [particles[i] for i in idx]
    return SmcResult(tuple(particles), counting.calls, reward_calls, degenerate)


@dataclass(frozen=True)
class SvddResult:
    sequence: Sequence
    denoiser_calls: int
    reward_calls: int
    degenerate_steps: int


def svdd(
    config: BaselineConfig,
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    rng: np.random.Generator,
) -> SvddResult:
    """Single trajectory that picks among n candidate next states at every step."""
    counting = CountingDenoiser(denoiser)
    x = prior_sample(model, denoiser.length, rng)
    reward_calls = 0
    degenerate = 0
    for t in range(model.num_steps, 0, -1):
        candidates = [denoise_step(model, counting, x, t, rng) for _ in range(config.n)]
        step_rewards = np.asarray(
            [intermediate_reward(model, counting, reward, c, t - 1, rng) for c in candidates]
        )
        reward_calls += config.n
        weights, fell_back = selection_weights(step_rewards, config)
        degenerate += int(fell_back)
        x = candidates[sample_index(weights, rng)]
    return SvddResult(x, counting.calls, reward_calls, degenerate)
