"""Metropolis-Hastings over clean sequences with diffusion-based proposals.

The chain targets the reward-tilted distribution

    p_beta(x) proportional to exp(r(x) / beta) * p_pre(x),

where p_pre is the distribution the diffusion model generates. A proposal
corrupts the current clean sequence to a random intermediate time and runs a
few reverse jumps back to a clean sequence. Because that noise-and-denoise
kernel is reversible with respect to p_pre (exactly so under the oracle
denoiser), the Metropolis correction reduces to a pure reward ratio, so the
pretrained model's density never needs to be evaluated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import Sequence, chain_rng
from .denoiser import CountingDenoiser, Denoiser
from .forward_process import TransitionModel, corrupt
from .rewards import RewardFn, evaluate_reward
from .reverse_sampler import generate, partial_reverse


@dataclass(frozen=True)
class CsmcConfig:
    """Chain hyperparameters.

    beta is the reward temperature, iterations the number of proposals per
    run, t_lo/t_hi the corruption-time window as fractions of the schedule,
    num_jumps the reverse-pass length, and num_chains the batch width over
    which iterations and samples are split.
    """

    beta: float = 0.02
    iterations: int = 1000
    num_samples: int = 16
    t_lo: float = 0.2
    t_hi: float = 0.5
    num_jumps: int = 5
    burn_in_fraction: float = 0.5
    num_chains: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not 0.0 < self.t_lo <= self.t_hi <= 1.0:
            raise ValueError(f"need 0 < t_lo <= t_hi <= 1, got t_lo={self.t_lo} t_hi={self.t_hi}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be nonnegative, got {self.iterations}")
        if self.num_samples < 1:
            raise ValueError(f"need at least one sample, got {self.num_samples}")
        if self.num_jumps < 1:
            raise ValueError(f"need at least one reverse jump, got {self.num_jumps}")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError(f"burn-in fraction must be in [0, 1), got {self.burn_in_fraction}")
        if self.num_chains < 1:
            raise ValueError(f"need at least one chain, got {self.num_chains}")

    def timestep_window(self, num_steps: int) -> list[int]:
        """Integer corruption times covered by the [t_lo, t_hi] fraction window."""
        lo = max(1, math.ceil(self.t_lo * num_steps - 1e-9))
        hi = min(num_steps, math.floor(self.t_hi * num_steps + 1e-9))
        if lo > hi:
            raise ValueError(
                f"timestep window [{self.t_lo}, {self.t_hi}] contains no integer step "
                f"of a {num_steps}-step schedule"
            )
        return list(range(lo, hi + 1))


@dataclass(frozen=True)
class ProposalRecord:
    sequence: Sequence
    t: int
    accepted: bool
    accept_prob: float


@dataclass(frozen=True)
class ChainResult:
    """Full chain trajectory plus bookkeeping for diagnostics and budgets."""

    states: tuple[Sequence, ...]
    rewards: np.ndarray
    proposals: tuple[ProposalRecord, ...]
    denoiser_calls: int
    reward_calls: int


def acceptance(r_new: float, r_old: float, beta: float) -> tuple[float, float]:
    """Metropolis ratio alpha = exp((r_new - r_old) / beta) and min(1, alpha).

    Never overflows: a nonnegative exponent short-circuits to acceptance
    probability 1 and alpha saturates at infinity.
    """
    if not (math.isfinite(r_new) and math.isfinite(r_old)):
        raise ValueError(f"rewards must be finite, got r_new={r_new} r_old={r_old}")
    if not (math.isfinite(beta) and beta > 0.0):
        raise ValueError(f"beta must be positive and finite, got {beta}")
    log_alpha = (r_new - r_old) / beta
    if log_alpha >= 0.0:
        alpha = math.exp(log_alpha) if log_alpha < 700.0 else math.inf
        return alpha, 1.0
    alpha = math.exp(log_alpha)
    return alpha, alpha


def propose(
    config: CsmcConfig,
    model: TransitionModel,
    denoiser: Denoiser,
    x0: Sequence,
    rng: np.random.Generator,
) -> tuple[Sequence, int]:
    """Noise the current clean sequence and reverse it back to a clean proposal."""
    window = config.timestep_window(model.num_steps)
    t = window[int(rng.integers(len(window)))]
    x_t = corrupt(model, x0, t, rng)
    x_new = partial_reverse(model, denoiser, x_t, t, config.num_jumps, rng)
    return x_new, t


def run_chain(
    config: CsmcConfig,
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    rng: np.random.Generator | None = None,
) -> ChainResult:
    """Run one chain of ``config.iterations`` proposals from a fresh model draw.

    The current state's reward is cached, so each iteration costs exactly one
    new reward evaluation plus one corruption and one reverse pass.
    """
    if rng is None:
        rng = chain_rng(config.seed, 0)
    counting = CountingDenoiser(denoiser)
    x = generate(model, counting, rng)
    r = evaluate_reward(reward, x)
    states = [x]
    rewards = [r]
    proposals: list[ProposalRecord] = []
    for _ in range(config.iterations):
        x_prop, t = propose(config, model, counting, x, rng)
        r_prop = evaluate_reward(reward, x_prop)
        _, accept_prob = acceptance(r_prop, r, config.beta)
        accepted = rng.random() < accept_prob
        if accepted:
            x, r = x_prop, r_prop
        proposals.append(ProposalRecord(x_prop, t, accepted, accept_prob))
        states.append(x)
        rewards.append(r)
    return ChainResult(
        states=tuple(states),
        rewards=np.asarray(rewards),
        proposals=tuple(proposals),
        denoiser_calls=counting.calls,
        reward_calls=config.iterations + 1,
    )


def retained_length(num_states: int, burn_in_fraction: float) -> int:
    """States left after discarding the first ceil(burn_in_fraction * n)."""
    return num_states - math.ceil(burn_in_fraction * num_states)


def draw_samples(
    chain: ChainResult, num_samples: int, burn_in_fraction: float = 0.5
) -> list[Sequence]:
    """Thin the post-burn-in trajectory to ``num_samples`` evenly spaced states.

    With two or more samples the first and last retained states are always
    included; a single sample is the final state.
    """
    if num_samples < 0:
        raise ValueError(f"sample count must be nonnegative, got {num_samples}")
    if num_samples == 0:
        return []
    total = len(chain.states)
    discard = math.ceil(burn_in_fraction * total)
    retained = chain.states[discard:]
    available = len(retained)
    if num_samples > available:
        raise ValueError(
            f"requested {num_samples} samples but only {available} states remain "
            f"after burn-in of {discard}"
        )
    if num_samples == 1:
        return [retained[-1]]
    idx = [round(j * (available - 1) / (num_samples - 1)) for j in range(num_samples)]
    return [retained[i] for i in idx]


@dataclass(frozen=True)
class BatchResult:
    """Pooled samples plus the underlying per-chain trajectories."""

    samples: tuple[Sequence, ...]
    chains: tuple[ChainResult, ...]

    @property
    def denoiser_calls(self) -> int:
        return sum(chain.denoiser_calls for chain in self.chains)

    @property
    def reward_calls(self) -> int:
        return sum(chain.reward_calls for chain in self.chains)


def run_batched(
    config: CsmcConfig,
    model: TransitionModel,
    denoiser: Denoiser,
    reward: RewardFn,
    parallel: bool = False,
) -> BatchResult:
    """Split the iteration budget across ``config.num_chains`` independent chains.

    Chain i runs on its own stream keyed by (seed, i) with floor(K / B)
    iterations, and contributes floor(S / B) samples plus one extra for the
    first S mod B chains. Results are identical whether chains run serially
    or in parallel.
    """
    num_chains = config.num_chains
    per_chain_iters = config.iterations // num_chains
    if config.iterations > 0:
        per_chain_iters = max(1, per_chain_iters)
    base, extra = divmod(config.num_samples, num_chains)
    quotas = [base + (1 if i < extra else 0) for i in range(num_chains)]
    available = retained_length(per_chain_iters + 1, config.burn_in_fraction)
    if quotas[0] > available:
        raise ValueError(
            f"chains of {per_chain_iters} iterations retain {available} states after "
            f"burn-in, cannot draw {quotas[0]} samples from one chain"
        )
    chain_config = replace(config, iterations=per_chain_iters, num_chains=1)

    def one_chain(chain_id: int) -> ChainResult:
        return run_chain(chain_config, model, denoiser, reward, chain_rng(config.seed, chain_id))

    if parallel and num_chains > 1:
        with ThreadPoolExecutor(max_workers=num_chains) as pool:
            chains = list(pool.map(one_chain, range(num_chains)))
    else:
        chains = [one_chain(i) for i in range(num_chains)]
    samples: list[Sequence] = []
    for chain, quota in zip(chains, quotas):
        samples.extend(draw_samples(chain, quota, config.burn_in_fraction))
    return BatchResult(samples=tuple(samples), chains=tuple(chains))
