"""Shared fixture builders and small independent oracles for the tests.

Everything numeric that a test freezes was first computed here (or by hand)
through a route independent of the code under test: explicit alpha-bar
arithmetic, direct enumeration over tiny spaces, or closed-form formulas.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from csmc import (
    CsmcConfig,
    DataDistribution,
    GatedBracketReward,
    ModelKind,
    NoiseSchedule,
    PatternReward,
    Sequence,
    TransitionModel,
    Vocabulary,
    linear_schedule,
)


def make_model(
    kind: str = "masked",
    vocab_size: int = 2,
    num_steps: int = 4,
    glyphs: tuple[str, ...] | None = None,
) -> TransitionModel:
    model_kind = ModelKind(kind)
    vocab = Vocabulary(
        size=vocab_size,
        mask_index=vocab_size if model_kind is ModelKind.MASKED else None,
        glyphs=glyphs,
    )
    return TransitionModel(kind=model_kind, schedule=linear_schedule(num_steps), vocab=vocab)


def all_sequences(vocab_size: int, length: int) -> list[Sequence]:
    return [
        Sequence(tokens) for tokens in itertools.product(range(vocab_size), repeat=length)
    ]


def full_support_data(vocab_size: int, length: int, seed: int = 2024) -> DataDistribution:
    """Random strictly positive distribution over every clean sequence."""
    support = tuple(all_sequences(vocab_size, length))
    rng = np.random.default_rng(seed)
    weights = rng.random(len(support)) + 0.5
    return DataDistribution(support, weights / weights.sum())


def two_state_data() -> DataDistribution:
    return DataDistribution(
        support=(Sequence((0,)), Sequence((1,))), probs=np.asarray([0.75, 0.25])
    )


@dataclass(frozen=True)
class Fixture:
    model: TransitionModel
    data: DataDistribution
    reward: object
    config: CsmcConfig


def bracket_fixture(
    beta: float = 0.1,
    iterations: int = 50_000,
    num_samples: int = 16,
    num_chains: int = 1,
    seed: int = 11,
) -> Fixture:
    """81-state masked fixture with the brittle balanced-bracket reward."""
    model = make_model("masked", vocab_size=3, num_steps=8, glyphs=("(", ")", ".", "?"))
    data = full_support_data(3, 4, seed=2024)
    reward = GatedBracketReward(open_token=0, close_token=1)
    config = CsmcConfig(
        beta=beta,
        iterations=iterations,
        num_samples=num_samples,
        t_lo=0.25,
        t_hi=1.0,
        num_jumps=4,
        burn_in_fraction=0.5,
        num_chains=num_chains,
        seed=seed,
    )
    return Fixture(model, data, reward, config)


def low_density_fixture(seed: int = 0) -> Fixture:
    """Masked fixture whose pattern-reward optimum has data probability 0.005.

    Support: the optimum 012012, twelve sequences containing one occurrence
    of 012 (reward 0.5), and twenty-seven with none (reward 0). The reverse
    grid always uses exactly num_jumps jumps because every window timestep
    exceeds num_jumps, which pins the denoiser-call budget exactly.
    """
    model = make_model("masked", vocab_size=4, num_steps=6)
    reward = PatternReward((0, 1, 2))
    optimum = Sequence((0, 1, 2, 0, 1, 2))
    rng = np.random.default_rng(505)
    half: list[Sequence] = []
    zero: list[Sequence] = []
    seen = {optimum.tokens}
    while len(half) < 12 or len(zero) < 27:
        seq = Sequence(tuple(int(x) for x in rng.integers(0, 4, size=6)))
        if seq.tokens in seen:
            continue
        score = reward(seq)
        if score == 0.5 and len(half) < 12:
            half.append(seq)
            seen.add(seq.tokens)
        elif score == 0.0 and len(zero) < 27:
            zero.append(seq)
            seen.add(seq.tokens)
    support = (optimum, *half, *zero)
    probs = np.asarray([0.005] + [0.3 / 12] * 12 + [0.695 / 27] * 27)
    data = DataDistribution(support, probs)
    config = CsmcConfig(
        beta=0.02,
        iterations=1598,
        num_samples=10,
        t_lo=0.6,
        t_hi=1.0,
        num_jumps=3,
        burn_in_fraction=0.5,
        num_chains=1,
        seed=seed,
    )
    return Fixture(model, data, reward, config)


def empirical_law(states: list[Sequence] | tuple[Sequence, ...], index_of,
                  num_states: int) -> np.ndarray:
    counts = np.zeros(num_states)
    for state in states:
        counts[index_of(state)] += 1
    return counts / counts.sum()


def survival(schedule: NoiseSchedule, s: int, t: int) -> float:
    """Alpha-bar ratio computed directly from the schedule array."""
    return float(schedule.alpha_bar[t] / schedule.alpha_bar[s])


def masked_marginal_row(alpha_bar_t: float, vocab_size: int, x0: int) -> np.ndarray:
    """Closed-form masked corruption marginal written out longhand."""
    row = np.zeros(vocab_size + 1)
    row[x0] = alpha_bar_t
    row[vocab_size] = 1.0 - alpha_bar_t
    return row


def uniform_marginal_row(alpha_bar_t: float, vocab_size: int, x0: int) -> np.ndarray:
    """Closed-form uniform corruption marginal written out longhand."""
    row = np.full(vocab_size, (1.0 - alpha_bar_t) / vocab_size)
    row[x0] += alpha_bar_t
    return row


def exact_tilted_two_state(p1: float, beta: float) -> float:
    """Hand arithmetic for the reward-tilted mass of token 1 on {0, 1}.

    Rewards are r(0) = 0, r(1) = 1, so the tilted mass of 1 equals
    p1 * e^(1/beta) / (p0 + p1 * e^(1/beta)).
    """
    p0 = 1.0 - p1
    tilt = math.exp(1.0 / beta)
    return p1 * tilt / (p0 + p1 * tilt)


def pooled_gap_se(a: np.ndarray, b: np.ndarray) -> float:
    """Standard error of mean(a) - mean(b) across per-seed means."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(math.sqrt(a.var(ddof=1) / a.shape[0] + b.var(ddof=1) / b.shape[0]))
