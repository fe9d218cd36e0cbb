"""Forward corruption process for discrete sequences.

Two noising kinds over a finite alphabet, both with closed-form marginals:

- masked: tokens independently flip to an absorbing mask symbol,
- uniform: tokens independently re-randomize over the clean alphabet.

Per-step transition matrices multiply into cumulative products, and the
time-s state given (x_t, x_0) has a closed-form categorical posterior.
Matrices are built from the schedule's alpha_bar values on first use and
memoized per model, which keeps repeated sampling cheap while the model
stays safe to share across concurrent chains.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CategoricalDist, NoiseSchedule, Sequence, Vocabulary, sample_rows


class ModelKind(enum.Enum):
    MASKED = "masked"
    UNIFORM = "uniform"


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """A corruption kind plus schedule plus vocabulary, fixed for a run.

    Derived matrices are memoized on the instance as read-only arrays. A
    concurrent first computation of the same key is a benign race: both
    threads produce identical arrays, so chains sharing a model stay
    deterministic.
    """

    kind: ModelKind
    schedule: NoiseSchedule
    vocab: Vocabulary

    def __post_init__(self) -> None:
        if self.kind is ModelKind.MASKED and self.vocab.mask_index is None:
            raise ValueError("masked models need a vocabulary with a mask token")
        if self.kind is ModelKind.UNIFORM and self.vocab.mask_index is not None:
            raise ValueError("uniform models corrupt within the clean alphabet, drop the mask token")
        object.__setattr__(self, "_memo", {})

    def _cached(self, key: tuple, build: "Callable[[], np.ndarray]") -> np.ndarray:
        memo: dict = self._memo  # type: ignore[attr-defined]
        arr = memo.get(key)
        if arr is None:
            arr = build()
            arr.flags.writeable = False
            memo[key] = arr
        return arr

    @property
    def num_states(self) -> int:
        """Size of the per-position state space seen during diffusion."""
        return self.vocab.alphabet_size

    @property
    def num_steps(self) -> int:
        return self.schedule.num_steps


def transition_matrix_window(model: TransitionModel, s: int, t: int) -> np.ndarray:
    """Transition matrix from step s to step t, the product Q_{s+1} ... Q_t.

    Both kinds compose in closed form: the window behaves like a single step
    whose survival probability is alpha_bar[t] / alpha_bar[s]. s == t gives
    the identity.
    """
    if not 0 <= s <= t <= model.num_steps:
        raise ValueError(f"need 0 <= s <= t <= {model.num_steps}, got s={s} t={t}")

    def build() -> np.ndarray:
        survive = model.schedule.survival(s, t)
        n = model.num_states
        if model.kind is ModelKind.MASKED:
            mask = model.vocab.mask_index
            q = np.zeros((n, n), dtype=np.float64)
            for i in range(model.vocab.size):
                q[i, i] = survive
                q[i, mask] = 1.0 - survive
            q[mask, mask] = 1.0
            return q
        return survive * np.eye(n) + (1.0 - survive) / n * np.ones((n, n))

    return model._cached(("window", s, t), build)


def transition_matrix(model: TransitionModel, t: int) -> np.ndarray:
    """Single-step transition matrix Q_t for t in 1..T."""
    if not 1 <= t <= model.num_steps:
        raise ValueError(f"single-step time must be in 1..{model.num_steps}, got {t}")
    return transition_matrix_window(model, t - 1, t)


def cumulative_matrix(model: TransitionModel, t: int) -> np.ndarray:
    """Cumulative product Q_1 ... Q_t mapping clean states to time-t states."""
    return transition_matrix_window(model, 0, t)


def marginal_matrix(model: TransitionModel, t: int) -> np.ndarray:
    """Rows of the time-t corruption marginal for each clean token, shape (V, states)."""
    return cumulative_matrix(model, t)[: model.vocab.size]


def marginal(model: TransitionModel, x0_token: int, t: int) -> CategoricalDist:
    """Closed-form distribution of a position's time-t state given its clean token."""
    if not model.vocab.is_clean_token(x0_token):
        raise ValueError(f"x0 token must be clean, got {x0_token}")
    return CategoricalDist(marginal_matrix(model, t)[x0_token])


def corrupt(model: TransitionModel, x0: Sequence, t: int, rng: np.random.Generator) -> Sequence:
    """Draw x_t from the forward marginal, positionwise independently."""
    if not 0 <= t <= model.num_steps:
        raise ValueError(f"time must be in 0..{model.num_steps}, got {t}")
    tokens = x0.to_array()
    if np.any(tokens >= model.vocab.size):
        raise ValueError("corrupt expects a clean sequence")
    if t == 0:
        return x0
    rows = marginal_matrix(model, t)[tokens]
    return Sequence.from_array(sample_rows(rows, rng))


def posterior_window(
    model: TransitionModel, xt_token: int, x0_token: int, s: int, t: int
) -> CategoricalDist:
    """Distribution of a position's time-s state given its time-t state and clean token.

    Proportional to Q_window(s, t)[x_s, x_t] * Q_window(0, s)[x_0, x_s]. Raises
    when the (x_0, x_t) pair has zero forward probability, since conditioning
    on it is meaningless.
    """
    if not 0 <= s < t <= model.num_steps:
        raise ValueError(f"need 0 <= s < t <= {model.num_steps}, got s={s} t={t}")
    if not model.vocab.is_clean_token(x0_token):
        raise ValueError(f"x0 token must be clean, got {x0_token}")
    if not 0 <= xt_token < model.num_states:
        raise ValueError(f"x_t token {xt_token} outside state space of size {model.num_states}")
    back = transition_matrix_window(model, s, t)[:, xt_token]
    fwd = transition_matrix_window(model, 0, s)[x0_token]
    weights = back * fwd
    total = weights.sum()
    if total <= 0.0:
        raise ValueError(
            f"pair (x0={x0_token}, xt={xt_token}) has zero forward probability at t={t}"
        )
    return CategoricalDist(weights / total)


def posterior(model: TransitionModel, xt_token: int, x0_token: int, t: int) -> CategoricalDist:
    """One-step denoising posterior over the time t-1 state."""
    return posterior_window(model, xt_token, x0_token, t - 1, t)


def posterior_window_tensor(model: TransitionModel, s: int, t: int) -> np.ndarray:
    """All positionwise posteriors at once, shape (V, states, states).

    Entry [a, b, c] is q(x_s = c | x_t = b, x_0 = a). Pairs (a, b) with zero
    forward probability get an all-zero row instead of an error; callers in
    exact enumeration weight those rows by zero.
    """
    if not 0 <= s < t <= model.num_steps:
        raise ValueError(f"need 0 <= s < t <= {model.num_steps}, got s={s} t={t}")

    def build() -> np.ndarray:
        back = transition_matrix_window(model, s, t)
        fwd = transition_matrix_window(model, 0, s)[: model.vocab.size]
        weights = np.einsum("cb,ac->abc", back, fwd)
        totals = weights.sum(axis=2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0.0, weights / totals, 0.0)

    return model._cached(("posterior", s, t), build)
