"""Ancestral reverse sampling, full-length and along coarse time grids.

A reverse move from time t to an earlier time s draws a clean prediction
x_0 from the denoiser and then draws x_s from the positionwise posterior
q(x_s | x_t, x_0). Chaining such moves along a grid t = g_M > ... > g_0 = 0
realizes an M-step reverse pass; with the exact oracle denoiser each move
inverts the forward process exactly, for any grid.
"""

from __future__ import annotations

import numpy as np

from .core import Sequence, sample_rows
from .denoiser import Denoiser
from .forward_process import ModelKind, TransitionModel, posterior_window_tensor


def reverse_grid(t: int, num_jumps: int) -> list[int]:
    """Strictly decreasing time grid from t to 0 with at most ``num_jumps`` jumps.

    For t > num_jumps the grid has exactly num_jumps + 1 points spaced evenly
    in index; for smaller t it degrades to every index from t down to 0.
    """
    if t < 1:
        raise ValueError(f"grid must start at a positive time, got {t}")
    if num_jumps < 1:
        raise ValueError(f"need at least one jump, got {num_jumps}")
    if t <= num_jumps:
        return list(range(t, -1, -1))
    return [round(t * i / num_jumps) for i in range(num_jumps, -1, -1)]


def denoise_jump(
    model: TransitionModel,
    denoiser: Denoiser,
    x_t: Sequence,
    t: int,
    s: int,
    rng: np.random.Generator,
) -> Sequence:
    """One reverse move from time t to time s < t."""
    if denoiser.model is not model:
        raise ValueError("denoiser was built for a different transition model")
    x0 = denoiser.sample_x0(x_t, t, rng)
    if s == 0:
        # The time-0 posterior given x_0 is a point mass on x_0 itself.
        return x0
    tensor = posterior_window_tensor(model, s, t)
    rows = tensor[x0.to_array(), x_t.to_array()]
    return Sequence.from_array(sample_rows(rows, rng))


def denoise_step(
    model: TransitionModel,
    denoiser: Denoiser,
    x_t: Sequence,
    t: int,
    rng: np.random.Generator,
) -> Sequence:
    """Single reverse step from time t to t - 1."""
    if not 1 <= t <= model.num_steps:
        raise ValueError(f"time must be in 1..{model.num_steps}, got {t}")
    return denoise_jump(model, denoiser, x_t, t, t - 1, rng)


def prior_sample(model: TransitionModel, length: int, rng: np.random.Generator) -> Sequence:
    """Draw x_T from the fully corrupted distribution."""
    if model.kind is ModelKind.MASKED:
        return Sequence((model.vocab.mask_index,) * length)
    return Sequence.from_array(rng.integers(0, model.vocab.size, size=length))


def generate(model: TransitionModel, denoiser: Denoiser, rng: np.random.Generator) -> Sequence:
    """Full T-step ancestral draw from the model's clean-sequence distribution."""
    x = prior_sample(model, denoiser.length, rng)
    for t in range(model.num_steps, 0, -1):
        x = denoise_step(model, denoiser, x, t, rng)
    return x


def partial_reverse(
    model: TransitionModel,
    denoiser: Denoiser,
    x_t: Sequence,
    t: int,
    num_jumps: int,
    rng: np.random.Generator,
) -> Sequence:
    """Reverse from a partially corrupted state to a clean sequence in few jumps."""
    if not 1 <= t <= model.num_steps:
        raise ValueError(f"time must be in 1..{model.num_steps}, got {t}")
    grid = reverse_grid(t, num_jumps)
    x = x_t
    for upper, lower in zip(grid[:-1], grid[1:]):
        x = denoise_jump(model, denoiser, x, upper, lower, rng)
    return x
