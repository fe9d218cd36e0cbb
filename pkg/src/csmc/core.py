"""Shared primitives: vocabularies, token sequences, noise schedules, categoricals, RNG streams."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

PROB_ATOL = 1e-10


@dataclass(frozen=True)
class Vocabulary:
    """Token alphabet for clean sequences, optionally extended by a mask token.

    ``size`` counts the clean tokens 0..size-1. When ``mask_index`` is set it
    must equal ``size``, so the full alphabet is 0..size with the mask last.
    ``glyphs`` optionally maps every alphabet token to a display string used
    when decoding sequences to text.
    """

    size: int
    mask_index: int | None = None
    glyphs: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError(f"vocabulary needs at least 2 clean tokens, got {self.size}")
        if self.mask_index is not None and self.mask_index != self.size:
            raise ValueError(
                f"mask_index must be {self.size} (one past the clean tokens), got {self.mask_index}"
            )
        if self.glyphs is not None:
            if len(self.glyphs) != self.alphabet_size:
                raise ValueError(
                    f"need {self.alphabet_size} glyphs for this alphabet, got {len(self.glyphs)}"
                )
            if len(set(self.glyphs)) != len(self.glyphs):
                raise ValueError("glyphs must be distinct")

    @property
    def alphabet_size(self) -> int:
        """Number of tokens including the mask when present."""
        return self.size + 1 if self.mask_index is not None else self.size

    def is_clean_token(self, token: int) -> bool:
        return 0 <= token < self.size

    def decode(self, tokens: Iterable[int]) -> str:
        """Render tokens as text via glyphs, falling back to space-joined ints."""
        toks = list(tokens)
        for tok in toks:
            if not 0 <= tok < self.alphabet_size:
                raise ValueError(f"token {tok} outside alphabet of size {self.alphabet_size}")
        if self.glyphs is None:
            return " ".join(str(tok) for tok in toks)
        return "".join(self.glyphs[tok] for tok in toks)


@dataclass(frozen=True)
class Sequence:
    """Immutable token vector. Tokens are validated against a vocabulary on demand."""

    tokens: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) == 0:
            raise ValueError("sequences must have at least one position")
        if not all(isinstance(tok, (int, np.integer)) and tok >= 0 for tok in self.tokens):
            raise ValueError(f"tokens must be nonnegative integers, got {self.tokens}")
        object.__setattr__(self, "tokens", tuple(int(tok) for tok in self.tokens))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Sequence":
        return cls(tuple(int(x) for x in arr))

    def to_array(self) -> np.ndarray:
        return np.asarray(self.tokens, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.tokens)

    def is_clean(self, vocab: Vocabulary) -> bool:
        """True when every token is a clean (non-mask) token of ``vocab``."""
        return all(vocab.is_clean_token(tok) for tok in self.tokens)

    def validate(self, vocab: Vocabulary) -> None:
        for tok in self.tokens:
            if not 0 <= tok < vocab.alphabet_size:
                raise ValueError(f"token {tok} outside alphabet of size {vocab.alphabet_size}")


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal-retention levels alpha_bar[0..T] with alpha_bar[0] = 1.

    alpha_bar[t] is the probability that a position still carries its original
    token after t forward steps. It must decrease strictly to (almost) zero so
    the final corrupted state carries no information about the data.
    """

    alpha_bar: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.alpha_bar, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValueError("schedule needs alpha_bar values for t = 0..T with T >= 1")
        if arr[0] != 1.0:
            raise ValueError(f"alpha_bar[0] must be 1, got {arr[0]}")
        if not np.all(np.diff(arr) < 0):
            raise ValueError("alpha_bar must be strictly decreasing")
        if arr[-1] > 1e-6:
            raise ValueError(f"alpha_bar[T] must be <= 1e-6, got {arr[-1]}")
        if np.any(arr < 0):
            raise ValueError("alpha_bar must be nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "alpha_bar", arr)

    @property
    def num_steps(self) -> int:
        return self.alpha_bar.shape[0] - 1

    def survival(self, s: int, t: int) -> float:
        """Probability a position keeps its token from step s to step t (s <= t)."""
        if not 0 <= s <= t <= self.num_steps:
            raise ValueError(f"need 0 <= s <= t <= {self.num_steps}, got s={s} t={t}")
        if s == t:
            return 1.0
        return float(self.alpha_bar[t] / self.alpha_bar[s]) if self.alpha_bar[s] > 0 else 0.0


def linear_schedule(num_steps: int) -> NoiseSchedule:
    """alpha_bar[t] = 1 - t/T, reaching exactly zero at t = T."""
    if num_steps < 1:
        raise ValueError(f"need at least one step, got {num_steps}")
    steps = np.arange(num_steps + 1, dtype=np.float64)
    return NoiseSchedule(1.0 - steps / num_steps)


@dataclass(frozen=True)
class CategoricalDist:
    """Validated probability vector over a finite token set."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] == 0:
            raise ValueError("probs must be a nonempty vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probs must be finite")
        if np.any(arr < 0):
            raise ValueError("probs must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"probs must sum to 1 within {PROB_ATOL}, got {total}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return self.probs.shape[0]


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an index from an unnormalized nonnegative weight vector.

    Internal hot-path helper: skips the CategoricalDist wrapper but still
    rejects degenerate input.
    """
    cum = np.cumsum(probs)
    total = cum[-1]
    if not np.isfinite(total) or total <= 0.0:
        raise ValueError(f"cannot sample from weights summing to {total}")
    u = rng.random() * total
    return int(np.searchsorted(cum, u, side="right"))


def sample_categorical(dist: CategoricalDist, rng: np.random.Generator) -> int:
    """Draw a token index distributed according to ``dist``."""
    return sample_index(dist.probs, rng)


def sample_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row of a matrix of nonnegative weights."""
    cum = np.cumsum(rows, axis=1)
    totals = cum[:, -1]
    if not np.all(np.isfinite(totals)) or np.any(totals <= 0.0):
        raise ValueError("every row needs a positive, finite weight total")
    u = rng.random(rows.shape[0]) * totals
    idx = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(idx, rows.shape[1] - 1)


def chain_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    """Independent, reproducible stream keyed by (seed, chain_id).

    Streams for distinct chain ids are statistically independent, so batched
    chains can run concurrently yet reproduce bit-identical results.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_id,)))
