"""Denoisers that predict clean sequences from corrupted ones.

The oracle denoiser computes the exact Bayes posterior over an explicitly
enumerated data distribution, which makes every downstream sampler testable
against enumeration. The factorized denoiser deliberately throws away
cross-position dependence, mimicking how neural denoisers output independent
per-position marginals; it is flagged approximate and excluded from exactness
guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .core import PROB_ATOL, Sequence, sample_index, sample_rows
from .forward_process import TransitionModel, marginal_matrix

MAX_LIKELIHOOD_EVALS = 1_000_000


@dataclass(frozen=True)
class DataDistribution:
    """Finite-support distribution over clean sequences of a common length."""

    support: tuple[Sequence, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        if len(self.support) == 0:
            raise ValueError("support must be nonempty")
        lengths = {len(seq) for seq in self.support}
        if len(lengths) != 1:
            raise ValueError(f"support sequences must share one length, got lengths {sorted(lengths)}")
        if len({seq.tokens for seq in self.support}) != len(self.support):
            raise ValueError("support sequences must be distinct")
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.shape != (len(self.support),):
            raise ValueError(f"need one probability per support point, got shape {arr.shape}")
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be strictly positive and finite")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities must sum to 1 within {PROB_ATOL}, got {total}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "probs", arr)

    @property
    def length(self) -> int:
        return len(self.support[0])

    def support_array(self) -> np.ndarray:
        return np.stack([seq.to_array() for seq in self.support])

    def to_file(self, path: str | Path) -> None:
        """Write newline-delimited 'prob<TAB>token,token,...' records."""
        lines = [
            f"{prob:.17g}\t{','.join(str(tok) for tok in seq.tokens)}"
            for prob, seq in zip(self.probs, self.support)
        ]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "DataDistribution":
        support: list[Sequence] = []
        probs: list[float] = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                prob_part, tok_part = line.split("\t")
                probs.append(float(prob_part))
                support.append(Sequence(tuple(int(tok) for tok in tok_part.split(","))))
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record {line!r}") from exc
        return cls(tuple(support), np.asarray(probs))


@runtime_checkable
class Denoiser(Protocol):
    """Anything that can draw a clean-sequence prediction from a noisy state."""

    model: TransitionModel
    approximate: bool
    length: int

    def sample_x0(self, x_t: Sequence, t: int, rng: np.random.Generator) -> Sequence: ...


class OracleDenoiser:
    """Exact Bayes posterior p(x_0 | x_t) over an enumerated data distribution."""

    approximate = False

    def __init__(self, data: DataDistribution, model: TransitionModel) -> None:
        if data.length * len(data.support) > MAX_LIKELIHOOD_EVALS:
            raise ValueError(
                f"support size {len(data.support)} x length {data.length} exceeds the "
                f"enumeration guard of {MAX_LIKELIHOOD_EVALS} likelihood evaluations"
            )
        support_arr = data.support_array()
        if np.any(support_arr >= model.vocab.size):
            raise ValueError("data support must contain only clean tokens")
        self.data = data
        self.model = model
        self.length = data.length
        self.support_tokens = support_arr
        self.support_probs = data.probs
        # One marginal-likelihood table per timestep, built up front so the
        # denoiser stays read-only under concurrent queries.
        self._marg = np.stack(
            [marginal_matrix(model, t) for t in range(model.num_steps + 1)]
        )

    def posterior_weights(self, xt_arr: np.ndarray, t: int) -> np.ndarray:
        """Normalized posterior over the support given a noisy token array."""
        likes = np.prod(self._marg[t][self.support_tokens, xt_arr[None, :]], axis=1)
        weights = self.support_probs * likes
        total = weights.sum()
        if total <= 0.0:
            raise ValueError(
                f"state {tuple(int(x) for x in xt_arr)} at t={t} is impossible under every "
                "support point"
            )
        return weights / total

    def posterior(self, x_t: Sequence, t: int) -> np.ndarray:
        """Posterior over ``data.support`` given a noisy sequence."""
        if not 0 <= t <= self.model.num_steps:
            raise ValueError(f"time must be in 0..{self.model.num_steps}, got {t}")
        return self.posterior_weights(x_t.to_array(), t)

    def sample_x0(self, x_t: Sequence, t: int, rng: np.random.Generator) -> Sequence:
        weights = self.posterior(x_t, t)
        return self.data.support[sample_index(weights, rng)]


class FactorizedDenoiser:
    """Per-position marginals of the oracle posterior, sampled independently.

    Approximate by construction: it matches the oracle exactly per position
    but ignores correlations across positions, so its joint samples can fall
    outside the data support.
    """

    approximate = True

    def __init__(self, data: DataDistribution, model: TransitionModel) -> None:
        self._oracle = OracleDenoiser(data, model)
        self.data = data
        self.model = model
        self.length = data.length

    def position_marginals(self, x_t: Sequence, t: int) -> np.ndarray:
        """Per-position clean-token marginals, shape (length, V)."""
        weights = self._oracle.posterior(x_t, t)
        support = self._oracle.support_tokens
        vocab_size = self.model.vocab.size
        out = np.empty((self.data.length, vocab_size))
        for i in range(self.data.length):
            out[i] = np.bincount(support[:, i], weights=weights, minlength=vocab_size)
        return out

    def sample_x0(self, x_t: Sequence, t: int, rng: np.random.Generator) -> Sequence:
        marginals = self.position_marginals(x_t, t)
        return Sequence.from_array(sample_rows(marginals, rng))


class CountingDenoiser:
    """Wrapper that counts denoiser calls for function-evaluation accounting."""

    def __init__(self, base: Denoiser) -> None:
        self._base = base
        self.model = base.model
        self.approximate = base.approximate
        self.length = base.length
        self.calls = 0

    def sample_x0(self, x_t: Sequence, t: int, rng: np.random.Generator) -> Sequence:
        self.calls += 1
        return self._base.sample_x0(x_t, t, rng)


def sample_x0_prediction(
    denoiser: Denoiser, x_t: Sequence, t: int, rng: np.random.Generator
) -> Sequence:
    """Draw one clean-sequence prediction from a denoiser."""
    return denoiser.sample_x0(x_t, t, rng)
