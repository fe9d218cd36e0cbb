"""Chain and sample diagnostics: autocorrelation, acceptance, diversity, summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence as SequenceABC

import numpy as np

from .core import Sequence
from .csmc_sampler import ChainResult


def autocorrelation(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased-normalization autocorrelation out to max_lag, rho[0] = 1.

    Every lag shares the full-series variance denominator, the standard
    estimator whose sample fluctuations shrink at large lags. A constant
    series has no correlation structure: rho[k] = 0 for k >= 1 by convention.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 1:
        raise ValueError("series must be a nonempty vector")
    n = x.shape[0]
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in 0..{n - 1}, got {max_lag}")
    x = x - x.mean()
    denom = float(np.dot(x, x))
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom == 0.0:
        return out
    # FFT autocovariance: pad to avoid circular wraparound.
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(x, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[: max_lag + 1]
    out = acov / denom
    out[0] = 1.0
    return out


def acceptance_rate(chain: ChainResult) -> float:
    """Fraction of proposals the chain accepted."""
    if not chain.proposals:
        raise ValueError("chain has no proposals")
    return sum(p.accepted for p in chain.proposals) / len(chain.proposals)


def diversity(samples: SequenceABC[Sequence]) -> float:
    """One minus the mean pairwise fraction of matching positions.

    Identical samples score 0, samples differing at every position score 1.
    Fewer than two samples have no pairs and score 0.
    """
    if len(samples) < 2:
        return 0.0
    arr = np.stack([s.to_array() for s in samples])
    n = arr.shape[0]
    matches = (arr[:, None, :] == arr[None, :, :]).mean(axis=2)
    pair_sum = (matches.sum() - n) / 2.0
    num_pairs = n * (n - 1) / 2.0
    return float(1.0 - pair_sum / num_pairs)


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    std: float
    ci95_halfwidth: float


def reward_summary(rewards: SequenceABC[float] | np.ndarray) -> SummaryStats:
    """Mean, sample standard deviation, and a 1.96-sigma normal interval halfwidth."""
    arr = np.asarray(rewards, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("rewards must be a nonempty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("rewards must be finite")
    n = arr.shape[0]
    std = float(arr.std(ddof=1)) if n > 1 else 0.0
    return SummaryStats(
        count=n,
        mean=float(arr.mean()),
        std=std,
        ci95_halfwidth=1.96 * std / math.sqrt(n),
    )


def write_acf_csv(path: str | Path, rho: np.ndarray) -> None:
    """Write (lag, value) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag", "value"])
        for lag, value in enumerate(rho):
            writer.writerow([lag, repr(float(value))])


def write_summary_csv(path: str | Path, metrics: dict[str, float | int | None]) -> None:
    """Write (metric, value) rows in sorted key order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for key in sorted(metrics):
            value = metrics[key]
            writer.writerow([key, "" if value is None else repr(value) if isinstance(value, float) else value])
