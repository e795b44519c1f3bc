"""Paired bootstrap confidence intervals on shared evaluation instances.

Resampling uses a counter-based generator (Philox) keyed on the seed and a
comparison identifier, so every comparison is reproducible on its own and
independent of the order comparisons run in.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "BootstrapError",
    "InstanceOutcomes",
    "BootstrapResult",
    "paired_bootstrap_ci",
    "outcomes_from_accuracy",
]


class BootstrapError(Exception):
    """Raised for unusable instance vectors or resample counts."""


@dataclass(frozen=True)
class InstanceOutcomes:
    """Per-instance 0/1 correctness for one condition on one benchmark."""

    values: tuple[int, ...]
    benchmark: str = ""
    condition: str = ""

    def __post_init__(self) -> None:
        if any(v not in (0, 1) for v in self.values):
            raise BootstrapError("instance outcomes must be 0 or 1")

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values) if self.values else 0.0


def outcomes_from_accuracy(
    accuracy: float, n: int, benchmark: str = "", condition: str = ""
) -> InstanceOutcomes:
    """Synthesize a comonotone outcome vector whose mean is the realizable
    accuracy nearest to ``accuracy`` on the 1/n grid.

    Successes fill the front of the vector, so two vectors built this way
    are maximally concordant (the paired structure of shared instances is
    approximated, not recovered).
    """
    if n <= 0:
        raise BootstrapError("n must be positive")
    correct = round(accuracy * n)
    values = (1,) * correct + (0,) * (n - correct)
    return InstanceOutcomes(values=values, benchmark=benchmark, condition=condition)


@dataclass(frozen=True)
class BootstrapResult:
    mean_diff_pp: float
    ci_low_pp: float
    ci_high_pp: float
    n_resamples: int
    seed: int
    significant: bool


def _rng_for(seed: int, comparison_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{comparison_id}".encode("utf-8")).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)  # Philox uses a 2x64 key
    return np.random.Generator(np.random.Philox(key=key))


def paired_bootstrap_ci(
    a: InstanceOutcomes | Sequence[int],
    b: InstanceOutcomes | Sequence[int],
    n_resamples: int = 10_000,
    seed: int = 0,
    comparison_id: str = "",
) -> BootstrapResult:
    """95% percentile interval on the paired accuracy difference, in pp.

    Instance indices are resampled with replacement; each resample scores
    ``100 * (mean(a[idx]) - mean(b[idx]))``.  Deterministic for a fixed
    (seed, comparison_id).
    """
    av = np.asarray(a.values if isinstance(a, InstanceOutcomes) else a, dtype=np.float64)
    bv = np.asarray(b.values if isinstance(b, InstanceOutcomes) else b, dtype=np.float64)
    if av.shape != bv.shape:
        raise BootstrapError(f"length mismatch: {av.size} vs {bv.size} instances")
    n = av.size
    if n < 2:
        raise BootstrapError("paired bootstrap needs at least 2 instances")
    if n_resamples < 100:
        raise BootstrapError("fewer than 100 resamples is statistically meaningless")

    diff = av - bv
    rng = _rng_for(seed, comparison_id)
    idx = rng.integers(0, n, size=(n_resamples, n))
    stats = 100.0 * diff[idx].mean(axis=1)
    low, high = np.percentile(stats, [2.5, 97.5])
    return BootstrapResult(
        mean_diff_pp=100.0 * float(diff.mean()),
        ci_low_pp=float(low),
        ci_high_pp=float(high),
        n_resamples=n_resamples,
        seed=seed,
        significant=not (low <= 0.0 <= high),
    )
