"""Forward noising along a straight path between a clean latent and Gaussian noise.

The schedule is discrete: index k in {0, .., K} maps to normalized time
t = k / K, and the noised latent is z_k = (1 - t) * z0 + t * eps with
eps ~ N(0, I) from a seeded generator. k = 0 returns the clean latent
bit-identically and k = K returns pure noise independent of z0. Sampling is
deterministic for a fixed seed within one implementation; cross-library
reproducibility is statistical (moments), not byte-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOTAL_STEPS = 1000
DEFAULT_TIMESTEP = 300


@dataclass(frozen=True)
class TimestepSchedule:
    """A chosen index k on a K-step discretization of [0, 1]."""

    k: int
    total_steps: int = DEFAULT_TOTAL_STEPS

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0 <= self.k <= self.total_steps:
            raise ValueError(f"k={self.k} outside [0, {self.total_steps}]")

    @property
    def t(self) -> float:
        return self.k / self.total_steps


@dataclass(frozen=True)
class LatentBatch:
    """A clean latent, the seed used to corrupt it, and the noised result."""

    z0: np.ndarray
    seed: int
    z_k: np.ndarray

    def __post_init__(self) -> None:
        if np.asarray(self.z0).shape != np.asarray(self.z_k).shape:
            raise ValueError("z_k must have the same dims as z0")


def timestep_to_t(k: int, total_steps: int = DEFAULT_TOTAL_STEPS) -> float:
    """Normalized time k / K in float64, validating 0 <= k <= K."""
    return TimestepSchedule(k, total_steps).t


def noisy_latent(
    z0: np.ndarray,
    k: int,
    total_steps: int = DEFAULT_TOTAL_STEPS,
    seed: int = 0,
) -> np.ndarray:
    """Corrupt z0 to level k along the linear noising path.

    The noise draw depends only on (shape, dtype, seed), so the same seed
    reuses the same eps across timesteps and z_K carries no trace of z0.
    """
    t = timestep_to_t(k, total_steps)
    arr = np.asarray(z0)
    if k == 0:
        return arr.copy()
    rng = np.random.default_rng(seed)
    if arr.dtype == np.float32:
        eps = rng.standard_normal(arr.shape, dtype=np.float32)
    else:
        eps = rng.standard_normal(arr.shape)
    if k == total_steps:
        return eps.astype(arr.dtype, copy=False)
    return ((1.0 - t) * arr + t * eps).astype(arr.dtype, copy=False)


def make_latent_batch(
    z0: np.ndarray,
    k: int,
    total_steps: int = DEFAULT_TOTAL_STEPS,
    seed: int = 0,
) -> LatentBatch:
    """Bundle a clean latent with its seeded noised counterpart."""
    return LatentBatch(np.asarray(z0), seed, noisy_latent(z0, k, total_steps, seed))
