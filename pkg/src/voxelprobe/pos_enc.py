"""Sinusoidal 3D positional encoding for pooled world coordinates.

Each axis gets an equal block of D/3 channels laid out as interleaved
(sin, cos) pairs over D/6 geometrically spaced frequencies base**(-6j/D),
j = 0 .. D/6 - 1; axis blocks are concatenated in x, y, z order. The
frequency base and the meters-to-phase scale are configuration because the
encoding inherits its exact range from whatever consumer sits downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PosEncConfig:
    """Output width (a multiple of 6), frequency base, and phase scale."""

    dim: int
    base: float = 10000.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.dim < 6 or self.dim % 6 != 0:
            raise ValueError(f"dim must be a positive multiple of 6, got {self.dim}")
        if self.base <= 0:
            raise ValueError("base must be positive")


def sinusoidal_3d(coords: np.ndarray, cfg: PosEncConfig) -> np.ndarray:
    """Encode (..., 3) coordinates into (..., dim) bounded sinusoid features."""
    pts = np.asarray(coords, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise ValueError(f"coords must end in an xyz axis, got shape {pts.shape}")
    n_freq = cfg.dim // 6
    j = np.arange(n_freq, dtype=np.float64)
    freqs = cfg.base ** (-6.0 * j / cfg.dim)

    out = np.empty(pts.shape[:-1] + (cfg.dim,), dtype=np.float64)
    block = 2 * n_freq
    for axis in range(3):
        phase = pts[..., axis, None] * cfg.scale * freqs
        out[..., axis * block : axis * block + block : 2] = np.sin(phase)
        out[..., axis * block + 1 : axis * block + block : 2] = np.cos(phase)
    return out
