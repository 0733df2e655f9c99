"""Backbone adapters: anything that maps a frame to a native feature grid.

A backbone declares its native token grid and hidden size up front; the
export pipeline validates every returned feature map against that
declaration before pooling, so a misbehaving adapter fails loudly instead
of writing silently wrong manifests.

Only the dummy random-feature backbone ships here. It needs no downloads
and is fully deterministic per (seed, layer, timestep, frame), which makes
the exporter-to-toolkit boundary testable in CI; real model adapters plug
in by subclassing :class:`Backbone`.
"""

from __future__ import annotations

import numpy as np


class BackboneLoadError(RuntimeError):
    """The requested backbone cannot be instantiated."""


class Backbone:
    """Adapter interface for feature extraction."""

    backbone_id: str = "abstract"
    native_grid: tuple[int, int] = (0, 0)  # (rows, cols) at the feature stage
    hidden_size: int = 0
    input_size: tuple[int, int] = (0, 0)  # (height, width) fed to the model

    def features(
        self,
        frame_index: int,
        rgb: np.ndarray | None,
        layer: int,
        timestep: int,
        prompt: str,
        seed: int,
    ) -> np.ndarray:
        """Return the native (rows, cols, hidden_size) feature grid."""
        raise NotImplementedError

    def metadata(self) -> dict:
        return {
            "backbone": self.backbone_id,
            "native_grid": list(self.native_grid),
            "hidden_size": self.hidden_size,
            "input_size": list(self.input_size),
        }


class DummyRandomBackbone(Backbone):
    """Deterministic random features on the wide-video native grid.

    Mirrors the tokenization of a 1280 x 720 diffusion-transformer stage
    with patch size 16: a 45 x 80 grid, 3600 native tokens, pooled by the
    exporter down to the target grid. Features ignore pixel content; the
    point is exercising every interface, not producing meaningful scores.
    """

    backbone_id = "dummy-random"
    native_grid = (45, 80)
    hidden_size = 64
    input_size = (720, 1280)

    def features(self, frame_index, rgb, layer, timestep, prompt, seed):
        rng = np.random.default_rng(
            [abs(seed), layer, timestep, frame_index, len(prompt)]
        )
        h, w = self.native_grid
        return rng.standard_normal((h, w, self.hidden_size)).astype(np.float32)


_REGISTRY = {DummyRandomBackbone.backbone_id: DummyRandomBackbone}


def load_backbone(backbone_id: str) -> Backbone:
    cls = _REGISTRY.get(backbone_id)
    if cls is None:
        raise BackboneLoadError(
            f"unknown backbone {backbone_id!r}; available: {sorted(_REGISTRY)}"
        )
    return cls()


def register_backbone(cls: type[Backbone]) -> type[Backbone]:
    """Class decorator for wiring real model adapters into the CLI."""
    _REGISTRY[cls.backbone_id] = cls
    return cls
