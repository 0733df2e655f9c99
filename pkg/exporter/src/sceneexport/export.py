"""Export pipeline: posed RGB-D input -> backbone features -> scene manifest.

Input scenes are directories holding a ``scene.json`` that references
per-frame millimeter depth tensors, 16-number row-major camera-to-world
poses, pinhole intrinsics, and optional PPM images:

    {
      "scene_id": "scan-000",
      "axis_align": [16 floats],
      "frames": [
        {"depth_mm_path": "d0.vgt", "pose": [16 floats],
         "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": ..},
         "rgb_path": "f0.ppm"}
      ]
    }

The exporter samples up to ``frames`` views uniformly, converts depth to
float32 meters, runs the backbone at the configured layer/timestep/prompt,
validates the native grid declaration, pools to the target grid, and writes
a ``posed_scene`` manifest directory with full provenance metadata. It
never computes scores; all analysis math lives in the consuming toolkit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backbones import load_backbone
from .tensorfile import read_tensor, write_tensor

MM_PER_METER = 1000.0


@dataclass(frozen=True)
class ExportConfig:
    backbone_id: str = "dummy-random"
    layer: int = 20
    timestep: int = 300
    total_steps: int = 1000
    frames: int = 32
    target_grid: tuple[int, int] = (14, 14)
    prompt: str = ""
    seed: int = 0
    branch: str = "gen"

    def __post_init__(self) -> None:
        if self.layer < 0:
            raise ValueError("layer index must be >= 0")
        if not 0 <= self.timestep <= self.total_steps:
            raise ValueError(
                f"timestep {self.timestep} outside [0, {self.total_steps}]"
            )
        if self.frames < 1 or min(self.target_grid) < 1:
            raise ValueError("frame budget and target grid must be positive")


@dataclass
class InputFrame:
    depth_mm: np.ndarray
    pose: np.ndarray
    intrinsics: dict
    rgb: np.ndarray | None = None


@dataclass
class InputScene:
    scene_id: str
    frames: list[InputFrame]
    axis_align: np.ndarray = field(default_factory=lambda: np.eye(4))


def read_ppm(path) -> np.ndarray:
    """Parse a binary PPM (P6) image into an H x W x 3 uint8 array."""
    blob = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":  # comment line
            pos = blob.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported max value {maxval}")
    pixels = np.frombuffer(blob, dtype=np.uint8, count=h * w * 3, offset=pos + 1)
    return pixels.reshape(h, w, 3).copy()


def load_input_scene(scene_dir) -> InputScene:
    root = Path(scene_dir)
    doc = json.loads((root / "scene.json").read_text())
    frames = []
    for f in doc["frames"]:
        rgb = None
        if f.get("rgb_path") and (root / f["rgb_path"]).exists():
            rgb = read_ppm(root / f["rgb_path"])
        frames.append(
            InputFrame(
                depth_mm=read_tensor(root / f["depth_mm_path"]),
                pose=np.asarray(f["pose"], dtype=np.float64).reshape(4, 4),
                intrinsics=dict(f["intrinsics"]),
                rgb=rgb,
            )
        )
    if not frames:
        raise ValueError(f"{root}: input scene has no frames")
    align = np.asarray(doc.get("axis_align", np.eye(4).reshape(16).tolist()))
    return InputScene(doc.get("scene_id", root.name), frames, align.reshape(4, 4))


def sample_frame_indices(total: int, limit: int) -> list[int]:
    """Uniform endpoint-anchored sampling, keeping all frames when possible."""
    if total <= limit:
        return list(range(total))
    if limit == 1:
        return [0]
    return [
        int(np.floor(i * (total - 1) / (limit - 1) + 0.5)) for i in range(limit)
    ]


def pool_grid(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Adaptive average pooling with floor/ceil window bounds, float64 sums."""
    h, w, c = grid.shape
    if out_h > h or out_w > w:
        raise ValueError(f"cannot pool {h}x{w} up to {out_h}x{out_w}")
    out = np.empty((out_h, out_w, c), dtype=np.float64)
    for i in range(out_h):
        r0 = (i * h) // out_h
        r1 = -((-(i + 1) * h) // out_h)
        for j in range(out_w):
            c0 = (j * w) // out_w
            c1 = -((-(j + 1) * w) // out_w)
            out[i, j] = grid[r0:r1, c0:c1].mean(axis=(0, 1), dtype=np.float64)
    return out.astype(grid.dtype, copy=False)


def export_scene(scene: InputScene, cfg: ExportConfig, out_dir) -> Path:
    """Run the backbone over a posed scene and write the manifest directory."""
    backbone = load_backbone(cfg.backbone_id)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    picked = sample_frame_indices(len(scene.frames), cfg.frames)
    frames_doc = []
    feature_frames = []
    for out_idx, src_idx in enumerate(picked):
        frame = scene.frames[src_idx]
        depth_m = (frame.depth_mm.astype(np.float64) / MM_PER_METER).astype(np.float32)
        depth_name = f"frame_{out_idx:03d}_depth.vgt"
        write_tensor(out / depth_name, depth_m)
        frames_doc.append(
            {
                "index": out_idx,
                "depth_path": depth_name,
                "pose": [float(v) for v in frame.pose.reshape(16)],
                "intrinsics": {k: float(v) for k, v in frame.intrinsics.items()},
            }
        )

        native = backbone.features(
            out_idx, frame.rgb, cfg.layer, cfg.timestep, cfg.prompt, cfg.seed
        )
        expected = (*backbone.native_grid, backbone.hidden_size)
        if native.shape != expected:
            raise ValueError(
                f"backbone {backbone.backbone_id!r} returned {native.shape}, "
                f"declared native grid is {expected}"
            )
        feature_frames.append(pool_grid(native, *cfg.target_grid))

    values = np.stack(feature_frames).astype(np.float32)
    tensor_name = f"features_{cfg.branch}.vgt"
    write_tensor(out / tensor_name, values)

    source = backbone.metadata()
    source.update(
        {
            "layer": cfg.layer,
            "timestep": cfg.timestep,
            "total_steps": cfg.total_steps,
            "prompt": cfg.prompt,
            "seed": cfg.seed,
            "frames_sampled": len(picked),
            "depth_unit": "m (converted from mm input)",
        }
    )
    doc = {
        "kind": "posed_scene",
        "scene_id": scene.scene_id,
        "axis_align": [float(v) for v in scene.axis_align.reshape(16)],
        "frames": frames_doc,
        "features": {
            cfg.branch: {
                "tensor_path": tensor_name,
                "grid": [len(picked), cfg.target_grid[0], cfg.target_grid[1],
                         backbone.hidden_size],
                "source": source,
            }
        },
    }
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest
