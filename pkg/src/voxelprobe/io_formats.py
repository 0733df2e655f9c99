"""Bit-exact tensor container, scene manifests, and report emission.

The tensor container is deliberately minimal so any producer can write it
with a few lines of struct packing:

    offset 0   magic ``VGT1`` (4 bytes)
    offset 4   version, u16 little-endian (currently 1)
    offset 6   dtype code, u8 (0 = float32, 1 = float64)
    offset 7   ndim, u8 (>= 1)
    offset 8   ndim extents, u64 little-endian each, all >= 1
    then       row-major little-endian scalars

Scene manifests are JSON documents (written with sorted keys so identical
inputs produce identical bytes) referencing tensor files relative to the
manifest location. Two kinds exist: ``posed_scene`` (frames with depth,
intrinsics, poses, plus named feature branches) and ``token_cloud`` (an
already-flattened token set).
"""

from __future__ import annotations

import json
import struct
import warnings
from pathlib import Path

import numpy as np

from .correspondence import TokenCloud
from .geometry import Intrinsics, PosedFrame, PosedScene, rotation_deviation
from .tensor_core import TokenGrid, validate_tensor

MAGIC = b"VGT1"
VERSION = 1
_DTYPE_TO_CODE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_TO_DTYPE = {0: np.dtype("<f4"), 1: np.dtype("<f8")}

ROTATION_WARN_TOL = 1e-4


class TensorFileError(ValueError):
    """Structured tensor-container parse failure, carrying a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ManifestError(ValueError):
    """Scene manifest failed validation."""


def write_tensor(path, array: np.ndarray) -> None:
    """Serialize a float32/float64 array; read_tensor restores it bit-exactly."""
    arr = validate_tensor(np.ascontiguousarray(array))
    code = _DTYPE_TO_CODE[arr.dtype]
    header = MAGIC + struct.pack("<HBB", VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> np.ndarray:
    """Parse a tensor container, reporting the byte offset of any corruption."""
    blob = Path(path).read_bytes()
    if len(blob) < 8:
        raise TensorFileError("truncated header", len(blob))
    if blob[:4] != MAGIC:
        raise TensorFileError(f"bad magic {blob[:4]!r}", 0)
    version, code, ndim = struct.unpack_from("<HBB", blob, 4)
    if version != VERSION:
        raise TensorFileError(f"unsupported version {version}", 4)
    if code not in _CODE_TO_DTYPE:
        raise TensorFileError(f"unknown dtype code {code}", 6)
    if ndim < 1:
        raise TensorFileError("ndim must be >= 1", 7)
    dims_end = 8 + 8 * ndim
    if len(blob) < dims_end:
        raise TensorFileError("truncated dimension list", len(blob))
    dims = struct.unpack_from(f"<{ndim}Q", blob, 8)
    for i, extent in enumerate(dims):
        if extent < 1:
            raise TensorFileError(f"dimension {i} has extent {extent}", 8 + 8 * i)
    dtype = _CODE_TO_DTYPE[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    available = len(blob) - dims_end
    if available < expected:
        raise TensorFileError(
            f"payload truncated: expected {expected} bytes, found {available}",
            len(blob),
        )
    if available > expected:
        raise TensorFileError(
            f"trailing bytes: expected {expected} payload bytes, found {available}",
            dims_end + expected,
        )
    arr = np.frombuffer(blob, dtype=dtype, count=int(np.prod(dims)), offset=dims_end)
    return arr.reshape(dims).astype(dtype.newbyteorder("="), copy=True)


# ---------------------------------------------------------------------------
# scene manifests


def _flat16(matrix: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(matrix, dtype=np.float64).reshape(16)]


def write_scene_manifest(
    out_dir,
    scene: PosedScene,
    feature_grids: dict[str, TokenGrid] | None = None,
    branch_sources: dict[str, dict] | None = None,
) -> Path:
    """Write a posed-scene manifest directory and return the manifest path.

    ``branch_sources`` attaches provenance metadata (backbone name, layer
    index, timestep, prompt convention, anything else) to each feature
    branch verbatim.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    feature_grids = feature_grids or {}
    branch_sources = branch_sources or {}

    frames_doc = []
    for i, frame in enumerate(scene.frames):
        depth_name = f"frame_{i:03d}_depth.vgt"
        write_tensor(out / depth_name, frame.depth)
        frames_doc.append(
            {
                "index": i,
                "depth_path": depth_name,
                "pose": _flat16(frame.cam_to_world),
                "intrinsics": {
                    "fx": frame.intrinsics.fx,
                    "fy": frame.intrinsics.fy,
                    "cx": frame.intrinsics.cx,
                    "cy": frame.intrinsics.cy,
                },
            }
        )

    features_doc = {}
    for branch, grid in feature_grids.items():
        tensor_name = f"features_{branch}.vgt"
        write_tensor(out / tensor_name, grid.values)
        features_doc[branch] = {
            "tensor_path": tensor_name,
            "grid": [grid.frames, grid.rows, grid.cols, grid.channels],
            "source": branch_sources.get(branch, {}),
        }

    doc = {
        "kind": "posed_scene",
        "scene_id": scene.scene_id,
        "axis_align": _flat16(scene.axis_align),
        "frames": frames_doc,
        "features": features_doc,
    }
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest


def load_scene(manifest_path) -> tuple[PosedScene, dict[str, TokenGrid]]:
    """Load and validate a posed-scene manifest.

    Missing files and grid/tensor dimension mismatches are errors; a pose
    rotation deviating from orthonormality beyond 1e-4 only warns.
    """
    manifest = Path(manifest_path)
    root = manifest.parent
    try:
        doc = json.loads(manifest.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest}: invalid JSON: {exc}") from exc
    if doc.get("kind") != "posed_scene":
        raise ManifestError(f"{manifest}: expected kind 'posed_scene', got {doc.get('kind')!r}")

    frames_doc = doc.get("frames", [])
    if not frames_doc:
        raise ManifestError(f"{manifest}: no frames")
    if all("index" in f for f in frames_doc):
        frames_doc = sorted(frames_doc, key=lambda f: f["index"])

    frames = []
    for f in frames_doc:
        try:
            depth_rel = f["depth_path"]
            pose_flat = f["pose"]
            intr = f["intrinsics"]
        except KeyError as exc:
            raise ManifestError(f"{manifest}: frame record missing field {exc}") from exc
        depth_path = root / depth_rel
        if not depth_path.exists():
            raise ManifestError(f"{manifest}: missing depth file {depth_rel}")
        depth = read_tensor(depth_path)
        if depth.ndim != 2:
            raise ManifestError(f"{manifest}: depth {depth_rel} must be 2-D")
        pose = np.asarray(pose_flat, dtype=np.float64).reshape(4, 4)
        deviation = rotation_deviation(pose)
        if deviation > ROTATION_WARN_TOL:
            warnings.warn(
                f"{manifest}: frame {f.get('index')} rotation deviates from "
                f"orthonormal by {deviation:.3e}",
                stacklevel=2,
            )
        frames.append(
            PosedFrame(
                depth.astype(np.float32),
                Intrinsics(intr["fx"], intr["fy"], intr["cx"], intr["cy"]),
                pose,
            )
        )

    axis_align = np.asarray(doc["axis_align"], dtype=np.float64).reshape(4, 4)
    scene = PosedScene(tuple(frames), axis_align, doc.get("scene_id", "scene"))

    grids: dict[str, TokenGrid] = {}
    for branch, entry in doc.get("features", {}).items():
        tensor_path = root / entry["tensor_path"]
        if not tensor_path.exists():
            raise ManifestError(f"{manifest}: missing feature tensor for branch {branch!r}")
        values = read_tensor(tensor_path)
        declared = tuple(entry["grid"])
        if values.ndim != 4 or values.shape != declared:
            raise ManifestError(
                f"{manifest}: branch {branch!r} grid dims {declared} do not match "
                f"tensor shape {values.shape}"
            )
        grids[branch] = TokenGrid(values)
    return scene, grids


def write_token_cloud_manifest(out_dir, cloud: TokenCloud, scene_id: str) -> Path:
    """Write an already-flattened token cloud as a manifest directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(out / "features.vgt", np.asarray(cloud.features, dtype=np.float64))
    write_tensor(out / "coords.vgt", cloud.coords)
    write_tensor(out / "view_ids.vgt", cloud.view_ids.astype(np.float64))
    write_tensor(out / "valid.vgt", cloud.valid.astype(np.float64))
    doc = {
        "kind": "token_cloud",
        "scene_id": scene_id,
        "features_path": "features.vgt",
        "coords_path": "coords.vgt",
        "view_ids_path": "view_ids.vgt",
        "valid_path": "valid.vgt",
    }
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest


def load_token_cloud(manifest_path) -> tuple[str, TokenCloud]:
    manifest = Path(manifest_path)
    root = manifest.parent
    try:
        doc = json.loads(manifest.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest}: invalid JSON: {exc}") from exc
    if doc.get("kind") != "token_cloud":
        raise ManifestError(f"{manifest}: expected kind 'token_cloud', got {doc.get('kind')!r}")
    for key in ("features_path", "coords_path", "view_ids_path"):
        if not (root / doc[key]).exists():
            raise ManifestError(f"{manifest}: missing tensor {doc[key]}")
    features = read_tensor(root / doc["features_path"])
    coords = read_tensor(root / doc["coords_path"])
    view_ids = read_tensor(root / doc["view_ids_path"]).astype(np.int64)
    valid = None
    if doc.get("valid_path") and (root / doc["valid_path"]).exists():
        valid = read_tensor(root / doc["valid_path"]) > 0.5
    return doc.get("scene_id", "scene"), TokenCloud(features, coords, view_ids, valid)


def manifest_kind(manifest_path) -> str:
    try:
        doc = json.loads(Path(manifest_path).read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON: {exc}") from exc
    kind = doc.get("kind")
    if kind not in ("posed_scene", "token_cloud"):
        raise ManifestError(f"{manifest_path}: unknown manifest kind {kind!r}")
    return kind


# ---------------------------------------------------------------------------
# image output


def write_ppm(path, image: np.ndarray) -> None:
    """Write an H x W x 3 image as binary PPM (P6).

    Accepts uint8 directly or floats in [0, 1], which are scaled to 0..255.
    """
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must be H x W x 3, got {img.shape}")
    if img.dtype != np.uint8:
        img = np.clip(np.round(img.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes(order="C"))
