"""Single executable exposing the pipeline to batch users.

Exit codes: 0 success, 1 validation failure (including bad flags), 2 I/O or
file-format errors. Subcommands communicate through manifest paths, never
raw tensors on stdin: ``synth`` prints the manifests it wrote and
``corr-score`` reads manifest paths from its arguments or stdin lines.
Identical flags and seeds produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .correspondence import (
    build_token_cloud,
    dataset_score,
    scene_score,
    voxelize,
    write_score_report,
)
from .fusion import gradient_suite
from .geometry import PosedScene, sample_frames
from .io_formats import (
    ManifestError,
    TensorFileError,
    load_scene,
    load_token_cloud,
    manifest_kind,
    read_tensor,
    write_ppm,
    write_scene_manifest,
    write_tensor,
    write_token_cloud_manifest,
)
from .metrics import (
    avg_rank,
    nos,
    pearson,
    read_metric_table,
    write_nos_csv,
    write_rank_csv,
)
from .noising import DEFAULT_TIMESTEP, DEFAULT_TOTAL_STEPS, noisy_latent
from .synth import RoomConfig, TokenSceneConfig, gen_rgbd_room, gen_token_scene, voxel_keyed_grid
from .tensor_core import TokenGrid, adaptive_avg_pool2d, pca_project

OUTPUT_DIR_ENV = "VOXELPROBE_OUTPUT_DIR"

_DEPTH_MODES = {"include-zero": "include_zero_depth", "masked": "masked"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit code 1, not 2."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"{what} must look like 14x14, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_extent(text: str) -> tuple[float, float, float]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"room extent must look like 5x4x3, got {text!r}")
    return float(parts[0]), float(parts[1]), float(parts[2])


def _default_out_dir(args) -> Path:
    if args.output:
        return Path(args.output)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path("voxelprobe_out")


# ---------------------------------------------------------------------------
# subcommands


def cmd_corr_score(args) -> int:
    paths = list(args.manifests)
    if not paths:
        paths = [line.strip() for line in sys.stdin if line.strip()]
    if not paths:
        raise ValueError("no manifests given (pass paths or pipe them on stdin)")
    mode = _DEPTH_MODES[args.depth_mode]

    results = []
    for path in paths:
        kind = manifest_kind(path)
        if kind == "token_cloud":
            scene_id, cloud = load_token_cloud(path)
        else:
            scene, grids = load_scene(path)
            if not grids:
                raise ValueError(
                    f"{path}: geometry-only scene (no feature branches); "
                    "correspondence unavailable"
                )
            branch = args.branch or sorted(grids)[0]
            if branch not in grids:
                raise ValueError(f"{path}: no feature branch {branch!r} (have {sorted(grids)})")
            grid = grids[branch]
            idx = sample_frames(len(scene.frames), args.frames)
            if len(idx) != len(scene.frames):
                subset = tuple(scene.frames[int(i)] for i in idx)
                if grid.frames == len(scene.frames):
                    grid = TokenGrid(grid.values[idx])
                scene = PosedScene(subset, scene.axis_align, scene.scene_id)
            scene_id = scene.scene_id
            cloud = build_token_cloud(scene, grid, mode=mode)
        results.append((scene_id, scene_score(voxelize(cloud, args.voxel_size))))

    results.sort(key=lambda item: item[0])
    summary = dataset_score([score for _, score in results])
    print(f"score {summary.mean:.6f}")
    print(f"std {summary.std:.6f} valid {summary.valid_count} nan {summary.nan_count}")
    if args.output:
        write_score_report(args.output, [sid for sid, _ in results], [s for _, s in results])
    return 0


def cmd_nos(args) -> int:
    table = read_metric_table(args.table, args.groups)
    result = nos(table)
    for name in table.methods:
        if name in result.scores:
            print(f"{name},{result.scores[name]:.2f}")
    for label in sorted(result.baseline_scores):
        print(f"{table.baseline}@{label},{result.baseline_scores[label]:.2f}")
    if args.output:
        write_nos_csv(args.output, result, table.baseline or "baseline")
    return 0


def cmd_rank(args) -> int:
    table = read_metric_table(args.table)
    ranks = avg_rank(table)
    for name in table.methods:
        if name in ranks:
            print(f"{name},{ranks[name]:.3f}")
    if args.output:
        write_rank_csv(args.output, {n: ranks[n] for n in table.methods if n in ranks})
    return 0


def _read_pairs(path) -> list[tuple[float, float]]:
    pairs = []
    with open(path) as fh:
        for line in fh:
            cells = [c.strip() for c in line.replace(",", " ").split()]
            if len(cells) < 2:
                continue
            try:
                pairs.append((float(cells[0]), float(cells[1])))
            except ValueError:
                continue  # header line
    return pairs


def cmd_correlate(args) -> int:
    pairs = _read_pairs(args.pairs)
    r = pearson(pairs)
    print(f"r {r:.6f}")
    return 0


def cmd_fuse_check(args) -> int:
    worst = gradient_suite(trials=args.trials, h=args.step, seed=args.seed)
    print(f"max relative error {worst:.3e} over {args.trials} trials")
    return 0 if worst < args.tolerance else 1


def cmd_noise(args) -> int:
    z0 = read_tensor(args.input)
    noised = noisy_latent(z0, args.timestep, args.total_steps, args.seed)
    write_tensor(args.output, noised)
    print(args.output)
    return 0


def cmd_synth(args) -> int:
    out_root = _default_out_dir(args)
    grid_hw = _parse_pair(args.grid, "grid")
    for i in range(args.scenes):
        seed = args.seed + i
        if args.mode == "tokens":
            cfg = TokenSceneConfig(
                n_views=args.views,
                tokens_per_view=args.tokens_per_view,
                feature_dim=args.feature_dim,
                voxel_size=args.voxel_size,
                sigma=args.sigma,
                seed=seed,
                iid_features=args.iid,
            )
            manifest = write_token_cloud_manifest(
                out_root / f"tokens_{seed:04d}", gen_token_scene(cfg), f"tokens-{seed:04d}"
            )
        else:
            room = RoomConfig(
                extent=_parse_extent(args.room),
                n_views=args.views,
                image_hw=_parse_pair(args.image_size, "image size"),
                scene_id=f"room-{seed:04d}",
            )
            scene = gen_rgbd_room(room)
            grid = voxel_keyed_grid(
                scene,
                grid_hw=grid_hw,
                feature_dim=args.feature_dim,
                voxel_size=args.voxel_size,
                seed=seed,
                sigma=args.sigma,
                mode=_DEPTH_MODES[args.depth_mode],
            )
            manifest = write_scene_manifest(
                out_root / f"room_{seed:04d}",
                scene,
                {"synthetic": grid},
                {
                    "synthetic": {
                        "backbone": "voxel-keyed-synthetic",
                        "sigma": args.sigma,
                        "seed": seed,
                    }
                },
            )
        print(manifest)
    return 0


def cmd_pca_vis(args) -> int:
    values = read_tensor(args.input)
    if values.ndim == 3:
        values = values[None]
    if values.ndim != 4:
        raise ValueError(f"expected a T x h x w x C tensor, got shape {values.shape}")
    t, h, w, c = values.shape
    if c < 3:
        raise ValueError("need at least 3 channels for an RGB projection")
    coords, _, ratios = pca_project(values.reshape(-1, c).astype(np.float64), 3)
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo
    span[span == 0] = 1.0
    rgb = ((coords - lo) / span).reshape(t, h, w, 3)

    out = Path(args.output) if args.output else _default_out_dir(args) / "pca.ppm"
    out.parent.mkdir(parents=True, exist_ok=True)
    if t == 1:
        write_ppm(out, rgb[0])
        print(out)
    else:
        stem, suffix = out.with_suffix(""), out.suffix or ".ppm"
        for i in range(t):
            frame_path = Path(f"{stem}_{i:03d}{suffix}")
            write_ppm(frame_path, rgb[i])
            print(frame_path)
    print(f"explained variance ratios {ratios[0]:.4f} {ratios[1]:.4f} {ratios[2]:.4f}")
    return 0


def cmd_pool(args) -> int:
    arr = read_tensor(args.input)
    out_h, out_w = _parse_pair(args.grid, "grid")
    if arr.ndim in (2, 3):
        pooled = adaptive_avg_pool2d(arr, out_h, out_w)
    elif arr.ndim == 4:
        pooled = np.stack([adaptive_avg_pool2d(frame, out_h, out_w) for frame in arr])
    else:
        raise ValueError(f"cannot pool a {arr.ndim}-D tensor")
    write_tensor(args.output, pooled)
    print(args.output)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="voxelprobe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"voxelprobe {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, *, seed=True, output=True):
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if output:
            p.add_argument("--output", help="artifact path (or directory for synth)")

    p = sub.add_parser("corr-score", help="score scene manifests for cross-view consistency")
    p.add_argument("manifests", nargs="*", help="manifest paths; stdin lines if omitted")
    p.add_argument("--voxel-size", type=float, default=0.1)
    p.add_argument("--frames", type=int, default=32, help="uniform frame-sampling cap")
    p.add_argument("--depth-mode", choices=sorted(_DEPTH_MODES), default="include-zero")
    p.add_argument("--branch", help="feature branch to score (default: first)")
    common(p, seed=False)
    p.set_defaults(func=cmd_corr_score)

    p = sub.add_parser("nos", help="group-normalized overall scores from a metric table")
    p.add_argument("--table", required=True, help="metric-table CSV")
    p.add_argument("--groups", required=True, help="group map sidecar config")
    common(p, seed=False)
    p.set_defaults(func=cmd_nos)

    p = sub.add_parser("rank", help="average fractional ranks over available metrics")
    p.add_argument("--table", required=True, help="metric-table CSV")
    common(p, seed=False)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("correlate", help="Pearson correlation of a two-column file")
    p.add_argument("--pairs", required=True, help="CSV/whitespace file of (x, y) rows")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("fuse-check", help="finite-difference audit of the fusion gradients")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    common(p, output=False)
    p.set_defaults(func=cmd_fuse_check)

    p = sub.add_parser("noise", help="corrupt a latent tensor along the noising path")
    p.add_argument("--input", required=True, help="clean latent tensor file")
    p.add_argument("--timestep", type=int, default=DEFAULT_TIMESTEP)
    p.add_argument("--total-steps", type=int, default=DEFAULT_TOTAL_STEPS)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("synth", help="generate synthetic scenes with known ground truth")
    p.add_argument("--mode", choices=["tokens", "room"], required=True)
    p.add_argument("--scenes", type=int, default=1)
    p.add_argument("--sigma", type=float, default=0.0, help="feature corruption scale")
    p.add_argument("--iid", action="store_true", help="i.i.d. features (null model)")
    p.add_argument("--views", type=int, default=8)
    p.add_argument("--tokens-per-view", type=int, default=196)
    p.add_argument("--feature-dim", type=int, default=32)
    p.add_argument("--voxel-size", type=float, default=0.1)
    p.add_argument("--grid", default="14x14")
    p.add_argument("--image-size", default="48x64")
    p.add_argument("--room", default="5x4x3")
    p.add_argument("--depth-mode", choices=sorted(_DEPTH_MODES), default="include-zero")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pca-vis", help="project a token grid to RGB principal components")
    p.add_argument("--input", required=True, help="T x h x w x C tensor file")
    common(p, seed=False)
    p.set_defaults(func=cmd_pca_vis)

    p = sub.add_parser("pool", help="adaptively average-pool a tensor file")
    p.add_argument("--input", required=True)
    p.add_argument("--grid", default="14x14")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_pool)

    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return 0 if not exc.code else 1
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    try:
        return int(args.func(args) or 0)
    except (TensorFileError, ManifestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
