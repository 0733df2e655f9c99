"""Command line entry for the exporter."""

from __future__ import annotations

import argparse
import sys

from .backbones import BackboneLoadError
from .export import ExportConfig, export_scene, load_input_scene


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sceneexport", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("export", help="run a backbone and write scene manifests")
    p.add_argument("scenes", nargs="+", help="input scene directories (scene.json inside)")
    p.add_argument("--manifest-out", required=True, help="output root directory")
    p.add_argument("--backbone", default="dummy-random")
    p.add_argument("--layer", type=int, default=20)
    p.add_argument("--timestep", type=int, default=300)
    p.add_argument("--total-steps", type=int, default=1000)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--grid", default="14x14")
    p.add_argument("--prompt", default="")
    p.add_argument("--branch", default="gen")
    p.add_argument("--seed", type=int, default=0)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "export":
        parser.print_help()
        return 1
    try:
        gh, gw = (int(v) for v in args.grid.lower().split("x"))
        cfg = ExportConfig(
            backbone_id=args.backbone,
            layer=args.layer,
            timestep=args.timestep,
            total_steps=args.total_steps,
            frames=args.frames,
            target_grid=(gh, gw),
            prompt=args.prompt,
            seed=args.seed,
            branch=args.branch,
        )
        from pathlib import Path

        for scene_dir in args.scenes:
            scene = load_input_scene(scene_dir)
            manifest = export_scene(
                scene, cfg, Path(args.manifest_out) / scene.scene_id
            )
            print(manifest)
    except (OSError, ValueError, BackboneLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
