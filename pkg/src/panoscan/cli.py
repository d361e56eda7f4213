"""panoscan command line: project, segment, synth, eval, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .evaluation import load_manifest, run_protocol
from .geometry import DomainError
from .pano_io import load_labels, load_panorama, save_labels, save_mask, save_plane16, save_rgb
from .pipeline import (
    PipelineConfig,
    load_pipeline_config,
    make_segmenter,
    render_trajectory_frames,
    result_summary_dict,
    segment_panorama,
)
from .projection import UsageError
from .prompts import load_prompts
from .scenes import load_scene, random_scene, render_scene, scene_size_census, save_scene
from .segmenter import BackendError
from .trajectory import ConfigError, TrajectoryConfig, generate_trajectory

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; the CLI contract is 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise _UsageExit(message)


class _UsageExit(Exception):
    pass


def _add_trajectory_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--fov", type=float, default=None, help="square viewport FoV in degrees")
    p.add_argument("--overlap", type=float, default=None, help="overlap ratio in [0, 1)")
    p.add_argument("--viewport", type=int, default=None, help="viewport side L in pixels")


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_pipeline_config(args.config) if args.config else PipelineConfig()
    traj = cfg.trajectory
    fov = args.fov if args.fov is not None else traj.beta_h_deg
    traj = TrajectoryConfig(
        beta_h_deg=fov,
        beta_v_deg=fov,
        overlap_r=args.overlap if args.overlap is not None else traj.overlap_r,
        size_l=args.viewport if args.viewport is not None else traj.size_l,
    )
    segmenter = getattr(args, "segmenter", None) or cfg.segmenter
    threshold = getattr(args, "threshold", None)
    return PipelineConfig(
        trajectory=traj,
        segmenter=segmenter,
        threshold=threshold if threshold is not None else cfg.threshold,
        parallelism=cfg.parallelism,
        cache_dir=cfg.cache_dir,
    )


def _cmd_project(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    pano = load_panorama(args.pano)
    traj = generate_trajectory(cfg.trajectory)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = render_trajectory_frames(pano, traj, cfg.intrinsics(), parallelism=cfg.parallelism)
    for frame in frames:
        save_rgb(out / f"frame_{frame.frame_index:03d}.png", frame.image)
    (out / "trajectory.json").write_text(traj.to_json(), encoding="utf-8")
    print(f"wrote {len(frames)} frames and trajectory.json to {out}")
    return EXIT_OK


def _cmd_segment(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    pano = load_panorama(args.pano)
    prompts = load_prompts(args.prompts)
    label_plane = load_labels(args.labels) if args.labels else None
    segmenter = make_segmenter(cfg, label_plane=label_plane)
    result = segment_panorama(pano, prompts, cfg, segmenter)
    save_mask(args.out, result.fused.binary)
    if args.plane:
        save_plane16(args.plane, result.fused.plane)
    if args.result:
        Path(args.result).write_text(
            json.dumps(result_summary_dict(result), indent=2), encoding="utf-8"
        )
    print(f"wrote mask to {args.out} (start frame {result.start_index})")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.scene:
        scene = load_scene(args.scene)
    else:
        rng = np.random.default_rng(args.seed)
        scene = random_scene(
            rng,
            n_instances=args.instances,
            seam_crossing=args.seam,
            pole_adjacent=args.pole,
        )
    width = args.width
    height = width // 2
    rgb, label = render_scene(scene, width, height)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_rgb(out / "rgb.png", rgb)
    save_labels(out / "label.png", label)
    save_scene(scene, str(out / "scene.json"))
    census = scene_size_census(label, width, height)
    from .evaluation import initial_click  # local import avoids cycle at module load

    instances = []
    for instance_id, info in sorted(census.items()):
        click = initial_click(label.data == instance_id)
        instances.append(
            {
                "id": instance_id,
                "area": info["area"],
                "bucket": info["bucket"],
                "prompt": {"u": click.u, "v": click.v, "label": click.label},
            }
        )
    (out / "instances.json").write_text(json.dumps(instances, indent=2), encoding="utf-8")
    print(f"wrote rgb.png, label.png, scene.json, instances.json to {out}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    manifest = load_manifest(args.manifest)
    entries = []
    for item in manifest:
        pano = load_panorama(item["rgb_path"])
        labels = load_labels(item["label_path"])
        entries.append((pano, labels, int(item["instance_id"])))

    instances = [
        (instance_id, labels == instance_id) for (_, labels, instance_id) in entries
    ]

    def segment_for_instance(idx: int, clicks) -> np.ndarray:
        pano, labels, _ = entries[idx]
        segmenter = make_segmenter(cfg, label_plane=labels)
        result = segment_panorama(pano, list(clicks), cfg, segmenter)
        return result.fused.binary

    report = run_protocol(instances, rounds=args.rounds, segment_for_instance=segment_for_instance)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_json_dict(), indent=2), encoding="utf-8")
    print(report.to_table())
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args)
    from .server import run_server

    run_server(cfg, bind=args.bind)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="panoscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="render trajectory frames from a panorama")
    p.add_argument("--pano", required=True)
    p.add_argument("--out", required=True)
    _add_trajectory_flags(p)
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("segment", help="segment a panorama from click prompts")
    p.add_argument("--pano", required=True)
    p.add_argument("--prompts", required=True, help="JSON prompt file")
    p.add_argument("--out", required=True, help="output mask PNG")
    p.add_argument("--plane", help="optional 16-bit real-valued plane PNG")
    p.add_argument("--result", help="optional result summary JSON")
    p.add_argument("--labels", help="ground-truth label PNG (oracle backend)")
    p.add_argument("--segmenter", help="'oracle' or external endpoint URL")
    p.add_argument("--threshold", type=float, default=None)
    _add_trajectory_flags(p)
    p.set_defaults(fn=_cmd_segment)

    p = sub.add_parser("synth", help="generate an analytic labeled panorama")
    p.add_argument("--out", required=True)
    p.add_argument("--scene", help="scene JSON; omit for a random scene")
    p.add_argument("--width", type=int, default=2048)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=3)
    p.add_argument("--seam", action="store_true", help="force a seam-crossing instance")
    p.add_argument("--pole", action="store_true", help="force a pole-adjacent instance")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("eval", help="run the interactive-click mIoU protocol")
    p.add_argument("--manifest", required=True, help="JSON benchmark manifest")
    p.add_argument("--rounds", type=int, choices=(1, 3), default=1)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--segmenter", help="'oracle' or external endpoint URL")
    _add_trajectory_flags(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--segmenter", help="'oracle' or external endpoint URL")
    _add_trajectory_flags(p)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageExit as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"backend error ({exc.stage}): {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DomainError, ConfigError, UsageError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
