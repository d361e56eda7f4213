#!/usr/bin/env python3
"""Oracle-backend benchmark over random analytic scenes.

Generates labeled panoramas, runs the 1-click (and optionally 3-click)
protocol with the ground-truth oracle segmenter, and prints the mIoU table.
With an exact segmenter both protocols should sit at ~1.0; this is the
harness self-test, not a model evaluation.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from panoscan.pipeline import PipelineConfig, segment_panorama
from panoscan.evaluation import run_protocol
from panoscan.scenes import random_scene, render_scene
from panoscan.segmenter import OracleSegmenter
from panoscan.trajectory import TrajectoryConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenes", type=int, default=20)
    ap.add_argument("--width", type=int, default=2048)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rounds", type=int, choices=(1, 3), default=1)
    ap.add_argument("--viewport", type=int, default=1024)
    ap.add_argument("--seam-every", type=int, default=4, help="every k-th scene crosses the seam")
    ap.add_argument("--out", help="write the report JSON here")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = PipelineConfig(trajectory=TrajectoryConfig(size_l=args.viewport))
    height = args.width // 2

    assets = []
    for i in range(args.scenes):
        scene = random_scene(
            rng,
            n_instances=2,
            seam_crossing=(args.seam_every > 0 and i % args.seam_every == 0),
            pole_adjacent=(args.seam_every > 0 and i % args.seam_every == 1),
        )
        rgb, label = render_scene(scene, args.width, height)
        target = len(scene.instances)
        assets.append((rgb, label, target))

    def segment_for_instance(idx, clicks):
        rgb, label, _ = assets[idx]
        res = segment_panorama(rgb, list(clicks), cfg, OracleSegmenter(label))
        return res.fused.binary

    instances = [(target, label.data == target) for _, label, target in assets]
    t0 = time.perf_counter()
    report = run_protocol(instances, rounds=args.rounds, segment_for_instance=segment_for_instance)
    elapsed = time.perf_counter() - t0

    print(report.to_table())
    print(f"\n{args.scenes} scenes at {args.width}x{height}, {elapsed:.1f}s "
          f"({elapsed / args.scenes:.2f}s per scene)")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_json_dict(), indent=2), encoding="utf-8")
        print(f"report written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
