#!/usr/bin/env python3
"""Per-stage timing of the segmentation pipeline at several resolutions.

The interesting numbers are frame rendering and mask fusion at 4K; both are
data-parallel resampling passes and should stay interactive on a desktop CPU.
"""

import argparse

import numpy as np

from panoscan.evaluation import initial_click
from panoscan.pipeline import PipelineConfig, segment_panorama
from panoscan.scenes import random_scene, render_scene
from panoscan.segmenter import OracleSegmenter
from panoscan.trajectory import TrajectoryConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--widths", type=int, nargs="+", default=[1024, 2048, 4096])
    ap.add_argument("--viewport", type=int, default=1024)
    ap.add_argument("--repeats", type=int, default=2)
    args = ap.parse_args()

    cfg = PipelineConfig(trajectory=TrajectoryConfig(size_l=args.viewport))
    rng = np.random.default_rng(1)
    scene = random_scene(rng, n_instances=2)

    for width in args.widths:
        height = width // 2
        rgb, label = render_scene(scene, width, height)
        gt = label.data == len(scene.instances)
        click = initial_click(gt)
        seg = OracleSegmenter(label)
        best: dict[str, float] = {}
        for _ in range(args.repeats):
            res = segment_panorama(rgb, [click], cfg, seg)
            for stage, secs in res.timings.items():
                best[stage] = min(best.get(stage, float("inf")), secs)
        total = sum(best.values())
        stages = "  ".join(f"{k}={v * 1000:.0f}ms" for k, v in best.items())
        print(f"{width}x{height}: total={total:.2f}s  {stages}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
