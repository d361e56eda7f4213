#!/usr/bin/env python3
"""Render a panorama's scanning trajectory into a contact sheet.

Takes an RGB panorama (or synthesizes a random scene when none is given),
renders every viewport along the zigzag scan, and tiles them in traversal
order: columns of the sheet are yaw columns, read down then up alternately.
Also dumps the trajectory JSON next to the sheet.
"""

import argparse
from pathlib import Path

import numpy as np

from panoscan.geometry import intrinsics_from_fov
from panoscan.pano_io import load_panorama, save_rgb
from panoscan.pipeline import render_trajectory_frames
from panoscan.scenes import random_scene, render_scene
from panoscan.trajectory import TrajectoryConfig, generate_trajectory


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pano", help="input panorama PNG/JPEG; random scene if omitted")
    ap.add_argument("--out", default="scan_demo", help="output directory")
    ap.add_argument("--viewport", type=int, default=256)
    ap.add_argument("--overlap", type=float, default=0.5)
    ap.add_argument("--fov", type=float, default=90.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.pano:
        pano = load_panorama(args.pano)
    else:
        scene = random_scene(np.random.default_rng(args.seed), n_instances=4)
        pano, _ = render_scene(scene, 2048, 1024)
        save_rgb(out / "panorama.png", pano)

    cfg = TrajectoryConfig(args.fov, args.fov, overlap_r=args.overlap, size_l=args.viewport)
    traj = generate_trajectory(cfg)
    k = intrinsics_from_fov(args.fov, args.viewport)
    frames = render_trajectory_frames(pano, traj, k)

    border = 4
    side = args.viewport
    sheet = np.ones(
        (traj.n_pitch * (side + border) + border, traj.n_yaw * (side + border) + border, 3),
        dtype=np.float32,
    )
    for frame, col, row in zip(frames, traj.columns, traj.rows):
        y = border + (row - 1) * (side + border)
        x = border + (col - 1) * (side + border)
        sheet[y : y + side, x : x + side] = frame.image

    save_rgb(out / "contact_sheet.png", sheet)
    (out / "trajectory.json").write_text(traj.to_json(), encoding="utf-8")
    print(f"{len(frames)} frames ({traj.n_yaw} columns x {traj.n_pitch} rows), "
          f"closed loop: {traj.closed_loop}")
    print(f"wrote {out / 'contact_sheet.png'} and trajectory.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
