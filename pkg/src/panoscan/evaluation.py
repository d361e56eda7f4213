"""Interactive-click mIoU protocols: IoU, simulated clicks, benchmark reports.

Click placement treats the ERP longitude seam as continuous: distances and
connected components wrap horizontally (the sphere has no boundary there),
while the poles clamp. Distances are compared as exact squared integers so
results match a brute-force scan bit for bit, ties resolved by smallest
(v, then u).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .geometry import DomainError
from .prompts import NEGATIVE, POSITIVE, PromptPoint
from .scenes import bucket_for_area

_BUCKETS = ("small", "medium", "large")


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """|P & G| / |P | G| with the both-empty case defined as 1."""
    if pred.shape != gt.shape:
        raise DomainError(f"shape mismatch {pred.shape} vs {gt.shape}")
    p = pred.astype(bool)
    g = gt.astype(bool)
    union = np.count_nonzero(p | g)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(p & g) / union)


def _wrap_sqdist_to_background(mask: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance to the nearest zero pixel, wrapping in u.

    Computed on a 3x horizontal tiling: every wrapped offset min(|du|, W-|du|)
    <= W/2 is realized inside the tile, so the middle slice is exact. Rows
    outside the mask's row extent are entirely background, so cropping to the
    extent plus one all-background guard row keeps the result exact while
    bounding the transform's cost by the object height.
    """
    h, w = mask.shape
    if not (~mask).any():
        return np.full((h, w), (3 * w) ** 2 + h**2, dtype=np.int64)
    rows = np.flatnonzero(mask.any(axis=1))
    r0 = max(0, int(rows[0]) - 1)
    r1 = min(h, int(rows[-1]) + 2)
    tiled = np.tile(mask[r0:r1], (1, 3))
    dist = ndimage.distance_transform_edt(tiled)[:, w : 2 * w]
    out = np.zeros((h, w), dtype=np.int64)
    out[r0:r1] = np.rint(dist * dist).astype(np.int64)
    return out


def _argmax_row_major(values: np.ndarray, domain: np.ndarray) -> tuple[int, int]:
    """Row-major first argmax restricted to domain; implements the (v, u) tie rule."""
    scored = np.where(domain, values, -1)
    flat = int(np.argmax(scored))
    v, u = divmod(flat, values.shape[1])
    return v, u


def initial_click(gt: np.ndarray) -> PromptPoint:
    """Positive click at the gt point farthest from the mask boundary."""
    g = gt.astype(bool)
    if not g.any():
        raise DomainError("initial_click requires a non-empty ground-truth mask")
    sq = _wrap_sqdist_to_background(g)
    v, u = _argmax_row_major(sq, g)
    return PromptPoint(u=float(u), v=float(v), label=POSITIVE)


def wrap_connected_components(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label connected components treating columns 0 and W-1 as adjacent."""
    structure = np.ones((3, 3), dtype=bool) if connectivity == 8 else None
    labels, count = ndimage.label(mask, structure=structure)
    if count == 0 or mask.shape[1] < 2:
        return labels, count
    # Union labels that touch across the seam, then compact.
    h, w = mask.shape
    parent = list(range(count + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    left = labels[:, 0]
    right = labels[:, -1]
    offsets = (-1, 0, 1) if connectivity == 8 else (0,)
    for dv in offsets:
        lo = max(0, -dv)
        hi = h - max(0, dv)
        l_seg = left[lo + dv : hi + dv] if dv != 0 else left[lo:hi]
        r_seg = right[lo:hi]
        both = (l_seg > 0) & (r_seg > 0)
        for a, b in zip(l_seg[both].tolist(), r_seg[both].tolist()):
            union(a, b)

    roots = np.array([0] + [find(x) for x in range(1, count + 1)])
    compact = np.zeros(count + 1, dtype=labels.dtype)
    next_id = 0
    for x in range(1, count + 1):
        r = roots[x]
        if compact[r] == 0:
            next_id += 1
            compact[r] = next_id
        compact[x] = compact[r]
    return compact[labels], next_id


@dataclass(frozen=True)
class _Region:
    area: int
    is_fn: bool
    first_pixel: int  # row-major index, deterministic tie-break
    mask: np.ndarray


def _regions(mask: np.ndarray, is_fn: bool, connectivity: int) -> list[_Region]:
    labels, count = wrap_connected_components(mask, connectivity)
    out = []
    for lab in range(1, count + 1):
        comp = labels == lab
        out.append(
            _Region(
                area=int(comp.sum()),
                is_fn=is_fn,
                first_pixel=int(np.argmax(comp)),
                mask=comp,
            )
        )
    return out


def correction_click(
    pred: np.ndarray, gt: np.ndarray, connectivity: int = 8, prefer_fn: bool = True
) -> PromptPoint | None:
    """Click the farthest-interior point of the largest error component.

    False-negative components get a positive label, false-positive ones a
    negative label. Equal areas prefer FN, then the component whose first
    row-major pixel comes first. Returns None when pred == gt.
    """
    p = pred.astype(bool)
    g = gt.astype(bool)
    if p.shape != g.shape:
        raise DomainError(f"shape mismatch {p.shape} vs {g.shape}")
    fn = g & ~p
    fp = p & ~g
    if not fn.any() and not fp.any():
        return None
    regions = _regions(fn, True, connectivity) + _regions(fp, False, connectivity)
    fn_rank = (lambda r: not r.is_fn) if prefer_fn else (lambda r: r.is_fn)
    best = min(regions, key=lambda r: (-r.area, fn_rank(r), r.first_pixel))
    sq = _wrap_sqdist_to_background(best.mask)
    v, u = _argmax_row_major(sq, best.mask)
    return PromptPoint(u=float(u), v=float(v), label=POSITIVE if best.is_fn else NEGATIVE)


@dataclass
class InstanceRecord:
    """One evaluated instance: ground truth, clicks, and per-round IoUs."""

    instance_id: int
    bucket: str
    gt_mask: np.ndarray
    iou_history: list[float] = field(default_factory=list)
    clicks: list[PromptPoint] = field(default_factory=list)
    failed: bool = False
    failure: str = ""


@dataclass
class BenchmarkReport:
    """Aggregate mIoU: overall is the unweighted mean over instances."""

    rounds: int
    overall_miou: float
    bucket_miou: dict[str, float]
    bucket_counts: dict[str, int]
    per_round_miou: list[float]
    n_instances: int
    n_failed: int
    records: list[InstanceRecord] = field(repr=False, default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "overall_miou": self.overall_miou,
            "bucket_miou": self.bucket_miou,
            "bucket_counts": self.bucket_counts,
            "per_round_miou": self.per_round_miou,
            "n_instances": self.n_instances,
            "n_failed": self.n_failed,
            "instances": [
                {
                    "instance_id": r.instance_id,
                    "bucket": r.bucket,
                    "iou_history": r.iou_history,
                    "failed": r.failed,
                    "failure": r.failure,
                    "clicks": [{"u": c.u, "v": c.v, "label": c.label} for c in r.clicks],
                }
                for r in self.records
            ],
        }

    def to_table(self) -> str:
        header = f"{'Setting':<22}{'Overall':>9}{'Small':>9}{'Medium':>9}{'Large':>9}"
        lines = [header, "-" * len(header)]
        label = "1-click" if self.rounds == 1 else f"{self.rounds}-click EC"

        def fmt(x: float | None) -> str:
            return f"{100 * x:>9.1f}" if x is not None else f"{'-':>9}"

        cells = [fmt(self.overall_miou)]
        for b in _BUCKETS:
            cells.append(fmt(self.bucket_miou.get(b)))
        lines.append(f"{label:<22}" + "".join(cells))
        counts = ", ".join(f"{b}: {self.bucket_counts.get(b, 0)}" for b in _BUCKETS)
        lines.append(f"instances: {self.n_instances} ({counts}); failed: {self.n_failed}")
        return "\n".join(lines)


SegmentFn = Callable[[Sequence[PromptPoint]], np.ndarray]


def run_instance(
    gt_mask: np.ndarray, rounds: int, segment: SegmentFn, connectivity: int = 8
) -> tuple[list[float], list[PromptPoint]]:
    """Drive the click protocol for one instance; re-segments with all clicks."""
    clicks = [initial_click(gt_mask)]
    pred = segment(clicks).astype(bool)
    ious = [iou(pred, gt_mask)]
    for _ in range(rounds - 1):
        correction = correction_click(pred, gt_mask, connectivity=connectivity)
        if correction is None:
            ious.append(ious[-1])
            continue
        clicks.append(correction)
        pred = segment(clicks).astype(bool)
        ious.append(iou(pred, gt_mask))
    return ious, clicks


def run_protocol(
    instances: Sequence[tuple[int, np.ndarray]],
    rounds: int,
    segment_for_instance: Callable[[int, Sequence[PromptPoint]], np.ndarray],
    connectivity: int = 8,
) -> BenchmarkReport:
    """Evaluate (instance_id, gt_mask) pairs under the n-click protocol.

    Segmenter failures mark the instance failed and exclude it from the
    means; the failure count is surfaced in the report.
    """
    if rounds not in (1, 3):
        raise DomainError(f"rounds must be 1 or 3, got {rounds}")
    records: list[InstanceRecord] = []
    for idx, (instance_id, gt_mask) in enumerate(instances):
        h, w = gt_mask.shape
        area = int(np.count_nonzero(gt_mask))
        bucket = bucket_for_area(area, w, h)
        rec = InstanceRecord(instance_id=instance_id, bucket=bucket, gt_mask=gt_mask)
        try:
            segment = lambda clicks: segment_for_instance(idx, clicks)  # noqa: E731
            rec.iou_history, rec.clicks = run_instance(
                gt_mask, rounds, segment, connectivity=connectivity
            )
        except Exception as exc:  # segmenter failure: excluded, never silent
            rec.failed = True
            rec.failure = f"{type(exc).__name__}: {exc}"
        records.append(rec)

    ok = [r for r in records if not r.failed]
    finals = np.array([r.iou_history[-1] for r in ok]) if ok else np.array([])
    per_round = []
    for rd in range(rounds):
        vals = [r.iou_history[rd] for r in ok]
        per_round.append(float(np.mean(vals)) if vals else float("nan"))
    bucket_miou: dict[str, float] = {}
    bucket_counts: dict[str, int] = {}
    for b in _BUCKETS:
        sub = [r.iou_history[-1] for r in ok if r.bucket == b]
        bucket_counts[b] = sum(1 for r in records if r.bucket == b)
        if sub:
            bucket_miou[b] = float(np.mean(sub))
    return BenchmarkReport(
        rounds=rounds,
        overall_miou=float(finals.mean()) if finals.size else float("nan"),
        bucket_miou=bucket_miou,
        bucket_counts=bucket_counts,
        per_round_miou=per_round,
        n_instances=len(records),
        n_failed=sum(1 for r in records if r.failed),
        records=records,
    )


def load_manifest(path: str) -> list[dict]:
    """Benchmark manifest: JSON list of {rgb_path, label_path, instance_id}."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise DomainError("benchmark manifest must be a JSON list")
    return doc
