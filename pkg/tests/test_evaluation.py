import numpy as np
import pytest

from panoscan.evaluation import (
    correction_click,
    initial_click,
    iou,
    run_instance,
    run_protocol,
    wrap_connected_components,
)
from panoscan.geometry import DomainError

from .oracles import brute_components, brute_correction_click, brute_initial_click


def _random_blob_mask(rng, h=64, w=128, n_blobs=3):
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(n_blobs):
        cv = rng.integers(0, h)
        cu = rng.integers(0, w)
        rv = rng.integers(2, h // 4)
        ru = rng.integers(2, w // 4)
        vv, uu = np.mgrid[0:h, 0:w]
        du = np.abs(uu - cu)
        du = np.minimum(du, w - du)
        mask |= ((vv - cv) / rv) ** 2 + (du / ru) ** 2 <= 1.0
    return mask


class TestIou:
    def test_identical(self):
        m = np.zeros((8, 8), bool)
        m[2:4, 2:4] = True
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((8, 8), bool)
        b = np.zeros((8, 8), bool)
        a[0, 0] = True
        b[5, 5] = True
        assert iou(a, b) == 0.0

    def test_half_overlap_hand_counted(self):
        # 3x3 grid: P covers two cells, G covers two cells, sharing two and
        # disagreeing on two -> |P&G|=2, |P|G|=4.
        p = np.zeros((3, 3), bool)
        g = np.zeros((3, 3), bool)
        p[0, 0] = p[0, 1] = p[1, 0] = True
        g[0, 0] = g[0, 1] = g[2, 2] = True
        assert iou(p, g) == pytest.approx(2 / 4)

    def test_both_empty_is_one(self):
        assert iou(np.zeros((4, 4), bool), np.zeros((4, 4), bool)) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            iou(np.zeros((4, 4), bool), np.zeros((4, 8), bool))


class TestInitialClick:
    def test_square_center(self):
        gt = np.zeros((32, 64), bool)
        gt[8:15, 20:27] = True  # 7x7 square centred at (11, 23)
        click = initial_click(gt)
        assert (click.v, click.u) == (11.0, 23.0)
        assert click.label == "positive"

    def test_disk_center_tie_rule(self):
        gt = np.zeros((32, 64), bool)
        vv, uu = np.mgrid[0:32, 0:64]
        gt[(vv - 10) ** 2 + (uu - 30) ** 2 <= 36] = True
        click = initial_click(gt)
        bv, bu = brute_initial_click(gt)
        assert (click.v, click.u) == (bv, bu)

    def test_seam_crossing_band(self):
        # A band through the seam: the farthest point must sit near phi=180,
        # not at the raster edge.
        gt = np.zeros((64, 128), bool)
        gt[28:37, :12] = True
        gt[28:37, -12:] = True
        click = initial_click(gt)
        bv, bu = brute_initial_click(gt)
        assert (click.v, click.u) == (bv, bu)
        assert click.u < 12 or click.u >= 116

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            initial_click(np.zeros((8, 16), bool))

    def test_matches_brute_force_on_random_masks(self, rng):
        # A quick sample; the acceptance suite runs the full 200-mask sweep.
        for _ in range(12):
            gt = _random_blob_mask(rng)
            if not gt.any() or gt.all():
                continue
            click = initial_click(gt)
            assert (click.v, click.u) == brute_initial_click(gt)


class TestWrapComponents:
    def test_seam_blob_is_single_component(self):
        mask = np.zeros((16, 32), bool)
        mask[4:8, :3] = True
        mask[4:8, -3:] = True
        labels, count = wrap_connected_components(mask)
        assert count == 1

    def test_diagonal_contact_8_vs_4(self):
        mask = np.zeros((8, 16), bool)
        mask[2, 2] = True
        mask[3, 3] = True
        assert wrap_connected_components(mask, connectivity=8)[1] == 1
        assert wrap_connected_components(mask, connectivity=4)[1] == 2

    def test_diagonal_across_seam(self):
        mask = np.zeros((8, 16), bool)
        mask[2, 0] = True
        mask[3, 15] = True
        assert wrap_connected_components(mask, connectivity=8)[1] == 1
        assert wrap_connected_components(mask, connectivity=4)[1] == 2

    def test_matches_brute_bfs(self, rng):
        for _ in range(25):
            mask = _random_blob_mask(rng, h=32, w=64, n_blobs=4)
            labels, count = wrap_connected_components(mask)
            comps = brute_components(mask)
            assert count == len(comps)
            prod = {frozenset(map(tuple, np.argwhere(labels == i))) for i in range(1, count + 1)}
            ref = {frozenset(map(tuple, np.argwhere(c))) for c in comps}
            assert prod == ref


class TestCorrectionClick:
    def test_empty_pred_clicks_gt_center(self):
        gt = np.zeros((32, 64), bool)
        gt[8:15, 20:27] = True
        click = correction_click(np.zeros_like(gt), gt)
        assert click.label == "positive"
        assert (click.v, click.u) == (11.0, 23.0)

    def test_spurious_blob_gets_negative_click(self):
        gt = np.zeros((32, 64), bool)
        gt[10:14, 10:14] = True
        pred = gt.copy()
        pred[20:30, 40:55] = True  # false positive larger than any FN
        click = correction_click(pred, gt)
        assert click.label == "negative"
        assert 20 <= click.v < 30 and 40 <= click.u < 55

    def test_fn_40_beats_fp_37(self):
        gt = np.zeros((32, 64), bool)
        pred = np.zeros((32, 64), bool)
        gt[2:7, 2:10] = True       # FN region, 5x8 = 40 px
        pred[20:21, 10:47] = True  # FP region, 1x37 = 37 px
        click = correction_click(pred, gt)
        ref = brute_correction_click(pred, gt)
        assert click.label == "positive" == ref[2]
        assert (click.v, click.u) == ref[:2]

    def test_fn_preferred_on_equal_area(self):
        gt = np.zeros((16, 32), bool)
        pred = np.zeros((16, 32), bool)
        gt[2:4, 2:4] = True    # FN 4 px
        pred[10:12, 20:22] = True  # FP 4 px
        click = correction_click(pred, gt)
        assert click.label == "positive"

    def test_perfect_prediction_returns_none(self):
        gt = np.zeros((8, 16), bool)
        gt[2:4, 3:6] = True
        assert correction_click(gt.copy(), gt) is None

    def test_matches_brute_force_on_random_pairs(self, rng):
        checked = 0
        while checked < 30:
            gt = _random_blob_mask(rng, h=32, w=64)
            pred = _random_blob_mask(rng, h=32, w=64)
            if not (gt ^ pred).any():
                continue
            checked += 1
            click = correction_click(pred, gt)
            bv, bu, blabel = brute_correction_click(pred, gt)
            assert (click.v, click.u, click.label) == (bv, bu, blabel)


class TestRunProtocol:
    @staticmethod
    def _instances(rng, n=6):
        out = []
        for i in range(n):
            gt = _random_blob_mask(rng, h=64, w=128, n_blobs=1)
            if gt.any():
                out.append((i + 1, gt))
        return out

    def test_oracle_like_segmenter_scores_one(self, rng):
        instances = self._instances(rng)
        report = run_protocol(
            instances, rounds=1, segment_for_instance=lambda idx, clicks: instances[idx][1]
        )
        assert report.overall_miou == 1.0
        assert report.n_failed == 0
        assert report.per_round_miou == [1.0]

    def test_all_zero_segmenter_scores_zero_with_positive_clicks(self, rng):
        instances = self._instances(rng)
        zero = lambda idx, clicks: np.zeros_like(instances[idx][1])  # noqa: E731
        report = run_protocol(instances, rounds=3, segment_for_instance=zero)
        assert report.overall_miou == 0.0
        for rec in report.records:
            assert len(rec.iou_history) == 3
            assert all(c.label == "positive" for c in rec.clicks)
            assert len(rec.clicks) == 3

    def test_three_click_equals_one_click_for_exact_segmenter(self, rng):
        instances = self._instances(rng)
        exact = lambda idx, clicks: instances[idx][1]  # noqa: E731
        r1 = run_protocol(instances, rounds=1, segment_for_instance=exact)
        r3 = run_protocol(instances, rounds=3, segment_for_instance=exact)
        assert r3.overall_miou == r1.overall_miou == 1.0

    def test_failures_counted_never_silent(self, rng):
        instances = self._instances(rng, n=4)

        def flaky(idx, clicks):
            if idx == 2:
                raise RuntimeError("backend down")
            return instances[idx][1]

        report = run_protocol(instances, rounds=1, segment_for_instance=flaky)
        assert report.n_failed == 1
        assert report.n_instances == len(instances)
        assert report.overall_miou == 1.0  # failed instance excluded, not zeroed
        failed = [r for r in report.records if r.failed]
        assert len(failed) == 1 and "backend down" in failed[0].failure

    def test_bucket_partition_sums(self, rng):
        instances = self._instances(rng, n=8)
        report = run_protocol(
            instances, rounds=1, segment_for_instance=lambda idx, clicks: instances[idx][1]
        )
        assert sum(report.bucket_counts.values()) == report.n_instances

    def test_report_reproducible(self, rng):
        instances = self._instances(rng)
        seg = lambda idx, clicks: instances[idx][1]  # noqa: E731
        a = run_protocol(instances, rounds=3, segment_for_instance=seg)
        b = run_protocol(instances, rounds=3, segment_for_instance=seg)
        assert a.to_json_dict() == b.to_json_dict()

    def test_corrective_rounds_improve_expandable_segmenter(self, rng):
        # A segmenter that unions little squares around every click: more
        # clicks, more coverage.
        gt = np.zeros((64, 128), bool)
        gt[20:44, 30:80] = True

        def splotchy(idx, clicks):
            pred = np.zeros_like(gt)
            for c in clicks:
                if c.label == "positive":
                    v, u = int(c.v), int(c.u)
                    pred[max(0, v - 8) : v + 9, max(0, u - 16) : u + 17] = True
            return pred & gt

        ious, clicks = run_instance(gt, rounds=3, segment=lambda cl: splotchy(0, cl))
        assert len(ious) == 3
        assert ious[2] >= ious[0]

    def test_table_renders(self, rng):
        instances = self._instances(rng)
        report = run_protocol(
            instances, rounds=1, segment_for_instance=lambda idx, clicks: instances[idx][1]
        )
        table = report.to_table()
        assert "Overall" in table and "Small" in table and "instances:" in table
