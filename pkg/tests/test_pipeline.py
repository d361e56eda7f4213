import numpy as np
import pytest

from panoscan.evaluation import initial_click, iou
from panoscan.geometry import DomainError
from panoscan.pipeline import (
    PipelineConfig,
    interactive_round,
    load_pipeline_config,
    make_segmenter,
    segment_panorama,
)
from panoscan.projection import Panorama
from panoscan.prompts import PromptPoint
from panoscan.scenes import CapPrimitive, SphericalScene, render_scene
from panoscan.segmenter import BackendError, OracleSegmenter
from panoscan.trajectory import TrajectoryConfig

W, H = 1024, 512
CFG = PipelineConfig(trajectory=TrajectoryConfig(size_l=256))


def _cap_setup(yaw=20.0, pitch=10.0, radius=25.0):
    scene = SphericalScene(instances=(CapPrimitive(1, (0.9, 0.2, 0.2), yaw, pitch, radius),))
    rgb, label = render_scene(scene, W, H)
    return rgb, label, label.data == 1


class TestSegmentPanorama:
    def test_oracle_cap_high_iou(self):
        rgb, label, gt = _cap_setup()
        res = segment_panorama(rgb, [initial_click(gt)], CFG, OracleSegmenter(label))
        assert iou(res.fused.binary, gt) >= 0.99

    def test_trace_follows_the_five_stages(self):
        rgb, label, gt = _cap_setup()
        res = segment_panorama(rgb, [initial_click(gt)], CFG, OracleSegmenter(label))
        assert res.trace == [
            "generate_trajectory",
            "render_frames",
            "project_prompts",
            "reorder",
            "segment",
            "fuse",
        ]
        assert set(res.timings) == set(res.trace)

    def test_start_index_is_min_visible(self):
        rgb, label, gt = _cap_setup()
        res = segment_panorama(rgb, [initial_click(gt)], CFG, OracleSegmenter(label))
        assert res.start_index == min(fp.frame_index for fp in res.visible)

    def test_background_prompt_empty_mask(self):
        rgb, label, gt = _cap_setup()
        # Antipode of the cap center: guaranteed background.
        prompt = PromptPoint(u=(20.0 + 180.0) / 360.0 * W, v=H - 40.0)
        res = segment_panorama(rgb, [prompt], CFG, OracleSegmenter(label))
        assert not res.fused.binary.any()

    def test_requires_positive_prompt(self):
        rgb, label, _ = _cap_setup()
        with pytest.raises(DomainError):
            segment_panorama(rgb, [PromptPoint(1.0, 1.0, "negative")], CFG, OracleSegmenter(label))

    def test_out_of_bounds_prompt_rejected(self):
        rgb, label, _ = _cap_setup()
        with pytest.raises(DomainError):
            segment_panorama(rgb, [PromptPoint(5000.0, 1.0)], CFG, OracleSegmenter(label))

    def test_deterministic_bit_identical(self):
        rgb, label, gt = _cap_setup()
        click = initial_click(gt)
        a = segment_panorama(rgb, [click], CFG, OracleSegmenter(label))
        b = segment_panorama(rgb, [click], CFG, OracleSegmenter(label))
        assert np.array_equal(a.fused.plane, b.fused.plane)

    def test_segmenter_failure_wrapped_with_stage(self):
        rgb, label, gt = _cap_setup()

        class Boom:
            def propagate(self, session):
                raise RuntimeError("kaput")

        with pytest.raises(BackendError) as err:
            segment_panorama(rgb, [initial_click(gt)], CFG, Boom())
        assert err.value.stage == "segment"

    def test_roll_equivariance(self):
        rgb, label, gt = _cap_setup(yaw=35.0, pitch=-15.0, radius=20.0)
        click = initial_click(gt)
        base = segment_panorama(rgb, [click], CFG, OracleSegmenter(label))
        roll = W // 4  # 90 degrees
        rolled_rgb = Panorama(np.roll(rgb.data, roll, axis=1))
        rolled_label = Panorama(np.roll(label.data, roll, axis=1))
        rolled_click = PromptPoint(u=(click.u + roll) % W, v=click.v, label=click.label)
        rolled = segment_panorama(
            rolled_rgb, [rolled_click], CFG, OracleSegmenter(rolled_label)
        )
        assert iou(rolled.fused.binary, np.roll(base.fused.binary, roll, axis=1)) >= 0.999


class TestInteractiveRound:
    def test_redundant_positive_prompt_identical_mask(self):
        rgb, label, gt = _cap_setup()
        seg = OracleSegmenter(label)
        first = segment_panorama(rgb, [initial_click(gt)], CFG, seg)
        # Another point inside the already-correct mask.
        inside = np.argwhere(gt)
        v, u = inside[len(inside) // 3]
        second = interactive_round(first, PromptPoint(float(u), float(v)), rgb, CFG, seg)
        assert np.array_equal(second.fused.plane, first.fused.plane)
        assert len(second.prompts) == 2

    def test_negative_on_background_unchanged(self):
        rgb, label, gt = _cap_setup()
        seg = OracleSegmenter(label)
        first = segment_panorama(rgb, [initial_click(gt)], CFG, seg)
        outside = PromptPoint(u=(20.0 + 180.0) / 360.0 * W, v=H / 2.0, label="negative")
        second = interactive_round(first, outside, rgb, CFG, seg)
        assert np.array_equal(second.fused.plane, first.fused.plane)


class TestFrameCache:
    def test_cache_round_trip_bit_identical(self, tmp_path):
        rgb, label, gt = _cap_setup()
        cfg = PipelineConfig(trajectory=TrajectoryConfig(size_l=256), cache_dir=str(tmp_path))
        click = initial_click(gt)
        first = segment_panorama(rgb, [click], cfg, OracleSegmenter(label))
        cached = list(tmp_path.glob("frames_*.npz"))
        assert len(cached) == 1
        second = segment_panorama(rgb, [click], cfg, OracleSegmenter(label))
        assert np.array_equal(first.fused.plane, second.fused.plane)
        assert second.timings["render_frames"] < first.timings["render_frames"]


class TestConfig:
    def test_toml_round_trip(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(
            "\n".join(
                [
                    "[trajectory]",
                    "beta_h_deg = 60.0",
                    "beta_v_deg = 60.0",
                    "overlap_r = 0.25",
                    "size_l = 512",
                    "",
                    "[pipeline]",
                    'segmenter = "http://example.test/v1"',
                    "threshold = 0.4",
                    "parallelism = 2",
                    "segmenter_timeout = 12.5",
                    "segmenter_retries = 5",
                ]
            ),
            encoding="utf-8",
        )
        cfg = load_pipeline_config(path)
        assert cfg.trajectory == TrajectoryConfig(60.0, 60.0, 0.25, 512)
        assert cfg.segmenter == "http://example.test/v1"
        assert cfg.threshold == 0.4
        assert cfg.parallelism == 2
        assert cfg.segmenter_timeout == 12.5
        assert cfg.segmenter_retries == 5

    def test_defaults_when_missing(self, tmp_path):
        path = tmp_path / "empty.toml"
        path.write_text("", encoding="utf-8")
        cfg = load_pipeline_config(path)
        assert cfg.trajectory == TrajectoryConfig()
        assert cfg.segmenter == "oracle"

    def test_unequal_fov_rejected_for_rendering(self):
        cfg = PipelineConfig(trajectory=TrajectoryConfig(beta_h_deg=90.0, beta_v_deg=60.0))
        with pytest.raises(DomainError):
            cfg.intrinsics()

    def test_make_segmenter_oracle_needs_labels(self):
        with pytest.raises(DomainError):
            make_segmenter(PipelineConfig(), label_plane=None)

    def test_make_segmenter_external(self):
        cfg = PipelineConfig(segmenter="http://127.0.0.1:9", segmenter_timeout=7.0, segmenter_retries=4)
        seg = make_segmenter(cfg, label_plane=None)
        assert seg.contract.identity.startswith("external:")
        assert seg.timeout == 7.0 and seg.retries == 4

    def test_parallel_render_matches_serial(self):
        rgb, label, gt = _cap_setup()
        click = initial_click(gt)
        serial = segment_panorama(rgb, [click], CFG, OracleSegmenter(label))
        par_cfg = PipelineConfig(trajectory=TrajectoryConfig(size_l=256), parallelism=4)
        parallel = segment_panorama(rgb, [click], par_cfg, OracleSegmenter(label))
        assert np.array_equal(serial.fused.plane, parallel.fused.plane)
