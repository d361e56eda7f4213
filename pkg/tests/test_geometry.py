import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panoscan.geometry import (
    DomainError,
    SphericalCoord,
    Viewpoint,
    erp_pixel_to_sph,
    intrinsics_from_fov,
    rotation_from_viewpoint,
    sph_to_erp_pixel,
    sph_to_vec,
    vec_to_sph,
    wrap_phi,
)


class TestErpMapping:
    def test_image_center_is_sphere_front(self):
        c = erp_pixel_to_sph(2047.5, 1023.5, 4096, 2048)
        assert c.theta == pytest.approx(0.0, abs=1e-12)
        assert c.phi == pytest.approx(0.0, abs=1e-12)

    def test_top_left_pixel(self):
        c = erp_pixel_to_sph(0, 0, 4096, 2048)
        assert c.phi == pytest.approx(-math.pi + math.pi / 4096, abs=1e-12)
        assert c.theta == pytest.approx(math.pi / 2 - math.pi / 4096, abs=1e-12)

    def test_inverse_center(self):
        u, v = sph_to_erp_pixel(SphericalCoord(0.0, 0.0), 4096, 2048)
        assert (u, v) == pytest.approx((2047.5, 1023.5))

    def test_north_pole_maps_to_top(self):
        eps = 1e-9
        _, v = sph_to_erp_pixel(SphericalCoord(math.pi / 2 - eps, 0.3), 4096, 2048)
        assert -0.5 <= v < 0.5

    def test_longitude_boundary_wraps(self):
        # Slightly below +pi stays below width - 0.5; exactly -pi wraps to the
        # same place the modular-arithmetic oracle puts it.
        width, height = 4096, 2048
        for eps in (1e-7, 1e-9, 1e-12):
            u, _ = sph_to_erp_pixel(SphericalCoord(0.0, math.pi - eps), width, height)
            raw = (math.pi - eps + math.pi) / (2 * math.pi) * width - 0.5
            assert u == pytest.approx(raw % width, abs=1e-9)
            assert u < width - 0.5
        u, _ = sph_to_erp_pixel(SphericalCoord(0.0, -math.pi), width, height)
        assert u == pytest.approx(width - 0.5, abs=1e-9)

    def test_round_trip_many_pixels(self, rng):
        width, height = 4096, 2048
        u = rng.uniform(0, width, 10_000)
        v = rng.uniform(1, height - 1, 10_000)
        for uu, vv in zip(u[:200], v[:200]):
            c = erp_pixel_to_sph(uu, vv, width, height)
            u2, v2 = sph_to_erp_pixel(c, width, height)
            assert abs(u2 - uu) < 1e-9
            assert abs(v2 - vv) < 1e-9

    def test_out_of_range_pixel_rejected(self):
        with pytest.raises(DomainError):
            erp_pixel_to_sph(4096, 0, 4096, 2048)
        with pytest.raises(DomainError):
            erp_pixel_to_sph(0, -0.1, 4096, 2048)

    def test_non_two_to_one_rejected(self):
        with pytest.raises(DomainError):
            erp_pixel_to_sph(0, 0, 1000, 800)


class TestVectorConversion:
    @pytest.mark.parametrize(
        "coord,expected",
        [
            ((0.0, 0.0), (1.0, 0.0, 0.0)),
            ((math.pi / 2, 0.7), (0.0, 0.0, 1.0)),
            ((0.0, math.pi / 2), (0.0, 1.0, 0.0)),
        ],
    )
    def test_axes(self, coord, expected):
        d = sph_to_vec(SphericalCoord(*coord))
        assert d == pytest.approx(expected, abs=1e-12)

    def test_vec_to_sph_east(self):
        c = vec_to_sph(np.array([0.0, 1.0, 0.0]))
        assert c.theta == pytest.approx(0.0)
        assert c.phi == pytest.approx(math.pi / 2)

    def test_south_pole_phi_convention(self):
        c = vec_to_sph(np.array([0.0, 0.0, -1.0]))
        assert c.theta == pytest.approx(-math.pi / 2)
        assert c.phi == 0.0

    def test_non_unit_rejected(self):
        with pytest.raises(DomainError):
            vec_to_sph(np.array([0.0, 0.0, 0.5]))

    @given(
        theta=st.floats(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6),
        phi=st.floats(-math.pi, math.pi - 1e-9),
    )
    @settings(max_examples=200)
    def test_round_trip(self, theta, phi):
        c = SphericalCoord(theta, phi)
        c2 = vec_to_sph(sph_to_vec(c))
        assert abs(c2.theta - theta) < 1e-9
        assert abs(wrap_phi(c2.phi - phi)) < 1e-9


class TestIntrinsics:
    def test_90_degrees(self):
        k = intrinsics_from_fov(90.0, 1024)
        assert k.focal == pytest.approx(511.5, abs=1e-9)
        assert k.cx == 511.5 and k.cy == 511.5

    def test_minimal_viewport(self):
        assert intrinsics_from_fov(90.0, 2).focal == pytest.approx(0.5, abs=1e-12)

    def test_60_degrees(self):
        expected = 511.5 / math.tan(math.radians(30.0))
        assert intrinsics_from_fov(60.0, 1024).focal == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("beta", [0.0, -10.0, 180.0, 360.0])
    def test_degenerate_fov_rejected(self, beta):
        with pytest.raises(DomainError):
            intrinsics_from_fov(beta, 1024)

    def test_tiny_viewport_rejected(self):
        with pytest.raises(DomainError):
            intrinsics_from_fov(90.0, 1)


class TestRotation:
    FORWARD = np.array([0.0, 0.0, 1.0])

    @pytest.mark.parametrize(
        "yaw,pitch,expected",
        [
            (0.0, 0.0, (1.0, 0.0, 0.0)),
            (90.0, 0.0, (0.0, 1.0, 0.0)),
            (0.0, 45.0, (math.sqrt(2) / 2, 0.0, math.sqrt(2) / 2)),
        ],
    )
    def test_forward_axis(self, yaw, pitch, expected):
        rot = rotation_from_viewpoint(Viewpoint(yaw, pitch))
        assert rot @ self.FORWARD == pytest.approx(expected, abs=1e-12)

    @given(yaw=st.floats(0, 360, exclude_max=True), pitch=st.floats(-45, 45))
    @settings(max_examples=200)
    def test_orthonormal_det_plus_one(self, yaw, pitch):
        rot = rotation_from_viewpoint(Viewpoint(yaw, pitch))
        assert np.abs(rot @ rot.T - np.eye(3)).max() < 1e-9
        assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-9)

    @given(yaw=st.floats(0, 360, exclude_max=True), pitch=st.floats(-45, 45))
    @settings(max_examples=100)
    def test_forward_matches_viewpoint_center(self, yaw, pitch):
        vp = Viewpoint(yaw, pitch)
        rot = rotation_from_viewpoint(vp)
        assert rot @ self.FORWARD == pytest.approx(sph_to_vec(vp.center), abs=1e-12)

    def test_no_roll_up_lies_in_meridian_plane(self):
        # The up axis (second column) is the local north tangent: orthogonal
        # to east, in the plane spanned by forward and world z.
        for yaw, pitch in [(0, 0), (30, 20), (200, -40), (359, 44)]:
            rot = rotation_from_viewpoint(Viewpoint(yaw, pitch))
            east, up, forward = rot.T
            assert abs(np.dot(up, east)) < 1e-12
            normal = np.cross(forward, [0.0, 0.0, 1.0])
            assert abs(np.dot(up, normal)) < 1e-9
            assert up[2] > 0  # points toward +z for |pitch| < 90

    def test_eq4_consistency_viewport_center_ray(self):
        # The center pixel of a frame at viewpoint p maps back to p's
        # direction: R @ K^-1 [cx, cy, 1] is the forward axis.
        vp = Viewpoint(123.0, -30.0)
        rot = rotation_from_viewpoint(vp)
        ray = rot @ np.array([0.0, 0.0, 1.0])
        pixel = sph_to_erp_pixel(vp.center, 4096, 2048)
        again = sph_to_vec(erp_pixel_to_sph(pixel[0], pixel[1], 4096, 2048))
        assert ray == pytest.approx(again, abs=1e-9)


class TestViewpoint:
    def test_yaw_normalized(self):
        assert Viewpoint(370.0, 0.0).yaw_deg == pytest.approx(10.0)
        assert Viewpoint(-45.0, 0.0).yaw_deg == pytest.approx(315.0)

    def test_pitch_bounds(self):
        with pytest.raises(DomainError):
            Viewpoint(0.0, 91.0)
