import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddhmbir.errors import DegenerateFitError, DimensionError
from ddhmbir.grid import (ApertureMask, check_grid, check_same_shape, complex_gaussian_field,
                          coords, ls_plane_fit, make_rng, wrap_phase)


class TestGridChecks:
    @pytest.mark.parametrize("n", [0, 1, 3, 255])
    def test_odd_or_tiny_sizes_rejected(self, n):
        with pytest.raises(DimensionError):
            check_grid(n)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            check_same_shape(np.zeros((4, 4)), np.zeros((6, 6)))
        with pytest.raises(DimensionError):
            check_same_shape(np.zeros((4, 6)))

    def test_coords_center(self):
        x, y = coords(8)
        assert x[4, 4] == 0 and y[4, 4] == 0
        assert x[0, 7] == 3 and y[7, 0] == 3
        assert not x.flags.writeable


class TestAperture:
    def test_strict_inside(self):
        # n=4, d=2: only pixels with distance < 1 from (2, 2) -> the center
        ind = ApertureMask.circle(4, 2.0).indicator
        assert ind.sum() == 1 and ind[2, 2] == 1

    def test_default_is_inscribed_circle(self):
        m = ApertureMask.circle(16)
        x, y = coords(16)
        np.testing.assert_array_equal(m.indicator, (np.hypot(x, y) < 8).astype(float))
        assert m.count == int((np.hypot(x, y) < 8).sum())

    def test_full_mode(self):
        assert ApertureMask.full_grid(6).indicator.all()

    @pytest.mark.parametrize("d", [0.0, -1.0, 17.0])
    def test_diameter_range(self, d):
        with pytest.raises(ValueError):
            ApertureMask.circle(16, d)


class TestRandomFields:
    def test_zero_variance(self):
        g = complex_gaussian_field(make_rng(1), 8, np.zeros((8, 8)))
        assert not g.any()

    def test_unit_variance_power(self):
        rng = make_rng(7)
        power = np.mean([np.mean(np.abs(complex_gaussian_field(rng, 256, 1.0)) ** 2)
                         for _ in range(100)])
        assert abs(power - 1.0) < 0.01

    def test_same_seed_identical(self):
        a = complex_gaussian_field(make_rng(3, 2, 5), 16, 1.0)
        b = complex_gaussian_field(make_rng(3, 2, 5), 16, 1.0)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = complex_gaussian_field(make_rng(3, 1), 16, 1.0)
        b = complex_gaussian_field(make_rng(3, 2), 16, 1.0)
        assert not np.allclose(a, b)

    def test_real_imag_uncorrelated(self):
        rng = make_rng(11)
        g = complex_gaussian_field(rng, 1000, 1.0)  # 10^6 samples
        assert abs(np.corrcoef(g.real.ravel(), g.imag.ravel())[0, 1]) < 0.02

    def test_variance_map_shape_checked(self):
        with pytest.raises(DimensionError):
            complex_gaussian_field(make_rng(0), 8, np.ones((4, 4)))


class TestPlaneFit:
    def test_exact_plane(self):
        x, y = coords(32)
        a, b, c = ls_plane_fit(2 + 3 * x - y, ApertureMask.circle(32))
        np.testing.assert_allclose([a, b, c], [2, 3, -1], atol=1e-10)

    def test_constant(self):
        a, b, c = ls_plane_fit(np.full((16, 16), 5.0), ApertureMask.circle(16))
        np.testing.assert_allclose([a, b, c], [5, 0, 0], atol=1e-12)

    def test_matches_dense_solver(self, rng):
        n = 24
        mask = ApertureMask.full_grid(n)
        x, y = coords(n)
        field = 0.5 - 0.2 * x + 0.7 * y + 0.01 * rng.standard_normal((n, n))
        design = np.stack([np.ones(n * n), x.ravel(), y.ravel()], axis=1)
        expected, *_ = np.linalg.lstsq(design, field.ravel(), rcond=None)
        np.testing.assert_allclose(ls_plane_fit(field, mask), expected, rtol=1e-10, atol=1e-12)
        assert abs(expected[1] + 0.2) < 1e-3 and abs(expected[2] - 0.7) < 1e-3

    def test_degenerate_mask(self):
        with pytest.raises(DegenerateFitError):
            ls_plane_fit(np.zeros((4, 4)), ApertureMask.circle(4, 2.0))

    def test_size_mismatch(self):
        with pytest.raises(DimensionError):
            ls_plane_fit(np.zeros((8, 8)), ApertureMask.circle(16))


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50, allow_nan=False))
def test_wrap_phase_range(value):
    w = wrap_phase(np.array([value]))[0]
    assert -np.pi < w <= np.pi
    assert abs(np.exp(1j * w) - np.exp(1j * value)) < 1e-9
