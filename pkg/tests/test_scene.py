import numpy as np
import pytest

from ddhmbir.formats import write_raster
from ddhmbir.scene import R_MIN, bar_target, load_reflectance


class TestBarTarget:
    @pytest.mark.parametrize("extent", [1.0, 0.5, 0.375])
    def test_two_levels(self, extent):
        r = bar_target(256, (R_MIN, 1.0), extent)
        assert set(np.unique(r)) == {R_MIN, 1.0}

    def test_foreground_fraction(self):
        r = bar_target(256)
        assert 0.05 <= np.mean(r == 1.0) <= 0.5

    def test_compact_chart_leaves_dark_border(self):
        r = bar_target(256, extent=0.5)
        inside = np.zeros(r.shape, bool)
        inside[64:192, 64:192] = True
        assert (r[~inside] == R_MIN).all()
        assert (r[inside] == 1.0).any()

    def test_deterministic(self):
        np.testing.assert_array_equal(bar_target(128, (0.01, 0.9)), bar_target(128, (0.01, 0.9)))

    @pytest.mark.parametrize("levels", [(0.0, 1.0), (0.5, 0.2), (0.1, 1.5)])
    def test_bad_levels(self, levels):
        with pytest.raises(ValueError):
            bar_target(64, levels)


class TestLoadReflectance:
    def _write(self, tmp_path, img):
        path = tmp_path / "scene.pgm"
        write_raster(path, img, 0.0, 255.0)
        return path

    def test_white(self, tmp_path):
        r = load_reflectance(self._write(tmp_path, np.full((16, 16), 255.0)), 16)
        np.testing.assert_array_equal(r, 1.0)

    def test_black(self, tmp_path):
        r = load_reflectance(self._write(tmp_path, np.zeros((16, 16))), 16, r_min=1e-3)
        np.testing.assert_allclose(r, 1e-3, rtol=1e-15)

    def test_checkerboard_native(self, tmp_path):
        board = 255.0 * ((np.arange(16)[:, None] + np.arange(16)) % 2)
        r = load_reflectance(self._write(tmp_path, board), 16)
        np.testing.assert_allclose(r, np.where(board > 0, 1.0, R_MIN), rtol=1e-15)

    def test_resampled_stays_in_range(self, tmp_path):
        img = np.linspace(0, 255, 24 * 24).reshape(24, 24)
        r = load_reflectance(self._write(tmp_path, img), 32)
        assert r.shape == (32, 32)
        assert r.min() >= R_MIN and r.max() <= 1.0
