import math

import numpy as np
import pytest

from ddhmbir.grid import ApertureMask, coords, ls_plane_fit, make_rng
from ddhmbir.turbulence import (STRUCTURE_CONST, PhaseScreen, TurbulenceConfig, flow_velocity,
                                generate_screen, remove_piston_tip_tilt, screen_at_time,
                                structure_function)


def kolmogorov(sep, r0):
    return STRUCTURE_CONST * (np.asarray(sep, float) / r0) ** (5 / 3)


class TestScreenStatistics:
    def test_structure_function_matches_kolmogorov(self):
        cfg = TurbulenceConfig()
        seps = np.arange(2, cfg.m // 8 + 1)
        acc = np.zeros(len(seps))
        for seed in range(20):
            data = generate_screen(cfg, make_rng(seed, 1)).data
            acc += structure_function(data, seps, 0) + structure_function(data, seps, 1)
        ratio = acc / 40 / kolmogorov(seps, cfg.r0_px)
        assert ratio.min() > 0.85 and ratio.max() < 1.15, (ratio.min(), ratio.max())

    def test_same_seed_identical(self):
        cfg = TurbulenceConfig(n=64)
        a = generate_screen(cfg, make_rng(4, 1)).data
        b = generate_screen(cfg, make_rng(4, 1)).data
        np.testing.assert_array_equal(a, b)

    def test_r0_scaling(self):
        seps = [3, 7, 12]
        d1 = structure_function(generate_screen(TurbulenceConfig(n=64), make_rng(2)).data, seps, 1)
        d2 = structure_function(
            generate_screen(TurbulenceConfig(n=64, d_over_r0=20), make_rng(2)).data, seps, 1)
        np.testing.assert_allclose(d2 / d1, 2 ** (5 / 3), rtol=1e-9)

    def test_screen_is_real_and_finite(self):
        data = generate_screen(TurbulenceConfig(n=32), make_rng(0)).shifted((0.3, -1.7))
        assert data.dtype == np.float64 and np.isfinite(data).all()


class TestVelocity:
    def test_default(self):
        np.testing.assert_allclose(flow_velocity(TurbulenceConfig()), [0.421, 0.421], atol=1e-3)

    def test_zero_greenwood(self):
        np.testing.assert_array_equal(flow_velocity(TurbulenceConfig(fg=0.0)), [0.0, 0.0])

    def test_double_sampling_rate(self):
        v = flow_velocity(TurbulenceConfig(fs=20_000.0))
        assert math.hypot(*v) == pytest.approx(0.2977, abs=1e-4)

    def test_direction_must_be_unit(self):
        with pytest.raises(ValueError):
            TurbulenceConfig(flow_direction=(1.0, 1.0))


class TestTranslation:
    def test_integer_shift_is_circular(self):
        cfg = TurbulenceConfig(n=32, subharmonic_levels=0)
        screen = generate_screen(cfg, make_rng(9))
        full = screen.data
        lo = cfg.m // 2 - cfg.n // 2
        for t in (1, 5, 40):
            got = screen_at_time(screen, (1.0, 0.0), t, cfg.n, detrend=False)
            expected = np.roll(full, t, axis=1)[lo:lo + cfg.n, lo:lo + cfg.n]
            np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_integer_steps_differ_by_shift(self):
        cfg = TurbulenceConfig(n=16, subharmonic_levels=0)
        screen = generate_screen(cfg, make_rng(1))
        v = (0.5, 0.25)
        a = screen.shifted((v[0] * 3, v[1] * 3))
        b = screen.shifted((v[0] * 7, v[1] * 7))  # 4 frames later: (2, 1) px
        np.testing.assert_allclose(b, np.roll(a, (1, 2), axis=(0, 1)), atol=1e-12)

    def test_subharmonics_follow_the_flow(self):
        # with low-frequency waves the screen is not periodic, but an
        # integer shift is still an exact translation away from the edges
        cfg = TurbulenceConfig(n=16)
        screen = generate_screen(cfg, make_rng(3))
        a = screen.shifted((0.0, 0.0))
        b = screen.shifted((3.0, 2.0))
        np.testing.assert_allclose(b[2:, 3:], a[:-2, :-3], atol=1e-11)

    def test_fractional_sinusoid(self):
        m, k = 64, 3
        spectrum = np.zeros((m, m), complex)
        spectrum[0, k] = -1j  # Re(-j exp(j theta)) = sin(theta)
        screen = PhaseScreen(m, 1.0, spectrum)
        x = np.arange(m)[None, :]
        for t in (1, 3, 10):
            got = screen_at_time(screen, (0.5, 0.0), t, m, detrend=False)
            expected = np.sin(2 * np.pi * k * (x - 0.5 * t) / m) * np.ones((m, 1))
            np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_time_zero_is_detrended_crop(self):
        cfg = TurbulenceConfig(n=32)
        screen = generate_screen(cfg, make_rng(5))
        lo = cfg.m // 2 - cfg.n // 2
        crop = screen.data[lo:lo + cfg.n, lo:lo + cfg.n]
        mask = ApertureMask.circle(cfg.n)
        np.testing.assert_allclose(screen_at_time(screen, flow_velocity(cfg), 0, cfg.n),
                                   remove_piston_tip_tilt(crop, mask), atol=1e-12)

    def test_crop_larger_than_screen(self):
        screen = generate_screen(TurbulenceConfig(n=8, screen_oversize=1), make_rng(0))
        with pytest.raises(ValueError):
            screen_at_time(screen, (0, 0), 0, 16)


class TestTipTiltRemoval:
    mask = ApertureMask.circle(32)
    x, y = coords(32)

    def test_plane_removed(self):
        out = remove_piston_tip_tilt(1.5 - 0.3 * self.x + 0.02 * self.y, self.mask)
        assert np.abs(out[self.mask.indicator > 0]).max() < 1e-10

    def test_refit_is_zero(self, rng):
        out = remove_piston_tip_tilt(rng.standard_normal((32, 32)), self.mask)
        np.testing.assert_allclose(ls_plane_fit(out, self.mask), 0.0, atol=1e-9)

    def test_plane_plus_bump(self):
        bump = np.exp(-((self.x - 4) ** 2 + (self.y + 2) ** 2) / 20)
        a, b, c = ls_plane_fit(bump, self.mask)
        expected = bump - (a + b * self.x + c * self.y)
        out = remove_piston_tip_tilt(bump + 0.7 + 0.1 * self.x - 0.4 * self.y, self.mask)
        np.testing.assert_allclose(out, expected, atol=1e-10)

    def test_idempotent(self, rng):
        once = remove_piston_tip_tilt(rng.standard_normal((32, 32)), self.mask)
        np.testing.assert_allclose(remove_piston_tip_tilt(once, self.mask), once, atol=1e-9)
