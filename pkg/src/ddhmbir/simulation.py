"""Measurement-stream simulation of a static scene seen through frozen-flow turbulence."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .forward import PropagationOperator, noise_variance_from_snr, synthesize_measurement
from .grid import ApertureMask, complex_gaussian_field, make_rng
from .scene import R_MIN, bar_target
from .turbulence import TurbulenceConfig, flow_velocity, generate_screen, screen_at_time

# independent random streams per seed
STREAM_SCREEN, STREAM_SPECKLE, STREAM_NOISE = 1, 2, 3


@dataclass
class SimConfig:
    n: int = 256
    fs: float = 10_000.0
    fg: float = 100.0
    d_over_r0: float = 10.0
    snr_db: float = 10.0
    wavelength: float = 1.064e-6
    flow_direction: tuple[float, float] = (math.sqrt(0.5), math.sqrt(0.5))
    frames: int = 300
    seed: int = 0
    aperture_diameter_px: float | None = None
    screen_oversize: int = 2
    curvature: float = 0.0
    scene_extent: float = 0.375
    background: float = R_MIN
    foreground: float = 1.0
    scene_path: str | None = None

    @property
    def diameter_px(self) -> float:
        return float(self.n if self.aperture_diameter_px is None else self.aperture_diameter_px)

    def aperture(self) -> ApertureMask:
        return ApertureMask.circle(self.n, self.diameter_px)

    def operator(self, workers=None) -> PropagationOperator:
        return PropagationOperator(self.aperture(), self.curvature, self.wavelength, workers)

    def turbulence(self) -> TurbulenceConfig:
        return TurbulenceConfig(n=self.n, d_over_r0=self.d_over_r0, fs=self.fs, fg=self.fg,
                                flow_direction=tuple(self.flow_direction),
                                screen_oversize=self.screen_oversize,
                                diameter_px=self.diameter_px)

    def reflectance(self) -> np.ndarray:
        if self.scene_path:
            from .scene import load_reflectance
            return load_reflectance(self.scene_path, self.n, self.background)
        return bar_target(self.n, (self.background, self.foreground), self.scene_extent)


def simulate(cfg: SimConfig, op: PropagationOperator | None = None
             ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(y, phi_true)`` for each frame.

    The reflectance is static; speckle ``g`` and noise are redrawn every
    frame. ``phi_true`` has piston, tip and tilt removed over the aperture.
    """
    op = op or cfg.operator()
    r = cfg.reflectance()
    turb = cfg.turbulence()
    screen = generate_screen(turb, make_rng(cfg.seed, STREAM_SCREEN))
    v = flow_velocity(turb)
    sigma2 = noise_variance_from_snr(cfg.snr_db, float(r.mean()))
    for t in range(cfg.frames):
        phi = screen_at_time(screen, v, t, cfg.n, op.aperture)
        g = complex_gaussian_field(make_rng(cfg.seed, STREAM_SPECKLE, t), cfg.n, r)
        y = synthesize_measurement(op, phi, g, sigma2, make_rng(cfg.seed, STREAM_NOISE, t))
        yield y, phi
