"""Kolmogorov phase screens under frozen flow.

Screens are synthesized spectrally: complex white noise on the ``m x m`` FFT
grid is shaped by the square root of the phase power spectrum

    Phi(f) = 0.023 r0^(-5/3) (f^2 + f0^2)^(-11/6)      (f in cycles/pixel)

and inverse transformed. Three levels of Lane-style subharmonics restore the
low-frequency power the periodic grid cannot hold. The screen is kept in its
spectral form so that translation by any real displacement is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from numpy.polynomial.legendre import leggauss

from .grid import ApertureMask, coords, ls_plane_fit

KOLMOGOROV_PSD = 0.023
STRUCTURE_CONST = 6.88
# Greenwood-frequency to wind-speed scaling for a single frozen layer.
GREENWOOD_COEFF = 0.43


@dataclass(frozen=True)
class TurbulenceConfig:
    n: int = 256
    d_over_r0: float = 10.0
    fs: float = 10_000.0
    fg: float = 100.0
    flow_direction: tuple[float, float] = (math.sqrt(0.5), math.sqrt(0.5))
    screen_oversize: int = 2
    outer_scale_px: float = math.inf
    diameter_px: float | None = None
    subharmonic_levels: int = 3

    def __post_init__(self):
        if self.d_over_r0 <= 0:
            raise ValueError("d_over_r0 must be positive")
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        if self.fg < 0:
            raise ValueError("fg must be non-negative")
        if abs(math.hypot(*self.flow_direction) - 1.0) > 1e-9:
            raise ValueError("flow_direction must be a unit vector")
        if int(self.screen_oversize) < 1:
            raise ValueError("screen_oversize must be >= 1")
        if self.outer_scale_px <= 0:
            raise ValueError("outer_scale_px must be positive")

    @property
    def m(self) -> int:
        return int(self.screen_oversize) * self.n

    @property
    def r0_px(self) -> float:
        d = self.n if self.diameter_px is None else self.diameter_px
        return d / self.d_over_r0


def phase_psd(fx, fy, r0_px: float, outer_scale_px: float = math.inf):
    """Phase power spectral density in rad^2 per (cycle/pixel)^2."""
    f2 = np.asarray(fx) ** 2 + np.asarray(fy) ** 2
    if math.isfinite(outer_scale_px):
        f2 = f2 + outer_scale_px ** -2
    with np.errstate(divide="ignore"):
        return KOLMOGOROV_PSD * r0_px ** (-5 / 3) * f2 ** (-11 / 6)


def _cell_power(fx, fy, df, r0_px, outer_scale_px, order=8):
    # PSD integrated over the square cell of side df centred at (fx, fy)
    nodes, weights = leggauss(order)
    total = 0.0
    for ni, wi in zip(nodes, weights):
        for nj, wj in zip(nodes, weights):
            total += wi * wj * phase_psd(fx + ni * df / 2, fy + nj * df / 2, r0_px, outer_scale_px)
    return total * df * df / 4


@dataclass
class PhaseScreen:
    """Periodic spectral screen plus explicit low-frequency plane waves.

    ``spectrum`` holds the FFT-grid coefficients (unnormalized, fft order);
    ``sub_freqs``/``sub_coeffs`` hold the subharmonic components. The phase at
    screen position ``(x, y)`` is ``Re sum c exp(2j pi (fx x + fy y))``.
    """

    m: int
    r0_px: float
    spectrum: np.ndarray
    sub_freqs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    sub_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    _half: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def data(self) -> np.ndarray:
        return self.shifted((0.0, 0.0))

    def shifted(self, shift: tuple[float, float], window: slice = slice(None),
                workers: int | None = None) -> np.ndarray:
        """Screen translated by ``shift = (dx, dy)`` pixels, restricted to
        ``window`` along both axes."""
        dx, dy = shift
        half = self._half_spectrum()
        if dx or dy:
            fy = sfft.fftfreq(self.m)
            fx = sfft.rfftfreq(self.m)
            half = half * np.outer(np.exp(-2j * np.pi * fy * dy), np.exp(-2j * np.pi * fx * dx))
        out = sfft.irfft2(half, s=(self.m, self.m), norm="forward", workers=workers)[window, window]
        if len(self.sub_coeffs):
            x = np.arange(self.m, dtype=float)[window]
            out = out + self._subharmonics(x - dx, x - dy)
        return out

    def _half_spectrum(self) -> np.ndarray:
        # Hermitian part of the coefficients: Re(ifft2(c)) == irfft2(h)
        if self._half is None:
            c = self.spectrum
            flipped = np.roll(c[::-1, ::-1], 1, axis=(0, 1))
            h = 0.5 * (c + np.conj(flipped))
            self._half = h[:, :self.m // 2 + 1].copy()
        return self._half

    def _subharmonics(self, xs, ys) -> np.ndarray:
        # separable evaluation: sum_k Re(c_k e_x[k, col] e_y[k, row])
        ex = np.exp(2j * np.pi * np.outer(self.sub_freqs[:, 0], xs))
        ey = np.exp(2j * np.pi * np.outer(self.sub_freqs[:, 1], ys))
        return ((ey.T * self.sub_coeffs) @ ex).real


def _fft_freqs(m: int):
    f = sfft.fftfreq(m)
    fy, fx = np.meshgrid(f, f, indexing="ij")
    return fx, fy


def generate_screen(cfg: TurbulenceConfig, rng: np.random.Generator) -> PhaseScreen:
    """Draw a random Kolmogorov (or von Karman) screen of side ``cfg.m``."""
    m = cfg.m
    r0 = cfg.r0_px
    fx, fy = _fft_freqs(m)
    df = 1.0 / m
    power = phase_psd(fx, fy, r0, cfg.outer_scale_px) * df * df
    power[0, 0] = 0.0
    # Nyquist row/column dropped so fractional shifts keep the screen real
    power[m // 2, :] = 0.0
    power[:, m // 2] = 0.0
    # complex amplitudes with E|c|^2 = 2P so that the real part carries P
    noise = rng.standard_normal((2, m, m))
    spectrum = np.sqrt(power) * (noise[0] + 1j * noise[1])

    freqs, coeffs = [], []
    for level in range(1, cfg.subharmonic_levels + 1):
        dfp = df / 3 ** level
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                if a == 0 and b == 0:
                    continue
                p = _cell_power(a * dfp, b * dfp, dfp, r0, cfg.outer_scale_px)
                z = rng.standard_normal(2)
                freqs.append((a * dfp, b * dfp))
                coeffs.append(math.sqrt(p) * (z[0] + 1j * z[1]))
    return PhaseScreen(m, r0, spectrum, np.array(freqs, dtype=float).reshape(-1, 2),
                       np.array(coeffs, dtype=complex))


def flow_velocity(cfg: TurbulenceConfig) -> np.ndarray:
    """Screen displacement per frame, pixels/sample, as ``(vx, vy)``."""
    speed = (1.0 / GREENWOOD_COEFF) * (cfg.fg / cfg.fs) * (cfg.n / cfg.d_over_r0)
    return speed * np.asarray(cfg.flow_direction, dtype=float)


def remove_piston_tip_tilt(phi: np.ndarray, mask: ApertureMask) -> np.ndarray:
    """Subtract the least-squares plane over ``mask`` from the whole field."""
    a, b, c = ls_plane_fit(phi, mask)
    x, y = coords(mask.n)
    return phi - (a + b * x + c * y)


def screen_at_time(screen: PhaseScreen, v, t: float, n: int,
                   mask: ApertureMask | None = None, detrend: bool = True,
                   workers: int | None = None) -> np.ndarray:
    """Central ``n x n`` crop of the screen after ``t`` frames of flow.

    With ``detrend`` the piston, tip and tilt over ``mask`` (default: the
    inscribed circular aperture) are removed.
    """
    if n > screen.m:
        raise ValueError(f"crop size {n} exceeds screen size {screen.m}")
    vx, vy = (float(c) for c in v)
    lo = screen.m // 2 - n // 2
    crop = screen.shifted((vx * t, vy * t), slice(lo, lo + n), workers=workers).copy()
    if not detrend:
        return crop
    return remove_piston_tip_tilt(crop, mask if mask is not None else ApertureMask.circle(n))


def structure_function(phi: np.ndarray, separations, axis: int) -> np.ndarray:
    """Empirical ``mean[(phi(s + d) - phi(s))^2]`` along one axis, no wrap."""
    out = []
    for d in separations:
        d = int(d)
        if axis == 0:
            diff = phi[d:, :] - phi[:-d, :]
        else:
            diff = phi[:, d:] - phi[:, :-d]
        out.append(np.mean(diff * diff))
    return np.array(out)
