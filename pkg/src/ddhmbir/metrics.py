"""Strehl ratio, residual phase / PSF, and multi-run statistics."""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grid import ApertureMask, check_same_shape, wrap_phase


def residual_phase(phi_hat: np.ndarray, phi_true: np.ndarray) -> np.ndarray:
    check_same_shape(phi_hat, phi_true)
    return wrap_phase(phi_hat - phi_true)


def _psf(mask: np.ndarray, psi: np.ndarray) -> np.ndarray:
    field = sfft.fftshift(sfft.ifft2(sfft.ifftshift(mask * np.exp(1j * psi)), norm="ortho"))
    return field.real ** 2 + field.imag ** 2


def peak_strehl(phi_hat: np.ndarray, phi_true: np.ndarray, mask: ApertureMask) -> float:
    """Peak of the residual-phase PSF over the peak of the vacuum PSF."""
    psi = residual_phase(phi_hat, phi_true)
    ind = mask.indicator
    if not ind.any():
        raise ValueError("empty aperture")
    return float(_psf(ind, psi).max() / _psf(ind, np.zeros_like(psi)).max())


def residual_psf(phi_hat, phi_true, mask: ApertureMask, zoom: float = 1.0) -> np.ndarray:
    """Residual PSF, center-cropped by ``zoom`` for display."""
    psf = _psf(mask.indicator, residual_phase(phi_hat, phi_true))
    if zoom <= 1.0:
        return psf
    n = psf.shape[0]
    half = max(1, int(round(n / zoom / 2)))
    c = n // 2
    return psf[c - half:c + half, c - half:c + half].copy()


STAT_NAMES = ("min", "q1", "median", "q3", "max", "mean")


def aggregate_runs(series) -> dict[str, np.ndarray]:
    """Per-frame box-plot statistics across runs (rows = runs, columns = frames)."""
    s = np.atleast_2d(np.asarray(series, dtype=float))
    q = np.percentile(s, [0, 25, 50, 75, 100], axis=0, method="linear")
    return dict(zip(STAT_NAMES, (*q, s.mean(axis=0))))
