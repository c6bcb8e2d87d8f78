"""Isoplanatic DH measurement operator and measurement synthesis.

The operator maps object-plane reflection coefficients ``g`` to pupil-plane
measurements::

    A_phi g = D_a * exp(j phi) * F(gamma * g)

with ``F`` the unitary centered 2-D DFT, ``gamma`` a unit-modulus quadratic
phase and ``D_a`` the aperture indicator.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .errors import DegenerateInputError, DimensionError
from .grid import ApertureMask, check_same_shape, complex_gaussian_field, coords


def noise_variance_from_snr(snr_db: float, signal_power: float) -> float:
    """Per-pixel complex noise variance giving ``snr_db`` for ``signal_power``."""
    if signal_power <= 0:
        raise ValueError("signal_power must be positive")
    return float(signal_power) * 10.0 ** (-float(snr_db) / 10.0)


class PropagationOperator:
    """``A_phi`` and its adjoint for a fixed aperture and quadratic phase.

    Every 2-D transform is counted in ``transforms`` so callers can audit the
    per-frame cost. The counter is the only mutable state.
    """

    def __init__(self, aperture: ApertureMask, curvature: float = 0.0,
                 wavelength: float = 1.064e-6, workers: int | None = None):
        self.aperture = aperture
        self.n = aperture.n
        self.curvature = float(curvature)
        self.wavelength = float(wavelength)
        self.workers = workers
        self.transforms = 0
        if self.curvature == 0.0:
            self.gamma = None
        else:
            x, y = coords(self.n)
            self.gamma = np.exp(1j * np.pi * self.curvature * (x * x + y * y))

    @property
    def mask(self) -> np.ndarray:
        return self.aperture.indicator

    def _check(self, *fields):
        n = check_same_shape(*fields)
        if n != self.n:
            raise DimensionError(f"field n={n} does not match operator n={self.n}")

    def fft(self, x: np.ndarray) -> np.ndarray:
        """Unitary centered forward DFT."""
        self.transforms += 1
        return sfft.fftshift(sfft.fft2(sfft.ifftshift(x), norm="ortho", workers=self.workers))

    def ifft(self, x: np.ndarray) -> np.ndarray:
        """Unitary centered inverse DFT."""
        self.transforms += 1
        return sfft.fftshift(sfft.ifft2(sfft.ifftshift(x), norm="ortho", workers=self.workers))

    def object_to_pupil(self, g: np.ndarray) -> np.ndarray:
        """``F(gamma * g)``, the pupil field before phase and aperture."""
        return self.fft(g if self.gamma is None else self.gamma * g)

    def pupil_to_object(self, z: np.ndarray) -> np.ndarray:
        """``gamma^H F^H z``."""
        out = self.ifft(z)
        return out if self.gamma is None else np.conj(self.gamma) * out

    def forward(self, phi: np.ndarray, g: np.ndarray) -> np.ndarray:
        self._check(phi, g)
        return self.mask * np.exp(1j * phi) * self.object_to_pupil(g)

    def adjoint(self, phi: np.ndarray, y: np.ndarray) -> np.ndarray:
        self._check(phi, y)
        return self.pupil_to_object(np.exp(-1j * phi) * (self.mask * y))


def apply_forward(op: PropagationOperator, phi, g):
    return op.forward(phi, g)


def apply_adjoint(op: PropagationOperator, phi, y):
    return op.adjoint(phi, y)


def normalize(y: np.ndarray) -> np.ndarray:
    """Remove the mean and scale to unit average power per entry."""
    y = np.asarray(y)
    centered = y - y.mean()
    norm = np.linalg.norm(centered)
    if not norm > 0 or not np.isfinite(norm):
        raise DegenerateInputError("cannot normalize a constant frame")
    return np.sqrt(centered.size) * centered / norm


def synthesize_measurement(op: PropagationOperator, phi: np.ndarray, g: np.ndarray,
                           noise_variance: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy measurement ``A_phi g + w`` with ``w ~ CN(0, noise_variance)`` everywhere."""
    if noise_variance < 0:
        raise ValueError("noise variance must be non-negative")
    y = op.forward(phi, g)
    if noise_variance > 0:
        y = y + complex_gaussian_field(rng, op.n, noise_variance)
    return y
