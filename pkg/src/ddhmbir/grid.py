"""Grid conventions, seeded random streams, and small shared utilities.

Fields are plain ``numpy`` arrays of shape ``(n, n)``: complex128 for
measurements, reflection coefficients and pupil fields, float64 for
reflectance, phase and masks. Pixel ``(n//2, n//2)`` is the grid center.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateFitError, DimensionError


def check_grid(n: int) -> int:
    n = int(n)
    if n < 2 or n % 2:
        raise DimensionError(f"grid size must be even and >= 2, got {n}")
    return n


def check_same_shape(*fields: np.ndarray) -> int:
    """Return the common side length of square fields, or raise."""
    shape = fields[0].shape
    for f in fields:
        if f.shape != shape:
            raise DimensionError(f"shape mismatch: {f.shape} vs {shape}")
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionError(f"expected a square 2-D field, got {shape}")
    return check_grid(shape[0])


@lru_cache(maxsize=16)
def _coords(n: int) -> tuple[np.ndarray, np.ndarray]:
    c = np.arange(n, dtype=float) - n // 2
    y, x = np.meshgrid(c, c, indexing="ij")
    x.setflags(write=False)
    y.setflags(write=False)
    return x, y


def coords(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates ``(x, y)`` measured from the grid center.

    ``x`` varies along columns and ``y`` along rows. The arrays are cached
    and read-only.
    """
    return _coords(check_grid(n))


@dataclass(frozen=True)
class ApertureMask:
    """Circular pupil aperture (the diagonal of the aperture operator).

    ``full=True`` gives the all-ones mask used by exact-EM oracle tests.
    """

    n: int
    diameter_px: float
    full: bool = False

    def __post_init__(self):
        check_grid(self.n)
        if not 0 < self.diameter_px <= self.n:
            raise ValueError(f"diameter_px must lie in (0, {self.n}], got {self.diameter_px}")

    @classmethod
    def circle(cls, n: int, diameter_px: float | None = None) -> "ApertureMask":
        return cls(n, float(n if diameter_px is None else diameter_px))

    @classmethod
    def full_grid(cls, n: int) -> "ApertureMask":
        return cls(n, float(n), full=True)

    @property
    def indicator(self) -> np.ndarray:
        return _indicator(self.n, self.diameter_px, self.full)

    @property
    def count(self) -> int:
        return int(self.indicator.sum())


@lru_cache(maxsize=16)
def _indicator(n: int, diameter_px: float, full: bool) -> np.ndarray:
    if full:
        ind = np.ones((n, n))
    else:
        x, y = coords(n)
        ind = (np.hypot(x, y) < diameter_px / 2).astype(float)
    ind.setflags(write=False)
    return ind


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator for ``seed`` and an optional stream key.

    Distinct ``stream`` tuples give statistically independent generators, so
    simulation components can draw in any order without disturbing each
    other.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def complex_gaussian_field(rng: np.random.Generator, n: int, variance) -> np.ndarray:
    """Draw ``g ~ CN(0, variance)`` independently per pixel."""
    n = check_grid(n)
    variance = np.broadcast_to(np.asarray(variance, dtype=float), (n, n)) \
        if np.ndim(variance) == 0 else np.asarray(variance, dtype=float)
    if variance.shape != (n, n):
        raise DimensionError(f"variance shape {variance.shape} does not match n={n}")
    if np.any(variance < 0):
        raise ValueError("variance must be non-negative")
    z = rng.standard_normal((2, n, n))
    return np.sqrt(variance / 2) * (z[0] + 1j * z[1])


@lru_cache(maxsize=16)
def _plane_solver(n: int, diameter_px: float, full: bool):
    sel = _indicator(n, diameter_px, full) > 0
    x, y = coords(n)
    design = np.stack([np.ones(int(sel.sum())), x[sel], y[sel]], axis=1)
    normal = design.T @ design
    # collinear or tiny masks are rejected
    if sel.sum() < 3 or np.linalg.cond(normal) > 1e12:
        return sel, None
    return sel, np.linalg.solve(normal, design.T)


def ls_plane_fit(field: np.ndarray, mask: ApertureMask) -> tuple[float, float, float]:
    """Least-squares plane ``a + b*x + c*y`` over the active pixels of ``mask``."""
    n = check_same_shape(field)
    if n != mask.n:
        raise DimensionError(f"field n={n} does not match mask n={mask.n}")
    sel, solver = _plane_solver(mask.n, mask.diameter_px, mask.full)
    if solver is None:
        raise DegenerateFitError("aperture does not support a plane fit")
    a, b, c = solver @ field[sel]
    return float(a), float(b), float(c)


def wrap_phase(phi: np.ndarray) -> np.ndarray:
    """Map phase to (-pi, pi]."""
    w = np.angle(np.exp(1j * np.asarray(phi, dtype=float)))
    return np.where(w <= -np.pi, np.pi, w)
