"""One EM iteration for joint reflectance / phase estimation.

Model: ``y = A_phi g + w`` with ``g ~ CN(0, diag(r))`` and
``w ~ CN(0, s2 I)``. For unitary ``A_phi`` the posterior of ``g`` is
diagonal in the object plane, so the E-step is a per-pixel Wiener gain on
the back-projection and the whole iteration costs two 2-D transforms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .forward import PropagationOperator
from .grid import ApertureMask, check_same_shape

log = logging.getLogger(__name__)

# 8-neighbour weights (orthogonal, diagonal), normalised to sum to one
_NEIGHBOURS = [((-1, 0), 1 / 6), ((1, 0), 1 / 6), ((0, -1), 1 / 6), ((0, 1), 1 / 6),
               ((-1, -1), 1 / 12), ((-1, 1), 1 / 12), ((1, -1), 1 / 12), ((1, 1), 1 / 12)]


@dataclass(frozen=True)
class MrfPrior:
    """Pairwise ``|d|^p / (p sigma^p)`` potential on the reflectance."""

    sigma: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.sigma <= 0 or not 1.0 <= self.p <= 2.0:
            raise ValueError("MRF prior needs sigma > 0 and 1 <= p <= 2")


@dataclass
class EmConfig:
    noise_variance: float = 1.0 / 11.0
    r_min: float = 1e-4
    prior: MrfPrior | None = None
    phase_window: int = 1
    phase_update_mask: ApertureMask | None = None
    newton_fallbacks: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        if self.phase_window < 1 or self.phase_window % 2 == 0:
            raise ValueError("phase_window must be a positive odd integer")
        if not self.r_min > 0:
            raise ValueError("r_min must be positive")


@dataclass
class PosteriorMoments:
    mean: np.ndarray
    var: np.ndarray

    @property
    def second_moment(self) -> np.ndarray:
        return self.mean.real ** 2 + self.mean.imag ** 2 + self.var


def e_step(op: PropagationOperator, phi, r, y, cfg: EmConfig) -> PosteriorMoments:
    """Posterior mean and variance of ``g`` given ``(r, phi)``."""
    check_same_shape(phi, r, y)
    s2 = cfg.noise_variance
    u = op.adjoint(phi, y)
    gain = r / (r + s2)
    return PosteriorMoments(gain * u, gain * s2)


def m_step_phi(op: PropagationOperator, moments: PosteriorMoments, y, phi_prev,
               cfg: EmConfig) -> np.ndarray:
    """Maximise ``Re(conj(y) exp(j phi) F(gamma mu))`` over the phase.

    With ``phase_window == 1`` each pixel is solved on its own; a larger odd
    window treats the phase as constant over a ``w x w`` neighbourhood and
    pools the correlation before taking its angle. The result is placed on
    the branch nearest ``phi_prev`` so the stored phase stays continuous from
    frame to frame.
    """
    f = op.object_to_pupil(moments.mean)
    mask = cfg.phase_update_mask.indicator if cfg.phase_update_mask is not None else op.mask
    corr = mask * y * np.conj(f)
    if cfg.phase_window > 1:
        corr = (ndimage.uniform_filter(corr.real, cfg.phase_window, mode="constant")
                + 1j * ndimage.uniform_filter(corr.imag, cfg.phase_window, mode="constant"))
    update = (mask > 0) & (np.abs(corr) > 0)
    step = np.angle(corr * np.exp(-1j * phi_prev))
    return np.where(update, phi_prev + step, phi_prev)


def m_step_r(moments: PosteriorMoments, r_prev, cfg: EmConfig) -> np.ndarray:
    q = moments.second_moment
    if cfg.prior is None:
        return np.maximum(q, cfg.r_min)
    r, failed = _mrf_update(q, r_prev, cfg.prior, cfg.r_min)
    if failed:
        cfg.newton_fallbacks += failed
        log.debug("MRF Newton fallback on %d pixels", failed)
    return r


def _mrf_terms(r_prev: np.ndarray, prior: MrfPrior):
    """Per-pixel quadratic surrogate ``sum_j c_j (r - r_j)^2`` as (sum c, sum c r_j)."""
    padded = np.pad(r_prev, 1, mode="edge")
    n0, n1 = r_prev.shape
    csum = np.zeros_like(r_prev)
    crsum = np.zeros_like(r_prev)
    for (di, dj), w in _NEIGHBOURS:
        nb = padded[1 + di:1 + di + n0, 1 + dj:1 + dj + n1]
        delta = np.abs(r_prev - nb)
        if prior.p == 2.0:
            b = np.full_like(delta, 1.0 / (2 * prior.sigma ** 2))
        else:
            # rho'(d) / (2 d), bounded at d -> 0 by a small floor
            b = np.maximum(delta, 1e-12 * prior.sigma) ** (prior.p - 2) / (2 * prior.sigma ** prior.p)
        csum += w * b
        crsum += w * b * nb
    return csum, crsum


def mrf_objective(r, q, csum, crsum):
    """Per-pixel surrogate ``q/r + log r + sum c_j (r - r_j)^2`` up to a constant."""
    return q / r + np.log(r) + csum * r * r - 2 * crsum * r


def _mrf_update(q, r_prev, prior: MrfPrior, r_min: float, max_iter: int = 50, tol: float = 1e-10):
    csum, crsum = _mrf_terms(r_prev, prior)
    r = np.maximum(r_prev, r_min)
    h = mrf_objective(r, q, csum, crsum)
    active = np.ones(r.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        ra, qa, ca, cra = r[active], q[active], csum[active], crsum[active]
        grad = -qa / ra ** 2 + 1 / ra + 2 * (ca * ra - cra)
        hess = 2 * qa / ra ** 3 - 1 / ra ** 2 + 2 * ca
        # Newton where convex, scaled gradient step elsewhere
        step = np.where(hess > 0, grad / np.where(hess > 0, hess, 1.0), grad * ra * ra)
        ha = h[active]
        t = np.ones_like(ra)
        new = np.maximum(ra - step, r_min)
        hn = mrf_objective(new, qa, ca, cra)
        for _ in range(30):
            bad = hn > ha
            if not bad.any():
                break
            t[bad] *= 0.5
            new[bad] = np.maximum(ra[bad] - t[bad] * step[bad], r_min)
            hn[bad] = mrf_objective(new[bad], qa[bad], ca[bad], cra[bad])
        keep = hn <= ha
        new = np.where(keep, new, ra)
        hn = np.where(keep, hn, ha)
        done = np.abs(new - ra) <= tol * np.maximum(ra, 1.0)
        r[active] = new
        h[active] = hn
        idx = np.flatnonzero(active)
        active.flat[idx[done]] = False
    failed = int(active.sum())
    if failed:
        r[active] = np.maximum(q[active], r_min)
    return r, failed


def em_iteration(op: PropagationOperator, r, phi, y, cfg: EmConfig):
    """E-step, then phase M-step, then reflectance M-step; two transforms."""
    moments = e_step(op, phi, r, y, cfg)
    phi_new = m_step_phi(op, moments, y, phi, cfg)
    r_new = m_step_r(moments, r, cfg)
    return r_new, phi_new
