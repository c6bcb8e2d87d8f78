"""Streaming (dynamic) reconstruction loop and the single-frame baseline."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .em import EmConfig, em_iteration
from .errors import DegenerateInputError
from .forward import PropagationOperator, normalize
from .turbulence import remove_piston_tip_tilt

log = logging.getLogger(__name__)


@dataclass
class ReconState:
    n: int
    r: np.ndarray
    phi: np.ndarray

    @classmethod
    def initial(cls, size: int, r_min: float) -> "ReconState":
        return cls(0, np.full((size, size), r_min), np.zeros((size, size)))


@dataclass
class DdhConfig:
    lam: float = 0.45
    alpha: float = 0.025
    nk: int = 1
    em: EmConfig = field(default_factory=EmConfig)

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if int(self.nk) < 1:
            raise ValueError(f"nk must be >= 1, got {self.nk}")


def blend_reflectance(r_prev, backprojection, lam: float, alpha: float, r_min: float):
    """``(1 - lam) r_prev + lam alpha |A^H y|^2``, clamped at ``r_min``."""
    power = backprojection.real ** 2 + backprojection.imag ** 2
    return np.maximum((1.0 - lam) * r_prev + lam * alpha * power, r_min)


def ddh_step(state: ReconState, y_raw: np.ndarray, cfg: DdhConfig,
             op: PropagationOperator) -> ReconState:
    """Process one frame: normalize, detilt, re-initialize ``r``, run ``nk`` EM passes."""
    try:
        y = normalize(y_raw)
    except DegenerateInputError:
        log.warning("frame %d is degenerate; state carried forward", state.n)
        return replace(state, n=state.n + 1)
    phi = remove_piston_tip_tilt(state.phi, op.aperture)
    r = blend_reflectance(state.r, op.adjoint(phi, y), cfg.lam, cfg.alpha, cfg.em.r_min)
    for _ in range(cfg.nk):
        r, phi = em_iteration(op, r, phi, y, cfg.em)
    return ReconState(state.n + 1, r, phi)


Sink = Callable[[int, np.ndarray, np.ndarray], None]


def run_stream(frames: Iterable[np.ndarray], cfg: DdhConfig, op: PropagationOperator,
               sink: Sink | None = None, state: ReconState | None = None) -> ReconState:
    """Fold :func:`ddh_step` over ``frames``; ``sink(n, r, phi)`` after each frame.

    Degenerate frames advance the frame index but produce no sink record.
    Passing the returned state back in continues the stream exactly.
    """
    if state is None:
        state = ReconState.initial(op.n, cfg.em.r_min)
    for y in frames:
        index = state.n
        prev = state
        state = ddh_step(state, y, cfg, op)
        if sink is not None and state.r is not prev.r:
            sink(index, state.r, state.phi)
    return state


def run_static(y: np.ndarray, iters: int, bootstrap_period: int, alpha_b: float,
               cfg: EmConfig, op: PropagationOperator):
    """Single-frame EM from a cold start with periodic back-projection resets."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if bootstrap_period < 1:
        raise ValueError("bootstrap_period must be >= 1")
    y = normalize(y)
    phi = np.zeros(y.shape)

    def bootstrap(phi):
        u = op.adjoint(phi, y)
        return np.maximum(alpha_b * (u.real ** 2 + u.imag ** 2), cfg.r_min)

    r = bootstrap(phi)
    for i in range(1, iters + 1):
        r, phi = em_iteration(op, r, phi, y, cfg)
        if i % bootstrap_period == 0 and i < iters:
            r = bootstrap(phi)
    return r, phi
