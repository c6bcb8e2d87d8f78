"""Run configuration: defaults, ``key = value`` files, environment overrides."""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .dynamic import DdhConfig
from .em import EmConfig, MrfPrior
from .errors import ConfigError
from .simulation import SimConfig

ENV_PREFIX = "DDH_"
# config keys that differ from the attribute name
KEY_ALIASES = {"lambda": "lam"}


def _floats(text: str) -> tuple[float, ...]:
    items = [t for t in str(text).replace(" ", "").split(",") if t]
    return tuple(float(t) for t in items)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in _floats(text))


@dataclass
class RunConfig:
    # simulation
    n: int = 256
    fs: float = 10_000.0
    fg: float = 100.0
    d_over_r0: float = 10.0
    snr_db: float = 10.0
    wavelength: float = 1.064e-6
    flow_direction: tuple[float, float] = (1.0, 1.0)
    frames: int = 300
    seed: int = 0
    aperture_diameter_px: float = 0.0
    screen_oversize: int = 2
    curvature: float = 0.0
    scene_extent: float = 0.375
    background: float = 1e-4
    foreground: float = 1.0
    scene_path: str = ""
    # reconstruction
    lam: float = 0.45
    alpha: float = 0.025
    nk: int = 1
    noise_variance: float = 1.0
    r_min: float = 1e-4
    prior: str = "none"
    prior_sigma: float = 1.0
    prior_p: float = 2.0
    phase_window: int = 5
    # drivers
    seeds: int = 10
    nk_list: tuple[int, ...] = ()
    alpha_list: tuple[float, ...] = (0.0, 0.0125, 0.025, 0.05, 0.1)
    lambda_list: tuple[float, ...] = (0.1, 0.25, 0.45, 0.7, 1.0)
    raster_frames: tuple[int, ...] = ()
    psf_zoom: float = 5.3
    timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, name, why):
            if not cond:
                raise ConfigError(f"{self.key_of(name)}: {why}")

        need(self.n >= 2 and self.n % 2 == 0, "n", "must be even and >= 2")
        need(self.fs > 0, "fs", "must be positive")
        need(self.fg >= 0, "fg", "must be non-negative")
        need(self.d_over_r0 > 0, "d_over_r0", "must be positive")
        need(len(self.flow_direction) == 2 and math.hypot(*self.flow_direction) > 0,
             "flow_direction", "must be a non-zero 2-vector")
        need(self.frames >= 0, "frames", "must be non-negative")
        need(0 <= self.aperture_diameter_px <= self.n, "aperture_diameter_px",
             "must lie in [0, n] (0 selects n)")
        need(self.screen_oversize >= 1, "screen_oversize", "must be >= 1")
        need(0 < self.scene_extent <= 1, "scene_extent", "must lie in (0, 1]")
        need(0 < self.background < self.foreground <= 1, "background",
             "need 0 < background < foreground <= 1")
        need(0 <= self.lam <= 1, "lam", "must lie in [0, 1]")
        need(0 <= self.alpha <= 1, "alpha", "must lie in [0, 1]")
        need(self.nk >= 1, "nk", "must be >= 1")
        need(self.noise_variance > 0, "noise_variance", "must be positive")
        need(self.r_min > 0, "r_min", "must be positive")
        need(self.prior in ("none", "mrf"), "prior", "must be 'none' or 'mrf'")
        need(self.phase_window >= 1 and self.phase_window % 2 == 1, "phase_window",
             "must be a positive odd integer")
        need(self.seeds >= 1, "seeds", "must be >= 1")
        need(all(k >= 1 for k in self.nk_list), "nk_list", "entries must be >= 1")
        need(len(self.alpha_list) > 0, "alpha_list", "must not be empty")
        need(len(self.lambda_list) > 0, "lambda_list", "must not be empty")
        need(all(0 <= a <= 1 for a in self.alpha_list), "alpha_list", "entries must lie in [0, 1]")
        need(all(0 <= a <= 1 for a in self.lambda_list), "lambda_list", "entries must lie in [0, 1]")
        need(self.jobs >= 1, "jobs", "must be >= 1")

    @staticmethod
    def key_of(attr: str) -> str:
        for key, name in KEY_ALIASES.items():
            if name == attr:
                return key
        return attr

    @classmethod
    def keys(cls) -> list[str]:
        return [cls.key_of(f.name) for f in fields(cls)]

    def sim(self, seed: int | None = None) -> SimConfig:
        norm = math.hypot(*self.flow_direction)
        return SimConfig(
            n=self.n, fs=self.fs, fg=self.fg, d_over_r0=self.d_over_r0, snr_db=self.snr_db,
            wavelength=self.wavelength,
            flow_direction=(self.flow_direction[0] / norm, self.flow_direction[1] / norm),
            frames=self.frames, seed=self.seed if seed is None else seed,
            aperture_diameter_px=self.aperture_diameter_px or None,
            screen_oversize=self.screen_oversize, curvature=self.curvature,
            scene_extent=self.scene_extent, background=self.background,
            foreground=self.foreground, scene_path=self.scene_path or None)

    def recon(self, **overrides) -> DdhConfig:
        prior = MrfPrior(self.prior_sigma, self.prior_p) if self.prior == "mrf" else None
        em = EmConfig(noise_variance=self.noise_variance, r_min=self.r_min, prior=prior,
                      phase_window=self.phase_window)
        params = dict(lam=self.lam, alpha=self.alpha, nk=self.nk)
        params.update(overrides)
        return DdhConfig(em=em, **params)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def manifest(self) -> str:
        lines = ["# resolved run configuration"]
        for f in fields(self):
            lines.append(f"{self.key_of(f.name)} = {format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _attr(key: str) -> str:
    key = key.strip().replace("-", "_")
    name = KEY_ALIASES.get(key, key)
    if name not in {f.name for f in fields(RunConfig)}:
        raise ConfigError(f"unknown configuration key '{key}'")
    return name


def _convert(name: str, raw: str):
    ftype = {f.name: f.type for f in fields(RunConfig)}[name]
    raw = str(raw).strip()
    try:
        if ftype == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype.startswith("tuple[int"):
            return _ints(raw)
        if ftype.startswith("tuple[float"):
            return _floats(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{RunConfig.key_of(name)}: cannot parse '{raw}' as {ftype}") from None


def parse_assignments(text: str, source: str = "config") -> dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        name = _attr(key)
        out[name] = _convert(name, value)
    return out


def load_config(path=None, overrides: dict[str, str] | None = None,
                environ: dict[str, str] | None = None) -> RunConfig:
    """Resolve defaults, then ``path``, then ``DDH_*`` variables, then ``overrides``."""
    values: dict[str, object] = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_assignments(text, str(path)))
    environ = os.environ if environ is None else environ
    for key, raw in environ.items():
        if key.startswith(ENV_PREFIX):
            name = _attr(key[len(ENV_PREFIX):].lower())
            values[name] = _convert(name, raw)
    for key, raw in (overrides or {}).items():
        name = _attr(key)
        values[name] = _convert(name, raw)
    return RunConfig(**values)
