"""Command-line entry point: ``ddh simulate | reconstruct | run | sweep | bench``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import formats
from .config import RunConfig, load_config
from .dynamic import ReconState, ddh_step
from .errors import DdhError, FormatError, IoError
from .metrics import STAT_NAMES, aggregate_runs, peak_strehl
from .simulation import simulate
from .turbulence import flow_velocity, remove_piston_tip_tilt

log = logging.getLogger("ddhmbir")

EXIT_CODES = {"config": 2, "format": 3, "io": 4, "dimension": 5,
              "degenerate-input": 6, "degenerate-fit": 6}
MANIFEST = "run-manifest"
# mean Strehl is scored over this frame window in sweeps and summaries
SCORE_START, SCORE_STOP = 150, 300


def score_window(strehl: np.ndarray) -> np.ndarray:
    return np.asarray(strehl)[SCORE_START:SCORE_STOP + 1]


def window_mean(strehl: np.ndarray) -> float:
    """Mean Strehl over the scoring window, NaN when the run is too short."""
    s = score_window(strehl)
    return float(s.mean()) if s.size else math.nan


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc
    return out


def write_manifest(out: Path, cfg: RunConfig, command: str, extra: dict | None = None) -> None:
    text = f"# command = {command}\n" + cfg.manifest()
    for key, value in (extra or {}).items():
        text += f"# {key} = {value}\n"
    try:
        (out / MANIFEST).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from exc


def wire_frames(cfg: RunConfig, seed: int):
    """Simulated frames at container precision (complex64 data, float32 truth)."""
    sim = cfg.sim(seed)
    op = sim.operator()
    for y, phi in simulate(sim, op):
        yield y.astype(np.complex64), phi.astype(np.float32)


def reconstruct_series(frames, truths, cfg: RunConfig, nk: int | None = None,
                       lam: float | None = None, alpha: float | None = None,
                       raster_dir: Path | None = None):
    """Run the dynamic loop over ``frames``.

    Returns a list of ``(frame, strehl, seconds)`` rows and the per-frame
    transform counts. ``truths`` may be ``None`` (Strehl is then NaN).
    """
    over = {k: v for k, v in (("nk", nk), ("lam", lam), ("alpha", alpha)) if v is not None}
    recon = cfg.recon(**over)
    op = cfg.sim().operator()
    state = ReconState.initial(cfg.n, recon.em.r_min)
    truths = iter(truths) if truths is not None else None
    rows, counts = [], []
    for index, y in enumerate(frames):
        if y.shape != (cfg.n, cfg.n):
            raise FormatError(f"frame {index}: shape {y.shape} does not match n={cfg.n}")
        truth = None
        if truths is not None:
            truth = next(truths, None)
            if truth is None:
                raise FormatError(f"truth stream ends before frame {index}")
        before = op.transforms
        t0 = time.perf_counter()
        new = ddh_step(state, y, recon, op)
        elapsed = time.perf_counter() - t0
        counts.append(op.transforms - before)
        if new.r is not state.r:
            phi = remove_piston_tip_tilt(new.phi, op.aperture)
            strehl = peak_strehl(phi, truth, op.aperture) if truth is not None else math.nan
            rows.append((index, strehl, elapsed if cfg.timing else 0.0))
            if raster_dir is not None and index in cfg.raster_frames:
                _dump_rasters(raster_dir, index, phi, new.r, op.mask)
        state = new
    return rows, counts


def _dump_rasters(out: Path, index: int, phi: np.ndarray, r: np.ndarray, mask: np.ndarray):
    wrapped = np.where(mask > 0, np.angle(np.exp(1j * phi)), -math.pi)
    formats.write_raster(out / f"phase_{index:04d}.pgm", wrapped, -math.pi, math.pi)
    formats.write_raster(out / f"reflectance_{index:04d}.pgm", r, 0.0, float(r.max()) or 1.0)


def _seed_series(args) -> np.ndarray:
    cfg, seed, nk, lam, alpha = args
    pairs = list(wire_frames(cfg, seed))
    rows, _ = reconstruct_series((y for y, _ in pairs), (p for _, p in pairs), cfg,
                                 nk=nk, lam=lam, alpha=alpha)
    return np.array(rows, dtype=float).reshape(-1, 3)


def _map(cfg: RunConfig, tasks):
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_seed_series, tasks))
    return [_seed_series(t) for t in tasks]


def _aggregate_rows(series: list[np.ndarray]):
    frames = series[0][:, 0]
    stats = aggregate_runs([s[:, 1] for s in series])
    return [(int(f), *(float(stats[k][i]) for k in STAT_NAMES)) for i, f in enumerate(frames)]


def _csv_rows(series: np.ndarray):
    return [(int(f), float(s), float(t)) for f, s, t in series]


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: RunConfig, out: Path) -> None:
    sim = cfg.sim()
    v = flow_velocity(sim.turbulence())
    print(f"v = ({v[0]:.6f}, {v[1]:.6f}) px/frame  |v| = {math.hypot(*v):.6f}")
    pairs = wire_frames(cfg, cfg.seed)
    truths: list[np.ndarray] = []

    def measurements():
        for y, phi in pairs:
            truths.append(phi)
            yield y

    formats.write_frames(out / "frames.dhs", measurements(), cfg.n)
    formats.write_phases(out / "truth.phs", truths, cfg.n)
    write_manifest(out, cfg, "simulate", {"velocity": f"{v[0]!r},{v[1]!r}"})
    print(f"wrote {len(truths)} frames to {out}")


def cmd_reconstruct(cfg: RunConfig, out: Path, frames_path, truth_path=None) -> None:
    header, frames = formats.read_frames(frames_path)
    if header.magic != b"DHS1":
        raise FormatError(f"{frames_path}: expected a DHS1 measurement stream")
    if header.n != cfg.n:
        cfg = cfg.replace(n=header.n)
    truths = None
    if truth_path:
        theader, truths = formats.read_frames(truth_path)
        if theader.magic != b"PHS1" or theader.n != header.n:
            raise FormatError(f"{truth_path}: expected a PHS1 stream with n={header.n}")
        if theader.frame_count < header.frame_count:
            raise FormatError(f"{truth_path}: {theader.frame_count} truth frames for "
                              f"{header.frame_count} measurement frames")
    rows, counts = reconstruct_series(frames, truths, cfg, raster_dir=out)
    if truths is not None:
        formats.write_csv(out / "strehl.csv", rows)
        s = np.array([r[1] for r in rows])
        if s.size:
            print(f"frames {len(rows)}  final Strehl {s[-1]:.4f}  "
                  f"mean[{SCORE_START},{SCORE_STOP}] {window_mean(s):.4f}")
    write_manifest(out, cfg, "reconstruct", {"frames": frames_path, "truth": truth_path or ""})


def cmd_run(cfg: RunConfig, out: Path) -> None:
    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    levels = list(cfg.nk_list) or [cfg.nk]
    for nk in levels:
        tag = f"_nk{nk}" if cfg.nk_list else ""
        series = _map(cfg, [(cfg, s, nk, None, None) for s in seeds])
        for seed, s in zip(seeds, series):
            formats.write_csv(out / f"strehl{tag}_seed{seed}.csv", _csv_rows(s))
        formats.write_csv(out / f"aggregate{tag}.csv", _aggregate_rows(series),
                          ("frame", *STAT_NAMES))
        means = [window_mean(s[:, 1]) for s in series]
        print(f"nk={nk}: mean Strehl over frames [{SCORE_START},{SCORE_STOP}] "
              f"= {np.mean(means):.4f} across {len(seeds)} seeds")
    write_manifest(out, cfg, "run", {"seed_list": ",".join(map(str, seeds))})


def cmd_sweep(cfg: RunConfig, out: Path) -> None:
    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    rows = []
    for alpha in cfg.alpha_list:
        for lam in cfg.lambda_list:
            series = _map(cfg, [(cfg, s, None, lam, alpha) for s in seeds])
            score = float(np.mean([window_mean(s[:, 1]) for s in series]))
            rows.append((alpha, lam, score))
            print(f"alpha={alpha:g} lambda={lam:g} mean Strehl {score:.4f}")
    formats.write_csv(out / "sweep.csv", rows, ("alpha", "lambda", "mean_strehl"))
    write_manifest(out, cfg, "sweep", {"seed_list": ",".join(map(str, seeds))})


def cmd_bench(cfg: RunConfig, out: Path) -> None:
    levels = list(cfg.nk_list) or [cfg.nk]
    pairs = list(wire_frames(cfg, cfg.seed))
    rows = []
    timed = cfg.replace(timing=True)
    for nk in levels:
        series, counts = reconstruct_series((y for y, _ in pairs), None, timed, nk=nk)
        t = np.array([r[2] for r in series])
        per_frame = counts[0] if counts and all(c == counts[0] for c in counts) else math.nan
        stats = (float(t.min()), float(np.median(t)), float(np.percentile(t, 99))) if t.size \
            else (math.nan,) * 3
        rows.append((nk, len(series), per_frame, *stats))
        print(f"nk={nk}: {per_frame} transforms/frame  frame time min {stats[0] * 1e3:.2f} ms  "
              f"median {stats[1] * 1e3:.2f} ms  p99 {stats[2] * 1e3:.2f} ms")
    formats.write_csv(out / "bench.csv", rows, ("nk", "frames", "transforms_per_frame",
                                                 "min_seconds", "median_seconds", "p99_seconds"))
    write_manifest(out, cfg, "bench")


# ---------------------------------------------------------------- parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddh", description="Dynamic digital-holography phase and reflectance recovery.")
    parser.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="file of 'key = value' lines")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        group = p.add_argument_group("configuration overrides")
        for f in fields(RunConfig):
            key = RunConfig.key_of(f.name)
            group.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{f.name}",
                               metavar="VALUE", help=f"(default {f.default!r})")
        return p

    add("simulate", "write a measurement stream (frames.dhs) and its truth (truth.phs)")
    p = add("reconstruct", "reconstruct a measurement stream")
    p.add_argument("--input", required=True, help="DHS1 measurement stream")
    p.add_argument("--truth", help="PHS1 truth-phase stream; enables strehl.csv")
    add("run", "simulate and reconstruct several seeds in memory")
    add("sweep", "grid search over alpha_list x lambda_list")
    add("bench", "per-frame latency and transform counts")
    return parser


def resolve(args) -> RunConfig:
    overrides = {name[4:]: value for name, value in vars(args).items()
                 if name.startswith("cfg_") and value is not None}
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        out = _out_dir(args.out)
        if args.command == "simulate":
            cmd_simulate(cfg, out)
        elif args.command == "reconstruct":
            cmd_reconstruct(cfg, out, args.input, args.truth)
        elif args.command == "run":
            cmd_run(cfg, out)
        elif args.command == "sweep":
            cmd_sweep(cfg, out)
        else:
            cmd_bench(cfg, out)
    except DdhError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
