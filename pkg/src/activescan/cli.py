"""Command-line entry points.

Subcommands: ``phantom`` (generate ground truth), ``run`` (one episode),
``bench`` (latency report), ``train`` (fit and qualify a denoiser).
Every command writes a ``manifest.json`` that pins the resolved flags and
input hashes; re-running with the same manifest reproduces all outputs
byte for byte (wall-clock diagnostics go to a separate ``timings.csv``).

Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric failure, 5 qualification
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, ulsa_io
from .agent import EpisodeConfig, run_episode
from .bench import (bench_entropy_kernel, environment_description, render_report,
                    report_rows, stage_table)
from .core import Grid
from .denoisers.gaussian import GaussianDenoiser, GaussianPrior
from .errors import NumericFailure, QualificationError
from .manifest import build_manifest, write_manifest
from .metrics import episode_report, write_summary_csv
from .phantom import PhantomParams, generate_phantom
from .policy import PolicyConfig
from .posterior import GuidanceConfig
from .schedule import make_cosine_schedule

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_QUALIFICATION = 5


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="activescan",
                                description="Active scan-line subsampling experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ph = sub.add_parser("phantom", help="generate a pulsating phantom sequence")
    ph.add_argument("--frames", type=int, default=64)
    ph.add_argument("--size", type=int, default=32, help="grid side (n_ax = n_lat)")
    ph.add_argument("--period", type=int, default=16, help="frames per beat")
    ph.add_argument("--amplitude", type=float, default=0.25)
    ph.add_argument("--inner-radius", type=float, default=0.22)
    ph.add_argument("--outer-radius", type=float, default=0.38)
    ph.add_argument("--speckle", type=float, default=0.6)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--out", required=True)

    run = sub.add_parser("run", help="run one perception-action episode")
    run.add_argument("--input", required=True, help="ULSA frame sequence")
    run.add_argument("--labels", default=None, help="ULSA uint8 region labels")
    run.add_argument("--policy", choices=["active", "random", "equispaced"], default="active")
    run.add_argument("--lines-per-frame", type=int, default=7, metavar="K")
    run.add_argument("--particles", type=int, default=4)
    run.add_argument("--window", type=int, default=3)
    run.add_argument("--steps", type=int, default=25)
    run.add_argument("--tau-max", type=int, default=500)
    run.add_argument("--tau-seqdiff", type=int, default=450)
    run.add_argument("--gamma", type=float, default=3.0)
    run.add_argument("--sigma-x2", type=float, default=0.04)
    run.add_argument("--rbf-width", default="auto",
                     help="RBF suppression width, or 'auto' for (L/4K)^2")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--denoiser", default="gaussian",
                     help="'gaussian' or a checkpoint directory")
    run.add_argument("--frames", type=int, default=None, help="cap processed frames")
    run.add_argument("--recon-mode", choices=["first", "mean"], default="first")
    run.add_argument("--debug-residuals", action="store_true",
                     help="also write per-step masked residuals to residuals.csv")
    run.add_argument("--out", required=True)

    be = sub.add_parser("bench", help="per-stage latency benchmark")
    be.add_argument("--size", type=int, default=32)
    be.add_argument("--frames", type=int, default=8)
    be.add_argument("--lines-per-frame", type=int, default=4, metavar="K")
    be.add_argument("--particles", type=int, default=4)
    be.add_argument("--window", type=int, default=3)
    be.add_argument("--steps", type=int, default=25)
    be.add_argument("--denoiser", default="gaussian")
    be.add_argument("--kernel-pixels", type=int, default=112 * 112,
                    help="pixel count for the standalone entropy-kernel timing")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--out", required=True)

    tr = sub.add_parser("train", help="train and qualify a denoiser")
    tr.add_argument("--data", nargs="+", required=True, help="ULSA sequences")
    tr.add_argument("--window", type=int, default=3)
    tr.add_argument("--steps", type=int, default=1500)
    tr.add_argument("--batch", type=int, default=16)
    tr.add_argument("--lr", type=float, default=2e-3)
    tr.add_argument("--tau-max", type=int, default=500)
    tr.add_argument("--base-channels", type=int, default=32)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True)
    return p


def _resolve_rbf_width(raw: str, n_lines: int, k: int) -> tuple[float | None, float]:
    if raw == "auto":
        cfg = PolicyConfig(kind="active", k=k)
        return None, cfg.width_for(n_lines)
    try:
        w = float(raw)
    except ValueError:
        raise UsageError(f"--rbf-width must be a number or 'auto', got {raw!r}")
    if w <= 0:
        raise UsageError("--rbf-width must be positive")
    return w, w


class UsageError(ValueError):
    pass


def _outdir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IOError(f"cannot create output directory {out}: {err}") from err
    return out


def _load_denoiser(name: str, schedule, stack_shape):
    if name == "gaussian":
        prior = GaussianPrior.from_kernel(tuple(stack_shape), mean=0.0)
        return GaussianDenoiser(prior, schedule)
    ckpt = Path(name)
    if not ckpt.is_dir():
        raise IOError(f"denoiser checkpoint {ckpt} does not exist")
    from .denoisers.learned import load_checkpoint  # defers the torch import

    den = load_checkpoint(ckpt, schedule)
    if tuple(den.stack_shape) != tuple(stack_shape):
        raise UsageError(
            f"checkpoint stack {den.stack_shape} does not match input stack {tuple(stack_shape)}"
        )
    return den


def cmd_phantom(args) -> int:
    if args.frames < 1:
        raise UsageError("--frames must be >= 1")
    if args.size < 4:
        raise UsageError("--size must be >= 4")
    grid = Grid(kind="polar2d", n_ax=args.size, n_lat=args.size)
    params = PhantomParams(grid=grid, n_frames=args.frames, period=args.period,
                           inner_radius=args.inner_radius, outer_radius=args.outer_radius,
                           amplitude=args.amplitude, speckle_amplitude=args.speckle,
                           seed=args.seed)
    seq, labels = generate_phantom(params)
    out = _outdir(args.out)
    ulsa_io.save_frame_sequence(out / "seq.ulsa", seq)
    ulsa_io.save_array(out / "labels.ulsa", labels)
    manifest = build_manifest("phantom", vars(args), {}, ["seq.ulsa", "labels.ulsa"])
    write_manifest(out / "manifest.json", manifest)
    print(f"wrote {out / 'seq.ulsa'} ({args.frames} frames, {args.size}x{args.size})")
    return EXIT_OK


def cmd_run(args) -> int:
    in_path = Path(args.input)
    if not in_path.exists():
        raise IOError(f"input {in_path} does not exist")
    seq = ulsa_io.load_frame_sequence(in_path)
    labels = None
    if args.labels:
        if not Path(args.labels).exists():
            raise IOError(f"labels {args.labels} do not exist")
        labels = ulsa_io.load_array(args.labels)
    n_lines = seq.grid.n_lines
    if args.lines_per_frame > n_lines:
        raise UsageError(f"--lines-per-frame {args.lines_per_frame} exceeds the "
                         f"{n_lines} lines of this grid")
    if not 0 < args.tau_seqdiff <= args.tau_max:
        raise UsageError("need 0 < --tau-seqdiff <= --tau-max")
    width, _resolved = _resolve_rbf_width(args.rbf_width, n_lines, args.lines_per_frame)

    schedule = make_cosine_schedule(args.tau_max)
    stack_shape = (args.window,) + seq.grid.frame_shape
    denoiser = _load_denoiser(args.denoiser, schedule, stack_shape)
    cfg = EpisodeConfig(
        policy=PolicyConfig(kind=args.policy, k=args.lines_per_frame,
                            sigma_x2=args.sigma_x2, rbf_width=width, seed=args.seed),
        guidance=GuidanceConfig(gamma=args.gamma, steps_init=args.tau_max,
                                steps_seq=args.tau_seqdiff, num_seqdiff_steps=args.steps),
        window=args.window, n_particles=args.particles, seed=args.seed,
        t_limit=args.frames, recon_mode=args.recon_mode,
    )
    residuals: list | None = [] if args.debug_residuals else None
    recons, _beliefs, log = run_episode(seq, cfg, denoiser, labels=labels,
                                        schedule=schedule, residual_log=residuals)

    out = _outdir(args.out)
    ulsa_io.save_frame_sequence(out / "recon.ulsa", recons)
    log.write_csv(out / "log.csv", include_timings=False)
    log.write_timings_csv(out / "timings.csv")
    if residuals is not None:
        with open(out / "residuals.csv", "w") as fh:
            fh.write("t,tau,mean_masked_residual\n")
            for t, tau, resid in residuals:
                fh.write(f"{t},{tau},{resid:.8f}\n")
    write_summary_csv(out / "summary.csv", episode_report(log))
    outputs = ["recon.ulsa", "log.csv", "timings.csv", "summary.csv"]
    if residuals is not None:
        outputs.append("residuals.csv")
    manifest = build_manifest("run", vars(args), {"input": in_path}, outputs)
    write_manifest(out / "manifest.json", manifest)
    mean_psnr = float(np.mean([r.psnr_db for r in log.records]))
    print(f"wrote {out / 'recon.ulsa'} ({len(log.records)} frames, "
          f"policy={args.policy}, mean PSNR {mean_psnr:.2f} dB)")
    return EXIT_OK


def cmd_bench(args) -> int:
    grid = Grid(kind="polar2d", n_ax=args.size, n_lat=args.size)
    params = PhantomParams(grid=grid, n_frames=args.frames, seed=args.seed)
    seq, _labels = generate_phantom(params)
    schedule = make_cosine_schedule(500)
    stack_shape = (args.window,) + grid.frame_shape
    denoiser = _load_denoiser(args.denoiser, schedule, stack_shape)
    cfg = EpisodeConfig(
        policy=PolicyConfig(kind="active", k=args.lines_per_frame),
        guidance=GuidanceConfig(num_seqdiff_steps=args.steps),
        window=args.window, n_particles=args.particles, seed=args.seed,
    )
    _recons, _beliefs, log = run_episode(seq, cfg, denoiser, schedule=schedule)
    stages = stage_table(log)
    kernel = bench_entropy_kernel(n_particles=args.particles,
                                  n_pixels=args.kernel_pixels, seed=args.seed)
    env = environment_description()
    desc = (f"{args.frames} frames, {args.size}x{args.size}, K={args.lines_per_frame}, "
            f"N_p={args.particles}, {args.steps} steps, denoiser={args.denoiser}")
    report = render_report(stages, kernel, env, desc)

    out = _outdir(args.out)
    (out / "bench.txt").write_text(report)
    with open(out / "bench.csv", "w") as fh:
        fh.write("section,name,value\n")
        for section, name, value in report_rows(stages, kernel):
            fh.write(f"{section},{name},{value}\n")
    manifest = build_manifest("bench", vars(args), {}, ["bench.txt", "bench.csv"])
    write_manifest(out / "manifest.json", manifest)
    print(report)
    return EXIT_OK


def cmd_train(args) -> int:
    from .denoisers.learned import TrainConfig, save_checkpoint, train_epsilon_denoiser

    paths = [Path(p) for p in args.data]
    for p in paths:
        if not p.exists():
            raise IOError(f"training sequence {p} does not exist")
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    dataset = [ulsa_io.load_frame_sequence(p) for p in paths]
    schedule = make_cosine_schedule(args.tau_max)
    cfg = TrainConfig(dataset=dataset, window=args.window, steps=args.steps,
                      batch=args.batch, lr=args.lr, seed=args.seed,
                      base_channels=args.base_channels)
    result = train_epsilon_denoiser(cfg, schedule)
    if not result.qualified:
        raise QualificationError(
            f"validation noise MSE {result.val_mse:.4f} is not below the 0.5 gate"
        )
    out = _outdir(args.out)
    save_checkpoint(out, result.denoiser)
    manifest = build_manifest("train", vars(args), {p.name: p for p in paths},
                              ["manifest.txt", "config.json", "params"])
    write_manifest(out / "manifest.json", manifest)
    print(f"wrote checkpoint {out} (val noise MSE {result.val_mse:.4f})")
    return EXIT_OK


_COMMANDS = {"phantom": cmd_phantom, "run": cmd_run, "bench": cmd_bench, "train": cmd_train}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except QualificationError as err:
        print(f"qualification failure: {err}", file=sys.stderr)
        return EXIT_QUALIFICATION
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
