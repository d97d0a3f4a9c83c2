"""Latency benchmarking: per-stage episode timings and kernel comparison.

Two parts: (1) run a fixed episode and average the per-frame stage wall
times the agent already records; (2) time the entropy kernel directly on
both backends (compiled and numpy) and measure how its cost scales when
the particle count doubles (the pairwise sum is quadratic in N_p).
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .agent import EpisodeLog

STAGE_KEYS = ["denoiser_ms", "guidance_ms", "entropy_ms", "select_ms", "other_ms", "total_ms"]


def stage_table(log: EpisodeLog) -> dict[str, float]:
    """Mean per-frame wall time of each pipeline stage."""
    recs = log.records
    if not recs:
        raise ValueError("empty episode log")
    n = len(recs)
    means = {
        "denoiser_ms": sum(r.denoiser_ms for r in recs) / n,
        "guidance_ms": sum(r.guidance_ms for r in recs) / n,
        "entropy_ms": sum(r.entropy_ms for r in recs) / n,
        "select_ms": sum(r.select_ms for r in recs) / n,
    }
    total = sum(r.perception_ms + r.action_ms for r in recs) / n
    means["other_ms"] = max(total - sum(means.values()), 0.0)
    means["total_ms"] = total
    means["perception_ms"] = sum(r.perception_ms for r in recs) / n
    means["action_ms"] = sum(r.action_ms for r in recs) / n
    means["frames_per_s"] = 1000.0 / total if total > 0 else float("inf")
    return means


def _time_kernel(fn, particles: np.ndarray, sigma_x2: float, repeats: int = 11) -> float:
    """Median wall time (ms) of one kernel call."""
    fn(particles, sigma_x2)  # warm up
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(particles, sigma_x2)
        samples.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(samples))


@dataclass(frozen=True)
class KernelBench:
    backend: str
    cython_ms: float | None
    numpy_ms: float
    base_ms: float       # selected backend, N_p particles
    doubled_ms: float    # selected backend, 2 N_p particles
    ratio: float
    n_particles: int
    n_pixels: int


def bench_entropy_kernel(n_particles: int = 4, n_pixels: int = 112 * 112,
                         sigma_x2: float = 0.04, seed: int = 0,
                         repeats: int = 11) -> KernelBench:
    rng = np.random.default_rng(seed)
    base = np.ascontiguousarray(rng.standard_normal((n_particles, n_pixels)))
    doubled = np.ascontiguousarray(rng.standard_normal((2 * n_particles, n_pixels)))

    numpy_ms = _time_kernel(_kernels.pairwise_entropy_numpy, base, sigma_x2, repeats)
    cython_ms = None
    if _kernels.BACKEND == "cython":
        cython_ms = _time_kernel(_kernels.pairwise_entropy, base, sigma_x2, repeats)

    base_ms = _time_kernel(_kernels.pairwise_entropy, base, sigma_x2, repeats)
    doubled_ms = _time_kernel(_kernels.pairwise_entropy, doubled, sigma_x2, repeats)
    return KernelBench(
        backend=_kernels.BACKEND, cython_ms=cython_ms, numpy_ms=numpy_ms,
        base_ms=base_ms, doubled_ms=doubled_ms,
        ratio=doubled_ms / base_ms if base_ms > 0 else float("inf"),
        n_particles=n_particles, n_pixels=n_pixels,
    )


def environment_description() -> dict[str, str]:
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": _kernels.BACKEND,
    }


def render_report(stages: dict[str, float], kernel: KernelBench, env: dict[str, str],
                  episode_desc: str) -> str:
    lines = ["per-stage mean latency per frame", f"  episode: {episode_desc}", ""]
    lines.append(f"  {'stage':<14s} {'ms/frame':>10s}")
    for key in STAGE_KEYS:
        lines.append(f"  {key[:-3]:<14s} {stages[key]:>10.3f}")
    lines.append(f"  {'frames/s':<14s} {stages['frames_per_s']:>10.2f}")
    lines.append("")
    lines.append("entropy kernel (pairwise sums)")
    lines.append(f"  backend: {kernel.backend}, {kernel.n_particles} particles, "
                 f"{kernel.n_pixels} pixels")
    if kernel.cython_ms is not None:
        lines.append(f"  cython: {kernel.cython_ms:.3f} ms   numpy: {kernel.numpy_ms:.3f} ms   "
                     f"speedup: {kernel.numpy_ms / kernel.cython_ms:.2f}x")
    else:
        lines.append(f"  numpy: {kernel.numpy_ms:.3f} ms (compiled backend unavailable)")
    lines.append(f"  doubling particles: {kernel.base_ms:.3f} -> {kernel.doubled_ms:.3f} ms "
                 f"(ratio {kernel.ratio:.2f}, pairwise model predicts 4)")
    lines.append("")
    lines.append("environment")
    for k, v in env.items():
        lines.append(f"  {k}: {v}")
    return "\n".join(lines) + "\n"


def report_rows(stages: dict[str, float], kernel: KernelBench) -> list[tuple[str, str, str]]:
    rows = [("stage", key, f"{stages[key]:.6f}") for key in STAGE_KEYS]
    rows.append(("throughput", "frames_per_s", f"{stages['frames_per_s']:.6f}"))
    rows.append(("throughput", "perception_ms", f"{stages['perception_ms']:.6f}"))
    rows.append(("throughput", "action_ms", f"{stages['action_ms']:.6f}"))
    if kernel.cython_ms is not None:
        rows.append(("kernel", "cython_ms", f"{kernel.cython_ms:.6f}"))
    rows.append(("kernel", "numpy_ms", f"{kernel.numpy_ms:.6f}"))
    rows.append(("kernel", "backend", kernel.backend))
    rows.append(("scaling", "base_ms", f"{kernel.base_ms:.6f}"))
    rows.append(("scaling", "doubled_ms", f"{kernel.doubled_ms:.6f}"))
    rows.append(("scaling", "ratio", f"{kernel.ratio:.6f}"))
    return rows
