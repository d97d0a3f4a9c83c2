"""The perception-action loop: acquire, infer, select, repeat.

Each frame: measure the chosen lines, push them into the W-slice buffers,
warm-start the particle stacks from the previous frame (pure noise on the
first), run guided reverse diffusion, emit the first particle as the
reconstruction, then score lines by belief entropy and pick the next
actions. The loop is strictly sequential across frames and fully
deterministic given the master seed.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .core import ActionSet, FrameSequence, make_line_action_space, mask_from_actions
from .denoisers.base import DenoiserSpec
from .errors import NumericFailure
from .metrics import gcnr, psnr, region_values
from .phantom import LABEL_MYOCARDIUM, LABEL_VENTRICLE
from .policy import (PolicyConfig, azimuth_average, entropy_map, equispaced_policy,
                     k_greedy_select, linewise_entropy, random_policy)
from .posterior import (GuidanceConfig, ParticleStack, dps_sample, noise_init,
                        reconstruct, seqdiff_init)
from .rng import STREAM_PARTICLES, STREAM_POLICY, substream
from .schedule import DiffusionSchedule, make_cosine_schedule
from .sensing import acquire, empty_buffer, push


class FrameSource(Protocol):
    """Measurement source interface; the simulation wraps a ground-truth
    sequence, a live probe would implement the same surface."""

    def measure(self, t: int, actions: ActionSet) -> np.ndarray: ...

    @property
    def n_frames(self) -> int: ...


class LiveProbeSource:
    """Placeholder for a hardware-backed source; not implemented here."""

    @property
    def n_frames(self) -> int:
        raise NotImplementedError("live probe sources are not implemented")

    def measure(self, t: int, actions: ActionSet) -> np.ndarray:
        raise NotImplementedError("live probe sources are not implemented")


@dataclass(frozen=True)
class EpisodeConfig:
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    window: int = 3
    n_particles: int = 4
    seed: int = 0
    t_limit: int | None = None  # cap on processed frames
    recon_mode: str = "first"   # "first" (default) or "mean"

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.n_particles < 2:
            raise ValueError("need at least two particles")
        if self.t_limit is not None and self.t_limit < 1:
            raise ValueError("t_limit must be >= 1")
        if self.recon_mode not in ("first", "mean"):
            raise ValueError("recon_mode must be 'first' or 'mean'")


@dataclass
class FrameRecord:
    t: int
    lines: tuple[int, ...]
    psnr_db: float
    gcnr: float | None
    gcnr_ref: float | None
    mean_entropy: float
    max_entropy: float
    perception_ms: float
    action_ms: float
    denoiser_ms: float = 0.0
    guidance_ms: float = 0.0
    entropy_ms: float = 0.0
    select_ms: float = 0.0


LOG_HEADER = ["t", "policy", "K", "psnr_db", "gcnr", "mean_entropy",
              "perception_ms", "action_ms", "lines"]


@dataclass
class EpisodeLog:
    policy: str
    k: int
    records: list[FrameRecord] = field(default_factory=list)

    def write_csv(self, path: str | Path, include_timings: bool = True) -> None:
        """Per-frame CSV. With ``include_timings=False`` the wall-time
        columns stay empty so repeated runs produce byte-identical files."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LOG_HEADER)
            for r in self.records:
                w.writerow([
                    r.t, self.policy, self.k,
                    f"{r.psnr_db:.6f}",
                    "" if r.gcnr is None else f"{r.gcnr:.6f}",
                    f"{r.mean_entropy:.6f}",
                    f"{r.perception_ms:.3f}" if include_timings else "",
                    f"{r.action_ms:.3f}" if include_timings else "",
                    ";".join(str(i) for i in r.lines),
                ])

    def write_timings_csv(self, path: str | Path) -> None:
        """Wall-clock diagnostics (not covered by the determinism contract)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "perception_ms", "action_ms", "denoiser_ms",
                        "guidance_ms", "entropy_ms", "select_ms"])
            for r in self.records:
                w.writerow([r.t, f"{r.perception_ms:.3f}", f"{r.action_ms:.3f}",
                            f"{r.denoiser_ms:.3f}", f"{r.guidance_ms:.3f}",
                            f"{r.entropy_ms:.3f}", f"{r.select_ms:.3f}"])


def _initial_actions(cfg: EpisodeConfig, n_lines: int, policy_seed) -> ActionSet:
    if cfg.policy.kind == "equispaced":
        return equispaced_policy(1, n_lines, cfg.policy.k)
    # active has no belief yet; start uniformly at random like the random baseline
    return random_policy(n_lines, cfg.policy.k, policy_seed, 1)


def _line_totals(stack: ParticleStack, cfg: EpisodeConfig, space, grid) -> tuple[np.ndarray, float, float, float]:
    """Entropy map -> per-line totals; returns (totals, mean, max, ms)."""
    t0 = time.perf_counter()
    h = entropy_map(stack, cfg.policy.sigma_x2)
    if grid.kind == "polar3d":
        plane_map = azimuth_average(h)          # (ax, el)
        totals = plane_map.values.sum(axis=0)   # per elevation plane
    else:
        totals = linewise_entropy(h, space)
    ms = (time.perf_counter() - t0) * 1e3
    return totals, float(h.values.mean()), float(h.values.max()), ms


def run_episode(source: FrameSequence, cfg: EpisodeConfig, denoiser: DenoiserSpec,
                labels: np.ndarray | None = None,
                schedule: DiffusionSchedule | None = None,
                residual_log: list | None = None,
                ) -> tuple[FrameSequence, np.ndarray, EpisodeLog]:
    """Run the loop over the source sequence.

    Returns the reconstructions (clipped to [-1, 1]), the belief particles
    per frame (T, N_p, *frame_shape), and the per-frame log. ``labels``
    (uint8, shape of the source) enable the contrast metric columns.
    ``residual_log``, when given, collects (frame, tau, mean masked
    residual) triples from every reverse step for debugging.
    """
    grid = source.grid
    stack_shape = (cfg.window,) + grid.frame_shape
    if tuple(denoiser.stack_shape) != stack_shape:
        raise ValueError(
            f"denoiser stack {denoiser.stack_shape} does not match episode stack {stack_shape}"
        )
    space = make_line_action_space(grid)
    n_lines = space.n_lines
    if cfg.policy.k > n_lines:
        raise ValueError(f"K={cfg.policy.k} exceeds the {n_lines} available lines")
    if labels is not None and labels.shape != source.frames.shape:
        raise ValueError("labels must match the source frames' shape")

    g = cfg.guidance
    s = schedule if schedule is not None else make_cosine_schedule(g.steps_init)
    s.check_tau(g.steps_init)
    policy_seed = substream(cfg.seed, STREAM_POLICY)
    width = cfg.policy.width_for(n_lines)
    n_frames = source.n_frames if cfg.t_limit is None else min(cfg.t_limit, source.n_frames)

    buf = empty_buffer(cfg.window, grid.frame_shape)
    actions = _initial_actions(cfg, n_lines, policy_seed)
    prev: ParticleStack | None = None
    recons = np.empty((n_frames,) + grid.frame_shape, dtype=np.float32)
    beliefs = np.empty((n_frames, cfg.n_particles) + grid.frame_shape, dtype=np.float32)
    log = EpisodeLog(policy=cfg.policy.kind, k=cfg.policy.k)

    for t in range(1, n_frames + 1):
        y_t = acquire(source, t - 1, actions, space)
        m_t = mask_from_actions(actions, space)
        buf = push(buf, y_t, m_t)

        frame_seed = substream(cfg.seed, STREAM_PARTICLES, t)
        stage: dict[str, float] = {}
        t0 = time.perf_counter()
        if prev is None:
            init = noise_init(stack_shape, cfg.n_particles, frame_seed)
            tau_start = g.steps_init
        else:
            shifted = np.concatenate([prev.particles[:, 1:], prev.particles[:, -1:]], axis=1)
            init = seqdiff_init(ParticleStack(particles=shifted), g.steps_seq, frame_seed, s)
            tau_start = g.steps_seq
        frame_residuals: list | None = [] if residual_log is not None else None
        try:
            stack = dps_sample(denoiser, s, buf.y_slices, buf.m_slices, init, g,
                               tau_start=tau_start, num_steps=g.num_seqdiff_steps,
                               timer=stage, residual_log=frame_residuals)
        except NumericFailure as err:
            raise NumericFailure(f"frame {t}: {err}") from err
        if residual_log is not None:
            residual_log.extend((t, tau, resid) for tau, resid in frame_residuals)
        recon = np.clip(reconstruct(stack, mode=cfg.recon_mode), -1.0, 1.0)
        perception_ms = (time.perf_counter() - t0) * 1e3

        t1 = time.perf_counter()
        if cfg.policy.kind == "active":
            totals, h_mean, h_max, entropy_ms = _line_totals(stack, cfg, space, grid)
            t2 = time.perf_counter()
            nxt = k_greedy_select(totals, cfg.policy.k, width)
            select_ms = (time.perf_counter() - t2) * 1e3
            action_ms = (time.perf_counter() - t1) * 1e3
        else:
            if cfg.policy.kind == "random":
                nxt = random_policy(n_lines, cfg.policy.k, policy_seed, t + 1)
            else:
                nxt = equispaced_policy(t + 1, n_lines, cfg.policy.k)
            action_ms = (time.perf_counter() - t1) * 1e3
            # entropy is diagnostics only for the baselines; keep it out of
            # the action timer
            _, h_mean, h_max, entropy_ms = _line_totals(stack, cfg, space, grid)
            select_ms = 0.0

        gt = source.frames[t - 1].astype(np.float64)
        psnr_db = psnr(recon, gt, peak=2.0)
        gcnr_val = gcnr_ref = None
        if labels is not None:
            lab = labels[t - 1]
            vent = region_values(recon, lab, LABEL_VENTRICLE)
            myo = region_values(recon, lab, LABEL_MYOCARDIUM)
            if vent.size and myo.size:
                gcnr_val = gcnr(vent, myo)
                gcnr_ref = gcnr(region_values(gt, lab, LABEL_VENTRICLE),
                                region_values(gt, lab, LABEL_MYOCARDIUM))

        recons[t - 1] = recon
        beliefs[t - 1] = stack.final_slices().astype(np.float32)
        log.records.append(FrameRecord(
            t=t, lines=actions.line_indices, psnr_db=psnr_db,
            gcnr=gcnr_val, gcnr_ref=gcnr_ref,
            mean_entropy=h_mean, max_entropy=h_max,
            perception_ms=perception_ms, action_ms=action_ms,
            denoiser_ms=stage.get("denoiser_ms", 0.0),
            guidance_ms=stage.get("guidance_ms", 0.0),
            entropy_ms=entropy_ms, select_ms=select_ms,
        ))
        actions = nxt
        prev = stack

    return FrameSequence(grid=grid, frames=recons), beliefs, log
