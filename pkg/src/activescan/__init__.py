"""Closed-loop scan-line subsampling.

Reconstructs image sequences from a handful of measured scan lines by
posterior sampling with a temporal diffusion prior, and picks the next
lines to measure by greedy entropy minimization over the particle belief.
"""

__version__ = "0.1.0"

from .core import (ActionSet, FrameSequence, Grid, LineActionSpace, Mask,  # noqa: E402
                   apply_mask, make_line_action_space, mask_from_actions, scan_convert)
from .schedule import (DiffusionSchedule, ddim_prior_step, forward_diffuse,  # noqa: E402
                       make_cosine_schedule, tweedie_estimate)
from .posterior import (GuidanceConfig, ParticleStack, dps_sample,  # noqa: E402
                        likelihood_gradient, noise_init, reconstruct, seqdiff_init)
from .policy import (EntropyMap, PolicyConfig, azimuth_average, entropy_map,  # noqa: E402
                     equispaced_policy, k_greedy_select, linewise_entropy, random_policy)
from .sensing import MeasurementBuffer, acquire, empty_buffer, push  # noqa: E402
from .phantom import PhantomParams, generate_phantom  # noqa: E402
from .metrics import RegionPair, episode_report, gcnr, psnr  # noqa: E402
from .agent import EpisodeConfig, EpisodeLog, run_episode  # noqa: E402

__all__ = [
    "ActionSet", "FrameSequence", "Grid", "LineActionSpace", "Mask",
    "apply_mask", "make_line_action_space", "mask_from_actions", "scan_convert",
    "DiffusionSchedule", "ddim_prior_step", "forward_diffuse",
    "make_cosine_schedule", "tweedie_estimate",
    "GuidanceConfig", "ParticleStack", "dps_sample", "likelihood_gradient",
    "noise_init", "reconstruct", "seqdiff_init",
    "EntropyMap", "PolicyConfig", "azimuth_average", "entropy_map",
    "equispaced_policy", "k_greedy_select", "linewise_entropy", "random_policy",
    "MeasurementBuffer", "acquire", "empty_buffer", "push",
    "PhantomParams", "generate_phantom",
    "RegionPair", "episode_report", "gcnr", "psnr",
    "EpisodeConfig", "EpisodeLog", "run_episode",
]
