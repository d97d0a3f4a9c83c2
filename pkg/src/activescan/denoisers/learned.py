"""Learned noise predictor: a small conditioned conv encoder-decoder.

The network takes the W-frame stack as channels and predicts the noise;
the noise level enters as Fourier features of sigma_tau^2 through FiLM
(per-channel scale/shift) in every block. Any architecture is acceptable
here as long as it passes the qualification gate: held-out noise MSE per
pixel below 0.5 (a zero predictor scores 1.0 under unit-variance noise).

Checkpoints are a directory: one ULSA container per parameter tensor under
``params/``, a ``manifest.txt`` with one ``name shape dtype file`` line per
tensor, and a ``config.json`` with the architecture hyperparameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..core import FrameSequence
from ..rng import STREAM_TRAINING, generator
from ..schedule import DiffusionSchedule
from .. import ulsa_io

QUALIFICATION_MSE = 0.5


@dataclass
class TrainConfig:
    dataset: list[FrameSequence]
    window: int = 3
    steps: int = 1500
    batch: int = 16
    lr: float = 2e-3
    seed: int = 0
    val_fraction: float = 0.125
    base_channels: int = 32

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.dataset:
            raise ValueError("dataset is empty")
        grid = self.dataset[0].grid
        for seq in self.dataset:
            if seq.grid.frame_shape != grid.frame_shape:
                raise ValueError("all sequences must share one grid")
            if seq.n_frames < self.window:
                raise ValueError("every sequence must be at least W frames long")
        if grid.kind == "polar3d":
            raise ValueError("the learned denoiser supports 2D grids only")
        if any(side % 2 for side in grid.frame_shape):
            raise ValueError("frame sides must be even (the net downsamples once)")


def _sigma2_features(s2: torch.Tensor) -> torch.Tensor:
    """(B,) noise variances -> (B, 17) Fourier features."""
    freqs = 2.0 ** torch.arange(8, dtype=s2.dtype, device=s2.device) * torch.pi
    ang = s2[:, None] * freqs[None, :]
    return torch.cat([s2[:, None], torch.sin(ang), torch.cos(ang)], dim=1)


class _Block(nn.Module):
    def __init__(self, cin: int, cout: int, emb: int):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.film = nn.Linear(emb, 2 * cout)
        self.act = nn.SiLU()

    def forward(self, x, e):
        x = self.act(self.conv1(x))
        scale, shift = self.film(e)[:, :, None, None].chunk(2, dim=1)
        x = x * (1.0 + scale) + shift
        return self.act(self.conv2(x))


class NoiseNet(nn.Module):
    """Two-scale encoder-decoder with a skip connection."""

    def __init__(self, window: int = 3, base: int = 32, emb: int = 64):
        super().__init__()
        c0, c1 = base, base * 2
        self.embed = nn.Sequential(nn.Linear(17, emb), nn.SiLU(), nn.Linear(emb, emb), nn.SiLU())
        self.enc0 = _Block(window, c0, emb)
        self.down = nn.Conv2d(c0, c1, 3, stride=2, padding=1)
        self.enc1 = _Block(c1, c1, emb)
        self.mid = _Block(c1, c1, emb)
        self.up = nn.Sequential(nn.Upsample(scale_factor=2, mode="nearest"),
                                nn.Conv2d(c1, c0, 3, padding=1))
        self.dec0 = _Block(2 * c0, c0, emb)
        self.out = nn.Conv2d(c0, window, 3, padding=1)
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, x, s2):
        e = self.embed(_sigma2_features(s2))
        h0 = self.enc0(x, e)
        h1 = self.enc1(self.down(h0), e)
        h1 = self.mid(h1, e)
        u = self.up(h1)
        return self.out(self.dec0(torch.cat([u, h0], dim=1), e))


class LearnedDenoiser:
    """DenoiserSpec over a trained NoiseNet; vjp_mode = "identity"."""

    vjp_mode = "identity"

    def __init__(self, net: NoiseNet, schedule: DiffusionSchedule,
                 stack_shape: tuple[int, ...], config: dict):
        self.net = net.eval()
        self.schedule = schedule
        self.stack_shape = tuple(stack_shape)
        self.config = config
        for p in self.net.parameters():
            p.requires_grad_(False)

    def evaluate(self, x_tau: np.ndarray, tau: int) -> np.ndarray:
        tau = self.schedule.check_tau(tau)
        x = np.asarray(x_tau)
        batched = x.ndim == len(self.stack_shape) + 1
        if not batched:
            x = x[None]
        s2 = float(self.schedule.sigmas[tau]) ** 2
        with torch.no_grad():
            xt = torch.from_numpy(np.ascontiguousarray(x, dtype=np.float32))
            s2t = torch.full((xt.shape[0],), s2, dtype=torch.float32)
            out = self.net(xt, s2t).numpy().astype(np.float64)
        return out if batched else out[0]


@dataclass
class TrainResult:
    denoiser: LearnedDenoiser
    val_mse: float
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def qualified(self) -> bool:
        return self.val_mse < QUALIFICATION_MSE


def _window_pool(seqs: list[FrameSequence], window: int) -> np.ndarray:
    """All W-frame windows of all sequences, stacked (N, W, H, Wd)."""
    chunks = []
    for seq in seqs:
        f = seq.frames
        for j in range(seq.n_frames - window + 1):
            chunks.append(f[j:j + window])
    return np.stack(chunks).astype(np.float32)


def train_epsilon_denoiser(cfg: TrainConfig, s: DiffusionSchedule) -> TrainResult:
    """Fit the noise predictor on random (window, tau, eps) draws.

    Deterministic given cfg.seed: numpy drives the data sampling, torch the
    initialization, and training runs single threaded.
    """
    torch.set_num_threads(1)
    rng = generator(cfg.seed, STREAM_TRAINING)
    torch.manual_seed(int(rng.integers(2**63)))

    n_val = max(1, int(round(len(cfg.dataset) * cfg.val_fraction)))
    if len(cfg.dataset) <= n_val:
        raise ValueError("dataset too small to hold out a validation split")
    val_pool = _window_pool(cfg.dataset[-n_val:], cfg.window)
    train_pool = _window_pool(cfg.dataset[:-n_val], cfg.window)
    stack_shape = train_pool.shape[1:]

    net = NoiseNet(window=cfg.window, base=cfg.base_channels)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    # cosine decay + gradient clipping: constant-lr Adam occasionally hits a
    # late loss spike it cannot recover from within the step budget
    lr_sched = torch.optim.lr_scheduler.CosineAnnealingLR(
        opt, T_max=cfg.steps, eta_min=cfg.lr * 0.01)

    # fixed validation draws, reused at every evaluation
    n_vs = min(256, val_pool.shape[0] * 4)
    v_idx = rng.integers(0, val_pool.shape[0], n_vs)
    v_tau = rng.integers(1, s.tau_max + 1, n_vs)
    v_eps = rng.standard_normal((n_vs,) + stack_shape).astype(np.float32)

    def val_mse() -> float:
        net.eval()
        total = 0.0
        with torch.no_grad():
            for lo in range(0, n_vs, 64):
                sl = slice(lo, min(lo + 64, n_vs))
                x0 = val_pool[v_idx[sl]]
                al = s.alphas[v_tau[sl]].astype(np.float32)[:, None, None, None]
                sg = s.sigmas[v_tau[sl]].astype(np.float32)[:, None, None, None]
                x_tau = torch.from_numpy(al * x0 + sg * v_eps[sl])
                s2 = torch.from_numpy((s.sigmas[v_tau[sl]] ** 2).astype(np.float32))
                pred = net(x_tau, s2)
                total += float(((pred - torch.from_numpy(v_eps[sl])) ** 2).sum())
        net.train()
        return total / (n_vs * int(np.prod(stack_shape)))

    history: list[tuple[int, float]] = []
    net.train()
    for step in range(1, cfg.steps + 1):
        idx = rng.integers(0, train_pool.shape[0], cfg.batch)
        tau = rng.integers(1, s.tau_max + 1, cfg.batch)
        eps = rng.standard_normal((cfg.batch,) + stack_shape).astype(np.float32)
        al = s.alphas[tau].astype(np.float32)[:, None, None, None]
        sg = s.sigmas[tau].astype(np.float32)[:, None, None, None]
        x_tau = torch.from_numpy(al * train_pool[idx] + sg * eps)
        s2 = torch.from_numpy((s.sigmas[tau] ** 2).astype(np.float32))
        loss = ((net(x_tau, s2) - torch.from_numpy(eps)) ** 2).mean()
        opt.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(net.parameters(), 1.0)
        opt.step()
        lr_sched.step()
        if step % max(1, cfg.steps // 10) == 0 or step == cfg.steps:
            history.append((step, val_mse()))

    final = history[-1][1]
    den = LearnedDenoiser(net, s, stack_shape, config={
        "window": cfg.window, "frame_shape": list(stack_shape[1:]),
        "base_channels": cfg.base_channels, "tau_max": s.tau_max,
    })
    return TrainResult(denoiser=den, val_mse=final, history=history)


def save_checkpoint(path: str | Path, den: LearnedDenoiser) -> None:
    path = Path(path)
    (path / "params").mkdir(parents=True, exist_ok=True)
    lines = []
    for i, (name, tensor) in enumerate(sorted(den.net.state_dict().items())):
        arr = tensor.numpy().astype(np.float32)
        fname = f"params/{i:04d}.ulsa"
        ulsa_io.save_array(path / fname, arr)
        shape = "x".join(str(d) for d in arr.shape) if arr.ndim else "scalar"
        lines.append(f"{name} {shape} float32 {fname}")
    (path / "manifest.txt").write_text("\n".join(lines) + "\n")
    (path / "config.json").write_text(json.dumps(den.config, sort_keys=True, indent=1) + "\n")


def load_checkpoint(path: str | Path, s: DiffusionSchedule) -> LearnedDenoiser:
    path = Path(path)
    config = json.loads((path / "config.json").read_text())
    if int(config["tau_max"]) != s.tau_max:
        raise ValueError(
            f"checkpoint was trained for tau_max={config['tau_max']}, got schedule {s.tau_max}"
        )
    net = NoiseNet(window=int(config["window"]), base=int(config["base_channels"]))
    state = {}
    for line in (path / "manifest.txt").read_text().splitlines():
        name, _shape, _dtype, fname = line.split()
        state[name] = torch.from_numpy(ulsa_io.load_array(path / fname))
    net.load_state_dict(state)
    stack_shape = (int(config["window"]),) + tuple(int(v) for v in config["frame_shape"])
    return LearnedDenoiser(net, s, stack_shape, config)
