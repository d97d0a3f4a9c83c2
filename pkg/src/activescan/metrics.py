"""Reconstruction quality metrics and episode summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PSNR_CAP_DB = 100.0


@dataclass(frozen=True)
class RegionPair:
    """Two disjoint pixel index sets to contrast (e.g. ventricle vs wall)."""

    region_a: np.ndarray
    region_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.region_a).ravel()
        b = np.asarray(self.region_b).ravel()
        object.__setattr__(self, "region_a", a)
        object.__setattr__(self, "region_b", b)
        if a.size == 0 or b.size == 0:
            raise ValueError("regions must be nonempty")
        if np.intersect1d(a, b).size:
            raise ValueError("regions must be disjoint")


def psnr(x: np.ndarray, ref: np.ndarray, peak: float = 2.0) -> float:
    """10 log10(peak^2 / MSE); capped at 100 dB when MSE is zero."""
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak**2 / mse), PSNR_CAP_DB)


def gcnr(values_a: np.ndarray, values_b: np.ndarray, bins: int = 64) -> float:
    """Generalized contrast-to-noise ratio: 1 - histogram overlap.

    Histograms share one range spanning the pooled values; each is
    normalized to sum to 1, so the result lies in [0, 1].
    """
    a = np.asarray(values_a, dtype=np.float64).ravel()
    b = np.asarray(values_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both regions must be nonempty")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if lo == hi:
        return 0.0  # identical constant regions: full overlap
    ha, _ = np.histogram(a, bins=bins, range=(lo, hi))
    hb, _ = np.histogram(b, bins=bins, range=(lo, hi))
    overlap = np.minimum(ha / a.size, hb / b.size).sum()
    return float(1.0 - overlap)


def region_values(frame: np.ndarray, labels: np.ndarray, label: int) -> np.ndarray:
    """Pixels of ``frame`` carrying the given label."""
    return np.asarray(frame)[np.asarray(labels) == label]


def episode_report(logs) -> list[dict]:
    """Aggregate EpisodeLogs per (policy, K): metric means/stds and mean
    per-stage wall times. Accepts a single log or an iterable of them."""
    from .agent import EpisodeLog  # cycle guard: agent imports metrics

    if isinstance(logs, EpisodeLog):
        logs = [logs]
    logs = list(logs)
    if not logs:
        raise ValueError("need at least one episode log")
    groups: dict[tuple[str, int], list] = {}
    for log in logs:
        groups.setdefault((log.policy, log.k), []).extend(log.records)
    rows = []
    for (pol, k), recs in sorted(groups.items()):
        psnrs = np.array([r.psnr_db for r in recs], dtype=np.float64)
        gcnrs = np.array([r.gcnr for r in recs if r.gcnr is not None], dtype=np.float64)
        rels = np.array(
            [r.gcnr / r.gcnr_ref for r in recs if r.gcnr is not None and r.gcnr_ref],
            dtype=np.float64,
        )
        rows.append({
            "policy": pol,
            "K": k,
            "psnr_mean": float(psnrs.mean()),
            "psnr_std": float(psnrs.std()),
            "gcnr_mean": float(gcnrs.mean()) if gcnrs.size else float("nan"),
            "gcnr_std": float(gcnrs.std()) if gcnrs.size else float("nan"),
            "gcnr_rel_mean": float(rels.mean()) if rels.size else float("nan"),
            "perception_ms_mean": float(np.mean([r.perception_ms for r in recs])),
            "action_ms_mean": float(np.mean([r.action_ms for r in recs])),
        })
    return rows


SUMMARY_HEADER = ["policy", "K", "psnr_mean", "psnr_std", "gcnr_mean", "gcnr_std",
                  "gcnr_rel_mean", "perception_ms_mean", "action_ms_mean"]


def write_summary_csv(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in SUMMARY_HEADER})


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)
