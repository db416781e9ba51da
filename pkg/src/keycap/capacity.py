"""Key capacity of the fast-fading MIMO wiretap channel by Monte Carlo.

The per-draw key rate is

    ln det(I + a H_W^H H_W + b H_D^H H_D) - ln det(I + a H_W^H H_W),

``a = alpha2 P / (m_S sigma2_W)``, ``b = P / (m_S sigma2_D)``.  A second,
algebraically independent route evaluates the same quantity as the log
determinant of the LMMSE error covariance of the destination output given
the eavesdropper output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .channel import ChannelConfig, ChannelSample, sample_batch
from .errors import ConfigError
from .mc import LN2, map_indices, mean_stderr
from .rng import SeedSpec

DEFAULT_SWEEP_SAMPLES = 20_000
AXES = ("snr_db", "alpha2_db")


def _eye(n: int, batch: tuple = ()) -> np.ndarray:
    return np.broadcast_to(np.eye(n, dtype=np.complex128), batch + (n, n))


def key_rate_batch(cfg: ChannelConfig, h_d: np.ndarray, h_w: np.ndarray) -> np.ndarray:
    """Per-draw key rates (nats) for stacks of channel matrices."""
    batch = h_d.shape[:-2]
    if cfg.P == 0:
        return np.zeros(batch)
    gram_w = linalg.ct(h_w) @ h_w
    gram_d = linalg.ct(h_d) @ h_d
    base = _eye(cfg.m_S, batch) + cfg.a * gram_w
    num = linalg.hermitian_logdet(linalg.hermitize(base + cfg.b * gram_d), check=False)
    den = linalg.hermitian_logdet(linalg.hermitize(base), check=False)
    return np.maximum(np.asarray(num - den, dtype=np.float64), 0.0)


def key_rate_schur_batch(cfg: ChannelConfig, h_d: np.ndarray, h_w: np.ndarray) -> np.ndarray:
    """Per-draw key rates (nats) through the conditional output covariance."""
    batch = h_d.shape[:-2]
    if cfg.P == 0:
        return np.zeros(batch)
    a_d = np.sqrt(cfg.P / cfg.m_S) * h_d
    a_w = np.sqrt(cfg.alpha2 * cfg.P / cfg.m_S) * h_w
    k_d = a_d @ linalg.ct(a_d) + cfg.sigma2_D * _eye(cfg.m_D, batch)
    if cfg.m_W == 0:
        cond = linalg.hermitize(k_d)
    else:
        k_w = a_w @ linalg.ct(a_w) + cfg.sigma2_W * _eye(cfg.m_W, batch)
        cond = linalg.schur_complement(linalg.CovarianceBlocks(k_d, k_w, a_d @ linalg.ct(a_w)))
    val = linalg.hermitian_logdet(cond, check=False) - cfg.m_D * np.log(cfg.sigma2_D)
    return np.maximum(np.asarray(val, dtype=np.float64), 0.0)


def per_sample_key_rate(cfg: ChannelConfig, s: ChannelSample) -> float:
    s.check(cfg)
    return float(key_rate_batch(cfg, s.H_D[None], s.H_W[None])[0])


def per_sample_key_rate_schur(cfg: ChannelConfig, s: ChannelSample) -> float:
    s.check(cfg)
    return float(key_rate_schur_batch(cfg, s.H_D[None], s.H_W[None])[0])


@dataclass(frozen=True)
class CapacityEstimate:
    mean_bits: float
    stderr_bits: float
    n_samples: int
    seed: SeedSpec
    config_echo: ChannelConfig | None = None

    def __post_init__(self):
        if self.stderr_bits < 0:
            raise ValueError("stderr must be nonnegative")

    @property
    def mean_nats(self) -> float:
        return self.mean_bits * LN2

    @property
    def stderr_nats(self) -> float:
        return self.stderr_bits * LN2

    def to_dict(self) -> dict:
        return {
            "mean_bits": self.mean_bits,
            "stderr_bits": self.stderr_bits,
            "n_samples": self.n_samples,
            "seed": self.seed.to_dict(),
            "config": None if self.config_echo is None else self.config_echo.to_dict(),
        }


def estimate_from_nats(values, seed: SeedSpec, cfg: ChannelConfig | None = None) -> CapacityEstimate:
    mean, se = mean_stderr(values)
    return CapacityEstimate(mean / LN2, se / LN2, int(np.size(values)), seed, cfg)


def sample_values(cfg: ChannelConfig, n_samples: int, seed: SeedSpec, integrand,
                  workers: int = 1) -> np.ndarray:
    """Per-draw values of ``integrand(cfg, H_D, H_W)`` for draws ``0..n-1``."""
    def chunk(idx):
        h_d, h_w = sample_batch(cfg, seed, idx)
        return integrand(cfg, h_d, h_w)

    return map_indices(chunk, n_samples, workers)


def estimate_capacity(cfg: ChannelConfig, n_samples: int, seed: SeedSpec,
                      workers: int = 1) -> CapacityEstimate:
    """Monte Carlo key capacity in bits per channel use."""
    if n_samples < 2:
        raise ConfigError("n_samples must be at least 2")
    vals = sample_values(cfg, n_samples, seed, key_rate_batch, workers)
    return estimate_from_nats(vals, seed, cfg)


@dataclass(frozen=True)
class SweepSeries:
    axis_name: str
    axis_values: list
    estimates: list = field(default_factory=list)

    def __post_init__(self):
        if self.axis_name not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if len(self.axis_values) != len(self.estimates):
            raise ValueError("axis values and estimates differ in length")
        if any(b <= a for a, b in zip(self.axis_values, self.axis_values[1:])):
            raise ValueError("axis values must be strictly increasing")

    @property
    def means(self) -> np.ndarray:
        return np.array([e.mean_bits for e in self.estimates])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr_bits for e in self.estimates])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis_value", "mean_bits", "stderr_bits", "n_samples"])
        for x, e in zip(self.axis_values, self.estimates):
            w.writerow([repr(float(x)), repr(e.mean_bits), repr(e.stderr_bits), e.n_samples])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "axis_name": self.axis_name,
            "axis_values": [float(x) for x in self.axis_values],
            "points": [e.to_dict() for e in self.estimates],
        }


def apply_axis(cfg: ChannelConfig, axis: str, value: float) -> ChannelConfig:
    if axis == "snr_db":
        return cfg.with_snr_db(value)
    if axis == "alpha2_db":
        return cfg.with_alpha2_db(value)
    raise ConfigError(f"unknown axis {axis!r}")


def sweep(cfg_template: ChannelConfig, axis: str, values, n_samples: int = DEFAULT_SWEEP_SAMPLES,
          seed: SeedSpec = SeedSpec(0), workers: int = 1) -> SweepSeries:
    """One estimate per axis value, all on the same channel draws.

    ``snr_db`` sets ``P = sigma2_D * 10**(v/10)`` (``-inf`` gives ``P = 0``);
    ``alpha2_db`` sets the eavesdropper gain.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one axis value")
    if axis not in AXES:
        raise ConfigError(f"axis must be one of {AXES}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("axis values must be strictly increasing")
    cfgs = [apply_axis(cfg_template, axis, v) for v in values]

    def chunk(idx):
        h_d, h_w = sample_batch(cfg_template, seed, idx)
        return np.stack([key_rate_batch(c, h_d, h_w) for c in cfgs], axis=1)

    table = map_indices(chunk, n_samples, workers)
    ests = [estimate_from_nats(table[:, k], seed, c) for k, c in enumerate(cfgs)]
    return SweepSeries(axis, values, ests)
