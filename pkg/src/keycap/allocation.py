"""Key rate as a function of the transmit covariance eigenvalues.

``f(lambda)`` is the expected log determinant of the destination's
conditional output covariance when ``K_X = diag(lambda)``.  The checks here
compare allocations on shared channel draws (common random numbers), so
differences carry far less noise than the estimates themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg, rng
from .capacity import CapacityEstimate, estimate_from_nats
from .channel import ChannelConfig, sample_batch
from .errors import ConfigError
from .mc import LN2, map_indices, mean_stderr
from .rng import SeedSpec


@dataclass(frozen=True)
class PowerAllocation:
    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        if not lam:
            raise ValueError("allocation needs at least one eigenvalue")
        if any(not math.isfinite(x) or x < 0 for x in lam):
            raise ValueError("eigenvalues must be finite and nonnegative")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def uniform(cls, m_S: int, P: float) -> "PowerAllocation":
        return cls((P / m_S,) * m_S)

    @property
    def total(self) -> float:
        return math.fsum(self.lambdas)

    def feasible(self, P: float, rtol: float = 1e-12) -> bool:
        return self.total <= P * (1 + rtol)

    def midpoint(self, other: "PowerAllocation") -> "PowerAllocation":
        return PowerAllocation(tuple(0.5 * (x + y) for x, y in zip(self.lambdas, other.lambdas)))


def f_batch(cfg: ChannelConfig, lambdas, h_d: np.ndarray, h_w: np.ndarray) -> np.ndarray:
    """Per-draw ``f`` integrand (nats) for a diagonal input covariance."""
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.shape != (cfg.m_S,):
        raise ValueError(f"need {cfg.m_S} eigenvalues, got {lam.shape}")
    batch = h_d.shape[:-2]
    root = np.sqrt(lam)
    hd = h_d * root  # H_D K_X^{1/2}
    hw = h_w * root
    inner = np.eye(cfg.m_S) + (cfg.alpha2 / cfg.sigma2_W) * (linalg.ct(hw) @ hw)
    core = hd @ np.linalg.solve(inner, linalg.ct(hd))
    mat = np.broadcast_to(np.eye(cfg.m_D, dtype=np.complex128), batch + (cfg.m_D, cfg.m_D))
    mat = linalg.hermitize(mat + core / cfg.sigma2_D)
    return np.maximum(np.asarray(linalg.hermitian_logdet(mat, check=False)), 0.0)


def eval_f(cfg: ChannelConfig, alloc: PowerAllocation, n_samples: int, seed: SeedSpec,
           workers: int = 1) -> CapacityEstimate:
    def chunk(idx):
        h_d, h_w = sample_batch(cfg, seed, idx)
        return f_batch(cfg, alloc.lambdas, h_d, h_w)

    return estimate_from_nats(map_indices(chunk, n_samples, workers), seed, cfg)


def _paired_values(cfg, allocs, n_samples, seed, workers) -> np.ndarray:
    """Columns of per-draw ``f`` values, one per allocation, on shared draws."""
    def chunk(idx):
        h_d, h_w = sample_batch(cfg, seed, idx)
        return np.stack([f_batch(cfg, a.lambdas, h_d, h_w) for a in allocs], axis=1)

    return map_indices(chunk, n_samples, workers)


def random_simplex_allocations(m_S: int, P: float, trials: int, seed: SeedSpec) -> list:
    """Uniform points of ``{lambda >= 0, sum = P}`` from normalized exponentials."""
    stream = seed.with_label(seed.stream_label + "/simplex")
    words = rng.indexed_words(stream, 0, np.arange(trials), m_S)
    e = -np.log(rng.uniforms(words))
    pts = P * e / e.sum(axis=1, keepdims=True)
    return [PowerAllocation(tuple(row)) for row in pts]


@dataclass(frozen=True)
class OptimalityReport:
    allocations: list
    differences_bits: list
    stderrs_bits: list
    passed: bool

    @property
    def min_difference(self) -> tuple[float, float]:
        k = int(np.argmin(self.differences_bits))
        return self.differences_bits[k], self.stderrs_bits[k]

    @property
    def fraction_positive(self) -> float:
        """Share of trials where uniform wins by more than one standard error."""
        d = np.asarray(self.differences_bits)
        s = np.asarray(self.stderrs_bits)
        return float(np.mean(d > s))

    def to_dict(self) -> dict:
        dmin, smin = self.min_difference
        return {
            "allocations": [list(a.lambdas) for a in self.allocations],
            "differences_bits": list(self.differences_bits),
            "stderrs_bits": list(self.stderrs_bits),
            "min_difference_bits": dmin,
            "min_difference_stderr_bits": smin,
            "fraction_positive": self.fraction_positive,
            "passed": self.passed,
        }


def compare_allocations(cfg, reference: PowerAllocation, others, n_samples, seed,
                        workers: int = 1) -> OptimalityReport:
    """``f(reference) - f(other)`` for each other allocation, on shared draws."""
    others = list(others)
    table = _paired_values(cfg, [reference, *others], n_samples, seed, workers)
    diffs, ses = [], []
    for k in range(len(others)):
        m, s = mean_stderr(table[:, 0] - table[:, k + 1])
        diffs.append(m / LN2)
        ses.append(s / LN2)
    passed = all(d >= -3 * s for d, s in zip(diffs, ses))
    return OptimalityReport(others, diffs, ses, passed)


def check_uniform_optimal(cfg: ChannelConfig, trials: int, n_samples: int, seed: SeedSpec,
                          workers: int = 1) -> OptimalityReport:
    """Uniform power against ``trials`` random allocations with the same total."""
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    others = random_simplex_allocations(cfg.m_S, cfg.P, trials, seed)
    return compare_allocations(cfg, PowerAllocation.uniform(cfg.m_S, cfg.P), others,
                               n_samples, seed, workers)


@dataclass(frozen=True)
class ConcavityReport:
    gap_bits: float
    stderr_bits: float
    per_sample_gaps: np.ndarray
    passed: bool

    def to_dict(self) -> dict:
        return {"gap_bits": self.gap_bits, "stderr_bits": self.stderr_bits, "passed": self.passed}


def concavity_probe(cfg: ChannelConfig, alloc_a: PowerAllocation, alloc_b: PowerAllocation,
                    n_samples: int, seed: SeedSpec, workers: int = 1) -> ConcavityReport:
    """Midpoint concavity ``f((a+b)/2) - (f(a)+f(b))/2`` on shared draws."""
    mid = alloc_a.midpoint(alloc_b)
    table = _paired_values(cfg, [mid, alloc_a, alloc_b], n_samples, seed, workers)
    gaps = table[:, 0] - 0.5 * (table[:, 1] + table[:, 2])
    m, s = mean_stderr(gaps)
    return ConcavityReport(m / LN2, s / LN2, gaps / LN2, m >= -3 * s)
