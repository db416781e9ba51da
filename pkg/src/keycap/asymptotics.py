"""Limiting key capacity: high source power, many antennas, strong eavesdropper.

Which high-power regime applies depends only on whether the eavesdropper
has at least as many antennas as the source:

* ``m_W >= m_S`` -- the capacity saturates at :func:`high_power_limit`.
* ``m_W < m_S``  -- it tracks :func:`c_infinity`, the ergodic capacity of
  the destination channel restricted to the directions the eavesdropper
  cannot see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .capacity import CapacityEstimate, estimate_from_nats, sample_values
from .channel import ChannelConfig, ChannelSample
from .errors import ConfigError, DimensionMismatch, RankDeficient
from .rng import SeedSpec


def regime(cfg: ChannelConfig) -> str:
    return "saturating" if cfg.m_W >= cfg.m_S else "unbounded"


def high_power_batch(cfg: ChannelConfig, h_d, h_w) -> np.ndarray:
    ratio = cfg.sigma2_W / (cfg.alpha2 * cfg.sigma2_D)
    gram_w = linalg.hermitize(linalg.ct(h_w) @ h_w)
    gram_d = linalg.ct(h_d) @ h_d
    num = linalg.hermitian_logdet(linalg.hermitize(gram_w + ratio * gram_d), check=False)
    den = linalg.hermitian_logdet(gram_w, check=False)
    return np.maximum(np.asarray(num - den), 0.0)


def high_power_limit(cfg: ChannelConfig, n_samples: int, seed: SeedSpec,
                     workers: int = 1) -> CapacityEstimate:
    """Saturation value of the key capacity as ``P -> inf`` when ``m_W >= m_S``."""
    if cfg.m_W < cfg.m_S:
        raise DimensionMismatch(f"high-power limit needs m_W >= m_S, got {cfg.dims}")
    if cfg.alpha2 <= 0:
        raise ConfigError("high-power limit needs alpha2 > 0")
    vals = sample_values(cfg, n_samples, seed, high_power_batch, workers)
    return estimate_from_nats(vals, seed, cfg)


def c_infinity_batch(cfg: ChannelConfig, h_d, h_w) -> np.ndarray:
    batch = h_d.shape[:-2]
    if cfg.P == 0:
        return np.zeros(batch)
    proj = linalg.projection_complement(h_w)
    mat = np.eye(cfg.m_D) + cfg.b * (h_d @ proj @ linalg.ct(h_d))
    return np.maximum(np.asarray(linalg.hermitian_logdet(linalg.hermitize(mat), check=False)), 0.0)


def c_infinity(cfg: ChannelConfig, n_samples: int, seed: SeedSpec,
               workers: int = 1) -> CapacityEstimate:
    """Ergodic capacity through the null space of ``H_W`` (requires ``m_W < m_S``)."""
    if cfg.m_W >= cfg.m_S:
        raise DimensionMismatch(f"C_inf needs m_W < m_S, got {cfg.dims}")
    vals = sample_values(cfg, n_samples, seed, c_infinity_batch, workers)
    return estimate_from_nats(vals, seed, cfg)


@dataclass(frozen=True)
class AsymptoticsQuery:
    cfg: ChannelConfig
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError("beta must be positive")


def large_antenna_limit(q: AsymptoticsQuery) -> float:
    """Key capacity (bits) as ``m_D, m_W -> inf`` with ``m_W / m_D -> beta``.

    ``beta = inf`` gives 0.
    """
    cfg = q.cfg
    if not cfg.alpha2 > 0:
        raise ConfigError("large-antenna limit needs alpha2 > 0")
    if math.isinf(q.beta):
        return 0.0
    return cfg.m_S * math.log2(1.0 + cfg.sigma2_W / (q.beta * cfg.alpha2 * cfg.sigma2_D))


def alpha_limit(cfg: ChannelConfig, n_samples: int, seed: SeedSpec,
                workers: int = 1) -> CapacityEstimate:
    """Key capacity as the eavesdropper gain grows without bound."""
    if cfg.m_W >= cfg.m_S:
        return CapacityEstimate(0.0, 0.0, n_samples, seed, cfg)
    return c_infinity(cfg, n_samples, seed, workers)


@dataclass(frozen=True)
class AsymptoticDecomposition:
    """SVD view of one draw with ``m_W < m_S``.

    ``V_tilde`` spans the row space of ``H_W`` and ``V_hat`` its orthogonal
    complement; ``mu`` are the positive eigenvalues of
    ``H_D V_hat V_hat^H H_D^H``.
    """

    cfg: ChannelConfig
    H_D: np.ndarray
    singular_values: np.ndarray
    V_tilde: np.ndarray
    V_hat: np.ndarray
    mu: np.ndarray
    t_limit: float

    @property
    def _gain_ratio(self) -> float:
        c = self.cfg
        return c.sigma2_W / (c.alpha2 * c.sigma2_D)

    def leak_weights(self, P: float) -> np.ndarray:
        """Diagonal of the residual weight on the eavesdropper-visible directions."""
        c = self.cfg
        kappa = c.m_S * c.sigma2_W / (c.alpha2 * P)
        return self._gain_ratio / (kappa + self.singular_values ** 2)

    def _hidden(self) -> np.ndarray:
        g = self.H_D @ self.V_hat
        return g @ linalg.ct(g)

    def _visible(self, P: float) -> np.ndarray:
        g = self.H_D @ self.V_tilde
        return (g * self.leak_weights(P)) @ linalg.ct(g)

    def f_hat(self, P: float) -> float:
        c = self.cfg
        mat = np.eye(c.m_D) + (P / (c.m_S * c.sigma2_D)) * self._hidden() + self._visible(P)
        return linalg.hermitian_logdet(linalg.hermitize(mat), check=False)

    def f_hat_inf(self, P: float) -> float:
        c = self.cfg
        mat = np.eye(c.m_D) + (P / (c.m_S * c.sigma2_D)) * self._hidden()
        return linalg.hermitian_logdet(linalg.hermitize(mat), check=False)

    def t(self, P: float) -> float:
        return float(np.real(np.trace(self._visible(P))))

    def gap_bound(self, P: float) -> float:
        """Upper bound on ``f_hat(P) - f_hat_inf(P)`` (nats)."""
        c = self.cfg
        t = self.t(P)
        r = c.m_S * c.sigma2_D / (P * self.mu)
        return c.m_D * math.log1p(t) + float(np.sum(np.log((1.0 / (1.0 + t) + r) / (1.0 + r))))


def decompose(sample: ChannelSample, cfg: ChannelConfig) -> AsymptoticDecomposition:
    sample.check(cfg)
    if not 0 < cfg.m_W < cfg.m_S:
        raise DimensionMismatch(f"decomposition needs 0 < m_W < m_S, got {cfg.dims}")
    if cfg.alpha2 <= 0:
        raise ConfigError("decomposition needs alpha2 > 0")
    h_w = sample.H_W
    if linalg.numerical_rank(h_w) < cfg.m_W:
        raise RankDeficient("H_W does not have full row rank")
    _, s, v = linalg.svd(h_w)
    v_tilde, v_hat = v[:, : cfg.m_W], v[:, cfg.m_W :]
    g = sample.H_D @ v_hat
    ev = np.linalg.eigvalsh(linalg.hermitize(g @ linalg.ct(g)))[::-1]
    tol = max(float(ev[0]), 0.0) * max(g.shape) * 1e-12 if ev.size else 0.0
    mu = ev[ev > tol]
    ratio = cfg.sigma2_W / (cfg.alpha2 * cfg.sigma2_D)
    gd = sample.H_D @ v_tilde / s
    t_lim = ratio * float(np.sum(np.abs(gd) ** 2))
    return AsymptoticDecomposition(cfg, sample.H_D, s, v_tilde, v_hat, mu, t_lim)
