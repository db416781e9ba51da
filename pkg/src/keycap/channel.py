"""Fast-fading MIMO wiretap channel: scenario parameters and channel draws.

``H_D`` (destination, ``m_D x m_S``) and ``H_W`` (eavesdropper, ``m_W x m_S``)
have i.i.d. unit-variance circular-symmetric complex Gaussian entries.
Draw ``i`` of a seed is a pure function of ``(seed, i, dims)``; ``H_D``
and ``H_W`` come from separate substreams, so ``H_D`` does not depend on
``m_W`` and two configurations sharing ``(m_S, m_D)`` see the same
destination channel.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import rng
from .errors import ConfigError, DimensionMismatch
from .rng import SeedSpec

_SUB_DEST = 0
_SUB_EAVE = 1


def db_to_linear(db: float) -> float:
    return 0.0 if db == -math.inf else 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return -math.inf if x == 0 else 10.0 * math.log10(x)


@dataclass(frozen=True)
class ChannelConfig:
    """Static scenario parameters; all power quantities are linear.

    ``alpha2`` is the eavesdropper's gain advantage.  ``alpha2 = 0`` is
    accepted as a degenerate configuration (no eavesdropper signal), as is
    ``m_W = 0``; both reduce the key capacity to the ergodic MIMO capacity.
    """

    m_S: int = 1
    m_D: int = 1
    m_W: int = 1
    P: float = 1.0
    sigma2_D: float = 1.0
    sigma2_W: float = 1.0
    alpha2: float = 1.0

    def __post_init__(self):
        for name in ("m_S", "m_D", "m_W"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ConfigError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.m_S < 1 or self.m_D < 1 or self.m_W < 0:
            raise ConfigError("need m_S >= 1, m_D >= 1, m_W >= 0")
        for name in ("P", "sigma2_D", "sigma2_W", "alpha2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.P < 0 or self.alpha2 < 0:
            raise ConfigError("P and alpha2 must be nonnegative")
        if self.sigma2_D <= 0 or self.sigma2_W <= 0:
            raise ConfigError("noise variances must be positive")

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.m_S, self.m_D, self.m_W)

    @property
    def snr_db(self) -> float:
        """Source SNR ``P / sigma2_D`` in dB."""
        return linear_to_db(self.P / self.sigma2_D)

    @property
    def a(self) -> float:
        """Eavesdropper Gram weight ``alpha2 P / (m_S sigma2_W)``."""
        return self.alpha2 * self.P / (self.m_S * self.sigma2_W)

    @property
    def b(self) -> float:
        """Destination Gram weight ``P / (m_S sigma2_D)``."""
        return self.P / (self.m_S * self.sigma2_D)

    def with_snr_db(self, db: float) -> "ChannelConfig":
        return replace(self, P=self.sigma2_D * db_to_linear(db))

    def with_alpha2_db(self, db: float) -> "ChannelConfig":
        return replace(self, alpha2=db_to_linear(db))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelConfig":
        d = dict(d)
        if "snr_db" in d:
            snr = float(d.pop("snr_db"))
            d["P"] = float(d.get("sigma2_D", 1.0)) * db_to_linear(snr)
        if "alpha2_db" in d:
            d["alpha2"] = db_to_linear(float(d.pop("alpha2_db")))
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown channel fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class ChannelSample:
    H_D: np.ndarray
    H_W: np.ndarray
    sample_index: int = -1

    def check(self, cfg: ChannelConfig) -> None:
        if self.H_D.shape[-2:] != (cfg.m_D, cfg.m_S) or self.H_W.shape[-2:] != (cfg.m_W, cfg.m_S):
            raise DimensionMismatch(
                f"sample dims H_D{self.H_D.shape[-2:]}, H_W{self.H_W.shape[-2:]} "
                f"do not match config {cfg.dims}"
            )


def forced_sample(H_D, H_W, sample_index: int = -1) -> ChannelSample:
    """A non-random sample, for tests that need specific matrices."""
    return ChannelSample(
        np.atleast_2d(np.asarray(H_D, dtype=np.complex128)),
        np.asarray(H_W, dtype=np.complex128).reshape(-1, np.shape(H_D)[-1]),
        sample_index,
    )


def _matrices(seed: SeedSpec, sub: int, indices, rows: int, cols: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if rows == 0:
        return np.zeros((idx.size, 0, cols), dtype=np.complex128)
    words = rng.indexed_words(seed, sub, idx, 2 * rows * cols)
    return rng.complex_normals(words).reshape(idx.size, rows, cols)


def sample_batch(cfg: ChannelConfig, seed: SeedSpec, indices) -> tuple[np.ndarray, np.ndarray]:
    """Stacks ``(H_D, H_W)`` for the given sample indices."""
    h_d = _matrices(seed, _SUB_DEST, indices, cfg.m_D, cfg.m_S)
    h_w = _matrices(seed, _SUB_EAVE, indices, cfg.m_W, cfg.m_S)
    return h_d, h_w


def sample_channel(cfg: ChannelConfig, seed: SeedSpec, index: int) -> ChannelSample:
    if index < 0:
        raise ValueError("sample index must be nonnegative")
    h_d, h_w = sample_batch(cfg, seed, [index])
    return ChannelSample(h_d[0], h_w[0], int(index))
