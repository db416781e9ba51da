"""Quantization codebook with nested binning.

Codewords are numbered ``m = 1 .. N1`` with ``N1 = N2 * N3 * N4`` and

    m = j + (l - 1) N2 + (w - 1) N2 N3,

``j`` the public bin, ``l`` the key and ``w`` the position inside subcode
``C(j, l)``.  Index 0 is reserved for "no codeword".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from ..errors import SizeOverflow
from ..rng import SeedSpec
from .info import RateQuadruple

DEFAULT_CAP = 2 ** 20


@dataclass(frozen=True, eq=False)
class Codebook:
    n: int
    n_bins: int
    n_keys: int
    n_sub: int
    codewords: np.ndarray  # (N1, n); row m - 1 holds codeword m

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=np.int64)
        if cw.shape != (self.size, self.n):
            raise ValueError(f"expected codewords of shape {(self.size, self.n)}, got {cw.shape}")
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)

    @property
    def size(self) -> int:
        return self.n_bins * self.n_keys * self.n_sub

    def index(self, j: int, l: int, w: int) -> int:
        if not (1 <= j <= self.n_bins and 1 <= l <= self.n_keys and 1 <= w <= self.n_sub):
            raise IndexError(f"(j, l, w) = {(j, l, w)} out of range")
        return j + (l - 1) * self.n_bins + (w - 1) * self.n_bins * self.n_keys

    def split(self, m: int) -> tuple[int, int, int]:
        if not 1 <= m <= self.size:
            raise IndexError(f"codeword index {m} out of range")
        r = m - 1
        return r % self.n_bins + 1, (r // self.n_bins) % self.n_keys + 1, r // (self.n_bins * self.n_keys) + 1

    def codeword(self, m: int) -> np.ndarray:
        return self.codewords[m - 1]

    def subcode(self, j: int, l: int) -> np.ndarray:
        """Indices of ``C(j, l)``, ascending."""
        return np.array([self.index(j, l, w) for w in range(1, self.n_sub + 1)], dtype=np.int64)

    def bin(self, j: int) -> np.ndarray:
        """Indices of the union over keys of ``C(j, l)``, ascending."""
        return np.sort(np.concatenate([self.subcode(j, l) for l in range(1, self.n_keys + 1)]))

    def key_class(self, l: int) -> np.ndarray:
        return np.sort(np.concatenate([self.subcode(j, l) for j in range(1, self.n_bins + 1)]))

    @classmethod
    def from_codewords(cls, codewords, n_bins: int, n_keys: int, n_sub: int) -> "Codebook":
        cw = np.atleast_2d(np.asarray(codewords, dtype=np.int64))
        return cls(cw.shape[1], n_bins, n_keys, n_sub, cw)

    def to_dict(self) -> dict:
        return {"n": self.n, "n_bins": self.n_bins, "n_keys": self.n_keys,
                "n_sub": self.n_sub, "size": self.size}


def generate_codebook(rates: RateQuadruple, p_yhat, n: int, seed: SeedSpec,
                      cap: int = DEFAULT_CAP) -> Codebook:
    """Random codebook with i.i.d. ``p(yhat)`` symbols, sized by ``rates``."""
    if n < 1:
        raise ValueError("blocklength must be positive")
    n_bins, n_keys, n_sub = rates.sizes(n)
    total = n_bins * n_keys * n_sub
    if total > cap:
        raise SizeOverflow(f"codebook of {total} codewords exceeds cap {cap}")
    p = np.asarray(p_yhat, dtype=np.float64)
    cdf = np.cumsum(p / p.sum())
    gen = rng.generator(seed.with_label(seed.stream_label + "/codebook"))
    u = gen.random((total, n))
    symbols = np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1)
    return Codebook(n, n_bins, n_keys, n_sub, symbols)
