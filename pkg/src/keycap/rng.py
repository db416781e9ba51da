"""Counter-based random streams.

Every draw is addressed by ``(master_seed, stream_label, index)`` rather than
by the position of a sequential generator, so Monte Carlo work can be split
across workers in any order and still reproduce bit for bit.

The bit source is Philox4x64 (numpy).  Indices are grouped into fixed blocks
of :data:`BLOCK` consecutive indices; a block is one Philox stream whose
counter encodes ``(substream, block)``.  Block size is a constant of the
format, never a tuning knob: changing it changes every sample.

Gaussian variates use the polar form of Box-Muller applied to pairs of
53-bit uniforms in (0, 1]:  ``sqrt(-ln u1) * exp(2j*pi*u2)`` is a
circular-symmetric complex normal with unit total variance.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError

BLOCK = 256
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_label: str = "channel"

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ConfigError("master_seed must fit in 64 unsigned bits")
        if not self.stream_label:
            raise ConfigError("stream_label must be non-empty")

    def with_label(self, label: str) -> "SeedSpec":
        return SeedSpec(self.master_seed, label)

    def to_dict(self) -> dict:
        return {"master_seed": int(self.master_seed), "stream_label": self.stream_label}

    @classmethod
    def from_dict(cls, d: dict) -> "SeedSpec":
        return cls(int(d["master_seed"]), str(d.get("stream_label", "channel")))


@lru_cache(maxsize=256)
def _philox_key(master_seed: int, label: str) -> tuple[int, int]:
    tag = zlib.crc32(label.encode("utf-8"))
    state = np.random.SeedSequence(int(master_seed), spawn_key=(tag,)).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def _bit_generator(seed: SeedSpec, substream: int, block: int) -> np.random.Philox:
    key = np.array(_philox_key(int(seed.master_seed), seed.stream_label), dtype=np.uint64)
    counter = np.array([0, substream, block, 0], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


def raw_block(seed: SeedSpec, substream: int, block: int, words_per_index: int) -> np.ndarray:
    """uint64 words for every index of one block, shape ``(BLOCK, words_per_index)``."""
    bg = _bit_generator(seed, substream, block)
    return bg.random_raw(BLOCK * words_per_index).reshape(BLOCK, words_per_index)


def uniforms(words: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in (0, 1]."""
    return ((words >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)


def complex_normals(words: np.ndarray) -> np.ndarray:
    """Pairs of words along the last axis to unit-variance circular complex normals."""
    u = uniforms(words)
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    return np.sqrt(-np.log(u1)) * np.exp(2j * np.pi * u2)


def indexed_words(seed: SeedSpec, substream: int, indices, words_per_index: int) -> np.ndarray:
    """Words for arbitrary indices, shape ``(len(indices), words_per_index)``."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    out = np.empty((idx.size, words_per_index), dtype=np.uint64)
    if idx.size == 0:
        return out
    if np.any(idx < 0):
        raise ValueError("indices must be nonnegative")
    blocks = idx // BLOCK
    for b in np.unique(blocks):
        sel = blocks == b
        words = raw_block(seed, substream, int(b), words_per_index)
        out[sel] = words[idx[sel] % BLOCK]
    return out


def generator(seed: SeedSpec, index: int = 0) -> np.random.Generator:
    """A sequential numpy Generator for work keyed by a single index.

    Used where one unit of work (a codebook, a protocol replicate) consumes
    an unbounded stream; the unit itself is still addressed by index.
    """
    return np.random.Generator(_bit_generator(seed, 0x5EED, int(index)))
