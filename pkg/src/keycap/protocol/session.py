"""One run of the single-backward-message key agreement scheme.

The destination quantizes ``Y^n`` to the first codeword ``m`` whose
conditional typicality probability clears ``1 - eps``, keeps the key index
``L`` and announces the bin ``J``.  The source recovers the codeword from
``X^n`` within bin ``J`` and reads off its key ``K``.  A fictitious
receiver holding ``(Z^n, J, L)`` decodes inside ``C(J, L)``; its success
is what bounds the eavesdropper's residual information.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng
from ..rng import SeedSpec
from . import typicality
from .codebook import Codebook
from .info import DMWiretapChannel, QuantizerChannel, joint_x_y_yhat_z


@dataclass(frozen=True, eq=False)
class ProtocolSetup:
    dmc: DMWiretapChannel
    quantizer: QuantizerChannel
    epsilon: float

    def __post_init__(self):
        if not 0 < self.epsilon:
            raise ValueError("epsilon must be positive")
        p4 = joint_x_y_yhat_z(self.dmc, self.quantizer)
        object.__setattr__(self, "joint", p4)
        py = self.dmc.joint_xyz().sum(axis=(0, 2))
        pxz = self.dmc.joint_xyz()  # [x, y, z]
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(py[None, :, None] > 0, pxz / py[None, :, None], 0.0)
        # p(x, z | y) indexed [y, x, z]
        object.__setattr__(self, "p_xz_given_y", np.transpose(cond, (1, 0, 2)))

    @property
    def p_x_yhat(self) -> np.ndarray:
        return self.joint.sum(axis=(1, 3))

    @property
    def p_yhat_z(self) -> np.ndarray:
        return self.joint.sum(axis=(0, 1))

    @property
    def p_yhat(self) -> np.ndarray:
        return self.joint.sum(axis=(0, 1, 3))


def s_probability(y_seq, yhat_seq, setup: ProtocolSetup, mode: str = "exact",
                  replicates: int = 2000, gen: np.random.Generator | None = None) -> float:
    if mode == "exact":
        return typicality.typical_probability(y_seq, yhat_seq, setup.p_xz_given_y,
                                              setup.joint, setup.epsilon)
    if mode == "mc":
        gen = gen if gen is not None else np.random.default_rng(0)
        return typicality.typical_probability_mc(y_seq, yhat_seq, setup.p_xz_given_y,
                                                 setup.joint, setup.epsilon, replicates, gen)
    raise ValueError(f"unknown mode {mode!r}")


def s_indicator(y_seq, yhat_seq, setup: ProtocolSetup, mode: str = "exact", **kw) -> bool:
    return s_probability(y_seq, yhat_seq, setup, mode, **kw) >= 1.0 - setup.epsilon - 1e-12


@dataclass(frozen=True)
class SessionOutcome:
    M: int
    J: int
    L: int
    K: int
    M_hat: int
    M_tilde: int
    z_sequence: tuple

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("M", "J", "L", "K", "M_hat", "M_tilde")}
        d["z_sequence"] = list(self.z_sequence)
        return d


@dataclass(eq=False)
class ProtocolEngine:
    """Deterministic protocol maps for a fixed codebook, memoized per input."""

    codebook: Codebook
    setup: ProtocolSetup
    _quant: dict = field(default_factory=dict, repr=False)
    _source: dict = field(default_factory=dict, repr=False)
    _fict: dict = field(default_factory=dict, repr=False)
    _s_by_type: dict = field(default_factory=dict, repr=False)

    def _s_for_pair_type(self, counts: tuple, y, yhat) -> bool:
        # S depends on (y, yhat) only through their joint type
        hit = self._s_by_type.get(counts)
        if hit is None:
            hit = s_indicator(y, yhat, self.setup)
            self._s_by_type[counts] = hit
        return hit

    def quantize(self, y) -> int:
        """Smallest ``m`` with ``S(y, yhat(m)) = 1``, or 0."""
        key = tuple(int(v) for v in y)
        hit = self._quant.get(key)
        if hit is None:
            hit = 0
            cw = self.codebook.codewords
            n_yh = self.setup.joint.shape[2]
            pairs = np.asarray(key, dtype=np.int64)[None, :] * n_yh + cw
            n_cells = self.setup.joint.shape[1] * n_yh
            counts = np.apply_along_axis(np.bincount, 1, pairs, minlength=n_cells)
            for m in range(1, self.codebook.size + 1):
                if self._s_for_pair_type(tuple(counts[m - 1]), key, cw[m - 1]):
                    hit = m
                    break
            self._quant[key] = hit
        return hit

    def _unique_typical(self, seq, candidates, pmf, seq_first: bool) -> int:
        """The only candidate jointly typical with ``seq``, else 0."""
        cands = np.asarray(candidates, dtype=np.int64)
        cw = self.codebook.codewords[cands - 1]
        seq = np.asarray(seq, dtype=np.int64)[None, :]
        a, b = (seq, cw) if seq_first else (cw, seq)
        flat = np.broadcast_to(a * pmf.shape[1] + b, cw.shape)
        counts = np.apply_along_axis(np.bincount, 1, flat, minlength=pmf.size)
        lo, hi = typicality.count_bounds(pmf, cw.shape[1], self.setup.epsilon)
        ok = np.all((counts >= lo.ravel()) & (counts <= hi.ravel()), axis=1)
        return int(cands[ok][0]) if ok.sum() == 1 else 0

    def source_decode(self, x, j: int) -> int:
        if j == 0:
            return 0
        key = (tuple(int(v) for v in x), j)
        hit = self._source.get(key)
        if hit is None:
            hit = self._unique_typical(key[0], self.codebook.bin(j), self.setup.p_x_yhat, True)
            self._source[key] = hit
        return hit

    def fictitious_decode(self, z, j: int, l: int) -> int:
        if j == 0:
            return 0
        key = (tuple(int(v) for v in z), j, l)
        hit = self._fict.get(key)
        if hit is None:
            hit = self._unique_typical(key[0], self.codebook.subcode(j, l), self.setup.p_yhat_z, False)
            self._fict[key] = hit
        return hit

    def destination_indices(self, y) -> tuple[int, int, int]:
        """``(M, J, L)``; ``L = 0`` marks the failure branch where the key is drawn uniformly."""
        m = self.quantize(y)
        if m == 0:
            return 0, 0, 0
        j, l, _ = self.codebook.split(m)
        return m, j, l

    def source_key(self, x, j: int) -> tuple[int, int]:
        m_hat = self.source_decode(x, j)
        return m_hat, (self.codebook.split(m_hat)[1] if m_hat else 0)

    def run(self, x, y, z, fallback_key: int) -> SessionOutcome:
        """Protocol outcome for given channel sequences.

        ``fallback_key`` in ``1..N3`` is the destination's key when
        quantization fails.
        """
        m, j, l = self.destination_indices(y)
        if m == 0:
            l = int(fallback_key)
        m_hat, k = self.source_key(x, j)
        m_tilde = self.fictitious_decode(z, j, l)
        return SessionOutcome(m, j, l, k, m_hat, m_tilde, tuple(int(v) for v in z))


def draw_sequences(dmc: DMWiretapChannel, n: int, gen: np.random.Generator):
    """``(x, y, z)`` for ``n`` independent channel uses."""
    nx, ny, nz = dmc.sizes
    u = gen.random((3, n))
    x = np.minimum(np.searchsorted(np.cumsum(dmc.p_x), u[0], side="right"), nx - 1)
    cy = np.cumsum(dmc.p_y_given_x[x], axis=1)
    cz = np.cumsum(dmc.p_z_given_x[x], axis=1)
    y = np.minimum((u[1][:, None] >= cy).sum(axis=1), ny - 1)
    z = np.minimum((u[2][:, None] >= cz).sum(axis=1), nz - 1)
    return x, y, z


def run_session(codebook: Codebook, setup: ProtocolSetup, n: int, seed: SeedSpec,
                index: int = 0, engine: ProtocolEngine | None = None) -> SessionOutcome:
    """One session with channel noise and local randomness keyed by ``(seed, index)``."""
    if n != codebook.n:
        raise ValueError(f"blocklength {n} does not match codebook ({codebook.n})")
    engine = engine or ProtocolEngine(codebook, setup)
    gen = rng.generator(seed.with_label(seed.stream_label + "/session"), index)
    x, y, z = draw_sequences(setup.dmc, n, gen)
    fallback = int(gen.integers(1, codebook.n_keys + 1))
    return engine.run(x, y, z, fallback)
