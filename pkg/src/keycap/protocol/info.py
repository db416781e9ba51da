"""Finite-alphabet wiretap channels and the information quantities of the scheme."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ConfigError, InfeasibleRates

_ROW_TOL = 1e-12


def _pmf_rows(a, name: str, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise ConfigError(f"{name} must be {ndim}-D")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ConfigError(f"{name} must be finite and nonnegative")
    if np.any(np.abs(arr.sum(axis=-1) - 1.0) > _ROW_TOL):
        raise ConfigError(f"{name} rows must sum to 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DMWiretapChannel:
    """``p(x) p(y|x) p(z|x)`` on finite alphabets (symbols are integers)."""

    p_x: np.ndarray
    p_y_given_x: np.ndarray
    p_z_given_x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_x", _pmf_rows(self.p_x, "p_x", 1))
        object.__setattr__(self, "p_y_given_x", _pmf_rows(self.p_y_given_x, "p_y_given_x", 2))
        object.__setattr__(self, "p_z_given_x", _pmf_rows(self.p_z_given_x, "p_z_given_x", 2))
        nx = self.p_x.size
        if self.p_y_given_x.shape[0] != nx or self.p_z_given_x.shape[0] != nx:
            raise ConfigError("conditional pmfs need one row per input symbol")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.p_x.size, self.p_y_given_x.shape[1], self.p_z_given_x.shape[1]

    def joint_xyz(self) -> np.ndarray:
        return self.p_x[:, None, None] * self.p_y_given_x[:, :, None] * self.p_z_given_x[:, None, :]


@dataclass(frozen=True, eq=False)
class QuantizerChannel:
    """Test channel ``p(yhat | y)``; ``Yhat`` uses the alphabet of ``Y``."""

    p_yhat_given_y: np.ndarray

    def __post_init__(self):
        arr = _pmf_rows(self.p_yhat_given_y, "p_yhat_given_y", 2)
        if arr.shape[0] != arr.shape[1]:
            raise ConfigError("quantizer must map the Y alphabet onto itself")
        object.__setattr__(self, "p_yhat_given_y", arr)

    @classmethod
    def identity(cls, size: int) -> "QuantizerChannel":
        return cls(np.eye(size))


def entropy(p) -> float:
    """Shannon entropy in bits; ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    nz = p[p > 0]
    return max(float(-np.sum(nz * np.log2(nz))), 0.0)


def mutual_information(joint) -> float:
    """``I(A;B)`` in bits from a 2-D joint pmf."""
    pab = np.asarray(joint, dtype=np.float64)
    if pab.ndim != 2:
        raise ValueError("joint pmf must be 2-D")
    pa = pab.sum(axis=1, keepdims=True)
    pb = pab.sum(axis=0, keepdims=True)
    mask = pab > 0
    ratio = pab[mask] / (pa * pb)[mask]
    return max(float(np.sum(pab[mask] * np.log2(ratio))), 0.0)


def key_rate_formula(dmc: DMWiretapChannel) -> float:
    """``I(X;Y) - I(Y;Z)`` in bits for the channel's own input pmf."""
    pxyz = dmc.joint_xyz()
    return mutual_information(pxyz.sum(axis=2)) - mutual_information(pxyz.sum(axis=0))


def joint_x_y_yhat_z(dmc: DMWiretapChannel, q: QuantizerChannel) -> np.ndarray:
    """Joint pmf array indexed ``[x, y, yhat, z]``."""
    pxyz = dmc.joint_xyz()
    if q.p_yhat_given_y.shape[0] != pxyz.shape[1]:
        raise ConfigError("quantizer alphabet does not match Y")
    return pxyz[:, :, None, :] * q.p_yhat_given_y[None, :, :, None]


@dataclass(frozen=True)
class RateQuadruple:
    """Codebook rates (bits/symbol), held as exact rationals.

    ``R1 = R2 + R3 + R4`` holds exactly by construction.
    """

    R1: Fraction
    R2: Fraction
    R3: Fraction
    R4: Fraction
    epsilon: Fraction

    def sizes(self, n: int) -> tuple[int, int, int]:
        """Bins, keys per bin and codewords per subcode at blocklength ``n``.

        Each count is the largest integer not above ``2**(n R)``, at least 1.
        """
        return tuple(max(1, math.floor(2.0 ** (n * float(r)))) for r in (self.R2, self.R3, self.R4))

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("R1", "R2", "R3", "R4", "epsilon")}


def information_terms(dmc: DMWiretapChannel, q: QuantizerChannel) -> dict:
    """``I(Y;Yhat)``, ``I(X;Yhat)``, ``I(Yhat;Z)`` in bits."""
    p = joint_x_y_yhat_z(dmc, q)
    return {
        "I_Y_Yhat": mutual_information(p.sum(axis=(0, 3))),
        "I_X_Yhat": mutual_information(p.sum(axis=(1, 3))),
        "I_Yhat_Z": mutual_information(p.sum(axis=(0, 1))),
    }


def build_rates(dmc: DMWiretapChannel, q: QuantizerChannel, epsilon: float) -> RateQuadruple:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t = {k: Fraction(v) for k, v in information_terms(dmc, q).items()}
    eps = Fraction(epsilon)
    r2 = t["I_Y_Yhat"] - t["I_X_Yhat"] + 22 * eps
    r3 = t["I_X_Yhat"] - t["I_Yhat_Z"] - eps
    r4 = t["I_Yhat_Z"] - 17 * eps
    if r3 <= 0 or r4 <= 0:
        raise InfeasibleRates(f"R3={float(r3):.6g}, R4={float(r4):.6g} must both be positive")
    r1 = t["I_Y_Yhat"] + 4 * eps
    assert r1 == r2 + r3 + r4
    return RateQuadruple(r1, r2, r3, r4, eps)
