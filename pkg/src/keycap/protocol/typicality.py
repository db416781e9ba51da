"""Robust (strong) joint typicality on finite alphabets.

A tuple of sequences is typical for a joint pmf ``p`` when every cell's
count ``N(a)`` satisfies ``|N(a) - n p(a)| <= eps n p(a)``; cells with
``p(a) = 0`` must be empty.  A relative slack of 1e-12 absorbs rounding at
the interval edges.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EnumerationTooLarge

_SLACK = 1e-12
DP_CAP = 10_000_000


def count_bounds(pmf: np.ndarray, n: int, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive integer count range allowed for each cell."""
    center = n * np.asarray(pmf, dtype=np.float64)
    lo = np.ceil(center * (1 - epsilon) - _SLACK * (center + 1))
    hi = np.floor(center * (1 + epsilon) + _SLACK * (center + 1))
    lo = np.maximum(lo, 0)
    hi = np.where(center > 0, hi, 0)
    return lo.astype(np.int64), hi.astype(np.int64)


def joint_counts(sequences, shape) -> np.ndarray:
    seqs = [np.asarray(s, dtype=np.int64).reshape(-1) for s in sequences]
    flat = np.ravel_multi_index(seqs, shape)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)


def is_jointly_typical(sequences, pmf, epsilon: float) -> bool:
    pmf = np.asarray(pmf, dtype=np.float64)
    seqs = [np.asarray(s, dtype=np.int64).reshape(-1) for s in sequences]
    if len(seqs) != pmf.ndim:
        raise ValueError(f"pmf has {pmf.ndim} axes but {len(seqs)} sequences were given")
    n = seqs[0].size
    if any(s.size != n for s in seqs):
        raise ValueError("sequences must have equal length")
    counts = joint_counts(seqs, pmf.shape)
    lo, hi = count_bounds(pmf, n, epsilon)
    return bool(np.all((counts >= lo) & (counts <= hi)))


def _bounded_multinomial(n: int, probs: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """``P(lo <= C <= hi)`` for ``C ~ Multinomial(n, probs)``, by DP over cells."""
    k = probs.size
    if (n + 1) * (n + 1) * k > DP_CAP:
        raise EnumerationTooLarge(f"typicality DP over {k} cells at n={n} exceeds cap")
    # log dp[t] = log of the sum over partial count vectors with total t of prod q^c / c!
    dp = np.full(n + 1, -np.inf)
    dp[0] = 0.0
    for q, a, b in zip(probs, lo, hi):
        b = min(int(b), n)
        a = int(a)
        if q == 0:
            b = min(b, 0)
        if a > b:
            return 0.0
        nxt = np.full(n + 1, -np.inf)
        for c in range(a, b + 1):
            w = (c * math.log(q) if c else 0.0) - math.lgamma(c + 1)
            nxt[c:] = np.logaddexp(nxt[c:], w + dp[: n + 1 - c])
        dp = nxt
    return float(min(math.exp(dp[n] + math.lgamma(n + 1)), 1.0))


def typical_probability(y_seq, yhat_seq, p_xz_given_y: np.ndarray, joint: np.ndarray,
                        epsilon: float) -> float:
    """``Pr{T(X^n, y^n, yhat^n, Z^n) = 1}`` with ``(X, Z)`` drawn per position from ``p(x,z|y)``.

    ``joint`` is the ``[x, y, yhat, z]`` pmf defining typicality.  Positions
    sharing a ``(y, yhat)`` pair form independent multinomial classes, so
    the probability is a product of per-class bounded-multinomial terms.
    """
    y = np.asarray(y_seq, dtype=np.int64).reshape(-1)
    yh = np.asarray(yhat_seq, dtype=np.int64).reshape(-1)
    if y.size != yh.size:
        raise ValueError("sequences must have equal length")
    n = y.size
    nx, ny, nyh, nz = joint.shape
    lo, hi = count_bounds(joint, n, epsilon)
    pair_counts = np.bincount(y * nyh + yh, minlength=ny * nyh).reshape(ny, nyh)
    prob = 1.0
    for b in range(ny):
        for c in range(nyh):
            nb = int(pair_counts[b, c])
            cell_lo = lo[:, b, c, :].reshape(-1)
            cell_hi = hi[:, b, c, :].reshape(-1)
            if nb == 0:
                if np.any(cell_lo > 0):
                    return 0.0
                continue
            prob *= _bounded_multinomial(nb, p_xz_given_y[b].reshape(-1), cell_lo, cell_hi)
            if prob == 0.0:
                return 0.0
    return prob


def typical_probability_mc(y_seq, yhat_seq, p_xz_given_y: np.ndarray, joint: np.ndarray,
                           epsilon: float, replicates: int, gen: np.random.Generator) -> float:
    """Monte Carlo estimate of :func:`typical_probability`."""
    y = np.asarray(y_seq, dtype=np.int64).reshape(-1)
    yh = np.asarray(yhat_seq, dtype=np.int64).reshape(-1)
    nx, _, _, nz = joint.shape
    cdf = np.cumsum(p_xz_given_y[y].reshape(y.size, -1), axis=1)
    u = gen.random((replicates, y.size))
    cells = np.minimum((u[..., None] > cdf[None]).sum(axis=2), nx * nz - 1)
    xs, zs = np.divmod(cells, nz)
    hits = 0
    for r in range(replicates):
        hits += is_jointly_typical((xs[r], y, yh, zs[r]), joint, epsilon)
    return hits / replicates
