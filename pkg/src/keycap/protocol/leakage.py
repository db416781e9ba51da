"""Key disagreement and leakage of a fixed codebook.

``exact`` mode enumerates every ``(x^n, y^n, z^n)`` with its probability
and pushes it through the deterministic protocol maps, giving the exact
joint law of ``(K, L, Z^n, J)``.  ``mc`` mode runs independent sessions and
reports plug-in estimates; its leakage replaces ``Z^n`` by the symbol
counts of ``Z^n`` and is therefore an approximation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EnumerationTooLarge, InsufficientReplicates
from ..mc import map_indices
from ..rng import SeedSpec
from .codebook import Codebook
from .info import entropy, mutual_information
from .session import ProtocolEngine, ProtocolSetup, run_session

EXACT_CAP = 2 ** 26
MIN_REPLICATES = 100


@dataclass(frozen=True)
class LeakageReport:
    pr_key_mismatch: float
    pr_fictitious_mismatch: float
    leakage_rate_bits: float
    key_entropy_rate_bits: float
    mode: str
    replicates: int
    pr_quantizer_failure: float = 0.0
    pr_key_mismatch_stderr: float = 0.0
    total_probability: float = 1.0
    n: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["leakage_note"] = (
            "exact" if self.mode == "exact_enumeration"
            else "plug-in estimate with Z^n reduced to its symbol counts"
        )
        return d


def _sequences(size: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(size), repeat=n)), dtype=np.int64).reshape(-1, n)


def _seq_probs(seqs: np.ndarray, cond: np.ndarray, given: np.ndarray) -> np.ndarray:
    """``prod_i cond[given_i, seq_i]`` for every pair (given row, seq row)."""
    out = np.ones((given.shape[0], seqs.shape[0]))
    for i in range(seqs.shape[1]):
        out *= cond[given[:, i][:, None], seqs[:, i][None, :]]
    return out


def _exact(engine: ProtocolEngine, n: int, cap: int) -> LeakageReport:
    setup, cb = engine.setup, engine.codebook
    nx, ny, nz = setup.dmc.sizes
    states = (nx * ny * nz) ** n
    if states > cap:
        raise EnumerationTooLarge(f"{states} joint states exceed cap {cap}")
    xs, ys, zs = _sequences(nx, n), _sequences(ny, n), _sequences(nz, n)
    p_x = np.prod(setup.dmc.p_x[xs], axis=1)
    p_y = _seq_probs(ys, setup.dmc.p_y_given_x, xs)  # [x, y]
    p_z = _seq_probs(zs, setup.dmc.p_z_given_x, xs)  # [x, z]

    dest = np.array([engine.destination_indices(y) for y in ys], dtype=np.int64)
    m_of_y, j_of_y, l_of_y = dest.T
    failed = m_of_y == 0
    n_keys, n_j = cb.n_keys, cb.n_bins + 1

    # every (y, key) branch: the fallback key is uniform when quantization fails
    branch_y, branch_l, branch_w = [], [], []
    for yi in range(ys.shape[0]):
        if failed[yi]:
            for l in range(1, n_keys + 1):
                branch_y.append(yi); branch_l.append(l); branch_w.append(1.0 / n_keys)
        else:
            branch_y.append(yi); branch_l.append(int(l_of_y[yi])); branch_w.append(1.0)
    branch_y = np.array(branch_y)
    branch_l = np.array(branch_l)
    branch_w = np.array(branch_w)
    branch_j = j_of_y[branch_y]
    branch_m = m_of_y[branch_y]

    # fictitious decode per (z, branch)
    m_tilde = np.array([[engine.fictitious_decode(z, int(j), int(l)) for j, l in zip(branch_j, branch_l)]
                        for z in zs], dtype=np.int64)  # [z, branch]
    fict_miss = (m_tilde != branch_m[None, :])

    n_k = n_keys + 1
    joint_kzj = np.zeros((n_k, zs.shape[0] * n_j))
    pk = np.zeros(n_k)
    pr_kl = 0.0
    pr_mm = 0.0
    pr_fail = 0.0
    total = 0.0
    zj_index = np.arange(zs.shape[0])[:, None] * n_j + branch_j[None, :]  # [z, branch]
    for xi in range(xs.shape[0]):
        k_of_j = {int(j): engine.source_key(xs[xi], int(j))[1] for j in np.unique(branch_j)}
        k_branch = np.array([k_of_j[int(j)] for j in branch_j], dtype=np.int64)
        w_branch = p_x[xi] * p_y[xi, branch_y] * branch_w  # [branch]
        w = p_z[xi][:, None] * w_branch[None, :]  # [z, branch]
        total += math.fsum(w_branch) * math.fsum(p_z[xi])
        pr_kl += float(np.sum(w_branch[k_branch != branch_l]))
        pr_fail += float(np.sum(w_branch[branch_m == 0]))
        pr_mm += float(np.sum(w[fict_miss]))
        for k in np.unique(k_branch):
            sel = k_branch == k
            joint_kzj[k] += np.bincount(zj_index[:, sel].ravel(), weights=w[:, sel].ravel(),
                                        minlength=joint_kzj.shape[1])
            pk[k] += float(np.sum(w_branch[sel]))
    leak = mutual_information(joint_kzj)
    return LeakageReport(
        pr_key_mismatch=min(pr_kl, 1.0),
        pr_fictitious_mismatch=min(pr_mm, 1.0),
        leakage_rate_bits=leak / n,
        key_entropy_rate_bits=entropy(pk) / n + 0.0,
        mode="exact_enumeration",
        replicates=0,
        pr_quantizer_failure=min(pr_fail, 1.0),
        total_probability=total,
        n=n,
    )


def _plugin_mi(a: np.ndarray, b: np.ndarray) -> float:
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, axis=0, return_inverse=True)
    bi = bi.reshape(-1)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    return mutual_information(joint / joint.sum())


def _monte_carlo(engine: ProtocolEngine, n: int, replicates: int, seed: SeedSpec,
                 workers: int) -> LeakageReport:
    if replicates < MIN_REPLICATES:
        raise InsufficientReplicates(f"need at least {MIN_REPLICATES} replicates, got {replicates}")
    nz = engine.setup.dmc.sizes[2]

    def chunk(idx):
        rows = []
        for r in idx:
            o = run_session(engine.codebook, engine.setup, n, seed, int(r), engine)
            ztype = np.bincount(np.asarray(o.z_sequence), minlength=nz)
            rows.append([o.M, o.J, o.L, o.K, o.M_tilde, *ztype])
        return np.array(rows, dtype=np.int64).reshape(len(idx), 5 + nz)

    t = map_indices(chunk, replicates, workers, chunk=512)
    m, j, l, k, m_tilde = t[:, 0], t[:, 1], t[:, 2], t[:, 3], t[:, 4]
    ztype = t[:, 5:]
    mismatch = (k != l).astype(np.float64)
    p = float(mismatch.mean())
    _, kcounts = np.unique(k, return_counts=True)
    return LeakageReport(
        pr_key_mismatch=p,
        pr_fictitious_mismatch=float(np.mean(m != m_tilde)),
        leakage_rate_bits=_plugin_mi(k, np.column_stack([j, ztype])) / n,
        key_entropy_rate_bits=entropy(kcounts / replicates) / n + 0.0,
        mode="monte_carlo",
        replicates=replicates,
        pr_quantizer_failure=float(np.mean(m == 0)),
        pr_key_mismatch_stderr=math.sqrt(p * (1 - p) / replicates),
        n=n,
    )


def estimate_error_and_leakage(codebook: Codebook, setup: ProtocolSetup, n: int,
                               mode: str = "exact", replicates: int = 10_000,
                               seed: SeedSpec = SeedSpec(0), cap: int = EXACT_CAP,
                               workers: int = 1) -> LeakageReport:
    if n != codebook.n:
        raise ValueError(f"blocklength {n} does not match codebook ({codebook.n})")
    engine = ProtocolEngine(codebook, setup)
    if mode in ("exact", "exact_enumeration"):
        return _exact(engine, n, cap)
    if mode in ("mc", "monte_carlo"):
        return _monte_carlo(engine, n, replicates, seed, workers)
    raise ValueError(f"unknown mode {mode!r}")
