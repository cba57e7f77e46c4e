"""Capacity of correlated dephasing channels with a d-state Markov-chain
environment: Q = log2(d) - sum_i v_i H_i, with v the stationary distribution
and H_i the entropy of transition-matrix column i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .numerics import ProbDist, shannon_entropy

ENUMERATION_BITS_CAP = 24


@dataclass(frozen=True)
class StochasticMatrix:
    """Column-stochastic transition matrix: p_i(s+1) = sum_j M_ij p_j(s).

    Columns must sum to 1; a matrix whose rows sum to 1 instead is rejected
    so that a silently transposed input cannot slip through.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("transition matrix must be square")
        if m.shape[0] < 2:
            raise ValueError("need at least 2 states")
        if m.min() < -1e-12:
            raise ValueError(f"negative transition probability {m.min():.3e}")
        m = np.where(m < 0.0, 0.0, m)
        col_sums = m.sum(axis=0)
        if np.abs(col_sums - 1.0).max() > 1e-10:
            hint = ""
            if np.abs(m.sum(axis=1) - 1.0).max() <= 1e-10:
                hint = " (rows sum to 1: matrix looks row-stochastic, transpose it)"
            raise ValueError(
                f"columns must sum to 1 within 1e-10, got sums {col_sums!r}{hint}"
            )
        object.__setattr__(self, "entries", m)

    @property
    def d(self) -> int:
        return int(self.entries.shape[0])


@dataclass(frozen=True)
class MarkovCapacityReport:
    stationary: ProbDist
    column_entropies: np.ndarray  # bits
    entropy_rate_bits: float
    capacity_bits: float


def check_irreducible(m: StochasticMatrix) -> bool:
    """True iff the directed graph with an edge j -> i whenever M_ij > 0 is
    strongly connected."""
    adj = csr_matrix((m.entries > 0.0).T.astype(np.int8))
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    return int(n_comp) == 1


def stationary(m: StochasticMatrix) -> ProbDist:
    """Stationary distribution: the eigenvalue-1 right eigenvector of M."""
    if not check_irreducible(m):
        raise ValueError("no unique stationary state (chain is reducible)")
    w, v = np.linalg.eig(m.entries)
    near_one = np.abs(w - 1.0) < 1e-8
    if near_one.sum() != 1:
        raise ValueError("no unique stationary state (degenerate eigenvalue-1 space)")
    vec = v[:, int(np.argmax(near_one))].real
    if vec.sum() < 0.0:
        vec = -vec
    vec = np.where(vec < 0.0, 0.0, vec)
    vec = vec / vec.sum()
    if np.abs(m.entries @ vec - vec).max() > 1e-10:
        vec = _power_iteration(m.entries, vec)
    return ProbDist(vec)


def _power_iteration(mat: np.ndarray, v0: np.ndarray, tol=1e-14, max_iter=200000):
    # Cesaro-averaged iteration; handles slow mixing and periodic chains.
    v = v0.copy()
    avg = v.copy()
    for it in range(1, max_iter + 1):
        v = mat @ v
        avg += v
        if it % 64 == 0:
            cand = avg / avg.sum()
            if np.abs(mat @ cand - cand).max() <= tol:
                return cand
    cand = avg / avg.sum()
    if np.abs(mat @ cand - cand).max() > 1e-10:
        raise ValueError("stationary distribution iteration failed to converge")
    return cand


def entropy_rate(m: StochasticMatrix) -> float:
    """Entropy rate sum_i v_i H_i in bits, H_i the entropy of column i."""
    v = stationary(m).values
    h_cols = np.array([shannon_entropy(m.entries[:, i]) for i in range(m.d)])
    return float(v @ h_cols)


def capacity(m: StochasticMatrix) -> MarkovCapacityReport:
    v = stationary(m)
    h_cols = np.array([shannon_entropy(m.entries[:, i]) for i in range(m.d)])
    rate = float(v.values @ h_cols)
    return MarkovCapacityReport(
        stationary=v,
        column_entropies=h_cols,
        entropy_rate_bits=rate,
        capacity_bits=math.log2(m.d) - rate,
    )


def brute_force_diag_entropy(m: StochasticMatrix, p0=None, n: int = 8) -> float:
    """Exact entropy (bits) of the length-n path distribution, by enumerating
    all d**n paths with p(x_1..x_n) = p0(x_1) * prod_t M[x_{t+1}, x_t].

    Independent oracle for the entropy-rate formula; capped at
    n*log2(d) <= 24 enumerated bits.  With the default p0 = stationary the
    increments S_{n+1} - S_n equal the entropy rate exactly.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n * math.log2(m.d) > ENUMERATION_BITS_CAP + 1e-9:
        raise ValueError(
            f"enumeration too large: n*log2(d) = {n * math.log2(m.d):.1f} > {ENUMERATION_BITS_CAP}"
        )
    if p0 is None:
        p0 = stationary(m)
    start = ProbDist(p0.values if isinstance(p0, ProbDist) else p0).values
    d = m.d
    paths = start.reshape(d, 1)  # paths[last_state, path_index]
    for _ in range(n - 1):
        paths = (m.entries[:, :, None] * paths[None, :, :]).reshape(d, -1)
    probs = paths.ravel()
    nz = probs[probs > 0.0]
    return float(-(nz * np.log2(nz)).sum())
