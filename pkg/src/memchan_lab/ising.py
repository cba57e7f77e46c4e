"""Classical 1D Ising environment via the 2x2 transfer matrix.

The chain H = -sum_i (J - D) s_i s_{i+1} - M s_i (s = +/-1, periodic) has
transfer matrix

    T = [[exp(beta(J-D+M)), exp(-beta(J-D))],
         [exp(-beta(J-D)),  exp(beta(J-D-M))]]

and per-site entropy s = (1 - beta d/dbeta) ln(lambda_1) in nats.  The
capacity in bits is 1 - log2(e) * s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .numerics import LOG2E, perron_eigen

EXP_OVERFLOW = 700.0  # natural-log scale
LN2 = math.log(2.0)


@dataclass(frozen=True)
class IsingParams:
    """Inverse temperature and couplings; only beta*(J-D) and beta*M enter the
    transfer matrix."""

    beta: float
    J: float
    M: float = 0.0
    D: float = 0.0

    def __post_init__(self):
        vals = (self.beta, self.J, self.M, self.D)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")


def _exponents(p: IsingParams) -> np.ndarray:
    x = p.beta * (p.J - p.D)
    h = p.beta * p.M
    expo = np.array([[x + h, -x], [-x, x - h]])
    if np.abs(expo).max() > EXP_OVERFLOW:
        raise ValueError("parameter overflow: transfer-matrix exponent beyond 700")
    return expo


def transfer_matrix(p: IsingParams) -> np.ndarray:
    return np.exp(_exponents(p))


def transfer_matrix_beta_derivative(p: IsingParams) -> np.ndarray:
    # exponents are linear in beta, so dT/dbeta = (exponent/beta) * T elementwise
    expo = _exponents(p)
    return (expo / p.beta) * np.exp(expo)


def entropy_per_site(p: IsingParams) -> float:
    """Thermodynamic-limit entropy per site in nats, in [0, ln 2].

    d(lambda_1)/dbeta comes from the Hellmann-Feynman identity
    left . dT/dbeta . right with left.right = 1, exact to machine precision.
    """
    t = transfer_matrix(p)
    dt = transfer_matrix_beta_derivative(p)
    lam, left, right = perron_eigen(t)
    dlam = float(left @ dt @ right)
    s = math.log(lam) - p.beta * dlam / lam
    if s < -1e-9 or s > LN2 + 1e-9:
        raise ValueError(f"entropy per site {s!r} outside [0, ln 2]")
    return min(max(s, 0.0), LN2)


def capacity(p: IsingParams) -> float:
    """Channel capacity in bits: 1 - log2(e) * entropy_per_site."""
    c = 1.0 - LOG2E * entropy_per_site(p)
    return min(max(c, 0.0), 1.0)


def _eig_pairs(p: IsingParams):
    # both eigenpairs of the symmetric T, with Hellmann-Feynman derivatives
    t = transfer_matrix(p)
    dt = transfer_matrix_beta_derivative(p)
    w, v = np.linalg.eigh(t)
    lams = w[::-1]
    vecs = v[:, ::-1]
    dlams = np.array([vecs[:, i] @ dt @ vecs[:, i] for i in range(2)])
    return lams, dlams


def finite_chain_entropy(p: IsingParams, N: int) -> float:
    """Exact total entropy (nats) of the periodic N-site chain from
    Z = lambda_1**N + lambda_2**N, including the subleading eigenvalue."""
    if N < 1:
        raise ValueError("need N >= 1")
    (l1, l2), (d1, d2) = _eig_pairs(p)
    r = l2 / l1  # |r| < 1 since both off-diagonal entries are positive
    rN = r**N
    log_z = N * math.log(l1) + math.log1p(rN)
    w2 = rN / (1.0 + rN)
    w1 = 1.0 - w2
    dlog_z = N * w1 * d1 / l1
    if abs(l2) > 1e-300:
        dlog_z += N * w2 * d2 / l2
    return log_z - p.beta * dlog_z


def brute_force_entropy(p: IsingParams, N: int, periodic: bool = True) -> float:
    """Exact total Shannon entropy (nats) of the Boltzmann distribution over
    all 2**N spin configurations; enumeration oracle, N <= 18."""
    if not 1 <= N <= 18:
        raise ValueError("enumeration limited to N <= 18")
    _exponents(p)  # overflow guard
    j_eff = p.J - p.D
    idx = np.arange(1 << N)
    spins = 1.0 - 2.0 * ((idx[:, None] >> np.arange(N)) & 1)
    bonds = range(N) if periodic else range(N - 1)
    energy = np.zeros(idx.size)
    for i in bonds:
        energy -= j_eff * spins[:, i] * spins[:, (i + 1) % N]
    energy -= p.M * spins.sum(axis=1)
    log_w = -p.beta * energy
    log_zn = float(logsumexp(log_w))
    logp = log_w - log_zn
    return float(-(np.exp(logp) * logp).sum())
