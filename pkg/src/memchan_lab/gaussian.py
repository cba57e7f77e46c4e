"""Harmonic-chain (Gaussian) environments: ground-state covariance matrices,
symplectic spectra and entropies, the bosonic Fannes-type bound, and the two
decay experiments.

Mode ordering is (x_1..x_m, p_1..p_m) with hbar = 1 and vanishing first
moments.  The ground state of H = p.p/2 + x.V.x/2 has covariance
gamma = V**(-1/2) (+) V**(1/2); block reduction keeps both blocks diagonal,
so symplectic eigenvalues are sqrt(eig(gamma_x gamma_p)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np

from .numerics import DecayFit, find_root_bisect, fit_exponential_decay

LN2 = math.log(2.0)
MU_TOL = 1e-8
_ZERO_SAMPLE_TOL = 1e-14


@dataclass(frozen=True)
class PotentialMatrix:
    """Symmetric positive-definite potential matrix, k-banded: V_ij = 0 for
    |i-j| >= k/2 (distance measured around the ring when periodic)."""

    V: np.ndarray
    k: int
    periodic: bool = False

    def __post_init__(self):
        v = np.asarray(self.V, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("potential matrix must be square")
        if np.abs(v - v.T).max() > 1e-12:
            raise ValueError("potential matrix must be symmetric within 1e-12")
        v = (v + v.T) / 2.0
        if float(np.linalg.eigvalsh(v).min()) <= 0.0:
            raise ValueError("potential matrix not positive definite")
        n = v.shape[0]
        dist = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
        if self.periodic:
            dist = np.minimum(dist, n - dist)
        beyond = dist >= self.k / 2.0
        if np.any(np.abs(v[beyond]) > 0.0):
            raise ValueError(f"matrix has entries beyond the stated bandwidth k={self.k}")
        object.__setattr__(self, "V", v)

    @property
    def n(self) -> int:
        return int(self.V.shape[0])


def nn_chain_potential(n: int, kappa: float, periodic: bool = True) -> PotentialMatrix:
    """Nearest-neighbour chain: 1 + 2*kappa on the diagonal, -kappa off it;
    gapped (unit frequency at zero coupling) for kappa >= 0."""
    v = np.diag(np.full(n, 1.0 + 2.0 * kappa))
    for i in range(n - 1):
        v[i, i + 1] = v[i + 1, i] = -kappa
    if periodic and n > 2:
        v[0, n - 1] = v[n - 1, 0] = -kappa
    return PotentialMatrix(V=v, k=3, periodic=periodic)


@dataclass(frozen=True)
class CovarianceMatrix:
    """Second moments of a Gaussian state in (x.., p..) ordering."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2 != 0:
            raise ValueError("covariance matrix must be square with even dimension")
        if np.abs(g - g.T).max() > 1e-10 * max(1.0, float(np.abs(g).max())):
            raise ValueError("covariance matrix must be symmetric")
        object.__setattr__(self, "gamma", (g + g.T) / 2.0)

    @property
    def m(self) -> int:
        return int(self.gamma.shape[0] // 2)


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Symplectic eigenvalues sorted descending; uncertainty demands
    mu_j >= 1 (tolerance 1e-8)."""

    mu: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mu, dtype=float).ravel()
        if m.size == 0:
            raise ValueError("empty symplectic spectrum")
        if m.min() < 1.0 - MU_TOL:
            raise ValueError(f"invalid covariance: symplectic eigenvalue {m.min()!r} < 1")
        object.__setattr__(self, "mu", np.sort(m)[::-1])


def ground_covariance(V: PotentialMatrix) -> CovarianceMatrix:
    """Ground-state covariance V**(-1/2) on the x block, V**(1/2) on the p
    block, from the symmetric eigendecomposition of V."""
    w, u = np.linalg.eigh(V.V)
    if w.min() <= 0.0:
        raise ValueError("potential matrix not positive definite")
    v_minus = (u * (w**-0.5)) @ u.T
    v_plus = (u * (w**0.5)) @ u.T
    if np.abs(v_minus @ v_minus @ V.V - np.eye(V.n)).max() > 1e-10:
        raise ValueError("square-root reconstruction failed")
    n = V.n
    gamma = np.zeros((2 * n, 2 * n))
    gamma[:n, :n] = v_minus
    gamma[n:, n:] = v_plus
    return CovarianceMatrix(gamma=gamma)


def reduce_covariance(gamma: CovarianceMatrix, sites: Iterable[int]) -> CovarianceMatrix:
    """Principal submatrix on the x and p rows of the selected sites."""
    sel = sorted(set(int(s) for s in sites))
    if not sel:
        raise ValueError("need a nonempty site subset")
    if sel[0] < 0 or sel[-1] >= gamma.m:
        raise ValueError("site index out of range")
    idx = np.array(sel + [gamma.m + s for s in sel])
    return CovarianceMatrix(gamma=gamma.gamma[np.ix_(idx, idx)])


def symplectic_form(m: int) -> np.ndarray:
    sigma = np.zeros((2 * m, 2 * m))
    sigma[:m, m:] = np.eye(m)
    sigma[m:, :m] = -np.eye(m)
    return sigma


def symplectic_eigenvalues(gamma: CovarianceMatrix) -> SymplecticSpectrum:
    """Positive halves of the spectrum of i*gamma*sigma.

    Computed from the Hermitian similarity gamma**(1/2) (i sigma) gamma**(1/2)
    so eigenvalues are real by construction; the +/- pairing is checked to
    1e-10 and asymmetry rejected as an invalid covariance.
    """
    g = gamma.gamma
    w, u = np.linalg.eigh(g)
    if w.min() <= 0.0:
        raise ValueError("invalid covariance: not positive definite")
    half = (u * np.sqrt(w)) @ u.T
    herm = half @ (1j * symplectic_form(gamma.m)) @ half
    ev = np.sort(np.linalg.eigvalsh(herm))
    m = gamma.m
    pos = ev[::-1][:m]
    neg = -ev[:m]
    if np.abs(pos - neg).max() > 1e-10 * max(1.0, float(np.abs(ev).max())):
        raise ValueError("invalid covariance: symplectic spectrum is asymmetric")
    return SymplecticSpectrum(mu=(pos + neg) / 2.0)


def entropy_function(x: float) -> float:
    """f(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), f(1) = 0."""
    if x < 1.0 - MU_TOL:
        raise ValueError(f"invalid state: symplectic eigenvalue {x!r} < 1")
    if x <= 1.0:
        return 0.0
    xp, xm = (x + 1.0) / 2.0, (x - 1.0) / 2.0
    return xp * math.log2(xp) - xm * math.log2(xm)


def entropy(gamma) -> float:
    """Von Neumann entropy in bits, sum_j f(mu_j)."""
    spec = gamma if isinstance(gamma, SymplecticSpectrum) else symplectic_eigenvalues(gamma)
    return float(sum(entropy_function(float(mu)) for mu in spec.mu))


_FANNES_B_CACHE: list = []


def fannes_applicability_constant() -> float:
    """The nonzero root B of (k+2)log2(k+2) + k log2(k) = 2, below which the
    per-mode entropy difference is bounded by -|delta| log2 |delta|."""
    if not _FANNES_B_CACHE:
        root = find_root_bisect(
            lambda k: (k + 2.0) * math.log2(k + 2.0) + k * math.log2(k) - 2.0,
            1e-6,
            1.0,
            tol=1e-12,
        )
        _FANNES_B_CACHE.append(root.x)
    return _FANNES_B_CACHE[0]


def fannes_gaussian_bound(
    mu1: SymplecticSpectrum, mu2: SymplecticSpectrum
) -> tuple[float, float, bool]:
    """Fannes-type entropy bound for Gaussian states from spectra alone.

    Returns (bound_fine, bound_coarse, applicable):
    bound_fine = sum_j -|d_j| log2 |d_j|, d_j the sorted spectral differences;
    bound_coarse = Delta log2(N) - Delta log2(Delta) with Delta = sum |d_j|;
    applicable requires max_j |d_j| <= B.
    """
    m1, m2 = mu1.mu, mu2.mu
    if m1.size != m2.size:
        raise ValueError("spectra must have equal length")
    d = np.abs(m1 - m2)
    applicable = bool(d.max() <= fannes_applicability_constant())
    nz = d[d > 0.0]
    bound_fine = float(-(nz * np.log2(nz)).sum()) if nz.size else 0.0
    delta = float(d.sum())
    if delta > 0.0:
        bound_coarse = delta * math.log2(m1.size) - delta * math.log2(delta)
    else:
        bound_coarse = 0.0
    return bound_fine, bound_coarse, applicable


def mutual_info_and_trace_bound(
    gamma_full: CovarianceMatrix, a_sites: Iterable[int], b_sites: Iterable[int]
) -> tuple[float, float]:
    """Mutual information S(A) + S(B) - S(AB) in nats and the relative-entropy
    trace-norm bound sqrt(2 * I) on ||rho_AB - rho_A x rho_B||_1."""
    a = sorted(set(int(s) for s in a_sites))
    b = sorted(set(int(s) for s in b_sites))
    if set(a) & set(b):
        raise ValueError("subsets A and B must be disjoint")
    s_a = entropy(reduce_covariance(gamma_full, a))
    s_b = entropy(reduce_covariance(gamma_full, b))
    s_ab = entropy(reduce_covariance(gamma_full, a + b))
    i_nats = LN2 * (s_a + s_b - s_ab)
    if i_nats < -1e-9:
        raise ValueError(f"mutual information {i_nats!r} significantly negative")
    return i_nats, math.sqrt(2.0 * max(i_nats, 0.0))


@dataclass(frozen=True)
class GaussianDecayResult:
    """Samples (abscissa, bound, diagnostic) with an exponential fit of the
    bound; degenerate flags an all-zero (uncoupled) run."""

    samples: tuple
    fit: DecayFit | None
    degenerate: bool = False
    note: str = ""


# --- extended-precision path for the two-block experiment ------------------
#
# The mutual information of well-separated blocks falls below the double-
# precision resolution of the entropies (I ~ 1e-16 by d ~ 8 at kappa = 0.2),
# so the experiment evaluates the circulant chain in mpmath.  The default
# chain is periodic, hence V is circulant and V**(+/-1/2) have closed-form
# entries (1/n) sum_k cos(2 pi k r / n) * omega_k**(-/+1).


def _mp_reduced_blocks(n: int, kappa, sites: Sequence[int]):
    omega_sq = [1 + 2 * kappa - 2 * kappa * mp.cos(2 * mp.pi * k / n) for k in range(n)]
    if min(omega_sq) <= 0:
        raise ValueError("potential matrix not positive definite")
    omegas = [mp.sqrt(w) for w in omega_sq]

    def entry(i, j, power):
        r = i - j
        return mp.fsum(
            mp.cos(2 * mp.pi * k * r / n) * omegas[k] ** power for k in range(n)
        ) / n

    m = len(sites)
    gx = mp.matrix(m, m)
    gp = mp.matrix(m, m)
    for a in range(m):
        for b in range(a, m):
            gx[a, b] = gx[b, a] = entry(sites[a], sites[b], -1)
            gp[a, b] = gp[b, a] = entry(sites[a], sites[b], 1)
    return gx, gp


def _mp_entropy_bits(gx, gp):
    m = gx.rows
    ew, ev = mp.eigsy(gx)
    half = mp.matrix(m, m)
    for i in range(m):
        for j in range(m):
            half[i, j] = mp.fsum(ev[i, k] * mp.sqrt(ew[k]) * ev[j, k] for k in range(m))
    prod = half * gp * half
    for i in range(m):
        for j in range(i + 1, m):
            sym = (prod[i, j] + prod[j, i]) / 2
            prod[i, j] = prod[j, i] = sym
    mu_sq, _ = mp.eigsy(prod)
    total = mp.mpf(0)
    for val in mu_sq:
        mu = mp.sqrt(val)
        if mu > 1:
            total += (mu + 1) / 2 * mp.log((mu + 1) / 2, 2) - (mu - 1) / 2 * mp.log(
                (mu - 1) / 2, 2
            )
    return total


def two_block_decay_experiment(
    kappa: float,
    L: int,
    d_values: Sequence[int],
    n_total: int,
    dps: int = 40,
) -> GaussianDecayResult:
    """Trace-norm bound sqrt(2 I_AB) between two L-site blocks at separations
    d in the periodic chain's ground state, with an exponential fit over d."""
    d_values = [int(d) for d in d_values]
    if L < 1 or not d_values or min(d_values) < 1:
        raise ValueError("need L >= 1 and separations >= 1")
    if n_total < 2 * L + max(d_values) + 2:
        raise ValueError("chain too short: need n_total >= 2L + max(d) + 2")
    if kappa == 0.0:
        samples = tuple((float(d), 0.0, 0.0) for d in d_values)
        return GaussianDecayResult(
            samples=samples,
            fit=None,
            degenerate=True,
            note="uncoupled chain: product ground state, all bounds vanish",
        )
    with mp.workdps(dps):
        kap = mp.mpf(repr(float(kappa)))
        block = list(range(L))
        gx, gp = _mp_reduced_blocks(n_total, kap, block)
        s_block = _mp_entropy_bits(gx, gp)
        samples = []
        for d in d_values:
            sites = block + list(range(L + d, 2 * L + d))
            gx2, gp2 = _mp_reduced_blocks(n_total, kap, sites)
            i_nats = mp.log(2) * (2 * s_block - _mp_entropy_bits(gx2, gp2))
            bound = float(mp.sqrt(2 * i_nats)) if i_nats > 0 else 0.0
            samples.append((float(d), bound, float(i_nats)))
    positive = [(d, b) for d, b, _ in samples if b > _ZERO_SAMPLE_TOL]
    fit = fit_exponential_decay(positive) if len(positive) >= 3 else None
    return GaussianDecayResult(samples=tuple(samples), fit=fit)


def longshort_covariance_experiment(
    kappa: float,
    l: int,
    delta_values: Sequence[int],
    n_big: int,
) -> GaussianDecayResult:
    """Operator-norm difference between the l-site reduced ground covariance
    of chains of length l + delta and n_big, with the Fannes-type entropy
    bound recorded per sample and an exponential fit over delta."""
    delta_values = [int(x) for x in delta_values]
    if l < 1 or not delta_values or min(delta_values) < 0:
        raise ValueError("need l >= 1 and deltas >= 0")
    if l + max(delta_values) > n_big:
        raise ValueError("need l + max(delta) <= n_big")
    gamma_big = reduce_covariance(
        ground_covariance(nn_chain_potential(n_big, kappa)), range(l)
    )
    mu_big = symplectic_eigenvalues(gamma_big)
    samples = []
    for delta in delta_values:
        gamma_small = reduce_covariance(
            ground_covariance(nn_chain_potential(l + delta, kappa)), range(l)
        )
        diff = float(np.linalg.norm(gamma_small.gamma - gamma_big.gamma, 2))
        bound_fine, _, applicable = fannes_gaussian_bound(
            symplectic_eigenvalues(gamma_small), mu_big
        )
        samples.append((float(delta), diff, bound_fine if applicable else math.nan))
    positive = [(d, y) for d, y, _ in samples if y > _ZERO_SAMPLE_TOL]
    if kappa == 0.0 or not positive:
        return GaussianDecayResult(
            samples=tuple(samples),
            fit=None,
            degenerate=True,
            note="reduced covariances coincide: nothing to fit",
        )
    fit = fit_exponential_decay(positive) if len(positive) >= 3 else None
    return GaussianDecayResult(samples=tuple(samples), fit=fit)
