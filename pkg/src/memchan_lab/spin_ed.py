"""Exact-diagonalization capacities for quantum spin-chain environments.

The capacity per use is 1 - S_diag/n where S_diag is the Shannon entropy of
the ground state's computational-basis distribution.  Hamiltonians are
applied matrix-free (no 2**n x 2**n matrices) and the lowest eigenpair comes
from a restarted Krylov iteration with a deterministic seeded start.

Basis convention: site i is bit i of the state index, bit value 0 means
sigma_z = +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from . import mps as mps_mod
from .numerics import shannon_entropy

N_MIN, N_MAX = 4, 18
DEGENERACY_REL = 1e-8
DEGENERACY_ABS = 1e-10


@dataclass(frozen=True)
class TransverseIsing:
    """H = -sum_i Z_i Z_{i+1} - g sum_i X_i (transition at g = 1)."""

    g: float


@dataclass(frozen=True)
class WolfModel:
    """H = sum_i 2(g^2-1) Z_i Z_{i+1} - (1+g)^2 X_i + (g-1)^2 Z_{i-1} X_i Z_{i+1},
    whose ground state is the bond-2 MPS of :func:`memchan_lab.mps.wolf_mps`."""

    g: float


@dataclass(frozen=True)
class LocalTerms:
    """Generic translation-invariant chain
    H = sum_i zz * Z_i Z_{i+1} + x * X_i + zxz * Z_{i-1} X_i Z_{i+1} + z * Z_i."""

    zz: float = 0.0
    x: float = 0.0
    zxz: float = 0.0
    z: float = 0.0


@dataclass(frozen=True)
class SpinChainSpec:
    n: int
    model: TransverseIsing | WolfModel | LocalTerms
    periodic: bool = True

    def __post_init__(self):
        if not N_MIN <= self.n <= N_MAX:
            raise ValueError(f"n must be in [{N_MIN}, {N_MAX}]")
        terms = local_terms(self.model)
        if not all(math.isfinite(v) for v in (terms.zz, terms.x, terms.zxz, terms.z)):
            raise ValueError("model parameters must be finite")


@dataclass(frozen=True)
class GroundStateResult:
    energy: float
    amplitudes: np.ndarray
    residual: float
    gap_estimate: float
    degenerate_flag: bool
    converged: bool = True


@dataclass(frozen=True)
class SweepRow:
    n: int
    g: float
    capacity_bits: float
    diag_entropy_bits: float
    energy: float
    gap_estimate: float
    degenerate: bool
    residual: float
    converged: bool


SWEEP_CSV_COLUMNS = (
    "n",
    "g",
    "capacity_bits",
    "diag_entropy_bits",
    "energy",
    "gap_estimate",
    "degenerate",
    "residual",
)


def local_terms(model) -> LocalTerms:
    if isinstance(model, LocalTerms):
        return model
    if isinstance(model, TransverseIsing):
        return LocalTerms(zz=-1.0, x=-model.g)
    if isinstance(model, WolfModel):
        g = model.g
        return LocalTerms(zz=2.0 * (g * g - 1.0), x=-((1.0 + g) ** 2), zxz=(g - 1.0) ** 2)
    raise ValueError(f"unknown model {model!r}")


@lru_cache(maxsize=8)
def _compiled(n: int, periodic: bool, zz: float, x: float, zxz: float, z: float):
    dim = 1 << n
    idx = np.arange(dim)
    spins = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
    diag = np.zeros(dim)
    if zz != 0.0:
        bonds = range(n) if periodic else range(n - 1)
        for i in bonds:
            diag += zz * spins[:, i] * spins[:, (i + 1) % n]
    if z != 0.0:
        diag += z * spins.sum(axis=1)
    flips = [idx ^ (1 << i) for i in range(n)] if (x != 0.0 or zxz != 0.0) else []
    zxz_signs = []
    if zxz != 0.0:
        sites = range(n) if periodic else range(1, n - 1)
        zxz_signs = [(i, spins[:, (i - 1) % n] * spins[:, (i + 1) % n]) for i in sites]
    return diag, flips, zxz_signs


def apply_hamiltonian(spec: SpinChainSpec, psi: np.ndarray) -> np.ndarray:
    """Matrix-free H @ psi with boundary per the periodic flag; linear and
    Hermitian."""
    psi = np.asarray(psi)
    if psi.shape != (1 << spec.n,):
        raise ValueError(f"state vector must have length 2**{spec.n}")
    t = local_terms(spec.model)
    diag, flips, zxz_signs = _compiled(spec.n, spec.periodic, t.zz, t.x, t.zxz, t.z)
    out = diag * psi
    if t.x != 0.0:
        acc = psi[flips[0]].copy()
        for f in flips[1:]:
            acc += psi[f]
        out = out + t.x * acc
    if t.zxz != 0.0:
        acc = np.zeros_like(psi)
        for i, sign in zxz_signs:
            acc += sign * psi[flips[i]]
        out = out + t.zxz * acc
    return out


def _flip_all(n: int) -> np.ndarray:
    dim = 1 << n
    return (dim - 1) ^ np.arange(dim)


def ground_state(
    spec: SpinChainSpec,
    tol: float = 1e-10,
    max_iter: int | None = None,
    seed: int = 42,
) -> GroundStateResult:
    """Lowest eigenpair by implicitly restarted Lanczos with a seeded start.

    The gap estimate comes from the two lowest Ritz values.  When they are
    degenerate within 1e-8*|E| + 1e-10 and the model commutes with the global
    spin flip (no Z field), the returned vector is rotated to the
    flip-symmetric combination of the ground space, which keeps sweep curves
    deterministic; the diagonal entropy of a degenerate space is otherwise
    defined only up to O(1) bits.
    """
    t = local_terms(spec.model)
    dim = 1 << spec.n
    diag, _, _ = _compiled(spec.n, spec.periodic, t.zz, t.x, t.zxz, t.z)

    if t.x == 0.0 and t.zxz == 0.0:
        # purely diagonal Hamiltonian; Lanczos cannot mix degenerate basis
        # states meaningfully, so answer exactly
        order = np.argsort(diag)
        energy = float(diag[order[0]])
        second = float(diag[order[1]])
        vec = np.zeros(dim)
        vec[order[0]] = 1.0
        gap = max(second - energy, 0.0)
        degenerate = gap < DEGENERACY_REL * abs(energy) + DEGENERACY_ABS
        if degenerate and t.z == 0.0:
            flip = _flip_all(spec.n)
            partner = int(flip[order[0]])
            if not math.isclose(diag[partner], energy, rel_tol=0, abs_tol=1e-12):
                partner = int(order[1])
            vec[partner] = 1.0
            vec /= np.linalg.norm(vec)
        return GroundStateResult(
            energy=energy,
            amplitudes=vec.astype(complex),
            residual=0.0,
            gap_estimate=gap,
            degenerate_flag=bool(degenerate),
            converged=True,
        )

    matvec = lambda v: apply_hamiltonian(spec, v)
    op = spla.LinearOperator((dim, dim), matvec=matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(dim)
    k = 2 if dim > 2 else 1
    kwargs = dict(k=k, which="SA", v0=v0, tol=min(tol, 1e-12))
    if max_iter is not None:
        kwargs["maxiter"] = max_iter
    converged = True
    try:
        w, v = spla.eigsh(op, **kwargs)
    except spla.ArpackNoConvergence as exc:
        converged = False
        w, v = exc.eigenvalues, exc.eigenvectors
        if w is None or len(w) == 0:
            raise ValueError("eigensolver failed with no converged Ritz pairs") from exc
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    vec = v[:, 0]
    energy = float(w[0])
    gap = float(w[1] - w[0]) if len(w) > 1 else math.inf
    gap = max(gap, 0.0)
    degenerate = gap < DEGENERACY_REL * abs(energy) + DEGENERACY_ABS
    if degenerate and len(w) > 1 and t.z == 0.0:
        vec = _symmetric_combination(spec.n, v[:, :2])
    residual = float(np.linalg.norm(matvec(vec) - energy * vec))
    if converged and residual > max(tol, 1e-12) * max(1.0, abs(energy)):
        converged = False
    return GroundStateResult(
        energy=energy,
        amplitudes=vec.astype(complex),
        residual=residual,
        gap_estimate=gap,
        degenerate_flag=bool(degenerate),
        converged=converged,
    )


def _symmetric_combination(n: int, basis: np.ndarray) -> np.ndarray:
    # rotate within the near-degenerate span to the +1 eigenvector of the
    # global spin flip
    flip = _flip_all(n)
    overlap = basis.T @ basis[flip]
    overlap = (overlap + overlap.T) / 2.0
    ee, uu = np.linalg.eigh(overlap)
    vec = basis @ uu[:, int(np.argmax(ee))]
    return vec / np.linalg.norm(vec)


def diag_entropy_bits(state) -> float:
    """Shannon entropy (bits) of |psi_x|^2 over the computational basis."""
    amps = state.amplitudes if isinstance(state, GroundStateResult) else np.asarray(state)
    probs = np.abs(amps) ** 2
    probs = probs / probs.sum()
    nz = probs[probs > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def capacity_point(spec: SpinChainSpec, tol: float = 1e-10, seed: int = 42) -> float:
    """Capacity per use, 1 - S_diag/n, for the ground-state environment."""
    return 1.0 - diag_entropy_bits(ground_state(spec, tol=tol, seed=seed)) / spec.n


def sweep(
    model_for_g: Callable[[float], object],
    g_values: Sequence[float],
    n_values: Sequence[int],
    periodic: bool = True,
    tol: float = 1e-10,
    seed: int = 42,
) -> list[SweepRow]:
    """Evaluate the capacity over the full (n, g) grid.

    ``model_for_g`` maps a coupling to a model instance (the model classes
    themselves work: ``sweep(TransverseIsing, gs, ns)``).  Convergence
    failures are recorded in the row, not raised.
    """
    rows = []
    for n in n_values:
        for g in g_values:
            spec = SpinChainSpec(n=int(n), model=model_for_g(float(g)), periodic=periodic)
            try:
                gs = ground_state(spec, tol=tol, seed=seed)
                s_diag = diag_entropy_bits(gs)
                rows.append(
                    SweepRow(
                        n=int(n),
                        g=float(g),
                        capacity_bits=1.0 - s_diag / n,
                        diag_entropy_bits=s_diag,
                        energy=gs.energy,
                        gap_estimate=gs.gap_estimate,
                        degenerate=gs.degenerate_flag,
                        residual=gs.residual,
                        converged=gs.converged,
                    )
                )
            except ValueError:
                rows.append(
                    SweepRow(
                        n=int(n),
                        g=float(g),
                        capacity_bits=math.nan,
                        diag_entropy_bits=math.nan,
                        energy=math.nan,
                        gap_estimate=math.nan,
                        degenerate=False,
                        residual=math.nan,
                        converged=False,
                    )
                )
    return rows


def wolf_cross_check(n: int, g: float, seed: int = 42) -> tuple[float, float]:
    """Overlap and diagonal-entropy gap between the exact bond-2 MPS ground
    state and the ED ground state of the matching three-body Hamiltonian.

    For a (near-)degenerate ED ground space the overlap is the norm of the
    MPS state projected onto that space.
    """
    if n > 12:
        raise ValueError("cross check limited to n <= 12")
    if g == 0.0:
        raise ValueError("g = 0 is the critical point; the MPS fixed point degenerates")
    spec = SpinChainSpec(n=n, model=WolfModel(g=g), periodic=True)
    gs = ground_state(spec, seed=seed)
    psi_mps = mps_mod.statevector(mps_mod.wolf_mps(g), n)
    if gs.degenerate_flag:
        dim = 1 << n
        op = spla.LinearOperator(
            (dim, dim), matvec=lambda v: apply_hamiltonian(spec, v), dtype=float
        )
        v0 = np.random.default_rng(seed).standard_normal(dim)
        w, v = spla.eigsh(op, k=2, which="SA", v0=v0, tol=1e-12)
        near = np.abs(w - w.min()) < DEGENERACY_REL * abs(w.min()) + DEGENERACY_ABS
        basis = v[:, near]
        overlap = float(np.linalg.norm(basis.T @ psi_mps))
    else:
        overlap = float(np.abs(np.vdot(gs.amplitudes, psi_mps)))
    s_ed = diag_entropy_bits(gs)
    s_mps = float(shannon_entropy(np.abs(psi_mps) ** 2))
    return overlap, abs(s_ed - s_mps)
