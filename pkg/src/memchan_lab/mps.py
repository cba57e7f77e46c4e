"""Matrix-product-state environments: dephased string distributions, the
rank-1 reduction to an effective Ising chain, transfer-operator spectra, and
exact reduced states of live blocks on a periodic ring.

A spec holds one bond x bond matrix Q_k per physical level k; the state on a
ring of N sites has amplitudes tr(Q_{x_1} ... Q_{x_N}).  Dephasing in the
computational basis leaves string weights tr(A_{x_1} ... A_{x_N}) with
A_k = Q_k (x) conj(Q_k), normalized by C(N) = tr((sum_k A_k)**N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ising import IsingParams
from .ising import capacity as ising_capacity
from .numerics import FitLine, ProbDist, entropy_rate_estimate, shannon_entropy

ENUMERATION_CAP = 1 << 20
DENSE_BLOCK_CAP = 1 << 12
RANK1_SV_RATIO = 1e-10
C_CLAMP = 1e-14


@dataclass(frozen=True)
class MPSSpec:
    """Site matrices of a translation-invariant MPS with periodic-trace
    boundary.  ``matrices`` holds d complex bond x bond arrays."""

    matrices: tuple

    def __post_init__(self):
        mats = tuple(np.asarray(q, dtype=complex) for q in self.matrices)
        if len(mats) < 2:
            raise ValueError("need at least 2 physical levels")
        shape = mats[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("site matrices must be square")
        if any(q.shape != shape for q in mats):
            raise ValueError("all site matrices must have the same shape")
        m = sum(np.kron(q, q.conj()) for q in mats)
        radius = float(np.abs(np.linalg.eigvals(m)).max())
        if radius <= 1e-12 * max(1.0, float(np.abs(m).max())):
            raise ValueError("transfer operator has zero spectral radius")
        object.__setattr__(self, "matrices", mats)

    @property
    def d(self) -> int:
        return len(self.matrices)

    @property
    def bond(self) -> int:
        return int(self.matrices[0].shape[0])


@dataclass(frozen=True)
class Rank1Params:
    """The three numbers (a, b, c) that fully determine the dephased string
    distribution of a rank-1 spec: the sole eigenvalues of A, B and of the
    normalized product."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError("a and b must be positive")
        if self.c < 0.0:
            raise ValueError("c must be non-negative")


@dataclass(frozen=True)
class TransferOp:
    """Doubled transfer operator M = sum_k Q_k (x) conj(Q_k) with its
    per-symbol terms."""

    terms: tuple
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True)
class TransferSpectrum:
    """Eigenvalue moduli of the transfer operator, normalized so the largest
    is 1, sorted descending."""

    moduli: np.ndarray
    unique_fixed_point: bool
    gap: float


@dataclass(frozen=True)
class BlockLayout:
    """v live blocks of length l separated by spacers of length s on a ring
    of N sites; block j occupies sites [j*(l+s), j*(l+s)+l)."""

    l: int
    s: int
    v: int
    N: int

    def __post_init__(self):
        if self.l < 1 or self.v < 1 or self.s < 0 or self.N < 1:
            raise ValueError("layout sizes must be positive (spacer may be 0)")
        if self.v * (self.l + self.s) > self.N:
            raise ValueError("v*(l+s) exceeds the chain length N")


def transfer_operator(spec: MPSSpec) -> TransferOp:
    terms = tuple(np.kron(q, q.conj()) for q in spec.matrices)
    return TransferOp(terms=terms, matrix=sum(terms))


def transfer_spectrum(spec: MPSSpec, fixed_point_tol: float = 1e-6) -> TransferSpectrum:
    """Sorted eigenvalue moduli of M normalized so the leading one is 1.

    ``unique_fixed_point`` is False when a second modulus sits within
    ``fixed_point_tol`` of 1 (critical spec); the gap is 1 - lambda_2.
    """
    m = transfer_operator(spec).matrix
    moduli = np.sort(np.abs(np.linalg.eigvals(m)))[::-1]
    if moduli[0] <= 0.0:
        raise ValueError("transfer operator has zero spectral radius")
    moduli = moduli / moduli[0]
    gap = float(1.0 - moduli[1]) if moduli.size > 1 else 1.0
    unique = moduli.size == 1 or moduli[1] < 1.0 - fixed_point_tol
    return TransferSpectrum(moduli=moduli, unique_fixed_point=bool(unique), gap=gap)


def _rescaled(spec: MPSSpec) -> tuple[np.ndarray, np.ndarray]:
    """Site matrices divided by sqrt(spectral radius of the transfer operator)
    so arbitrary powers stay O(1); returns (stacked Q, transfer matrix)."""
    op = transfer_operator(spec)
    radius = float(np.abs(np.linalg.eigvals(op.matrix)).max())
    qs = np.stack(spec.matrices) / math.sqrt(radius)
    return qs, op.matrix / radius


def diag_distribution(spec: MPSSpec, N: int) -> ProbDist:
    """Exact dephased distribution over all d**N strings of a ring of N sites.

    String index is big-endian: the first site is the most significant base-d
    digit.  Weights are traces of products of the doubled terms; imaginary
    residues are checked against 1e-10 before being discarded.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    if spec.d**N > ENUMERATION_CAP:
        raise ValueError(f"enumeration too large: d**N > {ENUMERATION_CAP}")
    qs, _ = _rescaled(spec)
    stack = np.stack([np.kron(q, q.conj()) for q in qs])

    def _half_products(length: int) -> np.ndarray:
        dim = stack.shape[1]
        prods = np.eye(dim, dtype=complex)[None, :, :]
        for _ in range(length):
            # extend each prefix by one symbol; new symbol is least significant
            prods = np.einsum("aij,kjl->akil", prods, stack).reshape(-1, dim, dim)
        return prods

    n_left = N // 2
    left = _half_products(n_left)
    right = _half_products(N - n_left)
    vals = np.einsum("aij,bji->ab", left, right).ravel()
    total = vals.sum()
    if not (total.real > 0.0) or not np.isfinite(total.real):
        raise ValueError("degenerate MPS: normalization C(N) is not positive")
    if np.abs(vals.imag).max() > 1e-10 * total.real:
        raise ValueError("string weights have imaginary residues beyond tolerance")
    return ProbDist(vals.real / total.real)


def _sole_eigenvalue_rank1(mat: np.ndarray, name: str) -> float:
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] <= 0.0 or (sv.size > 1 and sv[1] > RANK1_SV_RATIO * sv[0]):
        raise ValueError(f"not a rank-1 MPS: doubled matrix {name} has rank > 1")
    tr = np.trace(mat)
    if abs(tr.imag) > 1e-10 * max(abs(tr.real), 1e-30):
        raise ValueError(f"trace of {name} is not real")
    if tr.real <= 1e-12:
        raise ValueError(f"nilpotent symbol matrix: trace of {name} vanishes")
    return float(tr.real)


def rank1_params(spec: MPSSpec) -> Rank1Params:
    """Reduce a d=2 rank-1 spec to (a, b, c): a = tr A, b = tr B (the trace of
    a rank-1 matrix is its sole eigenvalue) and c = tr(AB)/(a*b)."""
    if spec.d != 2:
        raise ValueError("rank-1 reduction is defined for d = 2 specs")
    a_mat = np.kron(spec.matrices[0], spec.matrices[0].conj())
    b_mat = np.kron(spec.matrices[1], spec.matrices[1].conj())
    a = _sole_eigenvalue_rank1(a_mat, "A")
    b = _sole_eigenvalue_rank1(b_mat, "B")
    c = float(np.trace(a_mat @ b_mat).real) / (a * b)
    if c < -1e-12:
        raise ValueError(f"negative c = {c!r}")
    if abs(c) <= C_CLAMP:
        c = 0.0
    return Rank1Params(a=a, b=b, c=c)


def rank1_mps(a: float, b: float, c: float) -> MPSSpec:
    """Canonical bond-2 spec realizing given (a, b, c).

    Q0 = [[sqrt(a), 0], [0, 0]] and Q1 rank-1 with tr Q1 = sqrt(b) and
    tr(Q0 Q1) = sqrt(a b c), so the doubled matrices reproduce (a, b, c)
    exactly.
    """
    params = Rank1Params(a=a, b=b, c=c)  # validates signs
    ra, rb, rc = math.sqrt(params.a), math.sqrt(params.b), math.sqrt(params.c * params.b)
    q0 = np.array([[ra, 0.0], [0.0, 0.0]])
    # rank-1 condition det Q1 = 0 fixes the off-diagonal product
    offdiag_sq = rc * (rb - rc)
    off = math.sqrt(abs(offdiag_sq))
    sign = 1.0 if offdiag_sq >= 0.0 else -1.0
    q1 = np.array([[rc, off], [sign * off, rb - rc]])
    return MPSSpec(matrices=(q0, q1))


def rank1_string_probs(params: Rank1Params, N: int) -> ProbDist:
    """Closed-form string distribution p = a**l * b**(N-l) * c**K / C(N).

    l counts symbol-0 sites, K counts 0->1 interfaces around the ring (one
    per maximal block of consecutive 0s; the trace algebra collapses each
    such block pair to one factor of c).  Uniform strings have K = 0.
    """
    if params.a <= 0.0 or params.b <= 0.0:
        raise ValueError("a and b must be positive")
    if 2**N > ENUMERATION_CAP:
        raise ValueError(f"enumeration too large: 2**N > {ENUMERATION_CAP}")
    idx = np.arange(1 << N)
    bits = (idx[:, None] >> np.arange(N - 1, -1, -1)) & 1  # big-endian
    l_counts = (bits == 0).sum(axis=1)
    walls_01 = ((bits == 0) & (np.roll(bits, -1, axis=1) == 1)).sum(axis=1)
    weights = (
        params.a**l_counts * params.b ** (N - l_counts) * params.c ** walls_01.astype(float)
    )
    return ProbDist(weights / weights.sum())


def ising_from_rank1(params: Rank1Params) -> IsingParams:
    """Change of variables from (a, b, c) to Ising couplings at beta = 1:
    J = (ln a + ln b)/2, M = (ln a - ln b)/2, D = -(ln a + ln b) - ln(c)/2."""
    if params.c <= 0.0:
        raise ValueError("deterministic limit, use capacity_rank1 (c = 0)")
    la, lb, lc = math.log(params.a), math.log(params.b), math.log(params.c)
    return IsingParams(beta=1.0, J=(la + lb) / 2.0, M=(la - lb) / 2.0, D=-(la + lb) - lc / 2.0)


def capacity_rank1(params: Rank1Params) -> float:
    """Capacity in bits of the channel with a rank-1 MPS environment.

    The string weights a**l b**(N-l) c**K are Boltzmann weights of a
    nearest-neighbour chain: matching the K coefficient fixes the effective
    coupling to -ln(c)/4 and the field to (ln a - ln b)/2, after which the
    transfer-matrix entropy gives the capacity.  (Note the effective coupling
    equals J + D/2 of the ising_from_rank1 parameters, not J - D; only this
    choice agrees with direct enumeration of the string distribution.)

    At c = 0 every string with an interface has zero weight, the support
    collapses to the two uniform strings, and the capacity is exactly 1.
    """
    if params.c == 0.0:
        return 1.0
    coupling = -0.25 * math.log(params.c)
    field = 0.5 * (math.log(params.a) - math.log(params.b))
    return ising_capacity(IsingParams(beta=1.0, J=coupling, M=field, D=0.0))


def wolf_mps(g: float) -> MPSSpec:
    """Bond-2 ground-state MPS of the solvable three-body spin model with
    parameter g; rank-1 with (a, b, c) = (1, 1, g**2)."""
    q0 = np.array([[0.0, 0.0], [1.0, 1.0]])
    q1 = np.array([[1.0, float(g)], [0.0, 0.0]])
    return MPSSpec(matrices=(q0, q1))


def statevector(spec: MPSSpec, n: int) -> np.ndarray:
    """Normalized dense amplitudes of the periodic ring, site i stored in
    base-d digit i of the index (least significant digit = site 0)."""
    if spec.d**n > ENUMERATION_CAP:
        raise ValueError(f"enumeration too large: d**n > {ENUMERATION_CAP}")
    # uniform rescale drops out on normalization
    qs, _ = _rescaled(spec)
    dim = spec.d**n
    idx = np.arange(dim)
    prods = np.broadcast_to(np.eye(spec.bond, dtype=complex), (dim, spec.bond, spec.bond)).copy()
    for site in range(n):
        digits = (idx // spec.d**site) % spec.d
        prods = np.matmul(prods, qs[digits])
    amps = np.trace(prods, axis1=1, axis2=2)
    norm = np.linalg.norm(amps)
    if norm <= 0.0:
        raise ValueError("degenerate MPS: zero statevector")
    return amps / norm


def _block_amplitude_products(qs: np.ndarray, length: int) -> np.ndarray:
    # all d**length ordered products, first site = most significant digit
    prods = np.eye(qs.shape[1], dtype=complex)[None, :, :]
    for _ in range(length):
        prods = np.einsum("aij,kjl->akil", prods, qs).reshape(-1, qs.shape[1], qs.shape[1])
    return prods


def _reduced_density(spec: MPSSpec, N: int, blocks: Sequence[tuple]) -> np.ndarray:
    """Exact reduced density matrix of the kept blocks on a ring of N sites.

    blocks: sorted, non-overlapping (start, length) pairs.  Contraction works
    block-wise: amplitude products P_x for each block factorize the doubled
    tensor as P_x (x) conj(P_y), spacers collapse to powers of the transfer
    operator, and the ring closes with a trace.  Peak memory is the suffix
    tensor d**(2*(k - l_1)) * bond**4, not d**(2k) * bond**4.
    """
    d, bond = spec.d, spec.bond
    blocks = sorted((int(s), int(ln)) for s, ln in blocks)
    if not blocks:
        raise ValueError("need at least one block")
    total_kept = sum(ln for _, ln in blocks)
    if d**total_kept > DENSE_BLOCK_CAP:
        raise ValueError(f"size bound exceeded: d**kept > {DENSE_BLOCK_CAP}")
    for (s0, l0), (s1, _) in zip(blocks, blocks[1:]):
        if s0 + l0 > s1:
            raise ValueError("blocks overlap")
    if blocks[-1][0] + blocks[-1][1] > blocks[0][0] + N:
        raise ValueError("blocks exceed the ring")

    qs, m_op = _rescaled(spec)

    gaps = []
    for i, (start, length) in enumerate(blocks):
        nxt = blocks[i + 1][0] if i + 1 < len(blocks) else blocks[0][0] + N
        gaps.append(nxt - (start + length))
    gap_pows = {g: np.linalg.matrix_power(m_op, g) for g in set(gaps)}

    amp = [_block_amplitude_products(qs, ln) for _, ln in blocks]
    dims = [p.shape[0] for p in amp]

    def doubled(p: np.ndarray) -> np.ndarray:
        t = np.einsum("xij,ykl->xyikjl", p, p.conj())
        return t.reshape(p.shape[0] ** 2, bond * bond, bond * bond)

    if len(blocks) == 1:
        w4 = gap_pows[gaps[0]].reshape(bond, bond, bond, bond)
        rho = np.einsum("xij,ykl,jlik->xy", amp[0], amp[0].conj(), w4)
    else:
        suffix = np.einsum("aij,jk->aik", doubled(amp[-1]), gap_pows[gaps[-1]])
        for j in range(len(blocks) - 2, 0, -1):
            t = np.einsum("aij,jk->aik", doubled(amp[j]), gap_pows[gaps[j]])
            suffix = np.einsum("aij,bjk->abik", t, suffix).reshape(-1, bond * bond, bond * bond)
        closed = np.einsum("ij,ajk->aik", gap_pows[gaps[0]], suffix)
        rho = np.einsum("aij,bji->ab", doubled(amp[0]), closed)
        # interleaved (x_0, y_0, x_1, y_1, ...) axes -> (rows, cols)
        shape = []
        for dd in dims:
            shape += [dd, dd]
        rho = rho.reshape(shape)
        order = [2 * i for i in range(len(dims))] + [2 * i + 1 for i in range(len(dims))]
        tot = int(np.prod(dims))
        rho = rho.transpose(order).reshape(tot, tot)

    herm_dev = float(np.abs(rho - rho.conj().T).max())
    scale = max(float(np.abs(rho).max()), 1e-300)
    if herm_dev > 1e-10 * scale:
        raise ValueError("contracted density matrix is not Hermitian")
    rho = (rho + rho.conj().T) / 2.0
    tr = float(np.trace(rho).real)
    if tr <= 0.0:
        raise ValueError("degenerate MPS: reduced state has non-positive trace")
    rho = rho / tr
    if float(np.linalg.eigvalsh(rho).min()) < -1e-10:
        raise ValueError("contracted density matrix is not positive semidefinite")
    return rho


def reduced_block_density(
    spec: MPSSpec, layout: BlockLayout, which: Iterable[int] | None = None
) -> np.ndarray:
    """Reduced density matrix of the selected live blocks (default: all of
    them), spacers and remainder traced out."""
    sel = sorted(set(range(layout.v) if which is None else (int(i) for i in which)))
    if not sel:
        raise ValueError("need at least one live block")
    if sel[0] < 0 or sel[-1] >= layout.v:
        raise ValueError("block index out of range")
    blocks = [(j * (layout.l + layout.s), layout.l) for j in sel]
    return _reduced_density(spec, layout.N, blocks)


def trace_norm(x: np.ndarray) -> float:
    """Trace norm of a Hermitian matrix as the sum of absolute eigenvalues."""
    xm = np.asarray(x)
    if float(np.abs(xm - xm.conj().T).max()) > 1e-8 * max(float(np.abs(xm).max()), 1e-300):
        raise ValueError("trace norm implemented for Hermitian matrices only")
    return float(np.abs(np.linalg.eigvalsh((xm + xm.conj().T) / 2.0)).sum())


def block_product_deviation(spec: MPSSpec, layout: BlockLayout) -> float:
    """Trace-norm distance between the joint state of all live blocks and the
    v-fold product of the single-block state on the same ring."""
    if spec.d ** (layout.v * layout.l) > DENSE_BLOCK_CAP:
        raise ValueError(f"size bound exceeded: d**(v*l) > {DENSE_BLOCK_CAP}")
    joint = reduced_block_density(spec, layout)
    single = reduced_block_density(spec, layout, which=[0])
    product = single
    for _ in range(layout.v - 1):
        product = np.kron(product, single)
    return trace_norm(joint - product)


def longshort_deviation(spec: MPSSpec, l: int, delta: int, n_big: int) -> float:
    """Trace-norm distance between the l-site block state on a ring of
    l + delta sites and on a much longer ring of n_big sites."""
    if l > 10:
        raise ValueError("live block limited to l <= 10")
    if delta < 0 or l + delta > n_big:
        raise ValueError("need 0 <= delta and l + delta <= n_big")
    rho_short = _reduced_density(spec, l + delta, [(0, l)])
    rho_long = _reduced_density(spec, n_big, [(0, l)])
    return trace_norm(rho_short - rho_long)


def capacity_from_enumeration(
    spec: MPSSpec, n_values: Sequence[int] = tuple(range(8, 14))
) -> tuple[float, FitLine]:
    """Capacity estimate log2(d) - slope of the enumerated diagonal entropies
    S_N over the given window; the independent route against capacity_rank1."""
    points = [(n, shannon_entropy(diag_distribution(spec, n))) for n in n_values]
    fit = entropy_rate_estimate(points)
    return math.log2(spec.d) - fit.slope, fit
