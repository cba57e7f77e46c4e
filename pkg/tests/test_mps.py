import math

import numpy as np
import pytest

from memchan_lab.ising import IsingParams
from memchan_lab.mps import (
    BlockLayout,
    MPSSpec,
    Rank1Params,
    block_product_deviation,
    capacity_from_enumeration,
    capacity_rank1,
    diag_distribution,
    ising_from_rank1,
    longshort_deviation,
    rank1_mps,
    rank1_params,
    rank1_string_probs,
    reduced_block_density,
    statevector,
    trace_norm,
    transfer_spectrum,
    wolf_mps,
)
from memchan_lab.numerics import shannon_entropy


def product_spec():
    q = np.eye(2) / math.sqrt(2.0)
    return MPSSpec(matrices=(q, q))


def dense_reduced_oracle(spec, n, keep):
    """Dense partial trace; site 0 is the most significant bit, matching the
    contraction's kept-site index order."""
    dim = 2**n
    amps = np.empty(dim, dtype=complex)
    for a in range(dim):
        prod = np.eye(spec.bond, dtype=complex)
        for i in range(n):
            prod = prod @ spec.matrices[(a >> (n - 1 - i)) & 1]
        amps[a] = np.trace(prod)
    amps /= np.linalg.norm(amps)
    keep = sorted(keep)
    traced = [i for i in range(n) if i not in keep]
    psi = amps.reshape([2] * n).transpose(keep + traced).reshape(2 ** len(keep), -1)
    return psi @ psi.conj().T


class TestSpecValidation:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            MPSSpec(matrices=(np.eye(2), np.eye(3)))

    def test_zero_spectral_radius(self):
        nil = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="spectral radius"):
            MPSSpec(matrices=(nil, nil))


class TestDiagDistribution:
    def test_symbol_independent_is_uniform(self):
        p = diag_distribution(product_spec(), 6)
        assert np.allclose(p.values, 1.0 / 64.0, atol=1e-12)

    def test_wolf_zero_coupling_support(self):
        p = diag_distribution(wolf_mps(0.0), 4)
        expect = np.zeros(16)
        expect[0] = expect[15] = 0.5  # all-0 and all-1 strings
        assert np.allclose(p.values, expect, atol=1e-12)

    def test_wolf_matches_closed_form_string_probs(self):
        spec = wolf_mps(0.5)
        p_enum = diag_distribution(spec, 10)
        p_formula = rank1_string_probs(rank1_params(spec), 10)
        assert np.abs(p_enum.values - p_formula.values).max() < 1e-12

    def test_size_cap(self):
        with pytest.raises(ValueError, match="enumeration too large"):
            diag_distribution(product_spec(), 21)

    def test_gauge_invariance(self):
        rng = np.random.default_rng(8)
        spec = wolf_mps(0.7)
        for _ in range(5):
            s = rng.normal(size=(2, 2)) + 0.1j * rng.normal(size=(2, 2))
            s += 2.0 * np.eye(2)  # keep it well conditioned
            s_inv = np.linalg.inv(s)
            gauged = MPSSpec(matrices=tuple(s @ q @ s_inv for q in spec.matrices))
            p0 = diag_distribution(spec, 8).values
            p1 = diag_distribution(gauged, 8).values
            assert np.abs(p0 - p1).max() < 1e-9


class TestRank1Reduction:
    def test_wolf_parameters(self):
        for g in (0.5, 1.0, -0.3, 2.0):
            r = rank1_params(wolf_mps(g))
            assert (r.a, r.b) == (1.0, 1.0)
            assert r.c == pytest.approx(g * g, abs=1e-14)

    def test_wolf_zero_coupling(self):
        assert rank1_params(wolf_mps(0.0)).c == 0.0

    def test_canonical_round_trip(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = float(rng.uniform(0.2, 1.5))
            b = float(rng.uniform(0.2, 1.5))
            c = float(rng.uniform(0.0, 2.0))
            r = rank1_params(rank1_mps(a, b, c))
            assert r.a == pytest.approx(a, rel=1e-12)
            assert r.b == pytest.approx(b, rel=1e-12)
            assert r.c == pytest.approx(c, rel=1e-10, abs=1e-12)

    def test_rank_two_rejected(self):
        spec = MPSSpec(matrices=(np.diag([1.0, 0.5]), np.array([[1.0, 0.0], [0.0, 0.0]])))
        with pytest.raises(ValueError, match="not a rank-1"):
            rank1_params(spec)

    def test_nilpotent_rejected(self):
        spec = MPSSpec(
            matrices=(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 0.0]]))
        )
        with pytest.raises(ValueError, match="nilpotent"):
            rank1_params(spec)

    def test_string_prob_formula_random_params(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            a = float(rng.uniform(0.2, 1.0))
            b = float(rng.uniform(0.2, 1.0))
            c = float(rng.uniform(0.05, 1.0))
            spec = rank1_mps(a, b, c)
            p_enum = diag_distribution(spec, 8)
            p_formula = rank1_string_probs(Rank1Params(a=a, b=b, c=c), 8)
            assert np.abs(p_enum.values - p_formula.values).max() < 1e-12


class TestIsingMap:
    def test_all_ones(self):
        p = ising_from_rank1(Rank1Params(a=1.0, b=1.0, c=1.0))
        assert (p.J, p.M, p.D) == (0.0, 0.0, 0.0)

    def test_direct_substitution(self):
        p = ising_from_rank1(Rank1Params(a=math.e**2, b=1.0, c=1.0))
        assert p.J == pytest.approx(1.0, abs=1e-12)
        assert p.M == pytest.approx(1.0, abs=1e-12)
        assert p.D == pytest.approx(-2.0, abs=1e-12)

    def test_wolf_half(self):
        p = ising_from_rank1(rank1_params(wolf_mps(0.5)))
        assert p.J == 0.0 and p.M == 0.0
        assert p.D == pytest.approx(math.log(2.0), abs=1e-12)

    def test_deterministic_limit_rejected(self):
        with pytest.raises(ValueError, match="deterministic limit"):
            ising_from_rank1(Rank1Params(a=1.0, b=1.0, c=0.0))


class TestCapacityRank1:
    def test_uniform_distribution(self):
        assert capacity_rank1(Rank1Params(a=1.0, b=1.0, c=1.0)) == pytest.approx(0.0, abs=1e-9)

    def test_deterministic_limit(self):
        assert capacity_rank1(Rank1Params(a=0.3, b=1.4, c=0.0)) == 1.0

    def test_effective_coupling_is_j_plus_half_d(self):
        # the mapped Ising parameters must reproduce the string distribution:
        # coupling -ln(c)/4 equals J + D/2 of the printed change of variables
        r = Rank1Params(a=0.7, b=0.4, c=0.3)
        p = ising_from_rank1(r)
        assert -0.25 * math.log(r.c) == pytest.approx(p.J + p.D / 2.0, abs=1e-12)

    def test_two_route_agreement(self):
        rng = np.random.default_rng(11)
        for _ in range(3):
            a = float(rng.uniform(0.2, 1.0))
            b = float(rng.uniform(0.2, 1.0))
            c = float(rng.uniform(0.05, 1.0))
            spec = rank1_mps(a, b, c)
            cap_enum, _ = capacity_from_enumeration(spec, range(8, 14))
            assert capacity_rank1(rank1_params(spec)) == pytest.approx(cap_enum, abs=1e-2)


class TestWolf:
    def test_symmetry_in_g(self):
        for g in np.arange(0.1, 2.0, 0.2):
            cp = capacity_rank1(rank1_params(wolf_mps(float(g))))
            cm = capacity_rank1(rank1_params(wolf_mps(float(-g))))
            assert cp == pytest.approx(cm, abs=1e-12)

    def test_endpoints(self):
        assert capacity_rank1(rank1_params(wolf_mps(0.0))) == 1.0
        assert capacity_rank1(rank1_params(wolf_mps(1.0))) == pytest.approx(0.0, abs=1e-9)
        assert capacity_rank1(rank1_params(wolf_mps(-1.0))) == pytest.approx(0.0, abs=1e-9)

    def test_gradient_grows_toward_transition(self):
        h = 1e-3
        slopes = []
        for g in (0.4, 0.2, 0.1, 0.05):
            c0 = capacity_rank1(rank1_params(wolf_mps(g)))
            c1 = capacity_rank1(rank1_params(wolf_mps(g + h)))
            slopes.append(abs(c1 - c0) / h)
        assert slopes[0] < slopes[1] < slopes[2] < slopes[3]


class TestTransferSpectrum:
    def test_bond_one(self):
        spec = MPSSpec(matrices=(np.array([[0.6]]), np.array([[0.5]])))
        ts = transfer_spectrum(spec)
        assert ts.moduli.size == 1 and ts.moduli[0] == 1.0
        assert ts.unique_fixed_point

    def test_wolf_gap(self):
        ts = transfer_spectrum(wolf_mps(1.0))
        assert ts.unique_fixed_point and ts.gap > 0.0
        ts_half = transfer_spectrum(wolf_mps(0.5))
        assert ts_half.moduli[1] == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_wolf_critical_point_flagged(self):
        assert not transfer_spectrum(wolf_mps(0.0)).unique_fixed_point


class TestReducedBlocks:
    def test_whole_chain_is_pure(self):
        layout = BlockLayout(l=6, s=0, v=1, N=6)
        rho = reduced_block_density(wolf_mps(0.5), layout)
        eigs = np.linalg.eigvalsh(rho)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert eigs[-1] == pytest.approx(1.0, abs=1e-10)

    def test_symbol_independent_diagonal_is_maximally_mixed(self):
        layout = BlockLayout(l=3, s=2, v=1, N=10)
        rho = reduced_block_density(product_spec(), layout)
        assert np.allclose(np.diag(rho).real, 1.0 / 8.0, atol=1e-12)

    def test_matches_dense_partial_trace(self):
        spec = wolf_mps(0.5)
        layout = BlockLayout(l=3, s=2, v=2, N=12)
        rho = reduced_block_density(spec, layout)
        oracle = dense_reduced_oracle(spec, 12, [0, 1, 2, 5, 6, 7])
        assert np.abs(rho - oracle).max() < 1e-10

    def test_nested_consistency(self):
        spec = wolf_mps(0.7)
        layout = BlockLayout(l=2, s=2, v=2, N=8)
        two = reduced_block_density(spec, layout)
        one = reduced_block_density(spec, layout, which=[0])
        traced = np.trace(two.reshape(4, 4, 4, 4), axis1=1, axis2=3)
        assert np.abs(traced - one).max() < 1e-10

    def test_random_specs_give_valid_states(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            mats = tuple(
                rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2)
            )
            spec = MPSSpec(matrices=mats)
            layout = BlockLayout(l=2, s=1, v=2, N=8)
            rho = reduced_block_density(spec, layout)
            assert np.abs(rho - rho.conj().T).max() < 1e-10
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
            assert np.linalg.eigvalsh(rho).min() > -1e-10

    def test_size_cap(self):
        with pytest.raises(ValueError, match="size bound"):
            reduced_block_density(wolf_mps(0.5), BlockLayout(l=13, s=1, v=1, N=20))


class TestBlockProductDeviation:
    def test_single_block_is_zero(self):
        layout = BlockLayout(l=3, s=2, v=1, N=10)
        assert block_product_deviation(wolf_mps(0.5), layout) == pytest.approx(0.0, abs=1e-12)

    def test_product_environment_is_zero(self):
        layout = BlockLayout(l=2, s=2, v=2, N=8)
        assert block_product_deviation(product_spec(), layout) == pytest.approx(0.0, abs=1e-12)

    def test_wolf_decay_rate_matches_transfer_gap(self):
        spec = wolf_mps(0.5)
        lam2 = transfer_spectrum(spec).moduli[1]
        from memchan_lab.numerics import fit_exponential_decay

        pts = []
        for s in range(1, 7):
            layout = BlockLayout(l=3, s=s, v=2, N=2 * (3 + s))
            pts.append((s, block_product_deviation(spec, layout)))
        fit = fit_exponential_decay(pts)
        assert fit.rate == pytest.approx(math.log(lam2), rel=0.2)


class TestLongShortDeviation:
    def test_equal_lengths_is_zero(self):
        assert longshort_deviation(wolf_mps(0.5), 4, 6, 10) == pytest.approx(0.0, abs=1e-12)

    def test_product_environment_is_zero(self):
        assert longshort_deviation(product_spec(), 4, 3, 20) == pytest.approx(0.0, abs=1e-12)

    def test_wolf_decay_in_delta(self):
        spec = wolf_mps(0.5)
        lam2 = transfer_spectrum(spec).moduli[1]
        from memchan_lab.numerics import fit_exponential_decay

        pts = [(d, longshort_deviation(spec, 4, d, 40)) for d in range(1, 9)]
        assert all(y2 < y1 for (_, y1), (_, y2) in zip(pts, pts[1:]))
        fit = fit_exponential_decay(pts)
        assert fit.rate == pytest.approx(math.log(lam2), rel=0.2)
        assert fit.r_squared >= 0.9


class TestStatevector:
    def test_wolf_unit_coupling_is_plus_product(self):
        psi = statevector(wolf_mps(1.0), 6)
        assert np.allclose(psi, np.full(64, 1.0 / 8.0), atol=1e-12)

    def test_normalized(self):
        psi = statevector(wolf_mps(0.3), 8)
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


class TestEnumerationRoute:
    def test_wolf_entropy_slope(self):
        cap, fit = capacity_from_enumeration(wolf_mps(0.5), range(8, 14))
        assert cap == pytest.approx(capacity_rank1(rank1_params(wolf_mps(0.5))), abs=1e-2)
        assert fit.max_abs_residual < 0.01

    def test_trace_norm_requires_hermitian(self):
        with pytest.raises(ValueError):
            trace_norm(np.array([[0.0, 1.0], [0.0, 0.0]]))
