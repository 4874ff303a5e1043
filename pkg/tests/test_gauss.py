"""Gaussian entropy algebra, the solver, and the pair/mixture identities.

Claims:
    - gaussian_entropy matches the closed form, handles dimension zero,
      and rejects non-SPD input
    - the objective reproduces hand values, is exactly homogeneous of
      degree (scaling residual)/2 in log-scale, and its analytic
      gradient matches central finite differences
    - the perturbed objective reduces to the plain one at zero noise, is
      nonincreasing in epsilon, and converges as the noise vanishes
    - solve_mg finds the known optima, detects scaling divergence, and
      reports equal-block covariances for the entropy power datum
    - pair evaluations are additive for independent pairs and invariant
      under the orthogonal two-copy rotation, which is an involution
    - mixture evaluations are component averages and never exceed the
      solved optimum for finite data
"""

import math

import numpy as np
import pytest

import blepi
from blepi.datum import Datum, Partition
from blepi.gauss import (
    LOG_2PIE,
    BlockCovariance,
    GaussianMixture,
    GaussianPair,
    PerturbationParams,
    gaussian_entropy,
    gradient,
    mixture_s,
    objective,
    objective_perturbed,
    pair_s,
    rotate_pair,
    solve_mg,
)
from conftest import random_block_covariance, random_datum, random_pair

H1 = 0.5 * LOG_2PIE  # entropy of a unit-variance scalar Gaussian


def fd_gradient(datum, sigma, h=1e-5):
    """Central finite differences of the objective in each symmetric
    block-coordinate direction."""
    grads = []
    for bi, S in enumerate(sigma.blocks):
        r = S.shape[0]
        G = np.zeros((r, r))
        for a in range(r):
            for b in range(a, r):
                E = np.zeros((r, r))
                E[a, b] = E[b, a] = 1.0
                up = [blk.copy() for blk in sigma.blocks]
                dn = [blk.copy() for blk in sigma.blocks]
                up[bi] = S + h * E
                dn[bi] = S - h * E
                diff = (
                    objective(datum, BlockCovariance(tuple(up)))
                    - objective(datum, BlockCovariance(tuple(dn)))
                ) / (2 * h)
                # <G, E> = 2 G_ab off-diagonal, G_aa on the diagonal
                if a == b:
                    G[a, a] = diff
                else:
                    G[a, b] = G[b, a] = diff / 2.0
        grads.append(G)
    return grads


class TestGaussianEntropy:
    def test_unit_scalar(self):
        assert gaussian_entropy([[1.0]]) == pytest.approx(1.4189385332046727, abs=1e-12)

    def test_additivity(self):
        assert gaussian_entropy(np.eye(2)) == pytest.approx(2 * H1, abs=1e-12)

    def test_scaling(self):
        assert gaussian_entropy([[4.0]]) == pytest.approx(H1 + 0.5 * math.log(4), abs=1e-12)

    def test_zero_dimension(self):
        assert gaussian_entropy(np.zeros((0, 0))) == 0.0

    def test_rejects_non_spd(self):
        with pytest.raises(ValueError):
            gaussian_entropy([[1.0, 2.0], [2.0, 1.0]])


class TestObjective:
    def test_epi_at_identity(self):
        d = blepi.make_epi_datum(0.5, 1)
        sig = BlockCovariance.identity(d.partition)
        assert objective(d, sig) == pytest.approx(0.0, abs=1e-12)

    def test_epi_unequal_variances(self):
        d = blepi.make_epi_datum(0.5, 1)
        sig = BlockCovariance((np.array([[1.0]]), np.array([[4.0]])))
        expected = 0.5 * math.log(2.0) - 0.5 * math.log(2.5)
        assert objective(d, sig) == pytest.approx(expected, abs=1e-12)

    def test_scale_invariance_under_balance(self, rng):
        d = blepi.make_coupled_sums_datum(1.25, 0.5, 0.5, 0.5)
        sig = random_block_covariance(rng, d.partition)
        assert objective(d, sig.scaled(7.0)) == pytest.approx(objective(d, sig), abs=1e-9)

    def test_homogeneity_identity(self, rng):
        for _ in range(10):
            datum = random_datum(rng)
            sig = random_block_covariance(rng, datum.partition)
            base = objective(datum, sig)
            res = blepi.scaling_residual(datum)
            for t in (0.1, 7.0, 100.0):
                expected = base + 0.5 * res * math.log(t)
                assert objective(datum, sig.scaled(t)) == pytest.approx(expected, abs=1e-9)


class TestPerturbedObjective:
    def test_zero_noise_is_exact(self, rng):
        datum = random_datum(rng)
        sig = random_block_covariance(rng, datum.partition)
        p0 = PerturbationParams(0.0, 0.0)
        assert objective_perturbed(datum, sig, p0) == objective(datum, sig)

    def test_epi_known_value(self):
        d = blepi.make_epi_datum(0.5, 1)
        sig = BlockCovariance.identity(d.partition)
        val = objective_perturbed(d, sig, PerturbationParams(epsilon=0.01, delta=0.0))
        assert val == pytest.approx(-0.5 * math.log(1.01), abs=1e-12)

    def test_nonincreasing_in_epsilon(self, rng):
        datum = random_datum(rng)
        sig = random_block_covariance(rng, datum.partition)
        vals = [
            objective_perturbed(datum, sig, PerturbationParams(eps, 0.05))
            for eps in (0.1, 0.05, 0.01, 0.001)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_converges_as_noise_vanishes(self, rng):
        # each term's noise gap is concave in the noise level, so its slope
        # at zero is a rigorous linear bound; summing absolute slopes gives
        # an instance constant C with |gap| <= C * delta
        for _ in range(5):
            datum = random_datum(rng)
            sig = random_block_covariance(rng, datum.partition)
            base = objective(datum, sig)
            full = sig.full()
            C = sum(
                di * 0.5 * np.trace(np.linalg.inv(S))
                for di, S in zip(datum.d, sig.blocks)
            )
            for cj, A in zip(datum.c, datum.maps):
                M = A @ full @ A.T
                C += cj * 0.5 * np.trace(np.linalg.solve(M, A @ A.T + np.eye(A.shape[0])))
            gaps = [
                abs(objective_perturbed(datum, sig, PerturbationParams(10.0**-t, 10.0**-t)) - base)
                for t in range(1, 9)
            ]
            assert gaps[-1] <= 1e-6
            for t, gap in enumerate(gaps, start=1):
                assert gap <= C * 10.0**-t + 1e-12


class TestGradient:
    def test_epi_stationary_at_identity(self):
        d = blepi.make_epi_datum(0.5, 1)
        grads = gradient(d, BlockCovariance.identity(d.partition))
        for G in grads:
            assert np.abs(G).max() < 1e-12

    def test_matches_finite_differences(self, rng):
        for _ in range(10):
            datum = random_datum(rng)
            sig = random_block_covariance(rng, datum.partition)
            analytic = gradient(datum, sig)
            numeric = fd_gradient(datum, sig)
            scale = max(1.0, max(np.abs(G).max() for G in analytic))
            err = max(np.abs(A - N).max() for A, N in zip(analytic, numeric))
            assert err / scale < 1e-5

    def test_inverse_scaling_under_balance(self, rng):
        datum = blepi.make_coupled_sums_datum(1.25, 0.5, 0.5, 0.5)
        sig = random_block_covariance(rng, datum.partition)
        g1 = gradient(datum, sig)
        g2 = gradient(datum, sig.scaled(2.0))
        for A, B in zip(g1, g2):
            np.testing.assert_allclose(B, 0.5 * A, atol=1e-10)


class TestSolver:
    def test_epi_optimum_and_equal_blocks(self):
        d = blepi.make_epi_datum(0.3, 1)
        res = solve_mg(d)
        assert res.converged and not res.unbounded
        assert abs(res.mg_value) <= 1e-6
        s1 = res.sigma_star.blocks[0][0, 0]
        s2 = res.sigma_star.blocks[1][0, 0]
        assert s1 == pytest.approx(s2, rel=1e-5)  # equal covariances up to scale

    def test_coordinate_projection_bound(self):
        # h(X) <= h(X_1) + h(X_2): optimum zero at diagonal covariance
        d = Datum(
            partition=Partition((2,)),
            maps=(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])),
            c=np.array([1.0, 1.0]),
            d=np.array([1.0]),
        )
        res = solve_mg(d)
        assert res.converged and abs(res.mg_value) <= 1e-6
        # grid oracle over the correlation coefficient
        rhos = np.linspace(-0.99, 0.99, 199)
        grid_best = max(
            objective(d, BlockCovariance((np.array([[1.0, r], [r, 1.0]]),))) for r in rhos
        )
        assert res.mg_value >= grid_best - 1e-9

    def test_scaling_violation_is_unbounded(self):
        d = Datum(
            partition=Partition((1,)),
            maps=(np.array([[1.0]]),),
            c=np.array([0.5]),
            d=np.array([1.0]),
        )
        res = solve_mg(d)
        assert res.unbounded and not res.converged
        assert res.mg_value == math.inf


class TestPairs:
    def test_independent_pair_is_additive(self, rng):
        datum = random_datum(rng)
        s1 = random_block_covariance(rng, datum.partition)
        s2 = random_block_covariance(rng, datum.partition)
        pair = GaussianPair.independent(s1, s2)
        p = PerturbationParams(0.03, 0.01)
        lhs = pair_s(datum, pair, p)
        rhs = objective_perturbed(datum, s1, p) + objective_perturbed(datum, s2, p)
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_rotation_invariance(self, rng):
        for _ in range(20):
            datum = random_datum(rng)
            pair = random_pair(rng, datum.partition)
            p = PerturbationParams(rng.uniform(0, 0.2), rng.uniform(0, 0.2))
            assert pair_s(datum, pair, p) == pytest.approx(
                pair_s(datum, rotate_pair(pair), p), abs=1e-9
            )

    def test_rotation_is_involution(self, rng):
        datum = random_datum(rng)
        pair = random_pair(rng, datum.partition)
        twice = rotate_pair(rotate_pair(pair))
        for A, B in zip(twice.blocks, pair.blocks):
            assert np.abs(A - B).max() < 1e-12

    def test_iid_pair_rotates_to_independent_halves(self, rng):
        part = Partition((2,))
        S = random_block_covariance(rng, part).blocks[0]
        pair = GaussianPair.independent(BlockCovariance((S,)), BlockCovariance((S,)))
        rot = rotate_pair(pair)
        J = rot.blocks[0]
        np.testing.assert_allclose(J[:2, 2:], 0.0, atol=1e-12)
        np.testing.assert_allclose(J[:2, :2], S, atol=1e-12)
        np.testing.assert_allclose(J[2:, 2:], S, atol=1e-12)

    def test_symmetric_cross_covariance_splits(self):
        S = np.array([[2.0, 0.3], [0.3, 1.5]])
        C = np.array([[0.5, 0.1], [0.1, 0.4]])
        J = np.block([[S, C], [C.T, S]])
        rot = rotate_pair(GaussianPair((J,)))
        out = rot.blocks[0]
        np.testing.assert_allclose(out[:2, :2], S + C, atol=1e-12)
        np.testing.assert_allclose(out[2:, 2:], S - C, atol=1e-12)
        np.testing.assert_allclose(out[:2, 2:], 0.0, atol=1e-12)

    def test_degenerate_pair_rejected(self):
        S = np.eye(1)
        J = np.block([[S, S], [S, S]])  # fully correlated copies
        with pytest.raises(ValueError):
            GaussianPair((J,))


class TestMixtures:
    def test_single_component_reduces(self, rng):
        datum = random_datum(rng)
        sig = random_block_covariance(rng, datum.partition)
        mix = GaussianMixture(np.array([1.0]), (sig,))
        p = PerturbationParams(0.02, 0.01)
        assert mixture_s(datum, mix, p) == objective_perturbed(datum, sig, p)

    def test_two_equal_components(self, rng):
        datum = random_datum(rng)
        sig = random_block_covariance(rng, datum.partition)
        mix = GaussianMixture(np.array([0.5, 0.5]), (sig, sig))
        p = PerturbationParams(0.0, 0.0)
        assert mixture_s(datum, mix, p) == pytest.approx(objective(datum, sig), abs=1e-12)

    def test_epi_scale_mixture_stays_at_zero(self):
        d = blepi.make_epi_datum(0.5, 1)
        comp1 = BlockCovariance.identity(d.partition)
        comp2 = comp1.scaled(2.0)
        mix = GaussianMixture(np.array([0.5, 0.5]), (comp1, comp2))
        assert mixture_s(d, mix, PerturbationParams(0, 0)) == pytest.approx(0.0, abs=1e-12)

    def test_mixture_never_beats_the_optimum(self, rng):
        datum = blepi.make_coupled_sums_datum(1.25, 0.5, 0.5, 0.5)
        res = solve_mg(datum)
        assert res.converged
        cap = sum(r * (r + 1) // 2 for r in datum.partition.blocks) + 1
        for n_comp in (1, 2, cap):
            w = rng.uniform(0.5, 1.0, n_comp)
            w /= w.sum()
            # renormalize exactly to satisfy the constructor's 1e-12 gate
            w[-1] = 1.0 - w[:-1].sum()
            comps = tuple(random_block_covariance(rng, datum.partition) for _ in range(n_comp))
            val = mixture_s(datum, GaussianMixture(w, comps), PerturbationParams(0, 0))
            assert val <= res.mg_value + 1e-6

    def test_component_cap_enforced(self, rng):
        datum = blepi.make_epi_datum(0.5, 1)
        cap = sum(r * (r + 1) // 2 for r in datum.partition.blocks) + 1  # = 3
        comps = tuple(
            random_block_covariance(rng, datum.partition) for _ in range(cap + 1)
        )
        w = np.full(cap + 1, 1.0 / (cap + 1))
        with pytest.raises(ValueError):
            GaussianMixture(w, comps)

    def test_weight_validation(self, rng):
        datum = blepi.make_epi_datum(0.5, 1)
        sig = random_block_covariance(rng, datum.partition)
        with pytest.raises(ValueError):
            GaussianMixture(np.array([0.6, 0.6]), (sig, sig))
        with pytest.raises(ValueError):
            GaussianMixture(np.array([1.2, -0.2]), (sig, sig))
