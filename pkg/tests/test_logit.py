"""Logit choice map: values, Jacobian, Lipschitz constant."""

import numpy as np
import pytest

from paraflow import lipschitz_bound, softmax, softmax_jacobian


class TestSoftmax:
    def test_equal_costs_give_uniform(self):
        s = softmax(np.full(5, 3.7), eta=2.0)
        assert np.allclose(s, 0.2, atol=1e-15)

    @pytest.mark.parametrize("eta", [0.5, 1.0, 20.0])
    def test_two_path_hand_value(self, eta):
        # exp(0) / (exp(0) + exp(-ln 3)) = 1 / (1 + 1/3) = 0.75
        z = np.array([0.0, np.log(3.0) / eta])
        s = softmax(z, eta)
        assert s[0] == pytest.approx(0.75, rel=1e-12)
        assert s[1] == pytest.approx(0.25, rel=1e-12)

    def test_eta_zero_ignores_costs(self, rng):
        z = rng.normal(0.0, 10.0, 7)
        assert np.allclose(softmax(z, 0.0), 1.0 / 7.0, atol=1e-15)

    def test_simplex_and_positivity(self, rng):
        for _ in range(100):
            z = rng.normal(0.0, 5.0, rng.integers(2, 9))
            s = softmax(z, rng.uniform(0.0, 30.0))
            assert abs(s.sum() - 1.0) <= 1e-12
            assert np.all(s > 0.0)

    def test_shift_invariance(self, rng):
        for _ in range(50):
            z = rng.normal(0.0, 3.0, 5)
            c = rng.normal(0.0, 100.0)
            assert np.allclose(softmax(z, 4.0), softmax(z + c, 4.0), atol=1e-12)

    def test_overflow_safety(self):
        # eta * u around 137 (and far beyond) must not overflow
        s = softmax(np.array([6.87, 6.0, 6.1]), eta=20.0)
        assert np.isfinite(s).all() and abs(s.sum() - 1.0) <= 1e-12
        s = softmax(np.array([1e4, -1e4, 0.0]), eta=50.0)
        assert np.isfinite(s).all() and abs(s.sum() - 1.0) <= 1e-12

    def test_batched_rows(self, rng):
        z = rng.normal(0.0, 2.0, (6, 4))
        s = softmax(z, 3.0)
        assert np.allclose(s.sum(axis=1), 1.0, atol=1e-12)
        for i in range(6):
            assert np.allclose(s[i], softmax(z[i], 3.0), atol=0.0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            softmax(np.array([1.0, np.nan]), 1.0)
        with pytest.raises(ValueError):
            softmax(np.array([1.0, np.inf]), 1.0)
        with pytest.raises(ValueError):
            softmax(np.array([1.0, 2.0]), -1.0)


class TestJacobian:
    def test_uniform_two_path_closed_form(self):
        jac = softmax_jacobian(np.array([5.0, 5.0]), eta=1.0)
        expected = np.array([[-0.25, 0.25], [0.25, -0.25]])
        assert np.allclose(jac, expected, atol=1e-14)

    def test_eta_zero_gives_zero_matrix(self, rng):
        jac = softmax_jacobian(rng.normal(0.0, 1.0, 4), eta=0.0)
        assert np.allclose(jac, 0.0, atol=0.0)

    def test_rows_sum_to_zero_and_symmetric(self, rng):
        for _ in range(30):
            jac = softmax_jacobian(rng.normal(0.0, 2.0, 6), eta=rng.uniform(0.1, 10.0))
            assert np.allclose(jac.sum(axis=1), 0.0, atol=1e-12)
            assert np.allclose(jac, jac.T, atol=1e-14)

    def test_matches_central_differences(self, rng):
        h = 1e-5
        for _ in range(10):
            z = rng.normal(0.0, 1.0, 5)
            eta = rng.uniform(0.5, 4.0)
            jac = softmax_jacobian(z, eta)
            fd = np.empty((5, 5))
            for k in range(5):
                dz = np.zeros(5)
                dz[k] = h
                fd[:, k] = (softmax(z + dz, eta) - softmax(z - dz, eta)) / (2 * h)
            assert np.max(np.abs(jac - fd)) <= 1e-6

    def test_spectral_norm_attains_half_eta_at_uniform_pair(self):
        # at sigma = (1/2, 1/2) the Gershgorin bound 2 eta sigma (1-sigma) is tight
        eta = 2.0
        jac = softmax_jacobian(np.zeros(2), eta)
        assert np.linalg.norm(jac, 2) == pytest.approx(eta / 2.0, rel=1e-12)


class TestLipschitz:
    def test_bound_values(self):
        assert lipschitz_bound(20.0) == 10.0
        assert lipschitz_bound(1.0) == 0.5
        with pytest.raises(ValueError):
            lipschitz_bound(-0.5)

    def test_sampled_ratios_stay_below_half_eta(self, rng):
        eta = 1.0
        bound = lipschitz_bound(eta)
        z1 = rng.normal(0.0, 3.0, (10_000, 5))
        z2 = rng.normal(0.0, 3.0, (10_000, 5))
        num = np.linalg.norm(softmax(z1, eta) - softmax(z2, eta), axis=1)
        den = np.linalg.norm(z1 - z2, axis=1)
        assert np.all(num <= bound * den + 1e-9)

    def test_jacobian_spectral_norm_below_half_eta(self, rng):
        for _ in range(200):
            eta = rng.uniform(0.1, 25.0)
            jac = softmax_jacobian(rng.normal(0.0, 2.0, 6), eta)
            assert np.linalg.norm(jac, 2) <= eta / 2.0 + 1e-9
