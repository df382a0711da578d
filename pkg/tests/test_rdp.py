import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussmix.errors import DomainError, ShapeError, ValidityError
from gaussmix.rdp import (GaussMixParams, PrivacyBudget, RdpPoint, TcdpParams,
                          exact_renyi_gaussmix, gaussian_mechanism_eps, gaussmix_tcdp,
                          insertion_divergence, leverage, phi, rdp_to_dp, renyi_gaussian_pair,
                          tcdp_to_dp, zero_out_divergence)

from conftest import semi_orthogonal

mp.mp.dps = 40


def phi_mp(alpha, k, gamma):
    a, g = mp.mpf(alpha), mp.mpf(gamma)
    return k * a / (2 * (a - 1)) * mp.log(1 - 1 / g) - k / (2 * (a - 1)) * mp.log(1 - a / g)


# values frozen from 50-digit mpmath evaluations of the closed forms
PHI_2_1_10 = 0.0062112599992785766
RDP_TO_DP_CASE = 10.132842363849616
TCDP_SECOND_BRANCH = 3.8576418216567428
TCDP_FIRST_BRANCH = 35.480910240819797
GAUSS_EPS_1 = 4.8448052626053894
GAUSS_EPS_10 = 0.25372724823590393
SINGLE_ROW_DIV = 0.032269260568785586


class TestTypes:
    def test_budget_validation(self):
        PrivacyBudget(1.0, 1e-5)
        with pytest.raises(DomainError):
            PrivacyBudget(0.0, 1e-5)
        with pytest.raises(DomainError):
            PrivacyBudget(1.0, 1.0)

    def test_rdp_point_and_tcdp_validation(self):
        with pytest.raises(DomainError):
            RdpPoint(1.0, 0.1)
        with pytest.raises(DomainError):
            RdpPoint(2.0, -0.1)
        with pytest.raises(DomainError):
            TcdpParams(0.0, 2.0)
        with pytest.raises(DomainError):
            TcdpParams(1.0, 1.0)

    def test_gaussmix_params_gamma(self):
        p = GaussMixParams(k=3, row_bound=2.0, sigma=3.0, scale_bound=4.0)
        assert p.gamma == pytest.approx((9 + 4) / 4)
        q = GaussMixParams.from_gamma(3, p.gamma, 2.0, 4.0)
        assert q.sigma == pytest.approx(3.0)
        with pytest.raises(DomainError):
            GaussMixParams.from_gamma(1, 1.0, 1.0, 5.0)


class TestPhi:
    def test_spot_value(self):
        assert phi(2, 1, 10) == pytest.approx(PHI_2_1_10, rel=1e-12)

    def test_linear_in_k(self):
        assert phi(2, 100, 10) == pytest.approx(100 * PHI_2_1_10, rel=1e-12)

    def test_near_alpha_one(self):
        v = phi(1 + 1e-6, 5, 50)
        assert 0 <= v <= 1e-3
        assert v == pytest.approx(float(phi_mp(mp.mpf(1) + mp.mpf("1e-6"), 5, 50)), rel=1e-6)

    @pytest.mark.parametrize("alpha,gamma", [(1.5, 2.0), (1.0000001, 3.0), (99.999999, 100.0),
                                             (2.0, 1e6), (500.0, 1e4)])
    def test_matches_extended_precision(self, alpha, gamma):
        assert phi(alpha, 3, gamma) == pytest.approx(float(phi_mp(alpha, 3, gamma)), rel=1e-9)

    @pytest.mark.parametrize("args", [(1.0, 1, 10), (10.0, 1, 10), (11.0, 1, 10), (1.5, 1, 1.0),
                                      (1.5, 0, 10)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            phi(*args)

    @given(st.floats(1.01, 1e4), st.floats(1e-6, 1 - 1e-6), st.integers(1, 1000))
    def test_nonnegative_and_linear(self, gamma, u, k):
        alpha = 1 + u * (gamma - 1)
        v = phi(alpha, k, gamma)
        assert v >= 0
        assert v == pytest.approx(k * phi(alpha, 1, gamma), rel=1e-12)

    @given(st.floats(1.5, 1e3))
    def test_monotone_in_alpha(self, gamma):
        alphas = 1 + (gamma - 1) * np.linspace(1e-6, 1 - 1e-6, 200)
        vals = [phi(a, 1, gamma) for a in alphas]
        assert np.all(np.diff(vals) >= -1e-15 * np.abs(vals[1:]))

    @given(st.floats(2.5 + 1e-6, 1e4), st.floats(1e-6, 1.0), st.integers(1, 100))
    def test_tcdp_domination(self, gamma, u, k):
        alpha = 1 + u * (2 * gamma / 5 - 1)
        if alpha <= 1:
            return
        assert phi(alpha, k, gamma) <= k * alpha / (2 * gamma**2) + 1e-12


class TestConversions:
    def test_rdp_to_dp_values(self):
        assert rdp_to_dp(RdpPoint(2, PHI_2_1_10), 1e-5) == pytest.approx(RDP_TO_DP_CASE, abs=1e-4)
        assert rdp_to_dp(RdpPoint(2, 0.0), 0.05) == pytest.approx(math.log(5), rel=1e-12)
        base = rdp_to_dp(RdpPoint(2, PHI_2_1_10), 1e-5)
        assert rdp_to_dp(RdpPoint(2, PHI_2_1_10 + 1), 1e-5) == pytest.approx(base + 1, rel=1e-14)
        with pytest.raises(DomainError):
            rdp_to_dp(RdpPoint(2, 0.0), 0.0)

    def test_tcdp_to_dp_branches(self):
        assert tcdp_to_dp(TcdpParams(0.005, 4), 1e-5) == pytest.approx(TCDP_SECOND_BRANCH, abs=1e-4)
        assert tcdp_to_dp(TcdpParams(20, 2), 0.05) == pytest.approx(TCDP_FIRST_BRANCH, rel=1e-12)
        r = 0.3
        assert tcdp_to_dp(TcdpParams(r, 1e9), 1e-5) == pytest.approx(
            r + 2 * math.sqrt(r * math.log(1e5)), rel=1e-12)
        with pytest.raises(DomainError):
            tcdp_to_dp(TcdpParams(1, 2), 1.5)

    def test_gaussmix_tcdp(self):
        p = gaussmix_tcdp(1, 10)
        assert (p.rho, p.w) == (pytest.approx(0.005), pytest.approx(4.0))
        p = gaussmix_tcdp(10, 100)
        assert (p.rho, p.w) == (pytest.approx(5e-4), pytest.approx(40.0))
        with pytest.raises(DomainError):
            gaussmix_tcdp(1, 2.5)

    def test_gaussian_mechanism(self):
        assert gaussian_mechanism_eps(1, 1e-5) == pytest.approx(GAUSS_EPS_1, abs=1e-4)
        assert gaussian_mechanism_eps(GAUSS_EPS_1, 1e-5) == pytest.approx(1.0, rel=1e-12)
        assert gaussian_mechanism_eps(10, 0.05) == pytest.approx(GAUSS_EPS_10, abs=1e-4)
        with pytest.raises(DomainError):
            gaussian_mechanism_eps(0, 1e-5)


def _renyi_quadrature(mu1, c1, mu2, c2, alpha, half_width=9.0, pts=121):
    """D_alpha by brute-force integration of p1^alpha p2^(1 - alpha) on a 3-D grid."""
    g = np.linspace(-half_width, half_width, pts)
    h = g[1] - g[0]
    Z = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)

    def logpdf(mu, c):
        r = Z - mu
        sol = np.linalg.solve(c, r.T).T
        return -0.5 * np.sum(r * sol, axis=1) - 0.5 * np.log(np.linalg.det(2 * np.pi * c))

    log_int = alpha * logpdf(mu1, c1) + (1 - alpha) * logpdf(mu2, c2)
    m = log_int.max()
    total = np.exp(log_int - m).sum() * h**3
    return (m + np.log(total)) / (alpha - 1)


class TestRenyiPair:
    def test_identical(self):
        assert renyi_gaussian_pair(np.zeros(3), np.eye(3), np.zeros(3), np.eye(3), 3.7) == pytest.approx(0, abs=1e-14)

    def test_mean_shift(self):
        assert renyi_gaussian_pair([1.0, 0], np.eye(2), [0.0, 0], np.eye(2), 2) == pytest.approx(1.0)

    def test_quadrature_oracle(self, np_rng):
        A = np_rng.standard_normal((3, 3))
        B = np_rng.standard_normal((3, 3))
        c1 = A @ A.T / 3 + np.eye(3)
        c2 = B @ B.T / 3 + np.eye(3)
        mu1, mu2 = np.array([0.3, -0.2, 0.1]), np.array([-0.1, 0.2, 0.0])
        got = renyi_gaussian_pair(mu1, c1, mu2, c2, 1.5)
        assert got == pytest.approx(_renyi_quadrature(mu1, c1, mu2, c2, 1.5), abs=1e-3)

    def test_invalid_order(self):
        with pytest.raises(ValidityError):
            renyi_gaussian_pair(np.zeros(1), [[4.0]], np.zeros(1), [[1.0]], 5.0)
        with pytest.raises(ShapeError):
            renyi_gaussian_pair(np.zeros(2), np.eye(2), np.zeros(3), np.eye(3), 2.0)


class TestExactDivergence:
    def test_single_row(self):
        X = np.array([[1.0, 0.0]])
        assert leverage(X, 0, 2.0) == pytest.approx(0.2)
        v = exact_renyi_gaussmix(X, 0, 2.0, 1, 2.0)
        assert v == pytest.approx(SINGLE_ROW_DIV, rel=1e-12)
        cov1 = X.T @ X + 4 * np.eye(2)
        cov2 = 4 * np.eye(2)
        assert v == pytest.approx(renyi_gaussian_pair(np.zeros(2), cov1, np.zeros(2), cov2, 2.0), rel=1e-10)

    def test_zero_row(self):
        X = np.array([[0.0, 0.0], [1.0, 0.5]])
        assert exact_renyi_gaussmix(X, 0, 1.0, 4, 3.0) == 0.0

    def test_invalid_order(self):
        with pytest.raises(ValidityError):
            zero_out_divergence(0.5, 2.0, 1)
        with pytest.raises(DomainError):
            exact_renyi_gaussmix(np.eye(2), 0, 0.0, 1, 2.0)

    @pytest.mark.parametrize("d", [2, 3, 5])
    @pytest.mark.parametrize("gamma", [5.0, 10.0, 50.0])
    def test_tightness(self, d, gamma):
        c = 1.7
        X = semi_orthogonal(d, c, seed=d)
        sigma = math.sqrt((gamma - 1) * c * c)
        for a in np.linspace(1.01, gamma - 0.01, 7):
            assert exact_renyi_gaussmix(X, 1, sigma, 3, a) == pytest.approx(phi(a, 3, gamma), abs=1e-9)

    @pytest.mark.parametrize("d,k", [(1, 1), (2, 2), (3, 3), (2, 3)])
    def test_kronecker_cross_oracle(self, np_rng, d, k):
        X = np_rng.standard_normal((4, d))
        sigma, alpha = 0.8, 1.7
        Xp = X.copy()
        Xp[2] = 0
        s1 = X.T @ X + sigma**2 * np.eye(d)
        s2 = Xp.T @ Xp + sigma**2 * np.eye(d)
        big1, big2 = np.kron(np.eye(k), s1), np.kron(np.eye(k), s2)
        z = np.zeros(k * d)
        want = renyi_gaussian_pair(z, big1, z, big2, alpha)
        assert exact_renyi_gaussmix(X, 2, sigma, k, alpha) == pytest.approx(want, abs=1e-9)

    def test_oracle_dominance_random(self, np_rng):
        for _ in range(100):
            n, d = np_rng.integers(2, 8), np_rng.integers(1, 4)
            X = np_rng.standard_normal((n, d))
            X /= np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1.0)
            sigma = np_rng.uniform(1.0, 4.0)
            lam = max(np.linalg.eigvalsh(X.T @ X)[0], 0.0)
            gamma = lam + sigma**2  # C = 1
            alpha = 1 + np_rng.uniform(0.01, 0.99) * (gamma - 1)
            row = int(np_rng.integers(n))
            assert exact_renyi_gaussmix(X, row, sigma, 2, alpha) <= phi(alpha, 2, gamma) + 1e-12

    @given(st.floats(1e-6, 0.999), st.floats(1e-3, 1 - 1e-3), st.integers(1, 50))
    def test_insertion_below_zero_out(self, t, u, k):
        alpha = 1 + u * (1 / t - 1)
        if alpha <= 1 or alpha * t >= 1:
            return
        ins = insertion_divergence(t, alpha, k)
        assert 0 <= ins <= zero_out_divergence(t, alpha, k) + 1e-12
