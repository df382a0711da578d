"""RDP curve of the Gaussian mixing mechanism and the privacy conversions.

All logarithms are natural; every epsilon is in nats.

The mechanism releases ``S X + sigma * xi`` with a ``k x n`` Gaussian sketch
``S``. Each of the ``k`` output rows is ``N(0, X^T X + sigma^2 I)``, and zeroing
out row ``x`` changes the Renyi divergence only through the leverage-like
quantity ``t = x^T (X^T X + sigma^2 I)^{-1} x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, ValidityError


@dataclass(frozen=True)
class PrivacyBudget:
    eps: float
    delta: float

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise DomainError(f"eps must be positive and finite, got {self.eps}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class RdpPoint:
    alpha: float
    eps_alpha: float

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError(f"alpha must exceed 1, got {self.alpha}")
        if not self.eps_alpha >= 0:
            raise DomainError(f"eps_alpha must be nonnegative, got {self.eps_alpha}")


@dataclass(frozen=True)
class TcdpParams:
    rho: float
    w: float

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if not self.w > 1:
            raise DomainError(f"w must exceed 1, got {self.w}")


@dataclass(frozen=True)
class GaussMixParams:
    """Parameters of one Gaussian mixing release.

    ``gamma`` is the normalized scale ``(sigma^2 + scale_bound) / row_bound^2``.
    """

    k: int
    row_bound: float
    sigma: float
    scale_bound: float = 0.0

    def __post_init__(self):
        if int(self.k) < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if not self.row_bound > 0:
            raise DomainError(f"row_bound must be positive, got {self.row_bound}")
        if self.sigma < 0 or self.scale_bound < 0:
            raise DomainError("sigma and scale_bound must be nonnegative")

    @property
    def gamma(self) -> float:
        return (self.sigma**2 + self.scale_bound) / self.row_bound**2

    @classmethod
    def from_gamma(cls, k, gamma, row_bound, scale_bound=0.0):
        sigma2 = gamma * row_bound**2 - scale_bound
        if sigma2 < 0:
            raise DomainError("scale_bound already exceeds gamma * row_bound^2")
        return cls(k=k, row_bound=row_bound, sigma=math.sqrt(sigma2), scale_bound=scale_bound)


# ---------------------------------------------------------------------------
# numerically stable pieces

def _y_minus_log1p_y(y):
    """y - log(1 + y) for y >= 0 without cancellation at small y."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 0.05
    ys = y[small]
    # alternating series y^2/2 - y^3/3 + ...; 14 terms reach 1e-19 relative at 0.05
    acc = np.zeros_like(ys)
    p = ys * ys
    for j in range(2, 16):
        acc += (-1) ** j * p / j
        p = p * ys
    out[small] = acc
    out[~small] = y[~small] - np.log1p(y[~small])
    return out


def _neg_log1m_over_x_minus_1(x):
    """-log(1 - x)/x - 1 for 0 <= x < 1; equals x/2 + x^2/3 + ... ."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.05
    xs = x[small]
    acc = np.zeros_like(xs)
    p = xs.copy()
    for j in range(2, 16):
        acc += p / j
        p = p * xs
    out[small] = acc
    xl = x[~small]
    out[~small] = -np.log1p(-xl) / xl - 1.0
    return out


def _zero_out_curve(alpha, t, k):
    """k/(2(alpha-1)) * log((1-t)^alpha / (1 - alpha t)), written without cancellation.

    With y = t/(1-t) and x = (alpha-1) y the bracket divided by (alpha-1) is
    (y - log1p(y)) + y * (-log1p(-x)/x - 1), a sum of nonnegative terms.
    Requires 0 <= t and alpha * t < 1.
    """
    alpha = np.asarray(alpha, dtype=float)
    t = np.asarray(t, dtype=float)
    y = t / (1.0 - t)
    x = (alpha - 1.0) * y
    return 0.5 * k * (_y_minus_log1p_y(y) + y * _neg_log1m_over_x_minus_1(x))


def _zero_out_scalar(alpha, t, k):
    """Scalar twin of _zero_out_curve using math only (hot loop of the calibration)."""
    y = t / (1.0 - t)
    x = (alpha - 1.0) * y
    if y < 0.05:
        a, p = 0.0, y * y
        for j in range(2, 16):
            a += p / j if j % 2 == 0 else -p / j
            p *= y
    else:
        a = y - math.log1p(y)
    if x < 0.05:
        b, p = 0.0, x
        for j in range(2, 16):
            b += p / j
            p *= x
    else:
        b = -math.log1p(-x) / x - 1.0
    return 0.5 * k * (a + y * b)


def phi_unchecked(alpha, k, gamma):
    """Vectorized RDP curve; callers guarantee gamma > 1 and 1 < alpha < gamma."""
    return _zero_out_curve(alpha, 1.0 / np.asarray(gamma, dtype=float), k)


# ---------------------------------------------------------------------------
# public curve and conversions

def phi(alpha: float, k: int, gamma: float) -> float:
    """RDP of order ``alpha`` for a mixing release with normalized scale ``gamma``.

    Returns ``k*alpha/(2(alpha-1)) log(1 - 1/gamma) - k/(2(alpha-1)) log(1 - alpha/gamma)``.
    Valid for ``gamma > 1`` and ``1 < alpha < gamma``.
    """
    if not gamma > 1:
        raise DomainError(f"gamma must exceed 1, got {gamma}")
    if not 1 < alpha < gamma:
        raise DomainError(f"alpha must lie in (1, gamma={gamma}), got {alpha}")
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    return float(phi_unchecked(alpha, k, gamma))


def zero_out_divergence(t: float, alpha: float, k: int) -> float:
    """Exact divergence D_alpha(M(X) || M(X')) when X' zeroes a row with leverage t."""
    if not alpha > 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    if t < 0:
        raise DomainError(f"leverage t must be nonnegative, got {t}")
    if alpha * t >= 1:
        raise ValidityError(f"alpha * t = {alpha * t} >= 1; divergence is infinite")
    return float(_zero_out_curve(alpha, t, k))


def insertion_divergence(t: float, alpha: float, k: int) -> float:
    """Divergence for the reverse direction (X has the zero row, X' restores it).

    ``k/(2(alpha-1)) log((1+t)^alpha / (1 + alpha t))`` with t computed on X.
    """
    if not alpha > 1:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    if t < 0:
        raise DomainError(f"leverage t must be nonnegative, got {t}")
    return k / (2 * (alpha - 1)) * (alpha * math.log1p(t) - math.log1p(alpha * t))


def rdp_to_dp(point: RdpPoint, delta: float) -> float:
    """(eps, delta)-DP implied by one point of an RDP curve."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    a = point.alpha
    if not a > 1:
        raise DomainError(f"alpha must exceed 1, got {a}")
    return point.eps_alpha + math.log1p(-1.0 / a) - math.log(a * delta) / (a - 1.0)


def rdp_to_dp_unchecked(alpha, eps_alpha, delta):
    alpha = np.asarray(alpha, dtype=float)
    return eps_alpha + np.log1p(-1.0 / alpha) - (np.log(alpha) + math.log(delta)) / (alpha - 1.0)


def tcdp_to_dp(params: TcdpParams, delta: float) -> float:
    """(eps, delta)-DP implied by (rho, w)-tCDP."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    rho, w = params.rho, params.w
    log_inv = -math.log(delta)
    if log_inv <= (w - 1) ** 2 * rho:
        return rho + 2 * math.sqrt(rho * log_inv)
    return rho * w + log_inv / (w - 1)


def gaussmix_tcdp(k: int, gamma: float) -> TcdpParams:
    """tCDP parameters (k/(2 gamma^2), 2 gamma/5) of a mixing release; needs gamma > 5/2."""
    if not gamma > 2.5:
        raise DomainError(f"tCDP statement requires gamma > 5/2, got {gamma}")
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    return TcdpParams(rho=k / (2 * gamma**2), w=2 * gamma / 5)


def gaussian_mechanism_eps(sigma_over_sensitivity: float, delta: float) -> float:
    """Classical Gaussian-mechanism epsilon, sqrt(2 log(1.25/delta)) / sigma."""
    if not sigma_over_sensitivity > 0:
        raise DomainError(f"sigma must be positive, got {sigma_over_sensitivity}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(2 * math.log(1.25 / delta)) / sigma_over_sensitivity


# ---------------------------------------------------------------------------
# exact divergences (oracles)

def renyi_gaussian_pair(mu1, cov1, mu2, cov2, alpha: float) -> float:
    """Closed-form D_alpha(N(mu1, cov1) || N(mu2, cov2)).

    Raises ValidityError unless ``alpha cov1^{-1} + (1 - alpha) cov2^{-1}`` is
    positive definite.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=float))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=float))
    dim = mu1.shape[0]
    if mu2.shape != (dim,) or cov1.shape != (dim, dim) or cov2.shape != (dim, dim):
        raise ShapeError("mean and covariance shapes disagree")
    if alpha == 1 or not alpha > 0:
        raise DomainError(f"alpha must be positive and different from 1, got {alpha}")

    for c in (cov1, cov2):
        if np.linalg.eigvalsh(c).min() <= 0:
            raise ValidityError("covariances must be positive definite")
    p1 = np.linalg.inv(cov1)
    p2 = np.linalg.inv(cov2)
    mixed = alpha * p1 + (1 - alpha) * p2
    ev = np.linalg.eigvalsh(0.5 * (mixed + mixed.T))
    scale = np.abs(ev).mean()
    if ev.min() <= 1e-12 * scale:
        raise ValidityError(f"alpha = {alpha} outside the admissible range for this pair")

    cov_a = cov1 + alpha * (cov2 - cov1)
    diff = mu1 - mu2
    quad = 0.5 * alpha * diff @ np.linalg.solve(cov_a, diff)
    _, ld_a = np.linalg.slogdet(cov_a)
    _, ld_1 = np.linalg.slogdet(cov1)
    _, ld_2 = np.linalg.slogdet(cov2)
    return float(quad - (ld_a - (1 - alpha) * ld_1 - alpha * ld_2) / (2 * (alpha - 1)))


def leverage(X, removed_row: int, sigma: float) -> float:
    """t = x_i^T (X^T X + sigma^2 I)^{-1} x_i via a symmetric solve."""
    import scipy.linalg

    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    gram = X.T @ X + sigma**2 * np.eye(d)
    x = X[removed_row]
    return float(x @ scipy.linalg.solve(gram, x, assume_a="pos"))


def exact_renyi_gaussmix(X, removed_row: int, sigma: float, k: int, alpha: float) -> float:
    """Exact D_alpha between releases on X and on X with ``removed_row`` zeroed out."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("X must be a matrix")
    t = leverage(X, removed_row, sigma)
    return zero_out_divergence(t, alpha, k)
