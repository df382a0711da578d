"""Differentially private ordinary least squares and its baselines."""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import rng as _rng
from .calibration import find_gamma, minimize_converted_rdp, threshold_tau
from .errors import DomainError, RankWarning, ShapeError, SingularError
from .mechanisms import Branch, DataMatrix, gauss_mix, min_eigenvalue, modified_gauss_mix
from .rdp import PrivacyBudget
from .rng import as_stream

COND_LIMIT = 1e12


class Method(str, enum.Enum):
    LINEAR_MIXING = "LinearMixing"
    ADASSP = "AdaSSP"
    SHEFFET = "Sheffet"
    SHEFFET_NEW = "SheffetNewAnalysis"
    RIDGE = "Ridge"
    LOGISTIC_MIXING = "LogisticMixing"
    OBJECTIVE_PERTURBATION = "ObjectivePerturbation"


@dataclass
class LabeledDataset:
    """Design matrix X (n x d), response Y (n,), and the public bounds on rows and responses."""

    X: np.ndarray
    Y: np.ndarray
    c_x: float
    c_y: float
    allow_underdetermined: bool = False

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1)
        n, d = self.X.shape
        if self.Y.shape[0] != n:
            raise ShapeError(f"X has {n} rows but Y has {self.Y.shape[0]} entries")
        if not (self.c_x > 0 and self.c_y > 0):
            raise DomainError("c_x and c_y must be positive")
        tol = 1 + 1e-9
        if n and np.linalg.norm(self.X, axis=1).max() > self.c_x * tol:
            raise DomainError("a row of X exceeds c_x")
        if n and np.abs(self.Y).max() > self.c_y * tol:
            raise DomainError("an entry of Y exceeds c_y")
        if n < d:
            if not self.allow_underdetermined:
                raise DomainError(f"need n >= d, got n={n}, d={d}")
            warnings.warn(f"underdetermined system n={n} < d={d}", stacklevel=2)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_arrays(cls, X, Y, **kw):
        """Build a dataset whose bounds are the observed maxima."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.asarray(Y, dtype=float).reshape(-1)
        c_x = float(np.linalg.norm(X, axis=1).max()) if len(X) else 1.0
        c_y = float(np.abs(Y).max()) if len(Y) else 1.0
        return cls(X, Y, c_x or 1.0, c_y or 1.0, **kw)


@dataclass
class FitResult:
    theta: np.ndarray
    method: Method
    empirical_loss: float
    seed: Optional[int] = None
    gamma_used: Optional[float] = None
    branch: Optional[str] = None
    eps: Optional[float] = None
    delta: Optional[float] = None
    k: Optional[int] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self, test_mse: Optional[float] = None) -> dict:
        out = {
            "method": Method(self.method).value,
            "eps": self.eps,
            "delta": self.delta,
            "k": self.k,
            "gamma_used": self.gamma_used,
            "branch": self.branch,
            "train_loss": self.empirical_loss,
            "test_mse": test_mse,
            "seed": self.seed,
        }
        out.update(self.extras)
        return out

    def to_json(self, test_mse: Optional[float] = None) -> str:
        return json.dumps(self.to_dict(test_mse))


def empirical_loss(data: LabeledDataset, theta) -> float:
    """Squared residual norm ||Y - X theta||^2."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != data.d:
        raise ShapeError(f"theta has {theta.shape[0]} entries, expected {data.d}")
    r = data.Y - data.X @ theta
    return float(r @ r)


def test_mse(X, Y, theta) -> float:
    r = np.asarray(Y) - np.asarray(X) @ np.asarray(theta)
    return float(np.mean(r * r))


test_mse.__test__ = False  # not a pytest test


def excess_risk_report(data: LabeledDataset, theta, theta_star, chi: float) -> float:
    """L(theta) - (1 + chi)^2 L(theta_star)."""
    return empirical_loss(data, theta) - (1 + chi) ** 2 * empirical_loss(data, theta_star)


def _finish(data, theta, method, **kw) -> FitResult:
    return FitResult(theta=theta, method=method, empirical_loss=empirical_loss(data, theta), **kw)


def ridge(data: LabeledDataset, nu: float = 0.0) -> FitResult:
    """Non-private ridge solution (X^T X + nu I)^{-1} X^T Y."""
    if nu < 0:
        raise DomainError(f"nu must be nonnegative, got {nu}")
    X, Y = data.X, data.Y
    if nu == 0 and np.linalg.matrix_rank(X) < data.d:
        raise SingularError("X is rank deficient and nu = 0")
    A = X.T @ X + nu * np.eye(data.d)
    theta = scipy.linalg.solve(A, X.T @ Y, assume_a="pos")
    return _finish(data, theta, Method.RIDGE, extras={"nu": nu})


def sketched_lstsq(A, b):
    """Least squares via QR; falls back to a pseudo-inverse when A is numerically singular.

    Returns ``(theta, rank_deficient)``.
    """
    A = np.atleast_2d(A)
    m, d = A.shape
    if m >= d:
        Q, R = np.linalg.qr(A)
        diag = np.abs(np.diag(R))
        if diag.min() > 0 and diag.max() / diag.min() < COND_LIMIT and np.linalg.cond(R) < COND_LIMIT:
            return scipy.linalg.solve_triangular(R, Q.T @ b), False
    warnings.warn("least-squares system is numerically singular; using pseudo-inverse",
                  RankWarning, stacklevel=3)
    return np.linalg.pinv(A, rcond=1.0 / COND_LIMIT) @ b, True


# ---------------------------------------------------------------------------
# LinearMixing

def linear_mixing_theta(data, budget: PrivacyBudget, k: int, rng, *, sketch=None,
                        noiseless: bool = False, strict_listing: bool = False,
                        sampler: str = "explicit"):
    """The private path of LinearMixing: calibrate, release once, solve on the release.

    Raw data is read only to build the joint matrix handed to the release.
    Returns ``(theta, info)``; ``info`` holds gamma, branch, and the rank flag.
    """
    k = int(k)
    cal = find_gamma(budget.eps, budget.delta, k)
    c_x, c_y = data.c_x, data.c_y
    joint = np.column_stack([data.X, data.Y])
    d = joint.shape[1] - 1
    bound = math.sqrt(c_x**2 + c_y**2)
    release = modified_gauss_mix(
        DataMatrix(joint, bound), k, cal.gamma, threshold_tau(budget.delta), cal.eta, rng,
        strict_listing=strict_listing, sketch=sketch, noiseless=noiseless,
        sampler=sampler,
    )
    del joint
    Xt, Yt = release.values[:, :d], release.values[:, d]
    theta, deficient = sketched_lstsq(Xt, Yt)
    info = {
        "gamma": cal.gamma,
        "eta": cal.eta,
        "eps_achieved": cal.eps_achieved,
        "branch": release.branch.value,
        "noise_std": release.noise_std_used,
        "lambda_tilde": release.lambda_tilde,
        "rank_deficient": deficient,
    }
    return theta, info


def linear_mixing(data: LabeledDataset, budget: PrivacyBudget, k: int, rng, **hooks) -> FitResult:
    """(eps, delta)-DP least squares from a single eigenvalue-assisted mixing release.

    Finds the smallest gamma whose total epsilon (with eta = gamma/sqrt(k)) fits
    the budget, releases the joint matrix [X, Y] with row bound
    sqrt(c_x^2 + c_y^2), and solves least squares on the released columns.
    """
    stream = as_stream(rng)
    theta, info = linear_mixing_theta(data, budget, k, stream, **hooks)
    return _finish(
        data, theta, Method.LINEAR_MIXING, seed=stream.seed, gamma_used=info["gamma"],
        branch=info["branch"], eps=budget.eps, delta=budget.delta, k=int(k),
        extras={"rank_deficient": info["rank_deficient"]},
    )


# ---------------------------------------------------------------------------
# AdaSSP

def sym_normal(d: int, gen: np.random.Generator) -> np.ndarray:
    """Symmetric matrix with i.i.d. N(0, 1) entries on and above the diagonal."""
    upper = np.triu(gen.standard_normal((d, d)))
    return upper + np.triu(upper, 1).T


def adassp(data: LabeledDataset, budget: PrivacyBudget, rho_fail: float = 0.05, rng=0,
           *, noiseless: bool = False) -> FitResult:
    """Adaptive sufficient-statistics perturbation with a private ridge level.

    The budget is split in three equal parts across the eigenvalue, X^T X and
    X^T Y releases.
    """
    if not 0 < rho_fail < 1:
        raise DomainError(f"rho_fail must lie in (0, 1), got {rho_fail}")
    stream = as_stream(rng)
    eps, delta = budget.eps, budget.delta
    X, Y, d = data.X, data.Y, data.d
    cx2 = data.c_x**2
    log6 = math.log(6 / delta)
    e3 = eps / 3

    z = 0.0 if noiseless else stream.generator(_rng.EIGEN).standard_normal()
    lam_min = min_eigenvalue(X.T @ X)
    lam_tilde = max(lam_min + math.sqrt(log6) * cx2 / e3 * z - log6 / e3 * cx2, 0.0)
    lam = max(0.0, math.sqrt(d * log6 * math.log(2 * d * d / rho_fail)) * cx2 / e3 - lam_tilde)

    xi1 = np.zeros((d, d)) if noiseless else sym_normal(d, stream.generator(_rng.MATRIX_NOISE))
    xi2 = np.zeros(d) if noiseless else stream.generator(_rng.NOISE_AUX).standard_normal(d)
    xtx = X.T @ X + math.sqrt(log6) * cx2 / e3 * xi1
    xty = X.T @ Y + math.sqrt(log6) * data.c_x * data.c_y / e3 * xi2
    A = xtx + lam * np.eye(d)
    try:
        theta = np.linalg.solve(A, xty)
    except np.linalg.LinAlgError:
        theta = np.linalg.lstsq(A, xty, rcond=None)[0]
    return _finish(data, theta, Method.ADASSP, seed=stream.seed, eps=eps, delta=delta,
                   extras={"lambda": lam, "lambda_tilde": lam_tilde})


# ---------------------------------------------------------------------------
# Sheffet's sketch-based algorithm and its recalibrated variant

def sheffet_legacy_gamma(eps: float, delta: float, k: int, c2: float) -> float:
    """4 (C_X^2 + C_Y^2)/eps * (sqrt(2k log(8/delta)) + 2 log(8/delta))."""
    L = math.log(8 / delta)
    return 4 * c2 / eps * (math.sqrt(2 * k * L) + 2 * L)


def sheffet_new_gamma(eps: float, delta: float, k: int, c2: float) -> float:
    """Smallest gamma with min_alpha converted RDP <= eps/2, in the same squared units.

    The RDP condition fixes a dimensionless gamma; multiplying by c2 puts it on
    the scale of lambda_min((X, Y)^T (X, Y)), matching the legacy formula.
    """
    target = eps / 2

    def f(g):
        return minimize_converted_rdp(k, g, delta)[1]

    lo = 1.0 + 2e-6
    if f(lo) <= target:
        return lo * c2
    hi = 2.0
    while f(hi) > target:
        lo, hi = hi, 2 * hi
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi * c2


def sheffet_alg(data: LabeledDataset, budget: PrivacyBudget, k: int, use_new_analysis: bool,
                rng, *, noiseless: bool = False) -> FitResult:
    """Threshold test on a Laplace-noised eigenvalue, then a plain or noised sketch.

    Follows the listing: gamma is on the squared data scale, the test compares
    lambda_min((X, Y)^T (X, Y)) with gamma + z + 4 C^2 log(1/delta)/eps, and the
    noised branch adds gamma * xi to the sketched columns.
    """
    stream = as_stream(rng)
    eps, delta = budget.eps, budget.delta
    k = int(k)
    c2 = data.c_x**2 + data.c_y**2
    joint = np.column_stack([data.X, data.Y])
    d = data.d
    lam = min_eigenvalue(joint.T @ joint)
    gamma = (sheffet_new_gamma if use_new_analysis else sheffet_legacy_gamma)(eps, delta, k, c2)
    scale = 4 * c2 / eps
    z = 0.0 if noiseless else stream.generator(_rng.THRESHOLD).laplace(0.0, scale)
    sk = gauss_mix(joint, k, 0.0, stream)
    if lam > gamma + z + scale * math.log(1 / delta):
        branch = "NoNoise"
        Xt, Yt = sk[:, :d], sk[:, d]
    else:
        branch = "Noised"
        noise = 0.0 if noiseless else gamma
        Xt = sk[:, :d] + noise * stream.generator(_rng.NOISE).standard_normal((k, d))
        Yt = sk[:, d] + noise * stream.generator(_rng.NOISE_AUX).standard_normal(k)
    theta, deficient = sketched_lstsq(Xt, Yt)
    method = Method.SHEFFET_NEW if use_new_analysis else Method.SHEFFET
    return _finish(data, theta, method, seed=stream.seed, gamma_used=gamma, branch=branch,
                   eps=eps, delta=delta, k=k, extras={"rank_deficient": deficient})
