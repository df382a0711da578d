"""Private logistic regression through a quadratic surrogate, plus objective perturbation."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import rng as _rng
from .errors import ConvergenceWarning, DegenerateError, DomainError, ShapeError
from .regression import FitResult, LabeledDataset, Method, linear_mixing_theta
from .rdp import PrivacyBudget
from .rng import as_stream

DEFAULT_Q = 4.0
DEFAULT_GRID = 1001


@dataclass(frozen=True)
class SurrogateCoeffs:
    b0: float
    b1: float
    b2: float
    q_bound: float
    interval_Q: float

    @property
    def response_scale(self) -> float:
        """-b1/(2 b2): the factor mapping a least-squares fit on labels to the surrogate minimizer."""
        return -self.b1 / (2 * self.b2)

    def __call__(self, s):
        return self.b0 + self.b1 * s + self.b2 * np.asarray(s) ** 2


@dataclass
class BinaryLabeledDataset:
    X: np.ndarray
    Y: np.ndarray
    c_x: float

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1)
        if self.Y.shape[0] != self.X.shape[0]:
            raise ShapeError("X and Y lengths differ")
        if not np.all(np.isin(self.Y, (-1.0, 1.0))):
            raise DomainError("labels must be -1 or +1")
        if not self.c_x > 0:
            raise DomainError("c_x must be positive")
        if len(self.X) and np.linalg.norm(self.X, axis=1).max() > self.c_x * (1 + 1e-9):
            raise DomainError("a row of X exceeds c_x")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def as_regression(self) -> LabeledDataset:
        return LabeledDataset(self.X, self.Y, self.c_x, 1.0, allow_underdetermined=True)

    @classmethod
    def from_labeled(cls, data: LabeledDataset):
        return cls(data.X, np.sign(data.Y) + (data.Y == 0), data.c_x)


def softplus_neg(s):
    """log(1 + exp(-s)), overflow-safe."""
    return np.logaddexp(0.0, -np.asarray(s, dtype=float))


def fit_quadratic_surrogate(Q: float = DEFAULT_Q, grid_points: int = DEFAULT_GRID) -> SurrogateCoeffs:
    """Least-squares quadratic fit of log(1 + e^{-s}) on a uniform grid over [-Q, Q]."""
    if not Q > 0:
        raise DomainError(f"Q must be positive, got {Q}")
    if grid_points < 3:
        raise DegenerateError("need at least 3 grid points for a quadratic fit")
    s = np.linspace(-Q, Q, int(grid_points))
    u = s / Q  # fit in [-1, 1] to keep the Vandermonde well conditioned
    V = np.column_stack([np.ones_like(u), u, u * u])
    target = softplus_neg(s)
    c, *_ = np.linalg.lstsq(V, target, rcond=None)
    b0, b1, b2 = c[0], c[1] / Q, c[2] / Q**2
    if not b2 > 0:
        raise DegenerateError("fitted quadratic is not convex")
    q_bound = float(np.abs(target - (b0 + b1 * s + b2 * s * s)).max())
    return SurrogateCoeffs(float(b0), float(b1), float(b2), q_bound, float(Q))


def surrogate_loss(data, theta, coeffs: SurrogateCoeffs) -> float:
    """b0 + b1 theta^T (X^T Y / n) + b2 theta^T (X^T X / n) theta."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != data.X.shape[1]:
        raise ShapeError("theta dimension does not match X")
    n = data.X.shape[0]
    Xt = data.X @ theta
    return float(coeffs.b0 + coeffs.b1 * (Xt @ data.Y) / n + coeffs.b2 * (Xt @ Xt) / n)


def surrogate_argmin_exact(data, coeffs: SurrogateCoeffs, jitter: float = 1e-6) -> np.ndarray:
    """-(b1/(2 b2)) (X^T X)^{-1} X^T Y; adds ``jitter * I`` when X^T X is singular."""
    X, Y = data.X, data.Y
    G = X.T @ X
    rhs = X.T @ Y
    if np.linalg.matrix_rank(X) < X.shape[1]:
        warnings.warn("X^T X is singular; adding jitter", stacklevel=2)
        G = G + jitter * np.eye(X.shape[1])
    return coeffs.response_scale * np.linalg.solve(G, rhs)


def logistic_loss(data, theta) -> float:
    """Mean of log(1 + exp(-y_i x_i^T theta))."""
    s = data.Y * (data.X @ np.asarray(theta, dtype=float))
    return float(np.mean(softplus_neg(s)))


def accuracy(X, Y, theta) -> float:
    pred = np.where(np.asarray(X) @ np.asarray(theta) >= 0, 1.0, -1.0)
    return float(np.mean(pred == np.asarray(Y)))


def surrogate_violations(data, theta, Q: float) -> int:
    """Number of training points whose margin |y x^T theta| leaves [-Q, Q]."""
    return int(np.sum(np.abs(data.Y * (data.X @ theta)) > Q))


def logistic_mixing(data: BinaryLabeledDataset, budget: PrivacyBudget, k: int,
                    Q: float = DEFAULT_Q, rng=0, **hooks) -> FitResult:
    """DP logistic regression: run LinearMixing on (X, y) with C_Y = 1, rescale by -b1/(2 b2).

    The rescaling factor depends only on Q, so the output inherits the
    linear-regression privacy guarantee by post-processing.
    """
    stream = as_stream(rng)
    coeffs = fit_quadratic_surrogate(Q)
    raw, info = linear_mixing_theta(data.as_regression(), budget, k, stream, **hooks)
    theta = coeffs.response_scale * raw
    return FitResult(
        theta=theta, method=Method.LOGISTIC_MIXING, empirical_loss=logistic_loss(data, theta),
        seed=stream.seed, gamma_used=info["gamma"], branch=info["branch"],
        eps=budget.eps, delta=budget.delta, k=int(k),
        extras={"Q": coeffs.interval_Q, "b0": coeffs.b0, "b1": coeffs.b1, "b2": coeffs.b2,
                "q_bound": coeffs.q_bound,
                "surrogate_violations": surrogate_violations(data, theta, Q)},
    )


def objective_perturbation_params(eps: float, delta: float, c_x: float):
    """Noise std sqrt(4 eps + 8 log(2/delta))/eps * C_X and ridge Delta = C_X^2/(2 eps)."""
    sigma = math.sqrt(4 * eps + 8 * math.log(2 / delta)) / eps * c_x
    return sigma, c_x**2 / (2 * eps)


def objective_perturbation(data: BinaryLabeledDataset, budget: PrivacyBudget, rng=0, *,
                           noiseless: bool = False, max_iter: int = 500,
                           tol: float = 1e-6) -> FitResult:
    """Minimize the mean logistic loss plus a random linear term b^T theta / n and ridge Delta/(2n)."""
    stream = as_stream(rng)
    X, Y = data.X, data.Y
    n, d = X.shape
    sigma, ridge = objective_perturbation_params(budget.eps, budget.delta, data.c_x)
    b = np.zeros(d) if noiseless else sigma * stream.generator(_rng.PERTURB).standard_normal(d)
    YX = Y[:, None] * X

    def fun(theta):
        s = YX @ theta
        val = np.mean(np.logaddexp(0.0, -s)) + (b @ theta) / n + ridge / (2 * n) * (theta @ theta)
        w = -0.5 * (1.0 - np.tanh(0.5 * s))  # -sigmoid(-s)
        grad = YX.T @ w / n + b / n + ridge / n * theta
        return val, grad

    res = scipy.optimize.minimize(fun, np.zeros(d), jac=True, method="L-BFGS-B",
                                  options={"maxiter": max_iter, "gtol": tol, "ftol": 0.0})
    converged = bool(np.linalg.norm(res.jac, np.inf) <= tol)
    if not converged and res.nit >= max_iter:
        warnings.warn(f"objective perturbation hit the {max_iter}-iteration cap",
                      ConvergenceWarning, stacklevel=2)
    theta = res.x
    return FitResult(
        theta=theta, method=Method.OBJECTIVE_PERTURBATION,
        empirical_loss=logistic_loss(data, theta), seed=stream.seed,
        eps=budget.eps, delta=budget.delta,
        extras={"iterations": int(res.nit), "converged": converged,
                "grad_norm": float(np.linalg.norm(res.jac))},
    )
