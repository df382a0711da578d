"""Randomized releases built on Gaussian sketching.

``gamma`` is always dimensionless here: the additive noise variance plus the
(private) eigenvalue floor equals ``gamma * row_bound**2``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as _rng
from .errors import DomainError, ShapeError, SymmetryError
from .rng import RngStream, as_stream


class Branch(str, enum.Enum):
    LOW_GAMMA = "LowGamma"
    EIG_ASSISTED = "EigAssisted"


@dataclass
class DataMatrix:
    """A data matrix with a declared bound on every row's Euclidean norm."""

    values: np.ndarray
    row_bound: float

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not self.row_bound > 0:
            raise DomainError(f"row_bound must be positive, got {self.row_bound}")
        norms = np.linalg.norm(self.values, axis=1)
        if norms.size and norms.max() > self.row_bound * (1 + 1e-9):
            i = int(np.argmax(norms))
            raise DomainError(
                f"row {i} has norm {norms[i]:.6g}, above row_bound {self.row_bound:.6g}"
            )

    @property
    def shape(self):
        return self.values.shape


@dataclass
class SketchRelease:
    values: np.ndarray
    k: int
    noise_std_used: float
    branch: Branch
    lambda_tilde: Optional[float] = None


def _as_data(X, row_bound=None) -> DataMatrix:
    if isinstance(X, DataMatrix):
        return X
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if row_bound is None:
        row_bound = float(np.linalg.norm(X, axis=1).max()) or 1.0
    return DataMatrix(X, row_bound)


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got {A.shape}")
    scale = max(np.abs(A).max(), 1.0)
    if np.abs(A - A.T).max() > 1e-9 * scale:
        raise SymmetryError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


def draw_sketch(k: int, n: int, rng: RngStream) -> np.ndarray:
    return as_stream(rng).generator(_rng.SKETCH).standard_normal((k, n))


SAMPLERS = ("explicit", "gram")


def _gram_root(X) -> np.ndarray:
    """R with R R^T = X^T X, from a symmetric eigendecomposition."""
    w, V = np.linalg.eigh(X.T @ X)
    return V * np.sqrt(np.clip(w, 0.0, None))


def gauss_mix(X, k: int, sigma: float, rng, *, sketch=None, sampler: str = "explicit") -> np.ndarray:
    """Release ``S X + sigma * xi`` with independent standard-normal S (k x n) and xi (k x d).

    With ``sampler="gram"`` the product S X is drawn from its exact law instead:
    its rows are i.i.d. N(0, X^T X), so ``Z R^T`` with Z a k x d standard-normal
    matrix and R R^T = X^T X has the same distribution at O(n d^2 + k d^2) cost.

    ``sketch`` replaces S; it exists for plumbing tests (an identity sketch with
    k = n makes the release equal X + sigma * xi) and voids any privacy claim.
    """
    X = X.values if isinstance(X, DataMatrix) else np.atleast_2d(np.asarray(X, dtype=float))
    if int(k) < 1:
        raise DomainError(f"k must be positive, got {k}")
    if sigma < 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    if sampler not in SAMPLERS:
        raise DomainError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    stream = as_stream(rng)
    n, d = X.shape
    if sampler == "gram" and sketch is None:
        Z = stream.generator(_rng.SKETCH).standard_normal((k, d))
        out = Z @ _gram_root(X).T
    else:
        S = draw_sketch(k, n, stream) if sketch is None else np.asarray(sketch, dtype=float)
        if S.shape != (k, n):
            raise ShapeError(f"sketch must be {(k, n)}, got {S.shape}")
        out = S @ X
    if sigma > 0:
        out += sigma * stream.generator(_rng.NOISE).standard_normal((k, d))
    return out


def private_min_eig(X, eta: float, tau: float, rng) -> float:
    """Private lower estimate ``max(lambda_min(X^T X) - eta C^2 (tau - z), 0)`` with z ~ N(0, 1).

    The eigenvalue has sensitivity C^2 under zero-out neighbors, so the release
    costs ``sqrt(2 log(1.25/delta'))/eta`` for confidence delta'. It exceeds the
    true eigenvalue only when z >= tau.
    """
    data = _as_data(X)
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    lam = min_eigenvalue(data.values.T @ data.values)
    z = as_stream(rng).generator(_rng.EIGEN).standard_normal()
    return max(lam - eta * data.row_bound**2 * (tau - z), 0.0)


def modified_gauss_mix(
    X,
    k: int,
    gamma: float,
    tau: float,
    eta: float,
    rng,
    *,
    strict_listing: bool = False,
    sketch=None,
    noiseless: bool = False,
    sampler: str = "explicit",
) -> SketchRelease:
    """Mixing release whose noise is reduced by a private eigenvalue floor.

    If ``gamma <= tau`` the noise std is ``sqrt(gamma) * C`` (``gamma * C`` with
    ``strict_listing``). Otherwise the release spends part of the budget on
    ``lambda_tilde = private_min_eig(X, eta, tau)`` and adds noise with std
    ``sqrt(max(gamma * C^2 - lambda_tilde, 0))``, so noise variance plus the
    certified eigenvalue reaches ``gamma * C^2``.

    ``sketch`` and ``noiseless`` are test hooks; either one voids privacy.
    ``sampler`` is passed to :func:`gauss_mix`.
    """
    data = _as_data(X)
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    stream = as_stream(rng)
    c2 = data.row_bound**2
    if gamma <= tau:
        std = gamma * data.row_bound if strict_listing else math.sqrt(gamma) * data.row_bound
        branch, lam = Branch.LOW_GAMMA, None
    else:
        lam = private_min_eig(data, eta, tau, stream)
        std = math.sqrt(max(gamma * c2 - lam, 0.0))
        branch = Branch.EIG_ASSISTED
    out = gauss_mix(data, k, 0.0 if noiseless else std, stream, sketch=sketch, sampler=sampler)
    return SketchRelease(out, int(k), 0.0 if noiseless else std, branch, lam)


def inner_product_post(M1, M2) -> np.ndarray:
    """``M1^T M2`` for two releases sharing their row count."""
    M1 = np.atleast_2d(np.asarray(M1, dtype=float))
    M2 = np.atleast_2d(np.asarray(M2, dtype=float))
    if M1.shape[0] != M2.shape[0]:
        raise ShapeError(f"row counts differ: {M1.shape[0]} vs {M2.shape[0]}")
    return M1.T @ M2
