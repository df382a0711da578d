"""Noise calibration: from a target (eps, delta) back to the mixing scale gamma."""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rdp import _zero_out_scalar, phi_unchecked, rdp_to_dp_unchecked

ALPHA_EDGE = 1e-9
GAMMA_FLOOR = 2.5 + 1e-6
_GRID_SIZE = 256
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class CalibrationResult:
    gamma: float
    eta: float
    alpha_star: float
    eps_achieved: float
    iterations: int


def threshold_tau(delta: float) -> float:
    """Shift applied to the private eigenvalue estimate, sqrt(2 log(3/delta))."""
    return math.sqrt(2 * math.log(3 / delta))


def _converted(alpha, k, gamma, delta):
    return rdp_to_dp_unchecked(alpha, phi_unchecked(alpha, k, gamma), delta)


def _alpha_of(u, gamma):
    # u in (0, 1) parametrizes alpha = 1 + u (gamma - 1)
    return 1.0 + u * (gamma - 1.0)


def minimize_converted_rdp(k: int, gamma: float, delta: float):
    """Minimize ``phi(alpha) + log(1 - 1/alpha) - log(alpha delta)/(alpha - 1)`` over alpha.

    Returns ``(alpha_star, value)``. A 256-point grid in logit coordinates
    locates the basin; golden-section search then refines alpha to 1e-9.
    """
    if not gamma > 1 + 1e-6:
        raise DomainError(f"gamma must exceed 1 + 1e-6, got {gamma}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    lo = ALPHA_EDGE
    hi = gamma - 1 - ALPHA_EDGE
    # logit grid over the fraction (alpha - 1)/(gamma - 1)
    u_lo, u_hi = lo / (gamma - 1), hi / (gamma - 1)
    z = np.linspace(math.log(u_lo / (1 - u_lo)), math.log(u_hi / (1 - u_hi)), _GRID_SIZE)
    u = 1 / (1 + np.exp(-z))
    alphas = np.clip(_alpha_of(u, gamma), 1 + lo, gamma - ALPHA_EDGE)
    vals = _converted(alphas, k, gamma, delta)
    i = int(np.argmin(vals))
    a = alphas[max(i - 1, 0)]
    b = alphas[min(i + 1, _GRID_SIZE - 1)]

    log_delta = math.log(delta)
    inv_gamma = 1.0 / gamma

    def f(x):
        return (
            _zero_out_scalar(x, inv_gamma, k)
            + math.log1p(-1.0 / x)
            - (math.log(x) + log_delta) / (x - 1.0)
        )

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > ALPHA_EDGE:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    best_alpha, best_val = (c, fc) if fc <= fd else (d, fd)
    if vals[i] < best_val:
        best_alpha, best_val = float(alphas[i]), float(vals[i])
    return float(best_alpha), float(best_val)


def minimize_over_alpha(k: int, gamma: float, delta: float):
    """Inner minimization of the mechanism epsilon; the conversion runs at delta/3."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return minimize_converted_rdp(k, gamma, delta / 3)


def eps_tilde(eta: float, gamma: float, k: int, delta: float) -> float:
    """Total epsilon of the eigenvalue-assisted release at (eta, gamma, k, delta).

    Sum of the Gaussian-mechanism cost of the eigenvalue release,
    ``sqrt(2 log(3.75/delta))/eta``, and the best converted RDP bound of the
    sketch at confidence ``delta/3``. The conversion can dip below zero for
    large delta or very large gamma; a negative epsilon implies (0, delta)-DP,
    so that term is clamped at zero.
    """
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if not gamma > 1:
        raise DomainError(f"gamma must exceed 1, got {gamma}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    first = 0.0 if math.isinf(eta) else math.sqrt(2 * math.log(3.75 / delta)) / eta
    _, second = minimize_over_alpha(k, gamma, delta)
    return first + max(second, 0.0)


def _eps_along_path(gamma, k, delta):
    return eps_tilde(gamma / math.sqrt(k), gamma, k, delta)


@functools.lru_cache(maxsize=4096)
def _find_gamma_cached(eps, delta, k):
    it = 0
    lo = GAMMA_FLOOR
    e_lo = _eps_along_path(lo, k, delta)
    if e_lo <= eps:
        hi, e_hi = lo, e_lo
    else:
        hi = lo
        while True:
            it += 1
            lo, hi = hi, 2 * hi
            e_hi = _eps_along_path(hi, k, delta)
            if e_hi <= eps:
                break
            if it > 200:
                raise RuntimeError("gamma bracketing failed to find a feasible point")
        # bisection keeps eps(lo) > eps >= eps(hi)
        while hi - lo > 1e-12 * hi and it < 200:
            it += 1
            mid = 0.5 * (lo + hi)
            e_mid = _eps_along_path(mid, k, delta)
            if e_mid <= eps:
                hi, e_hi = mid, e_mid
            else:
                lo = mid
    alpha_star, _ = minimize_over_alpha(k, hi, delta)
    return CalibrationResult(
        gamma=hi, eta=hi / math.sqrt(k), alpha_star=alpha_star, eps_achieved=e_hi, iterations=it
    )


def find_gamma(eps: float, delta: float, k: int) -> CalibrationResult:
    """Smallest gamma > 5/2 whose eps_tilde along eta = gamma/sqrt(k) is at most eps."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if int(k) < 1:
        raise DomainError(f"k must be positive, got {k}")
    return _find_gamma_cached(float(eps), float(delta), int(k))


# ---------------------------------------------------------------------------
# bound comparison

def sheffet_eps(gamma: float, k: int, delta: float) -> float:
    """Earlier bound for the same mechanism: 2 sqrt(2k log(4/delta))/gamma + 2 log(4/delta)/gamma."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    L = math.log(4 / delta)
    return 2 * math.sqrt(2 * k * L) / gamma + 2 * L / gamma


def ours_closed_form_eps(gamma: float, k: int, delta: float) -> float:
    """Closed-form epsilon through the tCDP route, k/(2 gamma^2) + 2 sqrt(2k log(4/delta))/gamma."""
    if not gamma > 2.5:
        raise DomainError(f"gamma must exceed 5/2, got {gamma}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return k / (2 * gamma**2) + 2 * math.sqrt(2 * k * math.log(4 / delta)) / gamma


@dataclass(frozen=True)
class BoundRow:
    gamma: float
    eps_ours_exact: float
    eps_ours_closed: float
    eps_sheffet: float
    ratio: float


BOUND_COLUMNS = ("gamma", "eps_ours_exact", "eps_ours_closed", "eps_sheffet", "ratio")


def compare_bounds(gamma_grid, k: int, delta: float) -> list[BoundRow]:
    """Tabulate the exact converted RDP epsilon against the closed form and the earlier bound."""
    rows = []
    for g in gamma_grid:
        g = float(g)
        if not g > 2.5:
            raise DomainError(f"grid values must exceed 5/2, got {g}")
        _, exact = minimize_converted_rdp(k, g, delta)
        sh = sheffet_eps(g, k, delta)
        rows.append(BoundRow(g, exact, ours_closed_form_eps(g, k, delta), sh, exact / sh))
    return rows


def write_bounds_csv(rows, path_or_file):
    def _write(fh):
        w = csv.writer(fh)
        w.writerow(BOUND_COLUMNS)
        for r in rows:
            w.writerow([repr(getattr(r, c)) for c in BOUND_COLUMNS])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
