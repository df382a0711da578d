"""Dataset ingestion, synthetic generators, splitting and normalization."""
from __future__ import annotations

import csv
import math

import numpy as np

from . import rng as _rng
from .errors import DegenerateError, ParseError
from .regression import LabeledDataset
from .rng import as_stream

DESK_GAUSSIAN = {"n": 2048, "d": 64}
FULL_GAUSSIAN = {"n": 8192, "d": 512}


def load_csv(path) -> LabeledDataset:
    """Read a headed numeric CSV whose last column is the response."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        width = len(header)
        if width < 2:
            raise ParseError(f"{path}: need at least one covariate and a response column")
        for r, line in enumerate(reader, start=2):
            if not line or all(not c.strip() for c in line):
                continue
            if len(line) != width:
                raise ParseError(f"{path}: row {r} has {len(line)} cells, expected {width}", row=r)
            vals = []
            for c, cell in enumerate(line, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric cell {cell!r} at row {r}, column {c} ({header[c - 1]})",
                        row=r, column=c,
                    ) from None
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows)
    return LabeledDataset.from_arrays(arr[:, :-1], arr[:, -1], allow_underdetermined=True)


def write_csv(data: LabeledDataset, path, header=None):
    """Write covariates then response, 17 significant digits (lossless for float64)."""
    d = data.d
    header = header or [f"x{j}" for j in range(d)] + ["y"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for x, y in zip(data.X, data.Y):
            w.writerow([f"{v:.17g}" for v in x] + [f"{y:.17g}"])


def normalize_train_test(train: LabeledDataset, test: LabeledDataset):
    """Scale covariates so the largest training row has unit norm; test uses the same factor.

    Responses are not rescaled; the response bound is recomputed from the
    training responses. Test rows may end up with norm above 1.
    """
    norms = np.linalg.norm(train.X, axis=1)
    if norms.size == 0 or norms.max() == 0:
        raise DegenerateError("all training rows are zero")
    scale = float(norms.max())
    c_y = float(np.abs(train.Y).max()) or 1.0
    tr = LabeledDataset(train.X / scale, train.Y, 1.0, c_y,
                        allow_underdetermined=train.allow_underdetermined)
    Xte = test.X / scale
    te_cx = max(float(np.linalg.norm(Xte, axis=1).max()) if len(Xte) else 1.0, 1e-300)
    te_cy = max(float(np.abs(test.Y).max()) if len(test.Y) else 1.0, 1e-300)
    te = LabeledDataset(Xte, test.Y, te_cx, te_cy, allow_underdetermined=True)
    return tr, te, scale


def train_test_split(data: LabeledDataset, train_fraction: float, rng):
    """Seeded shuffle then split; the training part gets round(n * train_fraction) rows."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    gen = as_stream(rng).generator(_rng.SPLIT)
    perm = gen.permutation(data.n)
    m = int(round(data.n * train_fraction))
    tr, te = perm[:m], perm[m:]
    mk = LabeledDataset.from_arrays
    return (mk(data.X[tr], data.Y[tr], allow_underdetermined=True),
            mk(data.X[te], data.Y[te], allow_underdetermined=True))


def _unit_sphere(d, gen):
    v = gen.standard_normal(d)
    return v / np.linalg.norm(v)


def _linear_response(X, theta0, noise_std, gen):
    return X @ theta0 + noise_std * gen.uniform(-1.0, 1.0, size=X.shape[0])


def synth_gaussian_subspace(n=DESK_GAUSSIAN["n"], d=DESK_GAUSSIAN["d"], q=4, noise_std=0.1,
                            rng=0, *, return_params=False):
    """Covariates N(0, Q Q^T) with Q a random d x q semi-orthogonal basis.

    Responses ``x^T theta0 + noise_std * U(-1, 1)`` with theta0 uniform on the
    unit sphere.
    """
    if q > d:
        raise ValueError(f"q={q} exceeds d={d}")
    gen = as_stream(rng).generator(_rng.DATA)
    basis, _ = np.linalg.qr(gen.standard_normal((d, q)))
    theta0 = _unit_sphere(d, gen)
    X = gen.standard_normal((n, q)) @ basis.T
    Y = _linear_response(X, theta0, noise_std, gen)
    data = LabeledDataset.from_arrays(X, Y, allow_underdetermined=True)
    if return_params:
        return data, {"basis": basis, "theta0": theta0}
    return data


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def synth_mlp(n=4096, d=512, rng=0, noise_std=0.1, hidden=100, bias_var=1e-6,
              *, return_params=False):
    """Covariates from a random two-layer sigmoid network applied to N(0, I_2) latents."""
    gen = as_stream(rng).generator(_rng.DATA)
    W1 = gen.standard_normal((hidden, 2))
    W2 = gen.standard_normal((d, hidden))
    b1 = math.sqrt(bias_var) * gen.standard_normal(hidden)
    b2 = math.sqrt(bias_var) * gen.standard_normal(d)
    theta0 = _unit_sphere(d, gen)
    latent = gen.standard_normal((n, 2))
    X = _sigmoid(_sigmoid(latent @ W1.T + b1) @ W2.T + b2)
    Y = _linear_response(X, theta0, noise_std, gen)
    data = LabeledDataset.from_arrays(X, Y, allow_underdetermined=True)
    if return_params:
        return data, {"W1": W1, "W2": W2, "b1": b1, "b2": b2, "theta0": theta0}
    return data


def synth_uniform(n=2048, d=64, rng=0, noise_std=0.1):
    """I.i.d. U(-1, 1) covariates with the same linear response model."""
    gen = as_stream(rng).generator(_rng.DATA)
    theta0 = _unit_sphere(d, gen)
    X = gen.uniform(-1.0, 1.0, size=(n, d))
    return LabeledDataset.from_arrays(X, _linear_response(X, theta0, noise_std, gen),
                                      allow_underdetermined=True)


def synth_two_gaussians(n=4000, d=32, separation=2.0, rng=0):
    """Balanced binary task: x ~ N(y * mu, I) with ||mu|| = separation / 2 and y = +-1."""
    gen = as_stream(rng).generator(_rng.DATA)
    mu = _unit_sphere(d, gen) * (separation / 2)
    y = np.where(gen.random(n) < 0.5, -1.0, 1.0)
    X = y[:, None] * mu + gen.standard_normal((n, d))
    return LabeledDataset.from_arrays(X, y, allow_underdetermined=True)


GENERATORS = {
    "gaussian": synth_gaussian_subspace,
    "mlp": synth_mlp,
    "uniform": synth_uniform,
    "two_gaussians": synth_two_gaussians,
}
