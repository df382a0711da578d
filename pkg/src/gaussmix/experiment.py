"""Seeded multi-trial experiments: config parsing, the trial loop, and result emission.

Every trial draws from ``RngStream(base_seed, 1 + trial)``; the dataset and
split use stream 0. Trials are therefore keyed by index, not execution order,
and all methods and privacy levels see the same randomness for a given trial.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import data as _data
from .logistic import BinaryLabeledDataset, accuracy, logistic_mixing, objective_perturbation
from .rdp import PrivacyBudget
from .regression import LabeledDataset, Method, adassp, linear_mixing, ridge, sheffet_alg, test_mse
from .rng import RngStream

SEED_ENV = "GAUSSMIX_SEED"
CSV_COLUMNS = ("method", "eps", "mean", "ci_low", "ci_high", "runtime_s", "trials", "seed")
REGRESSION_METHODS = (Method.LINEAR_MIXING, Method.ADASSP, Method.SHEFFET, Method.SHEFFET_NEW,
                      Method.RIDGE)
CLASSIFICATION_METHODS = (Method.LOGISTIC_MIXING, Method.OBJECTIVE_PERTURBATION)

RESULT_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": list(CSV_COLUMNS) + ["failures"],
        "additionalProperties": False,
        "properties": {
            "method": {"type": "string", "enum": [m.value for m in Method]},
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "mean": {"type": ["number", "null"]},
            "ci_low": {"type": ["number", "null"]},
            "ci_high": {"type": ["number", "null"]},
            "runtime_s": {"type": ["number", "null"], "minimum": 0},
            "trials": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer", "minimum": 0},
            "failures": {"type": "integer", "minimum": 0},
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment. ``k`` > 0 is absolute; otherwise ``k = round(k_per_d * d)``."""

    methods: tuple = ("LinearMixing", "AdaSSP")
    eps_grid: tuple = (0.5, 1.0, 2.0, 4.0, 8.0)
    delta: float = 1e-5
    k: int = 0
    k_per_d: float = 2.0
    trials: int = 100
    base_seed: int = 0
    dataset: str = "gaussian"
    data_path: str = ""
    n: int = 2048
    d: int = 64
    q: int = 4
    noise_std: float = 0.1
    separation: float = 2.0
    train_fraction: float = 0.8
    Q: float = 4.0
    ridge_nu: float = 1e-6
    rho_fail: float = 0.05
    sampler: str = "explicit"
    workers: int = 1
    output: str = ""

    def __post_init__(self):
        self.methods = tuple(Method(m).value for m in _as_tuple(self.methods))
        self.eps_grid = tuple(float(e) for e in _as_tuple(self.eps_grid))
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.eps_grid or any(e <= 0 for e in self.eps_grid):
            raise ConfigError("eps_grid must be nonempty and strictly positive")
        if any(b <= a for a, b in zip(self.eps_grid, self.eps_grid[1:])):
            raise ConfigError("eps_grid must be strictly ascending")
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.dataset not in _data.GENERATORS and self.dataset != "csv":
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "csv" and not self.data_path:
            raise ConfigError("dataset=csv needs data_path")

    def resolve_k(self, d: int) -> int:
        return int(self.k) if self.k > 0 else max(1, int(round(self.k_per_d * d)))


def _as_tuple(v):
    if isinstance(v, str):
        return tuple(s.strip() for s in v.split(",") if s.strip())
    return tuple(v)


def _coerce(f: dataclasses.Field, raw: str):
    if f.name in ("methods", "eps_grid"):
        return raw
    typ = type(f.default)
    try:
        return typ(float(raw)) if typ is int and "e" in raw.lower() else typ(raw)
    except ValueError:
        raise ConfigError(f"{f.name}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config(text: str, env=None) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment, lists are comma-separated.

    ``GAUSSMIX_SEED`` in ``env`` (default: the process environment) overrides base_seed.
    """
    env = os.environ if env is None else env
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    kw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kw[key] = _coerce(fields[key], raw)
    if env.get(SEED_ENV):
        kw["base_seed"] = int(env[SEED_ENV])
    return ExperimentConfig(**kw)


def load_config(path, env=None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), env)


def format_config(config: ExperimentConfig) -> str:
    out = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        out.append(f"{f.name} = {','.join(map(str, v)) if isinstance(v, tuple) else v}")
    return "\n".join(out) + "\n"


@dataclass
class ResultRow:
    method: str
    eps: float
    mean: float
    ci_low: float
    ci_high: float
    runtime_s: float
    trials: int
    seed: int
    failures: int = 0


def confidence_interval(values):
    """Mean with a normal-approximation 95% interval, mean +- 1.96 * stderr."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan, math.nan
    m = float(v.mean())
    if v.size == 1:
        return m, m, m
    half = 1.96 * float(v.std(ddof=1)) / math.sqrt(v.size)
    return m, m - half, m + half


def build_dataset(config: ExperimentConfig) -> LabeledDataset:
    stream = RngStream(int(config.base_seed), 0)
    if config.dataset == "csv":
        return _data.load_csv(config.data_path)
    if config.dataset == "two_gaussians":
        return _data.synth_two_gaussians(config.n, config.d, config.separation, stream)
    if config.dataset == "gaussian":
        return _data.synth_gaussian_subspace(config.n, config.d, config.q, config.noise_std, stream)
    return _data.GENERATORS[config.dataset](n=config.n, d=config.d, rng=stream,
                                            noise_std=config.noise_std)


def prepare(config: ExperimentConfig):
    """Generate or load, split 80/20 (by default), and normalize. Returns (train, test)."""
    full = build_dataset(config)
    tr, te = _data.train_test_split(full, config.train_fraction, RngStream(int(config.base_seed), 0))
    tr, te, _ = _data.normalize_train_test(tr, te)
    return tr, te


def _binary(ds: LabeledDataset):
    y = np.where(ds.Y >= 0, 1.0, -1.0)
    return ds.X, y


def fit_once(method: str, train: LabeledDataset, eps: float, config: ExperimentConfig, rng):
    """One fit of ``method``; returns its FitResult."""
    m = Method(method)
    budget = PrivacyBudget(eps, config.delta)
    k = config.resolve_k(train.d)
    if m is Method.LINEAR_MIXING:
        return linear_mixing(train, budget, k, rng, sampler=config.sampler)
    if m is Method.ADASSP:
        return adassp(train, budget, config.rho_fail, rng)
    if m in (Method.SHEFFET, Method.SHEFFET_NEW):
        return sheffet_alg(train, budget, k, m is Method.SHEFFET_NEW, rng)
    if m is Method.RIDGE:
        return ridge(train, config.ridge_nu)
    X, y = _binary(train)
    b = BinaryLabeledDataset(X, y, train.c_x)
    if m is Method.LOGISTIC_MIXING:
        return logistic_mixing(b, budget, k, config.Q, rng, sampler=config.sampler)
    return objective_perturbation(b, budget, rng)


def score(method: str, theta, test: LabeledDataset) -> float:
    """Test MSE for regression methods, test accuracy for classification methods."""
    if Method(method) in CLASSIFICATION_METHODS:
        X, y = _binary(test)
        return accuracy(X, y, theta)
    return test_mse(test.X, test.Y, theta)


def _run_trial(args):
    method, eps, trial, train, test, config = args
    rng = RngStream(int(config.base_seed), 1 + trial)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t0 = time.perf_counter()
        try:
            fit = fit_once(method, train, eps, config, rng)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return trial, None, None, repr(exc)
        elapsed = time.perf_counter() - t0
    return trial, score(method, fit.theta, test), elapsed, None


def run_experiment(config: ExperimentConfig, data=None) -> list[ResultRow]:
    """Run every (method, eps) cell for ``config.trials`` trials and aggregate.

    ``data`` may supply a prepared ``(train, test)`` pair. Failed trials are
    counted in ``failures`` and excluded from the statistics. Rows are sorted by
    (method, eps).
    """
    train, test = prepare(config) if data is None else data
    jobs = [(m, e, t, train, test, config)
            for m in config.methods for e in config.eps_grid for t in range(int(config.trials))]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        results = [_run_trial(j) for j in jobs]

    cells = {}
    for job, res in zip(jobs, results):
        cells.setdefault((job[0], job[1]), []).append(res)
    rows = []
    for (method, eps), rs in cells.items():
        rs.sort(key=lambda r: r[0])  # aggregate in trial order
        ok = [r for r in rs if r[3] is None]
        mean, lo, hi = confidence_interval([r[1] for r in ok])
        runtime = float(np.mean([r[2] for r in ok])) if ok else math.nan
        rows.append(ResultRow(method, eps, mean, lo, hi, runtime, len(ok), int(config.base_seed),
                              len(rs) - len(ok)))
    rows.sort(key=lambda r: (r.method, r.eps))
    return rows


def emit(rows, fmt: str = "csv", path=None) -> str:
    """Serialize rows as CSV (fixed columns) or JSON; writes to ``path`` if given.

    CSV carries the eight fixed columns; ``failures`` appears only in JSON.
    """
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.method] + [repr(float(getattr(r, c))) for c in CSV_COLUMNS[1:6]]
                       + [r.trials, r.seed])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([_row_json(r) for r in rows], indent=2) + "\n"
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _row_json(r: ResultRow) -> dict:
    d = dataclasses.asdict(r)
    for key in ("mean", "ci_low", "ci_high", "runtime_s"):
        if math.isnan(d[key]):
            d[key] = None
    return d


def read_rows(text: str, fmt: str = "csv") -> list[ResultRow]:
    """Inverse of :func:`emit`."""
    if fmt == "json":
        return [ResultRow(**{k: (math.nan if v is None else v) for k, v in d.items()})
                for d in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [ResultRow(d["method"], *(float(d[c]) for c in CSV_COLUMNS[1:6]),
                      int(d["trials"]), int(d["seed"])) for d in reader]
