"""Command-line entry point: ``gaussmix <subcommand> ...`` or ``python3 -m gaussmix``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import calibration, data as _data, experiment
from .errors import DomainError, ParseError
from .logistic import BinaryLabeledDataset, accuracy, logistic_mixing, objective_perturbation
from .rdp import PrivacyBudget, exact_renyi_gaussmix, phi
from .regression import Method, adassp, linear_mixing, ridge, sheffet_alg, test_mse
from .rng import RngStream


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _seed(args) -> int:
    env = os.environ.get(experiment.SEED_ENV)
    return int(env) if env else int(args.seed)


def _out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def cmd_calibrate(args):
    fh = _out(args.out)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["eps", "delta", "k", "gamma", "eta", "alpha_star", "eps_achieved"])
    for eps in _floats(args.eps):
        for k in _ints(args.k):
            r = calibration.find_gamma(eps, args.delta, k)
            w.writerow([eps, args.delta, k] + [repr(v) for v in
                                               (r.gamma, r.eta, r.alpha_star, r.eps_achieved)])
    if fh is not sys.stdout:
        fh.close()


def cmd_compare_bounds(args):
    grid = np.geomspace(args.gamma_min, args.gamma_max, args.points)
    rows = calibration.compare_bounds(grid, args.k, args.delta)
    fh = _out(args.out)
    calibration.write_bounds_csv(rows, fh)
    if fh is not sys.stdout:
        fh.close()


def cmd_audit(args):
    """Compare the exact divergence of a tight instance with the closed-form curve."""
    d, k, gamma = args.d, args.k, args.gamma
    rng = np.random.default_rng(_seed(args))
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    X = Q  # rows are unit vectors and X^T X = I
    sigma = math.sqrt(gamma - 1.0)  # gamma = (sigma^2 + lambda_min)/C^2 with C = 1
    alphas = [float(a) for a in np.linspace(1.0 + 1e-3, gamma - 1e-3, args.points)]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha", "exact", "phi", "abs_err"])
    worst = 0.0
    for a in alphas:
        ex = exact_renyi_gaussmix(X, 0, sigma, k, a)
        ph = phi(a, k, gamma)
        worst = max(worst, abs(ex - ph))
        w.writerow([repr(a), repr(ex), repr(ph), repr(abs(ex - ph))])
    print(f"# max abs error {worst:.3e}", file=sys.stderr)
    return 0 if worst <= args.tol else 1


def _load_split(args, seed):
    if args.data:
        full = _data.load_csv(args.data)
    else:
        gen = _data.GENERATORS[args.dataset]
        kw = {"n": args.n, "d": args.d, "rng": RngStream(seed, 0)}
        full = gen(**kw)
    tr, te = _data.train_test_split(full, args.train_fraction, RngStream(seed, 0))
    tr, te, _ = _data.normalize_train_test(tr, te)
    return tr, te


def cmd_linreg(args):
    seed = _seed(args)
    tr, te = _load_split(args, seed)
    budget = PrivacyBudget(args.eps, args.delta)
    k = args.k or 2 * tr.d
    rng = RngStream(seed, 1)
    m = Method(args.method)
    if m is Method.LINEAR_MIXING:
        fit = linear_mixing(tr, budget, k, rng, sampler=args.sampler)
    elif m is Method.ADASSP:
        fit = adassp(tr, budget, rng=rng)
    elif m in (Method.SHEFFET, Method.SHEFFET_NEW):
        fit = sheffet_alg(tr, budget, k, m is Method.SHEFFET_NEW, rng)
    elif m is Method.RIDGE:
        fit = ridge(tr, args.ridge_nu)
    else:
        raise DomainError(f"{m.value} is not a regression method")
    print(fit.to_json(test_mse(te.X, te.Y, fit.theta)))


def cmd_logreg(args):
    seed = _seed(args)
    tr, te = _load_split(args, seed)
    btr = BinaryLabeledDataset(tr.X, np.where(tr.Y >= 0, 1.0, -1.0), tr.c_x)
    yte = np.where(te.Y >= 0, 1.0, -1.0)
    budget = PrivacyBudget(args.eps, args.delta)
    k = args.k or 16 * (tr.d + 1)
    rng = RngStream(seed, 1)
    if Method(args.method) is Method.LOGISTIC_MIXING:
        fit = logistic_mixing(btr, budget, k, args.Q, rng, sampler=args.sampler)
    else:
        fit = objective_perturbation(btr, budget, rng)
    out = fit.to_dict(test_mse(te.X, yte, fit.theta))
    out["test_accuracy"] = accuracy(te.X, yte, fit.theta)
    print(json.dumps(out))


def cmd_synth(args):
    gen = _data.GENERATORS[args.kind]
    kw = {"n": args.n, "d": args.d, "rng": RngStream(_seed(args), 0)}
    if args.kind == "two_gaussians":
        kw["separation"] = args.separation
    _data.write_csv(gen(**kw), args.out)


def cmd_bench(args):
    config = experiment.load_config(args.config)
    if args.workers:
        config.workers = args.workers
    rows = experiment.run_experiment(config)
    experiment.emit(rows, args.format, args.out or config.output or None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussmix", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("calibrate", help="gamma table for (eps, delta, k)")
    c.add_argument("--eps", default="0.1,0.5,1,2,5,10")
    c.add_argument("--delta", type=float, default=1e-5)
    c.add_argument("--k", default="16,64,256")
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)

    c = sub.add_parser("compare-bounds", help="exact vs closed-form vs earlier epsilon bound")
    c.add_argument("--k", type=int, default=10)
    c.add_argument("--delta", type=float, default=1e-5)
    c.add_argument("--gamma-min", type=float, default=20.0)
    c.add_argument("--gamma-max", type=float, default=1e4)
    c.add_argument("--points", type=int, default=40)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare_bounds)

    c = sub.add_parser("audit", help="exact Renyi divergence vs the closed-form curve")
    c.add_argument("--d", type=int, default=3)
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--gamma", type=float, default=10.0)
    c.add_argument("--points", type=int, default=20)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_audit)

    for name, methods, default in (
        ("linreg", [m.value for m in experiment.REGRESSION_METHODS], "LinearMixing"),
        ("logreg", [m.value for m in experiment.CLASSIFICATION_METHODS], "LogisticMixing"),
    ):
        c = sub.add_parser(name, help=f"one fit, printed as JSON ({', '.join(methods)})")
        c.add_argument("--method", choices=methods, default=default)
        c.add_argument("--data", help="headed CSV, last column is the response")
        c.add_argument("--dataset", choices=sorted(_data.GENERATORS),
                       default="gaussian" if name == "linreg" else "two_gaussians")
        c.add_argument("--n", type=int, default=2048 if name == "linreg" else 4000)
        c.add_argument("--d", type=int, default=64 if name == "linreg" else 32)
        c.add_argument("--eps", type=float, default=1.0)
        c.add_argument("--delta", type=float, default=1e-5)
        c.add_argument("--k", type=int, default=0, help="sketch size (0: method default)")
        c.add_argument("--train-fraction", type=float, default=0.8)
        c.add_argument("--sampler", choices=("explicit", "gram"), default="explicit")
        c.add_argument("--seed", type=int, default=0)
        if name == "linreg":
            c.add_argument("--ridge-nu", type=float, default=1e-6)
            c.set_defaults(func=cmd_linreg)
        else:
            c.add_argument("--Q", type=float, default=4.0)
            c.set_defaults(func=cmd_logreg)

    c = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    c.add_argument("--kind", choices=sorted(_data.GENERATORS), default="gaussian")
    c.add_argument("--n", type=int, default=2048)
    c.add_argument("--d", type=int, default=64)
    c.add_argument("--separation", type=float, default=2.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_synth)

    c = sub.add_parser("bench", help="run an experiment from a key = value config file")
    c.add_argument("--config", required=True)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--out")
    c.add_argument("--workers", type=int, default=0)
    c.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except (ParseError, DomainError, experiment.ConfigError, OSError) as exc:
        print(f"gaussmix: error: {exc}", file=sys.stderr)
        return 2
