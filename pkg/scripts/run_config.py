"""Run an experiment config and write CSV (or JSON) rows, e.g.

    python3 scripts/run_config.py scripts/configs/linreg_desk.cfg --out linreg.csv
"""
import argparse

from gaussmix.experiment import emit, load_config, run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("config")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=0)
    args = p.parse_args()
    config = load_config(args.config)
    if args.workers:
        config.workers = args.workers
    emit(run_experiment(config), args.format, args.out or config.output or None)


if __name__ == "__main__":
    main()
