"""Command line interface.

Subcommands: ``synth`` (generated benchmark), ``real`` (CSV ingestion),
``validate`` (config dry run), ``fixture`` (write the packaged CSV
stand-in). Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical failure.
"""

import argparse
import logging
import sys

from .config import ExperimentConfig, load_config
from .errors import ConfigError, CoopkalError, DataError
from .fixtures import make_sst_fixture
from .harness import run_realdata_experiment, run_synthetic_experiment
from .reporting import write_report

__all__ = ["main", "parse_seeds"]

log = logging.getLogger(__name__)


def parse_seeds(spec):
    """Parse a seed list: ``"0..9"`` (inclusive range) or ``"0,2,5"``.

    Raises
    ------
    ConfigError
        On anything else.
    """
    spec = spec.strip()
    try:
        if ".." in spec:
            lo, hi = spec.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty seed range {spec!r}")
            return list(range(lo, hi + 1))
        return [int(tok) for tok in spec.split(",")]
    except ValueError as exc:
        raise ConfigError(
            f"seeds must be 'lo..hi' or comma-separated integers, got {spec!r}"
        ) from exc


def _load(args, dataset=None):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seeds", None):
        cfg = cfg.replace(seeds=parse_seeds(args.seeds))
    if dataset and cfg.dataset != dataset:
        raise ConfigError(
            f"this subcommand needs dataset = {dataset!r}, config says {cfg.dataset!r}"
        )
    return cfg

def _emit(report, args):
    paths = write_report(report, args.out, figures=not args.no_figures)
    for method, sw, mean, std in report.averages:
        print(f"{method:10s} sigma_w={sw:<6g} mse={mean:.6e} (std {std:.1e})")
    print(f"report written to {args.out}")
    return paths


def _cmd_synth(args):
    report = run_synthetic_experiment(_load(args, dataset="synthetic"))
    _emit(report, args)
    return 0


def _cmd_real(args):
    report = run_realdata_experiment(
        _load(args, dataset="csv"), args.signals, args.coords
    )
    _emit(report, args)
    return 0


def _cmd_validate(args):
    cfg = _load(args)
    print(f"config ok (digest {cfg.digest()})")
    print(f"dataset={cfg.dataset} n_a={cfg.n_a} n_b={cfg.n_b} k={cfg.k} "
          f"period={cfg.period}")
    print(f"t_train={cfg.t_train} t_test={cfg.t_test} "
          f"sigma_w={cfg.sigma_w} seeds={len(cfg.seeds)}")
    return 0


def _cmd_fixture(args):
    paths = make_sst_fixture(args.out, seed=args.seed)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="coopkal",
        description="Cooperative Kalman filtering across two sensor graphs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required,
                       help="TOML experiment configuration")
        p.add_argument("--seeds", help="override seeds: 'lo..hi' or '0,2,5'")
        p.add_argument("--out", default="report",
                       help="report directory (default: report)")
        p.add_argument("--no-figures", action="store_true",
                       help="write only the CSV/JSON outputs")

    p = sub.add_parser("synth", help="run the generated two-graph benchmark")
    common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("real", help="run the CSV ingestion pipeline")
    common(p, config_required=True)
    p.add_argument("--signals", required=True, help="signals CSV (node,t0,t1,...)")
    p.add_argument("--coords", required=True, help="coordinates CSV (node,x,y)")
    p.set_defaults(func=_cmd_real)

    p = sub.add_parser("validate", help="check a configuration and exit")
    p.add_argument("--config", help="TOML experiment configuration")
    p.add_argument("--seeds", help="override seeds: 'lo..hi' or '0,2,5'")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("fixture", help="write the packaged CSV fixture")
    p.add_argument("--out", default="fixture", help="output directory")
    p.add_argument("--seed", type=int, default=7, help="generation seed")
    p.set_defaults(func=_cmd_fixture)
    return ap


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except CoopkalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
