"""Command-line front end.

Subcommands: simulate, fit, select, benchmark, price. Every subcommand
accepts --config (key=value text or JSON) plus flags that override the
file. All outputs land in the --out directory; randomness flows from one
master seed that is embedded in the outputs for provenance.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import make_config
from .densities import TransitionDensityOracle
from .errors import ConfigError, TransdensError
from .estimator import CutoffConfig, EstimationWindow, evaluate, fit, write_fit
from .evaluation import (
    eval_window,
    feynman_kac,
    option_price,
    run_experiment,
    write_grid_csv,
)
from .selection import PenaltySpec, build_collection, select, selection_table_csv
from .simulate import SimGrid, default_params, read_ensemble, simulate_model, write_ensemble
from .basis import basis_from_name

PAYOFFS = ("const", "identity", "call", "put")


def _add_common_flags(parser):
    parser.add_argument("--config", help="config file (key=value text or .json)")
    parser.add_argument("--model", choices=("ou", "tanh_ou", "cir"))
    parser.add_argument("--n-paths", type=int, dest="n_paths")
    parser.add_argument("--horizon", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--lag", type=float)
    parser.add_argument("--reps", type=int)
    parser.add_argument("--basis-x", dest="basis_x", choices=("hermite", "trig"))
    parser.add_argument("--basis-y", dest="basis_y", choices=("hermite", "trig"))
    parser.add_argument("--cap-m1", type=int, dest="cap_m1")
    parser.add_argument("--cap-m2", type=int, dest="cap_m2")
    parser.add_argument("--penalty", choices=("plain", "log"))
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--cutoff", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--out")


_CONFIG_KEYS = (
    "model", "n_paths", "horizon", "delta", "lag", "reps", "basis_x", "basis_y",
    "cap_m1", "cap_m2", "penalty", "kappa", "cutoff", "seed", "jobs", "out",
)


def _config_from_args(args):
    overrides = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    return make_config(file_path=args.config, overrides=overrides)


def _out_dir(config):
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _prepare(config):
    grid = SimGrid.for_estimation(config.delta, config.horizon, config.lag)
    window = EstimationWindow.for_lag(grid, config.lag, horizon=config.horizon)
    basis_x = basis_from_name(config.basis_x)
    basis_y = basis_from_name(config.basis_y)
    cutoff = CutoffConfig(c_cut=config.cutoff, exponent=config.cutoff_exponent, rule=config.cutoff_rule)
    return grid, window, basis_x, basis_y, cutoff


def _load_or_simulate(config, grid, ensemble_path):
    if ensemble_path:
        ensemble = read_ensemble(ensemble_path)
        if ensemble.grid.n_steps < grid.n_steps:
            raise ConfigError(
                f"ensemble file covers {ensemble.grid.n_steps} steps, "
                f"need {grid.n_steps} for horizon+lag"
            )
        return ensemble
    return simulate_model(config.model, grid, config.n_paths, config.seed)


def _write_density_grids(config, ensemble, window, fit_result, out):
    ew = eval_window(
        ensemble, window.lag_index, window.lag_index, config.n_grid_x, config.n_grid_y
    )
    xg, yg = ew.x_grid(), ew.y_grid()
    write_grid_csv(out / "density_grid.csv", xg, yg, evaluate(fit_result, xg, yg))
    oracle = TransitionDensityOracle(config.model, default_params(config.model), window.lag_t)
    write_grid_csv(out / "true_density_grid.csv", xg, yg, oracle.grid(xg, yg))


def cmd_simulate(args):
    config = _config_from_args(args)
    grid, _, _, _, _ = _prepare(config)
    ensemble = simulate_model(config.model, grid, config.n_paths, config.seed)
    out = _out_dir(config)
    path = out / ("ensemble.csv" if args.format == "csv" else "ensemble.bin")
    write_ensemble(ensemble, path)
    print(f"wrote {path}")
    return 0


def cmd_fit(args):
    config = _config_from_args(args)
    grid, window, basis_x, basis_y, cutoff = _prepare(config)
    ensemble = _load_or_simulate(config, grid, args.ensemble)
    fit_result = fit(ensemble, window, basis_x, basis_y, (args.m1, args.m2), cutoff)
    out = _out_dir(config)
    write_fit(fit_result, out / "fit.json")
    _write_density_grids(config, ensemble, window, fit_result, out)
    print(f"wrote {out / 'fit.json'} (m=({args.m1},{args.m2}), truncated={fit_result.truncated})")
    return 0


def cmd_select(args):
    config = _config_from_args(args)
    grid, window, basis_x, basis_y, cutoff = _prepare(config)
    ensemble = _load_or_simulate(config, grid, args.ensemble)
    pen = PenaltySpec(kind=config.penalty, kappa=config.kappa)
    collection = build_collection(
        ensemble, window, basis_x, basis_y, (config.cap_m1, config.cap_m2), cutoff
    )
    result = select(ensemble, window, basis_x, basis_y, pen, collection, cutoff)
    out = _out_dir(config)
    selection_table_csv(result, out / "selection_table.csv")
    write_fit(result.fit, out / "fit.json")
    _write_density_grids(config, ensemble, window, result.fit, out)
    print(f"chosen m=({result.chosen[0]},{result.chosen[1]}); wrote {out / 'selection_table.csv'}")
    return 0


def cmd_benchmark(args):
    config = _config_from_args(args)
    report = run_experiment(config)
    out = _out_dir(config)
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv())
    s = report.summary()
    print(
        "reps=%d  100*MISE mean=%.4g sd=%.4g median=%.4g  mean dims=(%.2f, %.2f)"
        % (s["reps"], s["mise_100_mean"], s["mise_100_sd"], s["mise_100_median"],
           s["mean_m1"], s["mean_m2"])
    )
    return 0


def _make_payoff(name, strike):
    if name == "const":
        return lambda y: np.ones_like(y)
    if name == "identity":
        return lambda y: y
    if name == "call":
        return lambda y: np.maximum(y - strike, 0.0)
    return lambda y: np.maximum(strike - y, 0.0)


def cmd_price(args):
    config = _config_from_args(args)
    grid, window, basis_x, basis_y, cutoff = _prepare(config)
    ensemble = _load_or_simulate(config, grid, args.ensemble)
    pen = PenaltySpec(kind=config.penalty, kappa=config.kappa)
    collection = build_collection(
        ensemble, window, basis_x, basis_y, (config.cap_m1, config.cap_m2), cutoff
    )
    result = select(ensemble, window, basis_x, basis_y, pen, collection, cutoff)
    ew = eval_window(
        ensemble, window.lag_index, window.lag_index, config.n_grid_x, config.n_grid_y
    )
    payoff = _make_payoff(args.payoff, args.strike)
    y_grid = ew.y_grid()
    entries = []
    for x in args.x:
        fk = feynman_kac(result.fit, payoff, x, y_grid)
        price = option_price(result.fit, payoff, x, args.rate, y_grid)
        entries.append({"x": x, "functional": fk, "price": price})
    payload = {
        "payoff": args.payoff,
        "strike": args.strike,
        "rate": args.rate,
        "maturity": window.lag_t,
        "chosen_m": list(result.chosen),
        "seed": config.seed,
        "values": entries,
    }
    out = _out_dir(config)
    (out / "price.json").write_text(json.dumps(payload, indent=1))
    print(f"wrote {out / 'price.json'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="transdens",
        description="Transition-density estimation for diffusion path ensembles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a path ensemble and write it to disk")
    _add_common_flags(p)
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit at fixed dimensions and export the density grid")
    _add_common_flags(p)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--ensemble", help="read this ensemble file instead of simulating")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="adaptive dimension selection plus fit export")
    _add_common_flags(p)
    p.add_argument("--ensemble", help="read this ensemble file instead of simulating")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("benchmark", help="Monte-Carlo error benchmark over repetitions")
    _add_common_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("price", help="plug-in functional / option price from a fitted density")
    _add_common_flags(p)
    p.add_argument("--ensemble", help="read this ensemble file instead of simulating")
    p.add_argument("--payoff", choices=PAYOFFS, default="const")
    p.add_argument("--strike", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--x", type=float, action="append", required=True)
    p.set_defaults(func=cmd_price)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TransdensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
