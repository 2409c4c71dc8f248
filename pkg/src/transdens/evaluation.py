"""Error quantification, Monte-Carlo benchmark runs, and plug-in functionals.

The benchmark error is the normalized MISE: per repetition the squared
error between the true and fitted densities is averaged over an evaluation
grid spanned by empirical quantiles, weighted by the grid rectangle area;
the normalizer is the same functional of the true density on the final
repetition's grid.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .basis import basis_from_name
from .densities import TransitionDensityOracle
from .errors import ParameterError, TransdensError
from .estimator import CutoffConfig, EstimationWindow, TransitionFit, evaluate
from .selection import PenaltySpec, build_collection, select
from .simulate import SimGrid, default_params, simulate_model


@dataclass(frozen=True)
class EvalWindow:
    """Evaluation rectangle from empirical quantiles, with grid sizes."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    n_x: int = 100
    n_y: int = 100

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ParameterError("degenerate evaluation window: x range has zero width")
        if not self.y_lo < self.y_hi:
            raise ParameterError("degenerate evaluation window: y range has zero width")
        if self.n_x < 2 or self.n_y < 2:
            raise ParameterError("evaluation grid sizes must be >= 2")

    @property
    def area(self):
        return (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)

    def x_grid(self):
        return np.linspace(self.x_lo, self.x_hi, self.n_x)

    def y_grid(self):
        return np.linspace(self.y_lo, self.y_hi, self.n_y)


def eval_window(ensemble, t_index, lag_index, n_x=100, n_y=100):
    """Quantile window: 2%/98% of the states at t, 1%/99% at t+lag."""
    if ensemble.n_paths < 10:
        raise ParameterError("need at least 10 paths for quantile windows")
    if t_index + lag_index > ensemble.grid.n_steps:
        raise ParameterError("evaluation indices exceed the grid")
    xs = ensemble.values[:, t_index]
    ys = ensemble.values[:, t_index + lag_index]
    x_lo, x_hi = np.quantile(xs, [0.02, 0.98])
    y_lo, y_hi = np.quantile(ys, [0.01, 0.99])
    return EvalWindow(
        x_lo=float(x_lo), x_hi=float(x_hi), y_lo=float(y_lo), y_hi=float(y_hi), n_x=n_x, n_y=n_y
    )


def _window_term(grid_values, window):
    return window.area * float(np.sum(grid_values**2)) / grid_values.size


def mise(reps, per_rep_denominator=False):
    """Normalized MISE over repetitions.

    Each entry of reps is (true_grid, estimate_grid, window). The default
    normalizer uses only the final repetition's true density; the per-rep
    variant normalizes each repetition by its own true-density term.
    """
    if not reps:
        raise ParameterError("mise needs at least one repetition")
    errs = np.array([_window_term(p_true - p_hat, w) for p_true, p_hat, w in reps])
    if per_rep_denominator:
        denoms = np.array([_window_term(p_true, w) for p_true, _, w in reps])
        if (denoms == 0).any():
            raise ParameterError("mise denominator is zero")
        return float(np.mean(errs / denoms))
    p_true_last, _, w_last = reps[-1]
    denom = _window_term(p_true_last, w_last)
    if denom == 0:
        raise ParameterError("mise denominator is zero")
    return float(np.mean(errs) / denom)


@dataclass(frozen=True)
class RepRecord:
    """One repetition: selected dimensions, error term, and its window."""

    rep: int
    seed: int
    m1: int
    m2: int
    err_term: float
    true_sq_term: float
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float


@dataclass(frozen=True)
class ExperimentReport:
    """Per-repetition records plus the normalizing term of the last one."""

    model: str
    settings: dict
    master_seed: int
    records: tuple
    denominator: float
    per_rep_denominator: bool = False

    def normalized_errors(self):
        if self.per_rep_denominator:
            return np.array([r.err_term / r.true_sq_term for r in self.records])
        return np.array([r.err_term / self.denominator for r in self.records])

    @property
    def mise(self):
        return float(np.mean(self.normalized_errors()))

    def summary(self):
        scaled = 100.0 * self.normalized_errors()
        dims = np.array([(r.m1, r.m2) for r in self.records], dtype=float)
        return {
            "mise_100_mean": float(np.mean(scaled)),
            "mise_100_sd": float(np.std(scaled, ddof=1)) if len(scaled) > 1 else 0.0,
            "mise_100_median": float(np.median(scaled)),
            "mean_m1": float(np.mean(dims[:, 0])),
            "mean_m2": float(np.mean(dims[:, 1])),
            "reps": len(self.records),
        }

    def to_json(self):
        payload = {
            "model": self.model,
            "settings": self.settings,
            "master_seed": self.master_seed,
            "denominator": self.denominator,
            "per_rep_denominator": self.per_rep_denominator,
            "records": [asdict(r) for r in self.records],
            "summary": self.summary(),
        }
        return json.dumps(payload, indent=1)

    def to_csv(self):
        lines = ["rep,seed,m1,m2,err_term,true_sq_term,x_lo,x_hi,y_lo,y_hi,mise_100"]
        scaled = 100.0 * self.normalized_errors()
        for r, e in zip(self.records, scaled):
            lines.append(
                "%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g"
                % (r.rep, r.seed, r.m1, r.m2, r.err_term, r.true_sq_term,
                   r.x_lo, r.x_hi, r.y_lo, r.y_hi, e)
            )
        s = self.summary()
        lines.append("# aggregate")
        for key in ("mise_100_mean", "mise_100_sd", "mise_100_median", "mean_m1", "mean_m2"):
            lines.append("# %s=%.17g" % (key, s[key]))
        return "\n".join(lines) + "\n"


def _rep_seeds(master_seed, reps):
    state = np.random.SeedSequence(master_seed).generate_state(reps, dtype=np.uint64)
    return [int(s) for s in state]


def _single_rep(config, rep, seed):
    params = default_params(config.model)
    grid = SimGrid.for_estimation(config.delta, config.horizon, config.lag)
    window = EstimationWindow.for_lag(grid, config.lag, horizon=config.horizon)
    basis_x = basis_from_name(config.basis_x)
    basis_y = basis_from_name(config.basis_y)
    cutoff = CutoffConfig(c_cut=config.cutoff, exponent=config.cutoff_exponent, rule=config.cutoff_rule)
    pen = PenaltySpec(kind=config.penalty, kappa=config.kappa)

    ensemble = simulate_model(config.model, grid, config.n_paths, seed, params=params)
    collection = build_collection(
        ensemble, window, basis_x, basis_y, (config.cap_m1, config.cap_m2), cutoff
    )
    result = select(ensemble, window, basis_x, basis_y, pen, collection, cutoff)
    ew = eval_window(
        ensemble, window.lag_index, window.lag_index, n_x=config.n_grid_x, n_y=config.n_grid_y
    )
    oracle = TransitionDensityOracle(config.model, params, window.lag_t)
    p_true = oracle.grid(ew.x_grid(), ew.y_grid())
    p_hat = evaluate(result.fit, ew.x_grid(), ew.y_grid())
    return RepRecord(
        rep=rep,
        seed=seed,
        m1=result.chosen[0],
        m2=result.chosen[1],
        err_term=_window_term(p_true - p_hat, ew),
        true_sq_term=_window_term(p_true, ew),
        x_lo=ew.x_lo,
        x_hi=ew.x_hi,
        y_lo=ew.y_lo,
        y_hi=ew.y_hi,
    )


def _rep_worker(args):
    config, rep, seed = args
    return _single_rep(config, rep, seed)


def run_experiment(config):
    """Run the configured number of independent repetitions.

    Deterministic given the master seed: repetition seeds are substreams of
    it and aggregation is an ordered fold by repetition index. A failing
    repetition aborts the experiment with its index attached.
    """
    config.validate()
    seeds = _rep_seeds(config.seed, config.reps)
    tasks = [(config, rep, seeds[rep]) for rep in range(config.reps)]
    records = []
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = pool.map(_rep_worker, tasks)
            for rep in range(config.reps):
                try:
                    records.append(next(results))
                except StopIteration:
                    raise TransdensError(f"repetition {rep} produced no result")
                except Exception as exc:
                    raise TransdensError(f"repetition {rep} failed: {exc}") from exc
    else:
        for config_, rep, seed in tasks:
            try:
                records.append(_single_rep(config_, rep, seed))
            except Exception as exc:
                raise TransdensError(f"repetition {rep} failed: {exc}") from exc
    denominator = records[-1].true_sq_term
    return ExperimentReport(
        model=config.model,
        settings=config.report_settings(),
        master_seed=config.seed,
        records=tuple(records),
        denominator=denominator,
        per_rep_denominator=config.per_rep_denominator,
    )


# ---------------------------------------------------------------------------
# plug-in functionals

def _density_on(density, x, y_grid):
    if isinstance(density, TransitionFit):
        return evaluate(density, np.array([x]), y_grid)[0]
    if isinstance(density, TransitionDensityOracle):
        return np.atleast_1d(density.density(x, y_grid))
    return np.asarray(density(x, y_grid), dtype=np.float64)


def feynman_kac(density, payoff, x, y_grid):
    """Trapezoid quadrature of payoff(y) * p(x, y) over the y grid."""
    y_grid = np.asarray(y_grid, dtype=np.float64)
    p = _density_on(density, x, y_grid)
    return float(np.trapezoid(payoff(y_grid) * p, y_grid))


def option_price(density, payoff, x, rate, y_grid, maturity=None):
    """Discounted plug-in price exp(-rate*T) * E[payoff] at horizon T."""
    if maturity is None:
        if isinstance(density, TransitionFit):
            maturity = density.lag_t
        elif isinstance(density, TransitionDensityOracle):
            maturity = density.t
        else:
            raise ParameterError("maturity is required for a bare density callable")
    return float(np.exp(-rate * maturity) * feynman_kac(density, payoff, x, y_grid))


def write_grid_csv(path, x_grid, y_grid, values):
    """Density grid: first row y values, first column x values."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        fh.write("," + ",".join("%.17g" % v for v in y_grid) + "\n")
        for x, row in zip(x_grid, values):
            fh.write("%.17g," % x + ",".join("%.17g" % v for v in row) + "\n")


def read_grid_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        y_grid = np.array([float(v) for v in header.split(",")[1:]])
        xs, rows = [], []
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            xs.append(float(parts[0]))
            rows.append([float(v) for v in parts[1:]])
    return np.array(xs), y_grid, np.array(rows)
