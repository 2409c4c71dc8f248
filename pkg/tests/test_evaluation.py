import numpy as np
import pytest
from scipy import stats

import transdens as td
from transdens.densities import TransitionDensityOracle
from transdens.errors import ParameterError, TransdensError
from transdens.estimator import EstimationWindow
from transdens.evaluation import EvalWindow, _window_term

from conftest import make_ensemble


class TestEvalWindow:
    def test_quantile_targets_on_uniform(self):
        rng = np.random.default_rng(21)
        values = rng.uniform(0, 1, size=(100_000, 3))
        ens = make_ensemble(values)
        window = td.eval_window(ens, 1, 1)
        assert window.x_lo == pytest.approx(0.02, abs=0.005)
        assert window.x_hi == pytest.approx(0.98, abs=0.005)
        assert window.y_lo == pytest.approx(0.01, abs=0.005)
        assert window.y_hi == pytest.approx(0.99, abs=0.005)
        assert window.n_x == 100 and window.n_y == 100

    def test_degenerate_cross_section_rejected(self):
        ens = make_ensemble(np.full((50, 4), 3.0))
        with pytest.raises(ParameterError):
            td.eval_window(ens, 1, 1)

    def test_too_few_paths_rejected(self):
        ens = make_ensemble(np.random.default_rng(0).normal(size=(5, 4)))
        with pytest.raises(ParameterError):
            td.eval_window(ens, 1, 1)

    def test_grids(self):
        w = EvalWindow(-1.0, 1.0, 0.0, 2.0, n_x=5, n_y=4)
        assert w.area == pytest.approx(4.0)
        assert w.x_grid()[0] == -1.0 and w.x_grid()[-1] == 1.0
        assert len(w.y_grid()) == 4


class TestMise:
    def _window(self):
        return EvalWindow(0.0, 2.0, 0.0, 1.0, n_x=10, n_y=10)

    def test_perfect_fit_is_zero(self):
        w = self._window()
        p = np.ones((10, 10))
        assert td.mise([(p, p, w), (p, p, w)]) == 0.0

    def test_null_estimator_normalizes_to_one(self):
        w = self._window()
        rng = np.random.default_rng(2)
        p = rng.uniform(0.5, 2.0, size=(10, 10))
        assert td.mise([(p, np.zeros_like(p), w)]) == pytest.approx(1.0, rel=1e-12)

    def test_scale_invariance_of_ratio(self):
        w = self._window()
        rng = np.random.default_rng(3)
        reps = [
            (rng.uniform(0.5, 2.0, size=(10, 10)), rng.uniform(0.0, 2.0, size=(10, 10)), w)
            for _ in range(4)
        ]
        base = td.mise(reps)
        scaled = td.mise([(3.0 * p, 3.0 * q, w) for p, q, w in reps])
        assert scaled == pytest.approx(base, rel=1e-12)

    def test_last_rep_normalizer(self):
        w = self._window()
        p1 = np.full((10, 10), 1.0)
        p2 = np.full((10, 10), 2.0)
        # numerator averages both reps; denominator uses only the last
        value = td.mise([(p1, np.zeros_like(p1), w), (p2, np.zeros_like(p2), w)])
        expected = 0.5 * (w.area * 1.0 + w.area * 4.0) / (w.area * 4.0)
        assert value == pytest.approx(expected, rel=1e-12)

    def test_per_rep_variant(self):
        w = self._window()
        p1 = np.full((10, 10), 1.0)
        p2 = np.full((10, 10), 2.0)
        value = td.mise(
            [(p1, np.zeros_like(p1), w), (p2, np.zeros_like(p2), w)],
            per_rep_denominator=True,
        )
        assert value == pytest.approx(1.0, rel=1e-12)

    def test_zero_denominator_rejected(self):
        w = self._window()
        z = np.zeros((10, 10))
        with pytest.raises(ParameterError):
            td.mise([(z, z, w)])


class TestRunExperiment:
    def _config(self, **kw):
        base = dict(
            model="ou", n_paths=40, horizon=1.0, delta=0.01, lag=0.1,
            reps=2, cap_m1=3, cap_m2=3, seed=7,
        )
        base.update(kw)
        return td.ExperimentConfig(**base)

    def test_single_rep_reduces_to_one_cycle(self):
        report = td.run_experiment(self._config(reps=1))
        assert len(report.records) == 1
        assert report.denominator == report.records[0].true_sq_term
        assert report.mise == pytest.approx(
            report.records[0].err_term / report.records[0].true_sq_term
        )

    def test_deterministic_reports(self):
        a = td.run_experiment(self._config(reps=3))
        b = td.run_experiment(self._config(reps=3))
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()

    def test_seed_changes_results(self):
        a = td.run_experiment(self._config(reps=2))
        b = td.run_experiment(self._config(reps=2, seed=8))
        assert a.to_json() != b.to_json()

    def test_parallel_matches_serial(self):
        serial = td.run_experiment(self._config(reps=3, jobs=1))
        parallel = td.run_experiment(self._config(reps=3, jobs=2))
        assert serial.to_json() == parallel.to_json()

    def test_rep_failure_aborts_with_index(self):
        # 8 paths are too few for quantile windows, so repetition 0 fails
        config = self._config(n_paths=8)
        with pytest.raises(TransdensError, match="repetition 0"):
            td.run_experiment(config)

    def test_aggregates_recomputable_from_records(self):
        report = td.run_experiment(self._config(reps=3))
        scaled = 100.0 * np.array(
            [r.err_term / report.denominator for r in report.records]
        )
        s = report.summary()
        assert s["mise_100_mean"] == pytest.approx(scaled.mean())
        assert s["mise_100_median"] == pytest.approx(np.median(scaled))
        assert s["mean_m1"] == pytest.approx(np.mean([r.m1 for r in report.records]))


class TestFeynmanKac:
    YG = np.linspace(-5.0, 5.0, 2001)

    def _oracle(self):
        return TransitionDensityOracle("ou", td.default_params("ou"), 1.0)

    def test_unit_payoff_normalizes(self):
        value = td.feynman_kac(self._oracle(), lambda y: np.ones_like(y), 0.5, self.YG)
        assert value == pytest.approx(1.0, abs=1e-4)

    def test_conditional_mean(self):
        # E[Y | x=1] = exp(-r*t/2) = exp(-1), frozen
        value = td.feynman_kac(self._oracle(), lambda y: y, 1.0, self.YG)
        assert value == pytest.approx(0.36787944117144233, abs=1e-3)

    def test_fitted_density_triangle_bound(self):
        grid = td.SimGrid.for_estimation(0.01, 2.0, 1.0)
        ens = td.simulate_model("ou", grid, 100, seed=5)
        w = EstimationWindow.for_lag(grid, 1.0, horizon=2.0)
        basis = td.BasisSpec("hermite")
        f = td.fit(ens, w, basis, basis, (3, 4))
        payoff = lambda y: y
        x = 0.5
        fitted = td.feynman_kac(f, payoff, x, self.YG)
        exact = td.feynman_kac(self._oracle(), payoff, x, self.YG)
        p_fit = td.evaluate(f, np.array([x]), self.YG)[0]
        p_true = np.atleast_1d(self._oracle().density(x, self.YG))
        bound = np.trapezoid(np.abs(payoff(self.YG)) * np.abs(p_fit - p_true), self.YG)
        assert abs(fitted - exact) <= bound + 1e-12

    def test_callable_density_accepted(self):
        value = td.feynman_kac(
            lambda x, y: stats.norm.pdf(y, loc=x), lambda y: np.ones_like(y), 0.0, self.YG
        )
        assert value == pytest.approx(1.0, abs=1e-6)


class TestOptionPrice:
    YG = np.linspace(-5.0, 5.0, 2001)

    def _oracle(self):
        return TransitionDensityOracle("ou", td.default_params("ou"), 1.0)

    def test_unit_payoff_discounts(self):
        price = td.option_price(self._oracle(), lambda y: np.ones_like(y), 0.0, 0.07, self.YG)
        assert price == pytest.approx(np.exp(-0.07), abs=1e-4)

    def test_zero_rate_equals_functional(self):
        payoff = lambda y: np.maximum(y, 0.0)
        fk = td.feynman_kac(self._oracle(), payoff, 0.3, self.YG)
        price = td.option_price(self._oracle(), payoff, 0.3, 0.0, self.YG)
        assert price == fk

    def test_call_against_gaussian_partial_expectation(self):
        oracle = self._oracle()
        strike = 0.2
        x = 0.6
        mean = x * np.exp(-1.0)
        sd = np.sqrt(oracle.conditional_var)
        d = (mean - strike) / sd
        closed_form = (mean - strike) * stats.norm.cdf(d) + sd * stats.norm.pdf(d)
        payoff = lambda y: np.maximum(y - strike, 0.0)
        price = td.option_price(oracle, payoff, x, 0.0, self.YG)
        assert price == pytest.approx(closed_form, abs=1e-3)

    def test_callable_requires_maturity(self):
        with pytest.raises(ParameterError):
            td.option_price(
                lambda x, y: stats.norm.pdf(y), lambda y: np.ones_like(y), 0.0, 0.05, self.YG
            )
        value = td.option_price(
            lambda x, y: stats.norm.pdf(y),
            lambda y: np.ones_like(y),
            0.0,
            0.05,
            self.YG,
            maturity=2.0,
        )
        assert value == pytest.approx(np.exp(-0.1), abs=1e-4)


def test_window_term_helper():
    w = EvalWindow(0.0, 1.0, 0.0, 2.0, n_x=4, n_y=4)
    g = np.full((4, 4), 3.0)
    assert _window_term(g, w) == pytest.approx(2.0 * 9.0)
