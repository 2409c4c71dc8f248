import numpy as np
import pytest

import transdens as td


def make_ensemble(values, delta=0.01, model_tag="ou", params=None, seed=0):
    """Wrap a raw (n_paths, n_nodes) array as a PathEnsemble."""
    values = np.asarray(values, dtype=np.float64)
    grid = td.SimGrid(delta=delta, n_steps=values.shape[1] - 1)
    if params is None:
        params = td.OuParams(2.0, 2.0, 1)
    return td.PathEnsemble(values=values, grid=grid, model_tag=model_tag, params=params, seed=seed)


def y_quadrature_norm_sq(fit, xs, y_grid):
    """Independent route to |p_hat|_N^2: trapezoid in y, average over samples."""
    surface = td.evaluate(fit, xs, y_grid)
    per_sample = np.trapezoid(surface**2, y_grid, axis=1)
    return float(per_sample.mean())


def window_samples(ensemble, window):
    """The x-samples entering the empirical measure (left endpoints)."""
    return ensemble.values[:, : window.s_last].ravel()


@pytest.fixture(scope="session")
def ou_small():
    """Small stationary ensemble shared by estimator tests."""
    grid = td.SimGrid(delta=0.01, n_steps=60)
    return td.simulate_model("ou", grid, 12, seed=2024)
