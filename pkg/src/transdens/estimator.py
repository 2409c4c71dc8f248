"""Projection least-squares estimation of the transition density.

The estimator on a product space of dimensions (m1, m2) solves
Psi_hat * Theta = Z_hat, where Psi_hat is the empirical Gram matrix of the
x-basis along the paths and Z_hat couples the x-basis at time s with the
y-basis at time s+t. Time integrals are left-Riemann sums on the sampling
grid. An eigenvalue-based stability cutoff truncates the estimator to zero
when the Gram matrix is too close to singular.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .basis import BasisSpec
from .errors import ParameterError

# relative eigenvalue floor below which the Gram matrix counts as singular
_EIG_GUARD = 1e-12
# target relative residual of the normal-equations solve
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class EstimationWindow:
    """Grid indices over which the empirical integrals run.

    The s-nodes are 0..s_last covering [0, T_eff] with T_eff = s_last*delta;
    the left-Riemann rule uses the first s_last of them. The lagged state
    sits lag_index steps later.
    """

    s_last: int
    lag_index: int
    delta: float

    def __post_init__(self):
        if self.s_last < 1:
            raise ParameterError("window needs at least two s-nodes")
        if self.lag_index < 0:
            raise ParameterError(f"lag_index must be nonnegative, got {self.lag_index}")
        if not self.delta > 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")

    @property
    def t_eff(self):
        return self.s_last * self.delta

    @property
    def lag_t(self):
        return self.lag_index * self.delta

    @property
    def node_count(self):
        return self.s_last

    @classmethod
    def for_lag(cls, grid, t, horizon=None):
        """Window for lag t on the given grid.

        t must be an integer multiple of the grid step. By default s runs
        over [0, horizon] with horizon = grid.horizon - t; pass an explicit
        horizon to integrate over a shorter span.
        """
        ratio = t / grid.delta
        lag_index = int(round(ratio))
        if abs(ratio - lag_index) > 1e-9 * max(1.0, abs(ratio)):
            raise ParameterError(
                f"lag t={t} is not an integer multiple of delta={grid.delta}"
            )
        max_last = grid.n_steps - lag_index
        if horizon is None:
            s_last = max_last
        else:
            ratio = horizon / grid.delta
            s_last = int(round(ratio))
            if abs(ratio - s_last) > 1e-9 * max(1.0, abs(ratio)):
                raise ParameterError(
                    f"horizon={horizon} is not an integer multiple of delta={grid.delta}"
                )
            if s_last > max_last:
                raise ParameterError(
                    f"horizon={horizon} plus lag t={t} exceeds the simulated grid"
                )
        return cls(s_last=s_last, lag_index=lag_index, delta=grid.delta)


@dataclass(frozen=True)
class GramMatrix:
    """Empirical Gram matrix with its spectral diagnostics."""

    psi: np.ndarray
    min_eig: float
    max_eig: float
    inv_op_norm: float

    @classmethod
    def from_matrix(cls, psi):
        # callers pass symmetric matrices up to rounding; eigvalsh reads one
        # triangle, so the raw matmul output is stored unchanged
        psi = np.asarray(psi, dtype=np.float64)
        eigs = np.linalg.eigvalsh(psi)
        min_eig = float(eigs[0])
        max_eig = float(eigs[-1])
        inv_op_norm = 1.0 / min_eig if min_eig > 0 else math.inf
        return cls(psi=psi, min_eig=min_eig, max_eig=max_eig, inv_op_norm=inv_op_norm)

    @property
    def invertible(self):
        return self.min_eig > _EIG_GUARD * max(self.max_eig, 0.0) and self.min_eig > 0

    def leading(self, m1):
        """Diagnostics for the leading principal m1 x m1 sub-block."""
        if m1 == self.psi.shape[0]:
            return self
        return GramMatrix.from_matrix(self.psi[:m1, :m1])


def _window_states(ensemble, window):
    if window.s_last + window.lag_index > ensemble.grid.n_steps:
        raise ParameterError("window does not fit the ensemble grid")
    xs = ensemble.values[:, : window.s_last]
    ys = ensemble.values[:, window.lag_index : window.lag_index + window.s_last]
    return xs.ravel(), ys.ravel()


def gram_matrix(ensemble, window, basis_x, m1):
    """Empirical Gram matrix of the first m1 x-basis functions."""
    xs, _ = _window_states(ensemble, window)
    bx = basis_x.evaluate(m1, xs)
    psi = bx.T @ bx / (ensemble.n_paths * window.node_count)
    return GramMatrix.from_matrix(psi)


def cross_matrix(ensemble, window, basis_x, basis_y, m):
    """Empirical coupling of the x-basis at s with the y-basis at s+t."""
    m1, m2 = m
    xs, ys = _window_states(ensemble, window)
    bx = basis_x.evaluate(m1, xs)
    if window.lag_index == 0 and basis_y == basis_x and m2 == m1:
        by = bx  # s+0 = s; same array keeps this bitwise equal to the Gram
    else:
        by = basis_y.evaluate(m2, ys)
    return bx.T @ by / (ensemble.n_paths * window.node_count)


@dataclass(frozen=True)
class CutoffConfig:
    """Which x-dimensions count as stable.

    rule="singular" (default) excludes only numerically singular Gram
    matrices; rule="threshold" additionally enforces the explicit bound
    L_x(m1)*max(|Psi^-1|_op^exponent, 1) <= c_cut*NT/log(NT). The explicit
    bound is far too strict for half-line data under the Hermite basis
    (the Gram spectrum decays geometrically there), so it is opt-in.
    """

    c_cut: float = 1.0
    exponent: int = 1
    rule: str = "singular"

    def __post_init__(self):
        if not self.c_cut > 0:
            raise ParameterError(f"c_cut must be positive, got {self.c_cut}")
        if self.exponent not in (1, 2):
            raise ParameterError(f"exponent must be 1 or 2, got {self.exponent}")
        if self.rule not in ("singular", "threshold"):
            raise ParameterError(f"rule must be 'singular' or 'threshold', got {self.rule!r}")


def stability_cutoff(gram, phi_l, n_paths, t_eff, config=CutoffConfig()):
    """True when the Gram matrix counts as stable (inclusive bound)."""
    if not gram.invertible:
        return False
    if config.rule == "singular":
        return True
    nt = n_paths * t_eff
    if nt <= 1.0:
        return False
    bound = config.c_cut * nt / math.log(nt)
    lhs = phi_l * max(gram.inv_op_norm**config.exponent, 1.0)
    return lhs <= bound


@dataclass(frozen=True)
class TransitionFit:
    """Fitted estimator: coefficient matrix plus diagnostics.

    truncated=True means the stability cutoff failed (or the Gram matrix was
    numerically singular) and the estimator is the zero function.
    """

    m: tuple
    theta: np.ndarray
    gram: GramMatrix
    z: np.ndarray
    lag_t: float
    basis_x: BasisSpec
    basis_y: BasisSpec
    truncated: bool

    def evaluate(self, x_grid, y_grid):
        return evaluate(self, x_grid, y_grid)


def _solve_normal_equations(gram, z):
    factor = cho_factor(gram.psi, lower=True, check_finite=False)
    theta = cho_solve(factor, z, check_finite=False)
    z_norm = np.linalg.norm(z)
    if z_norm > 0:
        for _ in range(3):
            residual = z - gram.psi @ theta
            if np.linalg.norm(residual) <= _RESIDUAL_TOL * z_norm:
                break
            theta = theta + cho_solve(factor, residual, check_finite=False)
    return theta


def solve_from_blocks(gram, z, lag_t, basis_x, basis_y, n_paths, t_eff, cutoff=CutoffConfig()):
    """Build a TransitionFit from precomputed Gram/cross matrices."""
    m = (gram.psi.shape[0], z.shape[1])
    truncated = not gram.invertible
    if not truncated and cutoff is not None:
        phi_l = basis_x.penalty_sup_constant(m[0])
        truncated = not stability_cutoff(gram, phi_l, n_paths, t_eff, cutoff)
    if truncated:
        theta = np.zeros(m)
    else:
        try:
            theta = _solve_normal_equations(gram, z)
        except LinAlgError:
            theta = np.zeros(m)
            truncated = True
    return TransitionFit(
        m=m,
        theta=theta,
        gram=gram,
        z=z,
        lag_t=lag_t,
        basis_x=basis_x,
        basis_y=basis_y,
        truncated=truncated,
    )


def fit(ensemble, window, basis_x, basis_y, m, cutoff=CutoffConfig()):
    """Projection least-squares fit at dimensions m=(m1, m2).

    A singular Gram matrix or a failed stability cutoff yields a truncated
    fit (zero estimator), not an exception. Pass cutoff=None to keep only
    the numerical-singularity guard.
    """
    m1, m2 = m
    gram = gram_matrix(ensemble, window, basis_x, m1)
    z = cross_matrix(ensemble, window, basis_x, basis_y, m)
    return solve_from_blocks(
        gram, z, window.lag_t, basis_x, basis_y, ensemble.n_paths, window.t_eff, cutoff
    )


def evaluate(fit_result, x_grid, y_grid):
    """Estimator values on the product grid, shape (len(x_grid), len(y_grid))."""
    bx = fit_result.basis_x.evaluate(fit_result.m[0], np.asarray(x_grid, dtype=np.float64))
    by = fit_result.basis_y.evaluate(fit_result.m[1], np.asarray(y_grid, dtype=np.float64))
    return bx @ fit_result.theta @ by.T


def empirical_sq_norm(fit_result):
    """Squared empirical norm of the fitted surface, trace(Theta' Psi Theta)."""
    if fit_result.truncated:
        return 0.0
    return float(np.sum(fit_result.theta * (fit_result.gram.psi @ fit_result.theta)))


# ---------------------------------------------------------------------------
# serialization: self-describing JSON record

def fit_to_json(fit_result):
    record = {
        "m1": fit_result.m[0],
        "m2": fit_result.m[1],
        "lag_t": fit_result.lag_t,
        "basis_x": {"family": fit_result.basis_x.family, "support": list(fit_result.basis_x.support)},
        "basis_y": {"family": fit_result.basis_y.family, "support": list(fit_result.basis_y.support)},
        "truncated": fit_result.truncated,
        "theta": fit_result.theta.tolist(),
        "z": fit_result.z.tolist(),
        "gram": {
            "psi": fit_result.gram.psi.tolist(),
            "min_eig": fit_result.gram.min_eig,
            "max_eig": fit_result.gram.max_eig,
            "inv_op_norm": (
                None if math.isinf(fit_result.gram.inv_op_norm) else fit_result.gram.inv_op_norm
            ),
        },
    }
    return json.dumps(record, indent=1)


def fit_from_json(text):
    record = json.loads(text)
    gram = GramMatrix(
        psi=np.array(record["gram"]["psi"], dtype=np.float64),
        min_eig=record["gram"]["min_eig"],
        max_eig=record["gram"]["max_eig"],
        inv_op_norm=(
            math.inf if record["gram"]["inv_op_norm"] is None else record["gram"]["inv_op_norm"]
        ),
    )
    return TransitionFit(
        m=(record["m1"], record["m2"]),
        theta=np.array(record["theta"], dtype=np.float64),
        gram=gram,
        z=np.array(record["z"], dtype=np.float64),
        lag_t=record["lag_t"],
        basis_x=BasisSpec(record["basis_x"]["family"], tuple(record["basis_x"]["support"])),
        basis_y=BasisSpec(record["basis_y"]["family"], tuple(record["basis_y"]["support"])),
        truncated=record["truncated"],
    )


def write_fit(fit_result, path):
    with open(path, "w") as fh:
        fh.write(fit_to_json(fit_result))


def read_fit(path):
    with open(path) as fh:
        return fit_from_json(fh.read())
