"""Closed-form transition densities of the three benchmark models.

For lag t the driving process is conditionally Gaussian with mean
x*exp(-r*t/2) and variance g^2*(1-exp(-r*t))/(4r), which gives the "ou"
density directly. "tanh_ou" follows by the change of variable y=tanh(u),
and "cir" (squared norm of the d-vector) is a rescaled noncentral
chi-square whose density involves the modified Bessel function of the
first kind of order d/2-1.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import bessel_i_array, bessel_i_scalar
from .errors import DomainError, EvaluationError, ParameterError
from .simulate import MODEL_TAGS, OuParams

# arguments above this overflow exp(x) scaling in float64
_BESSEL_ARG_MAX = 705.0
# keep 1/(1-y^2) finite for the tanh model
_TANH_CLAMP = 1.0 - 1e-6


def bessel_i(order, argument):
    """Modified Bessel function of the first kind, I_order(argument).

    Ascending series below the switch point, large-argument expansion
    above it. Raises EvaluationError when exp(argument) overflows.
    """
    if order < 0:
        raise ParameterError(f"order must be nonnegative, got {order}")
    arr = np.asarray(argument, dtype=np.float64)
    if (arr < 0).any():
        raise ParameterError("argument must be nonnegative")
    if (arr > _BESSEL_ARG_MAX).any():
        raise EvaluationError(
            f"bessel_i overflow: argument above {_BESSEL_ARG_MAX} exceeds float64 range"
        )
    if arr.ndim == 0:
        return bessel_i_scalar(float(order), float(arr))
    out = bessel_i_array(float(order), arr.ravel()).reshape(arr.shape)
    if not np.isfinite(out).all():
        raise EvaluationError("bessel_i produced non-finite values")
    return out


@dataclass(frozen=True)
class TransitionDensityOracle:
    """Closed-form p_t(x, y) for one of the benchmark models."""

    model_tag: str
    params: OuParams
    t: float

    def __post_init__(self):
        if self.model_tag not in MODEL_TAGS:
            raise ParameterError(
                f"unknown model tag {self.model_tag!r}, expected one of {MODEL_TAGS}"
            )
        if not self.t > 0:
            raise ParameterError(f"lag t must be positive, got {self.t}")

    @property
    def conditional_var(self):
        """Variance of the driving process over lag t, g^2*(1-exp(-r*t))/(4r)."""
        p = self.params
        return p.gamma**2 * (1.0 - math.exp(-p.r * self.t)) / (4.0 * p.r)

    def density(self, x, y):
        """p_t(x, y) for scalar x and scalar-or-array y."""
        y = np.asarray(y, dtype=np.float64)
        if self.model_tag == "ou":
            out = self._gauss(float(x), y)
        elif self.model_tag == "tanh_ou":
            self._check_open_unit(x, "x")
            self._check_open_unit(y, "y")
            xc = np.clip(x, -_TANH_CLAMP, _TANH_CLAMP)
            yc = np.clip(y, -_TANH_CLAMP, _TANH_CLAMP)
            out = self._gauss(np.arctanh(float(xc)), np.arctanh(yc)) / (1.0 - yc**2)
        else:
            if not x > 0:
                raise DomainError(f"cir density requires x > 0, got x={x}")
            if (y <= 0).any() if y.ndim else y <= 0:
                raise DomainError("cir density requires y > 0")
            out = self._sqnorm(float(x), y)
        return out if out.ndim else float(out)

    def grid(self, x_grid, y_grid):
        """Density on the product grid, shape (len(x_grid), len(y_grid))."""
        x_grid = np.asarray(x_grid, dtype=np.float64)
        return np.vstack([np.atleast_1d(self.density(x, y_grid)) for x in x_grid])

    @staticmethod
    def _check_open_unit(v, name):
        v = np.asarray(v)
        if (np.abs(v) >= 1.0).any():
            raise DomainError(f"tanh_ou density requires |{name}| < 1")

    def _gauss(self, u, v):
        mean = u * math.exp(-self.params.r * self.t / 2.0)
        var = self.conditional_var
        return np.exp(-((v - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)

    def _sqnorm(self, x, y):
        p = self.params
        ert = math.exp(-p.r * self.t)
        c = 2.0 * p.r / (p.gamma**2 * (1.0 - ert))
        order = p.d / 2.0 - 1.0
        arg = 2.0 * c * np.sqrt(x * y * ert)
        ratio = (y / (x * ert)) ** (p.d / 4.0 - 0.5)
        out = c * np.exp(-c * (x * ert + y)) * ratio * bessel_i(order, arg)
        if not np.isfinite(out).all():
            raise EvaluationError("cir density evaluation produced non-finite values")
        return out


def true_transition_density(oracle, x, y):
    """Evaluate the oracle's closed-form density at (x, y)."""
    return oracle.density(x, y)
