"""Orthonormal bases: normalized Hermite functions on R, trigonometric on [a, b].

Hermite columns are c_j*H_j(x)*exp(-x^2/2) computed with the recursion on
the normalized functions themselves,

    h_{j+1}(x) = x*sqrt(2/(j+1))*h_j(x) - sqrt(j/(j+1))*h_{j-1}(x),

which stays bounded (|h_j| <= pi**-0.25) where the raw polynomial recursion
overflows past degree ~85. The trigonometric family is 1, sqrt(2)cos(2pi jx),
sqrt(2)sin(2pi jx) on [0, 1], rescaled to other intervals.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import hermite_matrix, trig_matrix
from .errors import DomainError, ParameterError

FAMILIES = ("hermite", "trig")

HERMITE_BOUND = math.pi ** -0.25


def eval_hermite(m, points):
    """Matrix of the first m Hermite functions at the given points."""
    if int(m) != m or m < 1:
        raise ParameterError(f"dimension m must be a positive integer, got {m}")
    points = np.asarray(points, dtype=np.float64)
    return hermite_matrix(points.ravel(), int(m))


def eval_trigonometric(m, points):
    """Matrix of the first m trigonometric basis functions on [0, 1]."""
    if int(m) != m or m < 1:
        raise ParameterError(f"dimension m must be a positive integer, got {m}")
    if m % 2 == 0:
        raise ParameterError(f"trigonometric dimension must be odd, got {m}")
    points = np.asarray(points, dtype=np.float64)
    if points.size and ((points < 0.0).any() or (points > 1.0).any()):
        raise DomainError("trigonometric basis points must lie in [0, 1]")
    return trig_matrix(points.ravel(), int(m))


@dataclass(frozen=True)
class BasisSpec:
    """A basis family together with its support and dimension cap."""

    family: str
    support: tuple = (0.0, 1.0)  # ignored for hermite (whole real line)
    max_dim: int = 512

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown basis family {self.family!r}, expected {FAMILIES}")
        if self.max_dim < 1:
            raise ParameterError("max_dim must be >= 1")
        if self.family == "trig":
            a, b = self.support
            if not a < b:
                raise ParameterError(f"trig support must satisfy a < b, got {self.support}")

    def evaluate(self, m, points):
        """(n_points, m) matrix of basis values."""
        if m > self.max_dim:
            raise ParameterError(f"dimension {m} exceeds max_dim={self.max_dim}")
        if self.family == "hermite":
            return eval_hermite(m, points)
        a, b = self.support
        width = b - a
        points = np.asarray(points, dtype=np.float64)
        scaled = (points - a) / width
        return eval_trigonometric(m, scaled) / math.sqrt(width)

    def valid_dims(self, cap):
        """Dimensions usable in a model sweep up to cap (odd only for trig)."""
        cap = min(cap, self.max_dim)
        if self.family == "trig":
            return list(range(1, cap + 1, 2))
        return list(range(1, cap + 1))

    def penalty_sup_constant(self, m):
        """The sup-constant convention used in budgets and penalties."""
        if self.family == "hermite":
            return math.sqrt(m)
        return float(m)


def basis_from_name(name):
    """BasisSpec for a CLI basis string ("hermite" or "trig")."""
    if name == "hermite":
        return BasisSpec("hermite")
    return BasisSpec("trig")


@lru_cache(maxsize=None)
def _hermite_sup(m):
    half_width = 2.0 * math.sqrt(m) + 5.0
    grid = np.linspace(-half_width, half_width, 100_001)
    values = hermite_matrix(grid, m)
    return float(np.einsum("ij,ij->i", values, values).max())


def sup_norm_constant(spec, m):
    """Numerical sup over the support of the summed squared basis functions."""
    if m > spec.max_dim:
        raise ParameterError(f"dimension {m} exceeds max_dim={spec.max_dim}")
    if spec.family == "trig":
        a, b = spec.support
        return m / (b - a)
    return _hermite_sup(int(m))
