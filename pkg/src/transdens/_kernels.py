"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

The backend is fixed at import time. Numba is used when importable unless
``TRANSDENS_NUMBA=0`` (or ``false``/``off``) is set in the environment.
Both implementations stay importable (``*_numpy`` suffix) so
``benchmarks/compare_backends.py`` can time them against each other.
"""

import math
import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "hermite_matrix",
    "trig_matrix",
    "bessel_i_scalar",
    "bessel_i_array",
    "ar1_paths",
    "hermite_matrix_numpy",
    "trig_matrix_numpy",
    "bessel_i_scalar_numpy",
    "bessel_i_array_numpy",
    "ar1_paths_numpy",
]

_flag = os.environ.get("TRANSDENS_NUMBA", "1").strip().lower()
if _flag in ("0", "false", "off"):
    njit = None
else:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        njit = None

NUMBA_ENABLED = njit is not None

_SQRT2 = math.sqrt(2.0)
_TWO_PI = 2.0 * math.pi
# pi**-0.25, value of the zeroth normalized Hermite function at 0
_HERMITE_C0 = math.pi ** -0.25
# arguments where the large-argument expansion takes over from the series
_BESSEL_SWITCH = 15.0


# ---------------------------------------------------------------------------
# pure-python bodies; compiled by numba below, wrapped in numpy fallbacks


def _hermite_matrix_impl(x, m):
    n = x.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        xi = x[i]
        h_prev = _HERMITE_C0 * math.exp(-0.5 * xi * xi)
        out[i, 0] = h_prev
        if m == 1:
            continue
        h_cur = _SQRT2 * xi * h_prev
        out[i, 1] = h_cur
        for j in range(1, m - 1):
            h_next = xi * math.sqrt(2.0 / (j + 1.0)) * h_cur - math.sqrt(
                j / (j + 1.0)
            ) * h_prev
            out[i, j + 1] = h_next
            h_prev = h_cur
            h_cur = h_next
    return out


def _trig_matrix_impl(x, m):
    n = x.shape[0]
    out = np.empty((n, m))
    n_pairs = (m - 1) // 2
    for i in range(n):
        out[i, 0] = 1.0
        for j in range(1, n_pairs + 1):
            angle = _TWO_PI * j * x[i]
            out[i, 2 * j - 1] = _SQRT2 * math.cos(angle)
            out[i, 2 * j] = _SQRT2 * math.sin(angle)
    return out


def _bessel_i_impl(order, x):
    if x < _BESSEL_SWITCH or x < order * order:
        # ascending series; every term is positive so no cancellation
        half = 0.5 * x
        term = half**order / math.gamma(order + 1.0)
        total = term
        q = half * half
        for k in range(1, 500):
            term *= q / (k * (k + order))
            total += term
            if term <= 1e-17 * total:
                break
        return total
    # large-argument expansion truncated at its smallest term
    mu = 4.0 * order * order
    total = 1.0
    term = 1.0
    for k in range(1, 40):
        nxt = -term * (mu - (2.0 * k - 1.0) ** 2) / (8.0 * x * k)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return math.exp(x) * total / math.sqrt(_TWO_PI * x)


def _bessel_i_array_impl(order, x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _bessel_i_impl(order, x[i])
    return out


def _ar1_paths_impl(init, rho, noise):
    n_paths, d = init.shape
    n_steps = noise.shape[1]
    out = np.empty((n_paths, n_steps + 1, d))
    for i in range(n_paths):
        for c in range(d):
            out[i, 0, c] = init[i, c]
        for k in range(n_steps):
            for c in range(d):
                out[i, k + 1, c] = rho * out[i, k, c] + noise[i, k, c]
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks (vectorized where it pays off)


def hermite_matrix_numpy(x, m):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], m))
    out[:, 0] = _HERMITE_C0 * np.exp(-0.5 * x * x)
    if m > 1:
        out[:, 1] = _SQRT2 * x * out[:, 0]
    for j in range(1, m - 1):
        out[:, j + 1] = x * math.sqrt(2.0 / (j + 1.0)) * out[:, j] - math.sqrt(
            j / (j + 1.0)
        ) * out[:, j - 1]
    return out


def trig_matrix_numpy(x, m):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], m))
    out[:, 0] = 1.0
    for j in range(1, (m - 1) // 2 + 1):
        angle = _TWO_PI * j * x
        out[:, 2 * j - 1] = _SQRT2 * np.cos(angle)
        out[:, 2 * j] = _SQRT2 * np.sin(angle)
    return out


def bessel_i_scalar_numpy(order, x):
    return _bessel_i_impl(order, x)


def bessel_i_array_numpy(order, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _bessel_i_array_impl(order, x)


def ar1_paths_numpy(init, rho, noise):
    init = np.ascontiguousarray(init, dtype=np.float64)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    n_paths, d = init.shape
    n_steps = noise.shape[1]
    out = np.empty((n_paths, n_steps + 1, d))
    out[:, 0, :] = init
    for k in range(n_steps):
        out[:, k + 1, :] = rho * out[:, k, :] + noise[:, k, :]
    return out


# ---------------------------------------------------------------------------
# backend selection

if NUMBA_ENABLED:
    _hermite_nb = njit(cache=True)(_hermite_matrix_impl)
    _trig_nb = njit(cache=True)(_trig_matrix_impl)
    _bessel_scalar_nb = njit(cache=True)(_bessel_i_impl)
    _ar1_nb = njit(cache=True)(_ar1_paths_impl)

    @njit(cache=True)
    def _bessel_array_nb(order, x):
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            out[i] = _bessel_scalar_nb(order, x[i])
        return out

    def hermite_matrix(x, m):
        return _hermite_nb(np.ascontiguousarray(x, dtype=np.float64), m)

    def trig_matrix(x, m):
        return _trig_nb(np.ascontiguousarray(x, dtype=np.float64), m)

    def bessel_i_scalar(order, x):
        return _bessel_scalar_nb(float(order), float(x))

    def bessel_i_array(order, x):
        return _bessel_array_nb(float(order), np.ascontiguousarray(x, dtype=np.float64))

    def ar1_paths(init, rho, noise):
        return _ar1_nb(
            np.ascontiguousarray(init, dtype=np.float64),
            float(rho),
            np.ascontiguousarray(noise, dtype=np.float64),
        )

else:
    hermite_matrix = hermite_matrix_numpy
    trig_matrix = trig_matrix_numpy
    bessel_i_scalar = bessel_i_scalar_numpy
    bessel_i_array = bessel_i_array_numpy
    ar1_paths = ar1_paths_numpy
