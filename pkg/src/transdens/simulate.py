"""Exact simulation of the benchmark diffusion models.

All three models are driven by a d-dimensional mean-reverting Gaussian
process simulated exactly on a uniform grid: the one-step update is the
AR(1) recursion

    U((k+1)D) = exp(-r*D/2) * U(kD) + eps,   eps ~ N(0, g^2*(1-exp(-r*D))/(4r) I_d)

started from the stationary law N(0, g^2/(4r) I_d). Model "ou" is the
process itself (d=1), "tanh_ou" applies tanh componentwise (d=1), and
"cir" is the squared Euclidean norm of the d-vector (square-root process).

Each path owns a Philox counter-based stream derived from (seed, path index),
so path-level parallelism cannot change the output.
"""

import struct
from dataclasses import dataclass

import numpy as np

from ._kernels import ar1_paths
from .errors import ParameterError

MODEL_TAGS = ("ou", "tanh_ou", "cir")

# (rate, scale, dimension) used by the benchmark models
MODEL_PARAMS = {
    "ou": (2.0, 2.0, 1),
    "tanh_ou": (4.0, 1.0, 1),
    "cir": (1.0, 1.0, 6),
}


@dataclass(frozen=True)
class OuParams:
    """Drift rate, diffusion scale and dimension of the driving process."""

    r: float
    gamma: float
    d: int = 1

    def __post_init__(self):
        if not self.r > 0:
            raise ParameterError(f"drift rate r must be positive, got {self.r}")
        if not self.gamma > 0:
            raise ParameterError(f"diffusion scale gamma must be positive, got {self.gamma}")
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"dimension d must be a positive integer, got {self.d}")

    @property
    def stationary_var(self):
        """Per-component variance of the stationary law, gamma^2/(4r)."""
        return self.gamma**2 / (4.0 * self.r)

    def step_var(self, delta):
        """Per-component conditional variance over one step of size delta."""
        return self.gamma**2 * (1.0 - np.exp(-self.r * delta)) / (4.0 * self.r)


def default_params(model_tag):
    if model_tag not in MODEL_PARAMS:
        raise ParameterError(f"unknown model tag {model_tag!r}, expected one of {MODEL_TAGS}")
    r, gamma, d = MODEL_PARAMS[model_tag]
    return OuParams(r=r, gamma=gamma, d=d)


@dataclass(frozen=True)
class SimGrid:
    """Uniform time grid {k*delta : k = 0..n_steps}."""

    delta: float
    n_steps: int

    def __post_init__(self):
        if not self.delta > 0:
            raise ParameterError(f"step size delta must be positive, got {self.delta}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ParameterError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def horizon(self):
        return self.n_steps * self.delta

    @classmethod
    def for_estimation(cls, delta, horizon, lag):
        """Grid long enough that the lagged state exists for every s in [0, horizon]."""
        n_steps = int(np.ceil(round((horizon + lag) / delta, 9)))
        return cls(delta=delta, n_steps=n_steps)


@dataclass
class PathEnsemble:
    """N sampled trajectories on a shared grid, one row per path."""

    values: np.ndarray
    grid: SimGrid
    model_tag: str
    params: OuParams
    seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.n_steps + 1:
            raise ParameterError(
                f"values must be (n_paths, n_steps+1), got {self.values.shape} "
                f"for n_steps={self.grid.n_steps}"
            )
        if not np.isfinite(self.values).all():
            raise ParameterError("ensemble contains non-finite states")
        if self.model_tag == "tanh_ou" and not (np.abs(self.values) < 1.0).all():
            raise ParameterError("tanh_ou states must lie in (-1, 1)")
        if self.model_tag == "cir" and not (self.values >= 0.0).all():
            raise ParameterError("cir states must be nonnegative")

    @property
    def n_paths(self):
        return self.values.shape[0]


def _path_normals(seed, path_index, n_rows, d):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.standard_normal((n_rows, d))


def _simulate_raw(r, gamma, d, grid, n_paths, seed):
    """Raw d-dimensional states, (n_paths, n_steps+1, d). Allows gamma=0."""
    init_sd = np.sqrt(gamma**2 / (4.0 * r))
    step_sd = np.sqrt(gamma**2 * (1.0 - np.exp(-r * grid.delta)) / (4.0 * r))
    rho = np.exp(-r * grid.delta / 2.0)
    init = np.empty((n_paths, d))
    noise = np.empty((n_paths, grid.n_steps, d))
    for i in range(n_paths):
        z = _path_normals(seed, i, grid.n_steps + 1, d)
        init[i] = init_sd * z[0]
        noise[i] = step_sd * z[1:]
    return ar1_paths(init, rho, noise)


def simulate_ou_ensemble(params, grid, n_paths, seed):
    """Exact simulation of the driving process; returns (n_paths, n_steps+1, d)."""
    if int(n_paths) != n_paths or n_paths < 1:
        raise ParameterError(f"n_paths must be a positive integer, got {n_paths}")
    if seed < 0 or int(seed) != seed:
        raise ParameterError(f"seed must be a nonnegative integer, got {seed}")
    return _simulate_raw(params.r, params.gamma, params.d, grid, int(n_paths), int(seed))


def apply_model_map(raw, model_tag, grid, params, seed=0):
    """Reduce raw d-dimensional states to the model's scalar state."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 3:
        raise ParameterError(f"raw states must be 3-dimensional, got shape {raw.shape}")
    d = raw.shape[2]
    if model_tag in ("ou", "tanh_ou") and d != 1:
        raise ParameterError(f"model {model_tag!r} requires d=1, got d={d}")
    if model_tag == "ou":
        values = raw[:, :, 0]
    elif model_tag == "tanh_ou":
        # tanh of large states rounds to 1.0 in float64; keep the interval open
        inside_one = np.nextafter(1.0, 0.0)
        values = np.clip(np.tanh(raw[:, :, 0]), -inside_one, inside_one)
    elif model_tag == "cir":
        values = np.einsum("ikc,ikc->ik", raw, raw)
    else:
        raise ParameterError(f"unknown model tag {model_tag!r}, expected one of {MODEL_TAGS}")
    return PathEnsemble(values=values, grid=grid, model_tag=model_tag, params=params, seed=seed)


def simulate_model(model_tag, grid, n_paths, seed, params=None):
    """Simulate and reduce in one call, using the model's default parameters."""
    if params is None:
        params = default_params(model_tag)
    raw = simulate_ou_ensemble(params, grid, n_paths, seed)
    return apply_model_map(raw, model_tag, grid, params, seed=seed)


# ---------------------------------------------------------------------------
# serialization
#
# Binary layout (little-endian): magic b"TDEN", version u32, model tag as
# 16 ascii bytes (NUL padded), n_paths u64, n_steps u64, delta f64, r f64,
# gamma f64, d u32, seed i64, then n_paths*(n_steps+1) float64 states in
# row-major order. The CSV twin carries the same header as "# key=value"
# comment lines followed by one row of %.17g states per path.

_MAGIC = b"TDEN"
_VERSION = 1
_HEADER = struct.Struct("<4sI16sQQdddIq")


def write_ensemble(ensemble, path):
    path = str(path)
    if path.endswith(".csv"):
        _write_ensemble_csv(ensemble, path)
    else:
        _write_ensemble_bin(ensemble, path)


def read_ensemble(path):
    path = str(path)
    if path.endswith(".csv"):
        return _read_ensemble_csv(path)
    return _read_ensemble_bin(path)


def _write_ensemble_bin(ensemble, path):
    p = ensemble.params
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        ensemble.model_tag.encode("ascii").ljust(16, b"\0"),
        ensemble.n_paths,
        ensemble.grid.n_steps,
        ensemble.grid.delta,
        p.r,
        p.gamma,
        p.d,
        ensemble.seed,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ensemble.values, dtype="<f8").tobytes())


def _read_ensemble_bin(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, tag, n_paths, n_steps, delta, r, gamma, d, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise ParameterError(f"{path} is not a recognized ensemble file")
    tag = tag.rstrip(b"\0").decode("ascii")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n_paths, n_steps + 1)
    grid = SimGrid(delta=delta, n_steps=n_steps)
    params = OuParams(r=r, gamma=gamma, d=d)
    return PathEnsemble(values=values.copy(), grid=grid, model_tag=tag, params=params, seed=seed)


def _write_ensemble_csv(ensemble, path):
    p = ensemble.params
    with open(path, "w", newline="") as fh:
        fh.write(f"# model={ensemble.model_tag}\n")
        fh.write(f"# n_paths={ensemble.n_paths}\n")
        fh.write(f"# n_steps={ensemble.grid.n_steps}\n")
        fh.write(f"# delta={ensemble.grid.delta!r}\n")
        fh.write(f"# r={p.r!r}\n")
        fh.write(f"# gamma={p.gamma!r}\n")
        fh.write(f"# d={p.d}\n")
        fh.write(f"# seed={ensemble.seed}\n")
        for row in ensemble.values:
            fh.write(",".join("%.17g" % v for v in row))
            fh.write("\n")


def _read_ensemble_csv(path):
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            else:
                rows.append(np.array([float(v) for v in line.split(",")]))
    values = np.vstack(rows)
    grid = SimGrid(delta=float(meta["delta"]), n_steps=int(meta["n_steps"]))
    params = OuParams(r=float(meta["r"]), gamma=float(meta["gamma"]), d=int(meta["d"]))
    return PathEnsemble(
        values=values,
        grid=grid,
        model_tag=meta["model"],
        params=params,
        seed=int(meta["seed"]),
    )
