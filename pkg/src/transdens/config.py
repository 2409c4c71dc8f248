"""Experiment configuration: defaults, file loading, flag overrides."""

import json
from dataclasses import dataclass, fields

from .basis import FAMILIES
from .errors import ConfigError
from .selection import PENALTY_KINDS
from .simulate import MODEL_TAGS


@dataclass
class ExperimentConfig:
    model: str = "ou"
    n_paths: int = 200
    horizon: float = 10.0
    delta: float = 0.01
    lag: float = 1.0
    reps: int = 50
    basis_x: str = "hermite"
    basis_y: str = "hermite"
    cap_m1: int = 10
    cap_m2: int = 12
    penalty: str = "plain"
    kappa: float = 2.0
    cutoff: float = 1.0
    cutoff_exponent: int = 1
    cutoff_rule: str = "singular"
    seed: int = 12345
    out: str = "out"
    n_grid_x: int = 100
    n_grid_y: int = 100
    jobs: int = 1
    per_rep_denominator: bool = False

    def validate(self):
        def integral(value, step):
            ratio = value / step
            return abs(ratio - round(ratio)) <= 1e-9 * max(1.0, abs(ratio))

        if self.model not in MODEL_TAGS:
            raise ConfigError(f"model: expected one of {MODEL_TAGS}, got {self.model!r}")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths: must be >= 1, got {self.n_paths}")
        if not self.delta > 0:
            raise ConfigError(f"delta: must be positive, got {self.delta}")
        if not self.horizon > 0:
            raise ConfigError(f"horizon: must be positive, got {self.horizon}")
        if not self.lag > 0:
            raise ConfigError(f"lag: must be positive, got {self.lag}")
        if self.lag > self.horizon:
            raise ConfigError(
                f"lag: {self.lag} must not exceed the horizon {self.horizon}"
            )
        if not integral(self.lag, self.delta):
            raise ConfigError(
                f"lag: {self.lag} is not an integer multiple of delta={self.delta}"
            )
        if not integral(self.horizon, self.delta):
            raise ConfigError(
                f"horizon: {self.horizon} is not an integer multiple of delta={self.delta}"
            )
        if self.reps < 1:
            raise ConfigError(f"reps: must be >= 1, got {self.reps}")
        if self.basis_x not in FAMILIES:
            raise ConfigError(f"basis_x: expected one of {FAMILIES}, got {self.basis_x!r}")
        if self.basis_y not in FAMILIES:
            raise ConfigError(f"basis_y: expected one of {FAMILIES}, got {self.basis_y!r}")
        if self.cap_m1 < 1 or self.cap_m2 < 1:
            raise ConfigError(f"caps: must be >= (1, 1), got ({self.cap_m1}, {self.cap_m2})")
        if self.penalty not in PENALTY_KINDS:
            raise ConfigError(f"penalty: expected one of {PENALTY_KINDS}, got {self.penalty!r}")
        if not self.kappa > 0:
            raise ConfigError(f"kappa: must be positive, got {self.kappa}")
        if not self.cutoff > 0:
            raise ConfigError(f"cutoff: must be positive, got {self.cutoff}")
        if self.cutoff_exponent not in (1, 2):
            raise ConfigError(f"cutoff_exponent: must be 1 or 2, got {self.cutoff_exponent}")
        if self.cutoff_rule not in ("singular", "threshold"):
            raise ConfigError(
                f"cutoff_rule: must be 'singular' or 'threshold', got {self.cutoff_rule!r}"
            )
        if self.seed < 0:
            raise ConfigError(f"seed: must be nonnegative, got {self.seed}")
        if self.n_grid_x < 2 or self.n_grid_y < 2:
            raise ConfigError("n_grid_x/n_grid_y: must be >= 2")
        if self.jobs < 1:
            raise ConfigError(f"jobs: must be >= 1, got {self.jobs}")
        return self

    def report_settings(self):
        """Statistical settings echoed into reports (paths and jobs excluded)."""
        keys = (
            "model", "n_paths", "horizon", "delta", "lag", "reps", "basis_x", "basis_y",
            "cap_m1", "cap_m2", "penalty", "kappa", "cutoff", "cutoff_exponent", "cutoff_rule", "seed",
            "n_grid_x", "n_grid_y", "per_rep_denominator",
        )
        return {k: getattr(self, k) for k in keys}


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key, raw):
    target = _FIELD_TYPES[key]
    if target is bool or target == "bool":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if target is int or target == "int":
            if isinstance(raw, float) and raw != int(raw):
                raise ValueError(f"{raw} is not an integer")
            return int(raw) if isinstance(raw, (int, float)) else int(str(raw).strip())
        if target is float or target == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}")
    return str(raw).strip()


def load_config_file(path):
    """Read key=value text or JSON (by extension); returns a raw dict."""
    path = str(path)
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON ({exc})")
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path}: expected a JSON object")
        return raw
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config file {path}:{lineno}: expected key=value, got {line!r}")
        raw[key.strip()] = value.strip()
    return raw


def make_config(file_path=None, overrides=None):
    """Defaults, then file values, then flag overrides; unknown keys rejected."""
    values = {}
    if file_path is not None:
        for key, raw in load_config_file(file_path).items():
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    try:
        config = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc))
    return config.validate()
