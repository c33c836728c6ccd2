"""Flat ``section.key = value`` run configuration."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .material import MaterialParams, check_relations, derive_params

PRESETS = ("aligned", "winding_linear", "taylor_green", "steady_plus_noise")


class ConfigError(ValueError):
    """Malformed or invalid configuration; message names the line or field."""


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


def _opt_str(s: str):
    return s or None


# key -> (attribute, parser)
KEYS = {
    "grid.n": ("n", int),
    "material.alpha1": ("alpha1", float),
    "material.alpha2": ("alpha2", float),
    "material.alpha3": ("alpha3", float),
    "material.alpha4": ("alpha4", float),
    "material.alpha5": ("alpha5", float),
    "material.alpha6": ("alpha6", float),
    "material.gamma": ("gamma", float),
    "material.reynolds": ("reynolds", float),
    "material.h_field": ("h_field", float),
    "material.h_squared": ("h_squared", float),
    "winding.a1": ("a1", int),
    "winding.a2": ("a2", int),
    "init.preset": ("preset", _choice(*PRESETS)),
    "init.snapshot": ("init_snapshot", _opt_str),
    "init.seed": ("seed", int),
    "init.amplitude": ("amplitude", float),
    "init.v_amplitude": ("v_amplitude", float),
    "init.modes": ("modes", int),
    "time.dt": ("dt", float),
    "time.t_end": ("t_end", float),
    "time.sample_every": ("sample_every", int),
    "output.dir": ("output_dir", _opt_str),
    "output.snapshot_every": ("snapshot_every", int),
    "mode.coupling_off": ("coupling_off", _bool),
    "mode.integrator": ("integrator", _choice("euler", "bdf2")),
    "reference.snapshot": ("reference_snapshot", _opt_str),
    "reference.steady": ("reference_steady", _bool),
    "steady.method": ("steady_method", _choice("newton", "gradient_flow")),
    "steady.tol": ("steady_tol", float),
    "steady.init": ("steady_init", _choice("seeded", "zero", "pi", "random")),
    "steady.seed_amplitude": ("steady_seed_amplitude", float),
    "steady.h_ratio": ("steady_h_ratio", float),
    "steady.max_iter": ("steady_max_iter", int),
    "steady.max_time": ("steady_max_time", float),
}


@dataclass(frozen=True)
class RunConfig:
    n: int = 64
    alpha1: float = 0.0
    alpha2: float = -1.0
    alpha3: float = 0.0
    alpha4: float = 1.0
    alpha5: float = 1.0
    alpha6: float = 0.0
    gamma: float = 0.5
    reynolds: float = 1.0
    h_field: float | None = None
    h_squared: float | None = None
    a1: int = 0
    a2: int = 0
    preset: str = "aligned"
    init_snapshot: str | None = None
    seed: int = 0
    amplitude: float = 0.2
    v_amplitude: float = 0.05
    modes: int = 2
    dt: float = 1e-3
    t_end: float = 1.0
    sample_every: int = 1
    output_dir: str | None = None
    snapshot_every: int = 0
    coupling_off: bool = False
    integrator: str = "euler"
    reference_snapshot: str | None = None
    reference_steady: bool = False
    steady_method: str = "newton"
    steady_tol: float = 1e-10
    steady_init: str = "seeded"
    steady_seed_amplitude: float = 0.5
    steady_h_ratio: float | None = None
    steady_max_iter: int = 60
    steady_max_time: float = 200.0

    @property
    def winding(self) -> tuple[int, int]:
        return (self.a1, self.a2)

    @property
    def alphas(self) -> tuple[float, ...]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.alpha5, self.alpha6)

    @property
    def field_strength(self) -> float:
        if self.h_squared is not None:
            return float(np.sqrt(self.h_squared)) if self.h_squared >= 0 else float("nan")
        return 0.0 if self.h_field is None else self.h_field

    def relations(self):
        return check_relations(self.alphas, self.gamma, self.reynolds, self.field_strength)

    def material(self) -> MaterialParams:
        return derive_params(self.alphas, self.gamma, self.reynolds, self.field_strength)

    def canonical(self) -> str:
        """Normalised text of every field except the output location."""
        lines = []
        for key, (attr, _) in sorted(KEYS.items()):
            if attr == "output_dir":
                continue
            lines.append(f"{key} = {getattr(self, attr)!r}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_seed(self, seed: int | None) -> "RunConfig":
        return self if seed is None else replace(self, seed=int(seed))


def validate_config(cfg: RunConfig) -> None:
    """Structural checks beyond the material relations."""
    if cfg.n < 16 or cfg.n % 2:
        raise ConfigError(f"grid.n: must be even and >= 16, got {cfg.n}")
    if not cfg.dt > 0:
        raise ConfigError(f"time.dt: must be positive, got {cfg.dt}")
    if not cfg.t_end > 0:
        raise ConfigError(f"time.t_end: must be positive, got {cfg.t_end}")
    if cfg.sample_every < 1:
        raise ConfigError("time.sample_every: must be >= 1")
    if cfg.snapshot_every < 0:
        raise ConfigError("output.snapshot_every: must be >= 0")
    if cfg.h_field is not None and cfg.h_squared is not None:
        raise ConfigError("material.h_field and material.h_squared are mutually exclusive")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("init.seed: must fit in an unsigned 64-bit integer")
    if not cfg.steady_tol > 0:
        raise ConfigError("steady.tol: must be positive")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        attr, parser = KEYS[key]
        try:
            values[attr] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def dump_config(cfg: RunConfig) -> str:
    """Render a config back to the flat text format (round-trips through parse_config)."""
    out = []
    defaults = RunConfig()
    for key, (attr, _) in KEYS.items():
        val = getattr(cfg, attr)
        if val == getattr(defaults, attr) or val is None:
            continue
        if isinstance(val, bool):
            val = "true" if val else "false"
        out.append(f"{key} = {val}")
    return "\n".join(out) + "\n"
