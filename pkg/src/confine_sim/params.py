"""Model parameters and YAML configuration.

Configuration files are nested mappings whose groups and keys mirror the
dataclasses below, e.g.::

    nucleus:
      k_b: 0.00316
    channel:
      f_width: 0.5

Unknown groups or keys are rejected. Any subset may be given; the rest keep
their defaults.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .environment import ChannelSpec, ConfigurationError


@dataclass(frozen=True)
class CortexParams:
    dp_c: float = 2.56  # pressure
    k_c: float = 0.3  # elasticity
    A_c: float = 1.8  # target area
    mu_c: float = 50.0  # area penalty
    r_pol: float = 10.0  # polymerization rate
    pol_width: float = 0.5  # source shape exp(-(d^2 / (2 w))^P)
    pol_power: float = 3.0
    k_tau: float = 1e-4  # tangential friction (shared with the centrosome)


@dataclass(frozen=True)
class NucleusParams:
    dp_n: float = 1.0
    A_n: float = 0.7
    mu_n: float = 30.0
    k_b: float = 3.16e-3
    xi_cont: float = 10.0
    k_cont: float = 5.0
    lam: float = 0.0  # uniform shift of the potential
    zeta: float = 10.0  # tangential redistribution rate
    resync_every: int = 10
    x0_wavelengths: float = 0.25  # initial centre, in channel wavelengths


@dataclass(frozen=True)
class CentrosomeParams:
    k_e: float = 1e-3  # nucleus-centrosome spring
    mt_law: str = "zero"  # "zero" or "linear"
    k_mt: float = 0.0
    mt_rest_length: float = 0.0


@dataclass(frozen=True)
class ChannelParams:
    xi: float = 20.0
    f_beta: float = 0.2
    f_omega0: float = 8.0
    f_width: float = 0.4

    def spec(self) -> ChannelSpec:
        return ChannelSpec(f_width=self.f_width, f_beta=self.f_beta, f_omega0=self.f_omega0, xi=self.xi)


@dataclass(frozen=True)
class NumericsParams:
    N_c: int = 250
    N_n: int = 200
    dt: float = 2e-4
    dt_max: float = 2e-4
    dt_min: float = 1e-9
    t_end: float = 1.3
    snapshot_stride: int = 50
    grow_after: int = 20
    grow_factor: float = 1.2
    max_displacement: float = 0.5  # fraction of the shortest segment per step


@dataclass(frozen=True)
class ModelParams:
    cortex: CortexParams = field(default_factory=CortexParams)
    nucleus: NucleusParams = field(default_factory=NucleusParams)
    centrosome: CentrosomeParams = field(default_factory=CentrosomeParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    numerics: NumericsParams = field(default_factory=NumericsParams)

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return dataclasses.asdict(self)

    def with_value(self, path: str, value) -> "ModelParams":
        group, key = resolve_key(path)
        sub = getattr(self, group)
        return replace(self, **{group: replace(sub, **{key: _coerce(sub, key, value)})})


_GROUP_CLASSES = {
    "cortex": CortexParams,
    "nucleus": NucleusParams,
    "centrosome": CentrosomeParams,
    "channel": ChannelParams,
    "numerics": NumericsParams,
}


def resolve_key(path: str) -> tuple[str, str]:
    """Map ``group.key`` or an unambiguous bare ``key`` to ``(group, key)``."""
    if "." in path:
        group, key = path.split(".", 1)
        cls = _GROUP_CLASSES.get(group)
        if cls is None:
            raise ConfigurationError(f"unknown parameter group '{group}'")
        if key not in {f.name for f in fields(cls)}:
            raise ConfigurationError(f"unknown parameter '{path}'")
        return group, key
    hits = [(g, path) for g, cls in _GROUP_CLASSES.items() if path in {f.name for f in fields(cls)}]
    if not hits:
        raise ConfigurationError(f"unknown parameter '{path}'")
    if len(hits) > 1:
        raise ConfigurationError(f"ambiguous parameter '{path}', use group.key")
    return hits[0]


def _coerce(sub, key: str, value):
    current = getattr(sub, key)
    if isinstance(current, bool):
        raise ConfigurationError(f"{key}: boolean parameters are not supported")
    if isinstance(current, int):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigurationError(f"{key} must be an integer, got {value}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{key} must be an integer, got {value!r}") from None
    if isinstance(current, float):
        if isinstance(value, bool):
            raise ConfigurationError(f"{key} must be a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{key} must be a number, got {value!r}") from None
    if not isinstance(value, str):
        raise ConfigurationError(f"{key} must be a string, got {value!r}")
    return value


def validate(p: ModelParams) -> None:
    for group in _GROUP_CLASSES:
        sub = getattr(p, group)
        for f in fields(sub):
            v = getattr(sub, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigurationError(f"{group}.{f.name} must be finite")
    positive = [
        ("cortex", "k_c"), ("cortex", "A_c"), ("cortex", "mu_c"), ("cortex", "k_tau"),
        ("cortex", "pol_width"), ("cortex", "pol_power"),
        ("nucleus", "A_n"), ("nucleus", "k_b"), ("nucleus", "xi_cont"), ("nucleus", "zeta"),
        ("numerics", "dt"), ("numerics", "dt_max"), ("numerics", "dt_min"), ("numerics", "t_end"),
        ("numerics", "grow_factor"), ("numerics", "max_displacement"),
    ]
    for g, k in positive:
        if not getattr(getattr(p, g), k) > 0:
            raise ConfigurationError(f"{g}.{k} must be positive")
    nonneg = [
        ("cortex", "r_pol"), ("nucleus", "mu_n"), ("nucleus", "k_cont"), ("centrosome", "k_e"),
        ("centrosome", "k_mt"), ("centrosome", "mt_rest_length"),
    ]
    for g, k in nonneg:
        if getattr(getattr(p, g), k) < 0:
            raise ConfigurationError(f"{g}.{k} must be non-negative")
    if p.centrosome.mt_law not in ("zero", "linear"):
        raise ConfigurationError("centrosome.mt_law must be 'zero' or 'linear'")
    if p.numerics.N_c < 5 or p.numerics.N_n < 5:
        raise ConfigurationError("numerics.N_c and numerics.N_n must be at least 5")
    if p.numerics.snapshot_stride < 1 or p.numerics.grow_after < 1 or p.nucleus.resync_every < 1:
        raise ConfigurationError("strides must be at least 1")
    if p.numerics.dt_min > p.numerics.dt_max:
        raise ConfigurationError("numerics.dt_min exceeds numerics.dt_max")
    p.channel.spec()  # channel-specific checks


def from_mapping(data: dict | None) -> ModelParams:
    if data is None:
        return ModelParams()
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping of parameter groups")
    kwargs = {}
    for group, values in data.items():
        cls = _GROUP_CLASSES.get(group)
        if cls is None:
            raise ConfigurationError(f"unknown parameter group '{group}'")
        if values is None:
            values = {}
        if not isinstance(values, dict):
            raise ConfigurationError(f"group '{group}' must be a mapping")
        base = cls()
        known = {f.name for f in fields(cls)}
        upd = {}
        for key, value in values.items():
            if key not in known:
                raise ConfigurationError(f"unknown parameter '{group}.{key}'")
            upd[key] = _coerce(base, key, value)
        kwargs[group] = replace(base, **upd)
    return ModelParams(**kwargs)


def load_config(path: str | Path | None) -> ModelParams:
    """Load a YAML file; ``None`` or ``"defaults"`` gives the default model."""
    if path is None or str(path) == "defaults":
        return ModelParams()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}") from None
    return from_mapping(data)


def dump_config(p: ModelParams) -> str:
    return yaml.safe_dump(p.to_dict(), sort_keys=False)
