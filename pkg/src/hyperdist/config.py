"""Run configuration: defaults, an optional `section.key = value` file, then flags."""

import math
import os
from dataclasses import dataclass, field, replace

from .netmodel import NetConfig, OmegaGrid
from .pairing import M_MAX
from .quadrature import QuadratureConfig

ENV_VAR = "HYPERDIST_CONFIG"

# key -> (section attribute, field, type)
KEYS = {
    "quad.base_nodes": ("quad", "base_nodes", int),
    "quad.panel_order": ("quad", "panel_order", int),
    "quad.tolerance": ("quad", "tolerance", float),
    "quad.node_cap": ("quad", "node_cap", int),
    "net.omega0": ("net", "omega0", float),
    "net.ratio": ("net", "ratio", float),
    "net.levels": ("net", "levels", int),
    "net.tau": ("net", "tau", float),
    "net.abs_bound": ("net", "abs_bound", float),
    "battery.m_max": ("battery", "m_max", int),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BatteryConfig:
    m_max: int = M_MAX


@dataclass(frozen=True)
class RunConfig:
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    net: NetConfig = field(default_factory=NetConfig)
    battery: BatteryConfig = field(default_factory=BatteryConfig)

    def grid(self, dim):
        return self.net.grid(dim)

    def to_dict(self):
        out = {}
        for key, (section, name, _) in KEYS.items():
            out[key] = getattr(getattr(self, section), name)
        return out


def _convert(key, text, kind):
    try:
        if kind is int:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        value = float(text)
        if not math.isfinite(value):
            raise ValueError
        return value
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {text!r}") from None


def parse_config_text(text, source="<config>"):
    """Parse `section.key = value` lines with `#` comments into a dict of typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, value, KEYS[key][2])
    return values


def apply(config, values):
    """Return a copy of config with typed `values` applied (validated by the dataclasses)."""
    sections = {"quad": {}, "net": {}, "battery": {}}
    for key, value in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        section, name, _ = KEYS[key]
        sections[section][name] = value
    try:
        quad = replace(config.quad, **sections["quad"])
        net = replace(config.net, **sections["net"])
        battery = replace(config.battery, **sections["battery"])
        if quad.tolerance <= 0 or quad.base_nodes < 1 or quad.panel_order < 1 or quad.node_cap < 2:
            raise ValueError("quadrature settings out of range")
        if battery.m_max < 0:
            raise ValueError("battery.m_max must be >= 0")
        OmegaGrid(net.omega0, net.ratio, net.levels)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(quad, net, battery)


def load_config(path=None, overrides=None, environ=None):
    """Defaults, then the file at `path` (or $HYPERDIST_CONFIG), then `overrides`."""
    environ = os.environ if environ is None else environ
    path = path or environ.get(ENV_VAR)
    config = RunConfig()
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        config = apply(config, parse_config_text(text, path))
    if overrides:
        config = apply(config, overrides)
    return config
