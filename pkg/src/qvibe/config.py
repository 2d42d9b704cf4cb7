"""Typed configuration files for the command-line tools.

Two on-disk shapes share one parser:

* an INI-like text file with ``[section]`` headers and ``key = value``
  lines, comments starting with ``#``,
* a JSON object whose keys are flattened ``"section.key"`` strings.

Every value is typed by a fixed schema. Physical quantities must carry a
unit suffix from the tables below (``t_exp = 5 s``, ``f_max = 22 kHz``,
``amplitude_pp = 20 nm``, ``phase_offset = -90 deg``); dimensionless
numbers must not carry one. Unknown sections, unknown keys, duplicate
keys, and missing or wrong units are configuration errors.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .core import (
    ClassicalFringeSpec,
    GeometryFactor,
    PhotonPairSpec,
    SPEED_OF_LIGHT,
    quadrature_delay,
)
from .errors import ConfigError
from .estimate import AnalysisOptions
from .simulate import ChannelModel, DEFAULT_TICK, SignalComponent, VibrationSignal

_TIME_UNITS = {
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15, "as": 1e-18,
}
_FREQUENCY_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12}
_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12}
_ANGLE_UNITS = {"rad": 1.0, "deg": math.pi / 180.0}

_UNIT_TABLES = {
    "time": _TIME_UNITS,
    "frequency": _FREQUENCY_UNITS,
    "length": _LENGTH_UNITS,
    "angle": _ANGLE_UNITS,
}

_NUMBER_RE = re.compile(
    r"(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(?P<unit>[A-Za-z]*)"
)

# (section, key) -> value kind. component_<n> keys in [signal] are
# matched by prefix and hold "frequency | length [| angle]" triples.
_SCHEMA: dict[str, dict[str, str]] = {
    "pair": {
        "detuning": "frequency",
        "sigma": "frequency",
        "visibility": "bare",
        "lambda_1": "length",
        "lambda_2": "length",
    },
    "classical": {
        "wavelength": "length",
        "arm_ratio": "bare",
        "phase_offset": "angle",
    },
    "channel": {
        "loss": "bare",
        "background": "bare",
        "coincidence_window": "time",
        "rate_c": "frequency",
        "rate_a": "frequency",
        "singles_rate": "frequency",
        "geometry": "int",
    },
    "signal": {
        "kind": "str",
        "frequency": "frequency",
        "amplitude_pp": "length",
        "phase": "angle",
        "harmonics": "int",
        "tau_op": "time_or_quadrature",
        "switch_frequency": "frequency",
        "frequency_a": "frequency",
        "frequency_b": "frequency",
        "amplitude_pp_a": "length",
        "amplitude_pp_b": "length",
        "phase_a": "angle",
        "phase_b": "angle",
        "gate_harmonics": "int",
    },
    "run": {
        "mode": "str",
        "t_exp": "time",
        "seed": "int",
        "trials": "int",
        "format": "str",
        "tick": "time",
        "binary": "bool",
    },
    "analysis": {
        "p_fa": "bare",
        "f_max": "frequency",
        "window": "str",
        "ratio": "bare",
        "refine": "bool",
        "points_per_period": "int",
        "method": "str",
    },
    "sweep": {
        "start": "frequency",
        "stop": "frequency",
        "step": "frequency",
        "amplitude_pp": "length",
        "exposure": "time",
        "playback_scale": "bare",
    },
    "advantage": {
        "experiment": "str",
        "values": "bare_list",
        "target_pairs": "bare",
        "fundamental": "frequency",
        "amplitude_pp": "length",
    },
    "qcrb": {
        "n_pairs": "int_list",
        "trials": "int",
        "calibration_factor": "bare",
    },
}

_MISSING = object()


def _kind_of(section: str, key: str) -> str:
    try:
        keys = _SCHEMA[section]
    except KeyError:
        raise ConfigError(f"unknown section [{section}]") from None
    if section == "signal" and re.fullmatch(r"component_\d+", key):
        return "component"
    try:
        return keys[key]
    except KeyError:
        raise ConfigError(f"unknown key {key!r} in section [{section}]") from None


def parse_quantity(text: str, kind: str, where: str):
    """Parse one schema-typed value; ``where`` names it in error messages."""
    text = text.strip()
    if kind == "str":
        if not text:
            raise ConfigError(f"{where}: empty value")
        return text
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{where}: expected true/false, got {text!r}")
    if kind == "time_or_quadrature":
        if text.lower() == "quadrature":
            return "quadrature"
        return parse_quantity(text, "time", where)
    if kind == "component":
        parts = text.split("|")
        if len(parts) not in (2, 3):
            raise ConfigError(f"{where}: expected 'freq | amplitude [| phase]'")
        freq = parse_quantity(parts[0], "frequency", where)
        amp = parse_quantity(parts[1], "length", where)
        phase = parse_quantity(parts[2], "angle", where) if len(parts) == 3 else 0.0
        return SignalComponent(freq, amp, phase)
    if kind.endswith("_list"):
        element = kind[: -len("_list")]
        return tuple(parse_quantity(p, element, where) for p in text.split("|"))

    m = _NUMBER_RE.fullmatch(text)
    if m is None:
        raise ConfigError(f"{where}: cannot parse number {text!r}")
    num = float(m.group("num"))
    unit = m.group("unit")
    if kind in ("bare", "int"):
        if unit:
            raise ConfigError(f"{where}: dimensionless value must not carry a unit, got {unit!r}")
        if kind == "int":
            if num != int(num):
                raise ConfigError(f"{where}: expected an integer, got {text!r}")
            return int(num)
        return num
    table = _UNIT_TABLES[kind]
    if unit not in table:
        raise ConfigError(
            f"{where}: {kind} value needs a unit in {sorted(table)}, got {text!r}"
        )
    return num * table[unit]


@dataclass(frozen=True)
class Config:
    """Parsed, schema-checked configuration; values stay as raw text
    until a typed accessor materialises them."""

    raw: dict[str, dict[str, str]]
    source: str = "<memory>"

    def get(self, section: str, key: str, default=_MISSING):
        text = self.raw.get(section, {}).get(key)
        if text is None:
            if default is _MISSING:
                raise ConfigError(f"{self.source}: missing required key [{section}] {key}")
            return default
        return parse_quantity(text, _kind_of(section, key), f"[{section}] {key}")

    def has(self, section: str, key: str) -> bool:
        return key in self.raw.get(section, {})

    def signal_components(self) -> tuple[SignalComponent, ...]:
        comps = []
        for key in sorted(self.raw.get("signal", {})):
            if re.fullmatch(r"component_\d+", key):
                comps.append(self.get("signal", key))
        return tuple(comps)


def _parse_ini(text: str, source: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: str | None = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SCHEMA:
                raise ConfigError(f"{source}:{lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        _kind_of(current, key)  # reject unknown keys early
        if key in sections[current]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} in [{current}]")
        sections[current][key] = value
    return sections


def _parse_json(text: str, source: str) -> dict[str, dict[str, str]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be an object")
    sections: dict[str, dict[str, str]] = {}
    for flat_key, value in doc.items():
        if "." not in flat_key:
            raise ConfigError(f"{source}: key {flat_key!r} must look like 'section.key'")
        section, key = flat_key.split(".", 1)
        _kind_of(section, key)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (int, float)):
            value = repr(value)
        elif not isinstance(value, str):
            raise ConfigError(f"{source}: {flat_key}: value must be a string or number")
        sections.setdefault(section, {})
        if key in sections[section]:
            raise ConfigError(f"{source}: duplicate key {flat_key!r}")
        sections[section][key] = value
    return sections


def parse_config(text: str, source: str = "<memory>") -> Config:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return Config(_parse_json(text, source), source)
    return Config(_parse_ini(text, source), source)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


# ----- builders -----


def build_pair(cfg: Config) -> PhotonPairSpec:
    sigma = 2.0 * math.pi * cfg.get("pair", "sigma", 0.5e12)
    visibility = cfg.get("pair", "visibility", 1.0)
    has_l1, has_l2 = cfg.has("pair", "lambda_1"), cfg.has("pair", "lambda_2")
    if has_l1 != has_l2:
        raise ConfigError("[pair] give both lambda_1 and lambda_2 or neither")
    try:
        if has_l1 and not cfg.has("pair", "detuning"):
            return PhotonPairSpec.from_wavelengths(
                cfg.get("pair", "lambda_1"),
                cfg.get("pair", "lambda_2"),
                sigma=sigma,
                visibility_v0=visibility,
            )
        detuning = cfg.get("pair", "detuning", 177e12)
        return PhotonPairSpec(
            delta_omega=2.0 * math.pi * detuning,
            sigma=sigma,
            visibility_v0=visibility,
            lambda_1=cfg.get("pair", "lambda_1", None),
            lambda_2=cfg.get("pair", "lambda_2", None),
        )
    except ValueError as exc:
        raise ConfigError(f"[pair]: {exc}") from None


def build_fringe(cfg: Config) -> ClassicalFringeSpec:
    wavelength = cfg.get("classical", "wavelength", 1550e-9)
    if not wavelength > 0:
        raise ConfigError("[classical] wavelength must be positive")
    try:
        return ClassicalFringeSpec(
            omega_optical=2.0 * math.pi * SPEED_OF_LIGHT / wavelength,
            arm_intensity_ratio=cfg.get("classical", "arm_ratio", 1.0),
            phase_offset=cfg.get("classical", "phase_offset", -math.pi / 2.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[classical]: {exc}") from None


def build_channel(cfg: Config) -> ChannelModel:
    return ChannelModel(
        loss_b=cfg.get("channel", "loss", 0.0),
        background_fraction=cfg.get("channel", "background", 0.0),
        coincidence_window=cfg.get("channel", "coincidence_window", DEFAULT_TICK),
        rate_c=cfg.get("channel", "rate_c", 200e3),
        rate_a=cfg.get("channel", "rate_a", 200e3),
        singles_rate=cfg.get("channel", "singles_rate", 100e3),
        geometry=GeometryFactor(cfg.get("channel", "geometry", 2)),
    )


def resolve_operating_delay(cfg: Config, pair: PhotonPairSpec, mode: str) -> float:
    """Static delay the signal rides on; 'quadrature' resolves per mode."""
    tau_op = cfg.get("signal", "tau_op", "quadrature" if mode == "quantum" else 0.0)
    if tau_op == "quadrature":
        if mode != "quantum":
            raise ConfigError("[signal] tau_op = quadrature only applies to quantum mode")
        return quadrature_delay(pair)
    return float(tau_op)


def build_signal(cfg: Config, pair: PhotonPairSpec, mode: str) -> VibrationSignal:
    kind = cfg.get("signal", "kind", "pure_tone")
    tau_op = resolve_operating_delay(cfg, pair, mode)
    if kind == "pure_tone":
        return VibrationSignal.pure_tone(
            cfg.get("signal", "frequency"),
            cfg.get("signal", "amplitude_pp"),
            cfg.get("signal", "phase", 0.0),
            dc_offset_delay=tau_op,
        )
    if kind == "multi_tone":
        comps = cfg.signal_components()
        if not comps:
            raise ConfigError("[signal] multi_tone needs component_<n> entries")
        return VibrationSignal.multi_tone(comps, dc_offset_delay=tau_op)
    if kind == "square_wave":
        return VibrationSignal.square_wave(
            cfg.get("signal", "frequency"),
            cfg.get("signal", "amplitude_pp"),
            n_harmonics=cfg.get("signal", "harmonics", 7),
            phase=cfg.get("signal", "phase", 0.0),
            dc_offset_delay=tau_op,
        )
    if kind == "alternating_tones":
        return VibrationSignal.alternating_tones(
            cfg.get("signal", "switch_frequency"),
            cfg.get("signal", "frequency_a"),
            cfg.get("signal", "amplitude_pp_a"),
            cfg.get("signal", "frequency_b"),
            cfg.get("signal", "amplitude_pp_b"),
            phase_a=cfg.get("signal", "phase_a", 0.0),
            phase_b=cfg.get("signal", "phase_b", 0.0),
            n_gate_harmonics=cfg.get("signal", "gate_harmonics", 7),
            dc_offset_delay=tau_op,
        )
    raise ConfigError(f"[signal] unknown kind {kind!r}")


def build_options(cfg: Config, overrides: dict | None = None) -> AnalysisOptions:
    values = {
        "p_fa": cfg.get("analysis", "p_fa", 1e-3),
        "f_max": cfg.get("analysis", "f_max", 50e3),
        "window": cfg.get("analysis", "window", "hann"),
        "refine": cfg.get("analysis", "refine", True),
        "points_per_period": cfg.get("analysis", "points_per_period", 100),
        "spectrum_method": cfg.get("analysis", "method", "auto"),
    }
    for name, value in (overrides or {}).items():
        if value is not None:
            values[name] = value
    if not 0 < values["p_fa"] < 1:
        raise ConfigError("[analysis] p_fa must lie in (0, 1)")
    return AnalysisOptions(**values)
