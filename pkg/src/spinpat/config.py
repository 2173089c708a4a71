"""Parameter files.

A parameter file is YAML with one ``{value, unit}`` entry per physical
quantity, grouped in sections (``magnet``, ``channel``, ``interface`` ...).
:func:`load_config` converts everything to SI and returns a :class:`Params`
mapping keyed by dot-path (``"channel.D"``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml

log = logging.getLogger(__name__)

DEFAULT_PARAMS = "default_params.yaml"


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent parameter files."""


# unit string -> SI multiplier
_UNITS = {
    "1": 1.0,
    "bool": None,
    "nm": 1e-9,
    "nm^2": 1e-18,
    "m": 1.0,
    "m^2": 1.0,
    "ps": 1e-12,
    "ns": 1e-9,
    "s": 1.0,
    "mV": 1e-3,
    "V": 1.0,
    "K": 1.0,
    "J/K": 1.0,
    "C": 1.0,
    "H/m": 1.0,
    "1/Ohm": 1.0,
    "S": 1.0,
    "1/(s T)": 1.0,
    "A/m": 1.0,
    "m^2/s": 1.0,
    "m^2/(V s)": 1.0,
    "1/uOhm m": 1e6,
    "S/m": 1.0,
    "J/m^3": 1.0,
}

# Tabulated units that are dimensionally off; value kept, unit replaced.
_REINTERPRETED = {
    ("magnet.Ku", "J/m^2"): (1.0, "J/m^3", "an energy density must be per volume"),
    ("magnet.Ns", "1/V"): (1.0, "1", "a spin count is dimensionless"),
    ("channel.sigma", "1/uOhm m^2"): (1e6, "S/m", "conductivity in 1/(uOhm m)"),
}


def _load_yaml(text: str, origin: str):
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{origin}: parse error at {where}: {exc.problem}") from exc
    return data, node


def _key_lines(node, prefix: str = "") -> dict[str, int]:
    out: dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else k.value
            out[path] = k.start_mark.line + 1
            if isinstance(v, yaml.MappingNode) and not prefix:
                out.update(_key_lines(v, path))
    return out


def _flatten(data: Any, origin: str, lines: Mapping[str, int]) -> dict[str, tuple[Any, str]]:
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}: top level must be a mapping of sections")
    flat = {}
    for section, entries in data.items():
        if not isinstance(entries, dict):
            raise ConfigError(f"{origin}:{lines.get(section, '?')}: section '{section}' must be a mapping")
        for name, entry in entries.items():
            path = f"{section}.{name}"
            where = f"{origin}:{lines.get(path, '?')}"
            if not isinstance(entry, dict) or set(entry) != {"value", "unit"}:
                raise ConfigError(f"{where}: field '{path}' must be {{value, unit}}")
            flat[path] = (entry["value"], str(entry["unit"]), where)
    return flat


def _to_si(path: str, value: Any, unit: str, where: str):
    if (path, unit) in _REINTERPRETED:
        scale, si_unit, why = _REINTERPRETED[(path, unit)]
        log.info("%s: unit '%s' reinterpreted as %s (%s)", path, unit, si_unit, why)
        return float(value) * scale
    if unit not in _UNITS:
        raise ConfigError(f"{where}: unknown unit '{unit}' for '{path}'")
    scale = _UNITS[unit]
    if scale is None:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: '{path}' must be true or false")
        return value
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms like 1.76e11 as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: '{path}' must be numeric, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}: '{path}' must be finite")
    return float(value) * scale


@dataclass(frozen=True)
class Params(Mapping):
    """SI parameter set keyed by dot-path, e.g. ``params["channel.tau_s"]``."""

    data: dict
    raw: dict = field(repr=False)

    def __getitem__(self, key):
        return self.data[key]

    def __iter__(self):
        return iter(self.data)

    def __len__(self):
        return len(self.data)

    def section(self, name: str) -> dict:
        pre = name + "."
        return {k[len(pre):]: v for k, v in self.data.items() if k.startswith(pre)}

    def with_overrides(self, overrides: Mapping[str, Any] | Iterable[str]) -> "Params":
        """Return a copy with ``key=value`` overrides applied (values in the file's unit)."""
        if not isinstance(overrides, Mapping):
            overrides = dict(_parse_override(s) for s in overrides)
        raw = dict(self.raw)
        for key, value in overrides.items():
            if key not in raw:
                raise ConfigError(f"override: unknown key '{key}'")
            _, unit, where = raw[key]
            raw[key] = (value, unit, "override")
        return _build(raw)

    # domain object helpers ---------------------------------------------
    def geometry(self):
        from .magnetics import MagnetGeometry

        s = self.section("magnet")
        return MagnetGeometry(s["Lx"], s["Ly"], s["Lz"])

    def material(self):
        from .magnetics import MagnetMaterial

        s = self.section("magnet")
        return MagnetMaterial(alpha=s["alpha"], gamma=s["gamma"], Ms=s["Ms"], Ns=s["Ns"],
                              Ku=s["Ku"], demag=s["demag"])

    def thermal(self, seed: int = 0, T: float | None = None):
        from .magnetics import ThermalEnvironment

        g, m = self.geometry(), self.material()
        return ThermalEnvironment(T=self["thermal.T"] if T is None else T,
                                  kB=self["constants.kB"], Eb=m.Ku * g.volume, seed=seed)

    def channel(self, length: float | None = None):
        from .transport import ChannelParams

        s = self.section("channel")
        sigma = s["sigma"]
        if self["size_effect.enabled"]:
            from .transport import effective_conductivity

            base = ChannelParams(s["L_int"], s["W_int"], s["H_int"], s["A"], s["dx"], sigma,
                                 s["D"], s["mu"], s["tau_s"])
            sigma = effective_conductivity(self.size_effect(), base, self["size_effect.bulk_sigma"])
        return ChannelParams(length=s["L_int"] if length is None else length, width=s["W_int"],
                             thickness=s["H_int"], area=s["A"], dx=s["dx"], sigma=sigma,
                             D=s["D"], mobility=s["mu"], tau_s=s["tau_s"])

    def interface(self):
        from .transport import InterfaceParams

        s = self.section("interface")
        return InterfaceParams(s["G_up"], s["G_down"], s["ReG_mix"], s["ImG_mix"])

    def size_effect(self):
        from .transport import SizeEffectParams

        s = self.section("size_effect")
        return SizeEffectParams(p=s["p"], R=s["R"], grain_size=s["grain_size"],
                                mean_free_path=s["mean_free_path"])

    def switching(self, chi: float, theta0: float | None = None):
        from .magnetics import SwitchingModel, thermal_cone_angle

        if theta0 is None:
            theta0 = thermal_cone_angle(self.thermal(T=self["thermal.T_nominal"]))
        return SwitchingModel(tau0=self["switching.tau0"], theta0=theta0, chi=chi)


def _parse_override(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise ConfigError(f"override '{text}' is not key=value")
    key, val = text.split("=", 1)
    return key.strip(), yaml.safe_load(val)


def _schema() -> dict:
    text = resources.files("spinpat").joinpath("data").joinpath(DEFAULT_PARAMS).read_text()
    data, node = _load_yaml(text, DEFAULT_PARAMS)
    return _flatten(data, DEFAULT_PARAMS, _key_lines(node))


def _build(raw: dict) -> Params:
    values = {path: _to_si(path, v, unit, where) for path, (v, unit, where) in raw.items()}
    p = Params(data=values, raw=raw)
    _check(p)
    return p


def _check(p: Params) -> None:
    s = p.section("channel")
    if abs(s["A"] - s["W_int"] * s["H_int"]) > 1e-3 * s["A"]:
        raise ConfigError("channel.A must equal W_int * H_int")
    if abs(s["AR"] - s["H_int"] / s["W_int"]) > 1e-3 * s["AR"]:
        raise ConfigError("channel.AR must equal H_int / W_int")
    for key in ("magnet.Lx", "magnet.Ly", "magnet.Lz", "magnet.alpha", "magnet.gamma", "magnet.Ms",
                "magnet.Ns", "magnet.Ku", "channel.dx", "channel.sigma", "channel.D",
                "simulation.dt"):
        if p[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if p["interface.G_up"] <= p["interface.G_down"] or p["interface.G_down"] <= 0:
        raise ConfigError("interface conductances need G_up > G_down > 0")


def load_config(path: str | Path | None = None, overrides=()) -> Params:
    """Load a parameter file (the bundled defaults when ``path`` is None).

    The file must define exactly the fields of the bundled default file.
    """
    schema = _schema()
    if path is None:
        raw = schema
    else:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        data, node = _load_yaml(text, str(path))
        raw = _flatten(data, str(path), _key_lines(node))
        unknown = sorted(set(raw) - set(schema))
        if unknown:
            raise ConfigError(f"{raw[unknown[0]][2]}: unknown field '{unknown[0]}'")
        missing = sorted(set(schema) - set(raw))
        if missing:
            raise ConfigError(f"{path}: missing required field '{missing[0]}'")
    params = _build(raw)
    if overrides:
        params = params.with_overrides(overrides)
    return params


def default_params() -> Params:
    return load_config(None)
