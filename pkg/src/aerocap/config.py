"""YAML configuration: one file per model, merged over packaged defaults.

A configuration directory may hold any of ``planet.yaml``, ``aero.yaml``,
``vehicle.yaml``, ``mission.yaml``, ``guidance.yaml`` and ``dispersion.yaml``.
Missing files fall back to the packaged defaults in ``data/default``. Keys are
the dataclass field names; lengths are metres, angles degrees, times seconds.
Unknown keys are rejected so that typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from aerocap.aero import LINEAR_FIT, QUADRATIC_FIT, AeroModel, VehicleModel, load_table_csv
from aerocap.guidance import GuidanceConfig, PredictorConfig
from aerocap.montecarlo import ENTRY_SETS, DispersionSpec
from aerocap.planet import AtmosphereModel, PlanetModel
from aerocap.rootfind import NMConfig
from aerocap.simulation import EntryState, Mission, Scenario, StateNoise

DEFAULT_DIR = Path(__file__).parent / "data" / "default"
CONFIG_FILES = ("planet", "aero", "vehicle", "mission", "guidance", "dispersion")

# Nested dataclass fields that are built from sub-mappings.
_NESTED = {
    (PlanetModel, "atmosphere"): AtmosphereModel,
    (Mission, "entry"): EntryState,
    (GuidanceConfig, "predictor"): PredictorConfig,
    (GuidanceConfig, "nm"): NMConfig,
    (DispersionSpec, "state_noise"): StateNoise,
}


class ConfigError(ValueError):
    """A configuration file is missing, malformed or inconsistent."""


def _tupled(v):
    if isinstance(v, list):
        return tuple(_tupled(x) for x in v)
    return v


def _coerce(value, default, where: str):
    # PyYAML reads exponent literals without a decimal point ("1e-3") as strings.
    if isinstance(value, str) and isinstance(default, (int, float)) and not isinstance(default, bool):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    return _tupled(value)


def _default(f: dataclasses.Field):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return None


def _overlay(default, value):
    """Field values of ``default`` (a dataclass instance) updated by the mapping ``value``."""
    if not (dataclasses.is_dataclass(default) and isinstance(value, dict)):
        return value
    merged = {f.name: getattr(default, f.name) for f in fields(default)}
    merged.update(value)
    return merged


def build(cls, data: dict[str, Any] | None, where: str = ""):
    """Instantiate dataclass ``cls`` from a mapping, recursing into nested configs."""
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError(f"{where or cls.__name__}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where or cls.__name__}: unknown keys {unknown}")
    kw = {}
    for name, value in data.items():
        here = f"{where}.{name}" if where else name
        sub = _NESTED.get((cls, name))
        if isinstance(value, sub or ()):
            kw[name] = value
        elif sub is not None:
            # A partial mapping overrides only the keys it names.
            kw[name] = build(sub, _overlay(_default(known[name]), value), here)
        else:
            kw[name] = _coerce(value, _default(known[name]), here)
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or cls.__name__}: {exc}") from exc


def _read_yaml(path: Path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def _aero_from(doc: dict, base_dir: Path) -> AeroModel:
    doc = dict(doc)
    preset = doc.pop("preset", None)
    csv_path = doc.pop("table_csv", None)
    if csv_path is not None:
        if preset is not None or doc.get("kind", "table") != "table":
            raise ConfigError("aero: table_csv cannot be combined with a preset or analytic kind")
        p = Path(csv_path)
        p = p if p.is_absolute() else base_dir / p
        if not p.exists():
            raise ConfigError(f"aero: table file {p} does not exist")
        try:
            table = load_table_csv(p)
        except ValueError as exc:
            raise ConfigError(f"aero: {exc}") from exc
        extra = {k: v for k, v in doc.items() if k != "kind"}
        return dataclasses.replace(table, **{k: float(v) for k, v in extra.items()})
    if preset is not None:
        presets = {"quadratic": QUADRATIC_FIT, "linear": LINEAR_FIT}
        if preset not in presets:
            raise ConfigError(f"aero: unknown preset {preset!r}; expected one of {sorted(presets)}")
        start = dataclasses.asdict(presets[preset])
        start.update(doc)
        doc = start
    return build(AeroModel, doc, "aero")


@dataclass(frozen=True)
class RunConfig:
    """Everything loaded from a configuration directory."""

    scenario: Scenario = field(default_factory=Scenario)
    dispersion: DispersionSpec = field(default_factory=DispersionSpec)
    entry_set: str = "conservative"


def load_config(directory: str | Path | None = None) -> RunConfig:
    """Load a configuration directory; ``None`` loads the packaged defaults only."""
    docs = {name: _read_yaml(DEFAULT_DIR / f"{name}.yaml") for name in CONFIG_FILES}
    base_dir = DEFAULT_DIR
    if directory is not None:
        base_dir = Path(directory)
        if not base_dir.is_dir():
            raise ConfigError(f"configuration directory {base_dir} does not exist")
        found = False
        for name in CONFIG_FILES:
            p = base_dir / f"{name}.yaml"
            if p.exists():
                docs[name] = _read_yaml(p)
                found = True
        if not found:
            raise ConfigError(f"{base_dir}: none of {[f + '.yaml' for f in CONFIG_FILES]} found")

    disp = dict(docs["dispersion"])
    entry_set = disp.pop("entry_set", "conservative")
    if entry_set not in ENTRY_SETS:
        raise ConfigError(f"dispersion.entry_set must be one of {sorted(ENTRY_SETS)}")
    if "efpa_3sigma_deg" not in disp:
        disp["efpa_3sigma_deg"] = ENTRY_SETS[entry_set]

    scenario = Scenario(
        planet=build(PlanetModel, docs["planet"], "planet"),
        aero=_aero_from(docs["aero"], base_dir),
        vehicle=build(VehicleModel, docs["vehicle"], "vehicle"),
        mission=build(Mission, docs["mission"], "mission"),
        guidance=build(GuidanceConfig, docs["guidance"], "guidance"),
    )
    # The dispersed EFPA centres on the mission entry unless stated otherwise.
    disp.setdefault("efpa_mean_deg", scenario.mission.entry.efpa_deg)
    dispersion = build(DispersionSpec, disp, "dispersion")
    return RunConfig(scenario, dispersion, entry_set)
