"""Experiment configuration: a YAML document with explicit physical units.

Physical quantities are strings such as ``"100 ns"`` or ``"1 GHz"`` and are
parsed against a fixed unit table; bare numbers are rejected for them.
Bandwidth ratios and probabilities are plain numbers.  Unknown keys are
errors.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Annotated, Any, Literal

import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}
FREQUENCY_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12, "/s": 1.0, "1/s": 1.0}

_QUANTITY = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(\S+)\s*$")


class ConfigError(ValueError):
    """Configuration failed schema validation; the message names the field path."""


def parse_quantity(text: Any, units: dict[str, float], kind: str) -> float:
    if isinstance(text, bool) or not isinstance(text, str):
        raise ValueError(f"{kind} needs an explicit unit, e.g. '100 {next(iter(units))}'; got {text!r}")
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"cannot parse {kind} {text!r}")
    value, unit = m.groups()
    if unit not in units:
        raise ValueError(f"unknown {kind} unit {unit!r}; expected one of {sorted(units)}")
    return float(value) * units[unit]


Seconds = Annotated[float, BeforeValidator(lambda v: parse_quantity(v, TIME_UNITS, "time"))]
Hertz = Annotated[float, BeforeValidator(lambda v: parse_quantity(v, FREQUENCY_UNITS, "frequency"))]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PulseConfig(_Strict):
    shape: Literal["gaussian", "one_sided_exponential", "two_sided_exponential"] = "two_sided_exponential"
    coherence_time: Seconds = 100e-9

    @field_validator("coherence_time")
    @classmethod
    def _positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("coherence_time must be positive")
        return v


class EomConfig(_Strict):
    ratios: list[Annotated[float, Field(gt=0)]] | None = None
    bandwidths: list[Hertz] | None = None

    @model_validator(mode="after")
    def _one_of(self) -> EomConfig:
        if (self.ratios is None) == (self.bandwidths is None):
            raise ValueError("give exactly one of 'ratios' or 'bandwidths'")
        if self.bandwidths is not None and any(b <= 0 for b in self.bandwidths):
            raise ValueError("bandwidths must be positive")
        return self


class FilterConfig(_Strict):
    shape: Literal["gaussian", "lorentzian", "rectangular"] = "lorentzian"
    ratios: list[Annotated[float, Field(gt=0)]] | None = None
    bandwidths: list[Hertz] | None = None

    @model_validator(mode="after")
    def _at_most_one(self) -> FilterConfig:
        if self.ratios is not None and self.bandwidths is not None:
            raise ValueError("give at most one of 'ratios' or 'bandwidths'")
        return self


class DimensionRange(_Strict):
    start: int
    stop: int

    def values(self) -> list[int]:
        return list(range(self.start, self.stop + 1))


class ChannelConfig(_Strict):
    losses: list[Annotated[float, Field(ge=0, lt=1)]] = [0.0]
    dark_rate: Hertz = 100.0
    gate_window: Seconds = 100e-9
    loop_amplitude: Annotated[float, Field(gt=0, le=1)] = 1.0


class SuperpositionConfig(_Strict):
    amplitudes: list[Annotated[float, Field(ge=0, le=1)]] = [0.0]
    phase: float = 0.0
    pairing: Literal["cyclic", "adjacent"] = "cyclic"
    basis: Literal["example", "random", "identity"] = "example"


class GridConfig(_Strict):
    oversample: Annotated[int, Field(ge=2)] = 8
    span_factor: Annotated[float, Field(ge=4)] = 8.0
    n_ref: Annotated[float, Field(gt=0)] | None = None


class OutputConfig(_Strict):
    path: str | None = None
    sidecar: bool = False


class ExperimentConfig(_Strict):
    scheme: Literal["pfm", "linear_ramp"]
    pulse: PulseConfig = PulseConfig()
    eom: EomConfig = EomConfig(ratios=[100.0])
    walsh_n: list[int] = [16, 32, 64]
    dimensions: DimensionRange | list[int] = DimensionRange(start=2, stop=10)
    filter: FilterConfig = FilterConfig()
    channel: ChannelConfig = ChannelConfig()
    superposition: SuperpositionConfig = SuperpositionConfig()
    grid: GridConfig = GridConfig()
    output: OutputConfig = OutputConfig()
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0

    @field_validator("walsh_n")
    @classmethod
    def _powers_of_two(cls, v: list[int]) -> list[int]:
        for n in v:
            if n < 4 or n & (n - 1):
                raise ValueError(f"Walsh order {n} is not a power of two >= 4")
        return v

    @field_validator("dimensions")
    @classmethod
    def _dims(cls, v: DimensionRange | list[int]) -> DimensionRange | list[int]:
        values = v.values() if isinstance(v, DimensionRange) else v
        if any(d < 2 for d in values):
            raise ValueError("every dimension must be >= 2")
        return v

    @property
    def dimension_values(self) -> list[int]:
        d = self.dimensions
        return d.values() if isinstance(d, DimensionRange) else list(d)

    def eom_ratios(self, photon_bandwidth: float) -> list[float]:
        if self.eom.ratios is not None:
            return list(self.eom.ratios)
        return [b / photon_bandwidth for b in self.eom.bandwidths or []]

    def filter_ratios(self, photon_bandwidth: float, default: list[float]) -> list[float]:
        if self.filter.ratios is not None:
            return list(self.filter.ratios)
        if self.filter.bandwidths is not None:
            return [b / photon_bandwidth for b in self.filter.bandwidths]
        return default

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: Any, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Validate a decoded config mapping, applying dotted-path ``overrides``."""
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a mapping")
    data = json.loads(json.dumps(data, default=str))
    for dotted, value in (overrides or {}).items():
        node = data
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{dotted}: cannot override inside a non-mapping")
        node[leaf] = value
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from None


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"<file>: {e}") from None
    return parse_config(data if data is not None else {}, overrides)
