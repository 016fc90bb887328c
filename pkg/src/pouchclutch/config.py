"""Scenario files: one YAML or JSON document describing a run.

Every section is optional and falls back to package defaults. Unknown keys
are rejected so a typo cannot silently leave a default in place. Example::

    clutch:
      geometry: {radius_a: 5.08, face_thickness_h: 0.12, gap_g: 0.5}
      material: {youngs_modulus: 142.2, poisson_ratio: 0.3}
      spring: {stiffness_k: 0.05, preload_F0: 0.0}
      friction: {mu_static: 1.0, mu_kinetic: 1.0, baseline_Fb: 0.53}
      beta: 0.625
    encoder: {resolution: 1.0, tape_length: 40.0, sample_rate: 100, debounce: 2}
    pcc: {rest_length_L0: 100, clutch_radius_Rc: 10, tension_coeff_cT: 0.1, slip_cap_smax: 20}
    finger: {moment_radius_r1: 15, moment_radius_r2: 12}
    sweeps:
      deflection: {pressures: [0, 50, 100, 150, 200, 250, 300], ritz_terms: 10}
      pull: {pressures: [0, 100, 200, 300], x_max: 30, step: 1}
      workspace: {p_act: [0, 50], p_clutch: [[0, 200], [0, 200], [0, 200]], grid: [5, 5, 5, 5]}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import yaml

from .apps import FingerRig, PccConfig
from .clutch import ClutchConfig, FrictionModel, SpringModel
from .encoder import EncoderPattern
from .errors import ValidationError
from .materials import TPU_FABRIC, LinearElastic
from .pouch import PouchGeometry
from .ritz import DEFAULT_TERMS


def _build(cls, data: Optional[dict], where: str, default=None):
    """Overlay ``data`` onto ``default`` (or ``cls()``), re-running validation."""
    base = default if default is not None else cls()
    if data is None:
        return base
    if not isinstance(data, dict):
        raise ValidationError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(unknown)}")
    try:
        return dataclasses.replace(base, **data)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    except TypeError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _check_keys(data: dict, allowed: Sequence[str], where: str) -> None:
    if not isinstance(data, dict):
        raise ValidationError(f"{where}: expected a mapping")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(unknown)}")


def clutch_from_dict(data: Optional[dict]) -> ClutchConfig:
    data = dict(data or {})
    _check_keys(data, ("geometry", "material", "spring", "friction", "beta"), "clutch")
    kwargs: Dict[str, Any] = {
        "geometry": _build(PouchGeometry, data.get("geometry"), "clutch.geometry"),
        "material": _build(LinearElastic, data.get("material"), "clutch.material", TPU_FABRIC),
        "spring": _build(SpringModel, data.get("spring"), "clutch.spring"),
        "friction": _build(FrictionModel, data.get("friction"), "clutch.friction"),
    }
    if "beta" in data:
        beta = data["beta"]
        if not isinstance(beta, (int, float)) or beta < 0:
            raise ValidationError("clutch.beta must be a non-negative number")
        kwargs["beta"] = float(beta)
    return ClutchConfig(**kwargs)


def clutch_to_dict(cfg: ClutchConfig) -> dict:
    return dataclasses.asdict(cfg)


@dataclass(frozen=True)
class EncoderSettings:
    resolution: float = 1.0
    tape_length: float = 40.0
    electrode_offset: Optional[float] = None
    stretch_per_kpa: float = 1e-4
    sample_rate: float = 100.0
    debounce: int = 2
    pressure_kpa: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be > 0")
        if int(self.debounce) != self.debounce or self.debounce < 1:
            raise ValidationError("debounce must be an integer >= 1")
        if not self.pressure_kpa >= 0:
            raise ValidationError("pressure_kpa must be >= 0")

    def pattern(self) -> EncoderPattern:
        return EncoderPattern(
            resolution_delta=self.resolution,
            tape_length=self.tape_length,
            electrode_offset_d=self.electrode_offset,
            stretch_per_kpa=self.stretch_per_kpa,
        )


@dataclass(frozen=True)
class DeflectionSweep:
    pressures: Tuple[float, ...] = (0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0)
    ritz_terms: int = DEFAULT_TERMS

    def __post_init__(self):
        object.__setattr__(self, "pressures", tuple(float(p) for p in self.pressures))
        if not self.pressures:
            raise ValidationError("deflection sweep needs at least one pressure")
        bad = [p for p in self.pressures if not 0.0 <= p <= 300.0]
        if bad:
            raise ValidationError(f"deflection pressures must lie in [0, 300] kPa, got {bad}")
        if int(self.ritz_terms) != self.ritz_terms or self.ritz_terms < 1:
            raise ValidationError("ritz_terms must be an integer >= 1")


@dataclass(frozen=True)
class PullSweep:
    pressures: Tuple[float, ...] = (0.0, 100.0, 200.0, 300.0)
    x_max: float = 30.0
    step: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pressures", tuple(float(p) for p in self.pressures))
        if not self.pressures or any(p < 0 for p in self.pressures):
            raise ValidationError("pull pressures must be a non-empty list of values >= 0")
        if not self.x_max > 0:
            raise ValidationError("x_max must be > 0")
        if not 0 < self.step <= self.x_max:
            raise ValidationError(f"step must satisfy 0 < step <= x_max (step={self.step}, x_max={self.x_max})")


@dataclass(frozen=True)
class WorkspaceSweep:
    p_act: Tuple[float, float] = (0.0, 50.0)
    p_clutch: Tuple[Tuple[float, float], ...] = ((0.0, 200.0),) * 3
    grid: Tuple[int, ...] = (5, 5, 5, 5)

    def __post_init__(self):
        try:
            object.__setattr__(self, "p_act", tuple(float(v) for v in self.p_act))
            object.__setattr__(self, "p_clutch", tuple(tuple(float(v) for v in r) for r in self.p_clutch))
            object.__setattr__(self, "grid", tuple(self.grid))
        except (TypeError, ValueError):
            raise ValidationError("workspace ranges must be numeric pairs") from None
        ranges = (self.p_act,) + self.p_clutch
        if len(self.p_clutch) != 3 or any(len(r) != 2 for r in ranges):
            raise ValidationError("workspace needs p_act [lo, hi] and three p_clutch [lo, hi] ranges")
        if any(not 0 <= lo <= hi for lo, hi in ranges):
            raise ValidationError("workspace ranges must satisfy 0 <= lo <= hi")
        if len(self.grid) != 4 or any(int(n) != n or n < 2 for n in self.grid):
            raise ValidationError("workspace grid must be four integers >= 2")


@dataclass(frozen=True)
class Scenario:
    clutch: ClutchConfig = field(default_factory=ClutchConfig)
    encoder: EncoderSettings = field(default_factory=EncoderSettings)
    pcc: PccConfig = field(default_factory=PccConfig)
    finger: FingerRig = field(default_factory=FingerRig)
    deflection: DeflectionSweep = field(default_factory=DeflectionSweep)
    pull: PullSweep = field(default_factory=PullSweep)
    workspace: WorkspaceSweep = field(default_factory=WorkspaceSweep)
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "Scenario":
        data = dict(data or {})
        _check_keys(data, ("clutch", "encoder", "pcc", "finger", "sweeps"), "config")
        sweeps = dict(data.get("sweeps") or {})
        _check_keys(sweeps, ("deflection", "pull", "workspace"), "sweeps")
        scenario = cls(
            clutch=clutch_from_dict(data.get("clutch")),
            encoder=_build(EncoderSettings, data.get("encoder"), "encoder"),
            pcc=_build(PccConfig, data.get("pcc"), "pcc"),
            finger=_build(FingerRig, data.get("finger"), "finger"),
            deflection=_build(DeflectionSweep, sweeps.get("deflection"), "sweeps.deflection"),
            pull=_build(PullSweep, sweeps.get("pull"), "sweeps.pull"),
            workspace=_build(WorkspaceSweep, sweeps.get("workspace"), "sweeps.workspace"),
            raw=data,
        )
        scenario.encoder.pattern()  # pattern invariants checked before any run
        return scenario

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("raw")
        d["sweeps"] = {k: d.pop(k) for k in ("deflection", "pull", "workspace")}
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_scenario(path: Optional[str]) -> Scenario:
    if path is None:
        return Scenario()
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValidationError(f"{path}: cannot parse config: {exc}") from None
    return Scenario.from_dict(data)
