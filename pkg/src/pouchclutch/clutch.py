"""Impedance of the clutch: pouch-driven friction plus coil-spring recovery.

    F(x, p) = mu * N(p) + F_b + F_0 + k * x

N(p) is the pouch normal force, F_b the strip drag at zero pressure, F_0 the
spring preload and k the spring rate. Friction acts on a single interface;
any second rubbing face folds into the calibrated mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import CalibrationError, ValidationError
from .materials import TPU_FABRIC, LinearElastic
from .pouch import DEFAULT_BETA, PouchGeometry, normal_force

REFERENCE_ANCHORS: Tuple[Tuple[float, float, float], ...] = (
    (0.0, 0.0, 0.53),  # (x mm, p kPa, F N)
    (0.0, 300.0, 12.67),
)

STATIC = "static"
KINETIC = "kinetic"


@dataclass(frozen=True)
class SpringModel:
    stiffness_k: float = 0.05  # N/mm
    preload_F0: float = 0.0  # N

    def __post_init__(self):
        if not self.stiffness_k >= 0:
            raise ValidationError(f"stiffness_k must be >= 0, got {self.stiffness_k}")
        if not self.preload_F0 >= 0:
            raise ValidationError(f"preload_F0 must be >= 0, got {self.preload_F0}")


@dataclass(frozen=True)
class FrictionModel:
    mu_static: float = 1.0
    mu_kinetic: float = 1.0
    baseline_Fb: float = 0.53  # N

    def __post_init__(self):
        if not self.mu_kinetic > 0:
            raise ValidationError(f"mu_kinetic must be > 0, got {self.mu_kinetic}")
        if not self.mu_static >= self.mu_kinetic:
            raise ValidationError("mu_static must be >= mu_kinetic")
        if not self.baseline_Fb >= 0:
            raise ValidationError(f"baseline_Fb must be >= 0, got {self.baseline_Fb}")


@dataclass(frozen=True)
class ClutchConfig:
    geometry: PouchGeometry = field(default_factory=PouchGeometry)
    material: LinearElastic = TPU_FABRIC
    spring: SpringModel = field(default_factory=SpringModel)
    friction: FrictionModel = field(default_factory=FrictionModel)
    beta: float = DEFAULT_BETA

    def normal_force(self, p: float) -> float:
        return normal_force(p, self.geometry, self.material, self.beta)

    def mu(self, regime: str = KINETIC) -> float:
        if regime == STATIC:
            return self.friction.mu_static
        if regime == KINETIC:
            return self.friction.mu_kinetic
        raise ValidationError(f"regime must be 'static' or 'kinetic', got {regime!r}")

    def friction_force(self, p: float, regime: str = KINETIC) -> float:
        """Pressure-controlled part of the impedance, mu * N(p)."""
        return self.mu(regime) * self.normal_force(p)


@dataclass(frozen=True)
class PullCurve:
    pressure_p: float
    displacement: np.ndarray  # mm
    force: np.ndarray  # N

    def __post_init__(self):
        if np.any(np.diff(self.displacement) <= 0):
            raise ValidationError("pull-curve displacements must be strictly increasing")
        if np.any(self.force < 0):
            raise ValidationError("pull-curve forces must be non-negative")

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self.displacement.tolist(), self.force.tolist()))


def impedance_force(x: float, p: float, cfg: ClutchConfig = ClutchConfig(), regime: str = KINETIC) -> float:
    """Pulling force (N) needed to move the strip at displacement ``x`` (mm), pressure ``p`` (kPa)."""
    if not x >= 0:
        raise ValidationError(f"displacement must be >= 0 mm, got {x}")
    if not p >= 0:
        raise ValidationError(f"pressure must be >= 0 kPa, got {p}")
    return (
        cfg.friction_force(p, regime)
        + cfg.friction.baseline_Fb
        + cfg.spring.preload_F0
        + cfg.spring.stiffness_k * x
    )


def displacement_grid(x_max: float, step: float) -> np.ndarray:
    if not x_max > 0:
        raise ValidationError(f"x_max must be > 0, got {x_max}")
    if not 0 < step <= x_max:
        raise ValidationError(f"step must satisfy 0 < step <= x_max, got step={step}, x_max={x_max}")
    n = int(math.floor(x_max / step + 1e-9))
    return step * np.arange(n + 1)


def pull_curve(p: float, x_max: float, step: float, cfg: ClutchConfig = ClutchConfig(),
               regime: str = KINETIC) -> PullCurve:
    x = displacement_grid(x_max, step)
    f0 = impedance_force(0.0, p, cfg, regime)
    return PullCurve(pressure_p=p, displacement=x, force=f0 + cfg.spring.stiffness_k * x)


def force_density(p: float, cfg: ClutchConfig = ClutchConfig()) -> float:
    """Breakaway force per footprint area, N/cm^2."""
    area_cm2 = cfg.geometry.footprint_mm2 / 100.0
    return impedance_force(0.0, p, cfg, STATIC) / area_cm2


@dataclass(frozen=True)
class Calibration:
    config: ClutchConfig
    fitted: Dict[str, float]
    held: Tuple[str, ...]
    residuals: np.ndarray  # N, measured - model, per anchor

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.residuals**2)))

    def report(self) -> dict:
        return {
            "fitted": dict(self.fitted),
            "held_fixed": list(self.held),
            "residuals_N": self.residuals.tolist(),
            "rms_N": self.rms,
        }


_PARAM_NAMES = ("mu_kinetic", "lump_F", "stiffness_k")


def calibrate(anchors: Iterable[Sequence[float]], cfg_in: ClutchConfig = ClutchConfig()) -> Calibration:
    """Least-squares fit of (mu_kinetic, baseline + preload, spring rate) to (x, p, F) anchors.

    The spring rate is only fitted when the anchors span more than one
    displacement; otherwise it is held at ``cfg_in``'s value.
    """
    arr = np.asarray([tuple(map(float, a)) for a in anchors], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise CalibrationError("anchors must be (x_mm, p_kPa, F_N) triples")
    x, p, F = arr.T
    if np.any(x < 0) or np.any(p < 0):
        raise CalibrationError("anchor displacements and pressures must be >= 0")
    if len(np.unique(p)) < 2:
        raise CalibrationError("need anchors at two or more distinct pressures")
    if not np.any(p == 0):
        raise CalibrationError("need at least one anchor at p = 0 kPa")

    N = np.array([cfg_in.normal_force(pi) for pi in p])
    columns = {"mu_kinetic": N, "lump_F": np.ones_like(N), "stiffness_k": x}
    held: List[str] = []
    target = F.copy()
    if np.ptp(x) == 0:
        held.append("stiffness_k")
        target -= cfg_in.spring.stiffness_k * x
    free = [name for name in _PARAM_NAMES if name not in held]
    X = np.column_stack([columns[name] for name in free])

    if np.all(N == 0):
        raise CalibrationError("mu_kinetic is unidentifiable: no anchor pressure brings the pouch into contact")
    if np.linalg.matrix_rank(X) < len(free):
        for i, name in enumerate(free):
            rest = np.delete(X, i, axis=1)
            if np.linalg.matrix_rank(rest) == np.linalg.matrix_rank(X):
                raise CalibrationError(f"{name} is unidentifiable from the given anchors")
        raise CalibrationError("anchor set is rank deficient")

    theta, *_ = np.linalg.lstsq(X, target, rcond=None)
    fitted = dict(zip(free, theta.tolist()))
    mu = fitted["mu_kinetic"]
    lump = fitted["lump_F"]
    k = fitted.get("stiffness_k", cfg_in.spring.stiffness_k)
    if mu <= 0:
        raise CalibrationError(f"fitted mu_kinetic is non-positive ({mu:.4g})")
    if lump < 0:
        raise CalibrationError(f"fitted zero-pressure force is negative ({lump:.4g} N)")
    if k < 0:
        raise CalibrationError(f"fitted spring rate is negative ({k:.4g} N/mm)")

    preload = min(cfg_in.spring.preload_F0, lump)
    ratio = cfg_in.friction.mu_static / cfg_in.friction.mu_kinetic
    cfg = replace(
        cfg_in,
        spring=SpringModel(stiffness_k=k, preload_F0=preload),
        friction=FrictionModel(mu_static=mu * ratio, mu_kinetic=mu, baseline_Fb=lump - preload),
    )
    model = np.array([impedance_force(xi, pi, cfg) for xi, pi in zip(x, p)])
    return Calibration(config=cfg, fitted=fitted, held=tuple(held), residuals=F - model)


def reference_calibrated_config(cfg_in: ClutchConfig = ClutchConfig()) -> ClutchConfig:
    """``cfg_in`` fitted to the two zero-displacement pull-force anchors (0.53 N, 12.67 N)."""
    return calibrate(REFERENCE_ANCHORS, cfg_in).config
