"""Application scenarios built on the clutch model.

* Stiffness and grip: affine maps of the clutch friction force, fitted to the
  measured endpoints (clutch off / clutch at 300 kPa). These are descriptive,
  not predictive: actuator length, lever arms and object geometry are all
  absorbed into the two fitted gains.
* Three-clutch omnidirectional actuator: strips at 120 deg slip when actuator
  tension exceeds clutch impedance; strip lengths map to a constant-curvature
  arc.
* Two-clutch finger tracker: joint angles from strip excursions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

from .clutch import ClutchConfig, impedance_force
from .errors import InfeasibleGeometryError, ValidationError

STRIP_ANGLES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
TAYLOR_THRESHOLD = 1e-6  # on kappa * L

# endpoints measured with the clutch off and at 300 kPa
REFERENCE_STIFFNESS = (5.5e-3, 3.8e-2)  # N/mm
REFERENCE_GRIP = (3.97, 6.88)  # N
REFERENCE_CLUTCH_PRESSURE = 300.0  # kPa


@dataclass(frozen=True)
class StiffnessScenario:
    K0: float = REFERENCE_STIFFNESS[0]  # N/mm, clutch inactive
    gain_cK: float = 0.0  # N/mm of stiffness per N of friction
    pull_displacement: float = 10.0  # mm
    pull_force_FTa: float = 0.0  # N, role only

    def __post_init__(self):
        if not self.K0 > 0:
            raise ValidationError("K0 must be > 0")
        if not self.gain_cK >= 0:
            raise ValidationError("gain_cK must be >= 0")


@dataclass(frozen=True)
class GripScenario:
    base_grip_F0g: float = REFERENCE_GRIP[0]  # N
    gain_cg: float = 0.0  # N per N/mm of stiffness gain
    pull_force_FTg: float = REFERENCE_GRIP[0]  # N, role only

    def __post_init__(self):
        if not self.base_grip_F0g > 0:
            raise ValidationError("base_grip_F0g must be > 0")
        if not self.gain_cg >= 0:
            raise ValidationError("gain_cg must be >= 0")


def bending_stiffness(p_clutch: float, scenario: StiffnessScenario, clutch: ClutchConfig) -> float:
    """Soft-actuator bending stiffness (N/mm) with the clutch at ``p_clutch`` kPa."""
    if not p_clutch >= 0:
        raise ValidationError("clutch pressure must be >= 0")
    return scenario.K0 + scenario.gain_cK * clutch.friction_force(p_clutch)


def grip_force(p_clutch: float, grip: GripScenario, stiff: StiffnessScenario, clutch: ClutchConfig) -> float:
    gain = bending_stiffness(p_clutch, stiff, clutch) - stiff.K0
    return grip.base_grip_F0g + grip.gain_cg * gain


def calibrate_stiffness(
    clutch: ClutchConfig,
    K_off: float = REFERENCE_STIFFNESS[0],
    K_on: float = REFERENCE_STIFFNESS[1],
    p_on: float = REFERENCE_CLUTCH_PRESSURE,
) -> StiffnessScenario:
    friction = clutch.friction_force(p_on)
    if friction <= 0:
        raise ValidationError(f"clutch produces no friction at {p_on} kPa; stiffness gain unidentifiable")
    return StiffnessScenario(K0=K_off, gain_cK=(K_on - K_off) / friction)


def calibrate_grip(
    clutch: ClutchConfig,
    stiff: StiffnessScenario,
    F_off: float = REFERENCE_GRIP[0],
    F_on: float = REFERENCE_GRIP[1],
    p_on: float = REFERENCE_CLUTCH_PRESSURE,
) -> GripScenario:
    dK = bending_stiffness(p_on, stiff, clutch) - stiff.K0
    if dK <= 0:
        raise ValidationError("stiffness scenario has no gain; grip gain unidentifiable")
    return GripScenario(base_grip_F0g=F_off, gain_cg=(F_on - F_off) / dK, pull_force_FTg=F_off)


# ---------------------------------------------------------------- kinematics


@dataclass(frozen=True)
class PccConfig:
    rest_length_L0: float = 100.0  # mm
    clutch_radius_Rc: float = 10.0  # mm
    tension_coeff_cT: float = 0.1  # N/kPa
    slip_cap_smax: float = 20.0  # mm

    def __post_init__(self):
        if not self.rest_length_L0 > 0:
            raise ValidationError("rest_length_L0 must be > 0")
        if not self.clutch_radius_Rc > 0:
            raise ValidationError("clutch_radius_Rc must be > 0")
        if not self.tension_coeff_cT >= 0:
            raise ValidationError("tension_coeff_cT must be >= 0")
        if not self.slip_cap_smax >= 0:
            raise ValidationError("slip_cap_smax must be >= 0")


@dataclass(frozen=True)
class ArcState:
    tip: Tuple[float, float, float]  # mm
    curvature: float  # 1/mm
    plane_angle: float  # rad
    arc_length: float  # mm


def arc_tip(kappa: float, phi: float, L: float) -> Tuple[float, float, float]:
    """Tip of a circular arc of length L leaving the origin along +z and bending toward phi."""
    kl = kappa * L
    if kl < TAYLOR_THRESHOLD:
        radial = kappa * L**2 / 2.0
        axial = L - kappa**2 * L**3 / 6.0
    else:
        radial = 2.0 * math.sin(kl / 2.0) ** 2 / kappa  # (1 - cos kL)/k without cancellation
        axial = math.sin(kl) / kappa
    return (radial * math.cos(phi), radial * math.sin(phi), axial)


def pcc_forward(l1: float, l2: float, l3: float, cfg: PccConfig = PccConfig()) -> ArcState:
    """Constant-curvature configuration and tip from the three strip lengths."""
    if not (l1 > 0 and l2 > 0 and l3 > 0):
        raise ValidationError("strip lengths must be positive")
    L = (l1 + l2 + l3) / 3.0
    u = l1 - (l2 + l3) / 2.0
    v = math.sqrt(3.0) / 2.0 * (l2 - l3)
    kappa = 2.0 * math.hypot(u, v) / (3.0 * L * cfg.clutch_radius_Rc)
    if kappa * cfg.clutch_radius_Rc >= 1.0:
        raise InfeasibleGeometryError(f"strip lengths ({l1}, {l2}, {l3}) need kappa*Rc = {kappa * cfg.clutch_radius_Rc:.3f} >= 1")
    phi = math.atan2(-v, -u) if kappa > 0 else 0.0
    return ArcState(tip=arc_tip(kappa, phi, L), curvature=kappa, plane_angle=phi, arc_length=L)


def strip_lengths(kappa: float, phi: float, L: float, cfg: PccConfig = PccConfig()) -> Tuple[float, float, float]:
    """Inverse map: l_i = L (1 - kappa Rc cos(theta_i - phi))."""
    return tuple(L * (1.0 - kappa * cfg.clutch_radius_Rc * math.cos(th - phi)) for th in STRIP_ANGLES)


def clutch_slip(p_act: float, p_clutch_i: float, cfg: PccConfig, clutch: ClutchConfig) -> float:
    """Length (mm) of strip i once actuator tension has pulled it through its clutch."""
    if not (p_act >= 0 and p_clutch_i >= 0):
        raise ValidationError("pressures must be >= 0")
    k = clutch.spring.stiffness_k
    excess = cfg.tension_coeff_cT * p_act - impedance_force(0.0, p_clutch_i, clutch)
    if excess <= 0:
        slip = 0.0
    elif k == 0:
        slip = cfg.slip_cap_smax
    else:
        slip = min(excess / k, cfg.slip_cap_smax)
    return cfg.rest_length_L0 + slip


@dataclass
class WorkspaceResult:
    rows: List[Tuple[float, float, float, float, float, float]]  # p_act, p_c1..3, x, y
    skipped: int

    @property
    def xy(self) -> np.ndarray:
        return np.array([r[4:6] for r in self.rows]).reshape(-1, 2)


def _workspace_point(args):
    p_act, pcs, cfg, clutch = args
    lengths = [clutch_slip(p_act, pc, cfg, clutch) for pc in pcs]
    try:
        tip = pcc_forward(*lengths, cfg).tip
    except InfeasibleGeometryError:
        return None
    return (p_act, *pcs, tip[0], tip[1])


def workspace_sample(
    p_act_range: Tuple[float, float],
    p_clutch_ranges: Sequence[Tuple[float, float]],
    grid: Sequence[int],
    cfg: PccConfig,
    clutch: ClutchConfig,
    workers: int = 1,
) -> WorkspaceResult:
    """Tip XY over the Cartesian grid (p_act, p_c1, p_c2, p_c3), in grid order."""
    if len(p_clutch_ranges) != 3 or len(grid) != 4:
        raise ValidationError("need three clutch ranges and four grid counts")
    if any(int(n) != n or n < 2 for n in grid):
        raise ValidationError("grid counts must be integers >= 2")
    ranges = [tuple(p_act_range)] + [tuple(r) for r in p_clutch_ranges]
    for lo, hi in ranges:
        if not (0 <= lo <= hi):
            raise ValidationError(f"invalid pressure range ({lo}, {hi})")
    axes = [np.linspace(lo, hi, int(n)).tolist() for (lo, hi), n in zip(ranges, grid)]
    tasks = [(pa, (c1, c2, c3), cfg, clutch) for pa, c1, c2, c3 in product(*axes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_workspace_point, tasks))
    else:
        results = [_workspace_point(t) for t in tasks]
    rows = [r for r in results if r is not None]
    return WorkspaceResult(rows=rows, skipped=len(results) - len(rows))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    from scipy.spatial.distance import directed_hausdorff

    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def rotate_xy(points: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return points @ np.array([[c, s], [-s, c]])


def rotation_invariance(points: np.ndarray, angle: float = 2.0 * math.pi / 3.0) -> float:
    """Hausdorff distance between a planar point set and its rotation by ``angle``."""
    return hausdorff(points, rotate_xy(points, angle))


# ---------------------------------------------------------------- finger


@dataclass(frozen=True)
class FingerRig:
    moment_radius_r1: float = 15.0  # mm, MCP
    moment_radius_r2: float = 12.0  # mm, PIP + DIP

    def __post_init__(self):
        if not (self.moment_radius_r1 > 0 and self.moment_radius_r2 > 0):
            raise ValidationError("moment radii must be > 0")


def finger_angles(dL1: float, dL2: float, rig: FingerRig = FingerRig()) -> Tuple[float, float]:
    """(theta_MCP, theta_PIP+DIP) in radians from strip excursions (mm)."""
    if not (dL1 >= 0 and dL2 >= 0):
        raise ValidationError("strip excursions must be >= 0")
    return dL1 / rig.moment_radius_r1, dL2 / rig.moment_radius_r2


def finger_excursions(theta_mcp: float, theta_pipdip: float, rig: FingerRig = FingerRig()) -> Tuple[float, float]:
    return theta_mcp * rig.moment_radius_r1, theta_pipdip * rig.moment_radius_r2
