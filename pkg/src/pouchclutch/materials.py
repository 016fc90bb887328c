"""Constitutive laws for the clutch's two flexible materials.

TPU-coated fabric (pouch faces, strip) is linear elastic. The adhesive TPU
film is a third-order Ogden solid, assumed incompressible, with strain energy

    W = sum_i (2 mu_i / alpha_i**2) * (l1**alpha_i + l2**alpha_i + l3**alpha_i - 3)

This is the convention used by Abaqus-style tools; the "classical" Ogden form
divides by alpha_i only, so coefficients fitted in one form must not be used
in the other. Stresses are in MPa.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class LinearElastic:
    youngs_modulus: float  # MPa
    poisson_ratio: float = 0.3

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ValidationError(f"youngs_modulus must be > 0, got {self.youngs_modulus}")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise ValidationError(f"poisson_ratio must lie in [0, 0.5), got {self.poisson_ratio}")


@dataclass(frozen=True)
class OgdenMaterial:
    terms: Tuple[Tuple[float, float], ...]  # (mu_i [MPa], alpha_i)

    def __post_init__(self):
        terms = tuple((float(mu), float(al)) for mu, al in self.terms)
        object.__setattr__(self, "terms", terms)
        if len(terms) != 3:
            raise ValidationError(f"third-order Ogden model needs 3 terms, got {len(terms)}")
        if any(al == 0.0 for _, al in terms):
            raise ValidationError("every alpha_i must be non-zero")
        if not self.initial_shear_modulus > 0:
            raise ValidationError("sum of mu_i must be positive")

    @property
    def initial_shear_modulus(self) -> float:
        return sum(mu for mu, _ in self.terms)


TPU_FABRIC = LinearElastic(youngs_modulus=142.2, poisson_ratio=0.3)
ADHESIVE_TPU = OgdenMaterial(terms=((-16.47, 1.61), (6.47, 2.30), (13.22, 0.71)))


def _check_stretches(stretches: Sequence[float]) -> np.ndarray:
    lam = np.asarray(stretches, dtype=float)
    if np.any(~(lam > 0)):
        raise DomainError(f"stretches must be positive, got {stretches}")
    return lam


def ogden_energy_density(stretches: Sequence[float], mat: OgdenMaterial = ADHESIVE_TPU) -> float:
    """Strain energy per unit reference volume (MPa) for principal stretches (l1, l2, l3)."""
    lam = _check_stretches(stretches)
    if lam.shape != (3,):
        raise DomainError("expected exactly three principal stretches")
    return float(sum(2.0 * mu / al**2 * (np.sum(lam**al) - 3.0) for mu, al in mat.terms))


def ogden_uniaxial_stress(stretch: float, mat: OgdenMaterial = ADHESIVE_TPU) -> float:
    """Nominal (first Piola) stress under incompressible uniaxial tension.

    Along the path (l, l**-0.5, l**-0.5) this is dW/dl.
    """
    (lam,) = _check_stretches([stretch])
    return float(sum(2.0 * mu / al * (lam ** (al - 1.0) - lam ** (-al / 2.0 - 1.0)) for mu, al in mat.terms))


def ogden_initial_modulus(mat: OgdenMaterial = ADHESIVE_TPU) -> float:
    """Tangent of the uniaxial nominal stress at l = 1, equal to 3 * sum(mu_i)."""
    return 3.0 * mat.initial_shear_modulus


def linear_uniaxial_stress(strain: float, mat: LinearElastic = TPU_FABRIC) -> float:
    if not strain > -1.0:
        raise DomainError(f"engineering strain must exceed -1, got {strain}")
    return mat.youngs_modulus * strain
