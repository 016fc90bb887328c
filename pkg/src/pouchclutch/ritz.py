"""Rayleigh-Ritz energy minimisation for the pressurised clamped face.

Independent check on ``pouch.center_deflection``. The transverse deflection
and the radial in-plane displacement are expanded as

    w(r) = sum_k c_k (1 - rho^2)^2 P_k(2 rho^2 - 1),     k < n_terms
    u(r) = a sum_j d_j rho (1 - rho) P_j(2 rho - 1),      j < 2 n_terms

(rho = r/a, P Legendre), which satisfy w = w' = 0 and u = 0 at the clamped,
immovable edge. The total potential

    Pi = U_bend + U_membrane - q * int(w dA)

with von Karman strains e_r = u' + w'^2 / 2, e_t = u / r is a quartic
polynomial in (c, d); it is minimised by damped Newton with exact gradient
and Hessian, Gauss-Legendre quadrature being exact for every integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as leg

from .errors import ConvergenceError, ValidationError
from .materials import TPU_FABRIC, LinearElastic
from .pouch import KPA, PouchGeometry

DEFAULT_TERMS = 10
MAX_ITER = 100
GRAD_RTOL = 1e-11


@dataclass(frozen=True)
class RitzResult:
    center_deflection: float  # mm
    energy: float  # N*mm
    w_coeffs: np.ndarray
    u_coeffs: np.ndarray
    iterations: int


def _legendre_with_derivs(k: int, x: np.ndarray):
    c = np.zeros(k + 1)
    c[k] = 1.0
    d1 = leg.legder(c)
    d2 = leg.legder(c, 2)
    return leg.legval(x, c), leg.legval(x, d1), leg.legval(x, d2)


@lru_cache(maxsize=32)
def _basis(n_terms: int, n_u: int):
    """Shape functions on the unit disc, sampled at quadrature nodes (rho only)."""
    n_quad = 8 * (n_terms + n_u) + 32
    x, wts = leg.leggauss(n_quad)
    rho = 0.5 * (x + 1.0)
    wq = 0.5 * wts

    f = (1.0 - rho**2) ** 2
    f1 = -4.0 * rho * (1.0 - rho**2)
    f2 = -4.0 + 12.0 * rho**2
    t = 2.0 * rho**2 - 1.0
    W, W1, W2 = [], [], []
    for k in range(n_terms):
        P, dP, ddP = _legendre_with_derivs(k, t)
        W.append(f * P)
        W1.append(f1 * P + f * dP * 4.0 * rho)
        W2.append(f2 * P + 2.0 * f1 * dP * 4.0 * rho + f * (ddP * 16.0 * rho**2 + dP * 4.0))

    g = rho * (1.0 - rho)
    g1 = 1.0 - 2.0 * rho
    s = 2.0 * rho - 1.0
    U, U1 = [], []
    for j in range(n_u):
        Q, dQ, _ = _legendre_with_derivs(j, s)
        U.append(g * Q)
        U1.append(g1 * Q + g * dQ * 2.0)
    apex = np.array([(-1.0) ** k for k in range(n_terms)])  # w_k(0) = P_k(-1)
    return rho, wq, np.array(W), np.array(W1), np.array(W2), np.array(U), np.array(U1), apex


def ritz_solve(
    p: float,
    geom: PouchGeometry = PouchGeometry(),
    mat: LinearElastic = TPU_FABRIC,
    n_terms: int = DEFAULT_TERMS,
) -> RitzResult:
    if not p >= 0:
        raise ValidationError(f"pressure must be >= 0 kPa, got {p}")
    if int(n_terms) != n_terms or n_terms < 1:
        raise ValidationError(f"n_terms must be a positive integer, got {n_terms}")
    n = int(n_terms)
    m = 2 * n
    a, h = geom.radius_a, geom.face_thickness_h
    E, nu = mat.youngs_modulus, mat.poisson_ratio
    D = E * h**3 / (12.0 * (1.0 - nu**2))
    C = E * h / (1.0 - nu**2)
    q = p * KPA

    rho, wq, Wn, W1n, W2n, Un, U1n, apex = _basis(n, m)
    r = rho * a
    dA = 2.0 * np.pi * r * a * wq
    W, W1, W2 = Wn, W1n / a, W2n / a**2
    U, U1 = Un * a, U1n
    Ur = U / r

    curv = W2 + W1 / r
    Kb = D * ((curv * dA) @ curv.T - (1.0 - nu) * ((W2 * dA) @ (W1 / r).T + ((W1 / r) * dA) @ W2.T))
    A = (U1 * dA) @ U1.T + (Ur * dA) @ Ur.T + nu * ((U1 * dA) @ Ur.T + (Ur * dA) @ U1.T)
    f = q * (W @ dA)

    def strains(z):
        w1 = z[:n] @ W1
        return w1, 0.5 * w1**2 + z[n:] @ U1, z[n:] @ Ur

    def energy(z):
        c = z[:n]
        _, er, et = strains(z)
        return 0.5 * c @ Kb @ c + 0.5 * C * np.sum(dA * (er**2 + et**2 + 2.0 * nu * er * et)) - f @ c

    def gradient(z):
        w1, er, et = strains(z)
        Nr = C * dA * (er + nu * et)
        Nt = C * dA * (et + nu * er)
        return np.concatenate([Kb @ z[:n] + W1 @ (Nr * w1) - f, U1 @ Nr + Ur @ Nt])

    def hessian(z):
        w1, er, et = strains(z)
        Nr = C * dA * (er + nu * et)
        G = W1 * w1
        Hcc = Kb + C * (G * dA) @ G.T + (W1 * Nr) @ W1.T
        Hcd = C * (G * dA) @ (U1 + nu * Ur).T
        return np.block([[Hcc, Hcd], [Hcd.T, C * A]])

    z = np.zeros(n + m)
    if q == 0.0:
        return RitzResult(0.0, 0.0, z[:n].copy(), z[n:].copy(), 0)

    # start from the smaller of the plate and membrane-dominated apex estimates
    load = q * a**4 / (64.0 * D)
    z[0] = min(load, (load * h**2 / 0.5) ** (1.0 / 3.0))
    z[n:] = np.linalg.solve(C * A, -gradient(z)[n:])

    scale = np.abs(f).max()
    eye = np.eye(n + m)
    for it in range(1, MAX_ITER + 1):
        g = gradient(z)
        if np.abs(g).max() <= GRAD_RTOL * scale:
            break
        H = hessian(z)
        lam = 0.0
        while True:
            try:
                np.linalg.cholesky(H + lam * eye)
                break
            except np.linalg.LinAlgError:
                lam = max(2.0 * lam, 1e-8 * np.abs(np.diag(H)).max())
        step = -np.linalg.solve(H + lam * eye, g)
        e0 = energy(z)
        t = 1.0
        # near the minimiser the energy change drops below rounding; trust Newton there
        if lam > 0.0 or -(g @ step) > 1e-9 * max(abs(e0), 1e-30):
            while energy(z + t * step) > e0 + 1e-4 * t * (g @ step) and t > 1e-12:
                t *= 0.5
        z = z + t * step
    else:
        raise ConvergenceError(
            f"Ritz minimisation did not converge in {MAX_ITER} iterations at p={p} kPa, n_terms={n}"
        )
    return RitzResult(float(apex @ z[:n]), float(energy(z)), z[:n].copy(), z[n:].copy(), it)


def ritz_center_deflection(
    p: float,
    geom: PouchGeometry = PouchGeometry(),
    mat: LinearElastic = TPU_FABRIC,
    n_terms: int = DEFAULT_TERMS,
) -> float:
    """Apex deflection (mm) of the energy minimiser over the ``n_terms`` family."""
    return ritz_solve(p, geom, mat, n_terms).center_deflection
