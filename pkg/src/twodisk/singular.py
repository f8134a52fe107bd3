"""Explicit singular functions of the two-disk problem and their intensity factors.

All gradients are closed form. Points are arrays with a trailing axis of 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import HarmonicPolynomial
from .geometry import GeometryError, TwoDiskConfig

INV_2PI = 0.5 / np.pi


def _diff(x, q) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(x, dtype=float) - q
    d2 = np.einsum("...i,...i->...", w, w)
    if np.any(d2 == 0.0):
        raise GeometryError(f"evaluation at the pole {tuple(q)}")
    return w, d2


def _log(x, q) -> np.ndarray:
    _, d2 = _diff(x, q)
    return 0.5 * np.log(d2)


def _grad_log(x, q) -> np.ndarray:
    w, d2 = _diff(x, q)
    return w / d2[..., None]


def _perp(v) -> np.ndarray:
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def eval_h(cfg: TwoDiskConfig, x) -> np.ndarray:
    return INV_2PI * (_log(x, cfg.p1) - _log(x, cfg.p2))


def grad_h(cfg: TwoDiskConfig, x) -> np.ndarray:
    return INV_2PI * (_grad_log(x, cfg.p1) - _grad_log(x, cfg.p2))


def eval_h_tilde(cfg: TwoDiskConfig, x) -> np.ndarray:
    """h minus the centre logs; carries zero net flux through each circle."""
    return eval_h(cfg, x) - INV_2PI * (_log(x, cfg.c1) - _log(x, cfg.c2))


def grad_h_tilde(cfg: TwoDiskConfig, x) -> np.ndarray:
    return grad_h(cfg, x) - INV_2PI * (_grad_log(x, cfg.c1) - _grad_log(x, cfg.c2))


def circle_mean_log(center, radius: float, q) -> float:
    """Mean of log|x - q| over the circle |x - center| = radius."""
    return float(np.log(max(radius, np.hypot(*(np.asarray(q) - center)))))


def circle_mean_h_tilde(cfg: TwoDiskConfig, j: int) -> float:
    """Exact mean of h~ over the boundary of disk j (1 or 2)."""
    disk = cfg.disks[j - 1]
    m = [circle_mean_log(disk.center, disk.radius, q) for q in (cfg.p1, cfg.p2, cfg.c1, cfg.c2)]
    return INV_2PI * (m[0] - m[1] - m[2] + m[3])


def _check_on_circle(cfg: TwoDiskConfig, j: int, x, tol: float = 1e-9):
    disk = cfg.disks[j - 1]
    rad = np.hypot(*np.moveaxis(np.asarray(x, dtype=float) - disk.center, -1, 0))
    if np.any(np.abs(rad - disk.radius) > tol * disk.radius):
        raise GeometryError(f"point not on the boundary of disk {j}")


def interior_normal_derivative_h_tilde_e(cfg: TwoDiskConfig, j: int, x) -> np.ndarray:
    """Inner limit of the normal derivative of the harmonic extension of h~ into disk j.

    Inside disk 1 the extension is const + log|x - c2|/2pi, inside disk 2 it is
    const - log|x - c1|/2pi; the normal is the outward normal of disk j.
    """
    _check_on_circle(cfg, j, x)
    disk = cfg.disks[j - 1]
    x = np.asarray(x, dtype=float)
    nu = (x - disk.center) / disk.radius
    if j == 1:
        return INV_2PI * np.einsum("...i,...i->...", _grad_log(x, cfg.c2), nu)
    return -INV_2PI * np.einsum("...i,...i->...", _grad_log(x, cfg.c1), nu)


def _arg_quotient(x, a, b) -> np.ndarray:
    # principal argument of (x - a)/(x - b); the cut is the segment [a, b]
    za = (np.asarray(x, dtype=float) - a) @ np.array([1.0, 1j])
    zb = (np.asarray(x, dtype=float) - b) @ np.array([1.0, 1j])
    if np.any(za == 0) or np.any(zb == 0):
        raise GeometryError("evaluation at a pole of h_perp")
    return np.angle(za * np.conj(zb))


def eval_h_perp(cfg: TwoDiskConfig, x) -> np.ndarray:
    """(arg(x-p1) - arg(x-c1) - arg(x-p2) + arg(x-c2)) / 2pi, single valued outside the disks."""
    return INV_2PI * (_arg_quotient(x, cfg.p1, cfg.c1) - _arg_quotient(x, cfg.p2, cfg.c2))


def grad_h_perp(cfg: TwoDiskConfig, x) -> np.ndarray:
    g = _grad_log(x, cfg.p1) - _grad_log(x, cfg.p2) - _grad_log(x, cfg.c1) + _grad_log(x, cfg.c2)
    return INV_2PI * _perp(g)


@dataclass(frozen=True)
class StressIntensity:
    a_perfect: float
    a_insulated: float


def intensity_prefactor(cfg: TwoDiskConfig) -> float:
    return 4.0 * np.pi * cfg.r1 * cfg.r2 / (cfg.r1 + cfg.r2)


def stress_intensity(cfg: TwoDiskConfig, H: HarmonicPolynomial) -> StressIntensity:
    g = H.grad(cfg.p)
    k = intensity_prefactor(cfg)
    return StressIntensity(float(k * (cfg.n @ g)), float(k * (cfg.t @ g)))


def potential_difference(cfg: TwoDiskConfig, H: HarmonicPolynomial) -> float:
    """H(p2) - H(p1): the jump between the two conductor potentials."""
    return float(H(cfg.p2) - H(cfg.p1))


def intensity_from_boundary_data(cfg: TwoDiskConfig, y, nu, g, dirichlet, weights) -> float:
    """Stress intensity a from Neumann data g and its Dirichlet trace on an outer curve.

    The background potential is H = -S[g] + D[dirichlet] on the outer curve, so
    n.grad H(p) is a boundary integral of g and the trace against the gradient
    of the two kernels at p. ``weights`` are arclength quadrature weights.
    """
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    if len(y) == 0:
        raise ValueError("no boundary samples")
    w = np.asarray(weights, dtype=float).ravel()
    if not np.sum(w) > 0:
        raise ValueError("boundary weights have zero total")
    nu = np.asarray(nu, dtype=float).reshape(-1, 2)
    d = cfg.p - y
    d2 = np.einsum("ij,ij->i", d, d)
    dn = d @ cfg.n
    dnu = np.einsum("ij,ij->i", d, nu)
    k_single = dn / d2
    k_double = (nu @ cfg.n) / d2 - 2.0 * dn * dnu / d2**2
    total = np.sum(w * (k_single * np.ravel(g) + k_double * np.ravel(dirichlet)))
    return float(-2.0 * cfg.r1 * cfg.r2 / (cfg.r1 + cfg.r2) * total)
