"""Reference densities from the iterated-reflection (method of images) series.

For perfectly conducting disks and u = H + a h~ + S1[psi1] + S2[psi2], with
outward normals,

    psi1 = 2 sum_m d/dnu [F1((R1 R2)^m x)],  F1 = G1 - G2 o R2,
    psi2 = 2 sum_m d/dnu [F2((R2 R1)^m x)],  F2 = G2 - G1 o R1,

where G1 = H + a log|x - c2|/2pi and G2 = H - a log|x - c1|/2pi are the
parts of u - S1 - S2 seen from inside each disk. Each term is differentiated
exactly by pushing the normal vector through the reflection Jacobians.
With a = 0 the same series gives the standard densities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .background import HarmonicPolynomial
from .geometry import TwoDiskConfig, reflect, reflect_jacobian
from .layers import BoundaryDensity, BoundaryGrid, own_boundary_flux
from . import singular
from .singular import INV_2PI


class SeriesTruncationWarning(RuntimeWarning):
    pass


@dataclass
class SeriesReport:
    terms: int
    converged: bool
    ratio: float          # sup-norm ratio of the last two terms
    tail_estimate: float  # geometric bound on the neglected tail (sup norm)
    sup_norm: float       # sup norm of the accumulated density


def _grad_log(y, q):
    w = y - q
    return w / np.einsum("...i,...i->...", w, w)[..., None]


def _grad_F(cfg: TwoDiskConfig, H: HarmonicPolynomial, a: float, j: int, y) -> np.ndarray:
    """Gradient of F_j at points y (inside disk j)."""
    k = a * INV_2PI
    if j == 1:
        near, far, sgn = cfg.disk2, cfg.c1, -1.0
        g = H.grad(y) + k * _grad_log(y, cfg.c2)
    else:
        near, far, sgn = cfg.disk1, cfg.c2, 1.0
        g = H.grad(y) - k * _grad_log(y, cfg.c1)
    ry = reflect(near, y)
    inner = H.grad(ry) + sgn * k * _grad_log(ry, far)
    J = reflect_jacobian(near, y)
    return g - np.einsum("...ji,...j->...i", J, inner)


def series_density(cfg: TwoDiskConfig, H: HarmonicPolynomial, a: float, j: int,
                   points, normals, tol_rel: float = 1e-13,
                   m_max: int = 10_000) -> tuple[np.ndarray, SeriesReport]:
    """Series density on circle j at the given boundary points."""
    if tol_rel <= 0:
        raise ValueError("tol_rel must be positive")
    first, second = (cfg.disk2, cfg.disk1) if j == 1 else (cfg.disk1, cfg.disk2)
    y = np.array(points, dtype=float)
    v = np.array(normals, dtype=float)
    total = np.zeros(len(y))
    prev_sup = None
    ratio = np.nan
    converged = False
    m = 0
    for m in range(m_max):
        term = 2.0 * np.einsum("ki,ki->k", v, _grad_F(cfg, H, a, j, y))
        total += term
        sup = float(np.max(np.abs(term)))
        acc = float(np.max(np.abs(total)))
        if prev_sup is not None and prev_sup > 0:
            ratio = sup / prev_sup
        prev_sup = sup
        if sup <= tol_rel * acc or acc == 0.0:
            converged = True
            break
        # y <- R_first-then-second(y), v <- D(.) v
        z = reflect(first, y)
        v = np.einsum("kij,kj->ki", reflect_jacobian(first, y), v)
        v = np.einsum("kij,kj->ki", reflect_jacobian(second, z), v)
        y = reflect(second, z)
    terms = m + 1
    tail = sup * ratio / (1.0 - ratio) if (np.isfinite(ratio) and ratio < 1) else np.inf
    report = SeriesReport(terms, converged, float(ratio), float(tail if converged or np.isfinite(tail) else np.inf),
                          float(np.max(np.abs(total))))
    if not converged:
        warnings.warn(
            f"image series on circle {j} truncated at {terms} terms "
            f"(last ratio {ratio:.6f}, tail estimate {report.tail_estimate:.3e})",
            SeriesTruncationWarning, stacklevel=2,
        )
    return total, report


def series_densities(cfg: TwoDiskConfig, H: HarmonicPolynomial, a: float, M: int,
                     tol_rel: float = 1e-13, m_max: int = 10_000):
    """Series densities at M equispaced nodes on each circle.

    Returns ((psi1, psi2), (report1, report2)) with psi_j as BoundaryDensity.
    """
    out, reports = [], []
    for j, disk in ((1, cfg.disk1), (2, cfg.disk2)):
        grid = BoundaryGrid(disk, M)
        vals, rep = series_density(cfg, H, a, j, grid.nodes, grid.normals, tol_rel, m_max)
        out.append(BoundaryDensity(grid, vals))
        reports.append(rep)
    return tuple(out), tuple(reports)


def flux_from_densities(cfg: TwoDiskConfig, densities, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Exterior normal flux of u at the nodes, given exact densities.

    Inside each perfect conductor u^e is constant, so the exterior flux is the
    jump of S_j[psi_j] plus the jump between h~ outside and its extension inside.
    """
    fluxes = []
    for j, dens in ((1, densities[0]), (2, densities[1])):
        grid = dens.grid
        jump = own_boundary_flux(dens, "exterior") - own_boundary_flux(dens, "interior")
        outer = np.einsum("ki,ki->k", singular.grad_h_tilde(cfg, grid.nodes), grid.normals)
        inner = singular.interior_normal_derivative_h_tilde_e(cfg, j, grid.nodes)
        fluxes.append(jump + a * (outer - inner))
    return fluxes[0], fluxes[1]


def reference_flux(cfg: TwoDiskConfig, H: HarmonicPolynomial, a: float, M: int,
                   tol_rel: float = 1e-13, m_max: int = 10_000):
    """Normal flux of the series solution on both grids, plus the series reports."""
    dens, reports = series_densities(cfg, H, a, M, tol_rel, m_max)
    return flux_from_densities(cfg, dens, a), reports


def _stack(flux, reference) -> tuple[np.ndarray, np.ndarray]:
    f = np.concatenate([np.asarray(v, dtype=float).ravel() for v in flux])
    g = np.concatenate([np.asarray(v, dtype=float).ravel() for v in reference])
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    return f, g


def relative_L2_error(flux, reference) -> float:
    """sum_j ||f_j - g_j|| / (2 ||g_j||) over the two circles (equal node weights)."""
    if len(flux) != len(reference):
        raise ValueError("flux and reference must cover the same circles")
    total = 0.0
    for f, g in zip(flux, reference):
        f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
        if f.shape != g.shape:
            raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
        ng = np.linalg.norm(g)
        if ng == 0:
            raise ValueError("reference flux has zero norm")
        total += np.linalg.norm(f - g) / (2.0 * ng)
    return float(total)


def relative_Linf_error(flux, reference) -> tuple[float, int]:
    """max |f - g| / max |g| and the stacked node index where the deviation peaks."""
    f, g = _stack(flux, reference)
    ng = np.max(np.abs(g))
    if ng == 0:
        raise ValueError("reference flux has zero norm")
    dev = np.abs(f - g)
    k = int(np.argmax(dev))
    return float(dev[k] / ng), k
