"""Nystrom systems for two extreme-conductivity disks, standard and singularity-augmented.

Normals are the outward normals of each disk. With that convention the
perfectly conducting system carries -1/2 on its diagonal (zero interior
normal derivative) and the insulated one +1/2 (zero exterior normal
derivative); the off-diagonal blocks are the cross kernels d/dnu S.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .background import HarmonicPolynomial
from .geometry import GeometryError, TwoDiskConfig
from .layers import (
    BoundaryDensity,
    BoundaryGrid,
    cross_kernel_block,
    own_boundary_flux,
    single_layer,
    single_layer_gradient,
    single_layer_trace,
    eval_single_layer,
    eval_single_layer_gradient,
    upsample,
)
from . import singular
from .singular import INV_2PI, StressIntensity

PERFECT = "perfect"
INSULATED = "insulated"
STANDARD = "standard"
AUGMENTED = "augmented"

_CHUNK = 2048


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, sigma_min: float):
        super().__init__(f"system matrix is numerically singular (sigma_min = {sigma_min:.3e})")
        self.sigma_min = sigma_min


def jump_lambda(conductivity: str) -> float:
    if conductivity == PERFECT:
        return -0.5
    if conductivity == INSULATED:
        return 0.5
    raise ValueError(f"unknown conductivity {conductivity!r}")


@dataclass(frozen=True)
class AssembledSystem:
    config: TwoDiskConfig
    M: int
    conductivity: str
    lam: float
    grids: tuple[BoundaryGrid, BoundaryGrid]
    A12: np.ndarray = field(repr=False)
    A21: np.ndarray = field(repr=False)
    oversample: int = 1

    @cached_property
    def matrix(self) -> np.ndarray:
        M = self.M
        A = np.empty((2 * M, 2 * M))
        A[:M, :M] = self.lam * np.eye(M)
        A[M:, M:] = self.lam * np.eye(M)
        A[:M, M:] = self.A12
        A[M:, :M] = self.A21
        return A

    @cached_property
    def svd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(U, sigma, Vt) with sigma in decreasing order."""
        return np.linalg.svd(self.matrix)

    @property
    def singular_values(self) -> np.ndarray:
        return self.svd[1]

    @property
    def condition_number(self) -> float:
        s = self.singular_values
        return float(s[0] / s[-1])


def auto_oversample(config: TwoDiskConfig, M: int, per_gap: float = 4.0) -> int:
    """Smallest power of two putting ``per_gap`` fine nodes across the gap width."""
    r = max(config.r1, config.r2)
    need = 2.0 * np.pi * r * per_gap / (config.eps * M)
    k = 1
    while k < need:
        k *= 2
    return k


def assemble(config: TwoDiskConfig, M: int, conductivity: str = PERFECT,
             oversample: int | str = 1) -> AssembledSystem:
    """Dense 2M x 2M system.

    ``oversample`` > 1 (or ``"auto"``) refines the cross-kernel quadrature; the
    default 1 is the plain nodal trapezoid rule.
    """
    if M < 8 or M % 2:
        raise ValueError(f"M must be even and >= 8, got {M}")
    if oversample == "auto":
        oversample = auto_oversample(config, M)
    g1 = BoundaryGrid(config.disk1, M)
    g2 = BoundaryGrid(config.disk2, M)
    return AssembledSystem(
        config, M, conductivity, jump_lambda(conductivity), (g1, g2),
        cross_kernel_block(g1, g2, oversample), cross_kernel_block(g2, g1, oversample),
        oversample,
    )


def _normal_derivative(grad: np.ndarray, grid: BoundaryGrid) -> np.ndarray:
    return np.einsum("ki,ki->k", grad, grid.normals)


def rhs_standard(system: AssembledSystem, H: HarmonicPolynomial) -> np.ndarray:
    return np.concatenate([-_normal_derivative(H.grad(g.nodes), g) for g in system.grids])


def singular_normal_derivatives(config: TwoDiskConfig, conductivity: str,
                                grids) -> tuple[np.ndarray, np.ndarray]:
    """Normal derivative, from inside each disk, of the singular term carried by the
    augmented representation (h~ extension for perfect conductors, h_perp for insulators)."""
    g1, g2 = grids
    if conductivity == PERFECT:
        return (singular.interior_normal_derivative_h_tilde_e(config, 1, g1.nodes),
                singular.interior_normal_derivative_h_tilde_e(config, 2, g2.nodes))
    # only the arg(x - c_other) piece of h_perp has a nonzero normal derivative
    w1 = g1.nodes - config.c2
    w2 = g2.nodes - config.c1
    perp1 = np.stack([-w1[:, 1], w1[:, 0]], axis=-1)
    perp2 = np.stack([-w2[:, 1], w2[:, 0]], axis=-1)
    d1 = INV_2PI * np.einsum("ki,ki->k", perp1, g1.normals) / np.einsum("ki,ki->k", w1, w1)
    d2 = -INV_2PI * np.einsum("ki,ki->k", perp2, g2.normals) / np.einsum("ki,ki->k", w2, w2)
    return d1, d2


def _intensity_value(intensity, conductivity: str) -> float:
    if isinstance(intensity, StressIntensity):
        return intensity.a_perfect if conductivity == PERFECT else intensity.a_insulated
    return float(intensity)


def rhs_augmented(system: AssembledSystem, H: HarmonicPolynomial, intensity,
                  conductivity: str) -> np.ndarray:
    if conductivity != system.conductivity:
        raise ValueError(
            f"intensity for {conductivity!r} inclusions used with a {system.conductivity!r} system"
        )
    a = _intensity_value(intensity, conductivity)
    d1, d2 = singular_normal_derivatives(system.config, conductivity, system.grids)
    return rhs_standard(system, H) - a * np.concatenate([d1, d2])


@dataclass
class SolveReport:
    densities: tuple[np.ndarray, np.ndarray]
    residual: float
    singular_values: np.ndarray | None = None
    condition_number: float | None = None
    mean_removed: tuple[float, float] = (0.0, 0.0)
    constants: tuple[float, float] | None = None


def solve(system: AssembledSystem, rhs, compute_svd: bool = False) -> SolveReport:
    rhs = np.asarray(rhs, dtype=float)
    A = system.matrix
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(A, check_finite=True)
        if np.any(np.diag(lu[0]) == 0.0):
            raise np.linalg.LinAlgError
        x = scipy.linalg.lu_solve(lu, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
        raise SingularSystemError(float(system.singular_values[-1])) from None
    nrm = np.linalg.norm(rhs)
    residual = float(np.linalg.norm(A @ x - rhs) / nrm) if nrm > 0 else float(np.linalg.norm(A @ x))
    M = system.M
    d1, d2 = x[:M], x[M:]
    removed = (0.0, 0.0)
    if system.conductivity == INSULATED:
        removed = (float(d1.mean()), float(d2.mean()))
        d1, d2 = d1 - removed[0], d2 - removed[1]
    report = SolveReport((d1, d2), residual, mean_removed=removed)
    if compute_svd:
        report.singular_values = system.singular_values
        report.condition_number = system.condition_number
    return report


def svd_projections(system: AssembledSystem, rhs, count: int, residual=None):
    """|<u_i, rhs>| (and |<u_i, residual>|) for the ``count`` smallest singular values.

    Returns a list of (sigma_i, proj_rhs[, proj_residual]) ordered from the
    smallest singular value upward.
    """
    U, s, _ = system.svd
    if count > len(s):
        raise ValueError(f"count {count} exceeds matrix size {len(s)}")
    idx = np.arange(len(s) - 1, len(s) - 1 - count, -1)
    proj = np.abs(U[:, idx].T @ np.asarray(rhs, dtype=float))
    if residual is None:
        return [(float(s[i]), float(p)) for i, p in zip(idx, proj)]
    pres = np.abs(U[:, idx].T @ np.asarray(residual, dtype=float))
    return [(float(s[i]), float(p), float(q)) for i, p, q in zip(idx, proj, pres)]


@dataclass(frozen=True)
class SolutionField:
    """u = H + intensity * (h~ or h_perp) + S1[dens1] + S2[dens2] outside the disks."""

    system: AssembledSystem
    H: HarmonicPolynomial
    mode: str
    conductivity: str
    intensity: float
    densities: tuple[BoundaryDensity, BoundaryDensity]

    @property
    def config(self) -> TwoDiskConfig:
        return self.system.config

    def _sing(self, x):
        if self.intensity == 0.0:
            return np.zeros(np.shape(x)[:-1])
        f = singular.eval_h_tilde if self.conductivity == PERFECT else singular.eval_h_perp
        return self.intensity * f(self.config, x)

    def _sing_grad(self, x):
        if self.intensity == 0.0:
            return np.zeros(np.shape(x))
        f = singular.grad_h_tilde if self.conductivity == PERFECT else singular.grad_h_perp
        return self.intensity * f(self.config, x)


def solve_field(config: TwoDiskConfig, H: HarmonicPolynomial, M: int,
                conductivity: str = PERFECT, mode: str = AUGMENTED,
                compute_svd: bool = False, oversample: int | str = 1) -> tuple[SolutionField, SolveReport]:
    system = assemble(config, M, conductivity, oversample)
    if mode == STANDARD:
        a = 0.0
        rhs = rhs_standard(system, H)
    elif mode == AUGMENTED:
        a = _intensity_value(singular.stress_intensity(config, H), conductivity)
        rhs = rhs_augmented(system, H, a, conductivity)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    report = solve(system, rhs, compute_svd=compute_svd)
    dens = tuple(BoundaryDensity(g, d) for g, d in zip(system.grids, report.densities))
    fld = SolutionField(system, H, mode, conductivity, a, dens)
    if conductivity == PERFECT:
        report.constants = boundary_constants(fld)
    return fld, report


def _check_outside(cfg: TwoDiskConfig, x):
    for disk in cfg.disks:
        w = np.asarray(x, dtype=float) - disk.center
        if np.any(np.hypot(w[..., 0], w[..., 1]) < disk.radius):
            raise GeometryError("evaluation point inside an inclusion")


def _chunked(fn, x, width):
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    out = np.concatenate([fn(flat[i:i + _CHUNK]) for i in range(0, len(flat), _CHUNK)]) \
        if len(flat) else np.zeros((0,) + width)
    return out.reshape(x.shape[:-1] + width)


def eval_u(fld: SolutionField, x, margin: float = 2.0) -> np.ndarray:
    _check_outside(fld.config, x)

    def f(pts):
        v = fld.H(pts) + fld._sing(pts)
        for dens in fld.densities:
            v = v + eval_single_layer(dens, pts, margin)
        return v
    return _chunked(f, x, ())


def eval_grad_u(fld: SolutionField, x, margin: float = 2.0) -> np.ndarray:
    _check_outside(fld.config, x)

    def f(pts):
        g = fld.H.grad(pts) + fld._sing_grad(pts)
        for dens in fld.densities:
            g = g + eval_single_layer_gradient(dens, pts, margin)
        return g
    return _chunked(f, x, (2,))


def boundary_flux(fld: SolutionField, j: int) -> np.ndarray:
    """Exterior normal derivative of u at the nodes of circle j (1 or 2)."""
    sys = fld.system
    grid = sys.grids[j - 1]
    own = fld.densities[j - 1]
    other = fld.densities[2 - j]
    block = sys.A12 if j == 1 else sys.A21
    g = fld.H.grad(grid.nodes) + fld._sing_grad(grid.nodes)
    return _normal_derivative(g, grid) + own_boundary_flux(own, "exterior") + block @ other.values


def boundary_values(fld: SolutionField, j: int) -> np.ndarray:
    """u at the nodes of circle j: own trace via the Fourier identity, cross term by
    quadrature at the system's oversampling."""
    grid = fld.system.grids[j - 1]
    own, other = fld.densities[j - 1], fld.densities[2 - j]
    v = fld.H(grid.nodes) + fld._sing(grid.nodes) + single_layer_trace(own)
    if fld.system.oversample > 1:
        other = upsample(other, other.grid.M * fld.system.oversample)
    return v + single_layer(other.grid, other.values, grid.nodes)


def boundary_constants(fld: SolutionField) -> tuple[float, float]:
    """Conductor potentials lambda_j, taken as exact circle means of u.

    Mean over circle j of H is H(c_j), of S_j[phi_j] is log(r_j) int(phi_j)/2pi,
    of the other layer is its value at c_j; the h~ mean is closed form.
    """
    cfg = fld.config
    out = []
    for j in (1, 2):
        disk = cfg.disks[j - 1]
        own, other = fld.densities[j - 1], fld.densities[2 - j]
        lam = float(fld.H(disk.center))
        if fld.intensity != 0.0:
            lam += fld.intensity * singular.circle_mean_h_tilde(cfg, j)
        lam += INV_2PI * np.log(disk.radius) * own.total
        lam += float(single_layer(other.grid, other.values, disk.center))
        out.append(lam)
    return out[0], out[1]


def gap_points(cfg: TwoDiskConfig, fractions) -> np.ndarray:
    """Points on the shortest segment between the circles, at the given fractions of it."""
    e1 = cfg.c1 + cfg.r1 * cfg.n
    return e1 + np.outer(np.asarray(fractions, dtype=float), cfg.eps * cfg.n)


def eval_grad_u_near(fld: SolutionField, x, resolution: float = 8.0) -> np.ndarray:
    """Gradient of u at points too close to a circle for the nodal rule.

    The densities are trigonometrically interpolated onto a grid whose spacing
    is below (distance / resolution) before applying the trapezoid rule.
    """
    _check_outside(fld.config, x)
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    g = fld.H.grad(x) + fld._sing_grad(x)
    for dens in fld.densities:
        dist = float(np.min(dens.grid.distance(x)))
        if dist <= 0:
            raise GeometryError("gradient requested on a boundary circle")
        need = int(np.ceil(2 * np.pi * dens.grid.disk.radius * resolution / dist))
        m_fine = dens.grid.M
        while m_fine < need:
            m_fine *= 2
        fine = upsample(dens, m_fine)
        for i in range(len(x)):
            g[i] = g[i] + single_layer_gradient(fine.grid, fine.values, x[i])
    return g


def max_gap_gradient(fld: SolutionField, fractions=(0.25, 0.5, 0.75)) -> float:
    """max |grad u| over sample points inside the gap segment."""
    pts = gap_points(fld.config, fractions)
    return float(np.max(np.hypot(*eval_grad_u_near(fld, pts).T)))
