"""Layer potentials on circles discretised by the periodic trapezoid rule.

On-circle self interaction never goes through quadrature: the circle identities
K*[phi] = mean-charge/(2r) and the Fourier diagonal form of the single layer
trace are used instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Disk, GeometryError

INV_2PI = 0.5 / np.pi


class NearBoundaryError(ValueError):
    """Target too close to a source circle for trapezoid quadrature."""

    def __init__(self, distance: float, limit: float):
        super().__init__(
            f"target at distance {distance:.3e} from the source circle; "
            f"quadrature needs >= {limit:.3e}"
        )
        self.distance = distance
        self.limit = limit


@dataclass(frozen=True)
class BoundaryGrid:
    disk: Disk
    M: int
    theta: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    normals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("need at least one node")
        theta = 2.0 * np.pi * np.arange(self.M) / self.M
        normals = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        nodes = self.disk.center + self.disk.radius * normals
        for name, arr in (("theta", theta), ("nodes", nodes), ("normals", normals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def weight(self) -> float:
        return 2.0 * np.pi * self.disk.radius / self.M

    @property
    def spacing(self) -> float:
        return self.weight

    def distance(self, x) -> np.ndarray:
        """Unsigned distance from x to the circle."""
        w = np.asarray(x, dtype=float) - self.disk.center
        return np.abs(np.hypot(w[..., 0], w[..., 1]) - self.disk.radius)


@dataclass(frozen=True)
class BoundaryDensity:
    grid: BoundaryGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.grid.M)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def total(self) -> float:
        """Integral of the density over its circle."""
        return float(self.grid.weight * np.sum(self.values))

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def mean_zero(self) -> "BoundaryDensity":
        return BoundaryDensity(self.grid, self.values - self.values.mean())

    def __add__(self, other: "BoundaryDensity") -> "BoundaryDensity":
        return BoundaryDensity(self.grid, self.values + other.values)

    def __mul__(self, s: float) -> "BoundaryDensity":
        return BoundaryDensity(self.grid, s * self.values)

    __rmul__ = __mul__


def _check_margin(grid: BoundaryGrid, x, margin: float):
    if margin <= 0:
        return
    d = grid.distance(x)
    limit = margin * grid.spacing
    if np.any(d < limit):
        raise NearBoundaryError(float(np.min(d)), limit)


def _offsets(grid: BoundaryGrid, x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    diff = x[..., None, :] - grid.nodes
    return diff, np.einsum("...i,...i->...", diff, diff)


def single_layer(grid: BoundaryGrid, values, x) -> np.ndarray:
    """Unchecked trapezoid sum for (1/2pi) int log|x - y| phi(y) ds(y)."""
    _, d2 = _offsets(grid, x)
    return 0.25 / np.pi * grid.weight * (np.log(d2) @ np.asarray(values))


def single_layer_gradient(grid: BoundaryGrid, values, x) -> np.ndarray:
    diff, d2 = _offsets(grid, x)
    k = np.asarray(values) / d2
    return INV_2PI * grid.weight * np.einsum("...j,...ji->...i", k, diff)


def eval_single_layer(density: BoundaryDensity, x, margin: float = 2.0) -> np.ndarray:
    _check_margin(density.grid, x, margin)
    return single_layer(density.grid, density.values, x)


def eval_single_layer_gradient(density: BoundaryDensity, x, margin: float = 2.0) -> np.ndarray:
    _check_margin(density.grid, x, margin)
    return single_layer_gradient(density.grid, density.values, x)


def eval_double_layer(density: BoundaryDensity, x, margin: float = 2.0) -> np.ndarray:
    """-(1/2pi) int <x - y, nu(y)>/|x - y|^2 phi(y) ds(y); equals -1 inside for phi = 1."""
    grid = density.grid
    _check_margin(grid, x, margin)
    diff, d2 = _offsets(grid, x)
    k = np.einsum("...ji,ji->...j", diff, grid.normals) / d2
    return -INV_2PI * grid.weight * (k @ density.values)


def single_layer_trace(density: BoundaryDensity) -> np.ndarray:
    """S[phi] at the nodes of its own circle, exact for band-limited phi.

    S[e^{ik theta}] = -(r/2|k|) e^{ik theta} for k != 0 and S[1] = r log r.
    """
    r = density.grid.disk.radius
    M = density.grid.M
    c = np.fft.rfft(density.values)
    k = np.arange(len(c))
    mult = np.empty(len(c))
    mult[0] = r * np.log(r)
    mult[1:] = -r / (2.0 * k[1:])
    return np.fft.irfft(c * mult, n=M)


def cross_kernel_block(target: BoundaryGrid, source: BoundaryGrid, oversample: int = 1) -> np.ndarray:
    """Nystrom matrix of d/dnu S_source[.] on the target nodes (outward target normals).

    With ``oversample == 1`` entry (k, l) is w_l <x_k - y_l, nu(x_k)>/(2 pi |x_k - y_l|^2).
    Larger values apply the trapezoid rule on a grid ``oversample`` times finer
    to the trigonometric interpolant of the density; the matrix stays M x M.
    """
    dc = np.hypot(*(target.disk.center - source.disk.center))
    if dc <= target.disk.radius + source.disk.radius:
        raise GeometryError("target and source circles must be disjoint")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    fine = source if oversample == 1 else BoundaryGrid(source.disk, source.M * oversample)
    rows = []
    step = max(1, 2**22 // fine.M)
    for i in range(0, target.M, step):
        x = target.nodes[i:i + step]
        diff = x[:, None, :] - fine.nodes[None, :, :]
        d2 = np.einsum("kli,kli->kl", diff, diff)
        num = np.einsum("kli,ki->kl", diff, target.normals[i:i + step])
        k = INV_2PI * fine.weight * num / d2
        rows.append(k if oversample == 1 else interpolation_adjoint(k, source.M))
    return np.concatenate(rows)


def interpolation_adjoint(rows: np.ndarray, M: int) -> np.ndarray:
    """rows @ P, where P (M_fine x M) is trigonometric interpolation from M nodes."""
    c = np.fft.rfft(rows, axis=-1)[..., : M // 2 + 1]
    c[..., -1] = c[..., -1].real
    return np.fft.irfft(c, n=M, axis=-1)


def own_boundary_flux(density: BoundaryDensity, side: str = "exterior") -> np.ndarray:
    """Normal derivative of S[phi] on its own circle: +-phi/2 + int(phi)/(4 pi r)."""
    kstar = density.total / (4.0 * np.pi * density.grid.disk.radius)
    if side == "exterior":
        return 0.5 * density.values + kstar
    if side == "interior":
        return -0.5 * density.values + kstar
    raise ValueError(f"side must be 'exterior' or 'interior', got {side!r}")


def upsample(density: BoundaryDensity, M_fine: int) -> BoundaryDensity:
    """Trigonometric interpolant of the density sampled on a finer grid."""
    M = density.grid.M
    if M_fine < M:
        raise ValueError("upsampling needs M_fine >= M")
    c = np.fft.rfft(density.values)
    if M % 2 == 0:
        c[-1] *= 0.5  # split the Nyquist mode symmetrically
    fine = np.fft.irfft(c, n=M_fine) * (M_fine / M)
    return BoundaryDensity(BoundaryGrid(density.grid.disk, M_fine), fine)
