"""Disks, circle inversions and the canonical frame of a two-disk scene."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Invalid disk configuration or evaluation at an inversion pole."""


@dataclass(frozen=True)
class Disk:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise GeometryError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))


def reflect(disk: Disk, x) -> np.ndarray:
    """Inversion in the circle ``disk``: r^2 (x - c) / |x - c|^2 + c.

    Works on a single point or on any array of points with a trailing axis
    of length 2.
    """
    w = np.asarray(x, dtype=float) - disk.center
    d2 = np.einsum("...i,...i->...", w, w)
    if np.any(d2 == 0.0):
        raise GeometryError("reflection pole: point coincides with the disk center")
    return disk.radius**2 * w / d2[..., None] + disk.center


def reflect_jacobian(disk: Disk, x) -> np.ndarray:
    """Jacobian of :func:`reflect`, (r^2/|w|^2) (I - 2 w w^T/|w|^2), shape (..., 2, 2)."""
    w = np.asarray(x, dtype=float) - disk.center
    d2 = np.einsum("...i,...i->...", w, w)
    if np.any(d2 == 0.0):
        raise GeometryError("reflection pole: point coincides with the disk center")
    outer = w[..., :, None] * w[..., None, :] / d2[..., None, None]
    return (disk.radius**2 / d2)[..., None, None] * (np.eye(2) - 2.0 * outer)


@dataclass(frozen=True)
class TwoDiskConfig:
    """Two disjoint disks plus the derived frame.

    ``n`` points from the first center to the second, ``t`` is ``n`` rotated
    by +90 degrees, ``p`` is the midpoint of the gap, and ``p1``/``p2`` are the
    fixed points of R1 R2 and R2 R1 (mutually inverse in both circles).
    """

    disk1: Disk
    disk2: Disk
    eps: float
    n: np.ndarray
    t: np.ndarray
    p: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    @property
    def disks(self) -> tuple[Disk, Disk]:
        return (self.disk1, self.disk2)

    @property
    def c1(self) -> np.ndarray:
        return self.disk1.center

    @property
    def c2(self) -> np.ndarray:
        return self.disk2.center

    @property
    def r1(self) -> float:
        return self.disk1.radius

    @property
    def r2(self) -> float:
        return self.disk2.radius

    def fixed_point_residuals(self) -> tuple[float, float]:
        """|R1 R2 p1 - p1| and |R2 R1 p2 - p2|."""
        d1, d2 = self.disk1, self.disk2
        res1 = np.linalg.norm(reflect(d1, reflect(d2, self.p1)) - self.p1)
        res2 = np.linalg.norm(reflect(d2, reflect(d1, self.p2)) - self.p2)
        return float(res1), float(res2)


def _frozen(v) -> np.ndarray:
    a = np.array(v, dtype=float)
    a.setflags(write=False)
    return a


def make_config(disk1: Disk, disk2: Disk) -> TwoDiskConfig:
    c1, c2 = disk1.center, disk2.center
    r1, r2 = disk1.radius, disk2.radius
    d = float(np.hypot(*(c2 - c1)))
    eps = d - r1 - r2
    if not eps > 1e-14 * (r1 + r2):
        raise GeometryError(
            f"disks overlap or touch (gap {eps:.3e}); need |c2 - c1| > r1 + r2"
        )
    n = (c2 - c1) / d
    t = np.array([-n[1], n[0]])
    p = c1 + (r1 + 0.5 * eps) * n

    # p1 = c1 + x n, p2 = c1 + (r1^2/x) n; inversion in circle 2 as well gives
    # d x^2 - (d^2 + r1^2 - r2^2) x + d r1^2 = 0. The discriminant is factored
    # to keep its O(eps) size exact; the small root is taken via the product.
    b = d * d + r1 * r1 - r2 * r2
    disc = eps * (eps + 2.0 * r1) * (eps + 2.0 * r2) * (d + r1 + r2)
    x_large = (b + np.sqrt(disc)) / (2.0 * d)
    x_small = r1 * r1 / x_large
    p1 = c1 + x_small * n
    p2 = c1 + x_large * n

    cfg = TwoDiskConfig(disk1, disk2, eps, _frozen(n), _frozen(t), _frozen(p),
                        _frozen(p1), _frozen(p2))
    if not (np.hypot(*(p1 - c1)) < r1 and np.hypot(*(p2 - c2)) < r2):
        raise GeometryError("fixed points escaped their disks")
    return cfg


def axis_config(r1: float, r2: float, eps: float) -> TwoDiskConfig:
    """Disks centred at (-r1 - eps/2, 0) and (r2 + eps/2, 0), so p is the origin."""
    return make_config(Disk((-r1 - 0.5 * eps, 0.0), r1), Disk((r2 + 0.5 * eps, 0.0), r2))
