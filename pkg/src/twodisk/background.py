"""Harmonic polynomial background potentials H(x) = c + sum_k a_k Re z^k + b_k Im z^k."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class HarmonicPolynomial:
    constant: float = 0.0
    # (degree, coefficient of Re z^k, coefficient of Im z^k)
    terms: tuple[tuple[int, float, float], ...] = field(default=())

    def __post_init__(self):
        terms = tuple((int(k), float(a), float(b)) for k, a, b in self.terms)
        degrees = [k for k, _, _ in terms]
        if any(k < 1 for k in degrees):
            raise ValueError("term degrees must be >= 1")
        if len(set(degrees)) != len(degrees):
            raise ValueError(f"repeated degree in {degrees}")
        object.__setattr__(self, "terms", tuple(sorted(terms)))
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def linear(cls, g1: float, g2: float, constant: float = 0.0) -> "HarmonicPolynomial":
        """H = constant + g1 x1 + g2 x2."""
        return cls(constant, ((1, g1, g2),))

    @property
    def degree(self) -> int:
        return max((k for k, _, _ in self.terms), default=0)

    def __call__(self, x) -> np.ndarray:
        return eval_H(self, x)

    def grad(self, x) -> np.ndarray:
        return grad_H(self, x)


def _as_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0] + 1j * x[..., 1]


def eval_H(H: HarmonicPolynomial, x) -> np.ndarray:
    z = _as_complex(x)
    out = np.full(z.shape, H.constant)
    for k, a, b in H.terms:
        zk = z**k
        out = out + a * zk.real + b * zk.imag
    return out


def grad_H(H: HarmonicPolynomial, x) -> np.ndarray:
    # d/dz of (a - i b) z^k is k (a - i b) z^{k-1} = H_1 - i H_2
    z = _as_complex(x)
    dz = np.zeros(z.shape, dtype=complex)
    for k, a, b in H.terms:
        dz = dz + k * (a - 1j * b) * z ** (k - 1)
    return np.stack([dz.real, -dz.imag], axis=-1)


def conjugate_H(H: HarmonicPolynomial) -> HarmonicPolynomial:
    """Harmonic conjugate G with H + iG analytic (Re z^k -> Im z^k, Im z^k -> -Re z^k).

    Satisfies d1 G = -d2 H and d2 G = d1 H, i.e. grad G = (grad H) rotated by +90 deg.
    """
    return HarmonicPolynomial(0.0, tuple((k, -b, a) for k, a, b in H.terms))
