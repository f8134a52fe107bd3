import numpy as np
import pytest
from hypothesis import given, strategies as st

from twodisk import HarmonicPolynomial, conjugate_H, eval_H, grad_H
from conftest import central_diff, rotation

coef = st.floats(-3, 3)
polys = st.builds(
    lambda c, cs: HarmonicPolynomial(c, tuple((k + 1, a, b) for k, (a, b) in enumerate(cs))),
    coef, st.lists(st.tuples(coef, coef), min_size=1, max_size=3),
)
points = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).map(np.array)


def test_eval_examples():
    x1 = HarmonicPolynomial.linear(1.0, 0.0)
    sq = HarmonicPolynomial(0.0, ((2, 1.0, 0.0),))
    assert eval_H(x1, np.array([3.0, 4.0])) == pytest.approx(3.0)
    assert eval_H(sq, np.array([1.0, 2.0])) == pytest.approx(-3.0)
    H = HarmonicPolynomial(0.0, ((1, 2.0, 0.0), (2, 1.0, 0.0)))
    assert eval_H(H, np.zeros(2)) == 0.0


def test_grad_examples():
    x1 = HarmonicPolynomial.linear(1.0, 0.0)
    np.testing.assert_allclose(grad_H(x1, np.array([[0.3, -7.0], [5.0, 2.0]])), [[1, 0], [1, 0]])
    sq = HarmonicPolynomial(0.0, ((2, 1.0, 0.0),))
    np.testing.assert_allclose(grad_H(sq, np.array([1.0, 2.0])), [2.0, -4.0])


def test_validation():
    with pytest.raises(ValueError):
        HarmonicPolynomial(0.0, ((0, 1.0, 0.0),))
    with pytest.raises(ValueError):
        HarmonicPolynomial(0.0, ((1, 1.0, 0.0), (1, 0.0, 1.0)))


def test_grad_matches_finite_differences(rng):
    H = HarmonicPolynomial(0.5, ((1, 0.3, -1.2), (2, 0.7, 0.4), (3, -0.25, 0.9)))
    x = rng.uniform(-1.5, 1.5, (50, 2))
    np.testing.assert_allclose(grad_H(H, x), central_diff(H, x), atol=1e-7)


@given(H=polys, x=points)
def test_laplacian_vanishes(H, x):
    h = 1e-3
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    lap = (H(x + e1) + H(x - e1) + H(x + e2) + H(x - e2) - 4 * H(x)) / h**2
    scale = 1 + np.sum(np.abs([t[1:] for t in H.terms])) * (1 + np.linalg.norm(x)) ** 3
    assert abs(lap) <= 1e-6 * scale / h**0 + 1e-4 * scale * h


def test_conjugate_examples():
    assert conjugate_H(HarmonicPolynomial.linear(1.0, 0.0)) == HarmonicPolynomial.linear(0.0, 1.0)
    assert conjugate_H(HarmonicPolynomial.linear(0.0, 1.0)) == HarmonicPolynomial.linear(-1.0, 0.0)
    assert conjugate_H(HarmonicPolynomial(4.0, ())).constant == 0.0


@given(H=polys)
def test_cauchy_riemann(H):
    x = np.random.default_rng(1).uniform(-2, 2, (100, 2))
    g, gt = H.grad(x), conjugate_H(H).grad(x)
    np.testing.assert_allclose(gt[:, 0], -g[:, 1], atol=1e-12 * (1 + np.abs(g).max()))
    np.testing.assert_allclose(gt[:, 1], g[:, 0], atol=1e-12 * (1 + np.abs(g).max()))


@given(H=polys)
def test_double_conjugate_negates(H):
    tt = conjugate_H(conjugate_H(H))
    x = np.random.default_rng(2).uniform(-2, 2, (20, 2))
    np.testing.assert_allclose(tt(x), -(H(x) - H.constant), atol=1e-10)


@given(H=polys, ang=st.floats(0, 2 * np.pi), p=points)
def test_conjugate_rotates_frame(H, ang, p):
    # with grad H~ = (grad H) rotated by +90 deg, the normal component of grad H~
    # is minus the tangential component of grad H (t = n rotated by +90 deg)
    n = rotation(ang) @ np.array([1.0, 0.0])
    t = np.array([-n[1], n[0]])
    g, gt = H.grad(p), conjugate_H(H).grad(p)
    assert n @ gt == pytest.approx(-(t @ g), abs=1e-10)
    assert t @ gt == pytest.approx(n @ g, abs=1e-10)
