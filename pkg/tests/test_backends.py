"""The numba kernels and the numpy fallback must agree to rounding."""

import os
import subprocess
import sys

import numpy as np
import pytest

from stiefel_givens import _kernels_numba as kb
from stiefel_givens import _kernels_numpy as kn
from stiefel_givens.checks import random_interior_angles
from stiefel_givens.givens import Shape
from stiefel_givens.oracle import haar_sample

SHAPES = [(2, 1), (3, 2), (5, 5), (10, 4), (30, 3)]


@pytest.mark.parametrize("n,p", SHAPES)
def test_forward_parity(n, p, rng):
    theta = random_interior_angles(Shape(n, p), rng)
    Yb, ob = kb.forward(theta, n, p)
    Yn, on = kn.forward(theta, n, p)
    np.testing.assert_allclose(Yb, Yn, atol=1e-14)
    assert ob == on


@pytest.mark.parametrize("n,p", SHAPES)
def test_backward_parity(n, p, rng):
    theta = random_interior_angles(Shape(n, p), rng)
    Y, _ = kb.forward(theta, n, p)
    dY = rng.standard_normal((n, p))
    np.testing.assert_allclose(kb.backward(theta, Y, dY, n, p), kn.backward(theta, Y, dY, n, p), atol=1e-12)


@pytest.mark.parametrize("n,p", SHAPES)
def test_reduce_parity(n, p, rng):
    A = haar_sample(Shape(n, p), rng)
    tb, Rb, fb = kb.reduce(A)
    tn, Rn, fn = kn.reduce(A)
    np.testing.assert_allclose(tb, tn, atol=1e-13)
    np.testing.assert_allclose(Rb, Rn, atol=1e-13)
    np.testing.assert_array_equal(fb, fn)


def test_backward_is_vector_jacobian_product(rng):
    n, p = 6, 3
    theta = random_interior_angles(Shape(n, p), rng)
    dY = rng.standard_normal((n, p))
    Y, _ = kb.forward(theta, n, p)
    g = kb.backward(theta, Y, dY, n, p)
    h = 1e-6
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        fd = np.sum(dY * (kn.forward(theta + e, n, p)[0] - kn.forward(theta - e, n, p)[0])) / (2 * h)
        assert fd == pytest.approx(g[k], rel=1e-7, abs=1e-9)


@pytest.mark.parametrize("value,expected", [("numpy", "numpy"), ("numba", "numba")])
def test_environment_flag(value, expected):
    env = dict(os.environ, STIEFEL_GIVENS_BACKEND=value)
    out = subprocess.run([sys.executable, "-c", "import stiefel_givens as s; print(s.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_environment_flag_rejects_unknown():
    env = dict(os.environ, STIEFEL_GIVENS_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import stiefel_givens"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "STIEFEL_GIVENS_BACKEND" in out.stderr
