"""Scalar-loop rotation kernels compiled with numba.

Angles are stored in the order (0,1), (0,2), ..., (0,n-1), (1,2), ..., i.e.
column group ``i`` then row ``j > i`` (0-based).  A rotation in group ``i``
only ever touches columns ``i..p-1`` of the working matrix: earlier columns
are standard basis vectors living in rows ``< i``.
"""

import math

import numpy as np
from numba import njit

_TINY = 1e-300


@njit(cache=True, nogil=True)
def forward(theta, n, p):
    """Y = R_01 ... R_{p-1,n-1} I_{n,p}; returns (Y, multiply count)."""
    Y = np.zeros((n, p))
    for c in range(p):
        Y[c, c] = 1.0
    nops = 0
    k = theta.shape[0] - 1
    for i in range(p - 1, -1, -1):
        for j in range(n - 1, i, -1):
            c = math.cos(theta[k])
            s = math.sin(theta[k])
            for col in range(i, p):
                a = Y[i, col]
                b = Y[j, col]
                Y[i, col] = c * a - s * b
                Y[j, col] = s * a + c * b
            nops += 4 * (p - i)
            k -= 1
    return Y, nops


@njit(cache=True, nogil=True)
def backward(theta, Y, dY, n, p):
    """Pull the cotangent dY back to the angles.

    Replays the rotations in product order, undoing each one on a copy of
    ``Y`` to recover the state it acted on, and carrying the cotangent
    through the transpose of the same two-row update.
    """
    state = Y.copy()
    bar = dY.copy()
    out = np.zeros(theta.shape[0])
    k = 0
    for i in range(p):
        for j in range(i + 1, n):
            c = math.cos(theta[k])
            s = math.sin(theta[k])
            acc = 0.0
            for col in range(i, p):
                yi = state[i, col]
                yj = state[j, col]
                a = c * yi + s * yj
                b = -s * yi + c * yj
                state[i, col] = a
                state[j, col] = b
                gi = bar[i, col]
                gj = bar[j, col]
                acc += gi * (-s * a - c * b) + gj * (c * a - s * b)
                bar[i, col] = c * gi + s * gj
                bar[j, col] = -s * gi + c * gj
            out[k] = acc
            k += 1
    return out


@njit(cache=True, nogil=True)
def reduce(A):
    """Givens reduction of an n x p matrix.

    Returns (theta, R, degenerate) where degenerate flags angles whose
    pivot pair was numerically (0, 0) and was set to zero.
    """
    n, p = A.shape
    W = A.copy()
    d = n * p - p * (p + 1) // 2
    theta = np.zeros(d)
    degenerate = np.zeros(d, dtype=np.bool_)
    k = 0
    for i in range(p):
        for j in range(i + 1, n):
            a = W[i, i]
            b = W[j, i]
            if abs(a) < _TINY and abs(b) < _TINY:
                degenerate[k] = True
                k += 1
                continue
            t = math.atan2(b, a)
            theta[k] = t
            c = math.cos(t)
            s = math.sin(t)
            for col in range(i, p):
                x = W[i, col]
                y = W[j, col]
                W[i, col] = c * x + s * y
                W[j, col] = -s * x + c * y
            W[j, i] = 0.0
            k += 1
    return theta, W[:p, :p].copy(), degenerate
