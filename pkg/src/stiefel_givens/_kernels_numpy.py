"""Row-vectorised numpy fallback for the rotation kernels.

Same signatures and results as :mod:`stiefel_givens._kernels_numba`; the
inner column loop becomes a slice operation.
"""

import numpy as np

_TINY = 1e-300


def forward(theta, n, p):
    Y = np.eye(n, p)
    nops = 0
    k = theta.shape[0] - 1
    for i in range(p - 1, -1, -1):
        for j in range(n - 1, i, -1):
            c = np.cos(theta[k])
            s = np.sin(theta[k])
            a = Y[i, i:].copy()
            b = Y[j, i:]
            Y[i, i:] = c * a - s * b
            Y[j, i:] = s * a + c * b
            nops += 4 * (p - i)
            k -= 1
    return Y, nops


def backward(theta, Y, dY, n, p):
    state = np.array(Y, dtype=float)
    bar = np.array(dY, dtype=float)
    out = np.zeros(theta.shape[0])
    k = 0
    for i in range(p):
        for j in range(i + 1, n):
            c = np.cos(theta[k])
            s = np.sin(theta[k])
            yi = state[i, i:].copy()
            yj = state[j, i:].copy()
            a = c * yi + s * yj
            b = -s * yi + c * yj
            state[i, i:] = a
            state[j, i:] = b
            gi = bar[i, i:].copy()
            gj = bar[j, i:].copy()
            out[k] = np.dot(gi, -s * a - c * b) + np.dot(gj, c * a - s * b)
            bar[i, i:] = c * gi + s * gj
            bar[j, i:] = -s * gi + c * gj
            k += 1
    return out


def reduce(A):
    W = np.array(A, dtype=float)
    n, p = W.shape
    d = n * p - p * (p + 1) // 2
    theta = np.zeros(d)
    degenerate = np.zeros(d, dtype=bool)
    k = 0
    for i in range(p):
        for j in range(i + 1, n):
            a = W[i, i]
            b = W[j, i]
            if abs(a) < _TINY and abs(b) < _TINY:
                degenerate[k] = True
                k += 1
                continue
            t = np.arctan2(b, a)
            theta[k] = t
            c = np.cos(t)
            s = np.sin(t)
            x = W[i, i:].copy()
            y = W[j, i:].copy()
            W[i, i:] = c * x + s * y
            W[j, i:] = -s * x + c * y
            W[j, i] = 0.0
            k += 1
    return theta, W[:p, :p].copy(), degenerate
