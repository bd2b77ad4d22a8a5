"""Independent reference computations for tests and ``check``.

Nothing here calls the rotation kernels except through the public forward
map being checked: Haar draws come from QR of Gaussian matrices, the full
rotation product is built from dense matrices, and the measure term is a
finite-difference determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .givens import AngleIndex, AngleKind, DomainError, Shape, angle_indices, givens_to_matrix, rotation_matrix


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def haar_sample(shape: Shape, seed=None, size=None) -> np.ndarray:
    """Uniform draw(s) from the Stiefel manifold via sign-corrected QR.

    ``size=None`` returns one n x p matrix, otherwise an array of ``size``
    matrices stacked on the first axis.
    """
    rng = _rng(seed)
    k = 1 if size is None else int(size)
    Z = rng.standard_normal((k, shape.n, shape.p))
    Q, R = np.linalg.qr(Z)
    sgn = np.sign(np.diagonal(R, axis1=1, axis2=2))
    sgn[sgn == 0] = 1.0
    Q = Q * sgn[:, None, :]
    return Q[0] if size is None else Q


def full_rotation(theta, shape: Shape) -> np.ndarray:
    """Dense n x n product G = R_12 ... R_pn."""
    G = np.eye(shape.n)
    for a, t in zip(angle_indices(shape), theta):
        G = G @ rotation_matrix(shape.n, a.i, a.j, t)
    return G


def column_jacobians(theta, shape: Shape, step: float = 1e-6) -> np.ndarray:
    """Central-difference d Y / d theta, shape (n, p, d)."""
    theta = np.asarray(theta, dtype=float)
    J = np.empty((shape.n, shape.p, shape.d))
    for k in range(shape.d):
        e = np.zeros(shape.d)
        e[k] = step
        J[:, :, k] = (givens_to_matrix(theta + e, shape) - givens_to_matrix(theta - e, shape)) / (2 * step)
    return J


def measure_matrix(theta, shape: Shape, step: float = 1e-6) -> np.ndarray:
    """The d x d matrix stacking G[:, i+1:]' dY_i/dtheta for each column i."""
    if shape.n > 8 or shape.p > 4:
        raise DomainError("numeric measure oracle limited to n <= 8, p <= 4")
    G = full_rotation(theta, shape)
    J = column_jacobians(theta, shape, step)
    blocks = [G[:, i + 1:].T @ J[:, i, :] for i in range(shape.p)]
    return np.vstack(blocks)


def numeric_log_measure(theta, shape: Shape, step: float = 1e-6) -> float:
    sign, logdet = np.linalg.slogdet(measure_matrix(theta, shape, step))
    if sign == 0 or not np.isfinite(logdet):
        return -math.inf
    return float(logdet)


@dataclass
class KsReport:
    statistic: float
    n_samples: int
    passed: bool


def ks_statistic(samples, cdf, threshold: float = 0.05) -> KsReport:
    """One-sample Kolmogorov-Smirnov distance to ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("need at least one sample")
    F = np.clip(np.asarray(cdf(x), dtype=float), 0.0, 1.0)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    return KsReport(statistic=D, n_samples=n, passed=D < threshold)


def ks_two_sample(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


_GRID = 4096


@lru_cache(maxsize=None)
def _cos_power_cdf_table(k: int):
    grid = np.linspace(-math.pi / 2, math.pi / 2, _GRID)
    pieces = [integrate.quad(lambda t: math.cos(t) ** k, a, b)[0] for a, b in zip(grid[:-1], grid[1:])]
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    cum /= cum[-1]
    cum.setflags(write=False)
    return grid, cum


def angle_marginal_cdf(index: AngleIndex):
    """Marginal CDF of one angle under the uniform (Haar) distribution.

    Full-circle angles are uniform; a half-circle angle with exponent k has
    density proportional to cos(t)**k on (-pi/2, pi/2).
    """
    if index.kind is AngleKind.FULL:
        return lambda t: np.clip((np.asarray(t, dtype=float) + math.pi) / (2 * math.pi), 0.0, 1.0)
    grid, cum = _cos_power_cdf_table(index.exponent)
    return lambda t: np.interp(np.asarray(t, dtype=float), grid, cum, left=0.0, right=1.0)
