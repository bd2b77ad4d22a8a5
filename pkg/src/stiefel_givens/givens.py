"""Givens representation of n x p orthonormal-column matrices.

Any Y with orthonormal columns factors as a product of plane rotations
applied to the first p columns of the identity::

    Y = R_12(t_12) ... R_1n(t_1n) R_23(t_23) ... R_pn(t_pn) I_{n,p}

Indices in names and docstrings are 1-based (``theta_1_2``); arrays are
stored contiguously in that same order.  The rotation convention is

>>> import numpy as np
>>> rotation_matrix(2, 1, 2, np.pi / 2).round(12) + 0.0
array([[ 0., -1.],
       [ 1.,  0.]])

so R_ij has ``-sin`` at (i, j) and ``+sin`` at (j, i).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels

ORTHO_TOL = 1e-10


class DomainError(ValueError):
    """Input outside the domain of a Givens operation."""


class AngleKind(enum.Enum):
    FULL = "full"  # leading angle of a column, range (-pi, pi]
    HALF = "half"  # remaining angles, range (-pi/2, pi/2)


@dataclass(frozen=True)
class Shape:
    n: int
    p: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or \
                isinstance(self.p, bool) or not isinstance(self.p, (int, np.integer)):
            raise DomainError(f"shape entries must be integers, got ({self.n!r}, {self.p!r})")
        if not 1 <= self.p <= self.n:
            raise DomainError(f"need 1 <= p <= n, got n={self.n}, p={self.p}")

    @property
    def d(self) -> int:
        """Intrinsic dimension of the Stiefel manifold."""
        return self.n * self.p - self.p * (self.p + 1) // 2

    @property
    def n_full(self) -> int:
        """Number of full-circle angles (one per column that has any angle)."""
        return min(self.p, self.n - 1)

    @property
    def n_unconstrained(self) -> int:
        return self.d + self.n_full


@dataclass(frozen=True)
class AngleIndex:
    i: int
    j: int

    @property
    def kind(self) -> AngleKind:
        return AngleKind.FULL if self.j == self.i + 1 else AngleKind.HALF

    @property
    def exponent(self) -> int:
        return self.j - self.i - 1

    @property
    def name(self) -> str:
        return f"theta_{self.i}_{self.j}"


def make_shape(n: int, p: int) -> Shape:
    return Shape(n, p)


@lru_cache(maxsize=None)
def _indices(n: int, p: int) -> tuple:
    return tuple(AngleIndex(i, j) for i in range(1, p + 1) for j in range(i + 1, n + 1))


def angle_indices(shape: Shape) -> list[AngleIndex]:
    return list(_indices(shape.n, shape.p))


@lru_cache(maxsize=None)
def _layout(n: int, p: int):
    idx = _indices(n, p)
    exps = np.array([a.exponent for a in idx], dtype=float)
    full = np.array([a.kind is AngleKind.FULL for a in idx], dtype=bool)
    exps.setflags(write=False)
    full.setflags(write=False)
    return exps, full


def exponents(shape: Shape) -> np.ndarray:
    """Per-angle exponent j - i - 1 of the cosine in the measure term."""
    return _layout(shape.n, shape.p)[0]


def full_mask(shape: Shape) -> np.ndarray:
    return _layout(shape.n, shape.p)[1]


def rotation_matrix(n: int, i: int, j: int, theta: float) -> np.ndarray:
    """Dense n x n rotation R_ij(theta), 1-based i, j."""
    R = np.eye(n)
    c, s = math.cos(theta), math.sin(theta)
    i, j = i - 1, j - 1
    R[i, i] = R[j, j] = c
    R[i, j] = -s
    R[j, i] = s
    return R


def apply_rotation(M: np.ndarray, i: int, j: int, c: float, s: float) -> np.ndarray:
    """Rotate rows i and j (1-based) of M in place and return M."""
    if i == j:
        raise DomainError("rotation rows must differ")
    i, j = i - 1, j - 1
    a = M[i].copy()
    M[i] = c * a - s * M[j]
    M[j] = s * a + c * M[j]
    return M


def _check_theta(theta, shape: Shape) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != shape.d:
        raise DomainError(f"expected {shape.d} angles for {shape}, got shape {theta.shape}")
    return theta


def givens_to_matrix(theta, shape: Shape, count_ops: bool = False):
    """Map angles to the orthonormal-column matrix Y(theta).

    With ``count_ops`` the number of scalar multiplications performed by the
    rotation sweep is returned alongside Y.
    """
    theta = _check_theta(theta, shape)
    Y, nops = kernels.forward(theta, shape.n, shape.p)
    return (Y, int(nops)) if count_ops else Y


def log_measure(theta, shape: Shape) -> float:
    """Log of prod cos(theta_ij)**(j - i - 1); -inf outside the half-circle range."""
    theta = _check_theta(theta, shape)
    k = exponents(shape)
    half = k > 0
    cs = np.cos(theta[half])
    if np.any(cs <= 0.0):
        return -math.inf
    return float(np.dot(k[half], np.log(cs)))


def log_measure_grad(theta, shape: Shape) -> np.ndarray:
    theta = _check_theta(theta, shape)
    return -exponents(shape) * np.tan(theta)


@dataclass
class Reduction:
    theta: np.ndarray
    R: np.ndarray
    degenerate: list  # AngleIndex entries whose pivot pair was (0, 0)


def givens_reduction(A) -> Reduction:
    """QR factorisation by successive Givens rotations.

    Column by column, each subdiagonal entry is zeroed with the angle
    ``atan2(A[j, i], A[i, i])`` of the current working matrix.  The first
    angle of a column may land anywhere in (-pi, pi]; after it the pivot is
    nonnegative, so the remaining angles fall in [-pi/2, pi/2].
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] > A.shape[0] or A.shape[1] < 1:
        raise DomainError(f"need an n x p matrix with 1 <= p <= n, got {A.shape}")
    theta, R, flags = kernels.reduce(np.ascontiguousarray(A))
    shape = Shape(*A.shape)
    degenerate = [idx for idx, f in zip(_indices(shape.n, shape.p), flags) if f]
    return Reduction(theta=theta, R=R, degenerate=degenerate)


def is_orthonormal(Y, tol: float = ORTHO_TOL) -> bool:
    Y = np.asarray(Y, dtype=float)
    return bool(np.max(np.abs(Y.T @ Y - np.eye(Y.shape[1]))) <= tol)


def matrix_to_givens(Y) -> np.ndarray:
    """Inverse of :func:`givens_to_matrix` on orthonormal-column matrices.

    For square Y only the determinant +1 component is representable.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or not 1 <= Y.shape[1] <= Y.shape[0]:
        raise DomainError(f"need an n x p matrix with 1 <= p <= n, got {Y.shape}")
    if not is_orthonormal(Y):
        raise DomainError("matrix columns are not orthonormal")
    red = givens_reduction(Y)
    if red.R[-1, -1] < 0:
        raise DomainError("square matrix with determinant -1 has no Givens representation")
    theta = red.theta
    full = full_mask(Shape(*Y.shape))
    theta[full] = wrap_angle(theta[full])
    return theta


def wrap_angle(theta):
    """Map angles onto (-pi, pi]."""
    t = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(t == -np.pi, np.pi, t)


def in_range(theta, shape: Shape) -> bool:
    theta = _check_theta(theta, shape)
    full = full_mask(shape)
    ok_full = np.all((theta[full] > -np.pi) & (theta[full] <= np.pi))
    ok_half = np.all(np.abs(theta[~full]) < np.pi / 2)
    return bool(ok_full and ok_half)
