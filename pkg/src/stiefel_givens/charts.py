"""Unconstrained coordinates for Givens angles.

Each full-circle angle is carried by a point (x, y) of the plane, with
``theta = atan2(y, x)`` and a Gaussian shell prior on the radius that keeps
the sampler away from the origin.  Each half-circle angle is a logistic
image of one real ``z`` on the shrunken interval
``(-pi/2 + eps, pi/2 - eps)``.

The unconstrained vector follows the angle order; a full-circle angle takes
two consecutive slots, a half-circle angle one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit, log_expit, logit

from .givens import DomainError, Shape, full_mask

R_MIN = 1e-8
_HALF_PI = 0.5 * math.pi
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class ChartConfig:
    epsilon: float = 1e-5
    r_mean: float = 1.0
    r_sd: float = 0.1
    mirrored: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < math.pi / 4:
            raise DomainError(f"epsilon must lie in (0, pi/4), got {self.epsilon}")
        if not self.r_sd > 0:
            raise DomainError(f"r_sd must be positive, got {self.r_sd}")

    @property
    def width(self) -> float:
        return math.pi - 2 * self.epsilon


@dataclass
class ChartResult:
    theta: np.ndarray
    log_adjust: float
    degenerate: bool


@dataclass(frozen=True)
class _Layout:
    full: np.ndarray      # angle positions of full-circle angles
    half: np.ndarray      # angle positions of half-circle angles
    x_slot: np.ndarray    # xi slot of x for each full-circle angle
    z_slot: np.ndarray    # xi slot of z for each half-circle angle
    size: int
    mirror_lead: tuple    # per column: angle position of the lead angle
    mirror_flip: tuple    # per column: positions negated when the lead is reflected


@lru_cache(maxsize=None)
def layout(n: int, p: int) -> _Layout:
    shape = Shape(n, p)
    fm = full_mask(shape)
    x_slot, z_slot = [], []
    slot = 0
    for is_full in fm:
        if is_full:
            x_slot.append(slot)
            slot += 2
        else:
            z_slot.append(slot)
            slot += 1
    pos = {}
    k = 0
    for i in range(1, p + 1):
        for j in range(i + 1, n + 1):
            pos[(i, j)] = k
            k += 1
    leads, flips = [], []
    for i in range(1, min(p, n - 1) + 1):
        leads.append(pos[(i, i + 1)])
        flip = [pos[(i, j)] for j in range(i + 2, n + 1)]
        if i + 1 <= p:
            flip += [pos[(i + 1, j)] for j in range(i + 2, n + 1)]
        flips.append(np.array(sorted(flip), dtype=np.int64))
    return _Layout(
        full=np.flatnonzero(fm),
        half=np.flatnonzero(~fm),
        x_slot=np.array(x_slot, dtype=np.int64),
        z_slot=np.array(z_slot, dtype=np.int64),
        size=slot,
        mirror_lead=tuple(leads),
        mirror_flip=tuple(flips),
    )


def mirror(theta_lead: float, theta_follow: float) -> tuple[float, float]:
    """Reflect a (lead, follow) angle pair into the half-plane |lead| <= pi/2.

    >>> mirror(0.3, 0.2)
    (0.3, 0.2)
    >>> [round(t, 12) for t in mirror(math.pi / 2 + 0.1, 0.2)]
    [-1.470796326795, -0.2]
    """
    if theta_lead > _HALF_PI:
        return -_HALF_PI + (theta_lead - _HALF_PI), -theta_follow
    if theta_lead < -_HALF_PI:
        return _HALF_PI + (theta_lead + _HALF_PI), -theta_follow
    return theta_lead, theta_follow


def mirror_angles(theta: np.ndarray, shape: Shape) -> tuple[np.ndarray, np.ndarray]:
    """Mirror every column's lead angle into [-pi/2, pi/2].

    Reflecting column ``i`` shifts its lead angle by pi and negates every
    other angle with exactly one index in {i, i+1}.  The resulting matrix is
    the original with columns i and i+1 (when present) negated, so densities
    that are even in each column stay continuous across the seam.

    Returns the mirrored angles and the +-1 derivative of each output angle
    with respect to its input.
    """
    lay = layout(shape.n, shape.p)
    out = np.array(theta, dtype=float)
    sign = np.ones_like(out)
    for lead, flip in zip(lay.mirror_lead, lay.mirror_flip):
        t = out[lead]
        if t > _HALF_PI:
            out[lead] = t - math.pi
        elif t < -_HALF_PI:
            out[lead] = t + math.pi
        else:
            continue
        out[flip] = -out[flip]
        sign[flip] = -sign[flip]
    return out, sign


def _gauss_logpdf(r, mean, sd):
    u = (r - mean) / sd
    with np.errstate(over="ignore"):
        return -0.5 * u * u - math.log(sd) - _LOG_SQRT_2PI


@dataclass
class ChartState:
    """Everything the gradient pass needs from one :func:`constrain` call."""

    result: ChartResult
    theta_raw: np.ndarray
    sign: np.ndarray
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray
    sig: np.ndarray


def constrain_state(xi, config: ChartConfig, shape: Shape) -> ChartState:
    xi = np.asarray(xi, dtype=float)
    lay = layout(shape.n, shape.p)
    if xi.shape != (lay.size,):
        raise DomainError(f"expected {lay.size} unconstrained coordinates, got shape {xi.shape}")
    theta = np.empty(shape.d)

    x = xi[lay.x_slot]
    y = xi[lay.x_slot + 1]
    r = np.hypot(x, y)
    theta[lay.full] = np.arctan2(y, x)
    degenerate = bool(np.any(r < R_MIN))
    log_adjust = float(np.sum(_gauss_logpdf(r, config.r_mean, config.r_sd)))

    z = xi[lay.z_slot]
    sig = expit(z)
    w = config.width
    theta[lay.half] = -_HALF_PI + config.epsilon + w * sig
    log_adjust += float(z.size * math.log(w) + np.sum(log_expit(z) + log_expit(-z)))

    if config.mirrored:
        theta_out, sign = mirror_angles(theta, shape)
    else:
        theta_out, sign = theta, np.ones(shape.d)
    if not np.isfinite(log_adjust):
        degenerate = True
    return ChartState(
        result=ChartResult(theta=theta_out, log_adjust=log_adjust, degenerate=degenerate),
        theta_raw=theta, sign=sign, x=x, y=y, r=r, sig=sig,
    )


def constrain(xi, config: ChartConfig, shape: Shape) -> ChartResult:
    return constrain_state(xi, config, shape).result


def chart_grad(state: ChartState, theta_bar: np.ndarray, config: ChartConfig, shape: Shape) -> np.ndarray:
    """Chain d(logp)/d(theta) back to the unconstrained coordinates.

    ``theta_bar`` is the gradient with respect to the (possibly mirrored)
    output angles; the chart's own log-adjustment is added here.
    """
    lay = layout(shape.n, shape.p)
    tb = theta_bar * state.sign
    g = np.zeros(lay.size)

    x, y, r = state.x, state.y, state.r
    r2 = r * r
    t_full = tb[lay.full]
    dr = -(r - config.r_mean) / config.r_sd**2
    g[lay.x_slot] = t_full * (-y / r2) + dr * x / r
    g[lay.x_slot + 1] = t_full * (x / r2) + dr * y / r

    sig = state.sig
    g[lay.z_slot] = tb[lay.half] * config.width * sig * (1 - sig) + (1 - 2 * sig)
    return g


def unconstrain(theta, config: ChartConfig, shape: Shape) -> np.ndarray:
    """Inverse chart: full-circle angles to the unit circle, others through logit.

    With a mirrored chart the result maps back to ``theta`` only if every lead
    angle already lies in [-pi/2, pi/2].
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (shape.d,):
        raise DomainError(f"expected {shape.d} angles, got shape {theta.shape}")
    lay = layout(shape.n, shape.p)
    t_full = theta[lay.full]
    t_half = theta[lay.half]
    if np.any(~np.isfinite(theta)) or np.any(t_full <= -math.pi) or np.any(t_full > math.pi):
        raise DomainError("full-circle angle outside (-pi, pi]")
    limit = _HALF_PI - config.epsilon - 1e-9
    if np.any(np.abs(t_half) > limit):
        raise DomainError(f"half-circle angle outside +-{limit:.12g}")
    if config.mirrored and np.any(np.abs(theta[list(lay.mirror_lead)]) > _HALF_PI):
        raise DomainError("mirrored chart needs every lead angle within [-pi/2, pi/2]")
    xi = np.empty(lay.size)
    xi[lay.x_slot] = np.cos(t_full)
    xi[lay.x_slot + 1] = np.sin(t_full)
    xi[lay.z_slot] = logit((t_half + _HALF_PI - config.epsilon) / config.width)
    return xi
