"""Oracle batteries behind ``stiefel-givens check``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import oracle
from .charts import ChartConfig
from .diff import GivensPosterior
from .givens import Shape, angle_indices, givens_to_matrix, log_measure, matrix_to_givens
from .models import PpcaData, eigenmodel_target, ppca_target, synth_network, uniform_stiefel_target

SUITES = ("roundtrip", "jacobian", "gradient", "marginals")

ROUNDTRIP_SHAPES = ((3, 2), (5, 3), (10, 4))
JACOBIAN_SHAPES = ((3, 1), (3, 2), (5, 3), (6, 3))
GRADIENT_SHAPES = ((3, 2), (5, 3), (10, 4))
MARGINAL_SHAPES = ((3, 2), (5, 2), (6, 3))


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    threshold: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.suite}: {self.name}  value={self.value:.3g}  threshold={self.threshold:.3g}"

    def to_dict(self):
        return asdict(self)


def roundtrip(seed=0, cases=1000, tol=1e-10):
    rng = np.random.default_rng(seed)
    out = []
    for n, p in ROUNDTRIP_SHAPES:
        shape = Shape(n, p)
        Ys = oracle.haar_sample(shape, rng, size=cases)
        err = 0.0
        for Y in Ys:
            err = max(err, float(np.max(np.abs(givens_to_matrix(matrix_to_givens(Y), shape) - Y))))
        out.append(CheckResult("roundtrip", f"Y->theta->Y max err ({n},{p}) x{cases}", err, tol, err <= tol))
    return out


def random_interior_angles(shape: Shape, rng, margin=1e-4, size=None):
    """Angles drawn uniformly inside the chart, at least ``margin`` from its edges."""
    k = 1 if size is None else size
    theta = np.empty((k, shape.d))
    for col, a in enumerate(angle_indices(shape)):
        lim = (math.pi if a.exponent == 0 else math.pi / 2) - margin
        theta[:, col] = rng.uniform(-lim, lim, size=k)
    return theta[0] if size is None else theta


def jacobian(seed=0, points=200, tol=1e-5):
    rng = np.random.default_rng(seed)
    out = []
    for n, p in JACOBIAN_SHAPES:
        shape = Shape(n, p)
        worst = 0.0
        # stay where cos(theta) is not tiny: the FD determinant loses digits there
        for theta in random_interior_angles(shape, rng, margin=0.15, size=points):
            worst = max(worst, abs(log_measure(theta, shape) - oracle.numeric_log_measure(theta, shape)))
        out.append(CheckResult("jacobian", f"|analytic - numeric log measure| ({n},{p}) x{points}", worst, tol,
                               worst <= tol))
    return out


def fd_gradient(f, q, step=1e-5):
    g = np.empty_like(q)
    for k in range(q.size):
        e = np.zeros_like(q)
        e[k] = step
        g[k] = (f(q + e) - f(q - e)) / (2 * step)
    return g


def gradient_error(analytic, numeric, rtol=1e-5, atol=1e-8):
    """Worst ratio of |analytic - numeric| to the allowed error max(rtol*|analytic|, atol)."""
    allowed = np.maximum(rtol * np.abs(analytic), atol)
    return float(np.max(np.abs(analytic - numeric) / allowed))


def gradient_models(shape: Shape, rng):
    X = rng.standard_normal((25, shape.n)) * np.linspace(2.0, 0.5, shape.n)
    net = synth_network(shape.n, shape.p, rng, c=0.0, Lambda=np.linspace(3.0, -2.0, shape.p))
    return [
        uniform_stiefel_target(shape),
        ppca_target(PpcaData.from_observations(X), shape.p),
        eigenmodel_target(net, shape.p),
    ]


def gradient(seed=0, points=200):
    """FD agreement of the full composite gradient; points spread over shapes and charts."""
    rng = np.random.default_rng(seed)
    out = []
    per_shape = max(1, -(-points // len(GRADIENT_SHAPES)))
    for name in ("uniform", "ppca", "eigenmodel"):
        worst = 0.0
        for n, p in GRADIENT_SHAPES:
            shape = Shape(n, p)
            model = {m.name: m for m in gradient_models(shape, rng)}[name]
            for k in range(per_shape):
                post = GivensPosterior(model, shape, ChartConfig(mirrored=bool(k % 2)))
                q = post.init(rng)
                q[: post.n_xi] += 0.1 * rng.standard_normal(post.n_xi)
                lp, g = post.logp_grad(q)
                if not np.isfinite(lp):
                    continue
                worst = max(worst, gradient_error(g, fd_gradient(post.logp, q)))
        out.append(CheckResult("gradient", f"{name}: max FD error / allowed over {per_shape * 3} points",
                               worst, 1.0, worst <= 1.0))
    return out


def marginals(seed=0, draws=5000, threshold=0.05):
    rng = np.random.default_rng(seed)
    out = []
    for n, p in MARGINAL_SHAPES:
        shape = Shape(n, p)
        thetas = np.array([matrix_to_givens(Y) for Y in oracle.haar_sample(shape, rng, size=draws)])
        worst = max(oracle.ks_statistic(thetas[:, k], oracle.angle_marginal_cdf(a)).statistic
                    for k, a in enumerate(angle_indices(shape)))
        out.append(CheckResult("marginals", f"max per-angle KS of Haar draws ({n},{p}) x{draws}", worst,
                               threshold, worst < threshold))
    return out


_RUNNERS = {"roundtrip": roundtrip, "jacobian": jacobian, "gradient": gradient, "marginals": marginals}


def run_suite(name: str, seed=0):
    if name == "all":
        return [r for s in SUITES for r in _RUNNERS[s](seed=seed)]
    if name not in _RUNNERS:
        raise KeyError(name)
    return _RUNNERS[name](seed=seed)
