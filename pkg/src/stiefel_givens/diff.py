"""Composite log-target over unconstrained coordinates and its exact gradient.

logp(xi, aux) = model(Y(theta(xi)), aux) + log_measure(theta) + chart adjustment

The gradient is a hand-written reverse pass: the model supplies dlogp/dY,
the rotation sweep is pulled back by the adjoint kernel, then the measure
term and the chart's scalar chain factors are added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .charts import ChartConfig, chart_grad, constrain_state, layout
from .givens import Shape, angle_indices, log_measure, log_measure_grad


@dataclass
class GradientBundle:
    logp: float
    grad_xi: np.ndarray
    grad_aux: np.ndarray


def eval_grad(xi, aux_u, model, config: ChartConfig, shape: Shape) -> GradientBundle:
    """Evaluate the composite log-density and its gradient in (xi, aux_u)."""
    n_xi = layout(shape.n, shape.p).size
    aux_u = np.asarray(aux_u, dtype=float)
    failed = GradientBundle(-math.inf, np.zeros(n_xi), np.zeros(aux_u.shape[0]))

    st = constrain_state(xi, config, shape)
    if st.result.degenerate:
        return failed
    theta = st.result.theta
    lm = log_measure(theta, shape)
    if not np.isfinite(lm):
        return failed

    Y, _ = kernels.forward(theta, shape.n, shape.p)
    logp_m, dY, daux = model.evaluate(Y, aux_u)
    logp = logp_m + lm + st.result.log_adjust
    if not np.isfinite(logp):
        return failed

    theta_bar = kernels.backward(theta, Y, np.ascontiguousarray(dY, dtype=float), shape.n, shape.p)
    theta_bar = theta_bar + log_measure_grad(theta, shape)
    g_xi = chart_grad(st, theta_bar, config, shape)
    return GradientBundle(float(logp), g_xi, np.asarray(daux, dtype=float))


class GivensPosterior:
    """Sampler-facing target over q = (xi, aux_u).

    Exposes ``dim``, ``logp_grad(q)``, ``init(rng)``, ``column_names`` and
    ``constrained(q)``, the row written out for each draw: angles, matrix
    entries row-major, then auxiliary values.
    """

    def __init__(self, model, shape: Shape, chart: ChartConfig):
        self.model = model
        self.shape = shape
        self.chart = chart
        self.n_xi = layout(shape.n, shape.p).size
        self.dim = self.n_xi + model.n_aux
        mat = getattr(model, "matrix_name", "Y")
        self.column_names = (
            [a.name for a in angle_indices(shape)]
            + [f"{mat}_{r + 1}_{c + 1}" for r in range(shape.n) for c in range(shape.p)]
            + model.aux_names()
        )

    def split(self, q):
        return q[: self.n_xi], q[self.n_xi:]

    def logp_grad(self, q):
        xi, aux = self.split(q)
        b = eval_grad(xi, aux, self.model, self.chart, self.shape)
        return b.logp, np.concatenate([b.grad_xi, b.grad_aux])

    def logp(self, q):
        return self.logp_grad(q)[0]

    def init(self, rng) -> np.ndarray:
        """Random start: unit-radius points for full-circle angles, z ~ U(-2, 2)."""
        lay = layout(self.shape.n, self.shape.p)
        xi = np.empty(self.n_xi)
        phi = rng.uniform(-math.pi, math.pi, size=lay.x_slot.size)
        if self.chart.mirrored:
            phi = 0.5 * phi
        xi[lay.x_slot] = np.cos(phi)
        xi[lay.x_slot + 1] = np.sin(phi)
        xi[lay.z_slot] = rng.uniform(-2.0, 2.0, size=lay.z_slot.size)
        return np.concatenate([xi, self.model.init_aux(rng)])

    def constrained(self, q) -> np.ndarray:
        xi, aux = self.split(q)
        st = constrain_state(xi, self.chart, self.shape)
        theta = st.result.theta
        Y, _ = kernels.forward(theta, self.shape.n, self.shape.p)
        return np.concatenate([theta, Y.ravel(), self.model.constrain_aux(aux)])
