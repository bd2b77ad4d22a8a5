"""Log-density targets over an orthonormal-column matrix plus auxiliary parameters.

A target evaluates ``(logp, dlogp/dY, dlogp/daux_u)`` in one call, where
``aux_u`` are the *unconstrained* auxiliary coordinates; the log-Jacobians
of the auxiliary transforms and the priors are part of ``logp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import log_ndtr, logsumexp, ndtri

from .givens import DomainError, Shape

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


# --- auxiliary parameter transforms -------------------------------------------------

@dataclass(frozen=True)
class AuxParam:
    """A block of auxiliary parameters and its unconstraining transform.

    transform is one of
      ``identity``  unbounded reals
      ``log``       positive, value = exp(u)
      ``ordered_positive``  positive and decreasing, built from the last
                    entry upward by adding exp(u_k)
      ``ordered``   decreasing reals, value_0 = u_0, value_k = value_{k-1} - exp(u_k)
    """

    name: str
    size: int = 1
    transform: str = "identity"

    def names(self) -> list[str]:
        if self.size == 1:
            return [self.name]
        return [f"{self.name}_{k + 1}" for k in range(self.size)]

    def forward(self, u):
        """Return (value, log|Jacobian|)."""
        u = np.asarray(u, dtype=float)
        t = self.transform
        if t == "identity":
            return u.copy(), 0.0
        if t == "log":
            return np.exp(u), float(np.sum(u))
        if t == "ordered_positive":
            return np.cumsum(np.exp(u)[::-1])[::-1], float(np.sum(u))
        if t == "ordered":
            steps = np.concatenate([u[:1], -np.exp(u[1:])])
            return np.cumsum(steps), float(np.sum(u[1:]))
        raise ValueError(f"unknown transform {t!r}")

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        t = self.transform
        if t == "identity":
            return v.copy()
        if t == "log":
            return np.log(v)
        if t == "ordered_positive":
            gaps = v - np.concatenate([v[1:], [0.0]])
            return np.log(gaps)
        if t == "ordered":
            return np.concatenate([v[:1], np.log(v[:-1] - v[1:])])
        raise ValueError(f"unknown transform {t!r}")

    def pullback(self, u, v_bar):
        """Gradient w.r.t. u of  <v_bar, value(u)> + log|Jacobian|(u)."""
        u = np.asarray(u, dtype=float)
        t = self.transform
        if t == "identity":
            return np.array(v_bar, dtype=float)
        if t == "log":
            return v_bar * np.exp(u) + 1.0
        if t == "ordered_positive":
            # value_m depends on u_k for every k >= m
            return np.exp(u) * np.cumsum(v_bar) + 1.0
        if t == "ordered":
            tail = np.cumsum(v_bar[::-1])[::-1]
            g = -np.exp(u) * tail + 1.0
            g[0] = np.sum(v_bar)
            return g
        raise ValueError(f"unknown transform {t!r}")


class ModelTarget:
    """Base class: subclasses set ``name``, ``aux`` and implement ``log_density``.

    ``log_density(Y, values)`` receives constrained auxiliary values as a
    dict and returns ``(logp, dY, {name: dvalue})``.
    """

    name = "model"
    matrix_name = "Y"
    aux: tuple = ()

    @property
    def n_aux(self) -> int:
        return sum(a.size for a in self.aux)

    def aux_names(self) -> list[str]:
        return [nm for a in self.aux for nm in a.names()]

    def _split(self, aux_u):
        out, k = [], 0
        for a in self.aux:
            out.append(np.asarray(aux_u[k:k + a.size], dtype=float))
            k += a.size
        return out

    def constrain_aux(self, aux_u) -> np.ndarray:
        if self.n_aux == 0:
            return np.zeros(0)
        return np.concatenate([a.forward(u)[0] for a, u in zip(self.aux, self._split(aux_u))])

    def unconstrain_aux(self, values) -> np.ndarray:
        if self.n_aux == 0:
            return np.zeros(0)
        return np.concatenate([a.inverse(v) for a, v in zip(self.aux, self._split(values))])

    def init_aux(self, rng) -> np.ndarray:
        return rng.uniform(-2.0, 2.0, size=self.n_aux)

    def evaluate(self, Y, aux_u):
        """Return (logp, dlogp/dY, dlogp/daux_u); logp is -inf off the support."""
        with np.errstate(over="ignore", invalid="ignore"):
            return self._evaluate(Y, aux_u)

    def _evaluate(self, Y, aux_u):
        parts = self._split(aux_u)
        values, logjac = {}, 0.0
        for a, u in zip(self.aux, parts):
            v, lj = a.forward(u)
            values[a.name] = v
            logjac += lj
        logp, dY, dval = self.log_density(Y, values)
        if not np.isfinite(logp):
            return -math.inf, np.zeros_like(Y), np.zeros(self.n_aux)
        daux = [a.pullback(u, dval[a.name]) for a, u in zip(self.aux, parts)]
        daux = np.concatenate(daux) if daux else np.zeros(0)
        logp = logp + logjac
        if not np.isfinite(logp) or not np.all(np.isfinite(dY)) or not np.all(np.isfinite(daux)):
            return -math.inf, np.zeros_like(Y), np.zeros(self.n_aux)
        return logp, dY, daux

    def log_density(self, Y, values):
        raise NotImplementedError


# --- uniform ------------------------------------------------------------------------

class UniformStiefel(ModelTarget):
    """Constant density in Y; uniformity comes from the measure term alone."""

    name = "uniform"

    def __init__(self, shape: Shape):
        self.shape = shape

    def log_density(self, Y, values):
        return 0.0, np.zeros_like(Y), {}


def uniform_stiefel_target(shape: Shape) -> UniformStiefel:
    return UniformStiefel(shape)


# --- probabilistic PCA ---------------------------------------------------------------

@dataclass
class PpcaData:
    N: int
    Sigma_hat: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.Sigma_hat, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise DomainError("Sigma_hat must be square")
        if np.max(np.abs(S - S.T), initial=0.0) > 1e-10:
            raise DomainError("Sigma_hat must be symmetric")
        self.Sigma_hat = 0.5 * (S + S.T)
        if self.N < 1:
            raise DomainError("N must be positive")

    @property
    def n(self) -> int:
        return self.Sigma_hat.shape[0]

    @classmethod
    def from_observations(cls, X) -> "PpcaData":
        X = np.asarray(X, dtype=float)
        return cls(N=X.shape[0], Sigma_hat=X.T @ X / X.shape[0])


class Ppca(ModelTarget):
    """x ~ N(0, W diag(lam)^2 W' + sigma2 I), marginalised over latents.

    Priors: each lam_k half-normal(sd 5) with lam decreasing, sigma2
    half-normal(sd 5).
    """

    name = "ppca"
    matrix_name = "W"
    prior_sd = 5.0

    def __init__(self, data: PpcaData, p: int):
        if not 1 <= p <= data.n:
            raise DomainError(f"need 1 <= p <= n = {data.n}, got p = {p}")
        self.data = data
        self.shape = Shape(data.n, p)
        self.aux = (AuxParam("Lambda", p, "ordered_positive"), AuxParam("sigma2", 1, "log"))

    def covariance(self, W, lam, sigma2):
        return (W * lam**2) @ W.T + sigma2 * np.eye(W.shape[0])

    def log_density(self, Y, values):
        lam = values["Lambda"]
        sigma2 = values["sigma2"][0]
        N, Sh = self.data.N, self.data.Sigma_hat
        C = self.covariance(Y, lam, sigma2)
        if not np.all(np.isfinite(C)):
            return -math.inf, None, None
        try:
            L = np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            return -math.inf, None, None
        if not np.all(np.isfinite(L)) or not np.all(np.diag(L) > 0):
            return -math.inf, None, None
        Cinv = cho_solve((L, True), np.eye(C.shape[0]))
        Cinv = 0.5 * (Cinv + Cinv.T)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        CiS = Cinv @ Sh
        logp = -0.5 * N * logdet - 0.5 * N * np.trace(CiS)

        v2 = self.prior_sd**2
        logp += -0.5 * np.sum(lam**2) / v2 - 0.5 * sigma2**2 / v2

        # dlogp/dC = (N/2) S with S = C^-1 Sh C^-1 - C^-1 (symmetric)
        S = CiS @ Cinv - Cinv
        S = 0.5 * (S + S.T)
        SW = S @ Y
        dY = N * SW * lam**2
        dlam = N * lam * np.einsum("ik,ik->k", Y, SW) - lam / v2
        dsig = np.array([0.5 * N * np.trace(S) - sigma2 / v2])
        return float(logp), dY, {"Lambda": dlam, "sigma2": dsig}

    def init_aux(self, rng):
        scale = math.sqrt(max(np.trace(self.data.Sigma_hat) / self.data.n, 1e-8))
        lam = np.sort(scale * rng.uniform(0.5, 1.5, size=self.shape.p))[::-1]
        lam = lam + 1e-3 * np.arange(self.shape.p, 0, -1)
        sig2 = scale**2 * rng.uniform(0.5, 1.5, size=1)
        return self.unconstrain_aux(np.concatenate([lam, sig2]))


def ppca_target(data: PpcaData, p: int) -> Ppca:
    return Ppca(data, p)


def simulate_ppca(N, W, lam, sigma2, seed) -> np.ndarray:
    """Draw N observations x = W diag(lam) z + noise."""
    rng = np.random.default_rng(seed)
    W = np.asarray(W, dtype=float)
    lam = np.asarray(lam, dtype=float)
    Z = rng.standard_normal((N, W.shape[1]))
    noise = math.sqrt(sigma2) * rng.standard_normal((N, W.shape[0]))
    return (Z * lam) @ W.T + noise


# --- network eigenmodel --------------------------------------------------------------

@dataclass
class NetworkData:
    adjacency: np.ndarray
    truth: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.asarray(self.adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError("adjacency must be square")
        offdiag = ~np.eye(A.shape[0], dtype=bool)
        if not np.all(np.isin(A[offdiag], (0, 1))):
            raise DomainError("adjacency entries must be 0 or 1")
        if not np.array_equal(A, A.T):
            raise DomainError("adjacency must be symmetric")
        A = A.astype(float)
        np.fill_diagonal(A, 0.0)
        self.adjacency = A

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]


def _log_phi(m):
    return -0.5 * m * m - _LOG_SQRT_2PI


class Eigenmodel(ModelTarget):
    """Probit dyad model P(edge ij) = Phi([U diag(Lambda) U']_ij + c), i > j.

    Priors c ~ N(0, 10^2) and Lambda_k ~ N(0, n) (variance n).  ``mask``
    selects the dyads that enter the likelihood (held-out dyads excluded).
    """

    name = "eigenmodel"
    matrix_name = "U"
    c_sd = 10.0

    def __init__(self, data: NetworkData, p: int, mask=None, ordered_lambda: bool = False):
        n = data.n_nodes
        if not 1 <= p <= n:
            raise DomainError(f"need 1 <= p <= n_nodes = {n}, got p = {p}")
        self.data = data
        self.shape = Shape(n, p)
        self.aux = (AuxParam("c", 1, "identity"),
                    AuxParam("Lambda", p, "ordered" if ordered_lambda else "identity"))
        lower = np.tril(np.ones((n, n), dtype=bool), -1)
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            lower &= mask | mask.T
        self.rows, self.cols = np.nonzero(lower)
        self.y = data.adjacency[self.rows, self.cols]

    def linear_predictor(self, U, lam, c):
        return np.einsum("ik,k,ik->i", U[self.rows], lam, U[self.cols]) + c

    def dyad_loglik(self, m, y):
        return np.where(y > 0.5, log_ndtr(m), log_ndtr(-m))

    def log_density(self, Y, values):
        c = values["c"][0]
        lam = values["Lambda"]
        n = self.shape.n
        m = self.linear_predictor(Y, lam, c)
        ll = self.dyad_loglik(m, self.y)
        logp = float(np.sum(ll))
        logp += -0.5 * c * c / self.c_sd**2 - 0.5 * float(np.sum(lam**2)) / n
        if not np.isfinite(logp):
            return -math.inf, None, None

        # d log Phi(+-m)/dm = +-phi(m) / Phi(+-m)
        sgn = np.where(self.y > 0.5, 1.0, -1.0)
        g = sgn * np.exp(_log_phi(m) - log_ndtr(sgn * m))

        A = np.zeros((n, n))
        np.add.at(A, (self.rows, self.cols), g)
        As = A + A.T
        dY = (As @ Y) * lam
        dlam = 0.5 * np.einsum("ik,ij,jk->k", Y, As, Y) - lam / n
        dc = np.array([g.sum() - c / self.c_sd**2])
        return logp, dY, {"c": dc, "Lambda": dlam}

    def init_aux(self, rng):
        p = self.shape.p
        lam = rng.uniform(-2, 2, size=p)
        if self.aux[1].transform == "ordered":
            lam = np.sort(lam)[::-1] + 1e-3 * np.arange(p, 0, -1)
        return self.unconstrain_aux(np.concatenate([rng.uniform(-2, 2, size=1), lam]))


def eigenmodel_target(data: NetworkData, p: int, mask=None, ordered_lambda: bool = False) -> Eigenmodel:
    return Eigenmodel(data, p, mask=mask, ordered_lambda=ordered_lambda)


def synth_network(n_nodes: int, p: int, seed, c=None, Lambda=None) -> NetworkData:
    """Simulate a graph from the eigenmodel with U Haar-uniform.

    ``c`` and ``Lambda`` default to draws from their priors.
    """
    from .oracle import haar_sample

    if not 1 <= p <= n_nodes:
        raise DomainError(f"need 1 <= p <= n_nodes, got n_nodes={n_nodes}, p={p}")
    rng = np.random.default_rng(seed)
    U = haar_sample(Shape(n_nodes, p), rng)
    lam = rng.normal(0.0, math.sqrt(n_nodes), size=p) if Lambda is None else np.asarray(Lambda, float)
    c0 = rng.normal(0.0, 10.0) if c is None else float(c)
    M = (U * lam) @ U.T + c0
    with np.errstate(over="ignore"):
        prob = np.exp(log_ndtr(M))
    draws = rng.uniform(size=(n_nodes, n_nodes)) < prob
    A = np.tril(draws, -1)
    A = (A | A.T).astype(int)
    return NetworkData(A, truth={"U": U, "Lambda": lam, "c": c0})


def heldout_dyads(mask):
    """Lower-triangle dyads that ``mask`` hides, as (rows, cols)."""
    mask = np.asarray(mask, dtype=bool)
    hidden = np.tril(~(mask | mask.T), -1)
    return np.nonzero(hidden)


def predictive_loglik(data: NetworkData, rows, cols, U_draws, lam_draws, c_draws) -> float:
    """Sum over dyads of log E_posterior[p(y_ij)], averaging probabilities over draws."""
    y = data.adjacency[rows, cols]
    sgn = np.where(y > 0.5, 1.0, -1.0)
    m = np.einsum("sik,sk,sik->si", U_draws[:, rows], lam_draws, U_draws[:, cols]) + np.asarray(c_draws)[:, None]
    ll = log_ndtr(sgn * m)
    return float(np.sum(logsumexp(ll, axis=0) - math.log(ll.shape[0])))


def intercept_only_loglik(data: NetworkData, mask, rows, cols) -> float:
    """Held-out log-likelihood of the maximum-likelihood constant-probability probit model."""
    train = np.tril(np.asarray(mask, dtype=bool) | np.asarray(mask, dtype=bool).T, -1)
    rate = data.adjacency[train].mean()
    rate = min(max(rate, 0.5 / train.sum()), 1 - 0.5 / train.sum())
    c = ndtri(rate)
    y = data.adjacency[rows, cols]
    return float(np.sum(np.where(y > 0.5, log_ndtr(c), log_ndtr(-c))))
