"""Hamiltonian Monte Carlo with jittered path length and warmup adaptation.

Warmup schedule (W warmup iterations):

* ``[0, W/2)``    step size by dual averaging, unit metric
* ``[W/2, 9W/10)``  keep adapting the step size, record positions
* at ``9W/10``    diagonal inverse metric from the recorded positions, step
                  size re-initialised and dual averaging restarted
* ``[9W/10, W)``  adapt the step size under the new metric

The step size after warmup is the dual-averaged value.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .diff import GivensPosterior

log = logging.getLogger(__name__)

THREADS_ENV = "STIEFEL_GIVENS_THREADS"
DIVERGENCE_THRESHOLD = 1000.0

# dual averaging constants
_GAMMA = 0.05
_T0 = 10.0
_KAPPA = 0.75


class SamplerError(RuntimeError):
    pass


@dataclass
class HmcConfig:
    chains: int = 4
    iters: int = 500
    warmup: int = 500
    target_accept: float = 0.8
    leapfrog_steps: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.iters < 1 or self.warmup < 1:
            raise ValueError("iters and warmup must be at least 1")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")
        if self.chains < 1 or self.leapfrog_steps < 1:
            raise ValueError("chains and leapfrog_steps must be at least 1")


@dataclass
class ChainOutput:
    draws: np.ndarray
    accept_rate: float
    divergences: int
    step_size: float
    warmup_divergences: int = 0
    inv_metric: np.ndarray = field(default=None, repr=False)


@dataclass
class Diagnostics:
    names: list
    rhat: np.ndarray
    ess: np.ndarray

    def mean_over(self, prefix: str):
        sel = [k for k, nm in enumerate(self.names) if nm.startswith(prefix)]
        return float(np.mean(self.rhat[sel])), float(np.mean(self.ess[sel]))

    def to_dict(self):
        return {nm: {"rhat": float(r), "ess": float(e)} for nm, r, e in zip(self.names, self.rhat, self.ess)}


# --- diagnostics -----------------------------------------------------------------------

def _as_chains(draws) -> np.ndarray:
    x = np.asarray(draws, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("expected draws shaped (chains, iterations)")
    return x


def split_rhat(draws) -> float:
    """Split-chain potential scale reduction for one parameter.

    ``draws`` is (chains, iterations); each chain is cut in half (dropping
    the middle draw when the length is odd).
    """
    x = _as_chains(draws)
    m, n = x.shape
    if n < 4:
        raise ValueError("need at least 4 draws")
    h = n // 2
    halves = np.concatenate([x[:, :h], x[:, n - h:]], axis=0)
    W = np.mean(np.var(halves, axis=1, ddof=1))
    if not W > 0:
        return math.inf
    B = h * np.var(np.mean(halves, axis=1), ddof=1)
    var_plus = (h - 1) / h * W + B / h
    return float(math.sqrt(var_plus / W))


def _autocov(x):
    """Biased autocovariance of each row, via FFT."""
    m, n = x.shape
    xc = x - x.mean(axis=1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size, axis=1)
    return np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n] / n


def ess(draws) -> float:
    """Effective sample size with Geyer's initial monotone sequence, pooled over chains."""
    x = _as_chains(draws)
    m, n = x.shape
    if n < 4:
        raise ValueError("need at least 4 draws per chain")
    acov = _autocov(x)
    chain_var = acov[:, 0] * n / (n - 1)
    mean_var = np.mean(chain_var)
    var_plus = mean_var * (n - 1) / n
    if m > 1:
        var_plus += np.var(x.mean(axis=1), ddof=1)
    if not var_plus > 0:
        return 1.0
    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    tau_sum = 0.0
    prev = math.inf
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)
        tau_sum += pair
        prev = pair
    tau = -1.0 + 2.0 * tau_sum
    total = m * n
    return float(min(max(total / tau, 1.0), total)) if tau > 0 else float(total)


def diagnose(chains: list, names) -> Diagnostics:
    stack = np.stack([c.draws for c in chains])  # (chains, iters, params)
    k = stack.shape[2]
    rh = np.array([split_rhat(stack[:, :, j]) for j in range(k)])
    es = np.array([ess(stack[:, :, j]) for j in range(k)])
    return Diagnostics(names=list(names), rhat=rh, ess=es)


# --- HMC ---------------------------------------------------------------------------------

class _Integrator:
    def __init__(self, target):
        self.target = target
        self.n_grad = 0

    def logp_grad(self, q):
        self.n_grad += 1
        lp, g = self.target.logp_grad(q)
        if not np.isfinite(lp) or not np.all(np.isfinite(g)):
            return -math.inf, g
        return lp, g

    def trajectory(self, q, lp, g, p, eps, n_steps, inv_metric):
        """Leapfrog; returns (q, lp, g, p) or None if the path left the support."""
        p = p + 0.5 * eps * g
        for step in range(n_steps):
            q = q + eps * inv_metric * p
            lp, g = self.logp_grad(q)
            if not np.isfinite(lp):
                return None
            if step < n_steps - 1:
                p = p + eps * g
        p = p + 0.5 * eps * g
        return q, lp, g, p


def _hamiltonian(lp, p, inv_metric):
    return -lp + 0.5 * float(np.dot(p, inv_metric * p))


def _transition(integ, rng, q, lp, g, eps, n_steps, inv_metric):
    """One HMC transition; returns (q, lp, g, accept_stat, divergent)."""
    p0 = rng.standard_normal(q.shape[0]) / np.sqrt(inv_metric)
    h0 = _hamiltonian(lp, p0, inv_metric)
    out = integ.trajectory(q, lp, g, p0, eps, n_steps, inv_metric)
    u = rng.uniform()
    if out is None:
        return q, lp, g, 0.0, True
    q1, lp1, g1, p1 = out
    dh = _hamiltonian(lp1, p1, inv_metric) - h0
    if not np.isfinite(dh) or dh > DIVERGENCE_THRESHOLD:
        return q, lp, g, 0.0, True
    accept = 1.0 if dh <= 0 else math.exp(-dh)
    if u < accept:
        return q1, lp1, g1, accept, False
    return q, lp, g, accept, False


def find_initial_step(integ, rng, q, lp, g, inv_metric, target_accept, eps=1.0, max_tries=60):
    """Double or halve eps until the one-step acceptance crosses ``target_accept``."""
    def one_step_accept(e):
        p0 = rng.standard_normal(q.shape[0]) / np.sqrt(inv_metric)
        out = integ.trajectory(q, lp, g, p0, e, 1, inv_metric)
        if out is None:
            return 0.0
        dh = _hamiltonian(out[1], out[3], inv_metric) - _hamiltonian(lp, p0, inv_metric)
        if not np.isfinite(dh):
            return 0.0
        return 1.0 if dh <= 0 else math.exp(-dh)

    a = one_step_accept(eps)
    direction = 1.0 if a > target_accept else -1.0
    for _ in range(max_tries):
        eps_new = eps * 2.0 ** direction
        a = one_step_accept(eps_new)
        crossed = (a > target_accept) != (direction > 0)
        if crossed:
            return eps_new if direction < 0 else eps
        eps = eps_new
    return eps


class _DualAveraging:
    def __init__(self, eps0, target):
        self.mu = math.log(10.0 * eps0)
        self.target = target
        self.h_bar = 0.0
        self.log_eps_bar = 0.0
        self.t = 0

    def update(self, accept_stat):
        self.t += 1
        t = self.t
        w = 1.0 / (t + _T0)
        self.h_bar = (1 - w) * self.h_bar + w * (self.target - accept_stat)
        log_eps = self.mu - math.sqrt(t) / _GAMMA * self.h_bar
        eta = t ** (-_KAPPA)
        self.log_eps_bar = eta * log_eps + (1 - eta) * self.log_eps_bar
        return math.exp(log_eps)

    @property
    def final(self):
        return math.exp(self.log_eps_bar)


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(chain),)))


def run_chain(target, hmc: HmcConfig, chain: int) -> ChainOutput:
    rng = chain_rng(hmc.seed, chain)
    integ = _Integrator(target)
    q = np.asarray(target.init(rng), dtype=float)
    lp, g = integ.logp_grad(q)
    for _ in range(100):
        if np.isfinite(lp):
            break
        q = np.asarray(target.init(rng), dtype=float)
        lp, g = integ.logp_grad(q)
    else:
        raise SamplerError("could not find a finite starting point")

    dim = q.shape[0]
    inv_metric = np.ones(dim)
    W = hmc.warmup
    w1, w2 = W // 2, (3 * W) // 4
    L = hmc.leapfrog_steps

    eps = find_initial_step(integ, rng, q, lp, g, inv_metric, hmc.target_accept)
    da = _DualAveraging(eps, hmc.target_accept)
    window = []
    warm_div = 0
    for it in range(W):
        n_steps = int(rng.integers(1, L + 1))
        q, lp, g, a, div = _transition(integ, rng, q, lp, g, eps, n_steps, inv_metric)
        warm_div += div
        eps = da.update(a)
        if w1 <= it < w2:
            window.append(q)
        if it == w2 - 1 and len(window) >= 10:
            k = len(window)
            var = np.var(np.array(window), axis=0, ddof=1)
            inv_metric = (k / (k + 5.0)) * var + 1e-3 * (5.0 / (k + 5.0))
            eps = find_initial_step(integ, rng, q, lp, g, inv_metric, hmc.target_accept, eps=da.final)
            da = _DualAveraging(eps, hmc.target_accept)
    if warm_div > 0.9 * W:
        raise SamplerError(f"chain {chain}: {warm_div} of {W} warmup transitions diverged")
    eps = da.final

    rows = np.empty((hmc.iters, len(target.column_names)))
    n_acc = 0.0
    divergences = 0
    for it in range(hmc.iters):
        n_steps = int(rng.integers(1, L + 1))
        q, lp, g, a, div = _transition(integ, rng, q, lp, g, eps, n_steps, inv_metric)
        n_acc += a
        divergences += div
        rows[it] = target.constrained(q)
    return ChainOutput(
        draws=rows,
        accept_rate=n_acc / hmc.iters,
        divergences=divergences,
        step_size=eps,
        warmup_divergences=warm_div,
        inv_metric=inv_metric,
    )


def _n_threads(chains: int) -> int:
    try:
        k = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        k = 1
    return max(1, min(k, chains))


def sample(target, hmc: HmcConfig):
    """Run ``hmc.chains`` independent chains on a generic target.

    The target provides ``init(rng)``, ``logp_grad(q)``,
    ``constrained(q)`` and ``column_names``.
    """
    t0 = time.perf_counter()
    k = _n_threads(hmc.chains)
    if k == 1:
        chains = [run_chain(target, hmc, c) for c in range(hmc.chains)]
    else:
        with ThreadPoolExecutor(max_workers=k) as pool:
            chains = list(pool.map(lambda c: run_chain(target, hmc, c), range(hmc.chains)))
    diag = diagnose(chains, target.column_names) if hmc.chains > 1 or hmc.iters >= 4 else None
    log.info("sampled %d chains in %.1fs", hmc.chains, time.perf_counter() - t0)
    return chains, diag


def run(model, shape, chart, hmc: HmcConfig):
    """Sample a model over Stiefel coordinates; returns (chains, diagnostics)."""
    if getattr(model, "shape", shape) != shape:
        raise ValueError(f"model shape {model.shape} does not match {shape}")
    return sample(GivensPosterior(model, shape, chart), hmc)


def config_dict(hmc: HmcConfig) -> dict:
    return asdict(hmc)
