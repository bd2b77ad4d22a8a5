"""Acceptance suite: one PASS/FAIL line per criterion.

    pytest tests/test_acceptance.py -v
    python tests/test_acceptance.py

Each test prints its line (value, threshold, runtime) straight to the
terminal, then asserts.  Seeds are fixed.
"""

import json
import math
import sys
import time

import numpy as np
import pytest

from stiefel_givens import checks, oracle
from stiefel_givens.charts import ChartConfig
from stiefel_givens.cli import main
from stiefel_givens.givens import Shape, angle_indices
from stiefel_givens.models import eigenmodel_target, synth_network, uniform_stiefel_target
from stiefel_givens.sampler import HmcConfig, run


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail, seconds, limit):
        tag = "PASS" if ok and seconds < limit else "FAIL"
        with capsys.disabled():
            print(f"\n[{tag}] criterion {criterion}: {detail}; runtime {seconds:.1f}s (limit {limit:.0f}s)")
    return emit


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _check_results(results):
    worst = max(results, key=lambda r: r.value / r.threshold)
    return all(r.passed for r in results), worst


def test_1_roundtrip(report):
    results, sec = _timed(lambda: checks.roundtrip(seed=1, cases=1000, tol=1e-10))
    ok, worst = _check_results(results)
    report(1, ok, f"max |Y - Y(theta(Y))| = {max(r.value for r in results):.2e} <= 1e-10 "
                  "over 1000 Haar draws at (3,2),(5,3),(10,4)", sec, 10)
    assert ok and sec < 10


def test_2_measure_oracle(report):
    results, sec = _timed(lambda: checks.jacobian(seed=2, points=200, tol=1e-5))
    ok, _ = _check_results(results)
    report(2, ok, f"max |analytic - numeric log measure| = {max(r.value for r in results):.2e} <= 1e-5 "
                  "on 200 points at (3,1),(3,2),(5,3),(6,3)", sec, 60)
    assert ok and sec < 60


def test_3_gradients(report):
    results, sec = _timed(lambda: checks.gradient(seed=3, points=200))
    ok, _ = _check_results(results)
    detail = ", ".join(f"{r.name.split(':')[0]} {r.value:.3f}" for r in results)
    report(3, ok, f"FD error / max(1e-5*|g|, 1e-8) <= 1 for 200+ points per model ({detail})", sec, 60)
    assert ok and sec < 60


def _uniform_ks(n, p, seed):
    shape = Shape(n, p)
    hmc = HmcConfig(chains=4, iters=500, warmup=500, leapfrog_steps=64, seed=seed)
    chains, diag = run(uniform_stiefel_target(shape), shape, ChartConfig(), hmc)
    D = np.concatenate([c.draws for c in chains])
    ks = [oracle.ks_statistic(D[:, k], oracle.angle_marginal_cdf(a)).statistic
          for k, a in enumerate(angle_indices(shape))]
    y11 = D[:, diag.names.index("Y_1_1")]
    ref = oracle.haar_sample(shape, seed + 1000, size=y11.size)[:, 0, 0]
    return max(ks), oracle.ks_two_sample(y11, ref), D.shape[0]


def test_4_uniform_sampling(report):
    def body():
        return {s: _uniform_ks(*s, seed=4) for s in [(3, 2), (5, 2)]}

    res, sec = _timed(body)
    ok = all(k < 0.05 and k2 < 0.06 for k, k2, _ in res.values())
    detail = "; ".join(f"{s}: max angle KS {k:.3f} < 0.05, Y11 two-sample KS {k2:.3f} < 0.06 ({m} draws)"
                       for s, (k, k2, m) in res.items())
    report(4, ok, detail, sec, 300)
    assert ok and sec < 300


def test_5_table1(report):
    def body():
        out = {}
        for n, p in [(10, 1), (100, 1), (10, 10)]:
            shape = Shape(n, p)
            _, diag = run(uniform_stiefel_target(shape), shape, ChartConfig(), HmcConfig(seed=5))
            out[(p, n)] = diag.mean_over("Y_")
        return out

    res, sec = _timed(body)
    ok = all(rh <= 1.01 and es >= 300 for rh, es in res.values())
    detail = "; ".join(f"(p={p}, n={n}): mean R-hat {rh:.4f} <= 1.01, mean ESS {es:.0f} >= 300"
                       for (p, n), (rh, es) in res.items())
    report(5, ok, detail, sec, 600)
    assert ok and sec < 600


def _diag_and_draws(prefix):
    diag = json.load(open(f"{prefix}-diag.json"))
    with open(f"{prefix}-draws.csv") as fh:
        header = fh.readline().strip().split(",")
    return diag, header, np.loadtxt(f"{prefix}-draws.csv", delimiter=",", skiprows=1)


def test_6_ppca(report, tmp_path):
    pre = str(tmp_path / "ppca")
    argv = ["ppca", "--simulate", "--mirrored", "--seed", "0", "--iters", "1000", "--warmup", "1000",
            "--leapfrog-steps", "48", "--out-prefix", pre]
    rc, sec = _timed(lambda: main(argv))
    assert rc == 0
    diag, header, D = _diag_and_draws(pre)
    rhats = {k: v["rhat"] for k, v in diag["columns"].items()}
    worst = max(rhats, key=lambda k: rhats[k])
    sd13 = float(np.std(D[:, header.index("theta_1_3")]))
    max12 = float(np.max(np.abs(D[:, header.index("theta_1_2")])))
    ok = sd13 > 0.1 and max12 <= math.pi / 2 and rhats[worst] <= 1.01
    report(6, ok, f"sd(theta_1_3) {sd13:.3f} > 0.1; max |theta_1_2| {max12:.3f} <= pi/2; "
                  f"max R-hat {rhats[worst]:.4f} ({worst}) <= 1.01", sec, 180)
    assert ok and sec < 180


def test_7_eigenmodel(report, tmp_path):
    pre = str(tmp_path / "eig")
    argv = ["eigenmodel", "--synth", "30", "--p", "3", "--synth-c", "-0.5", "--synth-lambda", "24,-18,12",
            "--holdout", "0.2", "--seed", "0", "--out-prefix", pre]
    rc, sec = _timed(lambda: main(argv))
    assert rc == 0
    diag, _, _ = _diag_and_draws(pre)
    c = diag["columns"]["c"]
    held = diag["heldout"]

    net = synth_network(30, 3, 0, c=-0.5, Lambda=[24.0, -18.0, 12.0])
    model = eigenmodel_target(net, 3)
    rng = np.random.default_rng(7)
    U = oracle.haar_sample(Shape(30, 3), rng)
    lam, c0 = rng.normal(0, 5, 3), np.array([rng.normal()])
    perm_gap = 0.0
    for perm in ([1, 0, 2], [2, 0, 1], [2, 1, 0]):
        a = model.log_density(U, {"c": c0, "Lambda": lam})[0]
        b = model.log_density(U[:, perm], {"c": c0, "Lambda": lam[perm]})[0]
        perm_gap = max(perm_gap, abs(a - b))

    ok = (c["rhat"] <= 1.02 and c["ess"] >= 100
          and held["predictive_loglik"] > held["intercept_only_loglik"] and perm_gap == 0.0)
    report(7, ok, f"R-hat(c) {c['rhat']:.4f} <= 1.02, ESS(c) {c['ess']:.0f} >= 100; held-out loglik "
                  f"{held['predictive_loglik']:.2f} > intercept-only {held['intercept_only_loglik']:.2f} "
                  f"on {held['dyads']} dyads; Lambda/U permutation logp gap {perm_gap:.1e} == 0", sec, 600)
    assert ok and sec < 600


def test_8_scaling(report, tmp_path):
    out = tmp_path / "bench.csv"
    rc, sec = _timed(lambda: main(["bench", "--n-grid", "100,200", "--p-grid", "2,4,8", "--reps", "3",
                                   "--out", str(out)]))
    assert rc == 0
    rows = np.genfromtxt(out, delimiter=",", names=True, dtype=None, encoding=None)
    ops = {(int(r["n"]), int(r["p"])): int(r["ops"]) for r in rows}
    rn = ops[(200, 2)] / ops[(100, 2)]
    rp = ops[(100, 8)] / ops[(100, 4)]
    ok = 1.8 <= rn <= 2.5 and 3.2 <= rp <= 4.8
    report(8, ok, f"ops(n=200)/ops(n=100) at p=2 = {rn:.3f} in [1.8, 2.5]; "
                  f"ops(p=8)/ops(p=4) at n=100 = {rp:.3f} in [3.2, 4.8]", sec, 60)
    assert ok and sec < 60


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
