"""Command-line entry point: ``stiefel-givens <command> ...``.

Every sampling command writes three files next to ``--out-prefix``:

``<prefix>-draws.csv``
    columns ``chain, iter``, the angles ``theta_i_j``, the matrix entries
    row-major, then auxiliary parameters in declaration order.
``<prefix>-diag.json``
    split R-hat and ESS per column, per-chain acceptance and divergences,
    wall time.
``<prefix>-manifest.json``
    the argument vector, the resolved configuration, seed, version and
    timestamps.  ``stiefel-givens replay`` re-runs it.

Exit codes: 0 success, 1 bad input, 2 I/O failure, 3 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__, checks
from ._backend import BACKEND, kernels
from .charts import ChartConfig
from .data import holdout_mask, read_network, read_observations, write_observations
from .givens import DomainError, Shape
from .models import (
    PpcaData,
    eigenmodel_target,
    heldout_dyads,
    intercept_only_loglik,
    ppca_target,
    predictive_loglik,
    simulate_ppca,
    synth_network,
    uniform_stiefel_target,
)
from .sampler import HmcConfig, SamplerError, run

log = logging.getLogger("stiefel_givens")

EXIT_OK, EXIT_USER, EXIT_IO, EXIT_CHECK = 0, 1, 2, 3

BENCH_COLUMNS = ("n", "p", "d", "ops", "rep", "backend", "seconds")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument wiring ---------------------------------------------------------------

def _add_sampler(sp):
    d = HmcConfig()
    g = sp.add_argument_group("sampler")
    g.add_argument("--chains", type=int, default=d.chains)
    g.add_argument("--iters", type=int, default=d.iters, help="post-warmup draws per chain")
    g.add_argument("--warmup", type=int, default=d.warmup)
    g.add_argument("--target-accept", type=float, default=d.target_accept)
    g.add_argument("--leapfrog-steps", type=int, default=d.leapfrog_steps,
                   help="maximum path length; each transition draws L uniformly from 1..this")
    g.add_argument("--seed", type=int, default=d.seed)


def _add_chart(sp, mirrored: bool):
    d = ChartConfig()
    g = sp.add_argument_group("chart")
    g.add_argument("--epsilon", type=float, default=d.epsilon,
                   help="half-circle angles live in (-pi/2 + eps, pi/2 - eps)")
    g.add_argument("--r-sd", type=float, default=d.r_sd, help="sd of the radius prior for full-circle angles")
    g.add_argument("--mirrored", action=argparse.BooleanOptionalAction, default=mirrored,
                   help="fold each column into a half-space (removes sign-flip modes)")


def _add_out(sp):
    sp.add_argument("--out-prefix", required=True, help="path prefix for the output files")
    sp.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stiefel-givens", description="HMC over orthonormal-column matrices in Givens angles.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    u = sub.add_parser("uniform", help="sample the uniform distribution on n x p frames")
    u.add_argument("--n", type=int, required=True)
    u.add_argument("--p", type=int, required=True)
    _add_sampler(u)
    _add_chart(u, mirrored=False)
    _add_out(u)

    pp = sub.add_parser("ppca", help="probabilistic PCA")
    src = pp.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV, one observation per row, optional header")
    src.add_argument("--simulate", action="store_true",
                     help="simulate n=3, N rows from W = I, Lambda = diag(2, 1), sigma2 = 1")
    pp.add_argument("--p", type=int, default=2)
    pp.add_argument("--sim-rows", type=int, default=15, help="N for --simulate")
    pp.add_argument("--data-seed", type=int, default=None, help="seed for --simulate (default: --seed)")
    _add_sampler(pp)
    _add_chart(pp, mirrored=True)
    _add_out(pp)

    em = sub.add_parser("eigenmodel", help="probit network eigenmodel")
    src = em.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="CSV: dense 0/1 adjacency, or a two-column edge list")
    src.add_argument("--synth", type=int, metavar="N_NODES", help="simulate a graph from the model")
    em.add_argument("--p", type=int, default=3)
    em.add_argument("--ordered-lambda", action="store_true", help="constrain Lambda to be decreasing")
    em.add_argument("--holdout", type=float, default=0.0,
                    help="fraction of dyads hidden from the likelihood and scored afterwards")
    em.add_argument("--synth-c", type=float, default=None, help="generating intercept (default: prior draw)")
    em.add_argument("--synth-lambda", default=None,
                    help="comma-separated generating Lambda (default: prior draw)")
    em.add_argument("--data-seed", type=int, default=None,
                    help="seed for --synth and the holdout mask (default: --seed)")
    _add_sampler(em)
    _add_chart(em, mirrored=False)
    _add_out(em)

    ck = sub.add_parser("check", help="run the oracle batteries")
    ck.add_argument("suite", nargs="?", default="all", choices=checks.SUITES + ("all",))
    ck.add_argument("--strict", action="store_true", help="rerun with a fresh random seed as well")
    ck.add_argument("--seed", type=int, default=0)
    ck.add_argument("--json", dest="json_path", default=None, help="write the JSON report here")

    b = sub.add_parser("bench", help="operation counts and timings of the forward map")
    b.add_argument("--n-grid", default="50,100,200,400")
    b.add_argument("--p-grid", default="1,2,4,8")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--out", default="-", help="CSV path, '-' for stdout")

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out-prefix", required=True)
    return ap


def _int_list(text, flag):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise UsageError(f"{flag}: values must be positive integers")
    return vals


# --- output ------------------------------------------------------------------------

def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _check_prefix(prefix):
    folder = os.path.dirname(os.path.abspath(prefix))
    if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
        raise OSError(f"cannot write to {folder}")


def write_draws(path, names, chains):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "iter", *names])
        for c, ch in enumerate(chains):
            for it, row in enumerate(ch.draws):
                w.writerow([c, it, *map(repr, row.tolist())])


def diag_summary(diag, matrix_name):
    if diag is None:
        return {}
    rh, es = diag.mean_over(f"{matrix_name}_")
    return {
        "mean_rhat_matrix": _finite_or_none(rh),
        "mean_ess_matrix": _finite_or_none(es),
        "max_rhat": _finite_or_none(np.max(diag.rhat)),
        "min_ess": _finite_or_none(np.min(diag.ess)),
    }


def diag_dict(diag, chains, wall, matrix_name, extra=None):
    out = {
        "columns": {} if diag is None else {
            nm: {"rhat": _finite_or_none(r), "ess": _finite_or_none(e)}
            for nm, r, e in zip(diag.names, diag.rhat, diag.ess)
        },
        "summary": diag_summary(diag, matrix_name),
        "chains": [
            {"accept_rate": ch.accept_rate, "divergences": ch.divergences,
             "warmup_divergences": ch.warmup_divergences, "step_size": ch.step_size}
            for ch in chains
        ],
        "divergences": int(sum(ch.divergences for ch in chains)),
        "wall_time_s": wall,
    }
    if extra:
        out.update(extra)
    return out


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _sample_and_write(args, argv, model, shape, extra_manifest=None, extra_diag=None, post=None):
    hmc = HmcConfig(chains=args.chains, iters=args.iters, warmup=args.warmup,
                    target_accept=args.target_accept, leapfrog_steps=args.leapfrog_steps, seed=args.seed)
    chart = ChartConfig(epsilon=args.epsilon, r_sd=args.r_sd, mirrored=args.mirrored)
    _check_prefix(args.out_prefix)
    started = _now()
    t0 = time.perf_counter()
    chains, diag = run(model, shape, chart, hmc)
    wall = time.perf_counter() - t0
    names = diag.names if diag is not None else None
    if names is None:
        from .diff import GivensPosterior

        names = GivensPosterior(model, shape, chart).column_names
    extra_diag = dict(extra_diag or {})
    if post is not None:
        extra_diag.update(post(chains, names))

    prefix = args.out_prefix
    files = {k: f"{prefix}-{k}.{ext}" for k, ext in (("draws", "csv"), ("diag", "json"), ("manifest", "json"))}
    write_draws(files["draws"], names, chains)
    dd = diag_dict(diag, chains, wall, model.matrix_name, extra_diag)
    _write_json(files["diag"], dd)
    config = {k: v for k, v in vars(args).items() if k not in ("out_prefix", "verbose")}
    manifest = {
        "command": args.command,
        "argv": argv,
        "config": config,
        "hmc": dataclasses.asdict(hmc),
        "chart": dataclasses.asdict(chart),
        "seed": args.seed,
        "version": __version__,
        "backend": BACKEND,
        "started": started,
        "finished": _now(),
        "diagnostics": dd["summary"],
        "files": files,
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    _write_json(files["manifest"], manifest)
    s = dd["summary"]
    if s:
        print(f"{args.command}: {len(chains)} chains x {hmc.iters} draws in {wall:.1f}s; "
              f"mean R-hat({model.matrix_name}) {s['mean_rhat_matrix']}, max R-hat {s['max_rhat']}, "
              f"divergences {dd['divergences']}; wrote {files['draws']}")
    return EXIT_OK


# --- commands ----------------------------------------------------------------------

def cmd_uniform(args, argv):
    shape = Shape(args.n, args.p)
    return _sample_and_write(args, argv, uniform_stiefel_target(shape), shape)


def cmd_ppca(args, argv):
    extra = {}
    if args.simulate:
        if args.sim_rows < 2:
            raise DomainError("--sim-rows must be at least 2")
        seed = args.seed if args.data_seed is None else args.data_seed
        X = simulate_ppca(args.sim_rows, np.eye(3, 2), [2.0, 1.0], 1.0, seed)
        _check_prefix(args.out_prefix)
        data_path = f"{args.out_prefix}-data.csv"
        write_observations(data_path, X)
        data = PpcaData.from_observations(X)
        extra["data"] = {"simulated": True, "path": data_path, "rows": args.sim_rows, "seed": seed}
    else:
        data = read_observations(args.data)
        extra["data"] = {"simulated": False, "path": args.data, "rows": data.N}
    if not 1 <= args.p <= data.n:
        raise DomainError(f"need 1 <= p <= {data.n} (columns of the data), got p = {args.p}")
    model = ppca_target(data, args.p)
    return _sample_and_write(args, argv, model, model.shape, extra_manifest=extra)


def cmd_eigenmodel(args, argv):
    seed = args.seed if args.data_seed is None else args.data_seed
    extra = {}
    if args.synth is not None:
        lam = None
        if args.synth_lambda is not None:
            try:
                lam = [float(t) for t in args.synth_lambda.split(",")]
            except ValueError:
                raise UsageError("--synth-lambda: expected comma-separated numbers") from None
            if len(lam) != args.p:
                raise UsageError(f"--synth-lambda needs {args.p} values, got {len(lam)}")
        net = synth_network(args.synth, args.p, seed, c=args.synth_c, Lambda=lam)
        _check_prefix(args.out_prefix)
        graph_path = f"{args.out_prefix}-graph.csv"
        with open(graph_path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(net.adjacency.astype(int).tolist())
        extra["data"] = {"synthetic": True, "path": graph_path, "seed": seed,
                         "truth": {"c": float(net.truth["c"]), "Lambda": np.asarray(net.truth["Lambda"]).tolist()}}
    else:
        net = read_network(args.graph)
        extra["data"] = {"synthetic": False, "path": args.graph}
    n = net.n_nodes
    if not 1 <= args.p <= n:
        raise DomainError(f"need 1 <= p <= {n} (nodes), got p = {args.p}")
    mask = None
    post = None
    if args.holdout > 0:
        mask = holdout_mask(n, args.holdout, np.random.default_rng(np.random.SeedSequence([seed, 1])))
        rows, cols = heldout_dyads(mask)

        def post(chains, names):
            D = np.concatenate([ch.draws for ch in chains])
            ui = [names.index(f"U_{r + 1}_{c + 1}") for r in range(n) for c in range(args.p)]
            li = [names.index(nm) for nm in model.aux[1].names()]
            U = D[:, ui].reshape(-1, n, args.p)
            return {"heldout": {
                "dyads": int(rows.size),
                "predictive_loglik": predictive_loglik(net, rows, cols, U, D[:, li], D[:, names.index("c")]),
                "intercept_only_loglik": intercept_only_loglik(net, mask, rows, cols),
            }}

    model = eigenmodel_target(net, args.p, mask=mask, ordered_lambda=args.ordered_lambda)
    return _sample_and_write(args, argv, model, model.shape, extra_manifest=extra, post=post)


def cmd_check(args, argv):
    seeds = [args.seed]
    if args.strict:
        seeds.append(int(np.random.SeedSequence().entropy % (2**32)))
    results = []
    for s in seeds:
        for r in checks.run_suite(args.suite, seed=s):
            print(r.line() + (f"  seed={s}" if args.strict else ""))
            results.append({**r.to_dict(), "seed": s})
    ok = all(r["passed"] for r in results)
    print(f"{sum(r['passed'] for r in results)}/{len(results)} checks passed")
    if args.json_path:
        _write_json(args.json_path, {"suite": args.suite, "seeds": seeds, "passed": ok, "results": results})
    return EXIT_OK if ok else EXIT_CHECK


def bench_rows(n_grid, p_grid, reps):
    for n in n_grid:
        for p in p_grid:
            if p > n:
                continue
            shape = Shape(n, p)
            theta = np.linspace(-1.0, 1.0, shape.d)
            _, ops = kernels.forward(theta, n, p)  # also warms up the JIT
            for rep in range(reps):
                t0 = time.perf_counter()
                kernels.forward(theta, n, p)
                yield (n, p, shape.d, int(ops), rep, BACKEND, time.perf_counter() - t0)


def cmd_bench(args, argv):
    if args.reps < 0:
        raise UsageError("--reps must be >= 0")
    n_grid = _int_list(args.n_grid, "--n-grid")
    p_grid = _int_list(args.p_grid, "--p-grid")
    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        for row in bench_rows(n_grid, p_grid, args.reps):
            w.writerow([*row[:6], f"{row[6]:.9f}"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_replay(args, argv):
    with open(args.manifest) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.manifest}: not a manifest ({exc})") from None
    old = manifest.get("argv")
    if not isinstance(old, list) or not old:
        raise UsageError(f"{args.manifest}: no argv recorded")
    return main(list(old) + ["--out-prefix", args.out_prefix])


COMMANDS = {
    "uniform": cmd_uniform,
    "ppca": cmd_ppca,
    "eigenmodel": cmd_eigenmodel,
    "check": cmd_check,
    "bench": cmd_bench,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except (UsageError, DomainError, SamplerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
