"""Command-line front end: validate problems, run solvers, emit CSV/JSON
artifacts (and figures with --plot)."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import corpus as corpus_mod
from . import discrete_engine as de
from . import laplace_toolkit as lt
from . import volterra_engine as ve
from .config import ConfigError, load_problem
from .constants import (
    NoSpectralPointError,
    spectral_continuous,
    spectral_discrete,
)
from .model import (
    ContinuousProblem,
    DiscreteProblem,
    ModelError,
    NegativeWeightError,
    validate_continuous,
    validate_discrete,
)

__all__ = ["main"]

SCHEMA = 1
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _write_summary(outdir: Path, stem: str, payload: dict) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {"schema": SCHEMA, **payload}
    path = outdir / f"{stem}.summary.json"
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(outdir: Path, stem: str, header: list, rows) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{stem}.trace.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def _discrete_rows(tr, res):
    for n in range(1, tr.N + 1):
        yield (n, float(tr.x_tilde[n]), float(tr.y[n]), float(res[n]))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    p = load_problem(args.config)
    stem = Path(args.config).stem
    if isinstance(p, DiscreteProblem):
        report = validate_discrete(p, args.z)
    else:
        report = validate_continuous(p, z=args.z[0], tau=args.tau, horizon=args.horizon)
    _write_summary(Path(args.out), stem, {
        "command": "validate",
        "input": str(args.config),
        **report.as_dict(),
    })
    for c in report.checks:
        print(f"({c.condition}) {c.status}: {c.detail}")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _solve_discrete_pipeline(p: DiscreteProblem, N: int, mode: str, tol: float):
    sc = spectral_discrete(p)
    tr = de.solve(p, sc, N, mode=mode)
    res = de.residual(tr, tr.problem.a)
    horizon = de.positivity_horizon(tr)
    est = None
    cert = None
    if horizon is not None:
        est = de.estimate_C(tr, tol=tol)
        cert = de.bound_certificate(tr.problem, tr, sc.gamma)
    return sc, tr, res, horizon, est, cert


def _discrete_summary(command, sc, tr, res, horizon, est, cert, N, mode) -> dict:
    return {
        "command": command,
        "q": sc.q,
        "gamma": sc.gamma,
        "mu": sc.mu,
        "error_bound": sc.series_error_bound,
        "N": N,
        "mode": tr.arithmetic_mode,
        "positivity_horizon": horizon,
        "C_hat": None if est is None else est.C_hat,
        "status": "no_positivity_horizon" if est is None else est.status,
        "dispersion": None if est is None else est.dispersion,
        "product_upper": None if cert is None else cert.product_upper,
        "certificate_status": None if cert is None else cert.status,
        "residual_tail_max": de.residual_tail_max(res),
    }


def _cmd_solve_discrete(args, command="solve-discrete") -> int:
    p = load_problem(args.config)
    if not isinstance(p, DiscreteProblem):
        raise ConfigError(f"{command} needs a discrete problem file")
    stem = Path(args.config).stem
    outdir = Path(args.out)
    sc, tr, res, horizon, est, cert = _solve_discrete_pipeline(
        p, args.n, args.mode, args.tol)
    _write_csv(outdir, stem, ["n", "x_tilde", "y", "residual"], _discrete_rows(tr, res))
    _write_summary(outdir, stem, _discrete_summary(
        command, sc, tr, res, horizon, est, cert, args.n, args.mode))
    if args.plot:
        from . import plots
        plots.plot_discrete_trace(tr, outdir / f"{stem}.trace.png",
                                  C_hat=None if est is None else est.C_hat)
    if est is not None:
        print(f"q = {sc.q:.12g}, gamma = {sc.gamma:.12g}, "
              f"C_hat = {est.C_hat:.12g} ({est.status})")
    else:
        print(f"q = {sc.q:.12g}, gamma = {sc.gamma:.12g}, positivity horizon absent")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    return _cmd_solve_discrete(args, command="estimate")


def _cmd_solve_volterra(args) -> int:
    p = load_problem(args.config)
    if not isinstance(p, ContinuousProblem):
        raise ConfigError("solve-volterra needs a continuous problem file")
    stem = Path(args.config).stem
    outdir = Path(args.out)
    grid = ve.QuadratureGrid(args.h, args.t)
    sc = spectral_continuous(p)
    tr = ve.solve_volterra(p, grid)
    lo = args.fit_from if args.fit_from is not None else grid.T / 2
    gamma_hat, C_hat, r2 = ve.fit_exponent(tr, (lo, grid.T))
    inf_H, sup_H = ve.check_bounds(tr, sc.gamma)
    t = grid.nodes
    _write_csv(outdir, stem, ["t", "g", "H"],
               ((float(t[i]), float(tr.g[i]), float(tr.H[i]))
                for i in range(grid.M + 1)))
    _write_summary(outdir, stem, {
        "command": "solve-volterra",
        "gamma": sc.gamma,
        "gamma_hat": gamma_hat,
        "C_hat": C_hat,
        "r2": r2,
        "inf_H": inf_H,
        "sup_H": sup_H,
        "monotone": tr.monotone_decreasing,
        "h": grid.h,
        "T": grid.T,
    })
    if args.plot:
        from . import plots
        plots.plot_continuous_trace(tr, outdir / f"{stem}.trace.png")
    print(f"gamma = {sc.gamma:.12g}, gamma_hat = {gamma_hat:.6g} (r2 = {r2:.6f}), "
          f"tail band = [{inf_H:.6g}, {sup_H:.6g}]")
    return EXIT_OK


def _cmd_laplace(args) -> int:
    p = load_problem(args.config)
    if not isinstance(p, ContinuousProblem):
        raise ConfigError("laplace needs a continuous problem file")
    stem = Path(args.config).stem
    outdir = Path(args.out)
    grid = ve.QuadratureGrid(args.h, args.t)
    tr = ve.solve_volterra(p, grid)
    sc = spectral_continuous(p)
    sample = lt.transform_samples(p, args.s, g_trace=tr)
    gaps = []
    for i, s in enumerate(sample.s_values):
        ref, bound = lt.trace_transform(tr, s)
        gap = abs(sample.G[i] - ref) / max(abs(ref), 1e-300)
        gaps.append({"s": s, "G": sample.G[i], "G_trace": ref,
                     "rel_gap": gap, "bound": sample.tail_bounds[i] + bound})
    s0 = 1e-3
    sL = s0 * lt.compute_L(p, s0)
    _write_csv(outdir, stem, ["s", "A", "B", "R", "L", "Rstar", "G"],
               sample.rows())
    _write_summary(outdir, stem, {
        "command": "laplace",
        "gamma": sc.gamma,
        "s_values": list(sample.s_values),
        "G_vs_trace": gaps,
        "sL_at_1e-3": sL,
        "sL_target": -(sc.gamma + 1.0),
    })
    if args.plot:
        from . import plots
        plots.plot_transform_ladder(sample, outdir / f"{stem}.transforms.png")
    worst = max(g["rel_gap"] for g in gaps)
    print(f"G vs trace transform: worst relative gap = {worst:.3e}; "
          f"s L(s) at 1e-3 = {sL:.6g} (target {-(sc.gamma + 1.0):.6g})")
    return EXIT_OK


def _cmd_tauberian(args) -> int:
    p = load_problem(args.config)
    if not isinstance(p, ContinuousProblem):
        raise ConfigError("tauberian needs a continuous problem file")
    stem = Path(args.config).stem
    outdir = Path(args.out)
    grid = ve.QuadratureGrid(args.h, args.t)
    tr = ve.solve_volterra(p, grid)
    sc = spectral_continuous(p)
    rep = lt.tauberian_check(tr, sc.gamma)
    _write_summary(outdir, stem, {
        "command": "tauberian",
        "k": rep.k,
        "gamma": rep.gamma,
        "rho": rep.rho,
        "s_ladder": list(rep.s_ladder),
        "K_ladder": list(rep.K_estimates),
        "x_ladder": list(rep.x_ladder),
        "U_ratio_ladder": list(rep.U_ratios),
        "K_limit": rep.K_limit,
        "U_limit": rep.U_limit,
        "slow_osc_pass": rep.slow_osc_pass,
        "verdict": rep.verdict,
    })
    if args.plot:
        from . import plots
        plots.plot_tauberian(rep, outdir / f"{stem}.tauberian.png")
    print(f"k = {rep.k}, K ladder -> {rep.K_limit:.6g}, "
          f"U ladder -> {rep.U_limit:.6g}, verdict = {rep.verdict}")
    return EXIT_OK


def _cmd_corpus(args) -> int:
    if args.corpus_cmd == "list":
        for name in corpus_mod.catalog():
            entry = corpus_mod.builtin(name)
            print(f"{entry.name} [{entry.kind}]"
                  + (f" -- {entry.note}" if entry.note else ""))
            for fact in entry.expected:
                print(f"    {fact.name} ({fact.op}, {fact.provenance}): {fact.expected}")
        return EXIT_OK

    names = [args.name] if args.name else corpus_mod.catalog()
    outdir = Path(args.out)
    all_ok = True
    for name in names:
        entry, results, artifacts = corpus_mod.run_entry(
            name, N=args.n, h=args.h, T=args.t)
        ok = all(r.passed for r in results)
        all_ok = all_ok and ok
        _write_summary(outdir, name, {
            "command": "corpus-run",
            "entry": name,
            "kind": entry.kind,
            "passed": ok,
            "facts": [{
                "name": r.fact.name,
                "op": r.fact.op,
                "provenance": r.fact.provenance,
                "expected": r.fact.expected,
                "observed": r.observed,
                "passed": r.passed,
            } for r in results],
        })
        tr = artifacts.get("trace")
        if tr is not None and isinstance(tr, de.SolutionTrace):
            res = artifacts.get("residual")
            if res is None:
                res = np.zeros(tr.N + 1)
            _write_csv(outdir, name, ["n", "x_tilde", "y", "residual"],
                       _discrete_rows(tr, res))
            if args.plot:
                from . import plots
                plots.plot_discrete_trace(tr, outdir / f"{name}.trace.png")
        elif tr is not None:
            t = tr.grid.nodes
            _write_csv(outdir, name, ["t", "g", "H"],
                       ((float(t[i]), float(tr.g[i]), float(tr.H[i]))
                        for i in range(tr.grid.M + 1)))
            if args.plot:
                from . import plots
                plots.plot_continuous_trace(tr, outdir / f"{name}.trace.png")
        for r in results:
            mark = "ok" if r.passed else "FAIL"
            print(f"[{name}] {r.fact.name}: {mark} ({r.observed})")
    return EXIT_OK if all_ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    ap = _Parser(prog="renewal-asym",
                 description="Renewal-recursion and Volterra-equation asymptotics toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, plot=True):
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        if plot:
            sp.add_argument("--plot", action="store_true",
                            help="render figures next to the CSV output")

    sp = sub.add_parser("validate", help="check the hypothesis conditions of a problem file")
    sp.add_argument("config")
    sp.add_argument("--z", type=float, nargs="+", default=[1.1, 1.25, 1.5, 2.0, 3.0],
                    help="candidate z grid (discrete: scanned; continuous: first entry)")
    sp.add_argument("--tau", type=float, default=0.5, help="span for the upper sums")
    sp.add_argument("--horizon", type=float, default=60.0,
                    help="horizon for sampled continuous checks")
    common(sp, plot=False)
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("solve-discrete", help="iterate the normalized recursion")
    sp.add_argument("config")
    sp.add_argument("--n", type=int, required=True, help="horizon N")
    sp.add_argument("--mode", choices=["float", "exact"], default="float")
    sp.add_argument("--tol", type=float, default=0.02, help="convergence tolerance")
    common(sp)
    sp.set_defaults(func=_cmd_solve_discrete)

    sp = sub.add_parser("estimate", help="solve and estimate the limit constant")
    sp.add_argument("config")
    sp.add_argument("--n", type=int, default=10000, help="horizon N (default 10000)")
    sp.add_argument("--mode", choices=["float", "exact"], default="float")
    sp.add_argument("--tol", type=float, default=0.02, help="convergence tolerance")
    common(sp)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("solve-volterra", help="solve the integral equation on a uniform grid")
    sp.add_argument("config")
    sp.add_argument("--h", type=float, required=True, help="grid step")
    sp.add_argument("--t", type=float, required=True, help="horizon T")
    sp.add_argument("--fit-from", type=float, default=None,
                    help="left end of the exponent-fit window (default T/2)")
    common(sp)
    sp.set_defaults(func=_cmd_solve_volterra)

    sp = sub.add_parser("laplace", help="transform pipeline and trace cross-check")
    sp.add_argument("config")
    sp.add_argument("--h", type=float, default=0.02, help="grid step for the trace")
    sp.add_argument("--t", type=float, default=200.0, help="trace horizon")
    sp.add_argument("--s", type=float, nargs="+", default=[0.5, 1.0, 2.0],
                    help="s ladder for the transform table")
    common(sp)
    sp.set_defaults(func=_cmd_laplace)

    sp = sub.add_parser("tauberian", help="small-s / large-x ladder consistency report")
    sp.add_argument("config")
    sp.add_argument("--h", type=float, default=0.01, help="grid step for the trace")
    sp.add_argument("--t", type=float, default=400.0, help="trace horizon")
    common(sp)
    sp.set_defaults(func=_cmd_tauberian)

    sp = sub.add_parser("corpus", help="built-in problems with known answers")
    csub = sp.add_subparsers(dest="corpus_cmd", required=True)
    lp = csub.add_parser("list", help="print the catalog")
    lp.set_defaults(func=_cmd_corpus)
    rp = csub.add_parser("run", help="run one entry (or all) and check expected facts")
    rp.add_argument("name", nargs="?", default=None)
    rp.add_argument("--n", type=int, default=None, help="override discrete horizon")
    rp.add_argument("--h", type=float, default=None, help="override grid step")
    rp.add_argument("--t", type=float, default=None, help="override horizon T")
    common(rp)
    rp.set_defaults(func=_cmd_corpus)

    return ap


def _error_summary(args, kind: str, message: str):
    """Best effort: even failed runs leave a machine-readable summary."""
    config = getattr(args, "config", None)
    out = getattr(args, "out", None)
    if config is None or out is None:
        return
    try:
        _write_summary(Path(out), Path(config).stem, {
            "command": getattr(args, "command", "?"),
            "status": kind,
            "error": message,
        })
    except OSError:
        pass


def main(argv: Optional[list] = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        _error_summary(args, "invalid_input", str(e))
        return EXIT_VALIDATION
    except (NegativeWeightError, NoSpectralPointError, de.NumericOverflowError,
            ModelError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        _error_summary(args, "numeric_failure", str(e))
        return EXIT_NUMERIC
    except KeyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
