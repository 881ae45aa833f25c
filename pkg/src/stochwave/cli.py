"""Command line entry point: simulate / ensemble / analyze / verify.

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 runtime or storage error.  The worker count for ensemble execution comes
from the STOCHWAVE_WORKERS environment variable (default: serial).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    BlowupParams,
    blowup_functional_series,
    certificate,
    concavity_exponent,
    deficit_derivative_match,
    energy_deficit_series,
    lifespan_bound,
)
from .config import ConfigError, load_config, resolve_config
from .dynamics import STATUS_COMPLETED, energy_identity_residual, simulate_path
from .ensemble import (
    aggregate_records,
    estimate_blowup_probability,
    load_run_records,
    run_ensemble,
    sup_energy_estimate,
)
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochwave",
        description="Spectral Galerkin Monte Carlo simulator for stochastically "
        "forced wave equations with nonlinear damping and source terms.",
    )
    parser.add_argument("--version", action="version", version=f"stochwave {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a single path and write its trajectory CSV")
    p_sim.add_argument("config", help="path to the JSON run configuration")
    p_sim.add_argument("--seed", type=int, default=None, help="master seed (overrides the file)")
    p_sim.add_argument("--out", default="trajectory.csv", help="output CSV path")

    p_ens = sub.add_parser("ensemble", help="run a Monte Carlo ensemble into a run directory")
    p_ens.add_argument("config", help="path to the JSON run configuration")
    p_ens.add_argument("--paths", type=int, default=None, help="path count (overrides the file)")
    p_ens.add_argument("--seed", type=int, default=None, help="master seed (overrides the file)")
    p_ens.add_argument("--out", default="run", help="output run directory")

    p_ana = sub.add_parser("analyze", help="blow-up analysis of a persisted run directory")
    p_ana.add_argument("rundir", help="run directory produced by the ensemble command")
    p_ana.add_argument("--beta", type=float, default=None, help="certificate margin")
    p_ana.add_argument("--K", type=float, default=None, help="constant of the lifespan bound")
    p_ana.add_argument("--alpha", type=float, default=None, help="concavity exponent override")
    p_ana.add_argument("--mu", type=float, default=None, help="inner-product coupling override")

    p_ver = sub.add_parser("verify", help="run a module verification suite")
    p_ver.add_argument("--suite", required=True, help=f"one of: {', '.join(sorted(SUITES))}, all")
    p_ver.add_argument("--out", default=None, help="write the JSON report here as well")
    return parser


def _cmd_simulate(args) -> int:
    resolved = resolve_config(load_config(args.config), {"master_seed": args.seed})
    ens = resolved.ensemble
    rec = simulate_path(
        ens.base, ens.master_seed, path_index=0, record_stride=ens.record_stride
    )
    rec.to_csv(args.out)
    res = energy_identity_residual(rec)
    print(f"wrote {args.out} ({rec.t.size} rows, seed {ens.master_seed})")
    print(f"stop: {rec.stop.status} at t={rec.stop.time:g}")
    print(f"energy identity residual: max |residual| = {res.max_abs:.6e}")
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    resolved = resolve_config(
        load_config(args.config), {"paths": args.paths, "master_seed": args.seed}
    )
    ens = resolved.ensemble
    result = run_ensemble(ens, out_dir=args.out, config_payload=resolved.payload)
    phat, half = estimate_blowup_probability(result.stats, ens.base.T)
    sup = sup_energy_estimate(result.stats)
    print(f"wrote run directory {args.out} ({ens.paths} paths, seed {ens.master_seed})")
    print(f"blow-up probability estimate: {phat:.4f} +- {half:.4f} (95%)")
    if sup.n_used:
        print(
            f"mean sup energy over completed paths: {sup.value:.6e} +- {sup.stderr:.2e}"
            f" ({sup.n_used} used, {sup.n_excluded} excluded)"
        )
    else:
        print("mean sup energy: no completed paths")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    rundir = Path(args.rundir)
    cfg_path = rundir / "config.json"
    if not cfg_path.exists():
        raise ConfigError(f"run directory {rundir} has no config.json")
    payload = load_config(cfg_path)
    payload.pop("code_version", None)
    resolved = resolve_config(payload)
    base = resolved.ensemble.base
    ana = dict(resolved.analysis)
    if args.beta is not None:
        ana["beta"] = args.beta
    if args.K is not None:
        ana["K"] = args.K
    if args.alpha is not None:
        ana["alpha"] = args.alpha
    if args.mu is not None:
        ana["mu"] = args.mu

    records = load_run_records(rundir)
    stats = aggregate_records(records, base.dt, resolved.ensemble.record_stride)
    report: dict = {"run": str(rundir), "paths": stats.paths, "analysis_params": ana}

    try:
        cert = certificate(base, ana["beta"])
        report["certificate"] = {
            "satisfied": cert.satisfied,
            "initial_signed_energy": cert.e0,
            "noise_energy_total": cert.e1,
            "noise_energy_coarse_bound": cert.e1_coarse,
            "beta": cert.beta,
        }
    except ValueError as exc:
        report["certificate"] = {"error": str(exc)}

    p, q = base.exponents.p, base.exponents.q
    if p > q:
        alpha = ana["alpha"] if ana["alpha"] is not None else concavity_exponent(p, q)
        report["alpha"] = alpha
    else:
        alpha = None
        report["alpha"] = None
        report["alpha_note"] = f"blow-up analysis needs p > q; config has p={p}, q={q}"

    deficit = energy_deficit_series(stats, base.noise, base.basis)
    se = stats.ses["e_signed"]
    incr = np.diff(deficit.h)
    tol = 3.0 * (se[1:] + se[:-1]) + 1e-12
    report["deficit"] = {
        "h0": float(deficit.h[0]),
        "h_end": float(deficit.h[-1]),
        "nondecreasing_within_3se": bool(np.all(incr >= -tol)),
    }
    if stats.paths > 1:
        match = deficit_derivative_match(records, base.noise, base.basis)
        report["deficit"]["derivative_match_fraction"] = match.fraction_within

    _write_functionals_csv(rundir / "functionals.csv", deficit)
    report["series_file"] = "functionals.csv"

    t0_variants = {"from_L0": None, "from_initial_energy_magnitude": None}
    if alpha is not None:
        params = BlowupParams(alpha=alpha, mu=ana["mu"], beta=ana["beta"], K=ana["K"])
        lser = blowup_functional_series(stats, params, base.noise, base.basis)
        report["blowup_functional"] = {
            "applicable": lser.applicable,
            "reason": lser.reason,
            "start_positive": lser.start_positive,
            "nondecreasing_within_3se": lser.nondecreasing,
        }
        if ana["K"] is None:
            report["lifespan_note"] = (
                "K not supplied: the aggregated constant of the differential "
                "inequality is not computable from first principles, so no "
                "lifespan bound is reported"
            )
        else:
            if lser.applicable:
                t0_variants["from_L0"] = lifespan_bound(float(lser.values[0]), params)
            e0 = report["certificate"].get("initial_signed_energy")
            if e0 is not None:
                t0_variants["from_initial_energy_magnitude"] = lifespan_bound(abs(e0), params)
    report["lifespan_bound"] = t0_variants

    out_path = rundir / "analysis.json"
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")
    for key in ("certificate", "alpha", "deficit", "blowup_functional", "lifespan_bound"):
        if key in report:
            print(f"  {key}: {report[key]}")
    return EXIT_OK


def _write_functionals_csv(path, deficit) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# stochwave functionals v1\n")
        fh.write("t,noise_energy,h,dh_dt,mean_v_lq_q\n")
        n = deficit.t.size
        for j in range(n):
            dh = deficit.dh_dt[j] if j < n - 1 else float("nan")
            fh.write(
                ",".join(
                    repr(float(v))
                    for v in (deficit.t[j], deficit.noise_energy[j], deficit.h[j], dh, deficit.mean_v_lq_q[j])
                )
                + "\n"
            )


def _cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        print(f"unknown suite {unknown[0]!r}; available: {', '.join(sorted(SUITES))}, all", file=sys.stderr)
        return EXIT_CONFIG
    reports = [run_suite(n) for n in names]
    payload = reports[0] if len(reports) == 1 else {"suites": reports, "passed": all(r["passed"] for r in reports)}
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK if payload["passed"] else EXIT_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, matching the config-error code
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "ensemble":
            return _cmd_ensemble(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "verify":
            return _cmd_verify(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
