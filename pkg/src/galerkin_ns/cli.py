"""Command-line entry point: ``galerkin-ns <command> [--config FILE] [--key value ...]``.

Exit status: 0 when every gate passes, 2 when a gate fails, 1 on bad input.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

from . import __version__
from .config import COMMANDS, ConfigError, ExperimentConfig, coerce, config_hash, default_config, dumps, load, violations
from .dynamics import BlowUpError, GalerkinSystem, invariance_test, simulate
from .experiments import (bnorm_test, coefficient_check, conservation_check, contraction_test,
                          galerkin_convergence_test, moment_suite, series_shape_test, uniqueness_divergence_test)
from .io import write_contraction, write_curve, write_snapshot
from .lattice import enstrophy
from .measure import MeasureParams, sample_mu_nu
from .report import ExperimentReport, MetricRow

EXIT_OK, EXIT_INPUT, EXIT_GATE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="galerkin-ns", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="key = value file; flags override it")
    for f in fields(ExperimentConfig):
        if f.name != "command":
            parser.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, metavar=f.name.upper())
    return parser


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load(args.config, default_config()) if args.config else default_config()
    overrides = {f.name: coerce(f.name, getattr(args, f.name)) for f in fields(ExperimentConfig)
                 if f.name != "command" and getattr(args, f.name) is not None}
    return replace(cfg, command=args.command, **overrides)


def _stamp(report: ExperimentReport, cfg: ExperimentConfig) -> ExperimentReport:
    report.config_hash = config_hash(cfg)
    if report.seed is None:
        report.seed = cfg.seed
    return report


def run(cfg: ExperimentConfig, out: Path) -> ExperimentReport:
    """Execute one command, writing its artifacts under ``out``; returns the summary report."""
    v = cfg.floats()
    tag = f"config={config_hash(cfg)}"
    amp_units = "units: re, im are velocity amplitudes in the e_k basis"
    c = cfg.command
    if c == "sample":
        u = sample_mu_nu(MeasureParams(v["nu"], cfg.N, cfg.seed))
        write_snapshot(out / f"sample_N{cfg.N}_seed{cfg.seed}.csv", u, v["nu"], (tag, amp_units))
        report = ExperimentReport("sample")
        report.add(MetricRow("enstrophy of snapshot", enstrophy(u), 0.0, 0.0, 0.0, "min"))
        return report
    if c == "simulate":
        sys_ = GalerkinSystem(v["nu"], cfg.N)
        x0 = sample_mu_nu(MeasureParams(v["nu"], cfg.N, cfg.seed))
        traj = simulate(x0, sys_, v["T"], v["dt"], cfg.seed, mode=cfg.mode, stride=cfg.stride, r=v["r"])
        traj.write_csv(out / f"trajectory_N{cfg.N}_seed{cfg.seed}.csv", tag)
        write_snapshot(out / f"final_N{cfg.N}_seed{cfg.seed}.csv", traj.states[-1], v["nu"],
                       (tag, amp_units, f"t={v['T']!r}"))
        report = ExperimentReport("simulate")
        report.add(MetricRow("final enstrophy", float(traj.observables["enstrophy"][-1]), 0.0, 0.0, 0.0, "min"))
        return report
    if c == "check-coefficients":
        return coefficient_check(cfg.N)
    if c == "check-conservation":
        return conservation_check(v["nu"], (cfg.N,), cfg.M, cfg.seed)
    if c == "moment-test":
        return moment_suite(v["nu"], cfg.N, cfg.M, cfg.seed, ns=tuple(range(1, cfg.n + 1)))
    if c == "bnorm-test":
        report = bnorm_test(v["nu"], cfg.N, cfg.M, v["r"], cfg.seed)
        report.extend(galerkin_convergence_test(v["nu"], cfg.M, v["r"], cfg.seed))
        return report
    if c == "series-bound":
        return series_shape_test(cfg.kmax, cfg.R)
    if c == "invariance-test":
        return invariance_test(GalerkinSystem(v["nu"], cfg.N), v["T"], v["dt"], cfg.M, cfg.seed, cfg.mode,
                               r=v["r"])
    if c == "contraction-test":
        report, rep = contraction_test(v["nu"], cfg.N, cfg.besov, cfg.seed, cfg.probes)
        write_contraction(out / "contraction.csv", [rep],
                          (tag, "units: T, T_star in time units; C1, C2, N_T, measured_factor dimensionless"))
        return report
    if c == "uniqueness-divergence":
        report, curves = uniqueness_divergence_test(v["nu"], v["T"], v["dt"], cfg.besov,
                                                    range(cfg.seed, cfg.seed + cfg.seeds), stride=cfg.stride,
                                                    required=math.ceil(0.8 * cfg.seeds))
        for cv in curves:
            write_curve(out / f"divergence_N{cv.N1}_N{cv.N2}_seed{cv.seed}.csv", cv.times, cv.distance,
                        (tag, f"N1={cv.N1} N2={cv.N2} seed={cv.seed} nu={v['nu']!r} dt={v['dt']!r}",
                         f"units: t in time units; distance in the B^-{v['s']:.6g}_({v['p']:g},{v['q']:g}) norm"))
        return report
    if c == "report":
        return ExperimentReport.read(cfg.input)
    raise ConfigError(f"unknown command {c!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    problems = violations(cfg)
    out = Path(cfg.output_dir)
    if not out.is_dir():
        problems.append(f"output directory {str(out)!r} exists")
    if problems:
        print("error: invalid configuration, violated:", file=sys.stderr)
        for p in problems:
            print(f"  - {p}", file=sys.stderr)
        return EXIT_INPUT
    start = time.perf_counter()
    try:
        report = run(cfg, out)
    except BlowUpError as exc:
        print(f"gate failure: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.command != "report":
        _stamp(report, cfg)
        (out / "config.txt").write_text(dumps(cfg), encoding="utf-8")
        report.write(out / f"{cfg.command}_report.csv")
    print(report.summary())
    print(f"({time.perf_counter() - start:.1f} s)")
    return EXIT_OK if report.passed else EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
