"""Command-line entry point tying bounds, orbits, regions, and traces together.

    ergobound bound  --config exp.toml [--out DIR] [--degree N]... [--jobs K]
    ergobound orbit  --config exp.toml [--out DIR]
    ergobound region --config exp.toml [--out DIR]
    ergobound trace  --config exp.toml [--out DIR]
    ergobound verify CERT.json [CERT.json ...]

Exit codes: 0 on success, 1 on mathematical failure (invalid certificate,
solver or shooting non-convergence), 2 on usage or I/O errors. All outputs
are deterministic for a fixed config: file data carries 17 significant
digits, summary tables 7.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .certify import gap_report, region_grid, residual_trace
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import (OrbitError, PeriodicOrbit, close_return_seeds,
                       find_periodic_orbit, primitive_symbols)
from .polyalg import format_float
from .sdpsolve import SolveOptions
from .sosbuild import (BoundCertificate, CertificateUnavailable, build_bound_program,
                       solve_bound, validate_certificate)

EXIT_OK = 0
EXIT_MATH = 1
EXIT_USAGE = 2

TABLE_FMT = "%.7g"


def _out_dir(config: ExperimentConfig, override: str | None) -> Path:
    out = Path(override if override is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def certificate_filename(degree: int) -> str:
    return f"certificate_deg{degree}.json"


def orbit_filename(symbols: str) -> str:
    return f"orbit_{symbols}.json"


def cmd_bound(config: ExperimentConfig, degrees=None, jobs=None,
              out_dir=None, verbose: bool = False) -> int:
    """Run the bound pipeline per degree; write certificates and a summary table."""
    degrees = list(degrees) if degrees else list(config.degrees)
    if not degrees:
        print("error: no degrees requested", file=sys.stderr)
        return EXIT_USAGE
    jobs = jobs if jobs else config.jobs
    out = _out_dir(config, out_dir)
    options = SolveOptions(gap_tol=config.gap_tol, feas_tol=config.feas_tol,
                           max_iterations=config.max_iterations, verbose=verbose)

    def run(degree: int):
        start = time.monotonic()
        try:
            _, solution, cert = solve_bound(config.system, config.phi, degree,
                                            options, ball_radius=config.ball_radius)
        except CertificateUnavailable as exc:
            return degree, None, str(exc), time.monotonic() - start
        return degree, cert, None, time.monotonic() - start

    if jobs > 1 and len(degrees) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, sorted(degrees)))
    else:
        results = [run(d) for d in sorted(degrees)]

    rows = []
    all_valid = True
    for degree, cert, error, elapsed in results:
        if cert is None:
            all_valid = False
            print(f"bound degree {degree}: FAILED ({error})", file=sys.stderr)
            rows.append((degree, "", "", "", "failed", "no"))
            continue
        cert.save(out / certificate_filename(degree))
        rows.append((degree, TABLE_FMT % cert.bound, TABLE_FMT % cert.solver["gap"],
                     str(cert.solver["iterations"]), cert.solver["status"],
                     "yes" if cert.valid else "no"))
        all_valid = all_valid and cert.valid
        print(f"bound degree {degree}: U = {TABLE_FMT % cert.bound}  "
              f"{'VALID' if cert.valid else 'INVALID'}  ({elapsed:.1f}s)")

    with open(out / "summary_bounds.csv", "w") as fh:
        fh.write("degree,bound,gap,iterations,status,valid\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return EXIT_OK if all_valid else EXIT_MATH


def cmd_orbit(config: ExperimentConfig, out_dir=None) -> int:
    """Seed, shoot, and store each requested periodic orbit; tabulate averages."""
    if not config.orbits:
        print("error: no orbits requested", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(config, out_dir)
    rows = []
    failures = 0
    for request in config.orbits:
        symbols = request.symbols.upper()
        primitive = primitive_symbols(symbols)
        if primitive != symbols:
            print(f"warning: {symbols!r} repeats {primitive!r}; using the primitive word",
                  file=sys.stderr)
            symbols = primitive
        try:
            seeds = close_return_seeds(config.system, config.section, symbols,
                                       request.run_length, tol=request.seed_tol,
                                       max_seeds=request.max_seeds)
            if not seeds:
                raise OrbitError(f"no close-return seeds for {symbols!r} "
                                 f"in a run of length {request.run_length:g}")
            orbit = None
            last_error: Exception | None = None
            for seed in seeds:
                try:
                    orbit = find_periodic_orbit(config.system, config.section, symbols,
                                                seed.state, tol=request.tol)
                    break
                except OrbitError as exc:
                    last_error = exc
            if orbit is None:
                raise OrbitError(f"all {len(seeds)} seeds failed; last: {last_error}")
        except OrbitError as exc:
            failures += 1
            print(f"orbit {symbols}: FAILED ({exc})", file=sys.stderr)
            continue

        orbit.save(out / orbit_filename(symbols))
        orbit.trajectory.to_csv(out / f"orbit_{symbols}.csv")
        average = orbit.average(config.phi)
        rows.append((symbols, TABLE_FMT % orbit.period, TABLE_FMT % orbit.residual,
                     TABLE_FMT % average))
        print(f"orbit {symbols}: period = {TABLE_FMT % orbit.period}, "
              f"average = {TABLE_FMT % average}")

    with open(out / "averages.csv", "w") as fh:
        fh.write("symbols,period,residual,average\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return EXIT_MATH if failures else EXIT_OK


def cmd_region(config: ExperimentConfig, out_dir=None) -> int:
    """Emit gap-function grids for every (certificate, threshold) pair."""
    if not config.regions:
        print("error: no regions requested", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(config, out_dir)
    for request in config.regions:
        cert_path = out / request.certificate
        if not cert_path.exists():
            print(f"error: certificate not found: {cert_path}", file=sys.stderr)
            return EXIT_USAGE
        cert = BoundCertificate.load(cert_path)
        for M in request.thresholds:
            grid = region_grid(cert, config.phi, config.system,
                               request.box, request.resolution, M)
            name = f"region_deg{cert.aux_degree}_M{M:g}.grid.txt"
            grid.save(out / name)
            print(f"region degree {cert.aux_degree} M={M:g}: "
                  f"member fraction {grid.member_fraction:.4f} -> {name}")
    return EXIT_OK


def cmd_trace(config: ExperimentConfig, out_dir=None) -> int:
    """Per (orbit, certificate): residual-trace CSV plus a gap report."""
    if not config.traces:
        print("error: no traces requested", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(config, out_dir)
    for request in config.traces:
        cert_path = out / request.certificate
        orbit_path = out / request.orbit
        if not cert_path.exists() or not orbit_path.exists():
            missing = cert_path if not cert_path.exists() else orbit_path
            print(f"error: input not found: {missing}", file=sys.stderr)
            return EXIT_USAGE
        cert = BoundCertificate.load(cert_path)
        orbit = PeriodicOrbit.load(orbit_path, config.system)
        trace = residual_trace(orbit, cert, config.phi, config.system)
        report = gap_report(orbit, cert, request.threshold, config.phi, config.system)
        stem = f"{orbit.symbols}_deg{cert.aux_degree}"
        trace.to_csv(out / f"trace_{stem}.csv")
        report.save(out / f"gap_{stem}.json")
        print(f"trace {stem}: mean = {TABLE_FMT % trace.mean}, "
              f"occupancy(M={request.threshold:g}) = {report.occupancy:.6f} "
              f">= {report.markov_lower_bound:.6f}")
    return EXIT_OK


def cmd_verify(cert_path) -> int:
    """Standalone certificate re-validation."""
    try:
        cert = BoundCertificate.load(cert_path)
    except FileNotFoundError:
        print(f"error: no such file: {cert_path}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: malformed certificate {cert_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    program = build_bound_program(cert.system, cert.phi, cert.aux_degree,
                                  ball_radius=cert.ball_radius, scales=cert.scales)
    report = validate_certificate(cert, program)
    verdict = "VALID" if report.valid else "INVALID"
    print(f"{cert_path}: {verdict}  bound={format_float(cert.bound)}  "
          f"residual_infnorm={report.residual_infnorm:.3e}  "
          f"gram_min_eigenvalue={report.gram_min_eigenvalue:.3e}")
    return EXIT_OK if report.valid else EXIT_MATH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergobound",
        description="Upper bounds on long-time averages of polynomial ODEs "
                    "via sum-of-squares programming.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_common(p):
        p.add_argument("--config", required=True, help="experiment TOML file")
        p.add_argument("--out", default=None, help="output directory override")
        return p

    p_bound = with_common(sub.add_parser("bound", help="compute bound certificates"))
    p_bound.add_argument("--degree", type=int, action="append", default=None,
                         help="restrict to this auxiliary degree (repeatable)")
    p_bound.add_argument("--jobs", type=int, default=None,
                         help="concurrent per-degree solves")
    p_bound.add_argument("--verbose", action="store_true")
    with_common(sub.add_parser("orbit", help="locate periodic orbits"))
    with_common(sub.add_parser("region", help="sample gap-function grids"))
    with_common(sub.add_parser("trace", help="residual traces and gap reports"))
    p_verify = sub.add_parser("verify", help="re-validate stored certificates")
    p_verify.add_argument("certificates", nargs="+", help="certificate JSON files")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    if args.command == "verify":
        worst = EXIT_OK
        for path in args.certificates:
            worst = max(worst, cmd_verify(path))
        return worst

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "bound":
        return cmd_bound(config, degrees=args.degree, jobs=args.jobs,
                         out_dir=args.out, verbose=args.verbose)
    if args.command == "orbit":
        return cmd_orbit(config, out_dir=args.out)
    if args.command == "region":
        return cmd_region(config, out_dir=args.out)
    if args.command == "trace":
        return cmd_trace(config, out_dir=args.out)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
