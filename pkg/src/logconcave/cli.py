"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 certificate failure,
3 study-quality failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .certify import DEFAULT_GRID, CertificateError, check_integral_characterization
from .density import DensityError, PLConcaveLogDensity
from .derived import (
    SmoothedDensity,
    hazard_eval,
    sample_fit,
    sample_smoothed,
    smooth,
    smoothed_density_eval,
)
from .fitter import FitConfig, FitError, fit
from .sample import SampleError, read_sample
from .simlab import DEFAULT_SIZES, STATISTIC, StudyConfig, StudyQualityError, run_study

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_STUDY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read fit file {path}: {exc}") from None


def _load_fit(path: str) -> PLConcaveLogDensity:
    return PLConcaveLogDensity.from_dict(_load_json(path))


def _grid_tsv(header: str, x, y) -> str:
    lines = [header] + [f"{a!r}\t{b!r}" for a, b in zip(np.asarray(x).tolist(), np.asarray(y).tolist())]
    return "\n".join(lines) + "\n"


def _grid_points(args, lo: float, hi: float, endpoint: bool = True) -> np.ndarray:
    a = lo if args.start is None else args.start
    b = hi if args.stop is None else args.stop
    if not a < b:
        raise UsageError("grid needs --from < --to")
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    return np.linspace(a, b, args.grid, endpoint=endpoint)


# ----- commands --------------------------------------------------------------------------


def cmd_fit(args) -> int:
    s = read_sample(args.data)
    try:
        result = fit(s, FitConfig(cert_tolerance=args.tol, grid_size=args.grid))
    except FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        if exc.certificate is not None:
            print(exc.certificate.to_json(indent=2), file=sys.stderr)
        return EXIT_CERT
    cert = result.certificate
    _emit(result.density.to_json(indent=2) + "\n", args.out)
    cert_path = args.cert
    if cert_path is None and args.out not in (None, "-"):
        cert_path = str(Path(args.out).with_suffix(".cert.json"))
    if cert_path is not None:
        Path(cert_path).write_text(cert.to_json(indent=2) + "\n")
    if args.dtable is not None:
        Path(args.dtable).write_text(cert.d_table_tsv())
    print(
        f"certified: {len(result.knots)} knots, {result.iterations} iterations, "
        f"log-likelihood {result.log_likelihood:.10g}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_check(args) -> int:
    d = _load_fit(args.fit)
    s = read_sample(args.data)
    report = check_integral_characterization(s, d, args.grid, args.tol)
    sys.stdout.write(report.to_json(indent=2) + "\n")
    if args.dtable is not None:
        Path(args.dtable).write_text(report.d_table_tsv())
    if report.passed:
        return EXIT_OK
    print(f"failed checks: {', '.join(report.failed_checks())}", file=sys.stderr)
    return EXIT_CERT


def _load_smoothed(args) -> SmoothedDensity:
    data = _load_json(args.fit)
    if "gamma_sq" in data:
        return SmoothedDensity.from_dict(data)
    if args.data is None:
        raise UsageError("--smoothed on a plain fit needs --data to compute the bandwidth")
    return smooth(PLConcaveLogDensity.from_dict(data), read_sample(args.data))


def cmd_sample(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if args.smoothed:
        draws = sample_smoothed(_load_smoothed(args), args.seed, args.count)
    else:
        draws = sample_fit(_load_fit(args.fit), args.seed, args.count)
    _emit("".join(f"{v!r}\n" for v in draws.tolist()), args.out)
    return EXIT_OK


def cmd_smooth(args) -> int:
    d = _load_fit(args.fit)
    s = read_sample(args.data)
    sd = smooth(d, s)
    _emit(sd.to_json(indent=2) + "\n", args.out)
    if args.table is not None:
        pad = 3.0 * sd.gamma
        x = _grid_points(args, d.lo - pad, d.hi + pad)
        Path(args.table).write_text(_grid_tsv("x\tf", x, smoothed_density_eval(sd, x)))
    return EXIT_OK


def cmd_hazard(args) -> int:
    d = _load_fit(args.fit)
    # hazard is undefined at the upper support end, so the default grid stops short of it
    x = _grid_points(args, d.lo, d.hi, endpoint=args.stop is not None)
    if x[-1] >= d.hi:
        raise UsageError(f"hazard grid must stay below the upper support end {d.hi!r}")
    _emit(_grid_tsv("x\th", x, hazard_eval(d, x)), args.out)
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = StudyConfig(
        distribution=args.distribution,
        sample_sizes=tuple(args.sizes),
        replications=args.replications,
        interval=tuple(args.interval),
        beta=args.beta,
        seed=args.seed,
        shape=args.shape,
        grid=args.grid,
        cert_tolerance=args.tol,
        workers=args.workers,
    )
    report = run_study(cfg, args.kind)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.kind}_rows.tsv").write_text(report.rows_tsv())
    (out / f"{args.kind}_summary.tsv").write_text(report.summary_tsv())
    (out / f"{args.kind}_report.json").write_text(report.to_json(indent=2) + "\n")
    sys.stdout.write(report.summary_tsv())
    if report.slope is not None:
        sl = report.slope
        print(f"log-log slope vs n: {sl.slope:.4f} (se {sl.stderr:.4f}, {sl.points} points)")
    if report.failures:
        print(f"{report.failures} fits failed and were excluded", file=sys.stderr)
    return EXIT_OK


# ----- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="logconcave", description="Log-concave density MLE: fit, certify, sample, study.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit a sample and certify the result")
    f.add_argument("data", help="file with one number per line")
    f.add_argument("--out", help="fit JSON path (default stdout)")
    f.add_argument("--cert", help="certificate JSON path (default next to --out)")
    f.add_argument("--dtable", help="write the D(t) table as TSV")
    f.add_argument("--tol", type=float, default=1e-8, help="certificate tolerance")
    f.add_argument("--grid", type=int, default=DEFAULT_GRID, help="extra D(t) grid points")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("check", help="certify a fit against data")
    c.add_argument("fit")
    c.add_argument("data")
    c.add_argument("--dtable", help="write the D(t) table as TSV")
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--grid", type=int, default=DEFAULT_GRID)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sample", help="draw from a fit")
    s.add_argument("fit")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--smoothed", action="store_true", help="draw from the Gaussian-smoothed fit")
    s.add_argument("--data", help="sample used to set the smoothing bandwidth")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    m = sub.add_parser("smooth", help="Gaussian-smoothed fit and density grid")
    m.add_argument("fit")
    m.add_argument("data")
    m.add_argument("--out", help="smoothed fit JSON path (default stdout)")
    m.add_argument("--table", help="write an (x, f) grid as TSV")
    m.add_argument("--grid", type=int, default=400)
    m.add_argument("--from", dest="start", type=float)
    m.add_argument("--to", dest="stop", type=float)
    m.set_defaults(func=cmd_smooth)

    h = sub.add_parser("hazard", help="hazard rate on a grid")
    h.add_argument("fit")
    h.add_argument("--out")
    h.add_argument("--grid", type=int, default=400)
    h.add_argument("--from", dest="start", type=float)
    h.add_argument("--to", dest="stop", type=float)
    h.set_defaults(func=cmd_hazard)

    st = sub.add_parser("study", help="seeded Monte-Carlo study")
    st.add_argument("kind", choices=sorted(STATISTIC))
    st.add_argument("--distribution", choices=["gumbel", "normal", "gamma"], default="gumbel")
    st.add_argument("--shape", type=float, default=2.0, help="gamma shape (>= 1)")
    st.add_argument("--sizes", type=int, nargs="+", default=list(DEFAULT_SIZES))
    st.add_argument("--replications", type=int, default=50)
    st.add_argument("--interval", type=float, nargs=2, default=[-1.0, 3.0], metavar=("A", "B"))
    st.add_argument("--beta", type=float, default=2.0)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--grid", type=int, default=1000)
    st.add_argument("--tol", type=float, default=1e-8)
    st.add_argument("--workers", type=int, default=1)
    st.add_argument("--out", default=".", help="directory for rows, summary and report")
    st.set_defaults(func=cmd_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StudyQualityError as exc:
        print(f"study aborted: {exc}", file=sys.stderr)
        return EXIT_STUDY
    except (UsageError, SampleError, DensityError, CertificateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
