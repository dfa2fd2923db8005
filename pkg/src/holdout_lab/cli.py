"""Command-line surface: theory curves, Monte Carlo sweeps, Weingarten
tables, and figure rendering from result tables.

Exit codes: 0 success, 2 usage error, 3 numeric or domain error.
"""

import argparse
import csv
import sys
from pathlib import Path

from . import __version__, report, theory
from .errors import DomainError, InfiniteMoment
from .noise import gamma_moments, parse_radial
from .population import M4_CONVENTIONS
from .simulate import StudyRanges, TrialConfig, default_t_out_grid, random_param_study, sweep_k
from .theory import QIN_CONVENTIONS
from .weingarten import enumerate_pair_partitions, gram_matrix, weingarten_matrix

MC_HEADER = [
    "k", "t_out", "mc_mean", "ci_low", "ci_high",
    "reps", "theory_linear", "theory_quadratic",
]
STUDY_HEADER = ["n", "t", "p", "q", "radial"] + MC_HEADER

# flag-style keys allowed in a config file (value must be truthy to set them)
_CONFIG_FLAGS = {"quadratic", "exact", "json", "sweep_divisors", "wide_p", "no_fig"}


def _read_config(path):
    """Parse a key=value config file; '#' starts a comment line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DomainError(f"cannot read config file {path!r}: {exc}") from exc
    table = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"bad config line (expected key=value): {raw!r}")
        key, value = line.split("=", 1)
        table[key.strip().lower().replace("-", "_")] = value.strip()
    return table


def _expand_config(argv):
    """Inject config-file entries as flags right after the subcommand, so
    flags typed on the command line always override them."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            break
    if path is None:
        return argv
    injected = []
    for key, value in _read_config(path).items():
        flag = "--" + key.replace("_", "-")
        if key in _CONFIG_FLAGS:
            if value.lower() in ("1", "true", "yes", "on"):
                injected.append(flag)
        else:
            injected.extend([flag, value])
    return argv[:1] + injected + argv[1:]


def _add_common_output_flags(sub):
    sub.add_argument("--out", help="output CSV path")
    sub.add_argument("--json", action="store_true", help="also write a JSON mirror")
    sub.add_argument("--no-fig", action="store_true", help="skip the SVG figure")
    sub.add_argument("--config", help="key=value config file (flags override)")


def _add_convention_flags(sub):
    sub.add_argument(
        "--m4-convention", choices=list(M4_CONVENTIONS), default="paper",
        help="moment-cumulant convention for tau(Sigma^4)",
    )
    sub.add_argument(
        "--qin-convention", choices=list(QIN_CONVENTIONS), default="default",
        help="train aspect-ratio convention inside the corollary formulas",
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="holdout-lab",
        description="Expected holdout error for rotationally invariant "
        "covariance estimation: theory curves, Monte Carlo sweeps, and "
        "Weingarten tables.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    tc = subs.add_parser("theory-curve", help="expected-error curve over t_out")
    tc.add_argument("--n", type=int, required=True, help="dimension")
    tc.add_argument("--t", type=int, help="observations (or use --q)")
    tc.add_argument("--q", type=float, help="aspect ratio n/t (or use --t)")
    tc.add_argument("--p", type=float, required=True, help="inverse-Wishart shape")
    tc.add_argument("--gamma", type=float, help="noise kurtosis ratio")
    tc.add_argument("--radial", help="noise law: gaussian|sphere|gaussnorm|student:NU|laplace")
    tc.add_argument("--quadratic", action="store_true",
                    help="also evaluate the quadratic-shrinkage error")
    _add_convention_flags(tc)
    _add_common_output_flags(tc)
    tc.set_defaults(func=_cmd_theory_curve)

    mc = subs.add_parser("mc", help="Monte Carlo holdout error")
    mc.add_argument("--n", type=int, required=True, help="dimension")
    mc.add_argument("--t", type=int, help="observations (or use --q)")
    mc.add_argument("--q", type=float, help="aspect ratio n/t (or use --t)")
    mc.add_argument("--p", type=float, help="inverse-Wishart shape")
    mc.add_argument("--radial", default="gaussian",
                    help="noise law(s); comma-separated list allowed with --random-study")
    mc.add_argument("--reps", type=int, required=True, help="Monte Carlo repetitions")
    mc.add_argument("--seed", type=int, default=0, help="master seed")
    mc.add_argument("--k-list", help="comma-separated split ratios k dividing t")
    mc.add_argument("--sweep-divisors", action="store_true",
                    help="sweep every divisor of t as the test size")
    mc.add_argument("--random-study", type=int, metavar="N",
                    help="N random (n, p, q, k) draws instead of a fixed grid")
    mc.add_argument("--wide-p", action="store_true",
                    help="widen the study's p range from [0.1, 0.9] to [0.1, 9]")
    mc.add_argument("--quadratic", action="store_true",
                    help="kept for symmetry; the quadratic theory column is "
                    "included whenever the law's higher moments are finite")
    _add_convention_flags(mc)
    _add_common_output_flags(mc)
    mc.set_defaults(func=_cmd_mc)

    wg = subs.add_parser("weingarten", help="Gram or Weingarten matrix tables")
    wg.add_argument("mode", choices=["gram", "wg"], help="which matrix to print")
    wg.add_argument("--k", type=int, required=True, help="half-order, 1..4")
    wg.add_argument("--n", type=int, required=True, help="dimension")
    wg.add_argument("--exact", action="store_true", help="exact rational arithmetic")
    wg.add_argument("--out", help="write CSV here instead of stdout")
    wg.set_defaults(func=_cmd_weingarten)

    pl = subs.add_parser("plot", help="render an SVG figure from a results CSV")
    pl.add_argument("input", help="CSV produced by theory-curve or mc")
    pl.add_argument("--out", help="output SVG path (default: input with .svg)")
    pl.set_defaults(func=_cmd_plot)

    return parser


def _resolve_t(args, parser) -> int:
    if (args.t is None) == (args.q is None):
        parser.error("exactly one of --t or --q is required")
    if args.t is not None:
        t = args.t
    else:
        if not 0 < args.q < 1:
            parser.error("--q must lie in (0, 1)")
        t = int(round(args.n / args.q))
    if t < 2:
        parser.error("need t >= 2")
    return t


def _write_table(args, command, header, rows, params, seed, fig=None):
    """CSV plus optional JSON mirror, figure, and the manifest sidecar."""
    out = args.out or f"{command.replace('-', '_')}.csv"
    report.write_csv(out, header, rows)
    outputs = [out]
    if args.json:
        json_path = str(Path(out).with_suffix(".json"))
        report.write_json(json_path, header, rows)
        outputs.append(json_path)
    if fig is not None and not args.no_fig:
        fig_path = report.figure_path(out)
        fig(fig_path)
        outputs.append(fig_path)
    manifest_path = out + ".manifest.json"
    report.write_manifest(manifest_path, command, params, seed, __version__, outputs)
    for path in outputs:
        print(f"wrote {path}")
    return 0


def _cmd_theory_curve(args, parser):
    n = args.n
    t = _resolve_t(args, parser)
    if (args.gamma is None) == (args.radial is None):
        parser.error("exactly one of --gamma or --radial is required")
    if args.p is None:
        parser.error("--p is required")
    if args.gamma is not None:
        if args.quadratic:
            parser.error("--quadratic requires --radial (sixth and eighth moments)")
        gamma, gamma3, gamma4 = args.gamma, None, None
        law_label = None
    else:
        law = parse_radial(args.radial, n)
        gm = gamma_moments(law)
        gamma, gamma3, gamma4 = gm.gamma, gm.gamma3, gm.gamma4
        law_label = law.label
        if args.quadratic and (gamma3 is None or gamma4 is None):
            raise InfiniteMoment(
                f"{law.label} lacks finite sixth/eighth moments; "
                "quadratic curve unavailable"
            )
    q = n / t
    k_exact = theory.optimal_k_exact(n, t, args.p, q, gamma)
    k_asym = theory.optimal_k_asymptotic(n, args.p, q, gamma)

    curve = theory.error_curve(
        n, t, args.p, gamma, gamma3, gamma4,
        quadratic=args.quadratic,
        m4_convention=args.m4_convention,
        qin_convention=args.qin_convention,
    )
    header = ["k", "t_out", "error_linear"]
    if args.quadratic:
        header.append("error_quadratic")
    rows = []
    for pt in curve.points:
        row = [pt.k, pt.t_out, pt.error_linear]
        if args.quadratic:
            row.append(pt.error_quadratic)
        rows.append(row)

    def fig(path):
        pts = sorted(curve.points, key=lambda pt: pt.k)
        series = {"error_linear": [pt.error_linear for pt in pts]}
        if args.quadratic:
            series["error_quadratic"] = [pt.error_quadratic for pt in pts]
        report.save_curve_figure(
            path, [pt.k for pt in pts], series,
            title=f"n={n}, t={t}, p={args.p}, gamma={gamma:g}",
        )

    params = {
        "n": n, "t": t, "p": args.p, "gamma": gamma,
        "radial": law_label, "quadratic": args.quadratic,
        "m4_convention": args.m4_convention,
        "qin_convention": args.qin_convention,
    }
    print(f"k_opt exact: {k_exact:.6f} (t_out ~ {t / k_exact:.2f})")
    print(f"k_opt asymptotic: {k_asym:.6f}")
    return _write_table(args, "theory-curve", header, rows, params, None, fig)


def _parse_k_list(raw, t, parser):
    t_out_list = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            k = int(tok)
        except ValueError:
            parser.error(f"--k-list entries must be integers, got {tok!r}")
        if k < 2 or t % k != 0:
            parser.error(f"--k-list entries must divide t with k >= 2, got {k}")
        t_out_list.append(t // k)
    if not t_out_list:
        parser.error("--k-list is empty")
    return t_out_list


def _cmd_mc(args, parser):
    if args.reps < 2:
        parser.error("--reps must be >= 2")
    modes = [args.k_list is not None, args.sweep_divisors, args.random_study is not None]
    if sum(modes) != 1:
        parser.error("exactly one of --k-list, --sweep-divisors, --random-study is required")

    if args.random_study is not None:
        return _run_random_study(args, parser)

    n = args.n
    t = _resolve_t(args, parser)
    if args.p is None:
        parser.error("--p is required")
    law = parse_radial(args.radial, n)
    gm = gamma_moments(law)
    quad_ok = gm.gamma3 is not None and gm.gamma4 is not None
    if not quad_ok:
        print(
            f"warning: {law.label} lacks finite sixth/eighth moments; "
            "theory_quadratic column omitted",
            file=sys.stderr,
        )

    if args.sweep_divisors:
        t_out_list = default_t_out_grid(t)
    else:
        t_out_list = _parse_k_list(args.k_list, t, parser)

    cfg = TrialConfig(
        n=n, t=t, t_out=t_out_list[0], p=args.p, radial=law, seed=args.seed
    )
    reports = sweep_k(
        cfg, args.reps, t_out_list=t_out_list, quadratic=quad_ok,
        m4_convention=args.m4_convention, qin_convention=args.qin_convention,
    )

    header = list(MC_HEADER) if quad_ok else MC_HEADER[:-1]
    rows = []
    for rep in reports:
        row = [rep.k, rep.t_out, rep.mc_mean, rep.ci_low, rep.ci_high,
               rep.reps, rep.theory_linear]
        if quad_ok:
            row.append(rep.theory_quadratic)
        rows.append(row)

    def fig(path):
        order = sorted(range(len(reports)), key=lambda i: reports[i].k)
        k = [reports[i].k for i in order]
        series = {
            "mc_mean": [reports[i].mc_mean for i in order],
            "theory_linear": [reports[i].theory_linear for i in order],
        }
        if quad_ok:
            series["theory_quadratic"] = [reports[i].theory_quadratic for i in order]
        band = (
            [reports[i].ci_low for i in order],
            [reports[i].ci_high for i in order],
        )
        report.save_curve_figure(
            path, k, series, band=band,
            title=f"n={n}, t={t}, p={args.p}, {law.label}, {args.reps} reps",
        )

    params = {
        "n": n, "t": t, "p": args.p, "radial": law.label, "reps": args.reps,
        "t_out_list": t_out_list, "m4_convention": args.m4_convention,
        "qin_convention": args.qin_convention,
    }
    return _write_table(args, "mc", header, rows, params, args.seed, fig)


def _run_random_study(args, parser):
    if args.random_study < 0:
        parser.error("--random-study must be >= 0")
    laws = tuple(s.strip() for s in args.radial.split(",") if s.strip())
    if not laws:
        parser.error("--radial must name at least one law")
    for name in laws:
        parse_radial(name, 100)  # validate names and nu ranges up front
    ranges = StudyRanges(
        p=(0.1, 9.0) if args.wide_p else (0.1, 0.9),
        laws=laws,
    )
    results = random_param_study(
        ranges, args.random_study, args.reps, args.seed,
        m4_convention=args.m4_convention, qin_convention=args.qin_convention,
    )
    rows = []
    for params, rep in results:
        rows.append([
            params["n"], params["t"], params["p"], params["q"], params["radial"],
            rep.k, rep.t_out, rep.mc_mean, rep.ci_low, rep.ci_high,
            rep.reps, rep.theory_linear, rep.theory_quadratic,
        ])

    def fig(path):
        x = [rep.theory_linear for _, rep in results]
        y = [rep.mc_mean for _, rep in results]
        report.save_scatter_figure(
            path, x, y,
            xlabel="theory error", ylabel="Monte Carlo error",
            title=f"{args.random_study} random draws, {args.reps} reps each",
        )

    params = {
        "trials": args.random_study, "reps": args.reps, "laws": list(laws),
        "wide_p": args.wide_p, "m4_convention": args.m4_convention,
        "qin_convention": args.qin_convention,
    }
    return _write_table(args, "mc", STUDY_HEADER, rows, params, args.seed, fig)


def _format_wg_cell(value, exact: bool) -> str:
    if exact:
        return str(value)
    return repr(float(value))


def _cmd_weingarten(args, parser):
    if not 1 <= args.k <= 4:
        parser.error("--k must be in 1..4")
    if args.n < 1:
        parser.error("--n must be >= 1")
    parts = enumerate_pair_partitions(args.k)
    labels = [str(p) for p in parts]
    if args.mode == "gram":
        mat = gram_matrix(args.k, args.n, exact=args.exact)
    else:
        mat = weingarten_matrix(args.k, args.n, exact=args.exact)
    header = ["partition"] + labels
    rows = [
        [labels[i]] + [_format_wg_cell(mat[i, j], args.exact) for j in range(len(labels))]
        for i in range(len(labels))
    ]
    if args.out:
        report.write_csv(args.out, header, rows)
        report.write_manifest(
            args.out + ".manifest.json", "weingarten",
            {"k": args.k, "n": args.n, "mode": args.mode, "exact": args.exact},
            None, __version__, [args.out],
        )
        print(f"wrote {args.out}")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return 0


_PLOT_SKIP = {"k", "t_out", "reps", "ci_low", "ci_high", "n", "t", "p", "q", "radial"}


def _cmd_plot(args, parser):
    try:
        with open(args.input, newline="") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames
            raw_rows = list(reader)
    except OSError as exc:
        raise DomainError(f"cannot read {args.input!r}: {exc}") from exc
    if not fields:
        raise DomainError(f"{args.input}: no header (row count 0)")
    if "k" not in fields:
        raise DomainError(f"{args.input}: missing 'k' column")
    if not raw_rows:
        raise DomainError(f"{args.input}: no data rows (row count 0)")

    def cell(row, col):
        v = row.get(col, "")
        if v is None or v == "":
            return None
        try:
            return float(v)
        except ValueError:
            raise DomainError(
                f"{args.input}: non-numeric value {v!r} in column {col!r}"
            ) from None

    k_vals = [cell(row, "k") for row in raw_rows]
    if any(v is None for v in k_vals):
        raise DomainError(f"{args.input}: empty value in column 'k'")
    order = sorted(range(len(raw_rows)), key=lambda i: k_vals[i])
    raw_rows = [raw_rows[i] for i in order]
    k = [k_vals[i] for i in order]
    series = {}
    for col in fields:
        if col in _PLOT_SKIP:
            continue
        values = [cell(row, col) for row in raw_rows]
        if any(v is not None for v in values):
            series[col] = values
    band = None
    if "ci_low" in fields and "ci_high" in fields:
        lo = [cell(row, "ci_low") for row in raw_rows]
        hi = [cell(row, "ci_high") for row in raw_rows]
        if all(v is not None for v in lo + hi):
            band = (lo, hi)
    if not series:
        raise DomainError(f"{args.input}: no plottable columns besides 'k'")
    out = args.out or report.figure_path(args.input)
    report.save_curve_figure(out, k, series, band=band, title=Path(args.input).name)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
        return args.func(args, parser)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
