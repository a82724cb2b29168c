"""Command-line interface.

Every run writes its CSV outputs and a ``manifest.json`` into ``--outdir``.
``twistrmt replay DIR/manifest.json`` reruns a manifest and checks that the
outputs are byte-identical.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 insufficient
data.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from .curves import arithmetic_factor_ak, get_curve
from .io import MANIFEST_NAME, RunManifest
from .lvalues import AmbiguityError, CalibrationError
from .moments import (
    NonConvergenceError,
    bin_probabilities,
    density_po,
    g_k_barnes,
    g_k_product,
    moment_so_even,
)
from .reports import (
    REFERENCE_RATIOS,
    conjecture1_ratio,
    eq23_scaling,
    histogram_report,
    moment_report,
    qp_report,
    rp_report,
    t_grid,
)
from .sampler import empirical_moment, histogram_density, sample_values
from .scan import InsufficientDataError, ScanConfig, default_engine, run_scan

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_DATA = 0, 2, 3, 4
DEFAULT_OUTDIR = "twistrmt-out"
GK_TOL = 1e-10


class _Suppressing:
    """Adds arguments either with their defaults or with defaults suppressed."""

    def __init__(self, parser, suppress):
        self.parser = parser
        self.suppress = suppress

    def __call__(self, *names, **kw):
        if self.suppress:
            kw["default"] = argparse.SUPPRESS
        self.parser.add_argument(*names, **kw)


def _common(add):
    add("--outdir", default=DEFAULT_OUTDIR, help="directory for CSV outputs and manifest")
    add("--threads", type=int, default=1, help="worker threads (output does not depend on it)")
    add("--config", default=None, help="JSON file whose keys mirror the flags")
    add("--registry", default=None, help="extra curve registry file")


def _scan_flags(add):
    add("--curve", default="E11")
    add("--T", "--dmax", dest="T", type=int, default=1000, help="largest |d|")
    add("--dmin", type=int, default=1)
    add("--parity", choices=("auto", "odd", "even", "all"), default="auto",
        help="auto: odd d")
    add("--sign", choices=("even", "all"), default="even")
    add("--dsign", choices=("auto", "neg", "pos", "all"), default="auto",
        help="auto: all d for E32, d < 0 otherwise")
    add("--prime-only", action="store_true", default=False)
    add("--character", type=int, nargs=2, metavar=("P", "VALUE"), default=None)
    add("--engine", choices=("auto", "series", "theta", "import"), default="auto",
        help="auto: theta for E32, series otherwise")
    add("--epsilon", type=float, default=1e-8)
    add("--coefficients", default=None, help="coefficient file for the import engine")
    add("--kappa", type=float, default=None)
    add("--tau-refined", action="store_true", default=False)


def build_parser(suppress=False):
    parser = argparse.ArgumentParser(
        prog="twistrmt",
        description="Random-matrix models for vanishing of quadratic twists of elliptic curves.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text, parent=sub):
        p = parent.add_parser(name, help=help_text)
        add = _Suppressing(p, suppress)
        _common(add)
        return add

    add = command("moments", "moments of det(U - I) over SO(2N) and the constants g_k")
    add("--N", type=int, nargs="+", default=[5])
    add("--k", type=float, nargs="+", default=[1.0])
    add("--gk", type=int, nargs="*", default=None, help="also tabulate g_k for these k")
    add("--check", action="store_true", default=False,
        help="cross-check the product and Barnes forms of g_k, k = 1..8")

    add = command("density", "density of det(U - I) over SO(2N)")
    add("--N", type=int, default=1)
    add("--xmin", type=float, default=None)
    add("--xmax", type=float, default=None)
    add("--points", type=int, default=200)

    add = command("sample", "Monte-Carlo sample of det(U - I)")
    add("--N", type=int, default=5)
    add("--samples", type=int, default=10000)
    add("--seed", type=int, default=0)
    add("--bins", type=int, default=50)
    add("--k", type=float, nargs="+", default=[1.0])

    add = command("afactor", "arithmetic factor a_k(E) as a truncated Euler product")
    add("--curve", default="E11")
    add("--k", type=float, nargs="+", default=[1.0])
    add("--cutoff", type=int, default=10000)

    add = command("scan", "central values of a family of quadratic twists")
    _scan_flags(add)

    rep = sub.add_parser("report", help="observables computed from a scan")
    rsub = rep.add_subparsers(dest="observable", required=True)
    for name, text in (("rp", "vanishing ratio R_p"), ("qp", "moment ratio Q_p"),
                       ("conj1", "prime-twist vanishing count scaling"),
                       ("eq23", "vanishing count against the small-value heuristic"),
                       ("hist", "value histogram against the SO(2N) density"),
                       ("moment", "family moment against its prediction")):
        add = command(name, text, rsub)
        _scan_flags(add)
        add("--grid", type=int, default=None, help="number of cutoffs in the T-grid")
        if name in ("rp", "qp"):
            add("--p", type=int, nargs="+", default=None)
        if name in ("qp", "moment"):
            add("--k", type=float, default=1.0)
        if name in ("eq23", "moment"):
            add("--a-cutoff", type=int, default=10000)
        if name == "hist":
            add("--bins", type=int, default=40)
            add("--N", type=int, default=None)

    p = sub.add_parser("replay", help="rerun a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--outdir", default=None,
                   help="where to rerun (default: <manifest dir>/replay)")
    return parser


def _parse(argv):
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        return args
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    if args.config:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ValueError("config file must hold a JSON object")
        for key, value in config.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                raise ValueError(f"config key {key!r} is not a flag of this command")
            if dest not in explicit:
                setattr(args, dest, value)
    if args.threads < 1:
        raise ValueError("--threads must be at least 1")
    return args


# ---------------------------------------------------------------- commands

def _write_csv(outdir, name, header, rows):
    path = os.path.join(outdir, name)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
    return name


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def cmd_moments(args, outdir, manifest):
    rows = [(N, k, moment_so_even(N, k)) for N in args.N for k in args.k]
    files = [_write_csv(outdir, "moments.csv", ("N", "k", "value"), rows)]
    for N, k, v in rows:
        print(f"M({N}, {k:g}) = {v:.10g}")
    if args.gk:
        gk_rows = [(k, g_k_product(k), g_k_barnes(k)) for k in args.gk]
        files.append(_write_csv(outdir, "gk.csv", ("k", "product", "barnes"), gk_rows))
        for k, prod, _ in gk_rows:
            print(f"g_{k} = {prod:.10g}")
    status = EXIT_OK
    if args.check:
        check = []
        for k in range(1, 9):
            a, b = g_k_product(k), g_k_barnes(k)
            check.append((k, a, b, abs(a - b) / abs(a)))
        files.append(_write_csv(outdir, "check.csv", ("k", "product", "barnes", "relerr"), check))
        worst = max(r[3] for r in check)
        print(f"g_k product vs Barnes, k = 1..8: max relative difference {worst:.2e}")
        if worst > GK_TOL:
            status = EXIT_NUMERICAL
    return files, status


def cmd_density(args, outdir, manifest):
    N = args.N
    top = 4.0 ** N
    lo = 0.0 if args.xmin is None else args.xmin
    hi = top if args.xmax is None else args.xmax
    if not 0 <= lo < hi <= top or args.points < 1:
        raise ValueError(f"need 0 <= xmin < xmax <= 4^N and points >= 1")
    edges = np.linspace(lo, hi, args.points + 1)
    xs = 0.5 * (edges[:-1] + edges[1:])
    ps = density_po(N, xs)
    area = bin_probabilities(N, edges)
    name = _write_csv(outdir, "density.csv", ("x", "p", "area"), zip(xs, ps, area))
    print(f"density of det(U - I), N = {N}: {args.points} points, total area {area.sum():.10f}")
    return [name], EXIT_OK


def cmd_sample(args, outdir, manifest):
    manifest.seed = args.seed
    values = sample_values(args.N, args.samples, args.seed, args.threads)
    edges = np.linspace(0.0, 4.0 ** args.N, args.bins + 1)
    hist = histogram_density(values, edges, args.N)
    model = bin_probabilities(args.N, edges) / np.diff(edges)
    files = [_write_csv(outdir, "sample.csv", ("bin_lo", "bin_hi", "density", "count", "model"),
                        zip(edges[:-1], edges[1:], hist.ps, hist.counts, model))]
    rows = []
    for k in args.k:
        vals = values ** k
        mean = float(np.mean(vals))
        stderr = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
        rows.append((k, mean, stderr, moment_so_even(args.N, k)))
        print(f"k = {k:g}: sample mean {mean:.6g} +- {stderr:.2g}, exact {rows[-1][3]:.6g}")
    files.append(_write_csv(outdir, "sample_moments.csv", ("k", "mean", "stderr", "exact"), rows))
    return files, EXIT_OK


def cmd_afactor(args, outdir, manifest):
    curve = get_curve(args.curve, args.registry)
    manifest.curve = curve.label
    rows = []
    for k in args.k:
        value, tail = arithmetic_factor_ak(curve, k, args.cutoff)
        rows.append((k, args.cutoff, value, tail))
        print(f"a_{k:g}({curve.label}) = {value:.8g} (change since cutoff/2: {tail:.1e})")
    return [_write_csv(outdir, "afactor.csv", ("k", "cutoff", "value", "tail"), rows)], EXIT_OK


def scan_config(args):
    """:class:`ScanConfig` from parsed scan flags, resolving the ``auto`` choices."""
    curve = get_curve(args.curve, args.registry)
    engine = default_engine(curve) if args.engine == "auto" else args.engine
    parity = "odd" if args.parity == "auto" else args.parity
    if args.dsign == "auto":
        d_sign = 0 if curve.conductor == 32 else -1
    else:
        d_sign = {"neg": -1, "pos": 1, "all": 0}[args.dsign]
    prime_only = args.prime_only or getattr(args, "observable", None) == "conj1"
    return ScanConfig(curve=curve.label, T=args.T, dmin=args.dmin, parity=parity,
                      sign=args.sign, d_sign=d_sign, prime_only=prime_only,
                      character=args.character, engine=engine, epsilon=args.epsilon,
                      coefficient_file=args.coefficients, kappa=args.kappa,
                      tau_refined=args.tau_refined, registry=args.registry,
                      threads=args.threads)


def _run_scan(args, manifest):
    config = scan_config(args)
    manifest.curve = config.curve
    manifest.engine = config.engine
    manifest.T = config.T
    manifest.config["scan"] = config.snapshot()
    return run_scan(config)


def cmd_scan(args, outdir, manifest):
    result = _run_scan(args, manifest)
    result.to_csv(os.path.join(outdir, "scan.csv"))
    cols = result.arrays()
    even = cols["sign"] == 1
    print(f"{result.curve.label}: {len(result)} twists, {int(even.sum())} even sign, "
          f"{int((cols['is_zero'] & even).sum())} vanishing")
    for note in result.notes:
        print(note)
    return ["scan.csv"], EXIT_OK


def _grid(args):
    if args.grid is None or args.grid <= 1:
        return [args.T]
    return t_grid(args.T, args.grid)


def cmd_report(args, outdir, manifest):
    result = _run_scan(args, manifest)
    if len(result) == 0:
        raise InsufficientDataError("the family is empty")
    obs = args.observable
    curve = result.curve
    if obs in ("rp", "qp"):
        ps = args.p
        if ps is None:
            ps = sorted(p for p in REFERENCE_RATIOS.get(curve.label, {}) if p < 50) or [3, 5, 7]
        if obs == "rp":
            report = rp_report(result, ps, _grid(args))
        else:
            report = qp_report(result, ps, args.k, _grid(args))
    elif obs == "conj1":
        grid = t_grid(args.T, args.grid or 20)
        report = conjecture1_ratio(result, grid)
    elif obs == "eq23":
        grid = t_grid(args.T, args.grid or 20)
        a_half = None
        if not args.tau_refined:
            a_half, _ = arithmetic_factor_ak(curve, -0.5, args.a_cutoff)
        report = eq23_scaling(result, grid, args.tau_refined, a_half)
    elif obs == "hist":
        report = histogram_report(result, args.bins, N_override=args.N)
    else:
        report = moment_report(result, args.k, _grid(args), args.a_cutoff)
    name = f"report_{obs}.csv"
    report.to_csv(os.path.join(outdir, name))
    sys.stdout.write(report.csv_text())
    return [name], EXIT_OK


COMMANDS = {
    "moments": cmd_moments,
    "density": cmd_density,
    "sample": cmd_sample,
    "afactor": cmd_afactor,
    "scan": cmd_scan,
    "report": cmd_report,
}


def _config_snapshot(args):
    out = {k: v for k, v in sorted(vars(args).items())
           if k not in ("outdir", "threads", "config")}
    return out


def run(argv):
    """Parse ``argv``, execute, write the manifest; return the exit status."""
    args = _parse(argv)
    if args.command == "replay":
        return replay(args.manifest, args.outdir)
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    manifest = RunManifest(args.command, list(argv), _config_snapshot(args))
    files, status = COMMANDS[args.command](args, outdir, manifest)
    for name in files:
        manifest.add_output(outdir, name)
    manifest.write(outdir)
    return status


def _replace_outdir(argv, outdir):
    out = []
    skip = False
    for i, a in enumerate(argv):
        if skip:
            skip = False
            continue
        if a == "--outdir":
            skip = True
            continue
        if a.startswith("--outdir="):
            continue
        out.append(a)
    return out + ["--outdir", outdir]


def replay(manifest_path, outdir=None):
    """Rerun a manifest into ``outdir`` and compare output digests."""
    old = RunManifest.read(manifest_path)
    if outdir is None:
        outdir = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "replay")
    status = run(_replace_outdir(old.argv, outdir))
    new = RunManifest.read(os.path.join(outdir, MANIFEST_NAME))
    differ = sorted(name for name in set(old.outputs) | set(new.outputs)
                    if old.outputs.get(name) != new.outputs.get(name))
    if differ:
        print("outputs differ: " + ", ".join(differ), file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"replayed {len(new.outputs)} outputs into {outdir}: identical")
    return status


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(argv)
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonConvergenceError, CalibrationError, AmbiguityError, ArithmeticError,
            MemoryError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
