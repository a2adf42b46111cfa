"""Command-line interface: ``trapwalk <subcommand> [options]``.

Subcommands write one table (CSV with a header, or JSON with the same
columns) to stdout or ``--output``.  Every option can also come from a flat
``key=value`` file given with ``--config``; flags on the command line win.
``--dump-config`` prints the fully resolved configuration and exits, and
running from that file reproduces the same output.

Exit codes: 0 success, 2 configuration error, 3 domain error (infinite
mean, horizon ceiling, bad fit window, diverged fit), 4 property failure in
``check``.
"""

import argparse
import math
import sys

import numpy as np
from scipy.signal import fftconvolve

from . import _io
from .distributions import PowerLawZeta, parse_spec
from .errors import ConfigError, DomainError, FitDiverged, InfiniteMean, ZeroEscape
from .exact_law import brute_force_distribution, count_distribution, position_distribution
from .limit_diagnostics import clt_check, concentration_check, heavy_tail_scaling_check
from .montecarlo import ensemble_msd, ensemble_samples, simulate_walker
from .msd_engine import linear_bounds, msd_series
from .scaling_fit import (CONVENTIONS, SAMPLINGS, THREE_PARAM, TWO_PARAM, beta_sweep,
                          powerlaw_fit, sigmoid_fit)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_PROPERTY = 4

SUITES = ("invariants", "clt", "concentration", "heavy-tail")


# --- option types ------------------------------------------------------------

def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _q_grid(text):
    """``a:b:step`` (inclusive, rounded to 10 decimals) or a comma list."""
    try:
        if ":" in text:
            a, b, h = (float(v) for v in text.split(":"))
            if h <= 0 or b < a:
                raise ValueError
            k = int(math.floor((b - a) / h + 1e-9))
            return [round(a + i * h, 10) for i in range(k + 1)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step or a comma list, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty q grid")
    return vals


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _optional(kind):
    def conv(text):
        return None if text in ("", None) else kind(text)
    return conv


# name, type, default, help; type "flag" is a boolean switch
_COMMON = [
    ("format", ("csv", "json"), "csv", "output encoding"),
    ("output", str, None, "output file (default stdout)"),
    ("workers", int, None, "thread cap; results do not depend on it"),
]

_OPTIONS = {
    "msd": [
        ("dist", str, None, "trapping law, e.g. exp:0.5, zeta:1.5, det:3, custom:file.csv"),
        ("tmax", int, None, "horizon N"),
        ("bounds", "flag", False, "add the finite-mean envelope columns dt,lower,upper"),
    ],
    "exact": [
        ("dist", str, None, "trapping law"),
        ("t", int, None, "time"),
        ("law", ("position", "count"), "position", "which exact law"),
        ("oracle", "flag", False, "use the full-state brute-force chain (position only)"),
    ],
    "simulate": [
        ("dist", str, None, "trapping law"),
        ("tmax", int, None, "horizon"),
        ("walkers", int, 10000, "ensemble size"),
        ("seed", int, 0, "64-bit seed"),
        ("checkpoints", _int_list, None, "emit (t, x, n) samples at these times instead of the MSD"),
        ("trajectory", "flag", False, "emit one path t,x,trap (walker stream 0)"),
    ],
    "fit": [
        ("input", str, None, "CSV with t,sigma2 (power-law fit) or q,beta (sigmoid fit)"),
        ("model", ("powerlaw", TWO_PARAM, THREE_PARAM), "powerlaw", "fit to perform"),
        ("tmin", int, 10, "window start"),
        ("tmax", int, None, "window end (default: last t)"),
        ("sampling", SAMPLINGS, "all", "every t or log-uniform t"),
        ("offset", int, 0, "regress sigma2[t - offset] on t"),
        ("N", int, None, "sigmoid fit: use rows of a q,N,beta table with this N"),
    ],
    "beta-sweep": [
        ("q", _q_grid, None, "q values, a:b:step or comma list"),
        ("N", _int_list, None, "window ends"),
        ("tmin", int, 10, "window start"),
        ("convention", CONVENTIONS, "model",
         "model: zeta-normalised law; figure: law truncated at max(N), fit offset 1"),
        ("sampling", SAMPLINGS, "all", "every t or log-uniform t"),
    ],
    "check": [
        ("suite", SUITES, None, "property suite"),
        ("dist", str, None, "trapping law"),
        ("tmax", int, 65536, "horizon (invariants)"),
        ("checkpoints", _int_list, None, "times (simulation suites)"),
        ("walkers", int, 100000, "ensemble size (simulation suites)"),
        ("seed", int, 0, "64-bit seed"),
        ("alpha", float, None, "tail index (concentration, heavy-tail; default q-1)"),
    ],
}

_REQUIRED = {
    "msd": ("dist", "tmax"),
    "exact": ("dist", "t"),
    "simulate": ("dist", "tmax"),
    "fit": ("input",),
    "beta-sweep": ("q", "N"),
    "check": ("suite", "dist"),
}


def _specs(cmd):
    return _OPTIONS[cmd] + _COMMON


def _converter(kind):
    if kind == "flag":
        return _bool
    if isinstance(kind, tuple):
        def choice(text):
            if text not in kind:
                raise argparse.ArgumentTypeError(f"expected one of {', '.join(kind)}, got {text!r}")
            return text
        return choice
    return kind


def _to_text(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ",".join(_to_text(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trapwalk",
        description="Exact and Monte Carlo analysis of the discrete-time trapped random walk.")
    parser.add_argument("--config", help="key=value file supplying option defaults")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for cmd in _OPTIONS:
        p = sub.add_parser(cmd, help=f"{cmd} (see {cmd} --help)", allow_abbrev=False)
        p.add_argument("--config", help="key=value file supplying option defaults")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved configuration and exit")
        for name, kind, default, text in _specs(cmd):
            flag = "--" + name
            if kind == "flag":
                p.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction,
                               default=default, help=text)
            else:
                p.add_argument(flag, dest=name, type=_converter(kind), default=default,
                               help=text, metavar=name.upper())
    return parser, sub


def resolve(argv):
    """Parse ``argv`` (with an optional config file) into a namespace."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    cfg = _io.read_config(known.config) if known.config else {}
    parser, sub = build_parser()
    cmd_from_cfg = cfg.pop("subcommand", None)
    positional = [a for a in argv if a in _OPTIONS]
    if not positional and cmd_from_cfg:
        argv = [cmd_from_cfg] + list(argv)
    elif positional and cmd_from_cfg and positional[0] != cmd_from_cfg:
        raise ConfigError(f"config is for {cmd_from_cfg!r}, command line asks for {positional[0]!r}")
    cmd = positional[0] if positional else cmd_from_cfg
    if cmd is None:
        if "-h" in argv or "--help" in argv:
            parser.parse_args(argv)
        parser.print_usage(sys.stderr)
        raise ConfigError("no subcommand given")
    if cmd not in _OPTIONS:
        raise ConfigError(f"unknown subcommand {cmd!r}")
    if cfg:
        specs = {name: kind for name, kind, _, _ in _specs(cmd)}
        defaults = {}
        for key, text in cfg.items():
            if key not in specs:
                raise ConfigError(f"unknown config key {key!r} for {cmd}")
            try:
                defaults[key] = _optional(_converter(specs[key]))(text)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigError(f"config key {key}: {exc}") from None
        sub.choices[cmd].set_defaults(**defaults)
    args = parser.parse_args(argv)
    missing = [k for k in _REQUIRED[cmd] if getattr(args, k) is None]
    if missing and not args.dump_config:
        raise ConfigError(f"{cmd}: missing required option(s) "
                          + ", ".join("--" + k for k in missing))
    return args


def dump_config(args):
    items = [("subcommand", args.subcommand)]
    items += [(name, _to_text(getattr(args, name))) for name, *_ in _specs(args.subcommand)]
    return _io.render_config(items)


# --- subcommands -------------------------------------------------------------
# each returns (columns, rows, ok)

def cmd_msd(args):
    d = parse_spec(args.dist)
    series = msd_series(d, args.tmax)
    s2 = series.sigma2
    t = np.arange(s2.size)
    if not args.bounds:
        return ["t", "sigma2"], zip(t, s2), True
    env = linear_bounds(d, args.tmax)
    dt = s2 - env.diffusion * t
    return ["t", "sigma2", "dt", "lower", "upper"], zip(t, s2, dt, env.lower, env.upper), True


def cmd_exact(args):
    d = parse_spec(args.dist)
    if args.law == "count":
        if args.oracle:
            raise ConfigError("--oracle applies to the position law only")
        law = count_distribution(d, args.t)
        return ["n", "prob"], zip(law.n, law.probs), True
    law = brute_force_distribution(d, args.t) if args.oracle else position_distribution(d, args.t)
    return ["z", "prob"], zip(law.z, law.probs), True


def cmd_simulate(args):
    d = parse_spec(args.dist)
    if args.trajectory:
        traj = simulate_walker(d, args.tmax, args.seed)
        t = np.arange(traj.positions.size)
        return ["t", "x", "trap"], zip(t, traj.positions, traj.traps), True
    if args.checkpoints:
        if max(args.checkpoints) > args.tmax:
            raise ConfigError("checkpoint beyond --tmax")
        try:
            samples = ensemble_samples(d, args.checkpoints, args.walkers, args.seed, args.workers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rows = [(t, x, n) for t in sorted(samples) for x, n in zip(*samples[t])]
        return ["t", "x", "n"], rows, True
    if args.walkers < 2:
        raise ConfigError("--walkers must be at least 2")
    st = ensemble_msd(d, args.tmax, args.walkers, args.seed, args.workers)
    return ["t", "msd_hat", "msd_se"], zip(np.arange(st.msd_hat.size), st.msd_hat, st.msd_se), True


def _column(table, name, path):
    if name not in table:
        raise ConfigError(f"{path}: missing column {name!r}")
    return table[name]


def cmd_fit(args):
    table = _io.read_table(args.input)
    if args.model == "powerlaw":
        t = _column(table, "t", args.input)
        s2 = _column(table, "sigma2", args.input)
        if t.size == 0 or np.any(t != np.arange(t.size)):
            raise ConfigError(f"{args.input}: t must run 0, 1, 2, ...")
        tmax = int(t[-1]) if args.tmax is None else args.tmax
        fit = powerlaw_fit(s2, args.tmin, tmax, args.sampling, args.offset)
        cols = ["beta", "log_intercept", "t_min", "t_max", "rms_residual"]
        return cols, [(fit.beta, fit.log_intercept, fit.t_min, fit.t_max, fit.rms_residual)], True
    q = _column(table, "q", args.input)
    beta = _column(table, "beta", args.input)
    if args.N is not None:
        keep = _column(table, "N", args.input) == args.N
        q, beta = q[keep], beta[keep]
    try:
        fit = sigmoid_fit(zip(q, beta), args.model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if fit.c is None:
        return ["model", "r", "eta", "rms"], [(fit.model, fit.r, fit.eta, fit.rms_residual)], True
    return (["model", "r", "eta", "c", "rms"],
            [(fit.model, fit.r, fit.eta, fit.c, fit.rms_residual)], True)


def cmd_beta_sweep(args):
    rows = beta_sweep(args.q, args.N, args.tmin, args.convention, args.sampling,
                      workers=args.workers or 1)
    return ["q", "N", "beta", "rms"], [(r.q, r.n, r.beta, r.fit.rms_residual) for r in rows], True


CHECK_COLUMNS = ["property", "t", "value", "bound", "passed"]


def _invariant_rows(d, n):
    series = msd_series(d, n)
    s2 = series.sigma2
    t = np.arange(s2.size, dtype=float)
    rows = []

    def add(name, at, value, bound):
        rows.append((name, at, float(value), float(bound), bool(value <= bound)))

    add("initial_zero", 0, abs(s2[0]), 0.0)
    drop = -np.diff(s2)
    k = int(np.argmax(drop))
    add("non_decreasing", k + 1, max(drop[k], 0.0), 1e-12)
    over = s2 - t
    k = int(np.argmax(over))
    add("at_most_t", k, max(over[k], 0.0), 1e-9)
    tails = d.tail_array(n + 2)[2:]         # tail(t+1) for t = 1..n
    prod = s2[1:] * tails
    k = int(np.argmax(prod))
    add("tail_bound", k + 1, prod[k], 1.0 + 1e-12)
    # increment recurrence, recomputed by FFT convolution
    p = d.pmf_array(n)
    inc = np.diff(s2)                        # inc[t] = sigma2[t+1] - sigma2[t]
    prev = np.concatenate([[0.0], inc[:-1]])  # Delta sigma2_{t} for t = 0..n-1
    conv = fftconvolve(p, prev)[:n]
    resid = np.abs(inc - (p + conv))
    k = int(np.argmax(resid))
    add("increment_recurrence", k, resid[k], 1e-10)
    add("unbounded", n, s2[n // 2] - s2[n], 0.0 if n >= 2 else math.inf)
    try:
        env = linear_bounds(d, n)
    except (InfiniteMean, ZeroEscape):
        return rows
    dev = s2 - env.diffusion * t
    tol = 1e-9 * (1.0 + np.abs(dev))
    lo = env.lower - dev - tol
    hi = dev - env.upper - tol
    k = int(np.argmax(lo))
    add("sandwich_lower", k, lo[k], 0.0)
    k = int(np.argmax(hi))
    add("sandwich_upper", k, hi[k], 0.0)
    return rows


def _default_alpha(d, alpha):
    if alpha is not None:
        return alpha
    if isinstance(d, PowerLawZeta):
        return d.q - 1.0
    raise ConfigError("--alpha is required unless the law is zeta:<q>")


def cmd_check(args):
    d = parse_spec(args.dist)
    if args.suite == "invariants":
        if args.tmax < 2:
            raise ConfigError("--tmax must be at least 2")
        rows = _invariant_rows(d, args.tmax)
        return CHECK_COLUMNS, rows, all(r[-1] for r in rows)
    cks = args.checkpoints or [256, 1024, 4096, 16384]
    if args.suite == "clt":
        rep = clt_check(d, cks, args.walkers, args.seed, args.alpha, args.workers)
        rows = [("sup_distance", t, v, None, True) for t, v in zip(rep.checkpoints, rep.sup_distance)]
        rows.append(("rate_fit", None, rep.rate_fit, rep.theoretical_rate, True))
        ok = len(cks) < 2 or rep.sup_distance[-1] < rep.sup_distance[0]
        rows.append(("decreasing", cks[-1], rep.sup_distance[-1], rep.sup_distance[0], ok))
        return CHECK_COLUMNS, rows, ok
    alpha = _default_alpha(d, args.alpha)
    if args.suite == "concentration":
        rep = concentration_check(d, alpha, cks, args.walkers, args.seed, args.workers)
        rows = [("skipped_h_ge_1", t, None, None, True) for t in rep.skipped]
        rows += [("violation_ratio", t, r, 20.0, r <= 20.0)
                 for t, r in zip(rep.checkpoints, rep.ratio)]
        return CHECK_COLUMNS, rows, all(r[-1] for r in rows)
    rep = heavy_tail_scaling_check(d, alpha, cks, args.walkers, args.seed, args.workers)
    bound = 3.0 / math.sqrt(args.walkers) + 0.01
    rows = [("symmetry_defect", t, v, bound, v <= bound)
            for t, v in zip(rep.checkpoints, rep.symmetry_defect)]
    rows += [("pairwise_distance", t, v, None, True)
             for t, v in zip(rep.checkpoints[1:], rep.pairwise_distance)]
    pw = rep.pairwise_distance
    if len(pw) >= 2:
        rows.append(("pairwise_shrinks", rep.checkpoints[-1], pw[-1], pw[0], pw[-1] < pw[0]))
    return CHECK_COLUMNS, rows, all(r[-1] for r in rows)


COMMANDS = {
    "msd": cmd_msd,
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "beta-sweep": cmd_beta_sweep,
    "check": cmd_check,
}


def run(argv):
    args = resolve(argv)
    if args.dump_config:
        _io.write_text(dump_config(args))
        return EXIT_OK
    columns, rows, ok = COMMANDS[args.subcommand](args)
    _io.write_text(_io.render_table(columns, list(rows), args.format), args.output)
    return EXIT_OK if ok else EXIT_PROPERTY


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return run(argv)
    except SystemExit as exc:
        # argparse reports usage errors with status 2 and --help with 0
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"trapwalk: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, FitDiverged) as exc:
        print(f"trapwalk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
