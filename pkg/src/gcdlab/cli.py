"""Command-line front end.

Exit status: 0 success, 1 bad parameters or usage, 2 invariant violation
(including a failing acceptance criterion under ``verify``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import numpy as np

from .numtheory import DomainError, ParameterError

EXIT_OK, EXIT_PARAM, EXIT_INVARIANT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARAM)


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def _fmt(v) -> str:
    # shortest round-trip repr is at most 17 significant digits
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _emit(args, config: dict, result: dict, rows: list[dict] | None = None):
    if args.format == "csv":
        rows = rows if rows is not None else [result]
        buf = io.StringIO()
        cols = list(rows[0].keys()) if rows else []
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(_clean(r[c])) if not isinstance(r[c], (list, dict))
                        else json.dumps(_clean(r[c])) for c in cols])
        _write(buf.getvalue(), args.output)
    else:
        doc = {"config": _clean(config), "result": _clean(result)}
        _write(json.dumps(doc, indent=2, allow_nan=False) + "\n", args.output)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sigma(args):
    from .numtheory import sigma
    ks = args.k
    rows = [{"s": args.s, "k": k, "sigma": sigma(args.s, k)} for k in ks]
    return {"values": rows}, rows


def _profile(name: str, alpha: float):
    from . import profiles
    if name == "sine":
        return profiles.sine_extremal(alpha)
    if name == "cosine":
        return profiles.cosine_extremal(alpha)
    if name == "bernoulli":
        return profiles.bernoulli()
    raise ParameterError(f"unknown profile {name!r}")


def _spec(args):
    from .gcd_spectra import GcdMatrixSpec
    if args.dilations:
        return GcdMatrixSpec(args.alpha, tuple(args.dilations))
    if args.n is None:
        raise ParameterError("give --n or --dilations")
    return GcdMatrixSpec.identity(args.alpha, args.n)


def cmd_eig(args):
    from .gcd_spectra import largest_eigenvalue, min_eigenvalue
    spec = _spec(args)
    r = largest_eigenvalue(spec, tol=args.tol, threads=args.threads)
    out = {"N": spec.N, **r.as_dict()}
    if args.min:
        m = min_eigenvalue(spec)
        out["min_eigenvalue"] = m.lam
        out["min_certified_interval"] = list(m.certified_interval)
    return out, [{k: v for k, v in out.items() if not isinstance(v, list)}]


def _coefficients(args, N):
    if args.coeffs:
        c = np.asarray(args.coeffs, dtype=float)
        if c.size != N:
            raise ParameterError(f"need {N} coefficients, got {c.size}")
        return c
    return np.random.default_rng(args.seed).normal(size=N)


def cmd_gcdsum(args):
    from .gcd_spectra import hilberdink_majorant, quadratic_form, tail_quadratic_form
    spec = _spec(args)
    c = _coefficients(args, spec.N)
    out = {"N": spec.N, "quadratic_form": quadratic_form(spec, c)}
    if not args.dilations:
        out["abs_quadratic_form"] = tail_quadratic_form(c, args.alpha, 1)
        out["hilberdink_majorant"] = hilberdink_majorant(c, args.alpha)
    return out, [out]


def cmd_norm(args):
    from .dilated import norm_squared, parseval_norm, quadrature_norm
    prof = _profile(args.profile, args.alpha)
    n = args.dilations
    if not n:
        raise ParameterError("--dilations is required")
    c = _coefficients(args, len(n))
    exact = norm_squared(prof, n, c)
    out = {"norm_squared": exact.as_dict()}
    J = args.J or max(2**14, max(n))
    out["parseval"] = parseval_norm(prof, n, c, J).as_dict()
    if args.quadrature:
        out["quadrature"] = quadrature_norm(prof, n, c)
    row = {"lower": exact.lower, "upper": exact.upper, "method": exact.method}
    return out, [row]


def cmd_franel(args):
    from .dilated import franel_exact
    if not 1 <= args.max <= 10_000:
        raise ParameterError("--max must lie in [1, 10^4]")
    rows = []
    for k in range(1, args.max + 1):
        for l in range(k, args.max + 1):
            rows.append({"k": k, "l": l, "value": franel_exact(k, l)})
    return {"count": len(rows), "values": rows}, rows


def cmd_extremal(args):
    from .extremal import divergence_partial_sums, th1_blocks, th2_construction, th2_weyl_mass
    if args.kind == "th1":
        con = th1_blocks(args.alpha, args.eps, args.i_max)
        mass = con.weyl_mass()
    else:
        con = th2_construction(args.alpha, args.beta, args.K1, args.i_max, args.delta)
        mass = th2_weyl_mass(con)
    ps = divergence_partial_sums(con, args.i_max)
    out = {"construction": con.to_json(), "partial_sums": ps, "weyl_mass": mass}
    rows = [{"i": i + 1, "partial_sum": v} for i, v in enumerate(ps)]
    return out, rows


def cmd_simulate(args):
    from .extremal import th2_construction
    from .simulate import SimulationConfig, run_simulation, sample_blocks
    con = th2_construction(args.alpha, args.beta, args.K1, args.i_max, args.delta)
    cfg = SimulationConfig(seed=args.seed, samples=args.samples, i_max=args.i_max,
                           grid_depth=args.grid_depth, quad_cells=args.quad_cells,
                           threads=args.threads)
    Ms = tuple(m for m in args.ms if m <= args.i_max) or (args.i_max,)
    if args.format == "csv":
        X, _ = sample_blocks(con, cfg)
        S = np.cumsum(X * np.asarray(con.d)[None, :X.shape[1]], axis=1)
        rows = [{"sample": j, **{f"S_{i + 1}": float(S[j, i]) for i in range(S.shape[1])}}
                for j in range(S.shape[0])]
        return {}, rows
    return run_simulation(con, cfg, Ms), None


def cmd_verify(args):
    from .acceptance import run_suite, summary_json
    results = run_suite(set(args.only) if args.only else None, stream=sys.stderr)
    text = summary_json(results)
    if args.output:
        _write(text + "\n", args.output)
    for r in results:
        print(r.line())
    if not all(r.passed for r in results):
        raise _VerifyFailed()
    return None, None


class _VerifyFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

# parameters that never change output and are left out of the config echo
_NOT_ECHOED = {"command", "func", "output", "config", "threads", "format"}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gcdlab", description="GCD sums, spectral norms and dilated series.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=True):
        sp.add_argument("--config", help="JSON file of parameters; flags override it")
        sp.add_argument("--output", "-o", help="output file (default stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("sigma", help="divisor sums sigma_s(k)")
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--k", type=_int_list, required=True, help="comma-separated k values")
    common(sp)
    sp.set_defaults(func=cmd_sigma)

    for name, fn, helptext in (("eig", cmd_eig, "largest (and smallest) eigenvalue"),
                               ("gcdsum", cmd_gcdsum, "GCD quadratic form and majorant")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--alpha", type=float, required=True)
        sp.add_argument("--n", type=int)
        sp.add_argument("--dilations", type=_int_list)
        if name == "eig":
            sp.add_argument("--tol", type=float, default=1e-10)
            sp.add_argument("--min", action="store_true", help="also the smallest eigenvalue")
        else:
            sp.add_argument("--coeffs", type=_float_list)
            sp.add_argument("--seed", type=int, default=0)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("norm", help="L2 norm of a dilated sum")
    sp.add_argument("--alpha", type=float, default=0.75)
    sp.add_argument("--profile", choices=("sine", "cosine", "bernoulli"), default="sine")
    sp.add_argument("--dilations", type=_int_list)
    sp.add_argument("--coeffs", type=_float_list)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--J", type=int)
    sp.add_argument("--quadrature", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_norm)

    sp = sub.add_parser("franel", help="exact Franel-Landau integrals")
    sp.add_argument("--max", type=int, default=30)
    common(sp)
    sp.set_defaults(func=cmd_franel)

    sp = sub.add_parser("extremal", help="block constructions")
    sp.add_argument("--kind", choices=("th1", "th2"), default="th1")
    sp.add_argument("--alpha", type=float, default=0.75)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--K1", type=float)
    sp.add_argument("--i-max", dest="i_max", type=int, default=10)
    common(sp)
    sp.set_defaults(func=cmd_extremal)

    sp = sub.add_parser("simulate", help="coupling and CLT diagnostics")
    sp.add_argument("--alpha", type=float, default=0.75)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--K1", type=float)
    sp.add_argument("--i-max", dest="i_max", type=int, default=16)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--grid-depth", dest="grid_depth", type=int)
    sp.add_argument("--quad-cells", dest="quad_cells", type=int, default=16)
    sp.add_argument("--ms", type=_int_list, default=[4, 8, 16])
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--suite", choices=("primary",), default="primary")
    sp.add_argument("--only", type=_int_list, help="criterion numbers to run")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_verify)
    return p


def _apply_config(parser, argv):
    """Pre-scan for --config and feed its keys in as subparser defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    subs = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in subs), None)
    if not known.config or command is None:
        return parser.parse_args(argv)
    try:
        with open(known.config) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ParameterError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ParameterError("config file must hold a JSON object")
    sub = subs[command]
    dests = {a.dest for a in sub._actions}
    unknown = set(cfg) - dests
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**cfg)
    for a in sub._actions:
        if a.dest in cfg:
            a.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if getattr(args, "seed", 0) is None:
            from .simulate import DEFAULT_SEED
            args.seed = DEFAULT_SEED
        if args.threads < 1:
            raise ParameterError("--threads must be >= 1")
        config = {"command": args.command}
        config.update({k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED})
        result, rows = args.func(args)
        if result is not None or rows is not None:
            _emit(args, config, result or {}, rows)
        return EXIT_OK
    except SystemExit as exc:
        return int(exc.code or 0)
    except _VerifyFailed:
        return EXIT_INVARIANT
    except AssertionError as exc:  # InvariantError derives from it
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ParameterError, DomainError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
