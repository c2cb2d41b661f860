"""Command-line front end.

Every number leaving the CLI is tagged: exact values are written as "p/q",
approximate ones as a decimal together with the number of certified digits.
Exit status is 0 on success, 2 on usage errors and 1 when a computation
fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .numerics import PrecReal, format_rational, rationalize, to_fraction

FORMATS = ("text", "csv", "json")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    precision: int = 30
    N: int = 2000
    support: str = "-1/16,1/256"
    cache_dir: str | None = None
    seed: int = 0
    fmt: str = "text"

    def __post_init__(self):
        from .density import SupportInterval
        if self.precision < 30:
            raise UsageError("precision must be at least 30 digits")
        if self.N < 2:
            raise UsageError("N must be at least 2")
        s = SupportInterval.parse(self.support)
        if not s.a < s.b:
            raise UsageError("support needs a < b")
        if self.fmt not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}")


# ---------------------------------------------------------------- tagging

def tag(v, digits: int | None = None) -> dict:
    """{"exact": "p/q"} or {"approx": "...", "certified_digits": d}."""
    if isinstance(v, (Fraction, int)):
        return {"exact": format_rational(Fraction(v))}
    if isinstance(v, PrecReal):
        d = v.certified_digits
        if d == v.precision and v.error == 0:
            return {"approx": v.to_string(v.precision), "certified_digits": d}
        shown = max(d or 0, 1) if digits is None else digits
        return {"approx": v.to_string(shown), "certified_digits": d or 0}
    return {"approx": repr(float(v)), "certified_digits": digits or 0}


def tag_text(v) -> str:
    t = tag(v)
    if "exact" in t:
        return t["exact"]
    return f"{t['approx']} [{t['certified_digits']} digits]"


def _flatten(t: dict) -> tuple[str, str, str]:
    if "exact" in t:
        return t["exact"], "exact", ""
    d = t["certified_digits"]
    return t["approx"], "approx", "" if d is None else str(d)


class Output:
    """Collects rows or a document and renders it in the requested format."""

    def __init__(self, fmt: str):
        self.fmt = fmt

    def table(self, header: list[str], rows: list[list], summary: dict | None = None) -> str:
        if self.fmt == "json":
            doc = {"columns": header, "rows": [[_json_cell(c) for c in r] for r in rows]}
            if summary:
                doc["summary"] = summary
            return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_csv_cell(c) for c in r])
        if summary and self.fmt == "text":
            for key in sorted(summary):
                buf.write(f"# {key}: {summary[key]}\n")
        return buf.getvalue()

    def document(self, doc: dict) -> str:
        if self.fmt == "json":
            return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=1) + "\n"
        if self.fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["field", "value", "kind", "certified_digits"])
            for key in sorted(doc):
                v = doc[key]
                if isinstance(v, dict) and ("exact" in v or "approx" in v):
                    w.writerow([key, *_flatten(v)])
                else:
                    w.writerow([key, json.dumps(v, ensure_ascii=False), "", ""])
            return buf.getvalue()
        lines = []
        for key in sorted(doc):
            v = doc[key]
            if isinstance(v, dict) and ("exact" in v or "approx" in v):
                val, kind, d = _flatten(v)
                v = val if kind == "exact" else f"{val} [{d} digits]"
            lines.append(f"{key}: {v}")
        return "\n".join(lines) + "\n"


def _json_cell(c):
    if isinstance(c, (Fraction, PrecReal)):
        return tag(c)
    return c


def _csv_cell(c):
    if isinstance(c, Fraction):
        return format_rational(c)
    if isinstance(c, PrecReal):
        return tag_text(c)
    return c


# ---------------------------------------------------------------- commands

def _alpha(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse alpha {text!r}")


def cmd_moments(args, cfg: RunConfig) -> str:
    from .moments import moment_sequence, pt_moment_hs
    a = _alpha(args.alpha)
    if args.kind == "pt":
        if args.k != 0:
            raise UsageError("--kind pt is defined for k = 0 only")
        rows = [[n, pt_moment_hs(a, n)] for n in range(args.count + 1)]
    else:
        seq = moment_sequence(args.k, a, args.count)
        rows = [[n, v] for n, v in enumerate(seq.values)]
    return Output(cfg.fmt).table(["n", "moment"], rows)


def cmd_estimate(args, cfg: RunConfig) -> str:
    from .cache import Cache
    from .density import SupportInterval, estimate_probability
    cache = Cache.from_env(cfg.cache_dir)
    support = SupportInterval.parse(cfg.support)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = estimate_probability(args.k, _alpha(args.alpha), cfg.N, support, precision=args.digits,
                                   c=Fraction(args.threshold), mode=args.mode, cache=cache)
    doc = {"k": args.k, "alpha": args.alpha, "N": cfg.N, "support": str(support),
           "value": tag(est.value), "half_degree_value": tag(est.half_degree_value, 12),
           "tail_indicator": tag(est.tail_indicator, 3)}
    if est.extrapolated is not None:
        doc["extrapolated"] = tag(est.extrapolated)
    r = est.rationalized(args.max_den)
    doc["rationalized"] = tag(r) if r is not None else None
    return Output(cfg.fmt).document(doc)


def cmd_closed_form(args, cfg: RunConfig) -> str:
    from . import closedforms as cf
    if args.kind == "rebit":
        return Output(cfg.fmt).document({"k": args.k, "rebit_total_prob": tag(cf.rebit_total_prob(args.k))})
    a = _alpha(args.alpha)
    if args.kind == "term":
        v = cf.concise_term(args.k, a, cfg.precision)
    else:
        v = cf.concise_Q(args.k, a, cfg.precision)
    doc = {"k": args.k, "alpha": format_rational(a), args.kind: tag(v)}
    if isinstance(v, PrecReal):
        r = rationalize(v, args.max_den)
        if r is not None:
            doc["rationalized"] = tag(r)
    return Output(cfg.fmt).document(doc)


def cmd_g1(args, cfg: RunConfig) -> str:
    from .closedforms import g1
    v = g1(args.k, _alpha(args.alpha), convention=args.convention, precision=cfg.precision)
    return _scalar(v, cfg, "g1")


def cmd_params(args, cfg: RunConfig) -> str:
    from .closedforms import ParameterSet, m_count
    ps = ParameterSet.for_k(args.k)
    compact = lambda p: str(p).replace(" ", "")
    doc = {"k": args.k, "upper": ", ".join(compact(u) for u in ps.upper),
           "lower": ", ".join(compact(b) for b in ps.lower), "m": m_count(args.k)}
    if cfg.fmt == "text":
        return f"upper: {doc['upper']}\nlower: {doc['lower']}\nm: {doc['m']}\n"
    return Output(cfg.fmt).document(doc)


def cmd_q(args, cfg: RunConfig) -> str:
    from .recurrence import q_from_recurrence
    a = _alpha(args.alpha)
    if a.denominator != 1:
        raise UsageError("q needs an integer alpha; use estimate for other values")
    return _scalar(q_from_recurrence(args.k, int(a)), cfg, "q")


def _read_points(path: str) -> list[tuple[Fraction, Fraction]]:
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    pts = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            pts.append((Fraction(row[0].strip()), Fraction(row[1].strip())))
        except (ValueError, IndexError):
            if pts:
                raise UsageError(f"bad row {row!r}")
    return pts


def _equation_doc(eq) -> dict:
    return {"p0": str(eq.p0), "p1": str(eq.p1), "p2": str(eq.p2),
            "degrees": [eq.p0.degree, eq.p1.degree, eq.p2.degree]}


def cmd_guess(args, cfg: RunConfig) -> str:
    from .recurrence import g2_points, guess_first_order
    if args.input:
        pts = _read_points(args.input)
    else:
        pts = g2_points(args.k, list(range(1, args.count + 1)))
    eq = guess_first_order(pts, args.max_degree, holdout=args.holdout, k=args.k)
    if eq is None:
        raise RuntimeError(f"no equation of degree <= {args.max_degree}")
    return Output(cfg.fmt).document({"k": args.k, "points": len(pts), **_equation_doc(eq)})


def cmd_fit_ansatz(args, cfg: RunConfig) -> str:
    from .recurrence import fit_ansatz, g2_points
    pts = g2_points(args.k, list(range(1, 4 + args.holdout)))
    fit = fit_ansatz(args.k, pts[:3], pts[3:])
    doc = {"k": args.k, "c0": tag(fit.c0), "c1": tag(fit.c1), "c2": tag(fit.c2),
           "holdout_points": args.holdout, "exceptions": list(fit.exception_flags),
           **_equation_doc(fit.equation)}
    return Output(cfg.fmt).document(doc)


def cmd_mc(args, cfg: RunConfig) -> str:
    from .montecarlo import mc_estimate
    e = mc_estimate(args.k, args.field, args.samples, cfg.seed, workers=args.workers)
    d = e.to_json()
    # sampling estimates carry a standard error but no certified digits
    stat = lambda v, se: {"approx": repr(v), "certified_digits": 0, "standard_error": repr(se)}
    doc = {"k": e.k, "field": e.field, "n_samples": e.n_samples, "seed": e.seed,
           "implication_violations": e.implication_violations,
           "d_min": stat(e.d_min, 0.0), "d_max": stat(e.d_max, 0.0)}
    for name in ("p_d_positive", "p_pt_positive", "mean_det_pt", "mean_det_rho"):
        doc[name] = stat(d[name], d[name + "_se"])
    for n, (v, se) in enumerate(zip(e.d_moments, e.d_moments_se), 1):
        doc[f"d_moment_{n}"] = stat(v, se)
    return Output(cfg.fmt).document(doc)


def cmd_study(args, cfg: RunConfig) -> str:
    from . import asymptotics as asy
    if args.name == "ratio":
        r = asy.ratio_study_alpha(args.k, args.max, cfg.precision)
    elif args.name == "rebit":
        r = asy.rebit_loglog_study(args.max, max(cfg.precision, 50))
    elif args.name == "logratio":
        r = asy.log_ratio_study(args.max, max(cfg.precision, 50))
    else:
        r = asy.unit_slope_study(_alpha(args.alpha), args.max, "exact", cfg.precision)
    rows = [[x, y] for x, y in r.table]
    return Output(cfg.fmt).table(["x", "y"], rows, r.summary())


def cmd_rationalize(args, cfg: RunConfig) -> str:
    digits = args.digits
    if digits is None:
        digits = sum(ch.isdigit() for ch in args.value.lstrip("+-0.").split("e")[0])
    v = PrecReal.from_digits(args.value, digits)
    r = rationalize(v, args.max_den)
    if r is None:
        raise RuntimeError("no rational with denominator <= max-den inside the error ball")
    return _scalar(r, cfg, "rational")


def cmd_figure(args, cfg: RunConfig) -> str:
    if args.name == "dual":
        from .asymptotics import rebit_loglog_study
        r = rebit_loglog_study(args.k_max if args.k_max > 4 else 200)
        return Output(cfg.fmt).table(["k", "log_minus_log_p"], [[x, y] for x, y in r.table], r.summary())
    from .recurrence import q_exact_sequence
    import mpmath
    ks = list(range(args.k_min, min(args.k_max, 4) + 1))
    cols = {k: q_exact_sequence(k, args.alpha_max) for k in ks}
    rows = []
    for a in range(args.alpha_min, args.alpha_max + 1):
        row: list = [a]
        for k in ks:
            q = cols[k][a - 1]
            if args.name == "log":
                with mpmath.workdps(cfg.precision + 10):
                    row.append(PrecReal(mpmath.log(mpmath.mpf(q.numerator) / q.denominator), cfg.precision,
                                        mpmath.mpf(10) ** -cfg.precision))
            else:
                row.append(q)
        rows.append(row)
    return Output(cfg.fmt).table(["alpha"] + [f"k={k}" for k in ks], rows)


def _scalar(v, cfg: RunConfig, name: str) -> str:
    if cfg.fmt == "text":
        return tag_text(v) + "\n"
    return Output(cfg.fmt).document({name: tag(v)})


# ---------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--format", dest="fmt", choices=FORMATS, default=argparse.SUPPRESS)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--precision", type=int, default=argparse.SUPPRESS, help="working digits (>= 30)")
    common.add_argument("--cache-dir", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    p = _Parser(prog="sepkit", description="Separability probability toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=func)
        return sp

    sp = add("moments", cmd_moments, "exact moments of D (or of |rho^PT| for k = 0)")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--alpha", default="1")
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--kind", choices=("d", "pt"), default="d")

    sp = add("estimate", cmd_estimate, "P(D > c) by the Legendre moment method")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--alpha", default="1")
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--support", default=argparse.SUPPRESS, help="a,b")
    sp.add_argument("--digits", type=int, default=8, help="requested certified digits")
    sp.add_argument("--threshold", default="0")
    sp.add_argument("--mode", choices=("auto", "exact", "float"), default="auto")
    sp.add_argument("--max-den", type=int, default=10**6)

    sp = add("closed-form", cmd_closed_form, "concise formulas and the rebit total probability")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--alpha", default="1")
    sp.add_argument("--kind", choices=("q", "term", "rebit"), default="q")
    sp.add_argument("--max-den", type=int, default=10**6)

    sp = add("g1", cmd_g1, "the Pochhammer-ratio prefactor")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--alpha", default="1")
    sp.add_argument("--convention", choices=("shifted", "literal"), default="shifted")

    sp = add("params", cmd_params, "upper and lower hypergeometric parameters")
    sp.add_argument("--k", type=int, default=0)

    sp = add("q", cmd_q, "exact Q(k, alpha) at integer alpha")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--alpha", default="1")

    sp = add("guess", cmd_guess, "guess a first-order recurrence from exact values")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--input", help="CSV of alpha,value rows ('-' for stdin); default: exact G2 values")
    sp.add_argument("--count", type=int, default=85)
    sp.add_argument("--max-degree", type=int, default=20)
    sp.add_argument("--holdout", type=int, default=5)

    sp = add("fit-ansatz", cmd_fit_ansatz, "fit the structured recurrence ansatz")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--holdout", type=int, default=2)

    sp = add("mc", cmd_mc, "Monte Carlo estimates")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--field", choices=("real", "complex"), default="complex")
    sp.add_argument("--samples", type=int, default=10**6)
    sp.add_argument("--workers", type=int, default=1)

    sp = add("study", cmd_study, "asymptotic studies")
    sp.add_argument("name", choices=("ratio", "rebit", "logratio", "unitslope"))
    sp.add_argument("--k", type=int, default=-1)
    sp.add_argument("--max", type=int, default=101, help="alpha_max or k_max")
    sp.add_argument("--alpha", default="1")

    sp = add("rationalize", cmd_rationalize, "recover a fraction from a decimal")
    sp.add_argument("--value", required=True)
    sp.add_argument("--digits", type=int, help="correct significant digits (default: all given)")
    sp.add_argument("--max-den", type=int, default=10**6)

    sp = add("figure", cmd_figure, "plot data as CSV")
    sp.add_argument("name", choices=("raw", "log", "dual"))
    sp.add_argument("--alpha-min", type=int, default=1)
    sp.add_argument("--alpha-max", type=int, default=10)
    sp.add_argument("--k-min", type=int, default=-1)
    sp.add_argument("--k-max", type=int, default=4)
    return p


CONFIG_KEYS = {"precision": int, "N": int, "support": str, "cache_dir": str, "seed": int, "fmt": str}


def read_config(path: str) -> dict:
    out = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = {"format": "fmt", "cache-dir": "cache_dir", "n": "N"}.get(key, key).replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{i}: unknown key {key!r}; valid: {', '.join(CONFIG_KEYS)}")
        out[key] = CONFIG_KEYS[key](val)
    return out


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        settings = read_config(args.config) if args.config else {}
        for key in CONFIG_KEYS:
            if hasattr(args, key):
                settings[key] = getattr(args, key)
        cfg = RunConfig(**settings)
    except UsageError as e:
        print(f"sepkit: usage error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"sepkit: usage error: {e}", file=sys.stderr)
        return 2
    try:
        text = args.func(args, cfg)
    except UsageError as e:
        print(f"sepkit: usage error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # computation errors carry the module's message
        print(f"sepkit: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
