"""Command-line front end.

Every subcommand prints a JSON document (default) with a reproducibility
header: the full configuration, the artifact version, and the command.  CSV
and plain-table renderings are available for tabular payloads.  Exit codes:
0 success, 2 for mathematically honest "undecidable at this precision" or
"inconclusive" outcomes, 1 for errors (including malformed series specs).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

import mpmath
from mpmath import mp

from . import __version__
from .bigreal import (
    DEFAULT_PREC,
    BoundedSeriesError,
    UndecidableAtPrecision,
    mpf_to_triple,
)
from .certify import InconclusiveError, certify_unbounded, recheck
from .exactnum import format_rational, parse_rational
from .series import (
    SeriesSpec,
    SignRule,
    evaluate,
    l1_norm,
    series_from_json,
    series_to_json,
    sup_norm_estimate,
)
from . import series as _series_mod
from .shift import (
    kernel_test,
    left_extend,
    peano_membership,
    resolvent_solve,
    shift as shift_op,
)
from .turan import (
    estimate_chi,
    half_chain_audit,
    sign_runs,
    theta_psi_retry,
    threshold_audit,
    threshold_solve,
)
from .topology import counterexample_suite, density_demo, erratum_report
from . import bell as bell_mod

SCHEMA_POINTER = (
    'series spec schema: {"rule": "theta", "rho": "1/3" | {"sqrt": "1/2"}, '
    '"signs": "all_plus" | "alternating" | {"explicit": [...]} | '
    '{"hash_seed": n}} | {"rule": "gaussian", "lam": "1", "m": 0} | '
    '{"rule": "sin" | "cos" | "bell_egf"} | {"rule": "sin_scaled" | '
    '"exp_neg_2m" | "exp_neg_half_2m" | "exp_neg_sq_over_m", "m": 1} | '
    '{"rule": "explicit", "coeffs": ["1", "1/2", ...]} | '
    '{"rule": "poly_gaussian", "poly": [...], "n": 1} | '
    '{"rule": "shifted", "k": 1, "inner": {...}}; all rationals are '
    'decimal strings "p/q"'
)


class _Parser(argparse.ArgumentParser):
    # usage problems are errors (exit 1); exit 2 stays reserved for honest
    # inconclusive/undecidable outcomes
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _digits(prec: int) -> int:
    return max(17, int(prec * 0.30103) - 2)


def _num(x, prec: int):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, (int, str)):
        return x
    if x is None:
        return None
    if isinstance(x, float):
        return repr(x)
    if x == mpmath.inf:
        return "inf"
    return mp.nstr(x, _digits(prec))


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--precision", type=int, default=DEFAULT_PREC,
                   help="working precision in bits (default 256)")
    p.add_argument("--trunc", type=int, default=64,
                   help="series truncation index where applicable")
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized sweeps (recorded in the header)")


def _series_flags(p: argparse.ArgumentParser):
    p.add_argument("--spec-json", default=None,
                   help="series spec as inline JSON or @file")
    p.add_argument("--family", default=None,
                   choices=("theta", "gaussian", "poly_gaussian", "sin", "cos",
                            "sin_scaled", "exp_neg_2m", "exp_neg_half_2m",
                            "exp_neg_sq_over_m", "bell_egf", "explicit"))
    p.add_argument("--rho", default=None, help="theta rho as p/q")
    p.add_argument("--rho-sqrt", default=None,
                   help="theta rho as sqrt(p/q), e.g. --rho-sqrt 1/2")
    p.add_argument("--signs", default="all_plus",
                   help="all_plus | alternating | hash:SEED | comma signs like +,-,+")
    p.add_argument("--lam", default="1", help="gaussian lambda as p/q")
    p.add_argument("--m", type=int, default=1, help="family parameter m")
    p.add_argument("--n-param", type=int, default=1, help="poly_gaussian n")
    p.add_argument("--poly", default=None, help="comma-separated rationals")
    p.add_argument("--coeffs", default=None, help="comma-separated rationals")
    p.add_argument("--shift-k", type=int, default=0,
                   help="apply the backward shift k times to the spec")


def _parse_signs(text: str) -> SignRule:
    if text in ("all_plus", "alternating"):
        return SignRule(text)
    if text.startswith("hash:"):
        return SignRule("hash", int(text[5:]))
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok in ("+", "+1", "1"):
            vals.append(1)
        elif tok in ("-", "-1"):
            vals.append(-1)
        else:
            raise ValueError(f"bad sign token {tok!r}")
    return SignRule("explicit", vals)


def _build_series(args) -> SeriesSpec:
    if args.spec_json:
        text = args.spec_json
        if text.startswith("@"):
            with open(text[1:], "r") as fh:
                text = fh.read()
        try:
            obj = json.loads(text)
            s = series_from_json(obj)
        except (ValueError, KeyError, json.JSONDecodeError) as e:
            raise BoundedSeriesError(f"malformed series spec ({e}); {SCHEMA_POINTER}")
    elif args.family:
        f = args.family
        if f == "theta":
            signs = _parse_signs(args.signs)
            if args.rho_sqrt:
                s = _series_mod.theta_series(rho2=parse_rational(args.rho_sqrt), signs=signs)
            elif args.rho:
                s = _series_mod.theta_series(rho=parse_rational(args.rho), signs=signs)
            else:
                raise BoundedSeriesError("theta needs --rho or --rho-sqrt")
        elif f == "gaussian":
            s = _series_mod.gaussian(parse_rational(args.lam), args.m)
        elif f == "poly_gaussian":
            if not args.poly:
                raise BoundedSeriesError("poly_gaussian needs --poly")
            poly = [parse_rational(t) for t in args.poly.split(",")]
            s = _series_mod.poly_gaussian(poly, args.n_param)
        elif f == "sin":
            s = _series_mod.sin_series()
        elif f == "cos":
            s = _series_mod.cos_series()
        elif f == "sin_scaled":
            s = _series_mod.sin_scaled(args.m)
        elif f == "exp_neg_2m":
            s = _series_mod.exp_neg_2m(args.m)
        elif f == "exp_neg_half_2m":
            s = _series_mod.exp_neg_half_2m(args.m)
        elif f == "exp_neg_sq_over_m":
            s = _series_mod.exp_neg_sq_over_m(args.m)
        elif f == "bell_egf":
            s = _series_mod.bell_egf()
        elif f == "explicit":
            if args.coeffs is None:
                raise BoundedSeriesError("explicit needs --coeffs")
            s = _series_mod.explicit([parse_rational(t) for t in args.coeffs.split(",")])
        else:  # pragma: no cover
            raise BoundedSeriesError(f"unknown family {f}")
    else:
        raise BoundedSeriesError(
            f"no series given: pass --spec-json or --family; {SCHEMA_POINTER}"
        )
    if args.shift_k:
        s = shift_op(s, args.shift_k)
    return s


def _emit(args, command: str, result, rows=None, row_fields=None):
    header = {
        "artifact": "boundedseries",
        "version": __version__,
        "command": command,
        "config": {
            "precision": args.precision,
            "trunc": args.trunc,
            "format": args.format,
            "seed": args.seed,
            "parallel": args.parallel,
            "args": {k: v for k, v in sorted(vars(args).items())
                     if k not in ("func",) and v is not None},
        },
    }
    if args.format == "json" or rows is None:
        doc = dict(header)
        doc["result"] = result
        text = json.dumps(doc, indent=2, default=str) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        for k, v in (("artifact", header["artifact"]), ("version", header["version"]),
                     ("command", command), ("precision", args.precision),
                     ("seed", args.seed)):
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(row_fields)
        for r in rows:
            w.writerow(r)
        text = buf.getvalue()
    else:  # table
        widths = [len(str(h)) for h in row_fields]
        srows = [[str(c) for c in r] for r in rows]
        for r in srows:
            for i, c in enumerate(r):
                widths[i] = max(widths[i], len(c))
        lines = ["  ".join(str(h).ljust(w) for h, w in zip(row_fields, widths))]
        for r in srows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_analyze(args):
    s = _build_series(args)
    prec = args.precision
    N0 = max(1, args.window_start)
    M0 = args.window_end if args.window_end is not None else max(N0 + 1, args.trunc)
    prof = estimate_chi(s, N0, M0, prec)
    result = {
        "series": series_to_json(s),
        "chi": _num(prof.chi, prec),
        "chi_exact": (_num(prof.chi_exact, prec)
                      if isinstance(prof.chi_exact, Fraction) else
                      (str(prof.chi_exact) if prof.chi_exact is not None else None)),
        "window": [prof.N, prof.window_end],
        "argmax_n": prof.argmax_n,
        "zero_indices": prof.zero_indices,
        "center_zero_indices": prof.center_zero_indices,
    }
    chi_for_tp = prof.chi_exact if isinstance(prof.chi_exact, Fraction) else None
    if chi_for_tp is not None and 0 < chi_for_tp < 1:
        tp = theta_psi_retry(chi_for_tp, prec)
        result["theta"] = "inf" if tp.theta == math.inf else tp.theta
        result["psi"] = tp.psi
        result["Theta_sum"] = _num(tp.Theta_sum, prec)
        result["Psi_sum"] = _num(tp.Psi_sum, prec)
    else:
        result["theta"] = None
        result["psi"] = None
        result["note"] = "theta/psi need an exact chi in (0, 1)"
    runs = sign_runs(s, 0, M0)
    result["sign_runs"] = [[r.start, r.length, r.sign] for r in runs.runs]
    rows = [[r.start, r.length, r.sign] for r in runs.runs]
    _emit(args, "analyze", result, rows, ["start", "length", "sign"])
    return 0


def _cmd_thresholds(args):
    prec = args.precision
    if args.audit:
        rep = threshold_audit(prec, Fraction(parse_rational(args.tol)))
        _emit(args, "thresholds", rep)
        return 0
    r = threshold_solve(args.predicate, (parse_rational(args.lo), parse_rational(args.hi)),
                        parse_rational(args.tol), prec)
    chain = half_chain_audit(prec) if args.predicate == "theta_ge_2_and_psi_le_1" else None
    result = {
        "predicate": r.predicate_name,
        "chi_star": format_rational(r.chi_star),
        "chi_star_decimal": mp.nstr(mpmath.mpf(r.chi_star.numerator) / r.chi_star.denominator, 12),
        "bracket": [format_rational(r.bracket[0]), format_rational(r.bracket[1])],
        "tolerance": format_rational(r.tolerance),
        "iterations": r.iterations,
    }
    if chain:
        result["half_chain_audit"] = {k: (v if not isinstance(v, mpmath.mpf) else _num(v, prec))
                                      for k, v in chain.items()}
    _emit(args, "thresholds", result)
    return 0


def _cmd_certify(args):
    prec = args.precision
    if args.recheck:
        with open(args.recheck) as fh:
            doc = fh.read()
        ok, reasons = recheck(doc, explain=True)
        _emit(args, "certify", {"recheck": ok, "reasons": reasons})
        return 0 if ok else 2
    s = _build_series(args)
    chi = parse_rational(args.chi) if args.chi else None
    if chi is None:
        chi0 = s.turan_global()
        if chi0 is None:
            raise BoundedSeriesError("pass --chi (no rule-global constant available)")
        chi = chi0
    cert = certify_unbounded(s, chi, parse_rational(args.target), prec,
                             branch=args.branch, assert_turan=args.assert_turan)
    doc = cert.to_json()
    ok = recheck(cert)
    _emit(args, "certify", {"certificate": doc, "recheck": ok,
                            "witness_count": len(cert.witnesses)})
    return 0 if ok else 2


def _cmd_shift(args):
    s = _build_series(args)
    prec = args.precision
    result = {"series": series_to_json(s)}
    rows = None
    fields = None
    if args.peano is not None:
        sched = None
        if args.schedule:
            sched = [parse_rational(t) for t in args.schedule.split(",")]
        pr = peano_membership(s, args.peano, schedule=sched, tol=args.tol, prec=prec)
        result["peano"] = {
            "k": pr.k,
            "accepted": pr.accepted,
            "stage_rejected": pr.stage_rejected,
            "coefficients": [_num(c, prec) for c in pr.coefficients],
            "growth_exponent": _num(pr.growth_exponent, prec),
            "note": pr.note,
        }
        rows = [[_num(y, prec), _num(r, prec)] for y, r in pr.remainder_samples]
        fields = ["y", "abs_remainder"]
    elif args.extend is not None:
        ext = left_extend(s, parse_rational(args.extend), prec=prec)
        result["left_extend"] = {
            "constant": args.extend,
            "apparently_bounded": ext.apparently_bounded,
            "growth_exponent": _num(ext.growth_exponent, prec),
            "samples": [[_num(x, prec), _num(v, prec)] for x, v in ext.samples],
            "note": ext.note,
        }
        rows = [[_num(x, prec), _num(v, prec)] for x, v in ext.samples]
        fields = ["x", "abs_value"]
    else:
        ks = args.k if args.k is not None else 1
        sh = shift_op(s, ks)
        coeffs = [sh.coeff(n) for n in range(args.trunc + 1)]
        result["shift"] = {
            "k": ks,
            "coefficients": [_num(c, prec) if isinstance(c, (Fraction, int)) else str(c)
                             for c in coeffs],
            "kernel_test": kernel_test(sh),
        }
        rows = [[n, _num(c, prec) if isinstance(c, (Fraction, int)) else str(c)]
                for n, c in enumerate(coeffs)]
        fields = ["n", "coefficient"]
    _emit(args, "shift", result, rows, fields)
    return 0


def _cmd_resolvent(args):
    s = _build_series(args)
    prec = args.precision
    lam = args.lam_value
    if "," in lam:
        re_s, im_s = lam.split(",")
        from .exactnum import QC

        lam_v = QC(parse_rational(re_s), parse_rational(im_s))
    else:
        lam_v = parse_rational(lam)
    sol = resolvent_solve(s, lam_v, args.trunc, prec)
    result = {
        "lambda": lam,
        "f0": _num(sol.f0, prec),
        "f0_error": _num(sol.f0_error, prec),
        "residual_max": _num(sol.residual_max, prec),
        "N": sol.N,
        "working_precision": sol.working_prec,
        "evaluated_off_real_axis": sol.evaluated_off_real_axis,
        "coefficients": [_num(c, prec) for c in sol.coefficients],
    }
    rows = [[n, _num(c, prec)] for n, c in enumerate(sol.coefficients)]
    _emit(args, "resolvent", result, rows, ["n", "f_n"])
    return 0


def _cmd_topology(args):
    prec = args.precision
    ms = list(range(args.m_lo, args.m_hi + 1))
    if args.mode == "suite":
        reports = counterexample_suite(ms, prec, K=args.circle_points,
                                       parallel=args.parallel)
        result = []
        rows = []
        for r in reports:
            result.append({
                "family": r.family, "m": r.m, "limit": r.limit,
                "l1_distance_to_limit": _num(r.l1_distance_to_limit, prec),
                "l1_closed_form": r.l1_exact_note,
                "supR_distance_lower": _num(r.supR_distance_lower, prec),
                "compact_sup": {k: _num(v, prec) for k, v in r.compact_sup.items()},
                "pointwise_probe": r.pointwise_probe,
                "notes": r.notes,
            })
            rows.append([r.family, r.m, _num(r.l1_distance_to_limit, prec),
                         _num(r.supR_distance_lower, prec)])
        _emit(args, "topology", result, rows,
              ["family", "m", "l1_distance", "supR_lower"])
    elif args.mode == "density":
        lams = [parse_rational(t) for t in args.lambdas.split(",")]
        rowsd = density_demo(args.m_lo, lams, parse_rational(args.radius), prec,
                             K=args.circle_points, parallel=args.parallel)
        result = [{
            "lambda": format_rational(r.lam),
            "l1_exact": _num(r.l1_exact, prec),
            "l1_series": _num(r.l1_series, prec),
            "compact_bound": _num(r.compact_bound, prec),
            "sampled_sup": _num(r.sampled_sup, prec),
            "sampled_le_bound": r.sampled_le_bound,
        } for r in rowsd]
        rows = [[format_rational(r.lam), _num(r.l1_exact, prec),
                 _num(r.compact_bound, prec), _num(r.sampled_sup, prec),
                 r.sampled_le_bound] for r in rowsd]
        _emit(args, "topology", result, rows,
              ["lambda", "l1_exact", "compact_bound", "sampled_sup", "ok"])
    else:  # erratum
        rep = erratum_report(ms, prec)
        _emit(args, "topology", rep)
    return 0


def _cmd_bell(args):
    prec = args.precision
    N = args.n
    seq = bell_mod.complementary_bell(N)
    zeros = [n for n, v in enumerate(seq.values) if v == 0]
    profile, records = bell_mod.bell_sign_runs(N)
    ratio_rows, undefined = bell_mod.turan_ratio_table(min(N - 1, N))
    result = {
        "N": N,
        "values": [str(v) for v in seq.values],
        "wilf_zeros": zeros,
        "sign_runs": [[r.start, r.length, r.sign] for r in profile.runs],
        "record_runs": [[r.start, r.length, r.sign] for r in records],
        "turan_ratio_undefined_at": undefined,
        "turan_ratios": [
            {"n": r.n, "ratio": format_rational(r.ratio),
             "running_max": format_rational(r.running_max),
             "running_min": format_rational(r.running_min)}
            for r in ratio_rows
        ],
    }
    ratio_by_n = {r.n: r for r in ratio_rows}
    rows = []
    run_id = {}
    for i, r in enumerate(profile.runs):
        for n in range(r.start, r.start + r.length):
            run_id[n] = i
    for n, v in enumerate(seq.values):
        rr = ratio_by_n.get(n)
        rows.append([n, str(v), (v > 0) - (v < 0), run_id.get(n, ""),
                     format_rational(rr.ratio) if rr else ""])
    _emit(args, "bell", result, rows, ["n", "b_n", "sign", "run_id", "turan_ratio"])
    return 0


def _cmd_eval(args):
    s = _build_series(args)
    prec = args.precision
    x = args.x
    if "," in x:
        from .exactnum import QC

        re_s, im_s = x.split(",")
        xv = QC(parse_rational(re_s), parse_rational(im_s))
    else:
        xv = parse_rational(x)
    r = evaluate(s, xv, args.trunc, prec)
    result = {
        "x": x,
        "N": r.N,
        "value": _num(r.value, prec),
        "error": _num(r.error, prec),
        "certified": r.certified,
        "note": r.note,
        "value_triple": mpf_to_triple(r.value) if not isinstance(r.value, mpmath.mpc) else None,
    }
    _emit(args, "eval", result)
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boundedseries",
                description="analysis of power series bounded on the real line")
    sub = p.add_subparsers(dest="cmd", required=True)

    pa = sub.add_parser("analyze", help="concavity profile, theta/psi, sign runs")
    _common_flags(pa)
    _series_flags(pa)
    pa.add_argument("--window-start", type=int, default=1)
    pa.add_argument("--window-end", type=int, default=None)
    pa.set_defaults(func=_cmd_analyze)

    pt = sub.add_parser("thresholds", help="bisection for named chi predicates")
    _common_flags(pt)
    pt.add_argument("--predicate", default="psi_eq_0",
                    choices=("psi_eq_0", "theta_ge_2_and_psi_le_1", "theta_ge_2psi"))
    pt.add_argument("--lo", default="0.1")
    pt.add_argument("--hi", default="0.3")
    pt.add_argument("--tol", default="1e-6")
    pt.add_argument("--audit", action="store_true",
                    help="run all shipped predicates and the reference comparison")
    pt.set_defaults(func=_cmd_thresholds)

    pc = sub.add_parser("certify", help="emit or recheck unboundedness certificates")
    _common_flags(pc)
    _series_flags(pc)
    pc.add_argument("--chi", default=None, help="concavity constant as p/q")
    pc.add_argument("--target", default="1000000", help="threshold M")
    pc.add_argument("--branch", default=None,
                    choices=("long-run", "short-runs", "complex-psi0"))
    pc.add_argument("--assert-turan", action="store_true",
                    help="assert the concavity hypothesis beyond the verified range")
    pc.add_argument("--recheck", default=None, help="certificate JSON file to verify")
    pc.set_defaults(func=_cmd_certify)

    ps = sub.add_parser("shift", help="backward shift, membership, left extension")
    _common_flags(ps)
    _series_flags(ps)
    ps.add_argument("--k", type=int, default=None, help="shift exponent")
    ps.add_argument("--peano", type=int, default=None,
                    help="test membership in the k-th shift range")
    ps.add_argument("--extend", default=None, help="left-extension constant")
    ps.add_argument("--schedule", default=None, help="comma-separated sample points")
    ps.add_argument("--tol", type=float, default=0.1)
    ps.set_defaults(func=_cmd_shift)

    pr = sub.add_parser("resolvent", help="solve sigma f - lambda f = g")
    _common_flags(pr)
    _series_flags(pr)
    pr.add_argument("--lam-value", default="1",
                    help="lambda as p/q or re,im")
    pr.set_defaults(func=_cmd_resolvent)

    po = sub.add_parser("topology", help="inequivalence suite, density demo, erratum")
    _common_flags(po)
    po.add_argument("--mode", choices=("suite", "density", "erratum"), default="suite")
    po.add_argument("--m-lo", type=int, default=1)
    po.add_argument("--m-hi", type=int, default=4)
    po.add_argument("--lambdas", default="1/100,1/10")
    po.add_argument("--radius", default="2")
    po.add_argument("--circle-points", type=int, default=1024)
    po.set_defaults(func=_cmd_topology)

    pb = sub.add_parser("bell", help="complementary Bell sequence analytics")
    _common_flags(pb)
    pb.add_argument("--n", type=int, default=10)
    pb.set_defaults(func=_cmd_bell)

    pe = sub.add_parser("eval", help="certified evaluation")
    _common_flags(pe)
    _series_flags(pe)
    pe.add_argument("--x", default="1", help="evaluation point as p/q or re,im")
    pe.set_defaults(func=_cmd_eval)

    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UndecidableAtPrecision, InconclusiveError) as e:
        payload = {"outcome": "inconclusive", "message": str(e)}
        diag = getattr(e, "diagnostics", None)
        if diag:
            payload["diagnostics"] = diag
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return 2
    except BoundedSeriesError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except (ValueError, OSError, ZeroDivisionError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
