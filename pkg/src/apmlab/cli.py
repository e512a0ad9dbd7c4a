"""Command-line frontend.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  All output is
deterministic: CSV floats use 17 significant digits and JSON is written with
sorted keys.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ApmError, ChartEscape, ConvergenceError, DomainError, UnsupportedClass, ValidationError
from .model import load_model

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# parsing helpers ------------------------------------------------------------------------


def parse_int_range(text: str) -> list[int]:
    """'A:B' -> [A, ..., B] (inclusive)."""
    try:
        a, b = (int(t) for t in text.split(":"))
    except ValueError as exc:
        raise ValidationError(f"malformed range {text!r}; expected A:B") from exc
    if b < a:
        raise ValidationError(f"empty range {text!r}")
    return list(range(a, b + 1))


def parse_float_grid(text: str) -> np.ndarray:
    """'A:B:STEP' -> grid from A to B inclusive; 'A' -> single value."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ValidationError(f"malformed grid {text!r}; expected A:B:STEP") from exc
    if len(vals) == 1:
        return np.array(vals)
    if len(vals) != 3:
        raise ValidationError(f"malformed grid {text!r}; expected A:B:STEP")
    a, b, step = vals
    if step <= 0 or b < a:
        raise ValidationError(f"empty grid {text!r}")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    # rounding keeps exact decimal grid points such as M = -1 and M = 3
    return np.round(a + step * np.arange(n), 12)


def parse_window(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    try:
        a, b = (float(t) for t in text.split(":")[:2])
    except ValueError as exc:
        raise ValidationError(f"malformed window {text!r}; expected A:B") from exc
    if b <= a:
        raise ValidationError(f"empty window {text!r}")
    return a, b


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(header: list[str], rows: list[list], out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    _emit(buf.getvalue(), out)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(obj, out: str | None) -> None:
    _emit(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n", out)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("APM_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fun, items):
    """Ordered map over items, using up to APM_THREADS worker threads."""
    n = threads()
    if n == 1:
        return [fun(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fun, items))


def _model(args):
    if not args.model:
        raise ValidationError("--model PATH is required")
    return load_model(args.model)


# subcommands ---------------------------------------------------------------------------


def cmd_classify(args) -> None:
    from .semilocal import compute_profile

    prof = compute_profile(_model(args))
    write_json(prof.to_dict(), args.out)


def cmd_henon(args) -> None:
    from .henon import analyze_nonorientable, analyze_orientable

    grid = parse_float_grid(args.m)
    header = ["M", "orbit", "x", "y", "trace", "stability", "psi", "tags"]
    rows = []
    for M in grid:
        M = float(M)
        an = analyze_orientable(M, args.cubic) if args.orientable else analyze_nonorientable(M)
        tags = ";".join(an.tags)
        for p in an.fixed_points:
            rows.append([M, "fixed", p.point[0], p.point[1], p.trace, p.stability.value, p.psi, tags])
        for c in an.two_cycles:
            for q in c.points:
                rows.append([M, "cycle2", q[0], q[1], c.trace, c.stability.value, c.psi, tags])
        if not an.fixed_points and not an.two_cycles:
            rows.append([M, "none", None, None, None, None, None, tags])
    if args.json:
        write_json([dict(zip(header, r)) for r in rows], args.out)
    else:
        write_csv(header, rows, args.out)


def cmd_cascade(args) -> None:
    from .bif import cascade_interval

    model = _model(args)
    ks = parse_int_range(args.k)
    window = parse_window(args.mu)
    lam = abs(model.lam)
    intervals = _parallel_map(lambda k: cascade_interval(model, k), ks)
    header = ["k", "kind", "mu_minus_det", "mu_plus_det", "mu_minus_formula", "mu_plus_formula",
              "res_pi2", "res_2pi3", "res_acos14", "pass"]
    rows = []
    spans = [iv.detected for iv in intervals]
    for n, iv in enumerate(intervals):
        if window is not None and iv.detected is not None:
            iv.complete &= window[0] <= iv.detected[0] and iv.detected[1] <= window[1]
        res = {tag: mu for tag, mu, _ in iv.resonance_mus}
        budget = args.budget * iv.k * lam ** (3 * iv.k)
        ok = iv.complete and iv.endpoint_error <= budget and iv.resonances_interior()
        for m, other in enumerate(spans):
            if m != n and other is not None and iv.detected is not None:
                ok &= iv.detected[1] < other[0] or other[1] < iv.detected[0]
        rows.append([
            iv.k, iv.kind, iv.mu_minus_detected, iv.mu_plus_detected, iv.mu_minus_formula,
            iv.mu_plus_formula, res.get("pi/2"), res.get("2pi/3"), res.get("acos(-1/4)"), ok,
        ])
    if args.json:
        write_json([dict(zip(header, r)) for r in rows], args.out)
    else:
        write_csv(header, rows, args.out)
    if not all(r[-1] for r in rows):
        raise CliError("some cascade intervals failed their checks", EXIT_NUMERIC)


def cmd_diagram(args) -> None:
    from .bif import bif_curves

    model = _model(args)
    ks = parse_int_range(args.k)
    lam = abs(model.lam)
    if args.alpha is None:
        a = lam ** ks[0]
        alphas = np.linspace(-a, a, 41)
    else:
        alphas = parse_float_grid(args.alpha)
    samples = bif_curves(model, ks, alphas)
    header = ["k", "curve_tag", "alpha_kind", "alpha", "mu"]
    rows = [[s.k, s.curve_tag, s.alpha_kind, s.alpha, s.mu] for s in samples]
    if args.json:
        write_json([dict(zip(header, r)) for r in rows], args.out)
    else:
        write_csv(header, rows, args.out)
    if args.svg:
        _diagram_svg(samples, args.svg)


def _diagram_svg(samples, path: str) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        matplotlib.rcParams["svg.hashsalt"] = "apmlab"
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ValidationError("--svg needs matplotlib") from exc
    fig, ax = plt.subplots(figsize=(6, 4.5))
    curves = {}
    for s in samples:
        curves.setdefault((s.k, s.curve_tag), []).append((s.mu, s.alpha))
    for (k, tag), pts in sorted(curves.items()):
        mu, al = zip(*pts)
        ax.plot(mu, al, lw=0.8, label=f"{tag} k={k}")
    ax.set_xlabel("mu")
    ax.set_ylabel(samples[0].alpha_kind if samples else "alpha")
    ax.axhline(0, color="0.7", lw=0.5)
    ax.axvline(0, color="0.7", lw=0.5)
    ax.legend(fontsize=5, ncol=2)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_rescale_check(args) -> None:
    from .rescale import rescaled_Tk

    model = _model(args)
    ks = parse_int_range(args.k)
    lam = abs(model.lam)
    maps = _parallel_map(lambda k: rescaled_Tk(model, k, args.ball), ks)
    header = ["k", "nu1", "nu2", "M", "cubic_coeff", "residual", "budget", "pass", "xy_coeff"]
    rows = []
    for r in maps:
        budget = args.budget * r.k * lam**r.k
        rows.append([r.k, r.nu1, r.nu2, r.M, r.cubic_coeff, r.residual_bound, budget,
                     r.residual_bound <= budget, r.xy_coeff])
    if args.json:
        write_json([dict(zip(header, r)) for r in rows], args.out)
    else:
        write_csv(header, rows, args.out)


def cmd_symbolic(args) -> None:
    from .semilocal import (
        SymbolCode, admissible_code, calibrate_s1, code_to_orbit, compute_profile, default_k_bar,
        intersection_classify,
    )

    model = _model(args)
    if not args.code:
        raise ValidationError("--code is required")
    code = SymbolCode.parse(args.code)
    prof = compute_profile(model)
    k_bar = args.k_bar if args.k_bar is not None else min(code.blocks)
    report = {"profile": prof.to_dict(), "blocks": list(code.blocks), "k_bar": k_bar}
    try:
        report["admissible"] = admissible_code(prof, code, k_bar, model.glob.x_plus, model.glob.y_minus)
    except UnsupportedClass as exc:
        report["admissible"] = None
        report["unsupported"] = str(exc)
    if args.s1 is not None or args.calibrate:
        kb = default_k_bar(model)
        s1 = args.s1 if args.s1 is not None else calibrate_s1(model, kb)
        report["S1"] = s1
        report["pairs"] = []
        for j, i in code.pairs():
            if min(i, j) < kb:
                continue
            sp = intersection_classify(model, i, j, s1, kb)
            report["pairs"].append({"j": j, "i": i, "verdict": sp.verdict.value,
                                    "lemma_margin": sp.lemma_margin, "threshold": sp.threshold})
    if args.verify:
        report["orbits"] = code_to_orbit(model, code).to_dict()
    write_json(report, args.out)


def cmd_nf_reduce(args) -> None:
    from .jets import load_jetmap, normal_form_reduce

    if not args.model:
        raise ValidationError("--model PATH (a jet JSON file) is required")
    F = load_jetmap(args.model)
    res = normal_form_reduce(F, args.n)
    out = res.to_dict() if args.full else {
        "betas": res.betas, "tilde_betas": res.tilde_betas, "nonresonant_residual": res.nonresonant_residual,
    }
    write_json(out, args.out)


# entry point --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apmlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", metavar="PATH")
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--json", action="store_true", help="JSON instead of CSV")
        return sp

    common(sub.add_parser("classify", help="invariants and class of the tangency"))
    sp = common(sub.add_parser("henon", help="fixed points and 2-cycles of the limit Henon maps"), model=False)
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--orientable", dest="orientable", action="store_true", default=True)
    grp.add_argument("--non-orientable", dest="orientable", action="store_false")
    sp.add_argument("--m", default="-1.5:3.5:0.01", metavar="A:B:STEP")
    sp.add_argument("--cubic", type=float, default=0.0)
    sp = common(sub.add_parser("cascade", help="cascade intervals of elliptic orbits"))
    sp.add_argument("--k", default="6:14", metavar="A:B")
    sp.add_argument("--mu", metavar="A:B", help="mu window; intervals outside are incomplete")
    sp.add_argument("--budget", type=float, default=1.0, help="C in the C k |lam|^(3k) endpoint budget")
    sp = common(sub.add_parser("diagram", help="bifurcation curves in the (mu, alpha) plane"))
    sp.add_argument("--k", default="6:10", metavar="A:B")
    sp.add_argument("--alpha", metavar="A:B:STEP")
    sp.add_argument("--svg", metavar="PATH")
    sp = common(sub.add_parser("rescale-check", help="distance of rescaled T_k to the Henon map"))
    sp.add_argument("--k", default="6:14", metavar="A:B")
    sp.add_argument("--ball", type=float, default=2.0)
    sp.add_argument("--budget", type=float, default=1.0, help="C in the C k |lam|^k residual budget")
    sp = common(sub.add_parser("symbolic", help="admissibility of a block code and orbit search"))
    sp.add_argument("--code", metavar="K1,K2,...")
    sp.add_argument("--k-bar", type=int, dest="k_bar")
    sp.add_argument("--s1", type=float)
    sp.add_argument("--calibrate", action="store_true", help="calibrate S1 and classify the code's pairs")
    sp.add_argument("--verify", action="store_true", help="search the orbits by multi-shooting")
    sp = common(sub.add_parser("nf-reduce", help="Birkhoff-Moser reduction of a saddle jet"))
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--full", action="store_true", help="include the reduced map and the change")
    return p


COMMANDS = {
    "classify": cmd_classify,
    "henon": cmd_henon,
    "cascade": cmd_cascade,
    "diagram": cmd_diagram,
    "rescale-check": cmd_rescale_check,
    "symbolic": cmd_symbolic,
    "nf-reduce": cmd_nf_reduce,
}


RANGE_OPTIONS = ("--m", "--mu", "--alpha", "--k")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Rewrite '--m -1.5:3.5:0.01' as '--m=-1.5:3.5:0.01' so argparse accepts negative ranges."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if tok in RANGE_OPTIONS and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"apmlab: {exc}", file=sys.stderr)
        return exc.code
    except (ValidationError, DomainError, UnsupportedClass, OSError) as exc:
        print(f"apmlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ChartEscape, ConvergenceError, ApmError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"apmlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
