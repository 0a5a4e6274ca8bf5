"""Command-line front end.

Exit codes: 0 success, 1 a verified claim failed (only with ``--verify``),
2 usage or input error.  Structured output goes to stdout (or ``--out``),
diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import constructions as cx
from . import moments
from .gram import (DEFAULT_BUDGET, SingularSpanError, dist_to_span_det, dist_to_span_proj,
                   gram, n_weak_separation, pseudo_distance, riesz_bounds)
from .kernels import KernelError, _cx_json, as_points, construct
from .linalg import TOL_PSD, psd_check
from .pick import PickProblem, pick_matrix, separation_epsilon

log = logging.getLogger("rkhs_sep")

EXIT_OK, EXIT_CLAIM, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return _cx_json(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _load_json_arg(value: str):
    """Inline JSON, or a path to a JSON file."""
    text = value.strip()
    if text[:1] in "[{\"" or text in ("null", "true", "false"):
        return json.loads(text)
    try:
        float(text)
        return json.loads(text)
    except ValueError:
        pass
    path = Path(value)
    if not path.exists():
        raise UsageError(f"no such file: {value}")
    return json.loads(path.read_text())


def _kernel_and_points(args, need_points=True):
    doc = _load_json_arg(args.points) if getattr(args, "points", None) else None
    spec = None
    if args.kernel_file:
        spec = json.loads(Path(args.kernel_file).read_text())
    elif args.kernel:
        spec = args.kernel
    elif isinstance(doc, dict) and "kernel" in doc:
        spec = doc["kernel"]
    if spec is None:
        raise UsageError("a kernel is required (--kernel, --kernel-file, or a 'kernel' key in --points)")
    k = construct(spec)
    pts = None
    if need_points:
        if doc is None:
            raise UsageError("--points is required")
        raw = doc["points"] if isinstance(doc, dict) else doc
        pts = as_points(raw, k.dim)
    return k, pts


# -- subcommands -----------------------------------------------------------------

def cmd_gram(args):
    k, pts = _kernel_and_points(args)
    g = gram(k, pts, normalized=not args.raw)
    lo, hi = riesz_bounds(g)
    psd = psd_check(g.entries, args.tol_psd)
    payload = g.to_json()
    payload.update({"min_eig": lo, "max_eig": hi, "is_psd": psd.is_psd})
    rows = [{"i": i, "j": j, "re": float(z.real), "im": float(z.imag)}
            for i, row in enumerate(g.entries) for j, z in enumerate(row)]
    return payload, rows, EXIT_OK


def _parse_span(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --span {text!r}") from None


def cmd_distance(args):
    k, pts = _kernel_and_points(args)
    g = gram(k, pts)
    npts = g.size
    if args.anchor is None:
        rows = [{"i": i, "j": j, "distance": pseudo_distance(k, pts[i], pts[j])}
                for i in range(npts) for j in range(i + 1, npts)]
        return {"kernel_id": g.kernel_id, "pairs": rows}, rows, EXIT_OK
    if not 0 <= args.anchor < npts:
        raise UsageError(f"--anchor {args.anchor} out of range")
    span = _parse_span(args.span) if args.span else [i for i in range(npts) if i != args.anchor]
    if any(not 0 <= s < npts for s in span):
        raise UsageError("--span index out of range")
    try:
        det = dist_to_span_det(g, args.anchor, span)
    except SingularSpanError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        det = None
    proj = dist_to_span_proj(g, args.anchor, span)
    payload = {"kernel_id": g.kernel_id, "anchor": args.anchor, "span": span,
               "dist_det": det, "dist_proj": proj}
    return payload, [{"anchor": args.anchor, "span": " ".join(map(str, span)),
                      "dist_det": det, "dist_proj": proj}], EXIT_OK


def cmd_separation(args):
    k, pts = _kernel_and_points(args)
    rep = n_weak_separation(k, pts, args.n, budget=args.budget)
    if rep.partial:
        print(f"warning: budget {args.budget} exhausted; results are partial", file=sys.stderr)
    payload = rep.to_json()
    rows = [{"n": lv["n"], "eps": lv["eps"], "anchor": lv["witness"]["anchor"],
             "span": " ".join(map(str, lv["witness"]["span"])), "partial": lv["partial"]}
            for lv in payload["levels"]]
    return payload, rows, EXIT_OK


def cmd_pick(args):
    doc = _load_json_arg(args.points) if args.points else None
    if not isinstance(doc, dict):
        doc = {"points": doc}
    if args.kernel or args.kernel_file:
        spec = json.loads(Path(args.kernel_file).read_text()) if args.kernel_file else args.kernel
        doc.setdefault("s", spec)
        doc.setdefault("ell", spec)
    if args.ell:
        doc["ell"] = args.ell
    if args.targets:
        doc["targets"] = _load_json_arg(args.targets)
    if args.M is not None:
        doc["M"] = args.M
    for key in ("s", "ell", "points"):
        if doc.get(key) is None:
            raise UsageError(f"pick problem is missing {key!r}")
    if doc.get("targets") is None:
        doc["targets"] = [0.0] * len(doc["points"])
    prob = PickProblem.from_json(doc)
    a = pick_matrix(prob)
    res = psd_check(a, args.tol_psd)
    eps = None
    if args.anchor is not None:
        if not 0 <= args.anchor < prob.points.shape[0]:
            raise UsageError(f"--anchor {args.anchor} out of range")
        eps = separation_epsilon(prob.s, prob.ell, prob.points, args.anchor)
    payload = {"is_psd": res.is_psd, "min_eig": res.min_eig, "eps_max": eps}
    return payload, [payload], EXIT_OK


def _build_case(args) -> cx.ConstructionCase:
    which = args.which
    if which == "thm8":
        return cx.gen_thm8(args.n or 3, args.packets, args.rho)
    if which == "roots-of-unity":
        return cx.gen_roots_of_unity(args.n or 4, args.radius_mode)
    if which == "bidisk":
        return cx.gen_bidisk(args.jmax)
    if which == "rho-relation":
        z = [complex(t) for t in args.z] if args.z else [0.3, 0.5j, complex(-0.4, 0.2)]
        return cx.gen_rho_relation(z)
    raise UsageError(f"unknown construction {which!r}")


def _write_case_files(out_dir: Path, case, report):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "case.json").write_text(dumps(case.to_json()))
    if report is not None:
        (out_dir / "report.json").write_text(dumps(report.to_json()))
        (out_dir / "report.md").write_text(report.to_markdown())


def _report_result(case, verify_flag):
    report = cx.verify(case)
    rows = [{"claim": c.name, "passed": c.passed, "value": c.value, "threshold": c.threshold}
            for c in report.claims]
    code = EXIT_CLAIM if (verify_flag and not report.passed) else EXIT_OK
    return report, rows, code


def cmd_counterexample(args):
    case = _build_case(args)
    if not args.verify:
        if args.case_dir:
            _write_case_files(Path(args.case_dir), case, None)
        payload = case.to_json()
        rows = [dict(label, point=" ".join(f"{x:.17g}" for x in pt))
                for label, pt in zip(case.labels, payload["points"])]
        return payload, rows, EXIT_OK
    report, rows, code = _report_result(case, True)
    if args.case_dir:
        _write_case_files(Path(args.case_dir), case, report)
    return report.to_json(), rows, code, report


def cmd_report(args):
    doc = _load_json_arg(args.case)
    if not isinstance(doc, dict) or "case" not in doc or "params" not in doc:
        raise UsageError("--case must be a case.json document")
    case = cx.generate(doc["case"], doc["params"])
    report, rows, code = _report_result(case, args.verify)
    if args.case_dir:
        _write_case_files(Path(args.case_dir), case, report)
    return report.to_json(), rows, code, report


def cmd_moments(args):
    table = moments.get_table(moments.WEIGHT_ID, args.n_max, args.tol, rebuild=args.rebuild)
    payload = table.summary()
    payload["cache_path"] = str(moments.cache_path(table.weight, table.n_max, table.tol))
    payload.pop("backend", None)
    rows = [{"n": n, "log_c": float(table.log_c[n]), "rel_err": float(table.rel_err[n])}
            for n in range(min(table.n_max + 1, args.rows))]
    return payload, rows, EXIT_OK


# -- output ------------------------------------------------------------------------

def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (json.dumps(v, default=_json_default) if isinstance(v, (list, dict)) else v)
                         for k, v in r.items()})
    return buf.getvalue()


def _markdown(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        lines.append("| " + " | ".join(cx._fmt(r[c]) for c in cols) + " |")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rkhs-sep", description="Separation analysis for reproducing kernels.")
    p.add_argument("--cache-dir", help="moment cache directory (overrides $RKHS_SEP_CACHE)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, points=True):
        sp.add_argument("--kernel", help="kernel shorthand (szego, dirichlet, fock, bergman) or inline JSON")
        sp.add_argument("--kernel-file", help="path to a kernel JSON file")
        if points:
            sp.add_argument("--points", required=True,
                            help="JSON file or inline JSON: list of points or {kernel, points}")
        sp.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--tol-psd", type=float, default=TOL_PSD)

    sp = sub.add_parser("gram", help="normalized Gram matrix")
    common(sp)
    sp.add_argument("--raw", action="store_true", help="do not normalize")
    sp.set_defaults(func=cmd_gram)

    sp = sub.add_parser("distance", help="pseudometric or distance to a span")
    common(sp)
    sp.add_argument("--anchor", type=int)
    sp.add_argument("--span", help="comma-separated indices (default: all others)")
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("separation", help="n-weak separation constants")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.set_defaults(func=cmd_separation)

    sp = sub.add_parser("pick", help="Pick matrix positivity and extremal eps")
    common(sp)
    sp.add_argument("--ell", help="target kernel when it differs from --kernel")
    sp.add_argument("--targets", help="JSON list of complex targets ([re, im] pairs or reals)")
    sp.add_argument("--anchor", type=int)
    sp.add_argument("--M", type=float)
    sp.set_defaults(func=cmd_pick)

    sp = sub.add_parser("counterexample", help="generate (and verify) a built-in construction")
    sp.add_argument("which", choices=("thm8", "roots-of-unity", "bidisk", "rho-relation"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--packets", type=int, default=12)
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--radius-mode", choices=cx.RADIUS_MODES, default="paper-constant")
    sp.add_argument("--jmax", type=int, default=cx.BIDISK_DEFAULT_JMAX)
    sp.add_argument("--z", nargs="+", help="test points for rho-relation (Python complex literals)")
    sp.add_argument("--verify", action="store_true")
    sp.add_argument("--case-dir", help="write case.json, report.json and report.md here")
    sp.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("report", help="replay a case.json and verify its claims")
    sp.add_argument("--case", required=True, help="case.json path")
    sp.add_argument("--verify", action="store_true")
    sp.add_argument("--case-dir")
    sp.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("moments", help="build or inspect the moment table")
    sp.add_argument("--n-max", type=int, default=moments.DEFAULT_N_MAX)
    sp.add_argument("--tol", type=float, default=moments.DEFAULT_TOL)
    sp.add_argument("--rebuild", action="store_true")
    sp.add_argument("--rows", type=int, default=20, help="rows shown in csv/markdown output")
    sp.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_moments)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.cache_dir:
        os.environ[moments.CACHE_ENV] = args.cache_dir
    if getattr(args, "tol_psd", 1.0) <= 0:
        print("error: --tol-psd must be positive", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "budget", 1) <= 0:
        print("error: --budget must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = args.func(args)
    except (UsageError, KernelError, ValueError, KeyError, IndexError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    payload, rows, code = result[:3]
    report = result[3] if len(result) > 3 else None
    if args.format == "json":
        text = dumps(payload)
    elif args.format == "csv":
        text = _csv(rows)
    else:
        text = report.to_markdown() if report is not None else _markdown(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
