"""``freeholo`` command line front end.

Standard output carries JSON only; diagnostics go to standard error at the
level named by ``FREEHOLO_LOG`` (default WARNING).  Exit codes: 0 success,
1 usage or fixture error, 2 domain violation, 3 numerical failure,
4 property failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .domain import is_homogeneous_linear, is_member, sample_point
from .errors import FixtureError, FreeholoError, DomainError
from .expand import cauchy_certificate, dft_components, series_components
from .matcore import MatrixTuple, matrix_to_json, opnorm
from .ncharness import (Evaluator, check_algebra_membership, check_direct_sums, check_intertwining,
                        check_projection_lemma, check_series_equivalence, check_ssoc)
from .polyparse import parse_delta, parse_poly, print_poly
from .realization import Colligation, RealizedFunction, eval_exact, eval_neumann

log = logging.getLogger("freeholo")

ALL_SUITES = ("intertwining", "direct_sums", "projection_lemma", "series_equivalence",
              "ssoc", "algebra_membership")


class UsageError(FreeholoError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _load_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FixtureError(f"cannot read {what} fixture {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FixtureError(f"{what} fixture {path} is not valid JSON: {exc}") from exc


def _delta(args):
    if not args.delta:
        raise UsageError("--delta is required")
    return parse_delta(_load_json(args.delta, "delta"))


def _point(args):
    if not args.point:
        raise UsageError("--point is required")
    try:
        return MatrixTuple.from_json(_load_json(args.point, "point"))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FixtureError):
            raise
        raise FixtureError(f"bad point fixture: {exc}") from exc


def _realized(args, delta):
    if not args.colligation:
        raise UsageError("--colligation is required")
    col = Colligation.from_json(_load_json(args.colligation, "colligation"))
    return RealizedFunction(col, delta)


def _seed(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for randomized subcommands")
    return args.seed


def _outdir(args) -> Path | None:
    if not args.output:
        return None
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _emit(obj, args, name: str):
    text = json.dumps(obj, sort_keys=True)
    print(text)
    out = _outdir(args)
    if out is not None:
        (out / f"{name}.json").write_text(text + "\n", encoding="utf-8")


def cmd_eval(args) -> int:
    delta = _delta(args)
    F = _realized(args, delta)
    x = _point(args)
    member, nrm = is_member(delta, x)
    if not member:
        raise DomainError("point is outside the domain", norm=nrm)
    value = eval_exact(F, x)
    out = {"value": matrix_to_json(value), "norm": opnorm(value),
           "membership": {"member": True, "delta_norm": nrm}}
    if args.neumann is not None:
        rep = eval_neumann(F, x, args.neumann)
        out["neumann"] = {"terms_used": rep.terms_used, "q": rep.q, "tail_bound": rep.tail_bound,
                          "error": opnorm(rep.value - value), "value": matrix_to_json(rep.value)}
    _emit(out, args, "eval")
    return 0


def cmd_expand(args) -> int:
    delta = _delta(args)
    F = _realized(args, delta)
    K = args.degree
    series = series_components(F, K)
    out = series.to_json()
    out["printed"] = [print_poly(P) for P in series.components]
    rows = []
    if args.point:
        x = _point(args)
        sym = series.evaluate(x)
        dft = dft_components(F, x, K, N=args.nodes)
        out["dft"] = {"radius": dft.radius, "nodes": dft.nodes, "aliasing": dft.aliasing,
                      "relative_gap": [opnorm(a - b) / max(1.0, opnorm(b)) for a, b in zip(dft.components, sym)]}
        if is_homogeneous_linear(delta) or args.balanced_certified:
            nrm = is_member(delta, x)[1]
            if nrm > 0:
                r = min(4.0, 0.999 / nrm)
                if r > 1:
                    cert = cauchy_certificate(F, x, r, K=K, components=sym)
                    out["cauchy"] = {"M": cert.M, "r": cert.r, "passed": cert.passed}
        exact = eval_exact(F, x)
        partial = np.cumsum(np.array(sym), axis=0)
        rows = [(k, opnorm(sym[k]), opnorm(exact - partial[k])) for k in range(K + 1)]
        out["partial_sum_error"] = [r[2] for r in rows]
    out_dir = _outdir(args)
    if out_dir is not None and rows:
        _write_csv(out_dir / "expand_curve.csv", ["k", "component_norm", "partial_sum_error"], rows)
    _emit(out, args, "expand")
    return 0


def _evaluator(args, delta):
    if args.poly:
        return Evaluator.polynomial(parse_poly(args.poly, delta.nvars), delta)
    return Evaluator.realized(_realized(args, delta))


def cmd_proptest(args) -> int:
    delta = _delta(args)
    seed = _seed(args)
    F = _evaluator(args, delta)
    suites = args.suite or list(ALL_SUITES)
    common = {"trials": args.trials, "seed": seed, "tol": args.tol}
    balanced = is_homogeneous_linear(delta) or args.balanced_certified
    rng = np.random.default_rng(seed)
    reports = []
    for name in suites:
        log.info("running suite %s", name)
        if name == "intertwining":
            rep = check_intertwining(F, cond_cap=args.cond_cap, workers=args.threads, **common)
        elif name == "direct_sums":
            rep = check_direct_sums(F, cond_cap=args.cond_cap, workers=args.threads, **common)
        elif name == "projection_lemma":
            rep = check_projection_lemma(F, workers=args.threads, **common)
        elif name == "series_equivalence":
            if not balanced:
                log.warning("series_equivalence skipped: delta is not balanced-certified")
                continue
            rep = check_series_equivalence(F, trials=min(args.trials, 50), seed=seed, tol=args.tol,
                                           workers=args.threads)
        elif name == "ssoc":
            x = sample_point(delta, args.dim, rng, shrink=args.shrink, decay=0.2)
            rep = check_ssoc(F, x, tol=max(args.tol, 1e-6), seed=seed)
        elif name == "algebra_membership":
            x = sample_point(delta, min(args.dim, 3), rng, shrink=args.shrink)
            rep = check_algebra_membership(F, x, tol=args.tol)
        else:  # argparse restricts choices
            raise UsageError(f"unknown suite {name}")
        log.info("suite %s: %s (max residual %.3e)", name, rep.verdict, rep.max_residual)
        reports.append(rep)
    out_dir = _outdir(args)
    if out_dir is not None:
        for rep in reports:
            if rep.suite == "ssoc":
                _write_csv(out_dir / "ssoc_curve.csv", ["k", "error"],
                           zip(rep.details["dims"], rep.details["errors"]))
            if rep.suite == "algebra_membership":
                _write_csv(out_dir / "algebra_curve.csv", ["m", "distance", "rank"],
                           zip(rep.details["degrees"], rep.details["distances"], rep.details["ranks"]))
    passed = all(r.passed for r in reports)
    _emit({"reports": [r.to_json() for r in reports], "verdict": "pass" if passed else "fail"},
          args, "proptest")
    return 0 if passed else 4


def cmd_parse(args) -> int:
    p = parse_poly(args.text, args.nvars)
    out = {"canonical": print_poly(p), "nvars": p.nvars, "degree": p.degree()}
    _emit(out, args, "parse")
    return 0


def cmd_sample(args) -> int:
    delta = _delta(args)
    rng = np.random.default_rng(_seed(args))
    pts = [sample_point(delta, args.dim, rng, shrink=args.shrink) for _ in range(args.count)]
    out_dir = _outdir(args)
    if out_dir is not None:
        for i, x in enumerate(pts):
            (out_dir / f"point_{i}.json").write_text(json.dumps(x.to_json(), sort_keys=True) + "\n",
                                                    encoding="utf-8")
    print(json.dumps([x.to_json() for x in pts], sort_keys=True))
    return 0


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--delta", help="delta fixture (JSON)")
    shared.add_argument("--colligation", help="colligation fixture (JSON)")
    shared.add_argument("--point", help="matrix tuple fixture (JSON)")
    shared.add_argument("--seed", type=int, help="seed for all randomness")
    shared.add_argument("--trials", type=_positive(int), default=200)
    shared.add_argument("--tol", type=_positive(float), default=1e-8)
    shared.add_argument("--output", help="directory for JSON and CSV outputs")
    shared.add_argument("--threads", type=_positive(int), default=1, help="worker cap for trials")
    shared.add_argument("--shrink", type=float, default=0.5, help="target ||delta(x)|| of samples")
    shared.add_argument("--cond-cap", type=_positive(float), default=50.0)
    shared.add_argument("--degree", type=int, default=8, help="highest homogeneous degree K")
    shared.add_argument("--nodes", type=_positive(int), help="DFT nodes N")
    shared.add_argument("--balanced-certified", action="store_true",
                        help="assert that the domain is balanced")

    parser = _Parser(prog="freeholo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("eval", parents=[shared], help="evaluate a realization at a point")
    p.add_argument("--neumann", type=int, metavar="M", help="also report an M-term Neumann sum")
    p.set_defaults(func=cmd_eval)
    p = sub.add_parser("expand", parents=[shared], help="homogeneous expansion of a realization")
    p.set_defaults(func=cmd_expand)
    p = sub.add_parser("proptest", parents=[shared], help="run randomized property suites")
    p.add_argument("--suite", action="append", choices=ALL_SUITES)
    p.add_argument("--poly", help="test a polynomial evaluator instead of a colligation")
    p.add_argument("--dim", type=_positive(int), default=6, help="sample size for pointwise suites")
    p.set_defaults(func=cmd_proptest)
    p = sub.add_parser("parse", parents=[shared], help="print a polynomial in canonical form")
    p.add_argument("text")
    p.add_argument("--nvars", type=_positive(int))
    p.set_defaults(func=cmd_parse)
    p = sub.add_parser("sample", parents=[shared], help="sample points of a domain")
    p.add_argument("--dim", type=_positive(int), default=2)
    p.add_argument("--count", type=_positive(int), default=1)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    level = logging.getLevelName(os.environ.get("FREEHOLO_LOG", "WARNING").upper())
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="freeholo: %(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if not 0 < args.shrink < 1:
            raise UsageError("--shrink must lie in (0, 1)")
        if args.degree < 0:
            raise UsageError("--degree must be non-negative")
        return args.func(args)
    except FreeholoError as exc:
        print(f"freeholo: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
