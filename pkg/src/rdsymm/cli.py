"""Command-line interface.

    rdsymm verify <system.json> <generator.json>
    rdsymm canon <matrix.json>
    rdsymm commutator <X.json> <Y.json>
    rdsymm corpus run [--table N ...] [--item K ...] [--m M ...] [--seed S]
                      [--json out.json] [--mode symbolic|witness|both]
    rdsymm equiv apply <system.json> <transform.json>

Exit codes: 0 all pass, 1 verification failures, 2 usage or parse errors.

System files: {"m": 2, "family": {"kind": "triangular", "a": "1"} |
{"kind": "drift", "p": "1"}, "f1": "...", "f2": "...",
"params": {"name": "value" | "free"}, "constraints": ["expr", ...]}.
Generator files: {"eta": "...", "xi": ["...", ...], "pi": ["...", "..."]}.
Matrix files: 3x3 array of expression strings in the N pattern.
Transform files: {"kind": "linear" | "aet" | "vshift" | "vshift_full",
"params": {...}}.
"""

from __future__ import annotations

import argparse
import json
import sys

from .expr import ZERO, substitute, sym
from .fields import Generator
from .nmatrix import NMatrix, as_nmatrix, canonical_form
from .parser import ParseError, parse, to_text
from .systems import RDSystem, drift, is_symmetry, triangular
from .transforms import (InapplicableTransform, LinearEquiv, VShift,
                         VShiftFull, aet, apply_equiv)


class UsageError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}")


def _parse_expr(text, what):
    try:
        return parse(str(text))
    except ParseError as exc:
        raise UsageError(f"bad expression for {what}: {exc}")


def load_system(path) -> RDSystem:
    data = _load_json(path)
    try:
        m = int(data["m"])
        fam = data["family"]
        kind = fam["kind"]
        binding = {}
        for name, val in data.get("params", {}).items():
            if val != "free":
                binding[sym(name)] = _parse_expr(val, f"param {name}")
        f1 = substitute(_parse_expr(data["f1"], "f1"), binding)
        f2 = substitute(_parse_expr(data["f2"], "f2"), binding)
        if kind == "triangular":
            a = substitute(_parse_expr(fam.get("a", "0"), "a"), binding)
            return triangular(m, a, f1, f2)
        if kind == "drift":
            p = substitute(_parse_expr(fam.get("p", "1"), "p"), binding)
            return drift(m, p, f1, f2)
    except KeyError as exc:
        raise UsageError(f"system file missing field {exc}")
    raise UsageError(f"unknown system kind {kind!r}")


def load_generator(path, m: int) -> Generator:
    data = _load_json(path)
    try:
        eta = _parse_expr(data.get("eta", "0"), "eta")
        xi = [_parse_expr(s, "xi") for s in data.get("xi", ["0"] * m)]
        pi = data.get("pi", ["0", "0"])
        pi1 = _parse_expr(pi[0], "pi1")
        pi2 = _parse_expr(pi[1], "pi2")
    except (KeyError, IndexError) as exc:
        raise UsageError(f"generator file malformed: {exc}")
    if len(xi) != m:
        raise UsageError(f"generator has {len(xi)} xi components, system m={m}")
    return Generator(eta, tuple(xi), pi1, pi2)


def dump_generator(g: Generator) -> dict:
    return {"eta": to_text(g.eta), "xi": [to_text(c) for c in g.xi],
            "pi": [to_text(g.pi1), to_text(g.pi2)]}


def load_matrix(path) -> NMatrix:
    data = _load_json(path)
    if not (isinstance(data, list) and len(data) == 3):
        raise UsageError("matrix file must be a 3x3 array of strings")
    rows = [[_parse_expr(e, "matrix entry") for e in row] for row in data]
    try:
        return as_nmatrix(tuple(tuple(r) for r in rows))
    except ValueError as exc:
        raise UsageError(str(exc))


def load_transform(path):
    data = _load_json(path)
    kind = data.get("kind")
    params = {k: _parse_expr(v, k) for k, v in data.get("params", {}).items()}
    if kind == "linear":
        return LinearEquiv(**{k: params.get(k, d) for k, d in
                              [("K1", parse("1")), ("K2", ZERO),
                               ("b1", ZERO), ("b2", ZERO),
                               ("lam", parse("1"))]})
    if kind == "aet":
        index = int(data["index"])
        raw = dict(data.get("params", {}))
        kw = {k: parse(str(v)) for k, v in raw.items() if k != "m"}
        if "m" in raw:
            kw["m"] = int(raw["m"])
        return aet(index, **kw)
    if kind == "vshift":
        return VShift(_parse_expr(data["phi"], "phi"))
    if kind == "vshift_full":
        return VShiftFull(_parse_expr(data["phihat"], "phihat"))
    raise UsageError(f"unknown transform kind {kind!r}")


def cmd_verify(args) -> int:
    system = load_system(args.system)
    gen = load_generator(args.generator, system.m)
    rep = is_symmetry(system, gen)
    out = {"verdict": rep.verdict, "decision_path": rep.decision_path,
           "residuals": [to_text(r) for r in rep.residuals]}
    if rep.counterexample:
        out["counterexample"] = {k: str(v) for k, v in rep.counterexample.items()}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if rep.verdict == "holds" else 1


def cmd_canon(args) -> int:
    g = load_matrix(args.matrix)
    cf = canonical_form(g)
    out = {
        "label": cf.label,
        "canonical": [[to_text(e) for e in row] for row in cf.canonical.matrix()],
        "witness": [[to_text(e) for e in row] for row in cf.witness.matrix()],
        "scale": to_text(cf.scale),
    }
    if cf.invariant is not None:
        out["invariant"] = to_text(cf.invariant)
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_commutator(args) -> int:
    gx = load_generator(args.x, m=_peek_m(args.x))
    gy = load_generator(args.y, m=_peek_m(args.y))
    if gx.m != gy.m:
        raise UsageError("generators have different dimensions")
    from .fields import commutator
    print(json.dumps(dump_generator(commutator(gx, gy)),
                     indent=2, sort_keys=True))
    return 0


def _peek_m(path) -> int:
    data = _load_json(path)
    return len(data.get("xi", []))


def cmd_corpus_run(args) -> int:
    from .verify import run_suite
    modes = ("symbolic", "witness") if args.mode == "both" else (args.mode,)
    rep = run_suite(tables=args.table or None, items=args.item or None,
                    m_values=args.m or None, seed=args.seed, modes=modes)
    payload = rep.to_json()
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    for run in rep.runs:
        print(f"{run.row_key}: {run.status}"
              + (" (annotated)" if run.annotated and run.status == "fail" else ""))
    c = payload["counts"]
    print(f"pass {c.get('pass', 0)}, fail {c.get('fail', 0)}, "
          f"blocked {c.get('blocked', 0)}, undecided {c.get('undecided', 0)}; "
          f"gate pass fraction {payload['gate_pass_fraction']}")
    return rep.exit_code


def cmd_equiv_apply(args) -> int:
    system = load_system(args.system)
    tr = load_transform(args.transform)
    try:
        out = apply_equiv(system, tr)
    except InapplicableTransform as exc:
        print(json.dumps({"error": str(exc)}, indent=2))
        return 1
    payload = {"m": out.m,
               "family": {"kind": out.family,
                          **({"a": to_text(out.a)} if out.family == "triangular"
                             else {"p": to_text(out.p)})},
               "f1": to_text(out.f1), "f2": to_text(out.f2)}
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rdsymm",
                                 description="symmetry verification for "
                                 "triangular reaction-diffusion systems")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a generator against a system")
    p.add_argument("system")
    p.add_argument("generator")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("canon", help="canonical form of an N-pattern matrix")
    p.add_argument("matrix")
    p.set_defaults(fn=cmd_canon)

    p = sub.add_parser("commutator", help="commutator of two generators")
    p.add_argument("x")
    p.add_argument("y")
    p.set_defaults(fn=cmd_commutator)

    p = sub.add_parser("corpus", help="table corpus operations")
    csub = p.add_subparsers(dest="corpus_command", required=True)
    pr = csub.add_parser("run", help="verify corpus rows")
    pr.add_argument("--table", type=int, action="append")
    pr.add_argument("--item", action="append")
    pr.add_argument("--m", type=int, action="append")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--json", help="write the machine-readable report here")
    pr.add_argument("--mode", choices=["symbolic", "witness", "both"],
                    default="both")
    pr.set_defaults(fn=cmd_corpus_run)

    p = sub.add_parser("equiv", help="equivalence transformations")
    esub = p.add_subparsers(dest="equiv_command", required=True)
    pa = esub.add_parser("apply", help="apply a transform to a system")
    pa.add_argument("system")
    pa.add_argument("transform")
    pa.set_defaults(fn=cmd_equiv_apply)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
