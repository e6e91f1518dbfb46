"""Command-line driver.

Subcommands:
    compile    source -> FGG JSON (plus a provenance sidecar with --out)
    infer      fixed-point weights of the start symbol
    compare    interpreter vs derivation enumeration vs fixed point
    enumerate  count derivation trees and truncated weights by height
    render     dot or LaTeX diagrams, one per rule

Exit codes: 0 success, 2 front-end error (parse/scope/domain/params/IO),
3 divergent grammar, 4 comparison failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import fgg as fggmod
from .fgg import FGG, StructuralError, validate
from .frontend import DomainError, check_program
from .inference import (DIVERGENT, InferenceError, solve_fixed_point)
from .oracle import OracleError, enumerate_derivations, interpret, truncated_wX
from .params import ParamError, Params, load_params
from .parser import ParseError
from .render import to_dot, to_latex
from .translate import ALL_PASSES, compile_source

EXIT_FRONTEND = 2
EXIT_DIVERGENT = 3
EXIT_MISMATCH = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FRONTEND):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_passes(text: str | None):
    if text is None:
        return ALL_PASSES
    if text == "none":
        return ()
    passes = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in passes:
        if p not in ALL_PASSES:
            raise CliError(f"unknown pass {p!r} (choose from {', '.join(ALL_PASSES)})")
    return passes


def _load_params(path: str | None) -> Params:
    if path is None:
        return Params()
    try:
        return load_params(path)
    except (OSError, json.JSONDecodeError, ParamError, ValueError) as e:
        raise CliError(f"cannot read params {path!r}: {e}")


def _read_source(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise CliError(f"cannot read {path!r}: {e}")


def _compile(args) -> FGG:
    """Load a grammar: .json files directly, anything else as source."""
    if args.input.endswith(".json"):
        try:
            g = fggmod.loads(_read_source(args.input))
        except (StructuralError, KeyError, ValueError) as e:
            raise CliError(f"bad FGG JSON: {e}")
        diags = validate(g)
        if diags:
            raise CliError("; ".join(str(d) for d in diags))
        return g
    return _compile_unit(args).fgg


def _compile_unit(args):
    source = _read_source(args.input)
    params = _load_params(getattr(args, "params", None))
    passes = _parse_passes(getattr(args, "passes", None))
    try:
        return compile_source(source, params, passes)
    except (ParseError, DomainError, ParamError) as e:
        raise CliError(str(e))


def cmd_compile(args) -> int:
    cu = _compile_unit(args)
    diags = validate(cu.fgg)
    if diags:
        raise CliError("compiled grammar failed validation: "
                       + "; ".join(str(d) for d in diags))
    text = fggmod.dumps(cu.fgg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        side = args.out + ".provenance.json"
        with open(side, "w", encoding="utf-8") as f:
            json.dump({"provenance": cu.provenance,
                       "passes": [[name, fired] for name, fired in cu.pass_log]},
                      f, indent=2, sort_keys=True)
            f.write("\n")
        print(f"wrote {args.out} ({len(cu.fgg.rules)} rules) and {side}")
    else:
        print(text, end="")
    return 0


def cmd_infer(args) -> int:
    g = _compile(args)
    state = solve_fixed_point(g, tol=args.tol, max_iter=args.max_iter)
    t = state.tau[g.start]
    for values, w in t.items():
        label = ", ".join(v.key() for v in values) or "()"
        print(f"{label}: {fmt(w)}")
    print(f"iterations: {state.iteration}")
    print(f"delta: {fmt(state.delta)}")
    print(f"status: {state.status}")
    return EXIT_DIVERGENT if state.status == DIVERGENT else 0


def cmd_compare(args) -> int:
    source = _read_source(args.input)
    params = _load_params(args.params)
    try:
        program, _ = check_program(source, params)
        if args.fgg:
            g = fggmod.loads(_read_source(args.fgg))
        else:
            g = compile_source(source, params, _parse_passes(args.passes)).fgg
    except (ParseError, DomainError, ParamError, StructuralError) as e:
        raise CliError(str(e))

    failures: list[str] = []
    for d in range(1, args.depth + 1):
        wm = interpret(program, params, d + 1)
        t = truncated_wX(g, g.start, d)
        seen = set()
        print(f"depth {d}:")
        for (v,), w in t.items():
            wi = wm.get(v, 0.0)
            seen.add(v)
            delta = abs(w - wi)
            print(f"  {v.key()}: interpret={fmt(wi)} truncated={fmt(w)} delta={fmt(delta)}")
            if delta > args.tol:
                failures.append(f"depth {d}, value {v.key()}: "
                                f"interpret {fmt(wi)} vs truncated {fmt(w)}")
        for v, wi in wm.items():
            if v not in seen and wi > args.tol:
                failures.append(f"depth {d}: interpreter value {v.key()} "
                                f"({fmt(wi)}) missing from grammar domain")
    state = solve_fixed_point(g)
    print(f"fixed point: status={state.status} iterations={state.iteration}")
    if state.status != DIVERGENT:
        t = truncated_wX(g, g.start, args.depth)
        for (v,), w in state.tau[g.start].items():
            wt = t[(v,)]
            print(f"  {v.key()}: fixpoint={fmt(w)} truncated@{args.depth}={fmt(wt)}")
            if wt > w + 1e-8:
                failures.append(f"fixed point below truncation at {v.key()}: "
                                f"{fmt(w)} < {fmt(wt)}")
    if failures:
        for f in failures:
            print(f"MISMATCH: {f}", file=sys.stderr)
        return EXIT_MISMATCH
    print("all comparisons within tolerance")
    return 0


def cmd_enumerate(args) -> int:
    g = _compile(args)
    x = args.nonterminal or g.start
    if g.ext_domains(x) is None:
        raise CliError(f"unknown nonterminal {x!r}")
    for h in range(1, args.depth + 1):
        trees = enumerate_derivations(g, x, h)
        print(f"height <= {h}: {len(trees)} tree(s)")
    t = truncated_wX(g, x, args.depth - 1) if args.depth >= 1 else None
    if t is not None:
        for values, w in t.items():
            label = ", ".join(v.key() for v in values) or "()"
            print(f"truncated weight [{label}]: {fmt(w)}")
    return 0


def cmd_render(args) -> int:
    g = _compile(args)
    if args.format == "latex":
        text = to_latex(g)
    elif args.format == "json":
        text = fggmod.dumps(g)
    else:
        text = to_dot(g)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fggc",
                                 description="compile probabilistic programs "
                                 "to factor graph grammars and run exact inference")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, passes=True):
        p.add_argument("input", help="source file, or compiled .json grammar")
        p.add_argument("--params", help="parameter file (JSON)")
        if passes:
            p.add_argument("--passes", default=None,
                           help="comma-separated pass list, or 'none' "
                           f"(default: {','.join(ALL_PASSES)})")

    p = sub.add_parser("compile", help="translate source to FGG JSON")
    common(p)
    p.add_argument("--out", help="output path (default: stdout, no sidecar)")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("infer", help="fixed-point start-symbol weights")
    common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("compare", help="cross-check compiler against oracles")
    common(p)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--fgg", help="compare against this grammar JSON instead "
                   "of compiling the source")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("enumerate", help="count derivation trees by height")
    common(p)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--nonterminal", help="nonterminal to expand (default: start)")
    p.set_defaults(fn=cmd_enumerate)

    p = sub.add_parser("render", help="emit diagrams for a grammar")
    common(p)
    p.add_argument("--format", choices=["dot", "latex", "json"], default="dot")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (InferenceError, OracleError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGENT if "divergen" in str(e) else EXIT_FRONTEND


if __name__ == "__main__":
    sys.exit(main())
