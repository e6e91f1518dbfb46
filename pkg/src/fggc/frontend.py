"""Desugaring, scope checking, and domain assignment.

Domain assignment gives every subexpression a finite domain: the set of
values it can evaluate to, and an environment listing the bound variables
in scope with their domains. Domains of recursive functions are computed
by a monotone fixed point over value sets, seeded from the parameter file;
an explicit enumeration declared as domains["f.x"] seeds parameter x of
function f.
"""

from __future__ import annotations

from typing import Optional

from .ast import (And, BuiltinApp, Call, Case, Expr, Fail, FunDef, If, Let,
                  Lookup, Observe, Or, Program, Sample, TypeInfo, Var)
from .fgg import Diagnostic
from .params import ParamError, Params
from .values import (FALSE, NIL, TRUE, UNIT, Atom, Bool, Dist, Domain, Inl,
                     Inr, Pair, Unit, Value, sorted_values)


class DomainError(Exception):
    def __init__(self, message: str, pos=(0, 0)):
        super().__init__(f"{pos[0]}:{pos[1]}: {message}" if pos != (0, 0) else message)
        self.message = message
        self.pos = pos


# ---------------------------------------------------------------------------
# Desugaring


def desugar_expr(e: Expr) -> Expr:
    if isinstance(e, And):
        return If(desugar_expr(e.left), desugar_expr(e.right),
                  BuiltinApp("false", [], pos=e.pos), pos=e.pos)
    if isinstance(e, Or):
        return If(desugar_expr(e.left), BuiltinApp("true", [], pos=e.pos),
                  desugar_expr(e.right), pos=e.pos)
    if isinstance(e, Fail):
        # observe true <- «zero»: multiplies the branch weight by 0
        return Observe(BuiltinApp("true", [], pos=e.pos),
                       BuiltinApp("zerodist", [], pos=e.pos), pos=e.pos)
    if isinstance(e, Var):
        return Var(e.name, pos=e.pos)
    if isinstance(e, Let):
        return Let(e.name, desugar_expr(e.bound), desugar_expr(e.body), pos=e.pos)
    if isinstance(e, Call):
        return Call(e.fn, [desugar_expr(a) for a in e.args], pos=e.pos)
    if isinstance(e, Sample):
        return Sample(desugar_expr(e.arg), pos=e.pos)
    if isinstance(e, Observe):
        return Observe(desugar_expr(e.value), desugar_expr(e.dist), pos=e.pos)
    if isinstance(e, If):
        return If(desugar_expr(e.cond), desugar_expr(e.then), desugar_expr(e.els), pos=e.pos)
    if isinstance(e, Case):
        return Case(desugar_expr(e.scrutinee), e.left_var, desugar_expr(e.left),
                    e.right_var, desugar_expr(e.right), pos=e.pos)
    if isinstance(e, BuiltinApp):
        return BuiltinApp(e.op, [desugar_expr(a) for a in e.args], pos=e.pos)
    if isinstance(e, Lookup):
        return Lookup(e.param, desugar_expr(e.index), pos=e.pos)
    raise TypeError(f"unknown expression {e!r}")


def desugar(p: Program) -> Program:
    return Program([FunDef(f.name, list(f.params), desugar_expr(f.body), f.pos)
                    for f in p.functions], desugar_expr(p.main))


# ---------------------------------------------------------------------------
# Scope checking


def scope_check(p: Program, global_names: frozenset[str] = frozenset()) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    funs = {}
    for f in p.functions:
        if f.name in funs:
            out.append(Diagnostic(f"duplicate function name {f.name!r}",
                                  f"{f.pos[0]}:{f.pos[1]}"))
        funs[f.name] = f
        if len(set(f.params)) != len(f.params):
            out.append(Diagnostic(f"duplicate parameter in {f.name!r}",
                                  f"{f.pos[0]}:{f.pos[1]}"))

    def binder_ok(name: str, pos, bound):
        if name in funs:
            out.append(Diagnostic(
                f"variable {name!r} shadows a function name", f"{pos[0]}:{pos[1]}"))
        if name in bound:
            out.append(Diagnostic(
                f"variable {name!r} shadows an enclosing binding", f"{pos[0]}:{pos[1]}"))

    def walk(e: Expr, bound: frozenset[str]):
        where = f"{e.pos[0]}:{e.pos[1]}"
        if isinstance(e, Var):
            if e.name not in bound and e.name not in global_names:
                if e.name in funs:
                    out.append(Diagnostic(
                        f"function {e.name!r} used as a value", where))
                else:
                    out.append(Diagnostic(f"unbound variable {e.name!r}", where))
        elif isinstance(e, Let):
            binder_ok(e.name, e.pos, bound)
            walk(e.bound, bound)
            walk(e.body, bound | {e.name})
        elif isinstance(e, Call):
            f = funs.get(e.fn)
            if f is None:
                out.append(Diagnostic(f"call to undeclared function {e.fn!r}", where))
            elif len(e.args) != len(f.params):
                out.append(Diagnostic(
                    f"function {e.fn!r} takes {len(f.params)} argument(s), got {len(e.args)}",
                    where))
            for a in e.args:
                walk(a, bound)
        elif isinstance(e, Sample):
            walk(e.arg, bound)
        elif isinstance(e, Observe):
            walk(e.value, bound)
            walk(e.dist, bound)
        elif isinstance(e, If):
            walk(e.cond, bound)
            walk(e.then, bound)
            walk(e.els, bound)
        elif isinstance(e, Case):
            binder_ok(e.left_var, e.pos, bound)
            binder_ok(e.right_var, e.pos, bound)
            walk(e.scrutinee, bound)
            walk(e.left, bound | {e.left_var})
            walk(e.right, bound | {e.right_var})
        elif isinstance(e, BuiltinApp):
            for a in e.args:
                walk(a, bound)
        elif isinstance(e, Lookup):
            walk(e.index, bound)
        elif isinstance(e, (And, Or, Fail)):
            raise DomainError("scope_check requires a desugared program", e.pos)
        else:
            raise TypeError(f"unknown expression {e!r}")

    for f in p.functions:
        walk(f.body, frozenset(f.params))
    walk(p.main, frozenset())
    return out


# ---------------------------------------------------------------------------
# Built-in semantics (partial functions over values; None = undefined)


def apply_builtin(op: str, args: tuple[Value, ...]) -> Optional[Value]:
    if op == "=":
        return Bool(args[0] == args[1])
    if op == "!=":
        return Bool(args[0] != args[1])
    if op == "pair":
        return Pair(args[0], args[1])
    if op == "fst":
        return args[0].first if isinstance(args[0], Pair) else None
    if op == "snd":
        return args[0].second if isinstance(args[0], Pair) else None
    if op == "inl":
        return Inl(args[0])
    if op == "inr":
        return Inr(args[0])
    if op == "cons":
        a, s = args
        if isinstance(a, Atom) and len(a.name) == 1 and isinstance(s, Atom):
            return Atom(a.name + s.name)
        return None
    if op == "car":
        (s,) = args
        return Atom(s.name[0]) if isinstance(s, Atom) and s.name else None
    if op == "cdr":
        (s,) = args
        return Atom(s.name[1:]) if isinstance(s, Atom) and s.name else None
    if op == "true":
        return TRUE
    if op == "false":
        return FALSE
    if op == "unit":
        return UNIT
    if op == "nil":
        return NIL
    if op == "zerodist":
        return Dist("__zero__")
    raise ValueError(f"unknown built-in {op!r}")


# ---------------------------------------------------------------------------
# Domain assignment


class DomainInterner:
    """Deduplicates value sets into named Domain objects, deterministically."""

    def __init__(self):
        self._by_content: dict[tuple[Value, ...], Domain] = {}

    def intern(self, values) -> Domain:
        content = sorted_values(values) if values else (UNIT,)
        dom = self._by_content.get(content)
        if dom is None:
            dom = Domain(f"D{len(self._by_content)}", content)
            self._by_content[content] = dom
        return dom

    @property
    def domains(self) -> dict[str, Domain]:
        return {d.name: d for d in self._by_content.values()}


_SET_LIMIT = 100_000  # total values across all sets; growth beyond this is diagnosed


def assign_domains(p: Program, params: Params,
                   max_passes: int = 500) -> dict[str, Domain]:
    """Annotate every expression with env and result Domain (stored in .ty).

    Returns the registry of interned domains. Raises DomainError on type
    errors or when value-set propagation fails to stabilize (an
    un-enumerable recursive type without a declared finite enumeration).
    """
    funs = {f.name: f for f in p.functions}
    param_sets: dict[str, list[set[Value]]] = {}
    result_sets: dict[str, set[Value]] = {f.name: set() for f in p.functions}
    for f in p.functions:
        param_sets[f.name] = []
        for x in f.params:
            seed: set[Value] = set()
            declared = params.domains.get(f"{f.name}.{x}")
            if declared:
                seed = set(declared)
            param_sets[f.name].append(seed)

    changed = True

    def union_into(target: set[Value], values) -> None:
        nonlocal changed
        before = len(target)
        target |= set(values)
        if len(target) != before:
            changed = True

    def flow(e: Expr, env: dict[str, set[Value]]) -> set[Value]:
        if isinstance(e, Var):
            if e.name in env:
                return set(env[e.name])
            if e.name in params.inputs:
                return {params.inputs[e.name]}
            return {Atom(e.name)}
        if isinstance(e, Let):
            bound = flow(e.bound, env)
            return flow(e.body, {**env, e.name: bound})
        if isinstance(e, Call):
            for i, a in enumerate(e.args):
                union_into(param_sets[e.fn][i], flow(a, env))
            return set(result_sets[e.fn])
        if isinstance(e, Sample):
            dists = flow(e.arg, env)
            out: set[Value] = set()
            for d in dists:
                if isinstance(d, Dist):
                    out |= set(params.dist_table(d.name).keys())
            return out
        if isinstance(e, Observe):
            flow(e.dist, env)
            return flow(e.value, env)
        if isinstance(e, If):
            flow(e.cond, env)
            return flow(e.then, env) | flow(e.els, env)
        if isinstance(e, Case):
            scrut = flow(e.scrutinee, env)
            lefts = {v.value for v in scrut if isinstance(v, Inl)}
            rights = {v.value for v in scrut if isinstance(v, Inr)}
            out = flow(e.left, {**env, e.left_var: lefts})
            out |= flow(e.right, {**env, e.right_var: rights})
            return out
        if isinstance(e, BuiltinApp):
            arg_sets = [flow(a, env) for a in e.args]
            out = set()
            for combo in _product(arg_sets):
                v = apply_builtin(e.op, combo)
                if v is not None:
                    out.add(v)
            return out
        if isinstance(e, Lookup):
            index = flow(e.index, env)
            keys = set(params.lookup_keys(e.param))
            return {params.dist_value(e.param, k) for k in index & keys}
        raise DomainError("domain assignment requires a desugared program", e.pos)

    for _ in range(max_passes):
        changed = False
        for f in p.functions:
            env = {x: param_sets[f.name][i] for i, x in enumerate(f.params)}
            union_into(result_sets[f.name], flow(f.body, env))
        flow(p.main, {})
        total = sum(len(s) for ss in param_sets.values() for s in ss)
        total += sum(len(s) for s in result_sets.values())
        if total > _SET_LIMIT:
            raise DomainError(
                "value-set propagation exceeded the size limit; declare a finite "
                "enumeration for the recursive type (domains entry 'f.x')")
        if not changed:
            break
    else:
        raise DomainError(
            "value-set propagation did not stabilize; declare a finite "
            "enumeration for the recursive type (domains entry 'f.x')")

    # second pass: annotate with interned domains and check typing discipline
    interner = DomainInterner()

    def annotate(e: Expr, env: list[tuple[str, set[Value]]]) -> set[Value]:
        env_dict = dict(env)
        result: set[Value]
        if isinstance(e, Var):
            if e.name in env_dict:
                e.resolution = "var"
                result = set(env_dict[e.name])
            elif e.name in params.inputs:
                e.resolution = "input"
                result = {params.inputs[e.name]}
            else:
                e.resolution = "atom"
                result = {Atom(e.name)}
        elif isinstance(e, Let):
            bound = annotate(e.bound, env)
            result = annotate(e.body, env + [(e.name, bound)])
        elif isinstance(e, Call):
            for a in e.args:
                annotate(a, env)
            result = set(result_sets[e.fn])
        elif isinstance(e, Sample):
            dists = annotate(e.arg, env)
            bad = [v for v in dists if not isinstance(v, Dist)]
            if bad:
                raise DomainError(
                    f"sample argument is not a distribution (can be {bad[0].key()})", e.pos)
            result = set()
            for d in dists:
                result |= set(params.dist_table(d.name).keys())
        elif isinstance(e, Observe):
            dists = annotate(e.dist, env)
            bad = [v for v in dists if not isinstance(v, Dist)]
            if bad:
                raise DomainError(
                    f"observe target is not a distribution (can be {bad[0].key()})", e.pos)
            result = annotate(e.value, env)
        elif isinstance(e, If):
            cond = annotate(e.cond, env)
            bad = [v for v in cond if not isinstance(v, Bool)]
            if bad:
                raise DomainError(
                    f"if condition is not boolean (can be {bad[0].key()})", e.pos)
            result = annotate(e.then, env) | annotate(e.els, env)
        elif isinstance(e, Case):
            scrut = annotate(e.scrutinee, env)
            bad = [v for v in scrut if not isinstance(v, (Inl, Inr))]
            if bad:
                raise DomainError(
                    f"case scrutinee is not a sum value (can be {bad[0].key()})", e.pos)
            lefts = {v.value for v in scrut if isinstance(v, Inl)}
            rights = {v.value for v in scrut if isinstance(v, Inr)}
            result = annotate(e.left, env + [(e.left_var, lefts)])
            result |= annotate(e.right, env + [(e.right_var, rights)])
        elif isinstance(e, BuiltinApp):
            arg_sets = [annotate(a, env) for a in e.args]
            result = set()
            for combo in _product(arg_sets):
                v = apply_builtin(e.op, combo)
                if v is not None:
                    result.add(v)
        elif isinstance(e, Lookup):
            index = annotate(e.index, env)
            keys = set(params.lookup_keys(e.param))
            result = {params.dist_value(e.param, k) for k in index & keys}
        else:
            raise DomainError("domain assignment requires a desugared program", e.pos)
        e.ty = TypeInfo(env=tuple((x, interner.intern(s)) for x, s in env),
                        result=interner.intern(result))
        return result

    for f in p.functions:
        env = [(x, param_sets[f.name][i]) for i, x in enumerate(f.params)]
        annotate(f.body, env)
    annotate(p.main, [])
    return interner.domains


def _product(sets: list[set[Value]]):
    from itertools import product
    ordered = [sorted_values(s) for s in sets]
    size = 1
    for s in ordered:
        size *= max(len(s), 1)
    if size > 1_000_000:
        raise DomainError("built-in argument domains are too large to enumerate")
    return product(*ordered)


# ---------------------------------------------------------------------------
# Convenience pipeline


def check_program(source: str, params: Params) -> tuple[Program, dict[str, Domain]]:
    """parse + desugar + scope_check + assign_domains; raises on any failure."""
    from .parser import parse
    p = desugar(parse(source))
    diags = scope_check(p, frozenset(params.global_names()))
    if diags:
        raise DomainError("; ".join(str(d) for d in diags))
    domains = assign_domains(p, params)
    return p, domains
