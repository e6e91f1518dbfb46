"""Translation of typed programs into factor graph grammars, and the
weight-preserving simplification passes.

Each subexpression in an environment with k bound variables becomes a
nonterminal of arity k+1 (the environment slots in binding order, then the
result slot). Conditionals and case expressions get two rules, one per arm;
everything else gets one rule; each function definition and the program
top level get one rule each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from .ast import (BuiltinApp, Call, Case, Expr, FunDef, If, Let, Lookup,
                  Observe, Program, Sample, Var)
from .fgg import (FGG, NONTERMINAL, TERMINAL, Edge, EdgeLabel, FactorTable,
                  Hypergraph, Node, Rule)
from .frontend import apply_builtin
from .params import Params
from .values import Bool, Dist, Domain, Inl, Inr, Value

START = "$start"
RESULT = "%v"  # result node id inside every rule ('%' cannot appear in identifiers)


@dataclass
class CompilationUnit:
    fgg: FGG
    provenance: dict[str, str]  # nonterminal label -> source span "line:col"
    pass_log: list[tuple[str, int]] = field(default_factory=list)
    # metadata used by the simplifier and the oracle comparisons:
    label_kinds: dict[str, str] = field(default_factory=dict)   # nonterminal -> construct
    factor_origins: dict[str, str] = field(default_factory=dict)  # terminal -> origin


class _Names:
    def __init__(self):
        self.taken: set[str] = set()

    def fresh(self, base: str) -> str:
        name = base
        n = 1
        while name in self.taken:
            n += 1
            name = f"{base}#{n}"
        self.taken.add(name)
        return name


def _indicator(doms: tuple[Domain, ...], pred) -> np.ndarray:
    t = np.zeros(tuple(len(d) for d in doms))
    for idx in iproduct(*(range(len(d)) for d in doms)):
        vals = tuple(d.values[i] for d, i in zip(doms, idx))
        if pred(vals):
            t[idx] = 1.0
    return t


def _density_table(dist_dom: Domain, val_dom: Domain, params: Params) -> np.ndarray:
    t = np.zeros((len(dist_dom), len(val_dom)))
    for i, d in enumerate(dist_dom.values):
        if not isinstance(d, Dist):
            continue
        table = params.dist_table(d.name)
        for j, v in enumerate(val_dom.values):
            t[i, j] = table.get(v, 0.0)
    return t


class _Translator:
    def __init__(self, program: Program, params: Params):
        self.program = program
        self.params = params
        self.names = _Names()
        self.labels: dict[str, EdgeLabel] = {}
        self.rules: list[Rule] = []
        self.factors: dict[str, FactorTable] = {}
        self.domains: dict[str, Domain] = {}
        self.provenance: dict[str, str] = {}
        self.label_kinds: dict[str, str] = {}
        self.factor_origins: dict[str, str] = {}
        self._nt_of: dict[int, str] = {}  # id(expr) -> label name

    # -- naming and registration --------------------------------------------

    def _dom(self, d: Domain) -> str:
        self.domains[d.name] = d
        return d.name

    def nt(self, e: Expr) -> str:
        name = self._nt_of.get(id(e))
        if name is None:
            kind = _kind_of(e)
            name = self.names.fresh(f"{kind}@{e.pos[0]}:{e.pos[1]}")
            self.labels[name] = EdgeLabel(name, len(e.ty.env) + 1, NONTERMINAL)
            self.label_kinds[name] = kind
            self.provenance[name] = f"{e.pos[0]}:{e.pos[1]}"
            self._nt_of[id(e)] = name
        return name

    def terminal(self, base: str, doms: tuple[Domain, ...], table: np.ndarray,
                 origin: str) -> str:
        name = self.names.fresh(base)
        self.labels[name] = EdgeLabel(name, len(doms), TERMINAL)
        self.factors[name] = FactorTable(name, tuple(self._dom(d) for d in doms), table)
        self.factor_origins[name] = origin
        return name

    # -- rule assembly --------------------------------------------------------

    def _rule(self, lhs: str, e: Expr, nodes, edges):
        """nodes: extra (id, Domain) pairs beyond env+result; edges as built."""
        env_nodes = [Node(x, self._dom(d)) for x, d in e.ty.env]
        all_nodes = env_nodes + [Node(RESULT, self._dom(e.ty.result))]
        all_nodes += [Node(nid, self._dom(d)) for nid, d in nodes]
        ext = tuple(x for x, _ in e.ty.env) + (RESULT,)
        self.rules.append(Rule(lhs, Hypergraph(all_nodes, edges, ext)))

    def _env_ids(self, e: Expr) -> list[str]:
        return [x for x, _ in e.ty.env]

    def _edge_for(self, eid: str, sub: Expr, result_node: str) -> Edge:
        return Edge(eid, self.nt(sub), tuple(self._env_ids(sub)) + (result_node,))

    # -- per-construct translation -------------------------------------------

    def translate_expr(self, e: Expr) -> str:
        lhs = self.nt(e)
        span = f"{e.pos[0]}:{e.pos[1]}"
        env = self._env_ids(e)

        if isinstance(e, Var):
            if e.resolution == "var":
                xdom = dict(e.ty.env)[e.name]
                lab = self.terminal(f"copy@{span}", (xdom, e.ty.result),
                                    _indicator((xdom, e.ty.result), lambda v: v[0] == v[1]),
                                    origin="copy")
                self._rule(lhs, e, [], [Edge("e0", lab, (e.name, RESULT))])
            else:
                value = (self.params.inputs[e.name] if e.resolution == "input"
                         else _atom_value(e.name))
                lab = self.terminal(f"const@{span}", (e.ty.result,),
                                    _indicator((e.ty.result,), lambda v: v[0] == value),
                                    origin="builtin")
                self._rule(lhs, e, [], [Edge("e0", lab, (RESULT,))])
            return lhs

        if isinstance(e, BuiltinApp):
            arg_nodes = []
            edges = []
            for j, a in enumerate(e.args):
                self.translate_expr(a)
                nid = f"%{j + 1}"
                arg_nodes.append((nid, a.ty.result))
                edges.append(self._edge_for(f"e{j}", a, nid))
            doms = tuple(a.ty.result for a in e.args) + (e.ty.result,)
            table = _indicator(doms, lambda v: apply_builtin(e.op, v[:-1]) == v[-1])
            lab = self.terminal(f"{e.op}@{span}", doms, table, origin="builtin")
            edges.append(Edge(f"e{len(e.args)}", lab,
                              tuple(nid for nid, _ in arg_nodes) + (RESULT,)))
            self._rule(lhs, e, arg_nodes, edges)
            return lhs

        if isinstance(e, Lookup):
            self.translate_expr(e.index)
            idom, rdom = e.index.ty.result, e.ty.result
            keys = set(self.params.lookup_keys(e.param))

            def is_entry(v):
                key, dist = v
                return key in keys and dist == self.params.dist_value(e.param, key)

            lab = self.terminal(f"{e.param}[]@{span}", (idom, rdom),
                                _indicator((idom, rdom), is_entry), origin="lookup")
            self._rule(lhs, e, [("%1", idom)],
                       [self._edge_for("e0", e.index, "%1"),
                        Edge("e1", lab, ("%1", RESULT))])
            return lhs

        if isinstance(e, Sample):
            self.translate_expr(e.arg)
            ddom = e.arg.ty.result
            lab = self.terminal(f"density@{span}", (ddom, e.ty.result),
                                _density_table(ddom, e.ty.result, self.params),
                                origin="density")
            self._rule(lhs, e, [("%1", ddom)],
                       [self._edge_for("e0", e.arg, "%1"),
                        Edge("e1", lab, ("%1", RESULT))])
            return lhs

        if isinstance(e, Observe):
            self.translate_expr(e.value)
            self.translate_expr(e.dist)
            ddom = e.dist.ty.result
            lab = self.terminal(f"density@{span}", (ddom, e.ty.result),
                                _density_table(ddom, e.ty.result, self.params),
                                origin="density")
            # the observed expression's result node IS the rule's result
            self._rule(lhs, e, [("%1", ddom)],
                       [self._edge_for("e0", e.value, RESULT),
                        self._edge_for("e1", e.dist, "%1"),
                        Edge("e2", lab, ("%1", RESULT))])
            return lhs

        if isinstance(e, If):
            self.translate_expr(e.cond)
            cdom = e.cond.ty.result
            for arm, want, tag in ((e.then, True, "true"), (e.els, False, "false")):
                self.translate_expr(arm)
                lab = self.terminal(f"is-{tag}@{span}", (cdom,),
                                    _indicator((cdom,), lambda v: v[0] == Bool(want)),
                                    origin="constraint")
                self._rule(lhs, e, [("%1", cdom)],
                           [self._edge_for("e0", e.cond, "%1"),
                            Edge("e1", lab, ("%1",)),
                            self._edge_for("e2", arm, RESULT)])
            return lhs

        if isinstance(e, Case):
            self.translate_expr(e.scrutinee)
            sdom = e.scrutinee.ty.result
            for arm, binder, con, tag in ((e.left, e.left_var, Inl, "inl"),
                                          (e.right, e.right_var, Inr, "inr")):
                self.translate_expr(arm)
                bdom = dict(arm.ty.env)[binder]
                lab = self.terminal(f"is-{tag}@{span}", (sdom, bdom),
                                    _indicator((sdom, bdom), lambda v: v[0] == con(v[1])),
                                    origin="constraint")
                self._rule(lhs, e, [("%1", sdom), (binder, bdom)],
                           [self._edge_for("e0", e.scrutinee, "%1"),
                            Edge("e1", lab, ("%1", binder)),
                            self._edge_for("e2", arm, RESULT)])
            return lhs

        if isinstance(e, Let):
            self.translate_expr(e.bound)
            self.translate_expr(e.body)
            self._rule(lhs, e, [(e.name, e.bound.ty.result)],
                       [self._edge_for("e0", e.bound, e.name),
                        self._edge_for("e1", e.body, RESULT)])
            return lhs

        if isinstance(e, Call):
            arg_nodes = []
            edges = []
            for j, a in enumerate(e.args):
                self.translate_expr(a)
                nid = f"%{j + 1}"
                arg_nodes.append((nid, a.ty.result))
                edges.append(self._edge_for(f"e{j}", a, nid))
            edges.append(Edge(f"e{len(e.args)}", e.fn,
                              tuple(nid for nid, _ in arg_nodes) + (RESULT,)))
            self._rule(lhs, e, arg_nodes, edges)
            return lhs

        raise TypeError(f"cannot translate {e!r} (program not desugared?)")

    def translate_fun(self, f: FunDef):
        body_lhs = self.translate_expr(f.body)
        self.labels[f.name] = EdgeLabel(f.name, len(f.params) + 1, NONTERMINAL)
        self.label_kinds[f.name] = "fun"
        self.provenance[f.name] = f"{f.pos[0]}:{f.pos[1]}"
        nodes = [Node(x, self._dom(d)) for x, d in f.body.ty.env]
        nodes.append(Node(RESULT, self._dom(f.body.ty.result)))
        att = tuple(x for x, _ in f.body.ty.env) + (RESULT,)
        self.rules.append(Rule(f.name, Hypergraph(nodes, [Edge("e0", body_lhs, att)], att)))

    def translate_program(self) -> CompilationUnit:
        for f in self.program.functions:
            self.translate_fun(f)
        main_lhs = self.translate_expr(self.program.main)
        start = self.names.fresh(START)
        self.labels[start] = EdgeLabel(start, 1, NONTERMINAL)
        self.label_kinds[start] = "start"
        main = self.program.main
        self.rules.append(Rule(start, Hypergraph(
            [Node(RESULT, self._dom(main.ty.result))],
            [Edge("e0", main_lhs, (RESULT,))], (RESULT,))))
        g = FGG(labels=self.labels, rules=self.rules, start=start,
                domains=self.domains, factors=self.factors)
        return CompilationUnit(fgg=g, provenance=self.provenance,
                               label_kinds=self.label_kinds,
                               factor_origins=self.factor_origins)


def _kind_of(e: Expr) -> str:
    return {Var: "var", Let: "let", Call: "call", Sample: "sample",
            Observe: "observe", If: "if", Case: "case",
            BuiltinApp: "builtin", Lookup: "lookup"}[type(e)]


def _atom_value(name: str) -> Value:
    from .values import Atom
    return Atom(name)


def translate(program: Program, params: Params) -> CompilationUnit:
    """Compile a domain-annotated program (see frontend.assign_domains)."""
    if program.main.ty is None:
        raise ValueError("program is not domain-annotated; run assign_domains first")
    return _Translator(program, params).translate_program()


# ---------------------------------------------------------------------------
# Simplification passes


ALL_PASSES = ("inline", "compose", "contract", "prune")
PROTECTED_KINDS = {"if", "case", "fun", "start"}


def simplify(cu: CompilationUnit, passes=ALL_PASSES) -> CompilationUnit:
    """Apply the requested weight-preserving passes, in the given order."""
    cu = CompilationUnit(fgg=_copy_fgg(cu.fgg), provenance=dict(cu.provenance),
                         pass_log=list(cu.pass_log),
                         label_kinds=dict(cu.label_kinds),
                         factor_origins=dict(cu.factor_origins))
    for name in passes:
        fired = {"inline": _pass_inline, "compose": _pass_compose,
                 "contract": _pass_contract, "prune": _pass_prune}[name](cu)
        cu.pass_log.append((name, fired))
    _gc(cu)
    return cu


def _copy_fgg(g: FGG) -> FGG:
    return FGG(labels=dict(g.labels), rules=list(g.rules), start=g.start,
               domains=dict(g.domains), factors=dict(g.factors))


def _inline_edge(rhs: Hypergraph, edge: Edge, sub: Hypergraph) -> Hypergraph:
    """Replace one nonterminal edge by a rule's right-hand side."""
    ren = {}
    fuse = dict(zip(sub.ext, edge.att))
    for n in sub.nodes:
        ren[n.id] = fuse.get(n.id, f"{edge.id}.{n.id}")
    nodes = list(rhs.nodes)
    nodes += [Node(ren[n.id], n.domain) for n in sub.nodes if n.id not in fuse]
    edges = [e for e in rhs.edges if e.id != edge.id]
    edges += [Edge(f"{edge.id}.{e.id}", e.label, tuple(ren[a] for a in e.att))
              for e in sub.edges]
    return Hypergraph(nodes, edges, rhs.ext)


def _pass_inline(cu: CompilationUnit) -> int:
    """Inline single-rule nonterminals other than if/case/function lhs, and
    collapse function/start rules whose whole rhs is one if/case edge."""
    g = cu.fgg
    fired = 0
    while True:
        by_lhs: dict[str, list[Rule]] = {}
        for r in g.rules:
            by_lhs.setdefault(r.lhs, []).append(r)
        candidate = None
        for name, lab in g.labels.items():
            if (lab.is_nonterminal and cu.label_kinds.get(name) not in PROTECTED_KINDS
                    and len(by_lhs.get(name, [])) == 1):
                sub = by_lhs[name][0].rhs
                if any(e.label == name for e in sub.edges):
                    continue  # self-recursive; cannot inline
                if any(e.label == name for r in g.rules if r.lhs != name
                       for e in r.rhs.edges):
                    candidate = (name, sub)
                    break
        if candidate is None:
            break
        name, sub = candidate
        new_rules = []
        for r in g.rules:
            if r.lhs == name:
                continue
            rhs = r.rhs
            while True:
                hit = next((e for e in rhs.edges if e.label == name), None)
                if hit is None:
                    break
                rhs = _inline_edge(rhs, hit, sub)
                fired += 1
            new_rules.append(Rule(r.lhs, rhs))
        g.rules = new_rules
        del g.labels[name]

    # unit-rule collapse: fun/start whose rhs is exactly one if/case edge
    changed = True
    while changed:
        changed = False
        by_lhs = {}
        for r in g.rules:
            by_lhs.setdefault(r.lhs, []).append(r)
        for name in list(g.labels):
            if cu.label_kinds.get(name) not in ("fun", "start"):
                continue
            rules = by_lhs.get(name, [])
            if len(rules) != 1:
                continue
            rhs = rules[0].rhs
            if (len(rhs.edges) == 1 and len(rhs.nodes) == len(rhs.ext)
                    and rhs.edges[0].att == rhs.ext
                    and cu.label_kinds.get(rhs.edges[0].label) in ("if", "case")):
                child = rhs.edges[0].label
                uses = sum(1 for r in g.rules for e in r.rhs.edges if e.label == child)
                if uses != 1:
                    continue
                child_rules = [r for r in g.rules if r.lhs == child]
                # relabel: reuse this rule's node names for the external slots
                replacement = []
                for cr in child_rules:
                    ren = dict(zip(cr.rhs.ext, rhs.ext))
                    nodes = [Node(ren.get(n.id, n.id), n.domain) for n in cr.rhs.nodes]
                    edges = [Edge(e.id, e.label, tuple(ren.get(a, a) for a in e.att))
                             for e in cr.rhs.edges]
                    replacement.append(Rule(name, Hypergraph(nodes, edges, rhs.ext)))
                g.rules = [r for r in g.rules if r.lhs not in (name, child)] + replacement
                del g.labels[child]
                fired += 1
                changed = True
                break
    return fired


def _pass_compose(cu: CompilationUnit) -> int:
    """Fuse pairs of built-in factor tables that meet at a private internal node."""
    g = cu.fgg
    fired = 0
    new_rules = []
    for r in g.rules:
        rhs = r.rhs
        while True:
            target = None
            for n in rhs.nodes:
                if n.id in rhs.ext:
                    continue
                incident = [(e, [i for i, a in enumerate(e.att) if a == n.id])
                            for e in rhs.edges if n.id in e.att]
                if len(incident) != 2:
                    continue
                (e1, p1), (e2, p2) = incident
                if len(p1) != 1 or len(p2) != 1:
                    continue
                if (cu.factor_origins.get(e1.label) == "builtin"
                        and cu.factor_origins.get(e2.label) == "builtin"):
                    target = (n, e1, p1[0], e2, p2[0])
                    break
            if target is None:
                break
            n, e1, i1, e2, i2 = target
            # reindex both tables onto the attachment nodes' domains so the
            # contracted axes agree and the fused table matches its domains
            from .inference import align
            def _aligned(e):
                tab = g.factors[e.label]
                tds = tuple(g.domains[d] for d in tab.domains)
                nds = tuple(g.domains[rhs.domain_of(a)] for a in e.att)
                return align(tab.weights, tds, nds)
            t1, t2 = _aligned(e1), _aligned(e2)
            fusedtab = np.tensordot(np.moveaxis(t1, i1, -1), np.moveaxis(t2, i2, 0), axes=1)
            att = tuple(a for a in e1.att if a != n.id) + tuple(a for a in e2.att if a != n.id)
            dom_names = tuple(rhs.domain_of(a) for a in att)
            base = f"fused.{e1.label}.{e2.label}"
            name = base
            k = 1
            while name in g.labels:
                k += 1
                name = f"{base}#{k}"
            g.labels[name] = EdgeLabel(name, len(att), TERMINAL)
            g.factors[name] = FactorTable(name, dom_names, fusedtab)
            cu.factor_origins[name] = "builtin"
            nodes = [x for x in rhs.nodes if x.id != n.id]
            edges = [e for e in rhs.edges if e.id not in (e1.id, e2.id)]
            edges.append(Edge(f"{e1.id}+{e2.id}", name, att))
            rhs = Hypergraph(nodes, edges, rhs.ext)
            fired += 1
        new_rules.append(Rule(r.lhs, rhs))
    g.rules = new_rules
    return fired


def _pass_contract(cu: CompilationUnit) -> int:
    """Contract copy factors v = x by merging the two nodes."""
    g = cu.fgg
    fired = 0
    new_rules = []
    for r in g.rules:
        rhs = r.rhs
        while True:
            target = None
            for e in rhs.edges:
                if cu.factor_origins.get(e.label) != "copy" or len(e.att) != 2:
                    continue
                a, b = e.att
                if a == b:
                    continue
                if rhs.domain_of(a) != rhs.domain_of(b):
                    continue
                if a in rhs.ext and b in rhs.ext:
                    continue  # merging would duplicate an external node
                target = e
                break
            if target is None:
                break
            a, b = target.att
            keep, drop = (b, a) if b in rhs.ext else (a, b)
            nodes = [n for n in rhs.nodes if n.id != drop]
            edges = [Edge(e.id, e.label, tuple(keep if x == drop else x for x in e.att))
                     for e in rhs.edges if e.id != target.id]
            rhs = Hypergraph(nodes, edges, rhs.ext)
            fired += 1
        new_rules.append(Rule(r.lhs, rhs))
    g.rules = new_rules
    return fired


def _pass_prune(cu: CompilationUnit) -> int:
    """Drop rules containing an identically-zero factor table."""
    g = cu.fgg
    before = len(g.rules)
    g.rules = [r for r in g.rules
               if not any(g.labels[e.label].is_terminal
                          and not np.any(g.factors[e.label].weights)
                          for e in r.rhs.edges)]
    return before - len(g.rules)


def _gc(cu: CompilationUnit):
    """Remove rules, labels, factors, and domains unreachable from the start symbol."""
    g = cu.fgg
    reachable = {g.start}
    frontier = [g.start]
    while frontier:
        lhs = frontier.pop()
        for r in g.rules:
            if r.lhs != lhs:
                continue
            for e in r.rhs.edges:
                lab = g.labels.get(e.label)
                if lab is not None and lab.is_nonterminal and e.label not in reachable:
                    reachable.add(e.label)
                    frontier.append(e.label)
    g.rules = [r for r in g.rules if r.lhs in reachable]
    used_labels = {g.start} | {r.lhs for r in g.rules}
    used_domains = set()
    for r in g.rules:
        for e in r.rhs.edges:
            used_labels.add(e.label)
        for n in r.rhs.nodes:
            used_domains.add(n.domain)
    for t in list(g.factors.values()):
        if t.label in used_labels:
            used_domains.update(t.domains)
    g.labels = {k: v for k, v in g.labels.items() if k in used_labels}
    g.factors = {k: v for k, v in g.factors.items() if k in used_labels}
    g.domains = {k: v for k, v in g.domains.items() if k in used_domains}


# ---------------------------------------------------------------------------


def compile_source(source: str, params: Params, passes=ALL_PASSES) -> CompilationUnit:
    """Full pipeline: parse, desugar, check, translate, simplify."""
    from .frontend import check_program
    program, _ = check_program(source, params)
    cu = translate(program, params)
    if passes:
        cu = simplify(cu, passes)
    return cu
