"""Hand-encoded grammars and graphs shared by several test modules.

Everything here is constructed directly from the data model, independent of
the translator, so it can serve as ground truth for yield/inference tests.
"""

import numpy as np

from fggc.fgg import (FGG, NONTERMINAL, TERMINAL, DerivationTree, Edge,
                      EdgeLabel, FactorTable, Hypergraph, Node, Rule)
from fggc.values import Atom, Domain

DN = Domain("Dn", (Atom("S"), Atom("T")))   # nonterminal symbols
DW = Domain("Dw", (Atom("a"), Atom("b")))   # terminal symbols

# weights used by the PCFG fixtures: S -> T T (0.3), T -> a (0.6), T -> b (0.4)
P_BIN = np.zeros((2, 2, 2))
P_BIN[0, 1, 1] = 0.3   # indices into Dn: S=0, T=1
P_TERM = np.array([[0.0, 0.0],   # S -> a / S -> b
                   [0.6, 0.4]])  # T -> a / T -> b
EQ_S = np.array([1.0, 0.0])


def pcfg_tree_graph() -> Hypergraph:
    """The five-node factor graph for a depth-2 binary PCFG tree: one root
    equality factor, one binary production factor, two terminal production
    factors."""
    nodes = [Node("N1", "Dn"), Node("N2", "Dn"), Node("N3", "Dn"),
             Node("W4", "Dw"), Node("W5", "Dw")]
    edges = [Edge("f0", "eq-S", ("N1",)),
             Edge("f1", "p-bin", ("N1", "N2", "N3")),
             Edge("f2", "p-term", ("N2", "W4")),
             Edge("f3", "p-term", ("N3", "W5"))]
    return Hypergraph(nodes, edges, ())


def pcfg_fgg() -> FGG:
    """Hand-encoded FGG for binary PCFG derivations: start rule pins the root
    to S, one binary rule and one terminal rule for the X nonterminal."""
    labels = {
        "S'": EdgeLabel("S'", 0, NONTERMINAL),
        "X": EdgeLabel("X", 1, NONTERMINAL),
        "eq-S": EdgeLabel("eq-S", 1, TERMINAL),
        "p-bin": EdgeLabel("p-bin", 3, TERMINAL),
        "p-term": EdgeLabel("p-term", 2, TERMINAL),
    }
    start_rule = Rule("S'", Hypergraph(
        [Node("N1", "Dn")],
        [Edge("f0", "eq-S", ("N1",)), Edge("e0", "X", ("N1",))],
        ()))
    bin_rule = Rule("X", Hypergraph(
        [Node("N1", "Dn"), Node("N2", "Dn"), Node("N3", "Dn")],
        [Edge("f1", "p-bin", ("N1", "N2", "N3")),
         Edge("e1", "X", ("N2",)), Edge("e2", "X", ("N3",))],
        ("N1",)))
    term_rule = Rule("X", Hypergraph(
        [Node("N1", "Dn"), Node("W2", "Dw")],
        [Edge("f2", "p-term", ("N1", "W2"))],
        ("N1",)))
    factors = {
        "eq-S": FactorTable("eq-S", ("Dn",), EQ_S),
        "p-bin": FactorTable("p-bin", ("Dn", "Dn", "Dn"), P_BIN),
        "p-term": FactorTable("p-term", ("Dn", "Dw"), P_TERM),
    }
    return FGG(labels=labels, rules=[start_rule, bin_rule, term_rule],
               start="S'", domains={"Dn": DN, "Dw": DW}, factors=factors)


def pcfg_depth2_derivation(g: FGG) -> DerivationTree:
    """Root rule, binary expansion, two terminal expansions."""
    start_rule, bin_rule, term_rule = g.rules
    leaf1 = DerivationTree(term_rule, {})
    leaf2 = DerivationTree(term_rule, {})
    mid = DerivationTree(bin_rule, {"e1": leaf1, "e2": leaf2})
    return DerivationTree(start_rule, {"e0": mid})


def quadratic_fgg(leaf: float = 0.7, branch: float = 0.3) -> FGG:
    """Minimal recursive grammar whose total weight solves Z = leaf + branch*Z^2.

    One arity-0 nonterminal S with a leaf rule (scalar factor `leaf`) and a
    binary rule (scalar factor `branch` plus two S edges)."""
    labels = {
        "S": EdgeLabel("S", 0, NONTERMINAL),
        "w-leaf": EdgeLabel("w-leaf", 0, TERMINAL),
        "w-branch": EdgeLabel("w-branch", 0, TERMINAL),
    }
    leaf_rule = Rule("S", Hypergraph([], [Edge("f0", "w-leaf", ())], ()))
    branch_rule = Rule("S", Hypergraph(
        [], [Edge("f1", "w-branch", ()), Edge("e1", "S", ()), Edge("e2", "S", ())],
        ()))
    factors = {
        "w-leaf": FactorTable("w-leaf", (), np.array(leaf)),
        "w-branch": FactorTable("w-branch", (), np.array(branch)),
    }
    return FGG(labels=labels, rules=[leaf_rule, branch_rule], start="S",
               domains={}, factors=factors)
