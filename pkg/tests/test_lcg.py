from __future__ import annotations

import numpy as np

from unsatgen.cnf import Cnf, parse_dimacs
from unsatgen.lcg import FEATURE_DIM, Lcg, build_lcg, edges_csv


def test_single_clause_graph():
    g = build_lcg(Cnf(2, ((1, -2),)))
    assert g.num_literal_nodes == 4
    assert g.num_clauses == 1
    assert len(g.edges_lc) == 2
    assert len(g.edges_cl) == 2
    assert len(g.edges_ll) == 4


def test_trivial_core_counts(trivial_core):
    g = build_lcg(trivial_core)
    assert g.num_literal_nodes == 4
    assert g.num_clauses == 4
    assert len(g.edges_lc) == 8  # 4 clauses x 2 literals
    assert len(g.edges_ll) == 4


def test_node_indexing():
    assert Lcg.literal_node(1) == 0
    assert Lcg.literal_node(-1) == 1
    assert Lcg.literal_node(3) == 4
    g = build_lcg(Cnf(2, ((1,), (2,))))
    assert g.clause_node(0) == 4
    assert g.clause_node(1) == 5


def test_lc_cl_edge_pairing(trivial_core):
    g = build_lcg(trivial_core)
    lc = {tuple(e) for e in g.edges_lc}
    cl = {tuple(e) for e in g.edges_cl}
    assert {(b, a) for a, b in lc} == cl


def test_unused_variable_keeps_isolated_nodes():
    g = build_lcg(Cnf(3, ((1, -2),)))
    assert g.num_literal_nodes == 6
    # var 3's nodes appear only in the literal-literal pairing
    targets = {tuple(e) for e in g.edges_ll}
    assert (4, 5) in targets and (5, 4) in targets
    occupied = set(g.edges_lc[:, 0].tolist())
    assert 4 not in occupied and 5 not in occupied


def test_feature_layout(trivial_core):
    g = build_lcg(trivial_core)
    f = g.features
    assert f.shape == (8, FEATURE_DIM)
    n_lit = g.num_literal_nodes
    assert (f[:n_lit, 0] == 1.0).all() and (f[:n_lit, 1] == 0.0).all()
    assert (f[n_lit:, 1] == 1.0).all() and (f[n_lit:, 0] == 0.0).all()
    # polarity bit set exactly on positive literal nodes
    assert (f[0:n_lit:2, 3] == 1.0).all()
    assert (f[1:n_lit:2, 3] == 0.0).all()
    assert (f[n_lit:, 3] == 0.0).all()
    # every literal occurs twice plus one ll edge; max degree = 3
    assert np.allclose(f[:n_lit, 2], 1.0)
    assert np.allclose(f[n_lit:, 2], 2.0 / 3.0)


def test_clause_permutation_is_isomorphic(trivial_core):
    g = build_lcg(trivial_core)
    perm = [2, 0, 3, 1]
    permuted = Cnf(trivial_core.num_vars, tuple(trivial_core.clauses[i] for i in perm))
    g2 = build_lcg(permuted)
    # multisets of (literal node, clause content) adjacency agree
    def adjacency(graph, cnf):
        pairs = set()
        for lit_node, clause_node in graph.edges_lc:
            clause = cnf.clauses[clause_node - graph.num_literal_nodes]
            pairs.add((int(lit_node), tuple(sorted(clause))))
        return pairs

    assert adjacency(g, trivial_core) == adjacency(g2, permuted)
    assert sorted(g.features[:, 2].tolist()) == sorted(g2.features[:, 2].tolist())


def test_edges_csv_dump():
    g = build_lcg(Cnf(1, ((1,),)))
    text = edges_csv(g)
    lines = text.strip().splitlines()
    assert lines[0] == "src,dst,type"
    assert f"0,{g.clause_node(0)},lc" in lines
    assert f"{g.clause_node(0)},0,cl" in lines
    assert "0,1,ll" in lines and "1,0,ll" in lines


def test_empty_formula():
    g = build_lcg(Cnf(0, ()))
    assert g.num_nodes == 0
    assert g.features.shape == (0, FEATURE_DIM)
