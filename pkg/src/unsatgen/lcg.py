"""Directed literal-clause graph construction for the core predictor.

Node layout is fixed: literal nodes come first, clause nodes after.
Literal node index = 2*(var-1) + (0 positive / 1 negative); clause node
index = 2*num_vars + clause index. Three directed edge sets connect them:
literal->clause (one per occurrence), clause->literal (the reverse), and
literal<->literal between the two polarities of each variable.

Initial node features are 4-dimensional and must stay identical between
training and inference:

    [is_literal_node, is_clause_node, degree / max_degree, polarity_bit]

where degree counts incoming edges over all three edge sets and
polarity_bit is 1 for positive-literal nodes, 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnf import Cnf

FEATURE_DIM = 4


@dataclass(frozen=True)
class Lcg:
    num_vars: int
    num_clauses: int
    edges_lc: np.ndarray  # (E, 2) int32, rows (literal_node, clause_node)
    edges_cl: np.ndarray  # (E, 2) int32, rows (clause_node, literal_node)
    edges_ll: np.ndarray  # (2*num_vars, 2) int32
    features: np.ndarray  # (num_nodes, FEATURE_DIM) float64

    @property
    def num_literal_nodes(self) -> int:
        return 2 * self.num_vars

    @property
    def num_nodes(self) -> int:
        return 2 * self.num_vars + self.num_clauses

    def clause_node(self, clause_index: int) -> int:
        return 2 * self.num_vars + clause_index

    @staticmethod
    def literal_node(lit: int) -> int:
        return 2 * (abs(lit) - 1) + (lit < 0)


def build_lcg(cnf: Cnf) -> Lcg:
    """Build the graph for a formula. Isolated literal nodes are kept so
    every declared variable is present regardless of occurrences."""
    nv, nc = cnf.num_vars, cnf.num_clauses
    n_lit = 2 * nv
    lit_nodes: list[int] = []
    clause_nodes: list[int] = []
    for ci, clause in enumerate(cnf.clauses):
        cn = n_lit + ci
        for lit in clause:
            lit_nodes.append(Lcg.literal_node(lit))
            clause_nodes.append(cn)
    edges_lc = np.column_stack(
        [
            np.asarray(lit_nodes, dtype=np.int32),
            np.asarray(clause_nodes, dtype=np.int32),
        ]
    ) if lit_nodes else np.empty((0, 2), dtype=np.int32)
    edges_cl = edges_lc[:, ::-1].copy() if len(edges_lc) else np.empty((0, 2), dtype=np.int32)

    ll = np.empty((n_lit, 2), dtype=np.int32)
    for v in range(nv):
        ll[2 * v] = (2 * v, 2 * v + 1)
        ll[2 * v + 1] = (2 * v + 1, 2 * v)

    n_nodes = n_lit + nc
    indeg = np.zeros(n_nodes, dtype=np.int64)
    for edges in (edges_lc, edges_cl, ll):
        if len(edges):
            np.add.at(indeg, edges[:, 1], 1)
    max_deg = int(indeg.max()) if n_nodes else 0

    features = np.zeros((n_nodes, FEATURE_DIM), dtype=np.float64)
    features[:n_lit, 0] = 1.0
    features[n_lit:, 1] = 1.0
    if max_deg > 0:
        features[:, 2] = indeg / max_deg
    features[0:n_lit:2, 3] = 1.0  # positive-literal nodes

    return Lcg(nv, nc, edges_lc, edges_cl, ll, features)


def edges_csv(lcg: Lcg) -> str:
    """Debug dump: one 'src,dst,type' line per directed edge."""
    lines = ["src,dst,type"]
    for name, edges in (("lc", lcg.edges_lc), ("cl", lcg.edges_cl), ("ll", lcg.edges_ll)):
        for src, dst in edges:
            lines.append(f"{src},{dst},{name}")
    return "\n".join(lines) + "\n"
