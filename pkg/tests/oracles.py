"""Independent brute-force oracles used to check the solver and core modules.

These never call the code paths they verify: satisfiability is decided by
exhaustive truth-table enumeration (big-integer bitmasks: column v holds the
truth value of variable v across all 2^n assignments), and minimal
unsatisfiable subsets by enumerating every clause subset.
"""

from __future__ import annotations

from unsatgen.cnf import Cnf


def _column(v: int, n: int) -> int:
    """Bitmask over 2^n assignments where bit a is (a >> (v-1)) & 1."""
    p = 1 << (v - 1)
    block = ((1 << p) - 1) << p  # p zeros then p ones
    reps = (1 << n) // (2 * p)
    return block * (((1 << (2 * p * reps)) - 1) // ((1 << (2 * p)) - 1))


def clause_mask(clause: tuple[int, ...], n: int) -> int:
    full = (1 << (1 << n)) - 1
    m = 0
    for lit in clause:
        col = _column(abs(lit), n)
        m |= col if lit > 0 else (full ^ col)
    return m


def truth_table_status(cnf: Cnf) -> str:
    """'sat' or 'unsat' by full enumeration. Feasible up to ~20 variables."""
    n = cnf.num_vars
    mask = (1 << (1 << n)) - 1
    for clause in cnf.clauses:
        mask &= clause_mask(clause, n)
        if mask == 0:
            return "unsat"
    return "sat"


def model_satisfies(cnf: Cnf, model: dict[int, bool]) -> bool:
    return all(
        any(model[abs(l)] == (l > 0) for l in clause) for clause in cnf.clauses
    )


def enumerate_mus_family(cnf: Cnf) -> list[frozenset[int]]:
    """All subset-minimal UNSAT clause subsets, by exhausting 2^m subsets."""
    m = cnf.num_clauses
    n = cnf.num_vars
    full = (1 << (1 << n)) - 1
    masks = [clause_mask(c, n) for c in cnf.clauses]
    unsat_subsets = []
    for sub in range(1, 1 << m):
        acc = full
        for i in range(m):
            if sub >> i & 1:
                acc &= masks[i]
            if acc == 0:
                break
        if acc == 0:
            unsat_subsets.append(sub)
    minimal = []
    for s in unsat_subsets:
        if not any(t != s and t & s == t for t in unsat_subsets):
            minimal.append(frozenset(i for i in range(m) if s >> i & 1))
    return minimal
