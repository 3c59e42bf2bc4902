from __future__ import annotations

import random

import pytest

from oracles import model_satisfies, truth_table_status
from unsatgen.cnf import Cnf, from_clauses
from unsatgen.solver import (
    PORTFOLIO,
    Solver,
    SolverConfig,
    SolverLimitError,
    is_unsat,
    solve,
)


def random_cnf(rng: random.Random, max_vars: int = 10) -> Cnf:
    n = rng.randint(1, max_vars)
    m = rng.randint(1, 5 * n)
    clauses = []
    for _ in range(m):
        k = rng.randint(1, min(3, n))
        vs = rng.sample(range(1, n + 1), k)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return from_clauses(clauses, n)


def test_trivial_core_is_unsat(trivial_core):
    assert solve(trivial_core).status == "unsat"
    assert is_unsat(trivial_core)


def test_decored_trivial_core_is_sat(trivial_core):
    # (A|B|C)(−A|B)(A|−B)(−A|−B): A=0,B=0,C=0 satisfies it
    cnf = Cnf(3, ((1, 2, 3),) + trivial_core.clauses[1:])
    res = solve(cnf)
    assert res.status == "sat"
    assert model_satisfies(cnf, res.model)


def test_empty_formula_sat_zero_conflicts():
    res = solve(Cnf(3, ()))
    assert res.status == "sat"
    assert len(res.model) == 3
    assert res.stats.conflicts == 0


def test_empty_clause_unsat():
    res = solve(Cnf(1, ((),)))
    assert res.status == "unsat"
    assert res.final_conflict == frozenset()


def test_single_unit_clause():
    assert not is_unsat(Cnf(1, ((1,),)))


def test_agreement_with_truth_table_all_presets():
    rng = random.Random(42)
    for _ in range(150):
        cnf = random_cnf(rng)
        want = truth_table_status(cnf)
        for config in PORTFOLIO:
            res = solve(cnf, (), config)
            assert res.status == want, (cnf, config)
            if res.status == "sat":
                assert model_satisfies(cnf, res.model)


def test_propagation_only_instances_have_zero_conflicts():
    # implication chain ending in a unit: BCP alone satisfies it during search
    cnf = from_clauses([(-1, 2), (-2, 3), (-3, 4), (1,)])
    res = solve(cnf)
    assert res.status == "sat"
    assert res.stats.conflicts == 0
    assert res.stats.propagations >= 3


def test_stats_non_negative():
    rng = random.Random(1)
    for _ in range(20):
        res = solve(random_cnf(rng))
        s = res.stats
        assert s.conflicts >= 0 and s.decisions >= 0 and s.propagations >= 0
        assert s.wall_seconds >= 0.0


def test_determinism_bit_for_bit():
    rng = random.Random(9)
    cnf = random_cnf(rng, max_vars=14)
    for config in PORTFOLIO:
        a = solve(cnf, (), config)
        b = solve(cnf, (), config)
        assert a.status == b.status
        assert a.model == b.model
        assert (a.stats.conflicts, a.stats.decisions, a.stats.propagations) == (
            b.stats.conflicts,
            b.stats.decisions,
            b.stats.propagations,
        )


def test_assumptions_basic():
    cnf = from_clauses([(1, 2)])
    assert solve(cnf, (-1,)).status == "sat"
    res = solve(cnf, (-1, -2))
    assert res.status == "unsat"
    assert res.final_conflict <= {-1, -2}


def test_final_conflict_is_sufficient():
    # x1 and x2 force a conflict through (−1 | −2); x3 is irrelevant
    cnf = from_clauses([(-1, -2), (3, -3, 4)][:1] + [(4, 5)])
    res = solve(cnf, (1, 2, 5))
    assert res.status == "unsat"
    assert res.final_conflict <= {1, 2}
    # the returned subset must itself be unsatisfiable with the formula
    again = solve(cnf, tuple(res.final_conflict))
    assert again.status == "unsat"


def test_final_conflict_random_instances():
    rng = random.Random(5)
    checked = 0
    for _ in range(200):
        cnf = random_cnf(rng, max_vars=8)
        assumptions = tuple(
            v if rng.random() < 0.5 else -v
            for v in rng.sample(range(1, cnf.num_vars + 1), min(3, cnf.num_vars))
        )
        res = solve(cnf, assumptions)
        if res.status != "unsat" or not res.final_conflict:
            continue
        checked += 1
        assert res.final_conflict <= set(assumptions)
        assert solve(cnf, tuple(res.final_conflict)).status == "unsat"
    assert checked > 10


def test_assumption_out_of_range():
    with pytest.raises(ValueError):
        solve(Cnf(2, ((1,),)), (5,))


def test_conflict_limit_returns_unknown():
    # pigeonhole-ish hard instance: 5 vars but a contradiction needing search
    rng = random.Random(11)
    found = False
    for _ in range(100):
        cnf = random_cnf(rng, max_vars=12)
        config = SolverConfig(conflict_limit=1)
        res = solve(cnf, (), config)
        if res.status == "unknown":
            found = True
            assert res.stats.conflicts >= 1
            break
    assert found
    with pytest.raises(SolverLimitError):
        while True:  # is_unsat must surface unknown as an error
            cnf = random_cnf(rng, max_vars=12)
            if solve(cnf).stats.conflicts > 2:
                is_unsat(cnf, SolverConfig(conflict_limit=1))


def test_incremental_reuse():
    s = Solver(3)
    s.add_clause((1, 2))
    assert s.solve().status == "sat"
    s.add_clause((-1,))
    s.add_clause((-2,))
    assert s.solve().status == "unsat"
    # solver stays usable and reports unsat from then on
    assert s.solve().status == "unsat"


def test_tautology_never_blocks():
    cnf = from_clauses([(1, -1), (2,)])
    res = solve(cnf)
    assert res.status == "sat"
    assert res.model[2] is True


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(branching="dpll")
    with pytest.raises(ValueError):
        SolverConfig(phase="warm")
    with pytest.raises(ValueError):
        SolverConfig(restart_interval=0)


def test_portfolio_presets_differ_on_effort():
    rng = random.Random(17)
    # ratio-4.6 instances: hard enough that heuristics diverge
    n = 30
    clauses = []
    seen = set()
    while len(clauses) < int(4.6 * n):
        vs = tuple(sorted(rng.sample(range(1, n + 1), 3)))
        cl = tuple(v if rng.random() < 0.5 else -v for v in vs)
        if frozenset(cl) in seen:
            continue
        seen.add(frozenset(cl))
        clauses.append(cl)
    cnf = from_clauses(clauses, n)
    efforts = {config.branching + config.phase: solve(cnf, (), config).stats.conflicts
               for config in PORTFOLIO}
    assert len(set(efforts.values())) > 1
