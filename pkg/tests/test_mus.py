from __future__ import annotations

import json
import random

import pytest

from oracles import enumerate_mus_family, truth_table_status
from unsatgen.cnf import Cnf, from_clauses
from unsatgen.mus import (
    CoreLabel,
    SatInputError,
    core_from_json,
    core_to_json,
    extract_mus,
    verify_mus,
)
from unsatgen.solver import SolverConfig, SolverLimitError


def small_unsat_instances(count: int, seed: int = 0, max_clauses: int = 12):
    """Random small UNSAT formulas (2-3 literal clauses over few variables)."""
    rng = random.Random(seed)
    found = []
    while len(found) < count:
        n = rng.randint(2, 5)
        m = rng.randint(4, max_clauses)
        clauses = []
        for _ in range(m):
            k = rng.randint(2, min(3, n))
            vs = rng.sample(range(1, n + 1), k)
            clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
        cnf = from_clauses(clauses, n)
        if truth_table_status(cnf) == "unsat":
            found.append(cnf)
    return found


def test_trivial_core_is_its_own_mus(trivial_core):
    label = extract_mus(trivial_core)
    assert label.clause_indices == frozenset({0, 1, 2, 3})
    assert label.source == "oracle"


def test_irrelevant_clause_excluded(trivial_core):
    cnf = Cnf(3, trivial_core.clauses + ((3,),))
    label = extract_mus(cnf)
    assert label.clause_indices == frozenset({0, 1, 2, 3})
    # brute force confirms that MUS is unique here
    assert enumerate_mus_family(cnf) == [frozenset({0, 1, 2, 3})]


def test_sat_input_rejected(trivial_core):
    cnf = Cnf(3, ((1, 2, 3),) + trivial_core.clauses[1:])
    with pytest.raises(SatInputError):
        extract_mus(cnf)


def test_extract_output_in_enumerated_family():
    for cnf in small_unsat_instances(30, seed=3):
        label = extract_mus(cnf)
        family = enumerate_mus_family(cnf)
        assert label.clause_indices in family
        assert verify_mus(cnf, label)


def test_extract_deterministic():
    for cnf in small_unsat_instances(5, seed=8):
        a = extract_mus(cnf)
        b = extract_mus(cnf)
        assert a.clause_indices == b.clause_indices


def test_restrict_to_subset(trivial_core):
    cnf = Cnf(3, ((3,), (-3,)) + trivial_core.clauses)
    label = extract_mus(cnf, restrict_to=range(2, 6))
    assert label.clause_indices == frozenset({2, 3, 4, 5})
    with pytest.raises(SatInputError):
        extract_mus(cnf, restrict_to=[0, 2, 3])  # satisfiable subset


def test_verify_accepts_true_core(trivial_core):
    assert verify_mus(trivial_core, CoreLabel(frozenset({0, 1, 2, 3})))


def test_verify_rejects_sat_subset(trivial_core):
    # first three clauses are satisfied by A=true, B=true
    assert not verify_mus(trivial_core, CoreLabel(frozenset({0, 1, 2})))


def test_verify_rejects_non_minimal(trivial_core):
    cnf = Cnf(3, trivial_core.clauses + ((3,),))
    assert not verify_mus(cnf, CoreLabel(frozenset({0, 1, 2, 3, 4})))


def test_verify_empty_label_is_false(trivial_core):
    assert not verify_mus(trivial_core, CoreLabel(frozenset()))


def test_verify_index_out_of_range(trivial_core):
    with pytest.raises(IndexError):
        verify_mus(trivial_core, CoreLabel(frozenset({9})))


def test_conflict_limit_aborts(trivial_core):
    config = SolverConfig(conflict_limit=1)
    hard = small_unsat_instances(1, seed=21, max_clauses=12)[0]
    try:
        extract_mus(hard, config)
    except SolverLimitError:
        pass  # acceptable: the probe hit the budget and said so


def test_core_label_validation():
    with pytest.raises(ValueError):
        CoreLabel(frozenset(), source="guess")


def test_core_json_roundtrip(trivial_core):
    label = extract_mus(trivial_core)
    text = core_to_json(label, instance="seed.cnf")
    data = json.loads(text)
    assert data == {"instance": "seed.cnf", "core": [0, 1, 2, 3], "source": "oracle"}
    back, instance = core_from_json(text)
    assert back == label
    assert instance == "seed.cnf"
