from __future__ import annotations

import random

import pytest

from unsatgen.cnf import (
    Cnf,
    CnfWarning,
    DimacsError,
    add_literal,
    from_clauses,
    is_tautology,
    neg,
    parse_dimacs,
    serialize_dimacs,
)


def test_parse_smallest_instance():
    cnf = parse_dimacs("p cnf 2 1\n1 -2 0")
    assert cnf == Cnf(2, ((1, -2),))


def test_parse_trivial_core(trivial_core):
    assert trivial_core.num_vars == 2
    assert trivial_core.clauses == ((1, 2), (-1, 2), (1, -2), (-1, -2))


def test_parse_literal_exceeding_declared_vars():
    with pytest.raises(DimacsError, match="exceeds declared"):
        parse_dimacs("p cnf 1 1\n2 0")


def test_parse_reports_line_numbers():
    with pytest.raises(DimacsError, match="line 3"):
        parse_dimacs("c comment\np cnf 3 1\n1 4 0")


def test_parse_comments_crlf_and_multiline_clauses():
    cnf = parse_dimacs("c hi\r\np cnf 3 2\r\n1 2\r\n3 0\r\n-1 0\r\n")
    assert cnf.clauses == ((1, 2, 3), (-1,))


def test_parse_clause_count_mismatch_strict_vs_lenient():
    text = "p cnf 2 3\n1 0\n2 0\n"
    with pytest.raises(DimacsError, match="declares 3"):
        parse_dimacs(text)
    assert parse_dimacs(text, strict=False).num_clauses == 2


def test_parse_missing_terminator():
    with pytest.raises(DimacsError, match="not terminated"):
        parse_dimacs("p cnf 2 1\n1 2")


def test_parse_missing_header():
    with pytest.raises(DimacsError, match="header"):
        parse_dimacs("1 2 0")


def test_duplicate_literal_dedup_with_warning():
    with pytest.warns(CnfWarning, match="duplicate"):
        cnf = parse_dimacs("p cnf 2 1\n1 2 1 0")
    assert cnf.clauses == ((1, 2),)


def test_tautology_flagged_but_kept():
    with pytest.warns(CnfWarning, match="tautolog"):
        cnf = parse_dimacs("p cnf 1 1\n1 -1 0")
    assert cnf.clauses == ((1, -1),)
    assert is_tautology(cnf.clauses[0])


def test_serialize_single_unit():
    assert serialize_dimacs(Cnf(1, ((1,),))) == "p cnf 1 1\n1 0\n"


def test_serialize_trivial_core_shape(trivial_core):
    text = serialize_dimacs(trivial_core)
    lines = text.splitlines()
    assert lines[0] == "p cnf 2 4"
    assert len(lines) == 5


def test_roundtrip_random_formulas():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 12)
        clauses = []
        for _ in range(rng.randint(0, 30)):
            k = rng.randint(1, min(4, n))
            vs = rng.sample(range(1, n + 1), k)
            clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
        cnf = Cnf(n, tuple(clauses))
        assert parse_dimacs(serialize_dimacs(cnf)) == cnf


def test_literal_negation_involution():
    assert neg(neg(5)) == 5
    assert neg(neg(-9)) == -9


def test_cnf_rejects_out_of_range_literal():
    with pytest.raises(ValueError, match="outside variable range"):
        Cnf(2, ((3,),))


def test_add_literal_fresh_variable(trivial_core):
    # adding C to (A | B) makes the trivial core satisfiable downstream
    out = add_literal(trivial_core, 0, 3)
    assert out.num_vars == 3
    assert out.clauses[0] == (1, 2, 3)
    assert out.clauses[1:] == trivial_core.clauses[1:]
    # value semantics: the original is unchanged
    assert trivial_core.num_vars == 2
    assert trivial_core.clauses[0] == (1, 2)


def test_add_literal_existing_variable():
    cnf = Cnf(2, ((1,),))
    assert add_literal(cnf, 0, -2).clauses == ((1, -2),)


def test_add_literal_duplicate_variable_rejected(trivial_core):
    with pytest.raises(ValueError, match="already occurs"):
        add_literal(trivial_core, 0, 1)
    with pytest.raises(ValueError, match="already occurs"):
        add_literal(trivial_core, 0, -1)


def test_add_literal_index_and_skip_checks(trivial_core):
    with pytest.raises(IndexError):
        add_literal(trivial_core, 4, 1)
    with pytest.raises(ValueError, match="fresh"):
        add_literal(trivial_core, 0, 5)


def test_add_literal_only_touches_target():
    rng = random.Random(3)
    cnf = from_clauses([(1, 2), (2, 3), (-1, -3)])
    for idx in range(cnf.num_clauses):
        free = [v for v in range(1, cnf.num_vars + 2) if v not in {abs(l) for l in cnf.clauses[idx]}]
        lit = rng.choice(free)
        out = add_literal(cnf, idx, lit)
        assert len(out.clauses[idx]) == len(cnf.clauses[idx]) + 1
        for j in range(cnf.num_clauses):
            if j != idx:
                assert out.clauses[j] == cnf.clauses[j]


def test_subformula():
    cnf = from_clauses([(1,), (2,), (3,)])
    assert cnf.subformula([2, 0]).clauses == ((1,), (3,))
