"""CNF formulas as immutable values, with DIMACS parsing and editing.

Literals are DIMACS-signed integers: ``+v`` is the positive literal of
variable ``v`` (``v >= 1``), ``-v`` its negation. A clause is a tuple of
literals, a formula a tuple of clauses. All editing operations return new
values; nothing mutates in place, so formulas can be shared freely.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable


class CnfWarning(UserWarning):
    """Recoverable oddity in a parsed or edited formula (dup literal, tautology)."""


class DimacsError(ValueError):
    """Malformed DIMACS input; message carries the offending line number."""


def neg(lit: int) -> int:
    """Negate a literal. Involution: neg(neg(l)) == l."""
    return -lit


def variable(lit: int) -> int:
    return abs(lit)


def is_tautology(clause: Iterable[int]) -> bool:
    lits = set(clause)
    return any(-l in lits for l in lits)


@dataclass(frozen=True)
class Cnf:
    """A CNF formula: declared variable count plus an ordered clause list.

    Clause identity is positional; duplicate clauses are legal and stay
    distinct because core labels refer to clause indices.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.num_vars < 0:
            raise ValueError(f"num_vars must be >= 0, got {self.num_vars}")
        for i, clause in enumerate(self.clauses):
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(
                        f"clause {i}: literal {lit} outside variable range 1..{self.num_vars}"
                    )

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def subformula(self, indices: Iterable[int]) -> "Cnf":
        """Formula restricted to the given clause indices (original num_vars kept)."""
        idx = sorted(set(indices))
        return Cnf(self.num_vars, tuple(self.clauses[i] for i in idx))


def from_clauses(clauses: Iterable[Iterable[int]], num_vars: int | None = None) -> Cnf:
    """Build a Cnf from clause iterables, inferring num_vars when not given."""
    cl = tuple(tuple(c) for c in clauses)
    if num_vars is None:
        num_vars = max((abs(l) for c in cl for l in c), default=0)
    return Cnf(num_vars, cl)


def parse_dimacs(text: str, strict: bool = True) -> Cnf:
    """Parse DIMACS CNF text.

    Comment lines start with ``c``; one ``p cnf <vars> <clauses>`` header;
    clauses are signed integers terminated by ``0`` and may span lines.
    Duplicate literals inside a clause are dropped with a CnfWarning;
    tautological clauses are kept but flagged. With strict=True a clause
    count differing from the header is an error.
    """
    header: tuple[int, int] | None = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    seen: set[int] = set()
    last_line = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        last_line = lineno
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsError(f"line {lineno}: negative counts in header")
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause data before 'p cnf' header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad token {tok!r}") from None
            if lit == 0:
                if is_tautology(current):
                    warnings.warn(
                        f"line {lineno}: tautological clause {current}", CnfWarning, stacklevel=2
                    )
                clauses.append(tuple(current))
                current = []
                seen = set()
                continue
            if abs(lit) > header[0]:
                raise DimacsError(
                    f"line {lineno}: literal {lit} exceeds declared variable count {header[0]}"
                )
            if lit in seen:
                warnings.warn(
                    f"line {lineno}: duplicate literal {lit} in clause", CnfWarning, stacklevel=2
                )
                continue
            seen.add(lit)
            current.append(lit)

    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        raise DimacsError(f"line {last_line}: clause not terminated by 0")
    if strict and len(clauses) != header[1]:
        raise DimacsError(
            f"line {last_line}: header declares {header[1]} clauses, found {len(clauses)}"
        )
    return Cnf(header[0], tuple(clauses))


def serialize_dimacs(cnf: Cnf) -> str:
    """Serialize to DIMACS; parse(serialize(c)) == c, clause and literal order kept."""
    lines = [f"p cnf {cnf.num_vars} {cnf.num_clauses}"]
    for clause in cnf.clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"


def add_literal(cnf: Cnf, clause_index: int, lit: int) -> Cnf:
    """Return a copy of cnf with lit appended to one clause.

    The literal's variable must not already occur in the target clause
    (either polarity). A fresh variable num_vars+1 is allowed and raises
    the declared variable count.
    """
    if not 0 <= clause_index < cnf.num_clauses:
        raise IndexError(f"clause index {clause_index} out of range 0..{cnf.num_clauses - 1}")
    if lit == 0:
        raise ValueError("literal must be nonzero")
    var = abs(lit)
    if var > cnf.num_vars + 1:
        raise ValueError(
            f"variable {var} skips indices; at most one fresh variable ({cnf.num_vars + 1}) allowed"
        )
    target = cnf.clauses[clause_index]
    if any(abs(l) == var for l in target):
        raise ValueError(
            f"variable {var} already occurs in clause {clause_index}; "
            "adding it would duplicate or create a tautology"
        )
    clauses = list(cnf.clauses)
    clauses[clause_index] = target + (lit,)
    return Cnf(max(cnf.num_vars, var), tuple(clauses))
