"""Minimal unsatisfiable subset (core) extraction and verification.

Deletion-based extraction over one incremental solver: every clause gets a
fresh selector variable, clause i becomes (c_i or -s_i), and assuming s_i
enables the clause. Disabling a clause is simply not assuming its selector.
The solver's final-conflict analysis shrinks the candidate set before and
during the deletion sweep, so the sweep needs far fewer probes than one per
clause.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .cnf import Cnf
from .solver import Solver, SolverConfig, SolverLimitError


class SatInputError(ValueError):
    """The input formula is satisfiable, so it has no unsatisfiable core."""


@dataclass(frozen=True)
class CoreLabel:
    """Per-clause core membership: indices into a Cnf's clause list.

    source is "oracle" for exact extraction results (minimal by
    construction) or "predicted" for model outputs.
    """

    clause_indices: frozenset[int]
    source: str = "oracle"

    def __post_init__(self) -> None:
        if self.source not in ("oracle", "predicted"):
            raise ValueError(f"source must be 'oracle' or 'predicted', got {self.source!r}")

    def sorted(self) -> list[int]:
        return sorted(self.clause_indices)


def _selector_solver(cnf: Cnf, indices: Iterable[int], config: SolverConfig | None) -> tuple[Solver, dict[int, int]]:
    """Solver holding the indexed clauses, each guarded by a selector variable."""
    s = Solver(cnf.num_vars, config or SolverConfig())
    selectors: dict[int, int] = {}
    for i in sorted(set(indices)):
        sv = s.new_var()
        selectors[i] = sv
        s.add_clause(cnf.clauses[i] + (-sv,))
    return s, selectors


def extract_mus(
    cnf: Cnf,
    config: SolverConfig | None = None,
    restrict_to: Iterable[int] | None = None,
) -> CoreLabel:
    """Extract one minimal unsatisfiable subset of an UNSAT formula.

    Deterministic: the deletion sweep visits clauses in ascending index
    order, so a fixed clause order and config always yield the same MUS
    (formulas generally contain several). restrict_to limits the search to a
    clause subset; the result is then an MUS of that subformula (indices
    still refer to the full formula).

    Raises SatInputError if the (sub)formula is satisfiable and
    SolverLimitError if the config's conflict limit interrupts a probe.
    """
    indices = range(cnf.num_clauses) if restrict_to is None else restrict_to
    s, selectors = _selector_solver(cnf, indices, config)
    order = sorted(selectors)
    res = s.solve([selectors[i] for i in order])
    if res.status == "sat":
        raise SatInputError("input is satisfiable; no core exists")
    if res.status == "unknown":
        raise SolverLimitError("conflict limit hit while checking unsatisfiability")

    fc = res.final_conflict or frozenset()
    cand = [i for i in order if selectors[i] in fc]
    kept: list[int] = []
    pos = 0
    while pos < len(cand):
        rest = cand[pos + 1 :]
        probe = [selectors[j] for j in kept] + [selectors[j] for j in rest]
        res = s.solve(probe)
        if res.status == "unknown":
            raise SolverLimitError(f"conflict limit hit while probing clause {cand[pos]}")
        if res.status == "sat":
            kept.append(cand[pos])
            pos += 1
        else:
            fc = res.final_conflict or frozenset()
            cand = cand[:pos] + [j for j in rest if selectors[j] in fc]
    return CoreLabel(frozenset(kept), source="oracle")


def verify_mus(cnf: Cnf, label: CoreLabel, config: SolverConfig | None = None) -> bool:
    """True iff the labelled subset is UNSAT and every single-clause removal is SAT."""
    indices = label.sorted()
    for i in indices:
        if not 0 <= i < cnf.num_clauses:
            raise IndexError(f"core index {i} out of range 0..{cnf.num_clauses - 1}")
    if not indices:
        return False
    s, selectors = _selector_solver(cnf, indices, config)
    res = s.solve([selectors[i] for i in indices])
    if res.status == "unknown":
        raise SolverLimitError("conflict limit hit during core verification")
    if res.status != "unsat":
        return False
    for drop in indices:
        res = s.solve([selectors[i] for i in indices if i != drop])
        if res.status == "unknown":
            raise SolverLimitError("conflict limit hit during minimality check")
        if res.status != "sat":
            return False
    return True


def core_to_json(label: CoreLabel, instance: str | None = None) -> str:
    return json.dumps(
        {"instance": instance, "core": label.sorted(), "source": label.source},
        indent=None,
    )


def core_from_json(text: str) -> tuple[CoreLabel, str | None]:
    data = json.loads(text)
    label = CoreLabel(frozenset(int(i) for i in data["core"]), source=data["source"])
    return label, data.get("instance")
