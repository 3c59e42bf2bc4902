"""Conflict-driven clause-learning SAT solver with assumptions and effort counters.

One embedded solver replaces an external solver portfolio: distinct
branching/phase presets (see PORTFOLIO) give complementary behaviour, and the
deterministic conflict count per preset is the hardness observable. Literals
cross the API as DIMACS-signed integers; internally they are encoded as
``(var << 1) | sign`` with sign 1 for negative.
"""

from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cnf import Cnf

BRANCHING = ("vsids", "lowest_index", "random")
PHASES = ("always_false", "always_true", "saved")


class SolverLimitError(RuntimeError):
    """A solve hit its conflict limit where a definite answer was required."""


@dataclass(frozen=True)
class SolverConfig:
    branching: str = "vsids"
    phase: str = "saved"
    restart_interval: int | None = 100
    conflict_limit: int | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.branching not in BRANCHING:
            raise ValueError(f"branching must be one of {BRANCHING}, got {self.branching!r}")
        if self.phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if self.restart_interval is not None and self.restart_interval < 1:
            raise ValueError("restart_interval must be positive or None")
        if self.conflict_limit is not None and self.conflict_limit < 1:
            raise ValueError("conflict_limit must be positive or None")


# Heuristic presets standing in for a multi-solver portfolio; hardness vectors
# carry one entry per preset, in this order.
PORTFOLIO: tuple[SolverConfig, ...] = (
    SolverConfig(branching="vsids", phase="always_false"),
    SolverConfig(branching="vsids", phase="always_true"),
    SolverConfig(branching="lowest_index", phase="always_false"),
    SolverConfig(branching="random", phase="saved", rng_seed=0x5EED),
)

PORTFOLIO_NAMES: tuple[str, ...] = ("vsids_false", "vsids_true", "lowest_index", "random")


@dataclass
class SolveStats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    wall_seconds: float = 0.0


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: dict[int, bool] | None = None
    stats: SolveStats = field(default_factory=SolveStats)
    # When unsat under assumptions: a subset of the assumptions sufficient for
    # unsatisfiability (empty when the formula is unsat on its own).
    final_conflict: frozenset[int] | None = None


class _Clause:
    __slots__ = ("lits", "act", "learnt")

    def __init__(self, lits: list[int], learnt: bool) -> None:
        self.lits = lits
        self.act = 0.0
        self.learnt = learnt


def _luby(x: int) -> int:
    """Luby restart sequence 1,1,2,1,1,2,4,... (0-based index)."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return 1 << seq


class Solver:
    """Incremental CDCL solver. add_clause between solve calls; learned
    clauses persist, so repeated assumption-based probes stay cheap."""

    def __init__(self, num_vars: int = 0, config: SolverConfig | None = None) -> None:
        self.config = config or SolverConfig()
        self.nvars = 0
        self.val: list[int] = [0, 0]  # per literal code: 0 unassigned, 1 true, -1 false
        self.watches: list[list[_Clause]] = [[], []]
        self.level_: list[int] = [0]
        self.reason_: list[_Clause | None] = [None]
        self.act: list[float] = [0.0]
        self.saved: list[int] = [1]  # phase sign bit per var; 1 = false
        self.seen: bytearray = bytearray(1)
        self.clauses: list[_Clause] = []
        self.learnts: list[_Clause] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.unsat_level0 = False
        self.var_inc = 1.0
        self.cla_inc = 1.0
        self.heap: list[tuple[float, int]] = []
        self._use_heap = self.config.branching == "vsids"
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        for _ in range(num_vars):
            self.new_var()

    # ------------------------------------------------------------------ setup

    def new_var(self) -> int:
        self.nvars += 1
        self.val.extend((0, 0))
        self.watches.append([])
        self.watches.append([])
        self.level_.append(0)
        self.reason_.append(None)
        self.act.append(0.0)
        self.saved.append(1)
        self.seen.append(0)
        return self.nvars

    @staticmethod
    def _code(lit: int) -> int:
        return (abs(lit) << 1) | (lit < 0)

    @staticmethod
    def _decode(code: int) -> int:
        v = code >> 1
        return -v if code & 1 else v

    def add_clause(self, lits: Iterable[int]) -> None:
        """Add a clause of signed literals. Only legal between solve calls."""
        assert not self.trail_lim, "add_clause only between solve calls"
        codes: list[int] = []
        seen: set[int] = set()
        for lit in lits:
            if lit == 0:
                raise ValueError("literal 0 in clause")
            while abs(lit) > self.nvars:
                self.new_var()
            c = self._code(lit)
            if c in seen:
                continue
            if c ^ 1 in seen:
                return  # tautology: always satisfied, never stored
            seen.add(c)
            codes.append(c)
        val = self.val
        out = []
        for c in codes:  # level-0 simplification
            if val[c] > 0:
                return
            if val[c] == 0:
                out.append(c)
        if not out:
            self.unsat_level0 = True
            return
        if len(out) == 1:
            self._enqueue(out[0], None)
            return
        cl = _Clause(out, learnt=False)
        self.clauses.append(cl)
        self.watches[out[0]].append(cl)
        self.watches[out[1]].append(cl)

    # ------------------------------------------------------- assignment state

    def _enqueue(self, code: int, reason: _Clause | None) -> None:
        self.val[code] = 1
        self.val[code ^ 1] = -1
        v = code >> 1
        self.level_[v] = len(self.trail_lim)
        self.reason_[v] = reason
        self.trail.append(code)

    def _backtrack(self, level: int) -> None:
        if len(self.trail_lim) <= level:
            return
        bound = self.trail_lim[level]
        val, saved, reason_ = self.val, self.saved, self.reason_
        use_heap, heap, act = self._use_heap, self.heap, self.act
        for i in range(len(self.trail) - 1, bound - 1, -1):
            code = self.trail[i]
            v = code >> 1
            saved[v] = code & 1
            val[code] = 0
            val[code ^ 1] = 0
            reason_[v] = None
            if use_heap:
                heapq.heappush(heap, (-act[v], v))
        del self.trail[bound:]
        del self.trail_lim[level:]
        self.qhead = bound

    # ------------------------------------------------------------ propagation

    def _propagate(self) -> _Clause | None:
        val = self.val
        watches = self.watches
        trail = self.trail
        level_ = self.level_
        reason_ = self.reason_
        lvl = len(self.trail_lim)
        props = 0
        confl: _Clause | None = None
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            falsified = p ^ 1
            ws = watches[falsified]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                lits = c.lits
                if lits[0] == falsified:
                    lits[0] = lits[1]
                    lits[1] = falsified
                first = lits[0]
                if val[first] > 0:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(lits)):
                    lk = lits[k]
                    if val[lk] >= 0:
                        lits[1] = lk
                        lits[k] = falsified
                        watches[lk].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if val[first] < 0:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        confl = c
                        break
                    val[first] = 1
                    val[first ^ 1] = -1
                    v = first >> 1
                    level_[v] = lvl
                    reason_[v] = c
                    trail.append(first)
                    props += 1
            del ws[j:]
            if confl is not None:
                break
        self.propagations += props
        return confl

    # ------------------------------------------------------ conflict analysis

    def _bump_var(self, v: int) -> None:
        self.act[v] += self.var_inc
        if self.act[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.act[u] *= 1e-100
            self.var_inc *= 1e-100
            if self._use_heap:
                self._init_heap()

    def _analyze(self, confl: _Clause) -> tuple[list[int], int]:
        seen = self.seen
        level_ = self.level_
        trail = self.trail
        cur_level = len(self.trail_lim)
        learnt: list[int] = [0]
        to_clear: list[int] = []
        counter = 0
        p = -1
        idx = len(trail) - 1
        c: _Clause | None = confl
        while True:
            assert c is not None
            if c.learnt:
                c.act += self.cla_inc
                if c.act > 1e20:
                    for cl in self.learnts:
                        cl.act *= 1e-20
                    self.cla_inc *= 1e-20
            lits = c.lits
            for k in range(0 if p < 0 else 1, len(lits)):
                q = lits[k]
                v = q >> 1
                if not seen[v] and level_[v] > 0:
                    seen[v] = 1
                    to_clear.append(v)
                    self._bump_var(v)
                    if level_[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = p >> 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            c = self.reason_[v]
        learnt[0] = p ^ 1

        # local minimization: drop literals implied by the rest of the clause
        reason_ = self.reason_
        kept = [learnt[0]]
        for q in learnt[1:]:
            r = reason_[q >> 1]
            if r is None:
                kept.append(q)
                continue
            for u in r.lits[1:]:
                uv = u >> 1
                if not seen[uv] and level_[uv] > 0:
                    kept.append(q)
                    break
        learnt = kept

        if len(learnt) == 1:
            bt = 0
        else:
            mi = 1
            for k in range(2, len(learnt)):
                if level_[learnt[k] >> 1] > level_[learnt[mi] >> 1]:
                    mi = k
            learnt[1], learnt[mi] = learnt[mi], learnt[1]
            bt = level_[learnt[1] >> 1]
        for v in to_clear:
            seen[v] = 0
        return learnt, bt

    def _analyze_final(self, code: int) -> frozenset[int]:
        """Assumptions responsible for falsifying the assumption literal `code`."""
        out = {self._decode(code)}
        if not self.trail_lim:
            return frozenset(out)
        seen = self.seen
        seen[code >> 1] = 1
        marked = [code >> 1]
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            x = self.trail[i] >> 1
            if not seen[x]:
                continue
            r = self.reason_[x]
            if r is None:
                out.add(self._decode(self.trail[i]))
            else:
                for u in r.lits[1:]:
                    uv = u >> 1
                    if self.level_[uv] > 0 and not seen[uv]:
                        seen[uv] = 1
                        marked.append(uv)
        for v in marked:
            seen[v] = 0
        return frozenset(out)

    # ------------------------------------------------------- clause DB upkeep

    def _reduce_db(self) -> None:
        locked = set()
        for code in self.trail:
            r = self.reason_[code >> 1]
            if r is not None:
                locked.add(id(r))
        keep = [c for c in self.learnts if len(c.lits) <= 2 or id(c) in locked]
        rest = [c for c in self.learnts if len(c.lits) > 2 and id(c) not in locked]
        rest.sort(key=lambda c: c.act)  # stable: insertion order breaks ties
        drop = rest[: len(rest) // 2]
        for c in drop:
            self.watches[c.lits[0]].remove(c)
            self.watches[c.lits[1]].remove(c)
        self.learnts = keep + rest[len(rest) // 2 :]

    # ------------------------------------------------------------- heuristics

    def _init_heap(self) -> None:
        act = self.act
        val = self.val
        self.heap = [(-act[v], v) for v in range(1, self.nvars + 1) if val[v << 1] == 0]
        heapq.heapify(self.heap)

    def _pick_branch_var(self, rng: random.Random | None) -> int | None:
        val = self.val
        if self._use_heap:
            heap = self.heap
            act = self.act
            while heap:
                na, v = heapq.heappop(heap)
                if val[v << 1] == 0 and -na == act[v]:
                    return v
            return None
        if self.config.branching == "lowest_index":
            for v in range(1, self.nvars + 1):
                if val[v << 1] == 0:
                    return v
            return None
        unassigned = [v for v in range(1, self.nvars + 1) if val[v << 1] == 0]
        if not unassigned:
            return None
        assert rng is not None
        return unassigned[rng.randrange(len(unassigned))]

    def _phase_bit(self, v: int) -> int:
        phase = self.config.phase
        if phase == "always_false":
            return 1
        if phase == "always_true":
            return 0
        return self.saved[v]

    # ------------------------------------------------------------------ solve

    def solve(self, assumptions: Sequence[int] = ()) -> SolveResult:
        t0 = time.perf_counter()
        c0, d0, p0 = self.conflicts, self.decisions, self.propagations

        def stats() -> SolveStats:
            return SolveStats(
                conflicts=self.conflicts - c0,
                decisions=self.decisions - d0,
                propagations=self.propagations - p0,
                wall_seconds=time.perf_counter() - t0,
            )

        for lit in assumptions:
            if lit == 0 or abs(lit) > self.nvars:
                raise ValueError(f"assumption {lit} outside variable range")
        if self.unsat_level0:
            return SolveResult("unsat", stats=stats(), final_conflict=frozenset())

        self._backtrack(0)
        assume = [self._code(l) for l in assumptions]
        rng = random.Random(self.config.rng_seed) if self.config.branching == "random" else None
        if self._use_heap:
            self._init_heap()
        conflict_budget = self.config.conflict_limit
        conflicts_at_start = self.conflicts
        restart_base = self.config.restart_interval
        restart_count = 0
        next_restart = self.conflicts + restart_base if restart_base is not None else None
        max_learnts = max(300.0, len(self.clauses) / 3.0)
        val = self.val

        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    self.unsat_level0 = True
                    return SolveResult("unsat", stats=stats(), final_conflict=frozenset())
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    cl = _Clause(learnt, learnt=True)
                    cl.act = self.cla_inc
                    self.learnts.append(cl)
                    self.watches[learnt[0]].append(cl)
                    self.watches[learnt[1]].append(cl)
                    self._enqueue(learnt[0], cl)
                self.var_inc /= 0.95
                self.cla_inc /= 0.999
                if (
                    conflict_budget is not None
                    and self.conflicts - conflicts_at_start >= conflict_budget
                ):
                    self._backtrack(0)
                    return SolveResult("unknown", stats=stats())
                continue

            if next_restart is not None and self.conflicts >= next_restart and self.trail_lim:
                restart_count += 1
                next_restart = self.conflicts + restart_base * _luby(restart_count)
                self._backtrack(0)
                continue

            if len(self.learnts) >= max_learnts:
                self._reduce_db()
                max_learnts *= 1.3

            level = len(self.trail_lim)
            if level < len(assume):
                code = assume[level]
                if val[code] > 0:
                    self.trail_lim.append(len(self.trail))
                    continue
                if val[code] < 0:
                    conflict = self._analyze_final(code)
                    self._backtrack(0)
                    return SolveResult("unsat", stats=stats(), final_conflict=conflict)
                self.trail_lim.append(len(self.trail))
                self._enqueue(code, None)
                continue

            v = self._pick_branch_var(rng)
            if v is None:
                model = {u: val[u << 1] > 0 for u in range(1, self.nvars + 1)}
                self._check_model(model)
                self._backtrack(0)
                return SolveResult("sat", model=model, stats=stats())
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue((v << 1) | self._phase_bit(v), None)

    def _check_model(self, model: dict[int, bool]) -> None:
        # soundness guard: every stored problem clause must be satisfied
        for c in self.clauses:
            for code in c.lits:
                if model[code >> 1] == (code & 1 == 0):
                    break
            else:
                raise AssertionError("internal error: model does not satisfy formula")


def solve(
    cnf: Cnf, assumptions: Sequence[int] = (), config: SolverConfig | None = None
) -> SolveResult:
    """Solve a formula from scratch under optional assumptions.

    Deterministic: identical (cnf, assumptions, config) give identical results.
    """
    s = Solver(cnf.num_vars, config)
    for clause in cnf.clauses:
        s.add_clause(clause)
    return s.solve(assumptions)


def is_unsat(cnf: Cnf, config: SolverConfig | None = None) -> bool:
    res = solve(cnf, (), config)
    if res.status == "unknown":
        raise SolverLimitError("conflict limit hit before a definite answer")
    return res.status == "unsat"
