"""Hard-instance generation: seed-core embedding, clause sampling, core refinement.

The pipeline makes a new UNSAT instance from an UNSAT seed in three steps:
extract the seed's core, append randomly sampled clauses to that core, then
repeatedly detect the current (usually easy) core and "de-core" it by adding
one non-conflicting literal to a core clause, which makes that core
satisfiable and forces a larger one to emerge. The embedded seed core is
protected from de-coring, so every output stays UNSAT and keeps the seed's
hard core verbatim.

Clause sampling follows a popularity-similarity scheme; the exact formula is
documented at sample_clauses_ps since the literature leaves it to
configuration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .cnf import Cnf, add_literal
from .gnn import GnnModel, TrainingPair, predict_core
from .mus import CoreLabel, SatInputError, extract_mus, verify_mus
from .solver import SolverConfig, SolverLimitError, solve

# Above this size, a predicted core is not pruned to a MUS before de-coring;
# instead targets are drawn from it directly and false positives retried.
PRUNE_LIMIT = 32
MAX_TARGET_RETRIES = 5


class CoreFullyProtected(Exception):
    """Every clause of the detected core is protected: refinement is finished."""


class GenerationError(RuntimeError):
    """The pipeline produced a satisfiable instance (possible only with
    protect_seed_core disabled)."""


@dataclass(frozen=True)
class KsatParams:
    """Random k-SAT sampling: clause count m ~ N(mu_m, sigma_m), clause/var
    ratio c ~ N(mu_c, sigma_c), variable count n = int(m / c)."""

    mu_m: float = 400.0
    sigma_m: float = 100.0
    mu_c: float = 4.4
    sigma_c: float = 0.05
    k: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.mu_c <= 0:
            raise ValueError("mu_c must be positive")


@dataclass(frozen=True)
class PsParams:
    """Popularity-similarity clause sampling parameters.

    avg_clause_size: mean sampled clause length (>= 2).
    beta_v: popularity exponent for variable selection.
    beta_c: clause-degree concentration; larger values tighten clause sizes
        around the mean.
    T: similarity temperature; exponent of the index-distance kernel.
    """

    avg_clause_size: float = 3.0
    beta_c: float = 1.0
    beta_v: float = 1.0
    T: float = 1.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.avg_clause_size < 2:
            raise ValueError("avg_clause_size must be >= 2")
        if self.T <= 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class RefineConfig:
    max_iterations: int | None = None  # None: one iteration per generated clause
    predictor: GnnModel | None = None  # None: oracle core detection
    decore_policy: str = "existing_model_guided"  # or "fresh_variable"
    protect_seed_core: bool = True
    rng_seed: int = 0
    solver_config: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.decore_policy not in ("existing_model_guided", "fresh_variable"):
            raise ValueError(f"unknown decore policy {self.decore_policy!r}")


@dataclass(frozen=True)
class Candidate:
    """A working instance: protected seed-core clauses plus generated ones."""

    cnf: Cnf
    protected: frozenset[int]
    generated: frozenset[int]

    def __post_init__(self) -> None:
        all_idx = set(range(self.cnf.num_clauses))
        if self.protected | self.generated != all_idx or self.protected & self.generated:
            raise ValueError("protected and generated must partition the clause indices")


@dataclass(frozen=True)
class DecoreEvent:
    iteration: int
    core_indices: frozenset[int]
    target: int
    literal: int
    policy: str
    oracle_fallback: bool
    retries: int


@dataclass
class RefineReport:
    iterations_run: int = 0
    events: list[DecoreEvent] = field(default_factory=list)
    terminated_early: bool = False


# ----------------------------------------------------------------- sampling


def sample_ksat(params: KsatParams) -> Cnf:
    """One random k-SAT instance per the sampling scheme above; clauses are
    distinct as literal sets (sampling without replacement)."""
    rng = np.random.default_rng(params.rng_seed)
    m = max(1, round(rng.normal(params.mu_m, params.sigma_m)))
    c = rng.normal(params.mu_c, params.sigma_c)
    if c <= 0:
        raise ValueError(f"sampled clause/variable ratio {c:.3f} is not positive")
    n = max(params.k, int(m / c))
    if math.comb(n, params.k) * 2**params.k < m:
        raise ValueError(
            f"cannot sample {m} distinct {params.k}-clauses over {n} variables"
        )
    seen: set[frozenset[int]] = set()
    clauses: list[tuple[int, ...]] = []
    while len(clauses) < m:
        variables = rng.choice(n, size=params.k, replace=False) + 1
        signs = rng.integers(0, 2, size=params.k)
        clause = tuple(int(v) if s else -int(v) for v, s in zip(variables, signs))
        key = frozenset(clause)
        if key in seen:
            continue
        seen.add(key)
        clauses.append(clause)
    return Cnf(n, tuple(clauses))


def occurrence_counts(cnf: Cnf) -> np.ndarray:
    """Per-variable occurrence counts (index var-1), the popularity statistic."""
    counts = np.zeros(cnf.num_vars, dtype=np.int64)
    for clause in cnf.clauses:
        for lit in clause:
            counts[abs(lit) - 1] += 1
    return counts


def sample_clauses_ps(
    seed_stats: Sequence[int] | np.ndarray,
    count: int,
    params: PsParams,
    exclude: Iterable[frozenset[int]] = (),
) -> list[tuple[int, ...]]:
    """Sample `count` clauses over the seed's variables.

    Exact scheme, per clause:
      size    s ~ round(N(avg_clause_size, avg_clause_size / (1 + beta_c)))
              clamped to [2, num_vars];
      anchor  a ~ U[0, num_vars) on the circular variable-index axis;
      weights w_v = (1 + occurrences_v)^beta_v / (1 + (d(v, a)/L)^T), with
              d the circular index distance and locality scale
              L = max(1, num_vars / 8);
      variables drawn without replacement proportional to w, polarities
      uniform.

    The anchor makes clauses local in the similarity dimension while the
    rotation-symmetric kernel keeps marginal variable frequencies uniform
    when beta_v = 0. Duplicates of already-sampled or excluded clauses are
    rejected and resampled.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    stats = np.asarray(seed_stats, dtype=np.float64)
    n = len(stats)
    if count and n < 2:
        raise ValueError("need at least 2 variables to sample clauses")
    rng = np.random.default_rng(params.rng_seed)
    popularity = (1.0 + stats) ** params.beta_v
    scale = max(1.0, n / 8.0)
    sigma_s = params.avg_clause_size / (1.0 + max(params.beta_c, 0.0))
    taken: set[frozenset[int]] = set(exclude)
    out: list[tuple[int, ...]] = []
    positions = np.arange(n, dtype=np.float64)
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 200 * count + 200:
            raise ValueError("clause space too small to sample distinct clauses")
        size = int(np.clip(round(rng.normal(params.avg_clause_size, sigma_s)), 2, n))
        anchor = rng.uniform(0.0, n)
        d = np.abs(positions - anchor)
        d = np.minimum(d, n - d)
        weights = popularity / (1.0 + (d / scale) ** params.T)
        probs = weights / weights.sum()
        variables = rng.choice(n, size=size, replace=False, p=probs) + 1
        signs = rng.integers(0, 2, size=size)
        clause = tuple(int(v) if s else -int(v) for v, s in zip(variables, signs))
        key = frozenset(clause)
        if key in taken:
            continue
        taken.add(key)
        out.append(clause)
    return out


# ----------------------------------------------------------------- assembly


def assemble_candidate(
    seed: Cnf,
    seed_core: CoreLabel,
    new_clauses: Sequence[tuple[int, ...]],
    verify: bool = True,
    solver_config: SolverConfig | None = None,
) -> Candidate:
    """Core clauses first (protected), sampled clauses after (generated).

    The result is UNSAT by construction: it contains the seed's core. With
    verify=False the caller vouches for the core (the extraction algorithm
    certifies minimality as it runs).
    """
    if verify and not verify_mus(seed, seed_core, solver_config):
        raise ValueError("seed core failed verification against the seed instance")
    core_idx = seed_core.sorted()
    core_clauses = tuple(seed.clauses[i] for i in core_idx)
    new_tuple = tuple(tuple(c) for c in new_clauses)
    num_vars = max(
        seed.num_vars, max((abs(l) for c in new_tuple for l in c), default=0)
    )
    cnf = Cnf(num_vars, core_clauses + new_tuple)
    n_core = len(core_clauses)
    return Candidate(
        cnf=cnf,
        protected=frozenset(range(n_core)),
        generated=frozenset(range(n_core, cnf.num_clauses)),
    )


# ----------------------------------------------------------------- de-coring


def _decore_with_target(
    candidate: Candidate,
    core_indices: frozenset[int],
    target: int,
    policy: str,
    rng: np.random.Generator,
    solver_config: SolverConfig,
) -> tuple[Candidate, int, str] | None:
    """Add a model-consistent literal to the target clause.

    Returns (new candidate, literal, policy actually used), or None when the
    core minus the target is still UNSAT (the target cannot break it, i.e. a
    predicted-core false positive).
    """
    rest = core_indices - {target}
    res = solve(candidate.cnf.subformula(rest), (), solver_config)
    if res.status == "unknown":
        raise SolverLimitError("conflict limit hit during de-coring model extraction")
    if res.status == "unsat":
        return None
    sigma = res.model
    assert sigma is not None
    clause = candidate.cnf.clauses[target]
    present = {abs(l) for l in clause}
    used = policy
    if policy == "existing_model_guided":
        absent = [v for v in range(1, candidate.cnf.num_vars + 1) if v not in present]
        if absent:
            v = absent[int(rng.integers(len(absent)))]
            lit = v if sigma[v] else -v
        else:
            warnings.warn(
                f"clause {target} already contains every variable; "
                "falling back to a fresh variable",
                stacklevel=3,
            )
            used = "fresh_variable"
            lit = candidate.cnf.num_vars + 1
    else:
        lit = candidate.cnf.num_vars + 1
    new_cnf = add_literal(candidate.cnf, target, lit)
    return Candidate(new_cnf, candidate.protected, candidate.generated), lit, used


def decore(candidate: Candidate, core: CoreLabel, config: RefineConfig) -> Candidate:
    """One de-coring step: make the given core satisfiable by adding a
    non-conflicting literal to one of its unprotected clauses.

    The target is chosen uniformly among unprotected core clauses; the added
    literal agrees with a model of the core minus the target, so the
    modified core set is satisfiable by construction. Raises
    CoreFullyProtected when no unprotected core clause exists (refinement is
    complete, not an error).
    """
    protected = candidate.protected if config.protect_seed_core else frozenset()
    unprotected = sorted(core.clause_indices - protected)
    if not unprotected:
        raise CoreFullyProtected
    rng = np.random.default_rng(config.rng_seed)
    target = unprotected[int(rng.integers(len(unprotected)))]
    step = _decore_with_target(
        candidate, core.clause_indices, target, config.decore_policy, rng, config.solver_config
    )
    if step is None:
        raise ValueError(
            f"core minus clause {target} is still unsatisfiable; "
            "the given label is not a core of the instance"
        )
    return step[0]


def _detect_and_decore(
    candidate: Candidate,
    config: RefineConfig,
    rng: np.random.Generator,
    iteration: int,
) -> tuple[Candidate, DecoreEvent]:
    """One refinement iteration: core detection followed by de-coring.

    With a GNN predictor, small predictions are pruned to an exact MUS of
    the predicted subset; large predictions are targeted directly, retrying
    on false-positive targets and falling back to the oracle after
    MAX_TARGET_RETRIES.
    """
    protected = candidate.protected if config.protect_seed_core else frozenset()
    sc = config.solver_config

    def oracle_core() -> frozenset[int]:
        return extract_mus(candidate.cnf, sc).clause_indices

    def pick_and_decore(
        core: frozenset[int], fallback: bool, retries: int
    ) -> tuple[Candidate, DecoreEvent] | None:
        unprotected = sorted(core - protected)
        if not unprotected:
            raise CoreFullyProtected
        target = unprotected[int(rng.integers(len(unprotected)))]
        step = _decore_with_target(candidate, core, target, config.decore_policy, rng, sc)
        if step is None:
            return None
        new_cand, lit, used = step
        event = DecoreEvent(
            iteration=iteration,
            core_indices=core,
            target=target,
            literal=lit,
            policy=used,
            oracle_fallback=fallback,
            retries=retries,
        )
        return new_cand, event

    if config.predictor is None:
        result = pick_and_decore(oracle_core(), fallback=False, retries=0)
        assert result is not None, "oracle core minus a clause must be satisfiable"
        return result

    predicted = predict_core(config.predictor, candidate.cnf).clause_indices
    if predicted and len(predicted) <= PRUNE_LIMIT:
        try:
            pruned = extract_mus(candidate.cnf, sc, restrict_to=predicted).clause_indices
        except SatInputError:
            pruned = frozenset()  # the predicted set is satisfiable: all false positives
        if pruned:
            result = pick_and_decore(pruned, fallback=False, retries=0)
            assert result is not None
            return result
        predicted = frozenset()

    if predicted:
        core = frozenset(predicted)
        pool = set(core - protected)
        for retry in range(MAX_TARGET_RETRIES + 1):
            if not pool:
                break
            targets = sorted(pool)
            target = targets[int(rng.integers(len(targets)))]
            step = _decore_with_target(candidate, core, target, config.decore_policy, rng, sc)
            if step is not None:
                new_cand, lit, used = step
                return new_cand, DecoreEvent(
                    iteration=iteration,
                    core_indices=core,
                    target=target,
                    literal=lit,
                    policy=used,
                    oracle_fallback=False,
                    retries=retry,
                )
            pool.discard(target)  # false positive: never retry the same target

    result = pick_and_decore(oracle_core(), fallback=True, retries=0)
    assert result is not None, "oracle core minus a clause must be satisfiable"
    return result


# ---------------------------------------------------------------- refinement


def refine_with_report(candidate: Candidate, config: RefineConfig) -> tuple[Cnf, RefineReport]:
    """Run the detect-core / de-core loop and return the instance plus a
    replayable record of every de-coring event."""
    rng = np.random.default_rng(config.rng_seed)
    iterations = (
        config.max_iterations
        if config.max_iterations is not None
        else len(candidate.generated)
    )
    report = RefineReport()
    current = candidate
    for it in range(iterations):
        try:
            current, event = _detect_and_decore(current, config, rng, it)
        except CoreFullyProtected:
            report.terminated_early = True
            break
        report.events.append(event)
        report.iterations_run += 1

    final = current.cnf
    res = solve(final, (), config.solver_config)
    if res.status == "unknown":
        raise SolverLimitError("conflict limit hit during the final UNSAT check")
    if res.status != "unsat":
        raise GenerationError(
            "refined instance is satisfiable; the protected core was de-cored"
        )
    return final, report


def refine(candidate: Candidate, config: RefineConfig) -> Cnf:
    return refine_with_report(candidate, config)[0]


# ---------------------------------------------------------------- generation


def _child_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, dtype=np.uint64)[0])


@dataclass
class GenerationReport:
    core_indices: list[int]
    num_new_clauses: int
    refine: RefineReport
    rng_seed: int


def generate_with_report(
    seed: Cnf,
    model: GnnModel | None = None,
    *,
    refine_config: RefineConfig | None = None,
    ps_params: PsParams | None = None,
    num_new_clauses: int | None = None,
    seed_core: CoreLabel | None = None,
) -> tuple[Cnf, GenerationReport]:
    """Full pipeline: core extraction, clause sampling, assembly, refinement.

    model=None detects cores with the exact oracle throughout. seed_core
    lets callers reuse one extraction across several outputs of the same
    seed. Deterministic for fixed configs: the refine seed is split into
    independent sampling and refinement streams.
    """
    base = refine_config or RefineConfig()
    config = replace(base, predictor=model)
    sc = config.solver_config

    res = solve(seed, (), sc)
    if res.status == "unknown":
        raise SolverLimitError("conflict limit hit while checking the seed")
    if res.status == "sat":
        raise SatInputError("seed is satisfiable; only UNSAT seeds have cores")

    core = seed_core if seed_core is not None else extract_mus(seed, sc)
    n_new = (
        num_new_clauses
        if num_new_clauses is not None
        else max(0, seed.num_clauses - len(core.clause_indices))
    )
    if ps_params is None:
        lens = [len(c) for c in seed.clauses]
        avg = max(2.0, sum(lens) / len(lens)) if lens else 3.0
        ps_params = PsParams(avg_clause_size=avg, rng_seed=_child_seed(config.rng_seed, 0))
    exclude = {frozenset(seed.clauses[i]) for i in core.clause_indices}
    new_clauses = sample_clauses_ps(occurrence_counts(seed), n_new, ps_params, exclude=exclude)
    candidate = assemble_candidate(seed, core, new_clauses, verify=False, solver_config=sc)

    refine_cfg = replace(config, rng_seed=_child_seed(config.rng_seed, 1))
    final, refine_report = refine_with_report(candidate, refine_cfg)
    report = GenerationReport(
        core_indices=core.sorted(),
        num_new_clauses=n_new,
        refine=refine_report,
        rng_seed=config.rng_seed,
    )
    return final, report


def generate(
    seed: Cnf,
    model: GnnModel | None = None,
    *,
    refine_config: RefineConfig | None = None,
    ps_params: PsParams | None = None,
    num_new_clauses: int | None = None,
) -> Cnf:
    return generate_with_report(
        seed,
        model,
        refine_config=refine_config,
        ps_params=ps_params,
        num_new_clauses=num_new_clauses,
    )[0]


def generate_batch(
    seed: Cnf,
    model: GnnModel | None,
    count: int,
    *,
    refine_config: RefineConfig | None = None,
    seed_index: int = 0,
) -> list[tuple[Cnf, GenerationReport]]:
    """Several outputs from one seed, sharing a single core extraction.

    Output i uses the derived seed (root, seed_index, i), so parallel and
    serial runs agree and different outputs get independent streams.
    """
    base = refine_config or RefineConfig()
    core = extract_mus(seed, base.solver_config)
    out = []
    for i in range(count):
        cfg = replace(base, rng_seed=_child_seed(base.rng_seed, seed_index, i))
        out.append(
            generate_with_report(seed, model, refine_config=cfg, seed_core=core)
        )
    return out


# ------------------------------------------------------------- pair harvest


def build_training_pairs(
    seeds: Sequence[Cnf],
    iterations_per_seed: int,
    *,
    rng_seed: int = 0,
    solver_config: SolverConfig | None = None,
    num_new_clauses: int | None = None,
) -> list[TrainingPair]:
    """Harvest (instance, oracle core) supervision pairs.

    Runs the generation pipeline with oracle core detection and records the
    pre-de-coring snapshot with its core at every iteration. Every label is
    re-verified before storage.
    """
    sc = solver_config or SolverConfig()
    pairs: list[TrainingPair] = []
    for si, seed in enumerate(seeds):
        core = extract_mus(seed, sc)
        n_new = (
            num_new_clauses
            if num_new_clauses is not None
            else max(0, seed.num_clauses - len(core.clause_indices))
        )
        lens = [len(c) for c in seed.clauses]
        avg = max(2.0, sum(lens) / len(lens)) if lens else 3.0
        ps = PsParams(avg_clause_size=avg, rng_seed=_child_seed(rng_seed, si, 0))
        exclude = {frozenset(seed.clauses[i]) for i in core.clause_indices}
        new_clauses = sample_clauses_ps(occurrence_counts(seed), n_new, ps, exclude=exclude)
        candidate = assemble_candidate(seed, core, new_clauses, verify=False, solver_config=sc)
        rng = np.random.default_rng(_child_seed(rng_seed, si, 1))
        current = candidate
        for _ in range(iterations_per_seed):
            label = extract_mus(current.cnf, sc)
            if not verify_mus(current.cnf, label, sc):
                raise RuntimeError("oracle core failed verification; solver inconsistency")
            pairs.append(TrainingPair(current.cnf, label))
            unprotected = sorted(label.clause_indices - current.protected)
            if not unprotected:
                break
            target = unprotected[int(rng.integers(len(unprotected)))]
            step = _decore_with_target(
                current, label.clause_indices, target, "existing_model_guided", rng, sc
            )
            assert step is not None, "oracle core minus a clause must be satisfiable"
            current = step[0]
    return pairs
