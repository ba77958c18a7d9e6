"""Penalty computation for one configuration evaluation.

The tuner minimises the penalty: infeasible or untranslatable generator
configurations score plus infinity (immediate discard), a generator search
timeout scores 1, an uninteresting instance 0, a graded instance -1, and a
discriminating instance the negated ratio of the pair scores (a fixed
large-negative sentinel when the base solver scored zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from .errors import ValidationError
from .gensolve import (
    CandidateInstance,
    GenOutcome,
    SolutionHistory,
    record_solution,
    solve_generator,
)
from .model import GeneratorModel
from .problems import Problem
from .runner import (
    OracleResult,
    RunStatus,
    SolverAdapter,
    SolverRecord,
    Status,
    classify_run,
    derive_seed,
    measure_time_to_best,
    oracle_optimum,
    run_solver,
    verify_record,
)
from .scoring import comparable_from_record, minizinc_score
from .space import GeneratorConfiguration

PLUS_INFINITY = math.inf
GENERATOR_TIMEOUT_PENALTY = 1.0
GRADED_PENALTY = -1.0
# Rank-based tuning only needs this to sit below every finite ratio.
LARGE_NEGATIVE = -1e6


@dataclass(frozen=True)
class EvaluationLimits:
    """Resource limits shared by every evaluation of a campaign."""

    translate_limit: float = 300.0
    solve_limit: float = 600.0
    mem_limit: int | None = 8 * 1024**3
    workdir: str | None = None
    limiter_prefix: str | None = None


def _check_band(t_min: float, t_max: float) -> None:
    if not (0 < t_min < t_max):
        raise ValidationError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")


@dataclass(frozen=True)
class GradedPolicy:
    """Band-of-difficulty acceptance for a single solver."""

    problem: Problem
    solver: SolverAdapter
    t_min: float
    t_max: float
    types: frozenset[str] = frozenset({"SAT", "UNSAT"})
    oracle: SolverAdapter | None = None
    oracle_budget: float | None = None  # defaults to 3 * t_max

    def __post_init__(self) -> None:
        _check_band(self.t_min, self.t_max)
        if not self.types:
            raise ValidationError("types must be non-empty")
        if (
            self.solver.kind == "local_search"
            and self.problem.kind != "decision"
            and self.oracle is None
        ):
            raise ValidationError(
                "a local-search solver on an optimisation problem needs an oracle adapter"
            )
        if self.oracle is not None and self.oracle.kind != "complete":
            raise ValidationError("the oracle must be a complete solver")

    @property
    def effective_oracle_budget(self) -> float:
        return self.oracle_budget if self.oracle_budget is not None else 3 * self.t_max


@dataclass(frozen=True)
class DiscriminatingPolicy:
    """Favoured solver should excel where the base solver struggles."""

    problem: Problem
    favoured: SolverAdapter
    base: SolverAdapter
    t_min: float  # applies to the base solver only
    t_max: float
    types: frozenset[str] = frozenset({"SAT", "UNSAT"})

    def __post_init__(self) -> None:
        _check_band(self.t_min, self.t_max)
        if not self.types:
            raise ValidationError("types must be non-empty")
        if self.favoured.name == self.base.name:
            raise ValidationError("favoured and base solvers must differ")


Policy = GradedPolicy | DiscriminatingPolicy


@dataclass
class EvaluationResult:
    penalty: float
    status: RunStatus
    generator_outcome: GenOutcome
    instance: CandidateInstance | None = None
    records: dict[str, SolverRecord] = field(default_factory=dict)
    scores: tuple[float, float] | None = None
    oracle: OracleResult | None = None


def generator_penalty(outcome: GenOutcome) -> float | None:
    """Penalty owed to the tuner by the generator outcome alone.

    Infeasible or untranslatable configurations are discarded immediately
    (plus infinity), a search timeout scores 1, and a solution defers to
    the policy (None).
    """
    if outcome in (GenOutcome.UNSAT, GenOutcome.TRANSLATE_TIMEOUT):
        return PLUS_INFINITY
    if outcome is GenOutcome.SOLVE_TIMEOUT:
        return GENERATOR_TIMEOUT_PENALTY
    return None


def effective_graded_record(record: SolverRecord, oracle: OracleResult) -> SolverRecord:
    """Rewrite a local-search record so its time is the time-to-optimum.

    Without a proven optimum (or when it was never reached) the run counts
    as a timeout: gradedness cannot be established for a solver that
    cannot prove completion.
    """
    if record.status in (Status.ERROR,) or record.solution_ok is False:
        return record
    if not oracle.proved or oracle.infeasible:
        return replace(record, status=Status.TIMEOUT)
    ttb = measure_time_to_best(record.trace, oracle.optimum)
    if ttb is None:
        return replace(record, status=Status.TIMEOUT)
    return replace(
        record,
        status=Status.SAT,
        time=ttb,
        time_to_best=ttb,
        objective=oracle.optimum,
    )


def graded_penalty(record: SolverRecord, policy: GradedPolicy) -> float:
    """Gradedness gates on the (effective) record: band, then type, else -1."""
    if record.status is Status.ERROR or record.solution_ok is False:
        return 0.0
    if record.status is Status.TIMEOUT or record.time < policy.t_min:
        return 0.0
    kind = "UNSAT" if record.status is Status.UNSAT else "SAT"
    if kind not in policy.types:
        return 0.0
    return GRADED_PENALTY


def discriminating_scores(
    favoured: SolverRecord, base: SolverRecord, problem_kind: str
) -> tuple[float, float]:
    pair = minizinc_score(
        comparable_from_record(favoured, problem_kind),
        comparable_from_record(base, problem_kind),
    )
    return pair.score_a, pair.score_b


def discriminating_penalty(
    favoured: SolverRecord, base: SolverRecord, policy: DiscriminatingPolicy
) -> float:
    """Negated score ratio, gated on favoured success and base non-triviality."""
    if favoured.status in (Status.TIMEOUT, Status.ERROR) or favoured.solution_ok is False:
        return 0.0
    kind = "UNSAT" if favoured.status is Status.UNSAT else "SAT"
    if kind not in policy.types:
        return 0.0
    if base.time < policy.t_min:
        return 0.0
    score_f, score_b = discriminating_scores(favoured, base, policy.problem.kind)
    if score_f == 0.0:
        return 0.0
    if score_b == 0.0:
        return LARGE_NEGATIVE
    return -score_f / score_b


def evaluate_configuration(
    model: GeneratorModel,
    config: GeneratorConfiguration,
    history: SolutionHistory,
    policy: Policy,
    limits: EvaluationLimits = EvaluationLimits(),
    seed: int = 0,
) -> EvaluationResult:
    """One full evaluation: generate an instance, run the policy, score it.

    All failures map to penalties and statuses; nothing raises. The fresh
    instance (when one exists) is recorded into the history before any
    solver runs, so a later evaluation of the same configuration cannot
    regenerate it.
    """
    gen = solve_generator(model, config, history, limits.translate_limit, limits.solve_limit)
    failure = generator_penalty(gen.outcome)
    if failure is not None:
        return EvaluationResult(failure, RunStatus.GENERATOR_UNSOLVED, gen.outcome)
    instance = gen.instance
    assert instance is not None
    record_solution(history, config.id, instance)

    if isinstance(policy, GradedPolicy):
        return _evaluate_graded(instance, policy, limits, seed, gen.outcome)
    return _evaluate_discriminating(instance, policy, limits, seed, gen.outcome)


def _run_and_verify(
    adapter: SolverAdapter,
    problem: Problem,
    instance: CandidateInstance,
    time_limit: float,
    limits: EvaluationLimits,
    seed: int,
) -> SolverRecord:
    record = run_solver(
        adapter,
        problem,
        instance.values,
        time_limit,
        mem_limit=limits.mem_limit,
        seed=seed,
        workdir=limits.workdir,
        limiter_prefix=limits.limiter_prefix,
        instance_text=instance.canonical_text,
    )
    return verify_record(problem, instance.values, record)


def _evaluate_graded(
    instance: CandidateInstance,
    policy: GradedPolicy,
    limits: EvaluationLimits,
    seed: int,
    outcome: GenOutcome,
) -> EvaluationResult:
    run_seed = derive_seed(seed, instance.id, policy.solver.name)
    record = _run_and_verify(
        policy.solver, policy.problem, instance, policy.t_max, limits, run_seed
    )
    oracle_result: OracleResult | None = None
    effective = record
    if policy.solver.kind == "local_search" and policy.problem.kind != "decision":
        assert policy.oracle is not None
        oracle_result = oracle_optimum(
            policy.problem,
            instance.values,
            policy.oracle,
            policy.effective_oracle_budget,
            mem_limit=limits.mem_limit,
            seed=derive_seed(seed, instance.id, "oracle"),
        )
        effective = effective_graded_record(record, oracle_result)
    penalty = graded_penalty(effective, policy)
    status = classify_run(
        outcome.value,
        [effective],
        campaign="graded",
        t_min=policy.t_min,
        t_max=policy.t_max,
        types=policy.types,
    )
    return EvaluationResult(
        penalty,
        status,
        outcome,
        instance=instance,
        records={policy.solver.name: effective},
        oracle=oracle_result,
    )


def _evaluate_discriminating(
    instance: CandidateInstance,
    policy: DiscriminatingPolicy,
    limits: EvaluationLimits,
    seed: int,
    outcome: GenOutcome,
) -> EvaluationResult:
    favoured = _run_and_verify(
        policy.favoured,
        policy.problem,
        instance,
        policy.t_max,
        limits,
        derive_seed(seed, instance.id, policy.favoured.name),
    )
    base = _run_and_verify(
        policy.base,
        policy.problem,
        instance,
        policy.t_max,
        limits,
        derive_seed(seed, instance.id, policy.base.name),
    )
    penalty = discriminating_penalty(favoured, base, policy)
    scores = discriminating_scores(favoured, base, policy.problem.kind)
    status = classify_run(
        outcome.value,
        [favoured, base],
        campaign="discriminating",
        t_min=policy.t_min,
        t_max=policy.t_max,
        types=policy.types,
        scores=scores,
    )
    return EvaluationResult(
        penalty,
        status,
        outcome,
        instance=instance,
        records={policy.favoured.name: favoured, policy.base.name: base},
        scores=scores,
    )
