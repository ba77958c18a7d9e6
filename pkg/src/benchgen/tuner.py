"""Iterated racing over generator configurations.

Each iteration races a candidate set: every alive configuration is
evaluated once per block (a fresh instance each time, thanks to the
solution history), infinite penalties drop a configuration immediately,
and from ``first_test_after`` blocks onward a Friedman test eliminates
configurations whose rank sums fall a critical difference behind the
best. Survivors seed the sampling model for the next iteration.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from random import Random
from typing import Callable, Protocol, Sequence

from scipy import stats as _sstats

from .errors import DegenerateInput
from .runner import RunStatus
from .space import (
    GeneratorConfiguration,
    ParameterSpace,
    SamplingModel,
    dedupe_configurations,
    sample_from_model,
    sample_uniform,
    update_sampling_model,
)


@dataclass(frozen=True)
class TunerConfig:
    total_budget: int = 2000
    first_race_size: int | None = None  # default: max(6, ceil(budget / 40))
    min_survivors: int = 2
    elimination_alpha: float = 0.05
    instances_per_step: int = 1
    seed: int = 0
    first_test_after: int = 5
    race_slices: int = 5  # per-race budget = total_budget / race_slices
    spread_decay: float = 0.8
    workers: int = 1

    def __post_init__(self) -> None:
        if self.total_budget < 0:
            raise ValueError("total_budget must be non-negative")
        if not (0 < self.elimination_alpha < 1):
            raise ValueError("elimination_alpha must be in (0, 1)")
        if self.min_survivors < 1 or self.instances_per_step < 1:
            raise ValueError("min_survivors and instances_per_step must be positive")

    @property
    def race_size(self) -> int:
        if self.first_race_size is not None:
            return self.first_race_size
        return max(6, math.ceil(self.total_budget / 40))


class EvaluationLike(Protocol):
    penalty: float
    status: RunStatus


class Evaluator(Protocol):
    def __call__(self, config: GeneratorConfiguration, block: int) -> EvaluationLike: ...


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float
    significant: bool
    rank_sums: list[float]
    critical_difference: float | None
    eliminated: set[int]  # column indices


def _block_ranks(row: Sequence[float]) -> list[float]:
    """Within-block ranks, 1 = best (lowest penalty), ties averaged."""
    k = len(row)
    order = sorted(range(k), key=lambda j: row[j])
    ranks = [0.0] * k
    i = 0
    while i < k:
        j = i
        while j + 1 < k and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def friedman_eliminate(
    matrix: Sequence[Sequence[float]], alpha: float
) -> FriedmanResult:
    """Friedman test over blocks x configurations, plus post-hoc elimination.

    The tie-corrected chi-square statistic is tested at ``alpha`` with k-1
    degrees of freedom; when significant, any column whose rank sum
    exceeds the best by more than the Conover critical difference
    t(1 - alpha/2, (n-1)(k-1)) * sqrt(2 (n*A - sum R^2) / ((n-1)(k-1)))
    is eliminated (A being the sum of all squared ranks).
    """
    n = len(matrix)
    if n < 2:
        raise DegenerateInput("need at least 2 blocks")
    k = len(matrix[0])
    if k < 2:
        raise DegenerateInput("need at least 2 configurations")
    if any(len(row) != k for row in matrix):
        raise DegenerateInput("ragged penalty matrix")

    rank_rows = [_block_ranks(row) for row in matrix]
    rank_sums = [sum(r[j] for r in rank_rows) for j in range(k)]
    a_sq = sum(v * v for r in rank_rows for v in r)

    tie_term = 0.0
    for row in matrix:
        seen: dict[float, int] = {}
        for v in row:
            seen[v] = seen.get(v, 0) + 1
        tie_term += sum(t**3 - t for t in seen.values())

    center = n * (k + 1) / 2
    numerator = 12.0 * sum((rs - center) ** 2 for rs in rank_sums)
    denominator = n * k * (k + 1) - tie_term / (k - 1)
    if denominator <= 0:
        statistic = 0.0
    else:
        statistic = numerator / denominator
    p_value = float(_sstats.chi2.sf(statistic, k - 1)) if statistic > 0 else 1.0
    significant = p_value < alpha

    eliminated: set[int] = set()
    critical_difference: float | None = None
    if significant:
        df = (n - 1) * (k - 1)
        spread = max(n * a_sq - sum(rs * rs for rs in rank_sums), 0.0)
        critical_difference = float(
            _sstats.t.ppf(1 - alpha / 2, df) * math.sqrt(2.0 * spread / df)
        )
        best = min(rank_sums)
        eliminated = {
            j for j, rs in enumerate(rank_sums) if rs - best > critical_difference
        }
    return FriedmanResult(
        statistic, p_value, significant, rank_sums, critical_difference, eliminated
    )


@dataclass
class RaceState:
    alive: list[GeneratorConfiguration]
    penalties: dict[str, list[float]] = field(default_factory=dict)
    blocks: int = 0
    evaluations_used: int = 0


@dataclass(frozen=True)
class EvalLogEntry:
    iteration: int
    step: int
    config_id: str
    penalty: float
    status: RunStatus
    instance_id: str | None = None

    def format_line(self) -> str:
        pen = "inf" if math.isinf(self.penalty) else repr(self.penalty)
        inst = self.instance_id or "-"
        return (
            f"iter={self.iteration} step={self.step} config={self.config_id} "
            f"penalty={pen} status={self.status.value} instance={inst}"
        )


@dataclass
class TunerReport:
    elites: list[GeneratorConfiguration]
    log: list[EvalLogEntry]
    status_counts: dict[str, int]
    evaluations_used: int
    iterations: int
    configurations: dict[str, GeneratorConfiguration] = field(default_factory=dict)

    def count(self, status: RunStatus) -> int:
        return self.status_counts.get(status.value, 0)


def _rank_survivors(state: RaceState) -> list[GeneratorConfiguration]:
    """Order alive configurations by mean within-block rank (best first)."""
    alive = state.alive
    if state.blocks == 0 or len(alive) <= 1:
        return list(alive)
    matrix = [
        [state.penalties[c.id][b] for c in alive] for b in range(state.blocks)
    ]
    rank_rows = [_block_ranks(row) for row in matrix]
    sums = [sum(r[j] for r in rank_rows) for j in range(len(alive))]
    order = sorted(range(len(alive)), key=lambda j: (sums[j], j))
    return [alive[j] for j in order]


def race(
    configs: Sequence[GeneratorConfiguration],
    evaluator: Evaluator,
    race_budget: int,
    state: RaceState | None = None,
    *,
    config: TunerConfig = TunerConfig(),
    iteration: int = 1,
    log: Callable[[EvalLogEntry], None] | None = None,
    budget_left: int | None = None,
) -> tuple[list[GeneratorConfiguration], RaceState]:
    """Race a candidate set until few survive or the race budget is spent.

    Returns the survivors ranked best-first together with the final state.
    Infinite penalties remove a configuration before any statistical test;
    Friedman elimination never cuts below ``min_survivors``.
    """
    if state is None:
        state = RaceState(alive=list(configs))
        for c in configs:
            state.penalties.setdefault(c.id, [])
    remaining = race_budget if budget_left is None else min(race_budget, budget_left)

    while state.alive:
        cost = len(state.alive) * config.instances_per_step
        if state.evaluations_used + cost > remaining:
            break
        if len(state.alive) <= config.min_survivors and state.blocks >= 1:
            break
        for _ in range(config.instances_per_step):
            block_index = state.blocks
            alive_snapshot = list(state.alive)
            if config.workers > 1:
                with ThreadPoolExecutor(max_workers=config.workers) as pool:
                    results = list(
                        pool.map(lambda c: evaluator(c, block_index), alive_snapshot)
                    )
            else:
                results = [evaluator(c, block_index) for c in alive_snapshot]
            survivors: list[GeneratorConfiguration] = []
            for cfg, result in zip(alive_snapshot, results):
                state.evaluations_used += 1
                if log is not None:
                    log(
                        EvalLogEntry(
                            iteration,
                            block_index + 1,
                            cfg.id,
                            result.penalty,
                            result.status,
                            getattr(getattr(result, "instance", None), "id", None),
                        )
                    )
                state.penalties.setdefault(cfg.id, []).append(result.penalty)
                if math.isinf(result.penalty) and result.penalty > 0:
                    continue  # discarded immediately, before any test
                survivors.append(cfg)
            state.alive = survivors
            state.blocks += 1

        if (
            len(state.alive) > config.min_survivors
            and state.blocks >= max(config.first_test_after, 2)
        ):
            matrix = [
                [state.penalties[c.id][b] for c in state.alive]
                for b in range(state.blocks)
            ]
            result = friedman_eliminate(matrix, config.elimination_alpha)
            if result.eliminated:
                ranked = sorted(
                    range(len(state.alive)),
                    key=lambda j: (result.rank_sums[j], j),
                )
                keep = set(ranked[: config.min_survivors])
                state.alive = [
                    c
                    for j, c in enumerate(state.alive)
                    if j not in result.eliminated or j in keep
                ]
        if len(state.alive) <= config.min_survivors:
            break

    return _rank_survivors(state), state


def run_tuning(
    space: ParameterSpace,
    evaluator: Evaluator,
    config: TunerConfig,
    log: Callable[[EvalLogEntry], None] | None = None,
) -> TunerReport:
    """Iterate sample -> race -> model update until the budget is spent.

    The first iteration samples uniformly; later ones draw from the elite
    sampling model. Elites re-enter the next race unchanged. Deterministic
    given the seed and a deterministic evaluator.
    """
    rng = Random(config.seed)
    log_entries: list[EvalLogEntry] = []
    status_counts: dict[str, int] = {}
    seen_configs: dict[str, GeneratorConfiguration] = {}

    def sink(entry: EvalLogEntry) -> None:
        log_entries.append(entry)
        status_counts[entry.status.value] = status_counts.get(entry.status.value, 0) + 1
        if log is not None:
            log(entry)

    per_race = max(config.total_budget // config.race_slices, 1)
    used = 0
    iteration = 0
    elites: list[GeneratorConfiguration] = []
    model: SamplingModel | None = None

    while used < config.total_budget:
        iteration += 1
        budget_left = config.total_budget - used

        candidates = list(elites)
        attempts = 0
        while len(candidates) < config.race_size and attempts < config.race_size * 20:
            attempts += 1
            if model is None:
                candidate = sample_uniform(space, rng)
            else:
                candidate = sample_from_model(space, model, rng)
            candidates.append(candidate)
            candidates = dedupe_configurations(candidates)
        if not candidates:
            break
        block_cost = len(candidates) * config.instances_per_step
        race_budget = min(max(per_race, block_cost), budget_left)
        if race_budget < block_cost:
            # Not enough budget left for even one complete block.
            break
        for c in candidates:
            seen_configs.setdefault(c.id, c)

        survivors, state = race(
            candidates,
            evaluator,
            race_budget,
            config=config,
            iteration=iteration,
            log=sink,
            budget_left=budget_left,
        )
        used += state.evaluations_used
        if survivors:
            elites = survivors[: config.min_survivors]
            model = update_sampling_model(
                model,
                elites,
                iteration,
                space=space,
                decay=config.spread_decay,
            )
        else:
            elites = []
            model = None

    return TunerReport(
        elites=elites,
        log=log_entries,
        status_counts=status_counts,
        evaluations_used=used,
        iterations=iteration,
        configurations=seen_configs,
    )
