"""Solving generator instances and keeping their solution histories.

Each configuration keeps a negative table of previously generated solutions
so that re-evaluating it always yields a fresh candidate instance, until
the configuration's solution set is exhausted.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from .csp import SolveStatus, backtrack_solve
from .ground import TranslateTimeout, ground
from .model import GeneratorModel
from .space import GeneratorConfiguration
from .valuetext import canonical_key, format_values


class GenOutcome(Enum):
    SOLUTION = "solution"
    UNSAT = "unsat"
    TRANSLATE_TIMEOUT = "translate_timeout"
    SOLVE_TIMEOUT = "solve_timeout"


@dataclass(frozen=True)
class CandidateInstance:
    """Concrete instance data: parameter values plus solved decision values."""

    values: dict[str, Any]
    decision_values: dict[str, Any]
    config_id: str
    sequence: int

    @property
    def id(self) -> str:
        return f"{self.config_id}-{self.sequence:04d}"

    @property
    def canonical_text(self) -> str:
        return format_values(self.values)

    @property
    def exclusion_key(self) -> str:
        return canonical_key(self.decision_values)


@dataclass(frozen=True)
class GeneratorSolveResult:
    outcome: GenOutcome
    elapsed: float
    instance: CandidateInstance | None = None


class SolutionHistory:
    """Append-only negative tables, one per configuration id."""

    def __init__(self, tables: Mapping[str, set[str]] | None = None):
        self._tables: dict[str, set[str]] = {
            k: set(v) for k, v in (tables or {}).items()
        }
        self._lock = threading.Lock()

    def keys_for(self, config_id: str) -> frozenset[str]:
        with self._lock:
            return frozenset(self._tables.get(config_id, ()))

    def count(self, config_id: str) -> int:
        with self._lock:
            return len(self._tables.get(config_id, ()))

    def add(self, config_id: str, key: str) -> None:
        with self._lock:
            self._tables.setdefault(config_id, set()).add(key)

    def to_jsonable(self) -> dict[str, list[str]]:
        with self._lock:
            return {k: sorted(v) for k, v in self._tables.items()}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_jsonable(), indent=0, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "SolutionHistory":
        data = json.loads(Path(path).read_text())
        return cls({k: set(v) for k, v in data.items()})


def record_solution(
    history: SolutionHistory, config_id: str, instance: CandidateInstance
) -> SolutionHistory:
    """Add the instance's canonical encoding to the negative table (idempotent)."""
    history.add(config_id, instance.exclusion_key)
    return history


def solve_generator(
    model: GeneratorModel,
    config: GeneratorConfiguration,
    history: SolutionHistory,
    translate_limit: float,
    solve_limit: float,
) -> GeneratorSolveResult:
    """Produce the next candidate instance for a configuration.

    Grounding runs under ``translate_limit``, search under ``solve_limit``;
    the two timeout outcomes are distinguished so the tuner can penalise
    them differently. Solutions already in the history are skipped.
    """
    start = time.monotonic()
    try:
        csp = ground(model, config, deadline=start + translate_limit)
    except TranslateTimeout:
        return GeneratorSolveResult(GenOutcome.TRANSLATE_TIMEOUT, time.monotonic() - start)

    exclusions = history.keys_for(config.id)
    result = backtrack_solve(csp, exclusions, solve_limit)
    elapsed = time.monotonic() - start
    if result.status is SolveStatus.TIMEOUT:
        return GeneratorSolveResult(GenOutcome.SOLVE_TIMEOUT, elapsed)
    if result.status is SolveStatus.UNSAT:
        return GeneratorSolveResult(GenOutcome.UNSAT, elapsed)
    assert result.values is not None
    instance = CandidateInstance(
        values={**dict(config.assignment), **result.values},
        decision_values=dict(result.values),
        config_id=config.id,
        sequence=history.count(config.id),
    )
    return GeneratorSolveResult(GenOutcome.SOLUTION, elapsed, instance)
