"""On-disk campaign archive.

Layout of a campaign directory:

    config.json          campaign metadata (kind, problem, solvers, limits, seed)
    space.txt          parameter-space text
    generator.model    generator model text
    instances/         <id>.inst canonical text + <id>.json sidecar
    records/evals.jsonl  one JSON object per evaluation
    tuner.log          one line per evaluation
    history.json       solution history (negative tables)
    reports/           outputs of the report subcommand
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator, Mapping

from .errors import ArchiveError
from .gensolve import CandidateInstance, SolutionHistory
from .runner import SolverRecord
from .valuetext import parse_values


class CampaignArchive:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def create(
        cls, root: str | Path, meta: Mapping[str, Any], space_text: str, model_text: str
    ) -> "CampaignArchive":
        archive = cls(root)
        archive.root.mkdir(parents=True, exist_ok=True)
        (archive.root / "instances").mkdir(exist_ok=True)
        (archive.root / "records").mkdir(exist_ok=True)
        (archive.root / "reports").mkdir(exist_ok=True)
        (archive.root / "config.json").write_text(json.dumps(dict(meta), indent=2))
        (archive.root / "space.txt").write_text(space_text)
        (archive.root / "generator.model").write_text(model_text)
        return archive

    @classmethod
    def open(cls, root: str | Path) -> "CampaignArchive":
        archive = cls(root)
        if not (archive.root / "config.json").exists():
            raise ArchiveError(f"{root} is not a campaign archive (no config.json)")
        return archive

    @property
    def meta(self) -> dict[str, Any]:
        return json.loads((self.root / "config.json").read_text())

    @property
    def space_text(self) -> str:
        return (self.root / "space.txt").read_text()

    @property
    def model_text(self) -> str:
        return (self.root / "generator.model").read_text()

    # -- instances ---------------------------------------------------------

    def add_instance(self, instance: CandidateInstance) -> None:
        stem = self.root / "instances" / instance.id
        stem.with_suffix(".inst").write_text(instance.canonical_text)
        sidecar = {
            "id": instance.id,
            "config_id": instance.config_id,
            "sequence": instance.sequence,
            "decision_values": _to_jsonable(instance.decision_values),
        }
        stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))

    def annotate_instance(self, instance_id: str, extra: Mapping[str, Any]) -> None:
        path = self.root / "instances" / f"{instance_id}.json"
        if not path.exists():
            raise ArchiveError(f"unknown instance {instance_id}")
        sidecar = json.loads(path.read_text())
        sidecar.update(extra)
        path.write_text(json.dumps(sidecar, indent=2))

    def instance_values(self, instance_id: str) -> dict[str, Any]:
        path = self.root / "instances" / f"{instance_id}.inst"
        if not path.exists():
            raise ArchiveError(f"unknown instance {instance_id}")
        return parse_values(path.read_text())

    def instance_text(self, instance_id: str) -> str:
        return (self.root / "instances" / f"{instance_id}.inst").read_text()

    def instance_sidecar(self, instance_id: str) -> dict[str, Any]:
        return json.loads((self.root / "instances" / f"{instance_id}.json").read_text())

    def instance_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "instances").glob("*.inst"))

    # -- evaluations -------------------------------------------------------

    @property
    def _evals_path(self) -> Path:
        return self.root / "records" / "evals.jsonl"

    def add_evaluation(self, entry: Mapping[str, Any]) -> None:
        with open(self._evals_path, "a") as fh:
            fh.write(json.dumps(dict(entry)) + "\n")

    def evaluations(self) -> Iterator[dict[str, Any]]:
        if not self._evals_path.exists():
            return
        with open(self._evals_path) as fh:
            for line in fh:
                if line.strip():
                    yield json.loads(line)

    def evaluation_count(self) -> int:
        return sum(1 for _ in self.evaluations())

    def solver_record(self, entry: Mapping[str, Any], solver: str) -> SolverRecord:
        return SolverRecord.from_jsonable(entry["records"][solver])

    # -- logs and history ----------------------------------------------------

    def append_log(self, line: str) -> None:
        with open(self.root / "tuner.log", "a") as fh:
            fh.write(line + "\n")

    def log_text(self) -> str:
        path = self.root / "tuner.log"
        return path.read_text() if path.exists() else ""

    def save_history(self, history: SolutionHistory) -> None:
        history.save(self.root / "history.json")

    def load_history(self) -> SolutionHistory:
        path = self.root / "history.json"
        return SolutionHistory.load(path) if path.exists() else SolutionHistory()

    @property
    def reports_dir(self) -> Path:
        path = self.root / "reports"
        path.mkdir(exist_ok=True)
        return path


def _to_jsonable(values: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in values.items():
        if isinstance(v, set):
            out[k] = {"__set__": sorted(v)}
        elif isinstance(v, list) and any(isinstance(e, set) for e in v):
            out[k] = {"__sets__": [sorted(e) for e in v]}
        else:
            out[k] = v
    return out
