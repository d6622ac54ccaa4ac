"""Run configuration and record schema for the benchmark harness."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

TECHNIQUES = ("meta-des", "knora-e", "knora-u", "ola", "lca", "mla", "mcb", "knop",
              "single-best", "bagging", "adaboost", "static-selection", "oracle")

RECORD_COLUMNS = ("dataset", "technique", "replication", "accuracy", "ensemble_size_mean",
                  "wall_time", "pool_hash")


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple = ("pima",)
    techniques: tuple = TECHNIQUES
    replications: int = 20
    K: int = 7
    Kp: int = 5
    hc: float = 0.70
    M: int = 100
    epochs: int = 100
    seed_base: int = 0
    output_dir: str = "results"
    workers: int = 1
    data_root: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "techniques", tuple(self.techniques))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        unknown = [t for t in self.techniques if t not in TECHNIQUES]
        if unknown:
            raise ValueError(f"unknown technique(s) {unknown}; choose from {list(TECHNIQUES)}")
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        if self.M < 2 or self.epochs < 1 or self.workers < 1:
            raise ValueError("M must be >= 2, epochs and workers >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config field(s): {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["datasets"], d["techniques"] = list(self.datasets), list(self.techniques)
        return d


@dataclass
class RunRecord:
    dataset: str
    technique: str
    replication: int
    accuracy: float
    ensemble_size_mean: float
    wall_time: float = 0.0
    pool_hash: str = field(default="")

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")

    def row(self) -> list[str]:
        return [self.dataset, self.technique, str(self.replication), repr(float(self.accuracy)),
                repr(float(self.ensemble_size_mean)), f"{self.wall_time:.4f}", self.pool_hash]

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        return cls(row["dataset"], row["technique"], int(row["replication"]), float(row["accuracy"]),
                   float(row["ensemble_size_mean"]), float(row.get("wall_time") or 0.0),
                   row.get("pool_hash", ""))
