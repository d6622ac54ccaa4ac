"""Hyper-parameter sweeps for the consensus threshold and the profile neighbourhood size.

Each point is scored leave-one-out on D_SEL, so the test partition stays untouched.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import Registry
from ..framework import MetaDES
from .config import RunConfig
from .protocol import meta_params, prepare_cell

log = logging.getLogger(__name__)

HC_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
KP_GRID = tuple(range(1, 11))
# the other parameter is held at these values while one is swept
HC_SWEEP_KP = 1
KP_SWEEP_HC = 0.70


@dataclass
class SweepPoint:
    dataset: str
    param: str
    value: float
    accuracies: list

    @property
    def n(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies, ddof=1)) if self.n > 1 else float("nan")


def _grid(param: str):
    if param == "h_c":
        return HC_GRID, lambda v: {"hc": v, "Kp": HC_SWEEP_KP}
    if param == "kp":
        return KP_GRID, lambda v: {"Kp": int(v), "hc": KP_SWEEP_HC}
    raise ValueError(f"unknown sweep parameter {param!r}; use 'h_c' or 'kp'")


def sweep(cfg: RunConfig, param: str, registry: Registry | None = None) -> list[SweepPoint]:
    """Mean and spread of D_SEL accuracy at every grid value, per dataset."""
    grid, overrides = _grid(param)
    registry = registry or (Registry(cfg.data_root) if cfg.data_root else Registry())
    points = []
    for name in cfg.datasets:
        ds = registry.load(name)
        row = {v: SweepPoint(name, param, v, []) for v in grid}
        for rep in range(cfg.replications):
            cell = prepare_cell(ds, rep, cfg)
            for v in grid:
                try:
                    model = MetaDES.fit(cell.pool, cell.meta_train, cell.dsel,
                                        meta_params(cfg, **overrides(v)), seed=cell.seeds[3])
                except ValueError as err:
                    log.warning("%s rep %d, %s=%s: %s", name, rep, param, v, err)
                    continue
                row[v].accuracies.append(model.evaluate_on_dsel().accuracy)
        points.extend(row.values())
    return points


def write_sweep(points, path) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "param", "value", "n", "mean", "std"])
        for p in points:
            w.writerow([p.dataset, p.param, p.value, p.n, repr(p.mean), repr(p.std)])
    lines = [f"{'dataset':<12}{'param':<7}{'value':>6}  {'n':>3}  accuracy"]
    for p in points:
        acc = "n/a" if p.n == 0 else f"{100 * p.mean:.2f}({'n/a' if p.n < 2 else f'{100 * p.std:.2f}'})"
        lines.append(f"{p.dataset:<12}{p.param:<7}{p.value:>6g}  {p.n:>3}  {acc}")
    return "\n".join(lines) + "\n"
