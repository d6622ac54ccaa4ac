"""Replicated experiments: seeded splits, one shared pool per cell, every technique evaluated on it."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import baselines
from ..dataset import Dataset, MinMaxScaler, Registry, SplitSpec, stratified_split
from ..framework import MetaDES, MetaDesParams
from ..linear_classifiers import Pool, adaboost_train, bagging_generate
from .config import RECORD_COLUMNS, RunConfig, RunRecord

log = logging.getLogger(__name__)


@dataclass
class Cell:
    """Everything shared by the techniques of one (dataset, replication)."""

    dataset: str
    replication: int
    train: Dataset
    meta_train: Dataset
    dsel: Dataset
    test: Dataset
    pool: Pool
    seeds: tuple


def cell_seeds(seed_base: int, replication: int) -> tuple:
    """(split, pool, boosting, selector) seeds for one replication."""
    state = np.random.SeedSequence([seed_base, replication]).generate_state(4)
    return tuple(int(s) for s in state)


def prepare_cell(ds: Dataset, replication: int, cfg: RunConfig) -> Cell:
    seeds = cell_seeds(cfg.seed_base, replication)
    train, meta, dsel, test = stratified_split(ds, SplitSpec(seed=seeds[0]))
    # scaling bounds come from the training half only
    scaler = MinMaxScaler().fit(np.vstack([train.features, meta.features]))
    train, meta, dsel, test = (scaler.transform(p) for p in (train, meta, dsel, test))
    pool = bagging_generate(train, cfg.M, seed=seeds[1], epochs=cfg.epochs)
    return Cell(ds.name, replication, train, meta, dsel, test, pool, seeds)


def meta_params(cfg: RunConfig, **override) -> MetaDesParams:
    return MetaDesParams(**{"K": cfg.K, "Kp": cfg.Kp, "hc": cfg.hc, **override})


def _accuracy(pred, labels) -> float:
    return float(np.mean(np.asarray(pred) == labels))


def evaluate_technique(name: str, cell: Cell, cfg: RunConfig, view=None) -> tuple[float, float]:
    """Return (accuracy, mean selected-ensemble size) of technique ``name`` on the cell's test set."""
    pool, test = cell.pool, cell.test
    if name == "meta-des":
        model = MetaDES.fit(pool, cell.meta_train, cell.dsel, meta_params(cfg), seed=cell.seeds[3])
        res = model.evaluate(test)
        return res.accuracy, res.ensemble_size_mean
    if name in baselines.DES_TECHNIQUES:
        sel = baselines.run_des(name, pool, cell.dsel, test.features, K=cfg.K, view=view)
        return (_accuracy([s.label for s in sel], test.labels),
                float(np.mean([len(s.selected) for s in sel])))
    if name == "single-best":
        best = baselines.single_best(pool, cell.dsel)
        return _accuracy(pool[best].predict(test.features), test.labels), 1.0
    if name == "bagging":
        return _accuracy(baselines.pool_vote_predict(pool, test.features), test.labels), float(pool.M)
    if name == "static-selection":
        members = baselines.static_selection(pool, cell.dsel)
        return (_accuracy(baselines.pool_vote_predict(pool, test.features, members), test.labels),
                float(len(members)))
    if name == "adaboost":
        boost = adaboost_train(cell.train, T=cfg.M, seed=cell.seeds[2], epochs=cfg.epochs)
        return _accuracy(boost.predict(test.features), test.labels), float(len(boost))
    if name == "oracle":
        return baselines.oracle_accuracy(pool, test), 1.0
    raise ValueError(f"unknown technique {name!r}")


def run_cell(ds: Dataset, replication: int, cfg: RunConfig) -> list[RunRecord]:
    """Evaluate every configured technique on one replication; failures are logged and skipped."""
    try:
        cell = prepare_cell(ds, replication, cfg)
    except Exception:
        log.exception("cell %s/%d: preparation failed, skipped", ds.name, replication)
        return []
    view = baselines.DSELView(cell.pool, cell.dsel)
    pool_hash = cell.pool.fingerprint()
    records = []
    for name in cfg.techniques:
        t0 = time.perf_counter()
        try:
            acc, size = evaluate_technique(name, cell, cfg, view)
        except Exception:
            log.exception("cell %s/%d: technique %s failed, skipped", ds.name, replication, name)
            continue
        records.append(RunRecord(ds.name, name, replication, acc, size,
                                 time.perf_counter() - t0, pool_hash))
    return records


def _cell_job(args):
    return run_cell(*args)


def read_records(path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = set(RECORD_COLUMNS) - {"wall_time", "pool_hash"} - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: missing record column(s) {sorted(missing)}")
        return [RunRecord.from_row(row) for row in reader]


class RecordWriter:
    """Single appender for records.csv; writes the header once."""

    def __init__(self, path):
        self.path = Path(path)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        if fresh:
            self._w.writerow(RECORD_COLUMNS)
            self._fh.flush()

    def write(self, records):
        for r in records:
            self._w.writerow(r.row())
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def run_protocol(cfg: RunConfig, registry: Registry | None = None) -> list[RunRecord]:
    """Run every (dataset, replication) cell not already in ``records.csv`` and return all records.

    Cells are written in a fixed order whatever the worker count, so a
    resumed run produces the same file as an uninterrupted one.
    """
    registry = registry or (Registry(cfg.data_root) if cfg.data_root else Registry())
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "records.csv"
    done = {(r.dataset, r.replication) for r in read_records(path)}

    jobs = []
    for name in cfg.datasets:
        todo = [rep for rep in range(cfg.replications) if (name, rep) not in done]
        if not todo:
            continue
        try:
            ds = registry.load(name)
        except Exception:
            log.exception("dataset %s could not be loaded, skipped", name)
            continue
        jobs.extend((ds, rep, cfg) for rep in todo)
    if done and jobs:
        log.info("resuming: %d cell(s) already recorded", len(done))

    with RecordWriter(path) as writer:
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg.workers) as ex:
                for recs in ex.map(_cell_job, jobs):
                    writer.write(recs)
        else:
            for job in jobs:
                recs = _cell_job(job)
                writer.write(recs)
                if recs:
                    log.info("%s rep %d: %s", recs[0].dataset, recs[0].replication,
                             " ".join(f"{r.technique}={100 * r.accuracy:.2f}" for r in recs))
    return read_records(path)
