"""Summary tables: mean(std) accuracy per dataset and technique."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TECHNIQUES
from .stats import MIN_GROUP, kruskal_two

REFERENCE = "meta-des"
EXCLUDED_FROM_BEST = ("oracle",)
FOOTER = ("* best mean in row (oracle excluded).  ^ differs from {ref} at the 95% level "
          "(two-group Kruskal-Wallis over replications).\n"
          "No correction for multiple comparisons is applied.")


@dataclass
class Cell:
    values: np.ndarray
    best: bool = False
    p_value: float | None = None

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values, ddof=1)) if self.n > 1 else float("nan")

    @property
    def significant(self) -> bool:
        return self.p_value is not None and self.p_value < 0.05

    def text(self) -> str:
        std = "n/a" if self.n < 2 else f"{100 * self.std:.2f}"
        return f"{100 * self.mean:.2f}({std})"


def summarize(records, reference: str = REFERENCE):
    """Return (datasets, techniques, {dataset: {technique: Cell}})."""
    grouped = defaultdict(lambda: defaultdict(list))
    for r in records:
        grouped[r.dataset][r.technique].append((r.replication, r.accuracy))
    datasets = list(dict.fromkeys(r.dataset for r in records))
    seen = {r.technique for r in records}
    techniques = [t for t in TECHNIQUES if t in seen] + sorted(seen - set(TECHNIQUES))

    table = {}
    for d in datasets:
        row = {t: Cell(np.array([a for _, a in sorted(v)])) for t, v in grouped[d].items()}
        candidates = [t for t in row if t not in EXCLUDED_FROM_BEST]
        if candidates:
            top = max(row[t].mean for t in candidates)
            for t in candidates:
                row[t].best = row[t].mean == top
        ref = row.get(reference)
        if ref is not None and ref.n >= MIN_GROUP:
            for t, cell in row.items():
                if t != reference and cell.n >= MIN_GROUP:
                    cell.p_value = kruskal_two(ref.values, cell.values).p_value
        table[d] = row
    return datasets, techniques, table


def format_table(datasets, techniques, table, reference: str = REFERENCE) -> str:
    header = ["dataset"] + techniques
    lines = [header]
    for d in datasets:
        row = [d]
        for t in techniques:
            cell = table[d].get(t)
            if cell is None:
                row.append("-")
                continue
            mark = ("*" if cell.best else "") + ("^" if cell.significant else "")
            row.append(cell.text() + mark)
        lines.append(row)
    widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
    body = "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in lines)
    return body + "\n\n" + FOOTER.format(ref=reference) + "\n"


def write_report(records, out_dir, reference: str = REFERENCE) -> str:
    """Write summary.csv and summary.txt to ``out_dir``; return the text table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    datasets, techniques, table = summarize(records, reference)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "technique", "n", "mean", "std", "cell", "best", f"p_vs_{reference}"])
        for d in datasets:
            for t in techniques:
                c = table[d].get(t)
                if c is None:
                    continue
                w.writerow([d, t, c.n, repr(c.mean), repr(c.std), c.text(), int(c.best),
                            "" if c.p_value is None else repr(c.p_value)])
    text = format_table(datasets, techniques, table, reference) if datasets else "no records\n"
    (out / "summary.txt").write_text(text)
    return text
