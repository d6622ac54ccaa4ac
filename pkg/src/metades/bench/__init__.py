from .config import TECHNIQUES, RunConfig, RunRecord
from .protocol import read_records, run_cell, run_protocol
from .report import summarize, write_report
from .stats import kruskal_two, significance
from .sweep import sweep

__all__ = ["TECHNIQUES", "RunConfig", "RunRecord", "kruskal_two", "read_records", "run_cell",
           "run_protocol", "significance", "summarize", "sweep", "write_report"]
