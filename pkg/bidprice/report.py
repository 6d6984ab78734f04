# bidprice/report.py
"""
CSV reports and text summaries of simulation and benchmark runs.
"""
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from .strategies import SimResult, Strategy

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["strategy", "replication", "revenue", "accepts", "requests", "segments",
                  "solve_ms_total", "solve_ms_per_segment"]
SUMMARY_COLUMNS = ["strategy", "replications", "mean_revenue", "std_revenue", "relative_to_cp",
                   "mean_accepts", "mean_solve_ms"]
TIMING_COLUMNS = ["model", "n_paths", "parties", "runs", "mean_ms", "std_ms", "nnz"]
GENERAL_MODE_COLUMNS = ["n_paths", "parties", "trial", "status", "certified", "Z", "Z_collective", "gap"]


def results_frame(result: SimResult) -> pd.DataFrame:
    """One row per strategy and replication."""
    rows = []
    for rep in result.replications:
        total = float(np.sum(rep.solve_ms))
        rows.append({
            "strategy": rep.strategy,
            "replication": rep.replication,
            "revenue": rep.revenue,
            "accepts": rep.accepts,
            "requests": rep.requests,
            "segments": len(rep.solve_ms),
            "solve_ms_total": total,
            "solve_ms_per_segment": total / len(rep.solve_ms) if rep.solve_ms else 0.0,
        })
    frame = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    return frame.sort_values(["strategy", "replication"], kind="stable").reset_index(drop=True)


def summary_frame(results: pd.DataFrame) -> pd.DataFrame:
    """
    Per-strategy aggregates with mean revenue relative to CP in percent.

    The CP row is 100.0 by construction; without a CP run the relative
    column is left empty.
    """
    grouped = results.groupby("strategy", sort=False)
    summary = pd.DataFrame({
        "replications": grouped["replication"].count(),
        "mean_revenue": grouped["revenue"].mean(),
        "std_revenue": grouped["revenue"].std(ddof=1).fillna(0.0),
        "mean_accepts": grouped["accepts"].mean(),
        "mean_solve_ms": grouped["solve_ms_per_segment"].mean(),
    }).reset_index()

    cp = summary.loc[summary["strategy"] == Strategy.CP.value, "mean_revenue"]
    if not cp.empty and cp.iloc[0] != 0:
        summary["relative_to_cp"] = summary["mean_revenue"] / cp.iloc[0] * 100.0
        summary.loc[summary["strategy"] == Strategy.CP.value, "relative_to_cp"] = 100.0
    else:
        summary["relative_to_cp"] = np.nan

    order = {s.value: i for i, s in enumerate(Strategy)}
    summary = summary.sort_values("strategy", key=lambda s: s.map(order)).reset_index(drop=True)
    return summary[SUMMARY_COLUMNS]


def render_summary(summary: Optional[pd.DataFrame], timing: Optional[pd.DataFrame] = None,
                   general: Optional[pd.DataFrame] = None) -> str:
    """Plain-text summary for the terminal and summary.txt."""
    lines = []
    if summary is not None:
        lines.append("Relative average revenue with respect to CP")
        for row in summary.itertuples(index=False):
            relative = "n/a" if pd.isna(row.relative_to_cp) else f"{row.relative_to_cp:.2f}%"
            lines.append(
                f"  {row.strategy.upper():<4} reps={row.replications:<4d} mean={row.mean_revenue:.2f} "
                f"std={row.std_revenue:.2f} relative={relative}"
            )
    if timing is not None and not timing.empty:
        lines.append("Average computation time")
        for row in timing.itertuples(index=False):
            lines.append(f"  {row.model:<12} N={row.n_paths:<5d} K={row.parties} mean={row.mean_ms:.3f}ms "
                         f"std={row.std_ms:.3f}ms log10={np.log10(max(row.mean_ms, 1e-12)):.3f}")
    if general is not None and not general.empty:
        lines.append("General M-matrix certificate pass rate")
        for (n_paths, parties), group in general.groupby(["n_paths", "parties"], sort=False):
            gap = group["gap"].mean()
            gap_text = "n/a" if pd.isna(gap) else f"{100.0 * gap:.3f}%"
            lines.append(f"  N={n_paths:<5d} K={parties} certified={int(group['certified'].sum())}/{len(group)} "
                         f"rate={100.0 * group['certified'].mean():.1f}% mean_gap={gap_text}")
    return "\n".join(lines) + "\n"


def write_reports(out_dir: Path, result: Optional[SimResult] = None,
                  timing: Optional[pd.DataFrame] = None,
                  general: Optional[pd.DataFrame] = None) -> List[Path]:
    """Write results.csv, summary.csv, timing.csv, general_mode.csv and summary.txt as available."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    summary = None
    if result is not None:
        results = results_frame(result)
        summary = summary_frame(results)
        results.to_csv(out_dir / "results.csv", index=False)
        summary.to_csv(out_dir / "summary.csv", index=False)
        written += [out_dir / "results.csv", out_dir / "summary.csv"]
    if timing is not None:
        timing[TIMING_COLUMNS].to_csv(out_dir / "timing.csv", index=False)
        written.append(out_dir / "timing.csv")
    if general is not None:
        general[GENERAL_MODE_COLUMNS].to_csv(out_dir / "general_mode.csv", index=False)
        written.append(out_dir / "general_mode.csv")
    if summary is not None or general is not None:
        text = render_summary(summary, general=general)
        (out_dir / "summary.txt").write_text(text, encoding="utf-8")
        written.append(out_dir / "summary.txt")

    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written
