# bidprice/benchmark.py
"""
Solve-time comparison of the collective model against masked models built
with dense and sparse keys, plus certificate pass rates of general M-matrix
keys.
"""
import logging
import time
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from .exceptions import SolverError
from .lp import LinearProgram, build_collective, solve
from .masking import KeyKind, KeyPolicy, assemble_masked_model, generate_keys, local_certificate, mask
from .mmatrix import MMatrixMode
from .models import AllianceInstance
from .network import AllianceBlocks, assemble_blocks, generate_instance
from .report import GENERAL_MODE_COLUMNS, TIMING_COLUMNS
from .seeding import make_rng

logger = logging.getLogger(__name__)

MODELS = ("cp", "ccs-dense", "ccs-sparse")


def masked_program(blocks: AllianceBlocks, kind: KeyKind, seed: int,
                   policy: Optional[KeyPolicy] = None) -> LinearProgram:
    """The public masked LP for one key draw, as every party would assemble it."""
    policy = policy or KeyPolicy.from_settings(kind=kind)
    payloads = {}
    for party in blocks.parties:
        keys = generate_keys(blocks, party, make_rng(seed, "benchmark", kind.value, party), policy)
        payloads[party] = mask(blocks, party, keys, kind)
    return assemble_masked_model(payloads, blocks.c, blocks.parties, use_sparse=True).lp


def _time_solve(lp: LinearProgram, backend: Optional[str]) -> float:
    started = time.perf_counter()
    solution = solve(lp, backend=backend)
    elapsed = (time.perf_counter() - started) * 1000.0
    if not solution.optimal:
        logger.warning(f"Benchmark solve of {lp.name} ended {solution.status.value}")
    return elapsed


def benchmark_instance(instance: AllianceInstance, runs: int = 5, seed: int = 0,
                       backend: Optional[str] = "highs") -> List[Dict[str, object]]:
    """Timing rows for CP, CCS-dense and CCS-sparse on one instance."""
    blocks = assemble_blocks(instance)
    timings: Dict[str, List[float]] = {model: [] for model in MODELS}
    nnz: Dict[str, List[int]] = {model: [] for model in MODELS}

    collective = build_collective(blocks, use_sparse=True)
    for run in range(runs):
        timings["cp"].append(_time_solve(collective, backend))
        nnz["cp"].append(collective.nnz())
        for model, kind in (("ccs-dense", KeyKind.DENSE), ("ccs-sparse", KeyKind.SPARSE)):
            lp = masked_program(blocks, kind, seed + run)
            timings[model].append(_time_solve(lp, backend))
            nnz[model].append(lp.nnz())

    rows = []
    for model in MODELS:
        values = np.array(timings[model])
        rows.append({
            "model": model,
            "n_paths": len(instance.paths),
            "parties": len(instance.parties),
            "runs": runs,
            "mean_ms": float(values.mean()),
            "std_ms": float(values.std(ddof=1)) if runs > 1 else 0.0,
            "nnz": int(np.mean(nnz[model])),
        })
        logger.info(f"{model} on N={len(instance.paths)}: {rows[-1]['mean_ms']:.2f}ms, nnz={rows[-1]['nnz']}")
    return rows


def benchmark_models(sizes: Iterable[Tuple[int, int]], runs: int = 5, seed: int = 0,
                     backend: Optional[str] = "highs") -> pd.DataFrame:
    """
    Benchmark generated instances of the given (n_paths, parties) sizes.

    Returns:
        One timing row per model and size, in timing.csv column order
    """
    rows: List[Dict[str, object]] = []
    for n_paths, parties in sizes:
        instance, _ = generate_instance(seed, n_paths, parties)
        rows.extend(benchmark_instance(instance, runs, seed, backend))
    return pd.DataFrame(rows, columns=TIMING_COLUMNS)


def general_mode_trials(source, trials: int = 10, seed: int = 0, policy: Optional[KeyPolicy] = None,
                        backend: Optional[str] = None) -> pd.DataFrame:
    """
    Certificate outcomes of masked solves with general M-matrix keys.

    Every trial draws fresh keys for all parties, solves the masked LP once
    and runs each party's local certificate. A non-diagonal M-matrix turns
    the box and sign rows into strictly tighter ones, so the recovered Z sits
    at or below the collective optimum and a trial is certified only when
    the optimum survives the tightening.

    Returns:
        One row per trial in GENERAL_MODE_COLUMNS order (without the size columns)
    """
    blocks = assemble_blocks(source) if isinstance(source, AllianceInstance) else source
    policy = replace(policy or KeyPolicy.from_settings(), mmatrix_mode=MMatrixMode.GENERAL)
    collective = solve(build_collective(blocks), backend=backend)
    if not collective.optimal:
        raise SolverError(f"Collective model ended {collective.status.value}")
    scale = max(1.0, abs(collective.objective))

    rows = []
    for trial in range(trials):
        keys = {
            party: generate_keys(blocks, party, make_rng(seed, "general", trial, party), policy)
            for party in blocks.parties
        }
        payloads = {party: mask(blocks, party, keys[party], policy.kind) for party in blocks.parties}
        model = assemble_masked_model(payloads, blocks.c, blocks.parties)
        solution = solve(model.lp, backend=backend)
        verdicts = [local_certificate(blocks[p], keys[p], model, solution) for p in blocks.parties]
        z = solution.objective - model.total_offset if solution.optimal else float("nan")
        rows.append({
            "trial": trial,
            "status": solution.status.value,
            "certified": all(verdict.passed for verdict in verdicts),
            "Z": z,
            "Z_collective": collective.objective,
            "gap": (collective.objective - z) / scale,
        })

    frame = pd.DataFrame(rows, columns=GENERAL_MODE_COLUMNS[2:])
    logger.info(
        f"General M-matrix keys on {len(blocks.parties)} parties: "
        f"{int(frame['certified'].sum())}/{trials} trials certified"
    )
    return frame


def general_mode_benchmark(sizes: Iterable[Tuple[int, int]], trials: int = 10, seed: int = 0,
                           backend: Optional[str] = "highs") -> pd.DataFrame:
    """General M-matrix certificate trials on generated instances of the given sizes."""
    frames = []
    for n_paths, parties in sizes:
        instance, _ = generate_instance(seed, n_paths, parties)
        frame = general_mode_trials(instance, trials, seed, backend=backend)
        frame.insert(0, "parties", parties)
        frame.insert(0, "n_paths", n_paths)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=GENERAL_MODE_COLUMNS)
    return pd.concat(frames, ignore_index=True)[GENERAL_MODE_COLUMNS]


def pass_rate(trials: pd.DataFrame) -> float:
    """Share of certified trials; NaN when there are none."""
    return float(trials["certified"].mean()) if len(trials) else float("nan")
