"""Readers and validators for the solver's CSV output schemas.

The plotting layer consumes files only; it never recomputes solver
quantities. Schema violations raise :class:`SchemaError`.
"""

import csv
from dataclasses import dataclass

import numpy as np

TRACE_HEADER = ["iter", "dual_obj", "step_norm", "elapsed_ms"]
MONTECARLO_HEADER = ["trial", "seed", "mse", "gain_error", "iterations", "status"]


class SchemaError(Exception):
    """Input file does not match the documented schema."""


@dataclass
class Trace:
    iterations: np.ndarray
    dual_objective: np.ndarray
    step_norm: np.ndarray


@dataclass
class TrajectoryTable:
    times: np.ndarray
    states: np.ndarray   # n x T
    inputs: np.ndarray   # m x T


@dataclass
class MonteCarloTable:
    trials: np.ndarray
    mse: np.ndarray
    gain_error: np.ndarray
    iterations: np.ndarray
    statuses: list


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: empty file")
    return rows


def _parse_float(path, row_index, text):
    try:
        return float(text)
    except ValueError as exc:
        raise SchemaError(f"{path}: row {row_index}: bad number {text!r}") from exc


def read_trace(path):
    """Solver trace: ``iter,dual_obj,step_norm,elapsed_ms``, >= 2 data rows."""
    rows = _read_rows(path)
    if [c.strip() for c in rows[0]] != TRACE_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(TRACE_HEADER)}")
    body = rows[1:]
    if len(body) < 2:
        raise SchemaError(f"{path}: need at least 2 trace rows, found {len(body)}")
    data = []
    for i, row in enumerate(body, start=1):
        if len(row) != 4:
            raise SchemaError(f"{path}: row {i} has {len(row)} fields, expected 4")
        data.append([_parse_float(path, i, cell) for cell in row])
    arr = np.asarray(data)
    return Trace(iterations=arr[:, 0], dual_objective=arr[:, 1], step_norm=arr[:, 2])


def read_trajectory(path):
    """Trajectory table: ``t,x1..xn,u1..um``."""
    rows = _read_rows(path)
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "t":
        raise SchemaError(f"{path}: first column must be 't'")
    n = sum(1 for name in header if name.startswith("x"))
    m = sum(1 for name in header if name.startswith("u"))
    if n == 0 or m == 0 or header != (
        ["t"] + [f"x{i+1}" for i in range(n)] + [f"u{i+1}" for i in range(m)]
    ):
        raise SchemaError(f"{path}: header must be t,x1..xn,u1..um")
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: no samples")
    data = []
    for i, row in enumerate(body, start=1):
        if len(row) != 1 + n + m:
            raise SchemaError(f"{path}: row {i} width {len(row)} != {1 + n + m}")
        data.append([_parse_float(path, i, cell) for cell in row])
    arr = np.asarray(data)
    return TrajectoryTable(times=arr[:, 0], states=arr[:, 1:1 + n].T,
                           inputs=arr[:, 1 + n:].T)


def read_montecarlo(path):
    """Per-trial study rows: ``trial,seed,mse,gain_error,iterations,status``."""
    rows = _read_rows(path)
    if [c.strip() for c in rows[0]] != MONTECARLO_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(MONTECARLO_HEADER)}")
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: no trials")
    trials, mse, gain, iters, statuses = [], [], [], [], []
    for i, row in enumerate(body, start=1):
        if len(row) != 6:
            raise SchemaError(f"{path}: row {i} has {len(row)} fields, expected 6")
        trials.append(int(_parse_float(path, i, row[0])))
        mse.append(_parse_float(path, i, row[2]))
        gain.append(_parse_float(path, i, row[3]))
        iters.append(int(_parse_float(path, i, row[4])))
        status = row[5].strip()
        if not status:
            raise SchemaError(f"{path}: row {i}: empty status")
        statuses.append(status)
    return MonteCarloTable(
        trials=np.asarray(trials), mse=np.asarray(mse),
        gain_error=np.asarray(gain), iterations=np.asarray(iters),
        statuses=statuses,
    )


def check_same_grid(expert, recon, tol=1e-9):
    if expert.times.shape != recon.times.shape or not np.allclose(
        expert.times, recon.times, atol=tol
    ):
        raise SchemaError("expert and reconstructed trajectories use different grids")
    if expert.states.shape[0] != recon.states.shape[0]:
        raise SchemaError("state dimensions differ between the two trajectories")
