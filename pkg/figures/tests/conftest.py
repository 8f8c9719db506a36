"""Synthetic schema-conformant inputs for the figure tests."""

import numpy as np
import pytest


@pytest.fixture
def trace_csv(tmp_path):
    path = tmp_path / "trace.csv"
    lines = ["iter,dual_obj,step_norm,elapsed_ms", "0,0,nan,0"]
    obj = 0.0
    for k in range(1, 40):
        obj -= 1e-8 / k
        lines.append(f"{k},{obj:.17g},{1e-6 / k:.17g},{0.05 * k:.3f}")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def two_row_trace_csv(tmp_path):
    path = tmp_path / "trace2.csv"
    path.write_text(
        "iter,dual_obj,step_norm,elapsed_ms\n0,0,nan,0\n1,-1e-9,2e-7,0.1\n"
    )
    return path


def _write_trajectory(path, times, states, inputs):
    n, m = states.shape[0], inputs.shape[0]
    header = ",".join(["t"] + [f"x{i+1}" for i in range(n)]
                      + [f"u{i+1}" for i in range(m)])
    table = np.vstack([times, states, inputs]).T
    body = "\n".join(",".join(f"{v:.17g}" for v in row) for row in table)
    path.write_text(header + "\n" + body + "\n")


@pytest.fixture
def trajectory_pair(tmp_path):
    times = np.arange(81) * 0.1
    decay = np.exp(-0.6 * times)
    states = np.vstack([decay, -0.5 * decay, 0.25 * decay])
    inputs = np.vstack([0.1 * decay, -0.2 * decay])
    expert = tmp_path / "expert.csv"
    recon = tmp_path / "recon.csv"
    _write_trajectory(expert, times, states, inputs)
    _write_trajectory(recon, times, states + 1e-5 * np.sin(times), inputs)
    return expert, recon


@pytest.fixture
def montecarlo_csv(tmp_path):
    rng = np.random.default_rng(1)
    path = tmp_path / "mc.csv"
    lines = ["trial,seed,mse,gain_error,iterations,status"]
    for trial in range(100):
        mse = 10 ** rng.uniform(-17, -12)
        lines.append(f"{trial},{trial},{mse:.17g},1e-15,10,converged")
    lines.append("100,100,inf,inf,0,error:NumericalBreakdownError")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def single_trial_csv(tmp_path):
    path = tmp_path / "single.csv"
    path.write_text(
        "trial,seed,mse,gain_error,iterations,status\n"
        "0,5,3.2e-15,1e-15,10,converged\n"
    )
    return path
