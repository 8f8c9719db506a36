import numpy as np
import pytest

from mfioc_figures.schemas import (
    SchemaError,
    check_same_grid,
    read_montecarlo,
    read_trace,
    read_trajectory,
)


class TestTraceSchema:
    def test_reads_valid_trace(self, trace_csv):
        trace = read_trace(trace_csv)
        assert trace.iterations[0] == 0
        assert len(trace.dual_objective) == 40
        assert np.isnan(trace.step_norm[0])

    def test_rejects_wrong_header(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("iteration,obj,step\n1,2,3\n")
        with pytest.raises(SchemaError, match="expected header"):
            read_trace(bad)

    def test_rejects_single_row(self, tmp_path):
        bad = tmp_path / "short.csv"
        bad.write_text("iter,dual_obj,step_norm,elapsed_ms\n0,0,nan,0\n")
        with pytest.raises(SchemaError, match="at least 2"):
            read_trace(bad)

    def test_rejects_non_numeric(self, tmp_path):
        bad = tmp_path / "nn.csv"
        bad.write_text("iter,dual_obj,step_norm,elapsed_ms\n0,0,nan,0\n1,x,1,1\n")
        with pytest.raises(SchemaError, match="bad number"):
            read_trace(bad)


class TestTrajectorySchema:
    def test_reads_valid_pair(self, trajectory_pair):
        expert, recon = trajectory_pair
        a = read_trajectory(expert)
        b = read_trajectory(recon)
        assert a.states.shape == (3, 81)
        assert a.inputs.shape == (2, 81)
        check_same_grid(a, b)

    def test_rejects_bad_header(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,a1,u1\n0,1,2\n")
        with pytest.raises(SchemaError):
            read_trajectory(bad)

    def test_grid_mismatch_detected(self, trajectory_pair, tmp_path):
        expert, _ = trajectory_pair
        a = read_trajectory(expert)
        other = tmp_path / "other.csv"
        other.write_text("t,x1,u1\n0,1,0\n0.2,0.5,0\n")
        b = read_trajectory(other)
        with pytest.raises(SchemaError, match="different grids"):
            check_same_grid(a, b)


class TestMonteCarloSchema:
    def test_reads_valid_table(self, montecarlo_csv):
        table = read_montecarlo(montecarlo_csv)
        assert len(table.statuses) == 101
        assert table.statuses[-1].startswith("error:")
        assert np.isinf(table.mse[-1])

    def test_rejects_empty_table(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("trial,seed,mse,gain_error,iterations,status\n")
        with pytest.raises(SchemaError, match="no trials"):
            read_montecarlo(bad)

    def test_rejects_malformed_row(self, tmp_path):
        bad = tmp_path / "mal.csv"
        bad.write_text(
            "trial,seed,mse,gain_error,iterations,status\n0,1,oops,1,1,converged\n"
        )
        with pytest.raises(SchemaError, match="bad number"):
            read_montecarlo(bad)

    def test_rejects_short_row(self, tmp_path):
        bad = tmp_path / "short.csv"
        bad.write_text("trial,seed,mse,gain_error,iterations,status\n0,1,2\n")
        with pytest.raises(SchemaError, match="fields"):
            read_montecarlo(bad)
