"""End-to-end orchestration: simulate, identify, assemble, solve, verify.

This is the library-level counterpart of the CLI verbs; each step is the
corresponding module call, so tests and the command line share one path.
"""

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .assembly import build_dual, build_layout, build_omega
from .data import build_data_matrices, estimate_derivatives, identify_gain
from .errors import InsufficientExcitationError, MfiocError, RecoveryFailureError, UsageError
from .linalg import min_eig_sym
from .lqr import simulate_closed_loop, solve_care, random_system
from .recovery import VerificationReport, reconstruct, verify_model
from .solver import SolverConfig, recover_primal, solve

__all__ = ["RunConfig", "PipelineResult", "run_pipeline", "TrialRecord",
           "MonteCarloSummary", "monte_carlo"]


@dataclass(frozen=True)
class RunConfig:
    """Knobs for one pipeline run; serializes to/from JSON."""

    horizon: float = 8.0
    dt: float = 0.1
    n_samples: int = 5
    epsilon: float = 1e-6
    tol: float = 1e-10
    max_iter: int = 5000
    sign: str = "standard"
    seed: int = 0
    trials: int = 100
    deriv_mode: str = "fd"
    fd_accuracy: int = 6
    pinv_rtol: float = 1e-12

    def __post_init__(self):
        if self.horizon <= 0 or self.dt <= 0 or self.horizon < self.dt:
            raise UsageError("require horizon >= dt > 0")
        if self.n_samples < 1 or self.epsilon <= 0 or self.tol <= 0:
            raise UsageError("n_samples, epsilon, and tol must be positive")
        if self.max_iter < 1 or self.trials < 1:
            raise UsageError("max_iter and trials must be >= 1")
        if self.deriv_mode not in ("fd", "oracle"):
            raise UsageError("deriv_mode must be 'fd' or 'oracle'")

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config JSON: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def overridden(self, **kwargs):
        provided = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **provided) if provided else self


@dataclass
class PipelineResult:
    """Everything one solve produced, from expert data to the report."""

    system: object
    cost: object
    x0: np.ndarray
    lqr: object
    expert: object
    kstar: np.ndarray
    data: object
    problem: object
    state: object
    trace: object
    recovery: object
    model: object
    report: object


def run_pipeline(system, cost, x0, config=None):
    """Run the full inversion pipeline on one system.

    simulate -> identify gain -> estimate derivatives -> stack data
    matrices -> assemble the conic program -> solve the dual -> recover
    and complete the primal -> reconstruct -> verify. The expert data is
    generated in-house, so the verification report includes the
    derivative-match check against the true closed loop.
    """
    config = config or RunConfig()
    lqr = solve_care(system, cost)
    expert = simulate_closed_loop(system, lqr.k, x0, config.horizon, config.dt)
    if config.deriv_mode == "fd":
        stencil = 2 * ((system.n + config.fd_accuracy - 1) // 2) + 1
        if expert.sample_count < stencil:
            raise InsufficientExcitationError(
                f"trajectory has {expert.sample_count} samples; differentiating "
                f"to order {system.n} needs at least {stencil}"
            )
    kstar = identify_gain(expert)
    a_k_true = system.a - system.b @ lqr.k
    derivs = estimate_derivatives(
        expert,
        max_order=system.n,
        method=config.deriv_mode,
        accuracy=config.fd_accuracy,
        a_k=a_k_true if config.deriv_mode == "oracle" else None,
    )
    data = build_data_matrices(expert, derivs, config.n_samples, system.n)
    layout = build_layout(system.n, system.m)
    omega = build_omega(kstar, data, layout)
    problem = build_dual(
        omega,
        layout,
        epsilon=config.epsilon,
        sign=config.sign,
        rtol=config.pinv_rtol,
        kstar=kstar,
        a_k_fit=data.a_k_fit,
    )
    solver_config = SolverConfig(tol=config.tol, max_iter=config.max_iter,
                                 sign=config.sign)
    started = time.perf_counter()
    state, trace = solve(problem, solver_config)
    recovery = recover_primal(state, problem, solver_config)
    try:
        model = reconstruct(recovery.xi, kstar, layout, epsilon=config.epsilon)
        report = verify_model(
            model,
            problem,
            recovery.xi,
            expert,
            a_k_ref=a_k_true,
            trace=trace,
            solve_seconds=time.perf_counter() - started,
        )
    except RecoveryFailureError:
        # degenerate multipliers (e.g. the "paper" sign convention) leave no
        # reconstructible model; report the failed certificate instead
        model = None
        report = VerificationReport(
            omega_residual=problem.primal_residual(recovery.xi),
            residual_bound=1e-6 * (1.0 + float(np.linalg.norm(recovery.xi))),
            gain_error_fro=float("inf"),
            are_residual=float("inf"),
            traj_mse=float("inf"),
            min_eig_q=min_eig_sym(layout.extract(recovery.xi, "Q")),
            min_eig_p=min_eig_sym(layout.extract(recovery.xi, "P")),
            min_eig_r=min_eig_sym(layout.extract(recovery.xi, "R")),
            epsilon=config.epsilon,
            closed_loop_stable=False,
            solver_status=trace.status,
            solver_iterations=trace.iterations,
            solve_seconds=time.perf_counter() - started,
            rate_diagnostics=trace.rate_diagnostics(),
        )
    return PipelineResult(
        system=system, cost=cost, x0=np.asarray(x0, dtype=float),
        lqr=lqr, expert=expert, kstar=kstar, data=data, problem=problem,
        state=state, trace=trace, recovery=recovery, model=model, report=report,
    )


@dataclass
class TrialRecord:
    trial: int
    seed: int
    mse: float
    gain_error: float
    iterations: int
    status: str

    CSV_HEADER = "trial,seed,mse,gain_error,iterations,status"

    def to_csv_row(self):
        return (f"{self.trial},{self.seed},{self.mse:.17g},"
                f"{self.gain_error:.17g},{self.iterations},{self.status}")


@dataclass
class MonteCarloSummary:
    """Per-trial rows plus aggregate statistics recomputable from them."""

    records: list
    mse_median: float
    mse_mean: float
    mse_max: float
    mse_std: float
    failure_count: int

    @classmethod
    def from_records(cls, records):
        finite = [r.mse for r in records if np.isfinite(r.mse)]
        failures = sum(1 for r in records if r.status != "converged"
                       or not np.isfinite(r.mse))
        if finite:
            arr = np.asarray(finite)
            stats = (float(np.median(arr)), float(np.mean(arr)),
                     float(np.max(arr)), float(np.std(arr)))
        else:
            stats = (float("nan"),) * 4
        return cls(records=records, mse_median=stats[0], mse_mean=stats[1],
                   mse_max=stats[2], mse_std=stats[3], failure_count=failures)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(TrialRecord.CSV_HEADER + "\n")
            for record in self.records:
                fh.write(record.to_csv_row() + "\n")

    def to_json(self, path=None):
        doc = {
            "trials": len(self.records),
            "mse_median": self.mse_median,
            "mse_mean": self.mse_mean,
            "mse_max": self.mse_max,
            "mse_std": self.mse_std,
            "failure_count": self.failure_count,
        }
        text = json.dumps(doc, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def monte_carlo(trials, n, m, seed0, config=None):
    """Independent randomized trials; trial i uses seed0 + i.

    Individual failures are recorded (status plus non-finite MSE) and
    never abort the batch. Rows are ordered by trial index.
    """
    config = config or RunConfig()
    records = []
    for trial in range(trials):
        seed = seed0 + trial
        try:
            system, cost, x0 = random_system(n, m, seed)
            result = run_pipeline(system, cost, x0, config)
            records.append(TrialRecord(
                trial=trial,
                seed=seed,
                mse=result.report.traj_mse,
                gain_error=result.report.gain_error_fro,
                iterations=result.trace.iterations,
                status=result.trace.status,
            ))
        except MfiocError as exc:
            records.append(TrialRecord(
                trial=trial, seed=seed, mse=float("inf"),
                gain_error=float("inf"), iterations=0,
                status=f"error:{type(exc).__name__}",
            ))
    return MonteCarloSummary.from_records(records)
