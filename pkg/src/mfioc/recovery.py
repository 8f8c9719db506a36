"""Model reconstruction and equivalence verification.

From a recovered decision vector, rebuilds the system/cost tuple via
A = P^-1 Z', B = P^-1 K' R, K = R^-1 B' P, and checks the certificate that
makes the tuple an equivalent explanation of the expert data: Riccati
consistency, gain match, derivative matching at the initial state, and
closed-loop trajectory reproduction.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Trajectory
from .errors import RecoveryFailureError, UsageError
from .linalg import expm, min_eig_sym, sym

__all__ = [
    "RecoveredModel",
    "VerificationReport",
    "reconstruct",
    "are_residual",
    "derivative_match_check",
    "trajectory_mse",
    "verify_model",
]


@dataclass
class RecoveredModel:
    """Recovered (A, B, Q, R, P) tuple with the implied gain and metrics."""

    a_hat: np.ndarray
    b_hat: np.ndarray
    q_hat: np.ndarray
    r_hat: np.ndarray
    p_hat: np.ndarray
    k_hat: np.ndarray
    metrics: dict = field(default_factory=dict)

    @property
    def a_k_hat(self):
        return self.a_hat - self.b_hat @ self.k_hat


def reconstruct(xi, kstar, layout, epsilon=1e-6):
    """Rebuild the model from a decision vector.

    The symmetric blocks are explicitly symmetrized before any inversion;
    rounding asymmetry would otherwise contaminate P^-1. Requires the P
    block to clear half the cone margin.

    Raises
    ------
    RecoveryFailureError
        If the P block is near singular (reports its minimum eigenvalue).
    """
    kstar = np.asarray(kstar, dtype=float)
    q_hat = sym(layout.extract(xi, "Q"))
    r_hat = sym(layout.extract(xi, "R"))
    p_hat = sym(layout.extract(xi, "P"))
    z_hat = layout.extract(xi, "Z")
    p_min = min_eig_sym(p_hat)
    if p_min < epsilon / 2:
        raise RecoveryFailureError(
            f"recovered P too close to singular (min eig {p_min:.3e} < {epsilon / 2:.1e})"
        )
    a_hat = np.linalg.solve(p_hat, z_hat.T)
    b_hat = np.linalg.solve(p_hat, kstar.T @ r_hat)
    k_hat = np.linalg.solve(r_hat, b_hat.T @ p_hat)
    model = RecoveredModel(
        a_hat=a_hat, b_hat=b_hat, q_hat=q_hat, r_hat=r_hat, p_hat=p_hat, k_hat=k_hat
    )
    model.metrics["gain_error_fro"] = float(np.linalg.norm(k_hat - kstar, "fro"))
    model.metrics["min_eig_q"] = float(min_eig_sym(q_hat))
    model.metrics["min_eig_p"] = float(p_min)
    model.metrics["min_eig_r"] = float(min_eig_sym(r_hat))
    model.metrics["are_residual"] = are_residual(model)
    return model


def are_residual(model):
    """||A'P + PA - PBR^-1B'P + Q||_F evaluated in the original variables."""
    a, b, p = model.a_hat, model.b_hat, model.p_hat
    res = a.T @ p + p @ a - p @ b @ np.linalg.solve(model.r_hat, b.T @ p) + model.q_hat
    return float(np.linalg.norm(res, "fro"))


def derivative_match_check(model, x0, a_k_ref, n):
    """Relative residuals of (A_K_hat)^i x0 against the reference powers.

    Matching powers up to i = n pins the whole reconstructed trajectory to
    the expert one (Cayley-Hamilton argument), so these residuals are the
    sharp certificate of trajectory equivalence.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    a_k_ref = np.asarray(a_k_ref, dtype=float)
    a_k_hat = model.a_k_hat
    got, ref = x0.copy(), x0.copy()
    residuals = []
    for _ in range(1, n + 1):
        got = a_k_hat @ got
        ref = a_k_ref @ ref
        scale = np.linalg.norm(ref)
        residuals.append(float(np.linalg.norm(got - ref) / scale) if scale > 0 else 0.0)
    return {"per_power": residuals, "max": max(residuals)}


def trajectory_mse(model, expert):
    """Mean squared deviation of the reconstructed closed-loop trajectory.

    Simulates xdot = (A - BK) x from the expert's initial state on the
    expert grid; averages squared deviations over samples and coordinates.
    An unstable or overflowing reconstruction reports ``inf`` rather than
    raising, so batch studies can aggregate failures.
    """
    if not isinstance(expert, Trajectory):
        raise UsageError("expert must be a Trajectory")
    a_k = model.a_k_hat
    if np.max(np.linalg.eigvals(a_k).real) > 1e-10:
        return float("inf")
    try:
        step = expm(a_k * expert.dt)
    except Exception:
        return float("inf")
    states = np.empty_like(expert.states)
    states[:, 0] = expert.states[:, 0]
    for j in range(expert.sample_count - 1):
        states[:, j + 1] = step @ states[:, j]
    if not np.all(np.isfinite(states)):
        return float("inf")
    return float(np.mean((states - expert.states) ** 2))


@dataclass
class VerificationReport:
    """Certificate metrics for one recovered model."""

    omega_residual: float
    residual_bound: float
    gain_error_fro: float
    are_residual: float
    traj_mse: float
    min_eig_q: float
    min_eig_p: float
    min_eig_r: float
    epsilon: float
    derivative_match: dict = None
    closed_loop_stable: bool = True
    solver_status: str = ""
    solver_iterations: int = 0
    solve_seconds: float = 0.0
    rate_diagnostics: dict = None

    @property
    def certificate_passed(self):
        """Primal residual within its bound and all cone margins met."""
        return (
            self.omega_residual <= self.residual_bound
            and self.min_eig_q >= -1e-8
            and self.min_eig_p >= self.epsilon - 1e-8
            and self.min_eig_r >= self.epsilon - 1e-8
            and self.closed_loop_stable
        )

    def to_json(self, path=None):
        doc = {k: v for k, v in self.__dict__.items()}
        doc["certificate_passed"] = self.certificate_passed
        for key, value in doc.items():
            if isinstance(value, float) and not math.isfinite(value):
                doc[key] = str(value)
        text = json.dumps(doc, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def verify_model(model, problem, xi, expert, a_k_ref=None, trace=None,
                 solve_seconds=0.0):
    """Assemble the full verification report for a recovered model.

    ``a_k_ref`` (the reference closed-loop matrix, available whenever the
    expert data was generated in-house) enables the derivative-match
    check; without it that field stays None.
    """
    mse = trajectory_mse(model, expert)
    report = VerificationReport(
        omega_residual=problem.primal_residual(xi),
        residual_bound=1e-6 * (1.0 + float(np.linalg.norm(xi))),
        gain_error_fro=model.metrics["gain_error_fro"],
        are_residual=model.metrics["are_residual"],
        traj_mse=mse,
        min_eig_q=model.metrics["min_eig_q"],
        min_eig_p=model.metrics["min_eig_p"],
        min_eig_r=model.metrics["min_eig_r"],
        epsilon=problem.epsilon,
        closed_loop_stable=math.isfinite(mse),
        solve_seconds=solve_seconds,
    )
    if a_k_ref is not None:
        report.derivative_match = derivative_match_check(
            model, expert.states[:, 0], a_k_ref, problem.n
        )
    if trace is not None:
        report.solver_status = trace.status
        report.solver_iterations = trace.iterations
        report.rate_diagnostics = trace.rate_diagnostics()
    model.metrics["traj_mse"] = mse
    model.metrics["omega_residual"] = report.omega_residual
    return report
