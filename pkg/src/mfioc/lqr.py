"""Forward LQR machinery.

Solves the continuous-time algebraic Riccati equation

    A'P + P A - P B R^-1 B' P + Q = 0

for the stabilizing P > 0, computes the optimal gain K = R^-1 B' P,
simulates closed-loop expert trajectories on a uniform grid by exact
matrix exponential, and generates random stabilizable benchmark systems.
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data import Trajectory
from .errors import (
    GenerationFailureError,
    InfeasibleModelError,
    NumericalBreakdownError,
    UsageError,
)
from .linalg import expm, min_eig_sym, require_finite, sym

__all__ = [
    "LtiSystem",
    "CostWeights",
    "LqrSolution",
    "is_stabilizable",
    "solve_care",
    "simulate_closed_loop",
    "random_system",
    "system_to_json",
    "system_from_json",
]

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class LtiSystem:
    """State dynamics ``xdot = A x + B u``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = require_finite(self.a, "A")
        b = require_finite(self.b, "B")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise UsageError("A must be square")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise UsageError("B must be n x m with n matching A")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.b.shape[1]


@dataclass(frozen=True)
class CostWeights:
    """Quadratic cost ``integral of x'Qx + u'Ru``; Q >= 0, R > 0."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        q = require_finite(self.q, "Q")
        r = require_finite(self.r, "R")
        if np.linalg.norm(q - q.T) > 1e-10 * (1 + np.linalg.norm(q)):
            raise UsageError("Q must be symmetric")
        if np.linalg.norm(r - r.T) > 1e-10 * (1 + np.linalg.norm(r)):
            raise UsageError("R must be symmetric")
        if min_eig_sym(q) < -1e-10:
            raise InfeasibleModelError("Q must be positive semidefinite")
        if min_eig_sym(r) <= 0:
            raise InfeasibleModelError("R must be positive definite")
        object.__setattr__(self, "q", sym(q))
        object.__setattr__(self, "r", sym(r))


@dataclass(frozen=True)
class LqrSolution:
    """Stabilizing Riccati solution P and optimal gain K."""

    p: np.ndarray
    k: np.ndarray


def is_stabilizable(system):
    """Hautus test: rank [A - mu I, B] = n for every eigenvalue with Re >= 0."""
    a, b, n = system.a, system.b, system.n
    for mu in np.linalg.eigvals(a):
        if mu.real < 0:
            continue
        pencil = np.hstack([a - mu * np.eye(n), b.astype(complex)])
        s = np.linalg.svd(pencil, compute_uv=False)
        if np.sum(s > _RANK_RTOL * s[0]) < n:
            return False
    return True


def _newton_refine(system, cost, p, sweeps=2):
    """Newton-Kleinman sweeps: closed-loop Lyapunov solves around p."""
    a, b = system.a, system.b
    q, r = cost.q, cost.r
    for _ in range(sweeps):
        k = np.linalg.solve(r, b.T @ p)
        a_k = a - b @ k
        rhs = -(q + k.T @ r @ k)
        p = sym(scipy.linalg.solve_continuous_lyapunov(a_k.T, rhs))
    return p


def care_residual(system, cost, p):
    """Frobenius norm of A'P + PA - PBR^-1B'P + Q."""
    a, b = system.a, system.b
    res = a.T @ p + p @ a - p @ b @ np.linalg.solve(cost.r, b.T @ p) + cost.q
    return float(np.linalg.norm(res, "fro"))


def solve_care(system, cost):
    """Stabilizing CARE solution via the Hamiltonian stable subspace.

    Builds H = [[A, -B R^-1 B'], [-Q, -A']], extracts the stable invariant
    subspace with an ordered real Schur decomposition, forms P = X2 X1^-1,
    and polishes with Newton-Kleinman sweeps.

    Returns
    -------
    LqrSolution
        P symmetric positive definite, K = R^-1 B' P, with the closed loop
        A - BK Hurwitz and CARE residual <= 1e-8 * (1 + ||P||_F).

    Raises
    ------
    InfeasibleModelError
        If (A, B) is not stabilizable (R definiteness is enforced by
        :class:`CostWeights`).
    NumericalBreakdownError
        If the Schur spectral split or the final solution is invalid.
    """
    if not is_stabilizable(system):
        raise InfeasibleModelError("(A, B) is not stabilizable")
    a, b = system.a, system.b
    q, r = cost.q, cost.r
    n = system.n
    ham = np.block([[a, -b @ np.linalg.solve(r, b.T)], [-q, -a.T]])
    try:
        _, u, k_stable = scipy.linalg.schur(ham, sort=lambda x: x.real < 0)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalBreakdownError(f"Schur decomposition failed: {exc}") from exc
    if k_stable != n:
        raise NumericalBreakdownError(
            f"Hamiltonian spectral split found {k_stable} stable directions, expected {n}"
        )
    x1, x2 = u[:n, :n], u[n:, :n]
    try:
        p = sym(np.linalg.solve(x1.T, x2.T).T)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdownError(f"stable subspace basis is singular: {exc}") from exc
    p = _newton_refine(system, cost, p)
    k = np.linalg.solve(r, b.T @ p)
    if min_eig_sym(p) <= 0:
        raise NumericalBreakdownError("CARE solution is not positive definite")
    if np.max(np.linalg.eigvals(a - b @ k).real) >= 0:
        raise NumericalBreakdownError("recovered gain does not stabilize the plant")
    res = care_residual(system, cost, p)
    if res > 1e-8 * (1 + np.linalg.norm(p, "fro")):
        raise NumericalBreakdownError(f"CARE residual too large: {res:.3e}")
    return LqrSolution(p=p, k=k)


def simulate_closed_loop(system, k, x0, horizon, dt):
    """Closed-loop trajectory on the uniform grid t_j = j*dt, j = 0..floor(T/dt).

    States propagate by the exact one-step matrix exponential of A - BK,
    so x(t_j) = expm((A - BK) t_j) x0 up to rounding; inputs are u = -K x.
    """
    if dt <= 0 or horizon < dt:
        raise UsageError("require dt > 0 and horizon >= dt")
    k = require_finite(k, "K")
    x0 = require_finite(x0, "x0").ravel()
    if k.shape != (system.m, system.n) or x0.size != system.n:
        raise UsageError("gain or initial state dimensions do not match the system")
    steps = int(np.floor(horizon / dt + 1e-12))
    a_k = system.a - system.b @ k
    e_dt = expm(a_k * dt)
    states = np.empty((system.n, steps + 1))
    states[:, 0] = x0
    for j in range(steps):
        states[:, j + 1] = e_dt @ states[:, j]
    times = np.arange(steps + 1) * dt
    return Trajectory(times=times, states=states, inputs=-k @ states)


def random_system(n, m, seed, max_attempts=50):
    """Deterministic random benchmark instance.

    A is a symmetrized Gaussian sample shifted to be comfortably Hurwitz
    (largest eigenvalue at -0.5), B dense Gaussian, Q = M'M + 1e-3 I,
    R = N'N + I, and x0 uniform on the unit sphere. Resamples until the
    Hautus test and the CARE solve both succeed.
    """
    if n < 1 or m < 1:
        raise UsageError("require n >= 1 and m >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        raw = rng.standard_normal((n, n))
        a = sym(raw)
        a -= (np.linalg.eigvalsh(a).max() + 0.5) * np.eye(n)
        b = rng.standard_normal((n, m))
        mq = rng.standard_normal((n, n))
        mr = rng.standard_normal((m, m))
        x0 = rng.standard_normal(n)
        x0 /= np.linalg.norm(x0)
        try:
            system = LtiSystem(a=a, b=b)
            cost = CostWeights(q=mq.T @ mq + 1e-3 * np.eye(n), r=mr.T @ mr + np.eye(m))
            if not is_stabilizable(system):
                continue
            solve_care(system, cost)
        except (InfeasibleModelError, NumericalBreakdownError):
            continue
        return system, cost, x0
    raise GenerationFailureError(f"no valid system after {max_attempts} attempts")


def system_to_json(system, cost, x0):
    """Serialize a system/cost tuple to a JSON string (row-major arrays)."""
    doc = {
        "n": system.n,
        "m": system.m,
        "A": system.a.tolist(),
        "B": system.b.tolist(),
        "Q": cost.q.tolist(),
        "R": cost.r.tolist(),
        "x0": np.asarray(x0, dtype=float).ravel().tolist(),
    }
    return json.dumps(doc, indent=2)


def system_from_json(text):
    """Inverse of :func:`system_to_json`; validates shapes against n, m."""
    try:
        doc = json.loads(text)
        n, m = int(doc["n"]), int(doc["m"])
        a = np.asarray(doc["A"], dtype=float)
        b = np.asarray(doc["B"], dtype=float)
        q = np.asarray(doc["Q"], dtype=float)
        r = np.asarray(doc["R"], dtype=float)
        x0 = np.asarray(doc["x0"], dtype=float)
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed system JSON: {exc}") from exc
    if a.shape != (n, n) or b.shape != (n, m) or q.shape != (n, n) or r.shape != (m, m):
        raise UsageError("system JSON dimensions are inconsistent")
    if x0.shape != (n,):
        raise UsageError("x0 length does not match n")
    return LtiSystem(a=a, b=b), CostWeights(q=q, r=r), x0
