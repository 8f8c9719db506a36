"""Expert-trajectory processing.

Turns a sampled closed-loop trajectory into solver inputs: the identified
feedback gain, derivative samples up to order n, and the stacked data
matrices [L0 ... L_{n-1}] and [L1 ... L_n] that encode the chain of
derivative relations xdot^(i+1) = A_K xdot^(i).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientExcitationError, UsageError
from .linalg import require_finite

__all__ = [
    "Trajectory",
    "DataMatrices",
    "save_trajectory_csv",
    "load_trajectory_csv",
    "identify_gain",
    "gain_fit_residual",
    "estimate_derivatives",
    "build_data_matrices",
    "multi_traj_closed_loop",
]

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    """State/input samples on a strictly uniform time grid."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        times = require_finite(self.times, "times").ravel()
        states = require_finite(self.states, "states")
        inputs = require_finite(self.inputs, "inputs")
        if times.size < 2:
            raise UsageError("trajectory needs at least two samples")
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise UsageError("times must be strictly increasing")
        if np.max(np.abs(steps - steps[0])) > 1e-12 * max(1.0, abs(steps[0])):
            raise UsageError("time grid must be uniform")
        if states.ndim != 2 or inputs.ndim != 2:
            raise UsageError("states and inputs must be 2-D (signal x time)")
        if states.shape[1] != times.size or inputs.shape[1] != times.size:
            raise UsageError("states/inputs column counts must match times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def n(self):
        return self.states.shape[0]

    @property
    def m(self):
        return self.inputs.shape[0]

    @property
    def sample_count(self):
        return self.times.size


@dataclass(frozen=True)
class DataMatrices:
    """Stacked derivative sample blocks L0..Ln and their concatenations.

    ``lambda_bar_1 = [L0 ... L_{n-1}]`` and ``lambda_bar_2 = [L1 ... L_n]``;
    the first column of L0 is always the initial state. ``a_k_fit`` is the
    least-squares closed-loop fit L2bar @ pinv(L1bar) kept as a data-quality
    diagnostic, with ``fit_residual`` its relative residual.
    """

    lambda_blocks: list
    lambda_bar_1: np.ndarray
    lambda_bar_2: np.ndarray
    sample_indices: np.ndarray
    a_k_fit: np.ndarray = field(repr=False)
    fit_residual: float = 0.0


def save_trajectory_csv(traj, path):
    """Write ``t, x1..xn, u1..um`` rows at full double precision."""
    header = ["t"]
    header += [f"x{i+1}" for i in range(traj.n)]
    header += [f"u{i+1}" for i in range(traj.m)]
    table = np.vstack([traj.times, traj.states, traj.inputs]).T
    np.savetxt(path, table, delimiter=",", fmt="%.17g",
               header=",".join(header), comments="")


def load_trajectory_csv(path):
    """Round-trip reader for :func:`save_trajectory_csv` files."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "t":
        raise UsageError(f"{path}: expected header starting with 't'")
    n = sum(1 for name in header if name.startswith("x"))
    m = sum(1 for name in header if name.startswith("u"))
    if n == 0 or m == 0 or len(header) != 1 + n + m:
        raise UsageError(f"{path}: header must be t, x1..xn, u1..um")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != 1 + n + m:
        raise UsageError(f"{path}: row width does not match header")
    return Trajectory(times=table[:, 0], states=table[:, 1:1 + n].T,
                      inputs=table[:, 1 + n:].T)


def identify_gain(traj):
    """Least-squares feedback gain from ``u = -K x`` samples.

    Solves min_K sum_j ||u(t_j) + K x(t_j)||^2 through the normal
    equations K = -(U X')(X X')^-1.

    Raises
    ------
    InsufficientExcitationError
        If the state samples do not have full rank n (persistent
        excitation proxy, relative singular-value threshold 1e-10).
    """
    x, u = traj.states, traj.inputs
    gram = x @ x.T
    svals = np.linalg.svd(gram, compute_uv=False)
    if svals[0] <= 0 or np.sum(svals > _RANK_RTOL * svals[0]) < traj.n:
        raise InsufficientExcitationError(
            "state samples are rank deficient; cannot identify the gain"
        )
    return -np.linalg.solve(gram, x @ u.T).T


def gain_fit_residual(traj, k):
    """Frobenius residual ||U + K X||_F of the identified feedback law."""
    return float(np.linalg.norm(traj.inputs + k @ traj.states, "fro"))


def _stencil_weights(order, offsets, dt):
    """Finite-difference weights on integer ``offsets`` for d^order/dt^order."""
    offsets = np.asarray(offsets, dtype=float)
    k = offsets.size
    vmat = np.vander(offsets, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vmat, rhs) / dt ** order


def estimate_derivatives(traj, max_order, method="fd", accuracy=6, a_k=None):
    """Derivative samples of orders 0..max_order, one n x T array per order.

    method "fd" uses central stencils of the requested accuracy order on
    interior columns and one-sided stencils of the same width at both
    edges, so every column (in particular t = 0) carries usable values.
    method "oracle" computes (A_K)^i @ x(t_j) from a known closed-loop
    matrix and is intended for testing against discretization error.
    """
    if max_order < 1:
        raise UsageError("max_order must be >= 1")
    if max_order > traj.n:
        raise UsageError(
            f"derivative order {max_order} exceeds the state dimension {traj.n}"
        )
    if method == "oracle":
        if a_k is None:
            raise UsageError("oracle derivative mode requires the closed-loop matrix")
        a_k = require_finite(a_k, "a_k")
        out = [traj.states.copy()]
        for _ in range(max_order):
            out.append(a_k @ out[-1])
        return out
    if method != "fd":
        raise UsageError(f"unknown derivative method {method!r}")
    if accuracy < 2 or accuracy % 2:
        raise UsageError("fd accuracy must be an even integer >= 2")
    half = (max_order + accuracy - 1) // 2
    npts = 2 * half + 1
    if traj.sample_count < npts:
        raise UsageError(
            f"trajectory too short for order-{max_order} differences "
            f"(need >= {npts} samples, have {traj.sample_count})"
        )
    x, dt, total = traj.states, traj.dt, traj.sample_count
    out = [x.copy()]
    for order in range(1, max_order + 1):
        half = (order + accuracy - 1) // 2
        npts = 2 * half + 1
        d = np.empty_like(x)
        w = _stencil_weights(order, np.arange(-half, half + 1), dt)
        cols = np.lib.stride_tricks.sliding_window_view(x, npts, axis=1)
        d[:, half:total - half] = cols @ w
        for j in range(half):
            w_left = _stencil_weights(order, np.arange(npts) - j, dt)
            d[:, j] = x[:, :npts] @ w_left
            w_right = _stencil_weights(order, np.arange(-(npts - 1), 1) + j, dt)
            d[:, total - 1 - j] = x[:, total - npts:] @ w_right
        out.append(d)
    return out


def build_data_matrices(traj, derivs, n_samples, n):
    """Select sample columns and stack the derivative data matrices.

    The column at t = 0 always comes first (the trajectory-matching
    argument needs the initial state in L0); the remaining columns are
    spread uniformly over the grid. Duplicate selections are dropped with
    a warning.
    """
    if n_samples < 1:
        raise UsageError("n_samples must be >= 1")
    if len(derivs) < n + 1:
        raise UsageError(f"need derivative orders 0..{n}, got {len(derivs) - 1}")
    total = traj.sample_count
    if n_samples == 1:
        idx = np.array([0])
    else:
        idx = np.r_[0, np.linspace(1, total - 1, n_samples - 1).round().astype(int)]
    unique_idx = np.unique(idx)
    ordered = np.r_[0, unique_idx[unique_idx != 0]]
    if ordered.size < idx.size:
        warnings.warn(
            f"duplicate sample columns removed; using {ordered.size} of "
            f"{n_samples} requested",
            stacklevel=2,
        )
    blocks = []
    for order in range(n + 1):
        block = np.asarray(derivs[order], dtype=float)[:, ordered]
        if not np.all(np.isfinite(block)):
            raise UsageError(f"derivative order {order} has invalid selected columns")
        blocks.append(block)
    lam1 = np.hstack(blocks[:n])
    lam2 = np.hstack(blocks[1:])
    svals = np.linalg.svd(lam1, compute_uv=False)
    if svals[0] <= 0 or np.sum(svals > _RANK_RTOL * svals[0]) < n:
        raise InsufficientExcitationError("stacked data matrix is rank deficient")
    a_k_fit = lam2 @ np.linalg.pinv(lam1)
    fit_residual = float(
        np.linalg.norm(a_k_fit @ lam1 - lam2, "fro") / max(np.linalg.norm(lam2, "fro"), 1e-300)
    )
    return DataMatrices(
        lambda_blocks=blocks,
        lambda_bar_1=lam1,
        lambda_bar_2=lam2,
        sample_indices=ordered,
        a_k_fit=a_k_fit,
        fit_residual=fit_residual,
    )


def multi_traj_closed_loop(trajs, method="fd", accuracy=6, a_k=None, sample_index=None):
    """Closed-loop matrix from several trajectories at a common instant.

    Stacks X = [x_1(t_j) ... x_l(t_j)] and the first-derivative estimates
    Xdot at the same grid index, and returns Xdot @ pinv(X). Requires more
    trajectories than states and a full-row-rank stacked state matrix.
    """
    if not trajs:
        raise UsageError("need at least one trajectory")
    n = trajs[0].n
    if len(trajs) <= n:
        raise InsufficientExcitationError(
            f"need more than n={n} trajectories, got {len(trajs)}"
        )
    if sample_index is None:
        sample_index = 1 if trajs[0].sample_count > 2 else 0
    cols, dcols = [], []
    for traj in trajs:
        if traj.n != n:
            raise UsageError("trajectories have inconsistent state dimension")
        derivs = estimate_derivatives(traj, 1, method=method, accuracy=accuracy, a_k=a_k)
        cols.append(traj.states[:, sample_index])
        dcols.append(derivs[1][:, sample_index])
    x = np.column_stack(cols)
    xdot = np.column_stack(dcols)
    svals = np.linalg.svd(x, compute_uv=False)
    if svals[0] <= 0 or np.sum(svals > _RANK_RTOL * svals[0]) < n:
        raise InsufficientExcitationError("stacked initial states are rank deficient")
    return xdot @ np.linalg.pinv(x)
