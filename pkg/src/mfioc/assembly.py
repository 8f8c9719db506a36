"""Assembly of the vectorized convex feasibility program.

The decision vector stacks xi = [vec Z | vec R | vec Q | vec P | vec G]
(G omitted in the multi-trajectory variant). The equality constraints

    Z' + Z - K'RK + Q = 0
    Z' - K'RK - G     = 0
    G L1bar - P L2bar = 0

vectorize into a single linear system Omega xi = 0, whose dual machinery
uses H = U pinv(Omega' Omega) U' with U the selection map onto the
(vec Q, vec P, vec R) sub-vector.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalBreakdownError, UsageError
from .linalg import (
    commutation_matrix,
    kron,
    min_eig_sym,
    require_finite,
    sym,
    vectorize,
)

__all__ = [
    "DecisionLayout",
    "AssembledProblem",
    "build_layout",
    "build_omega",
    "assemble_multi",
    "build_dual",
    "dump_problem_csv",
]

SIGN_MODES = ("standard", "paper")


@dataclass(frozen=True)
class DecisionLayout:
    """Segment offsets of the stacked decision vector."""

    n: int
    m: int
    with_gain_product: bool = True

    @property
    def dim(self):
        base = 3 * self.n**2 + self.m**2
        return base + (self.n**2 if self.with_gain_product else 0)

    @property
    def segments(self):
        n2, m2 = self.n**2, self.m**2
        seg = {
            "Z": slice(0, n2),
            "R": slice(n2, n2 + m2),
            "Q": slice(n2 + m2, 2 * n2 + m2),
            "P": slice(2 * n2 + m2, 3 * n2 + m2),
        }
        if self.with_gain_product:
            seg["G"] = slice(3 * n2 + m2, 4 * n2 + m2)
        return seg

    def extract(self, xi, name):
        """Segment of ``xi`` unvectorized to its matrix shape."""
        xi = np.asarray(xi, dtype=float)
        if xi.size != self.dim:
            raise UsageError(f"decision vector has length {xi.size}, expected {self.dim}")
        size = self.n if name != "R" else self.m
        return xi[self.segments[name]].reshape((size, size), order="F")


def build_layout(n, m, with_gain_product=True):
    if n < 1 or m < 1:
        raise UsageError("require n >= 1 and m >= 1")
    return DecisionLayout(n=n, m=m, with_gain_product=with_gain_product)


@dataclass(frozen=True)
class AssembledProblem:
    """Constraint matrix, dual Hessian, and cached factorizations.

    ``pinv_gram`` caches pinv(Omega' Omega) so that every solver cycle and
    every primal recovery is decomposition-free. ``kstar`` and ``a_k_fit``
    travel with the problem for the feasibility completion in the primal
    recovery stage.
    """

    omega: np.ndarray
    layout: DecisionLayout
    u_select: np.ndarray
    w_offset: np.ndarray
    h_dual: np.ndarray
    blocks: dict
    epsilon: float
    sign: str
    pinv_gram: np.ndarray = field(repr=False)
    kstar: np.ndarray = None
    a_k_fit: np.ndarray = None

    @property
    def n(self):
        return self.layout.n

    @property
    def m(self):
        return self.layout.m

    def dual_block_slices(self):
        n2, m2 = self.n**2, self.m**2
        return {
            "Q": slice(0, n2),
            "P": slice(n2, 2 * n2),
            "R": slice(2 * n2, 2 * n2 + m2),
        }

    def primal_residual(self, xi):
        """||Omega xi||_2, the certificate residual."""
        return float(np.linalg.norm(self.omega @ np.asarray(xi, dtype=float)))


def build_omega(kstar, dm, layout):
    """Constraint matrix of the single-trajectory feasibility program.

    Row blocks, in order: the Riccati-in-Z relation (n^2 rows), the gain
    product relation defining G (n^2 rows), and the vectorized data
    relation G L1bar = P L2bar (n^2 * N rows).
    """
    kstar = require_finite(kstar, "kstar")
    n, m = layout.n, layout.m
    if kstar.shape != (m, n):
        raise UsageError(f"gain must be {m}x{n}, got {kstar.shape}")
    if not layout.with_gain_product:
        raise UsageError("single-trajectory assembly needs the G segment")
    lam1, lam2 = dm.lambda_bar_1, dm.lambda_bar_2
    if lam1.shape[0] != n or lam1.shape != lam2.shape:
        raise UsageError("data matrices are inconsistent with the layout")
    seg = layout.segments
    y = commutation_matrix(n)
    eye_n2 = np.eye(n * n)
    kk = kron(kstar.T, kstar.T)

    rows1 = np.zeros((n * n, layout.dim))
    rows1[:, seg["Z"]] = y + eye_n2
    rows1[:, seg["R"]] = -kk
    rows1[:, seg["Q"]] = eye_n2

    rows2 = np.zeros((n * n, layout.dim))
    rows2[:, seg["Z"]] = y
    rows2[:, seg["R"]] = -kk
    rows2[:, seg["G"]] = -eye_n2

    rows3 = np.zeros((n * lam1.shape[1], layout.dim))
    rows3[:, seg["P"]] = -kron(lam2.T, np.eye(n))
    rows3[:, seg["G"]] = kron(lam1.T, np.eye(n))

    return np.vstack([rows1, rows2, rows3])


def assemble_multi(kstar, a_k, layout):
    """Constraint matrix of the multi-trajectory variant (no G segment).

    Encodes Z' + Z - K'RK + Q = 0 and Z' - K'RK = P A_K with the known
    closed-loop matrix, acting on [vec Z | vec R | vec Q | vec P].
    """
    kstar = require_finite(kstar, "kstar")
    a_k = require_finite(a_k, "a_k")
    n, m = layout.n, layout.m
    if layout.with_gain_product:
        raise UsageError("multi-trajectory assembly uses the G-free layout")
    if kstar.shape != (m, n) or a_k.shape != (n, n):
        raise UsageError("gain or closed-loop matrix dimensions do not match")
    seg = layout.segments
    y = commutation_matrix(n)
    kk = kron(kstar.T, kstar.T)

    rows1 = np.zeros((n * n, layout.dim))
    rows1[:, seg["Z"]] = y + np.eye(n * n)
    rows1[:, seg["R"]] = -kk
    rows1[:, seg["Q"]] = np.eye(n * n)

    rows2 = np.zeros((n * n, layout.dim))
    rows2[:, seg["Z"]] = y
    rows2[:, seg["R"]] = -kk
    rows2[:, seg["P"]] = -kron(a_k.T, np.eye(n))

    return np.vstack([rows1, rows2])


def build_dual(omega, layout, epsilon=1e-6, sign="standard", rtol=1e-12,
               kstar=None, a_k_fit=None):
    """Dual Hessian H = U pinv(Omega' Omega) U' and cone offset vector.

    The pseudoinverse is computed once from the SVD of Omega (cutoff
    ``rtol`` relative on the eigenvalues of the normal matrix) and cached.
    The offset W = [0; vec(eps I_n); vec(eps I_m)] is stored with
    non-negative entries; the solver applies the sign convention.
    """
    if epsilon <= 0:
        raise UsageError("epsilon must be positive")
    if sign not in SIGN_MODES:
        raise UsageError(f"sign must be one of {SIGN_MODES}")
    omega = require_finite(omega, "omega")
    n, m = layout.n, layout.m
    d = layout.dim
    if omega.shape[1] != d:
        raise UsageError(f"omega has {omega.shape[1]} columns, layout expects {d}")

    _, svals, vt = np.linalg.svd(omega, full_matrices=True)
    full = np.zeros(d)
    full[: svals.size] = svals
    keep = full**2 > rtol * max(full.max() ** 2, 1e-300)
    inv_sq = np.zeros(d)
    inv_sq[keep] = 1.0 / full[keep] ** 2
    pinv_gram = (vt.T * inv_sq) @ vt

    seg = layout.segments
    n2, m2 = n * n, m * m
    u_select = np.zeros((2 * n2 + m2, d))
    u_select[0:n2, seg["Q"]] = np.eye(n2)
    u_select[n2:2 * n2, seg["P"]] = np.eye(n2)
    u_select[2 * n2:, seg["R"]] = np.eye(m2)

    h_dual = sym(u_select @ pinv_gram @ u_select.T)
    if min_eig_sym(h_dual) < -1e-8:
        raise NumericalBreakdownError("dual Hessian lost positive semidefiniteness")
    w_offset = np.concatenate(
        [np.zeros(n2), epsilon * vectorize(np.eye(n)), epsilon * vectorize(np.eye(m))]
    )
    b_q = slice(0, n2)
    b_p = slice(n2, 2 * n2)
    b_r = slice(2 * n2, 2 * n2 + m2)
    blocks = {
        "QQ": h_dual[b_q, b_q],
        "QP": h_dual[b_q, b_p],
        "QR": h_dual[b_q, b_r],
        "PP": h_dual[b_p, b_p],
        "PR": h_dual[b_p, b_r],
        "RR": h_dual[b_r, b_r],
    }
    return AssembledProblem(
        omega=omega,
        layout=layout,
        u_select=u_select,
        w_offset=w_offset,
        h_dual=h_dual,
        blocks=blocks,
        epsilon=float(epsilon),
        sign=sign,
        pinv_gram=pinv_gram,
        kstar=None if kstar is None else require_finite(kstar, "kstar"),
        a_k_fit=None if a_k_fit is None else require_finite(a_k_fit, "a_k_fit"),
    )


def dump_problem_csv(problem, directory):
    """Debug dump of Omega, H, and W to CSV files for external cross-checks."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savetxt(directory / "omega.csv", problem.omega, delimiter=",", fmt="%.17g")
    np.savetxt(directory / "h_dual.csv", problem.h_dual, delimiter=",", fmt="%.17g")
    np.savetxt(directory / "w_offset.csv", problem.w_offset, delimiter=",", fmt="%.17g")
