"""Constraint assembly and parameter estimation.

For dynamics x' = h(x) + sum_i theta_i Y_i(x) sampled along trajectories
gamma_j, each (trajectory j, center c_s) pair contributes one linear
constraint on theta:

    sum_i theta_i * integral of grad1 K(gamma_j(t), c_s) . Y_i(gamma_j(t)) dt
        = K(gamma_j(T), c_s) - K(gamma_j(0), c_s)
        - integral of grad1 K(gamma_j(t), c_s) . h(gamma_j(t)) dt

The time integrals are evaluated with the quadrature rules from the
quadrature module, so no derivative of the data is ever formed; this is what
makes the estimates robust to measurement noise. Solvers operate on the
stacked system: truncated-SVD least squares, ridge, and a two-stage sparse
path (coordinate-descent lasso, then thresholded refits). A baseline that
integrates the dynamics componentwise (n rows per trajectory instead of one
per center) is included for comparison; it coincides exactly with the main
assembly under the linear kernel and standard-basis centers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import BasisSet
from .errors import IterationLimitError
from .quadrature import as_rule, weights
from .trajectory import as_trajectory_set

CD_TOL = 1e-10
CD_MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class ConstraintSystem:
    """Stacked linear system A theta = b.

    Rows are blocked by trajectory: row_index(j, s) = j * n_centers + s.
    labels name the columns (basis function labels) for reporting/export.
    """

    A: np.ndarray
    b: np.ndarray
    n_trajectories: int
    n_centers: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise ValueError(f"inconsistent system shapes {A.shape} and {b.shape}")
        if A.shape[0] != self.n_trajectories * self.n_centers:
            raise ValueError(
                f"{A.shape[0]} rows do not match {self.n_trajectories} trajectories "
                f"x {self.n_centers} centers"
            )
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("constraint system entries must be finite")
        if self.labels is not None and len(self.labels) != A.shape[1]:
            raise ValueError("one label per column required")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_parameters(self) -> int:
        return self.A.shape[1]

    def row_index(self, j: int, s: int) -> int:
        if not (0 <= j < self.n_trajectories and 0 <= s < self.n_centers):
            raise IndexError(f"row ({j}, {s}) outside {self.n_trajectories} x {self.n_centers}")
        return j * self.n_centers + s

    def save_csv(self, path) -> None:
        """Write A and b with row labels traj{j}:center{s} and column labels."""
        labels = self.labels or tuple(f"p{i}" for i in range(self.n_parameters))
        with open(path, "w", newline="\n") as fh:
            fh.write("row," + ",".join(labels) + ",b\n")
            for j in range(self.n_trajectories):
                for s in range(self.n_centers):
                    r = self.row_index(j, s)
                    cells = ",".join(f"{v:.17g}" for v in self.A[r])
                    fh.write(f"traj{j}:center{s},{cells},{self.b[r]:.17g}\n")


@dataclass(frozen=True)
class EstimationResult:
    """Solver output: parameters plus the numbers needed to judge them.

    support is the active index set for sparse solves (None otherwise);
    degenerate marks rank-zero systems solved as theta = 0.
    """

    theta_hat: np.ndarray
    residual_norm: float
    condition_number: float
    effective_rank: int
    support: np.ndarray | None = None
    degenerate: bool = False

    def __post_init__(self):
        th = np.asarray(self.theta_hat, dtype=float)
        th.setflags(write=False)
        object.__setattr__(self, "theta_hat", th)

    @property
    def n_parameters(self) -> int:
        return self.theta_hat.shape[0]

    @property
    def rank_deficient(self) -> bool:
        return self.effective_rank < self.n_parameters


class Diagnostics(NamedTuple):
    condition_number: float
    column_norms: np.ndarray
    rank: int


def _block_for_trajectory(traj, centers, basis, kernel, rules):
    """Per-rule (A_block, b_block) for one trajectory, sharing kernel passes."""
    X = traj.samples
    Vs = basis.values(X)  # (M, P, n)
    kv = basis.known_values(X)
    if kv is not None:
        Vs = np.concatenate([Vs, kv[None]], axis=0)
    ws = [weights(rule, traj.n_intervals, traj.step) for rule in rules]
    blocks = kernel.assemble_block_multi(X, centers, Vs, ws)
    phi_end = kernel.matrix(traj.final[None], centers)[0]
    phi_start = kernel.matrix(traj.initial[None], centers)[0]
    out = []
    for blk in blocks:
        if kv is not None:
            A_blk, known_col = blk[:, :-1], blk[:, -1]
        else:
            A_blk, known_col = blk, 0.0
        out.append((A_blk, phi_end - phi_start - known_col))
    return out


def assemble(trajs, centers, basis: BasisSet, kernel, rule) -> ConstraintSystem:
    """Build the constraint system over all (trajectory, center) pairs."""
    return assemble_multi(trajs, centers, basis, kernel, [rule])[0]


def assemble_multi(trajs, centers, basis: BasisSet, kernel, rules) -> list[ConstraintSystem]:
    """assemble for several quadrature rules in one pass over the data.

    The kernel matrices dominate the assembly cost and depend only on the
    samples, so rule ladders reuse them.
    """
    trajs = as_trajectory_set(trajs)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if trajs.dim != basis.dim:
        raise ValueError(f"trajectory dimension {trajs.dim} != basis dimension {basis.dim}")
    if centers.shape[1] != trajs.dim:
        raise ValueError(f"centers have dimension {centers.shape[1]}, expected {trajs.dim}")
    rules = [as_rule(r) for r in rules]
    N, S, M = len(trajs), centers.shape[0], len(basis)
    As = [np.empty((N * S, M)) for _ in rules]
    bs = [np.empty(N * S) for _ in rules]
    for j, traj in enumerate(trajs):
        per_rule = _block_for_trajectory(traj, centers, basis, kernel, rules)
        for k, (A_blk, b_blk) in enumerate(per_rule):
            As[k][j * S : (j + 1) * S] = A_blk
            bs[k][j * S : (j + 1) * S] = b_blk
    return [
        ConstraintSystem(A, b, n_trajectories=N, n_centers=S, labels=tuple(basis.labels))
        for A, b in zip(As, bs)
    ]


def _svd_solve(A: np.ndarray, b: np.ndarray, rcond: float):
    """Truncated-SVD least squares: (theta, condition, rank, degenerate)."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros(A.shape[1]), np.inf, 0, True
    rank = int(np.count_nonzero(s > rcond * s[0]))
    if rank == 0:
        return np.zeros(A.shape[1]), np.inf, 0, True
    coef = (U[:, :rank].T @ b) / s[:rank]
    theta = Vt[:rank].T @ coef
    return theta, float(s[0] / s[rank - 1]), rank, False


def _result(A, b, theta, condition, rank, support=None, degenerate=False) -> EstimationResult:
    residual = float(np.linalg.norm(A @ theta - b))
    return EstimationResult(
        theta_hat=theta,
        residual_norm=residual,
        condition_number=condition,
        effective_rank=rank,
        support=support,
        degenerate=degenerate,
    )


def solve_pinv(sys: ConstraintSystem, rcond: float = 1e-12) -> EstimationResult:
    """Minimum-norm least squares via SVD truncation at rcond * sigma_max."""
    if rcond < 0:
        raise ValueError(f"rcond must be >= 0, got {rcond}")
    theta, cond, rank, degenerate = _svd_solve(sys.A, sys.b, rcond)
    return _result(sys.A, sys.b, theta, cond, rank, degenerate=degenerate)


def solve_ridge(sys: ConstraintSystem, lam: float, rcond: float = 1e-12) -> EstimationResult:
    """Minimizer of ||A theta - b||^2 + lam ||theta||^2 through the SVD."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    U, s, Vt = np.linalg.svd(sys.A, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return _result(sys.A, sys.b, np.zeros(sys.n_parameters), np.inf, 0, degenerate=True)
    filt = np.divide(s, s * s + lam, out=np.zeros_like(s), where=(s * s + lam) > 0)
    theta = Vt.T @ (filt * (U.T @ sys.b))
    rank = int(np.count_nonzero(s > 1e-12 * s[0]))
    cond = float(s[0] / s[rank - 1]) if rank else np.inf
    return _result(sys.A, sys.b, theta, cond, rank)


def _lasso_cd(A_std: np.ndarray, b: np.ndarray, lam: float, col_norms: np.ndarray):
    """Cyclic coordinate descent for 1/2 ||A w - b||^2 + lam ||w||_1.

    Columns of A_std have unit l2 norm, so each coordinate update is a plain
    soft-threshold; the residual is updated in place rather than recomputed.
    """
    M = A_std.shape[1]
    w = np.zeros(M)
    r = b.copy()
    for _ in range(CD_MAX_SWEEPS):
        delta = 0.0
        for i in range(M):
            old = w[i]
            rho = A_std[:, i] @ r + old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0)
            if new != old:
                r += A_std[:, i] * (old - new)
                w[i] = new
                delta = max(delta, abs(new - old))
        if delta < CD_TOL:
            return w
    raise IterationLimitError(
        f"coordinate descent did not converge in {CD_MAX_SWEEPS} sweeps",
        last_iterate=w / col_norms,
    )


def solve_sparse(
    sys: ConstraintSystem,
    lam: float,
    threshold: float,
    max_refits: int = 10,
    rcond: float = 1e-12,
) -> EstimationResult:
    """Two-stage sparse estimation.

    Stage 1 runs lasso coordinate descent on the column-standardized system;
    coefficients are mapped back to parameter units before any thresholding
    so `threshold` is comparable to theta itself. Stage 2 drops entries below
    threshold, refits unpenalized least squares on the surviving support, and
    repeats until the support is stable (or max_refits is hit).
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    if max_refits < 1:
        raise ValueError(f"max_refits must be >= 1, got {max_refits}")
    col_norms = np.linalg.norm(sys.A, axis=0)
    if (col_norms == 0).any():
        dead = np.nonzero(col_norms == 0)[0]
        raise ValueError(f"columns {dead.tolist()} of A are identically zero")
    A_std = sys.A / col_norms
    w = _lasso_cd(A_std, sys.b, lam, col_norms)
    theta = w / col_norms

    support = np.nonzero(np.abs(theta) >= threshold)[0]
    theta_full = np.zeros(sys.n_parameters)
    cond, rank = np.inf, 0
    for _ in range(max_refits):
        if support.size == 0:
            return _result(sys.A, sys.b, theta_full, np.inf, 0, support=support, degenerate=True)
        sub, cond, rank, degenerate = _svd_solve(sys.A[:, support], sys.b, rcond)
        theta_full = np.zeros(sys.n_parameters)
        theta_full[support] = sub
        new_support = support[np.abs(sub) >= threshold]
        if new_support.size == support.size:
            break
        support = new_support
    return _result(sys.A, sys.b, theta_full, cond, rank, support=support)


def _basis_time_integrals(Vs: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Quadrature of each basis function along the trajectory: (M, n)."""
    return np.tensordot(Vs, w, axes=(1, 0))


def ils_assemble(trajs, basis: BasisSet, rule) -> ConstraintSystem:
    """Componentwise integral constraints: n rows per trajectory.

    Row block j states [integral Y_1 dt ... integral Y_M dt] theta =
    gamma_j(T) - gamma_j(0) (minus the known part's integral when present).
    """
    trajs = as_trajectory_set(trajs)
    if trajs.dim != basis.dim:
        raise ValueError(f"trajectory dimension {trajs.dim} != basis dimension {basis.dim}")
    rule = as_rule(rule)
    N, n, M = len(trajs), trajs.dim, len(basis)
    A = np.empty((N * n, M))
    b = np.empty(N * n)
    for j, traj in enumerate(trajs):
        w = weights(rule, traj.n_intervals, traj.step)
        ints = _basis_time_integrals(basis.values(traj.samples), w)  # (M, n)
        A[j * n : (j + 1) * n] = ints.T
        rhs = traj.final - traj.initial
        kv = basis.known_values(traj.samples)
        if kv is not None:
            rhs = rhs - kv.T @ w
        b[j * n : (j + 1) * n] = rhs
    return ConstraintSystem(A, b, n_trajectories=N, n_centers=n, labels=tuple(basis.labels))


def ils_solve(trajs, basis: BasisSet, rule, rcond: float = 1e-12) -> EstimationResult:
    """Least-squares solve of the componentwise integral system."""
    sys = ils_assemble(trajs, basis, rule)
    return solve_pinv(sys, rcond=rcond)


def diagnostics(sys: ConstraintSystem, rcond: float = 1e-12) -> Diagnostics:
    """Condition number, column norms, and numerical rank of A."""
    s = np.linalg.svd(sys.A, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return Diagnostics(np.inf, np.linalg.norm(sys.A, axis=0), 0)
    rank = int(np.count_nonzero(s > rcond * s[0]))
    cond = float(s[0] / s[rank - 1]) if rank else np.inf
    return Diagnostics(cond, np.linalg.norm(sys.A, axis=0), rank)
