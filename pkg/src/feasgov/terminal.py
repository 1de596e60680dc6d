"""Terminal ingredients: LQR gain and cost, and the tightened maximal
constraint-admissible set of the closed loop under the terminal law."""
from dataclasses import dataclass

import numpy as np

from ._lp import OPTIMAL, LinearProgram
from .errors import AssumptionError, NumericalError
from .numerics import relative_residual, solve_dare, solve_discrete_lyapunov, spectral_radius
from .polyhedra import Polyhedron, affine_preimage, contains, remove_redundant, strict_contains
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class TerminalIngredients:
    K: np.ndarray
    P: np.ndarray
    T: Polyhedron  # over (x, v)
    eps_T: float
    finitely_determined_at: int
    n_x: int

    @property
    def T_x(self):
        return self.T.A[:, : self.n_x]

    @property
    def T_v(self):
        return self.T.A[:, self.n_x:]

    @property
    def c(self):
        return self.T.b


@dataclass(frozen=True)
class ClosedLoop:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


@dataclass
class TerminalReport:
    invariant: bool
    admissible: bool
    lyapunov: bool
    lyapunov_residual: float

    @property
    def ok(self):
        return self.invariant and self.admissible and self.lyapunov


def closed_loop_matrices(model, basis, K):
    K = np.atleast_2d(np.asarray(K, dtype=float))
    Abar = model.A - model.B @ K
    if spectral_radius(Abar) >= 1.0:
        raise AssumptionError("not_schur", "A - BK is not Schur")
    ff = K @ basis.G_x + basis.G_u
    return ClosedLoop(A=Abar, B=model.B @ ff, C=model.C - model.D @ K, D=model.D @ ff)


def compute_O_infty_tilde(bars, Yset, eps_T, k_max=500, tol=None):
    """Tightened maximal constraint-admissible set and its determination index.

    Stacks the k-step output rows until every row of step k+1 is implied by
    the rows accumulated so far. Returns ``(T, k_star)``.
    """
    if not 0.0 < eps_T < 1.0:
        raise ValueError("eps_T must lie in (0, 1)")
    tol = TOL.redundancy if tol is None else tol
    Y, h = Yset.Y, Yset.h
    n_x, n_v = bars.B.shape
    inv = np.linalg.inv(np.eye(n_x) - bars.A)
    if np.linalg.cond(np.eye(n_x) - bars.A) > 1e12:
        import warnings

        warnings.warn("I - Abar is badly conditioned", RuntimeWarning)
    gain_ss = bars.D + bars.C @ inv @ bars.B

    def rows_at(k):
        Ak = np.linalg.matrix_power(bars.A, k)
        Hx = bars.C @ Ak
        Hv = bars.C @ inv @ (np.eye(n_x) - Ak) @ bars.B + bars.D
        return Y @ np.hstack([Hx, Hv])

    A_acc = [np.hstack([np.zeros((Y.shape[0], n_x)), Y @ gain_ss]), rows_at(0)]
    b_acc = [(1.0 - eps_T) * h, h]
    for k in range(k_max + 1):
        A_now = np.vstack(A_acc)
        b_now = np.concatenate(b_acc)
        lp = LinearProgram(A_now, b_now)
        A_next = rows_at(k + 1)
        new_rows = []
        for i, a in enumerate(A_next):
            status, value, _ = lp.maximize(a)
            if status != OPTIMAL or value > h[i] + tol:
                new_rows.append(i)
        if not new_rows:
            T = remove_redundant(Polyhedron(A_now, b_now))
            return T, k
        A_acc.append(A_next[new_rows])
        b_acc.append(h[new_rows])
    raise NumericalError("not_finitely_determined", f"not determined within k_max={k_max}")


def synthesize_terminal(model, basis, Yset, Q, R, eps_T, k_max=500):
    """LQR gain and cost plus the tightened admissible set as terminal set."""
    P, K = solve_dare(model.A, model.B, Q, R)
    bars = closed_loop_matrices(model, basis, K)
    T, k_star = compute_O_infty_tilde(bars, Yset, eps_T, k_max)
    return TerminalIngredients(K=K, P=P, T=T, eps_T=eps_T, finitely_determined_at=k_star, n_x=model.n_x)


def lyapunov_residual(model, ing, Q, R):
    Abar = model.A - model.B @ ing.K
    S = Q + ing.K.T @ R @ ing.K
    return relative_residual(Abar.T @ ing.P @ Abar - ing.P + S, ing.P)


def verify_terminal_assumptions(model, basis, ing, Yset, Q, R, tol=1e-9):
    """Check invariance, admissibility and the Lyapunov equation."""
    bars = closed_loop_matrices(model, basis, ing.K)
    n_x, n_v = model.n_x, basis.n_v
    step = np.block([[bars.A, bars.B], [np.zeros((n_v, n_x)), np.eye(n_v)]])
    invariant = contains(affine_preimage(step, ing.T), ing.T)
    admissible = contains(affine_preimage(np.hstack([bars.C, bars.D]), Yset.polyhedron), ing.T)
    res = lyapunov_residual(model, ing, Q, R)
    return TerminalReport(invariant=invariant, admissible=admissible, lyapunov=res <= tol, lyapunov_residual=res)


def lyapunov_terminal_cost(model, K, Q, R):
    """P for an arbitrary stabilizing K (not necessarily the LQR gain)."""
    Abar = model.A - model.B @ K
    return solve_discrete_lyapunov(Abar, Q + K.T @ R @ K)


def controllability_index(A, B, rtol=None):
    rtol = TOL.rank if rtol is None else rtol
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]
    blocks = [B]
    for nu in range(1, n + 1):
        ctrb = np.hstack(blocks)
        s = np.linalg.svd(ctrb, compute_uv=False)
        if s.size and np.sum(s > rtol * max(1.0, s[0])) == n:
            return nu
        blocks.append(A @ blocks[-1])
    raise AssumptionError("uncontrollable", "controllability matrix never reaches full rank")


def sigma_in_interior(T, Sigma, margin=1e-6):
    return strict_contains(T, Sigma, margin)
