"""Condensed linear MPC, its feedback law, and the feasible set Gamma_N.

The parameter of every QP here is ``theta = (x, v)``. Gamma_N is built
either by projecting the condensed constraint polyhedron in one go (block
method) or as the N-step backward reachable set of the terminal set
(recursive method).
"""
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionError, InfeasibleError
from .polyhedra import Polyhedron, affine_preimage, intersect, project_fm
from .qp import QpProblem, feasibility_phase1, solve_qp
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class CondensedMpc:
    N: int
    H: np.ndarray
    W: np.ndarray  # [W_x W_v]
    M: np.ndarray
    L: np.ndarray
    b: np.ndarray
    Ahat: np.ndarray
    Bhat: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    model: object
    basis: object
    terminal: Polyhedron

    @property
    def n_theta(self):
        return self.L.shape[1]

    def qp(self, x, v):
        theta = np.concatenate([np.atleast_1d(x), np.atleast_1d(v)])
        return QpProblem(self.H, self.W @ theta, self.M, self.b - self.L @ theta)

    def constraint_polyhedron(self):
        """{(mu, theta) : M mu + L theta <= b}."""
        return Polyhedron(np.hstack([self.M, self.L]), self.b)


def prediction_matrices(A, B, N):
    nx, nu = B.shape
    Ahat = np.vstack([np.linalg.matrix_power(A, i) for i in range(N + 1)])
    Bhat = np.zeros(((N + 1) * nx, N * nu))
    powers = [np.eye(nx)]
    for _ in range(N):
        powers.append(A @ powers[-1])
    for i in range(1, N + 1):
        for j in range(i):
            Bhat[i * nx:(i + 1) * nx, j * nu:(j + 1) * nu] = powers[i - 1 - j] @ B
    return Ahat, Bhat


def constraint_matrices(model, Yset, T, N, Ahat=None, Bhat=None):
    """``(M, L, b)`` of the condensed constraints (path rows, then terminal)."""
    nx, nu = model.n_x, model.n_u
    if Ahat is None:
        Ahat, Bhat = prediction_matrices(model.A, model.B, N)
    Tx, Tv = T.A[:, :nx], T.A[:, nx:]
    Y, h = Yset.Y, Yset.h
    q, t = Y.shape[0], T.n_rows
    Chat = np.zeros((N * q + t, (N + 1) * nx))
    Dhat = np.zeros((N * q + t, N * nu))
    YC, YD = Y @ model.C, Y @ model.D
    for i in range(N):
        Chat[i * q:(i + 1) * q, i * nx:(i + 1) * nx] = YC
        Dhat[i * q:(i + 1) * q, i * nu:(i + 1) * nu] = YD
    Chat[N * q:, N * nx:] = Tx
    That_v = np.vstack([np.zeros((N * q, Tv.shape[1])), Tv])
    M = Chat @ Bhat + Dhat
    L = np.hstack([Chat @ Ahat, That_v])
    b = np.concatenate([np.tile(h, N), T.b])
    return M, L, b


def _check_weights(model, Q, R):
    if not np.allclose(R, R.T) or np.min(np.linalg.eigvalsh(R)) <= 0:
        raise AssumptionError("invalid_weights", "R must be symmetric positive definite")
    if not np.allclose(Q, Q.T) or np.min(np.linalg.eigvalsh(Q)) < -1e-12:
        raise AssumptionError("invalid_weights", "Q must be symmetric positive semidefinite")
    w, V = np.linalg.eigh(0.5 * (Q + Q.T))
    Qh = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    n = model.n_x
    obs = np.vstack([Qh @ np.linalg.matrix_power(model.A, k) for k in range(n)])
    s = np.linalg.svd(obs, compute_uv=False)
    if np.sum(s > TOL.rank * max(1.0, s[0])) < n:
        raise AssumptionError("not_observable", "(A, Q) is not observable")


def condense(model, basis, ing, Yset, N, Q, R):
    if N < 1:
        raise ValueError("horizon N must be >= 1")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    _check_weights(model, Q, R)
    nx = model.n_x
    P = ing.P
    Ahat, Bhat = prediction_matrices(model.A, model.B, N)
    Hhat = np.zeros(((N + 1) * nx, (N + 1) * nx))
    for i in range(N):
        Hhat[i * nx:(i + 1) * nx, i * nx:(i + 1) * nx] = Q
    Hhat[N * nx:, N * nx:] = P
    H = Bhat.T @ Hhat @ Bhat + np.kron(np.eye(N), R)
    H = 0.5 * (H + H.T)
    Wx = Bhat.T @ Hhat @ Ahat
    Wv = -(Wx @ basis.G_x + H @ np.kron(np.ones((N, 1)), basis.G_u))
    M, L, b = constraint_matrices(model, Yset, ing.T, N, Ahat, Bhat)
    return CondensedMpc(
        N=N, H=H, W=np.hstack([Wx, Wv]), M=M, L=L, b=b, Ahat=Ahat, Bhat=Bhat,
        Q=Q, R=R, P=P, model=model, basis=basis, terminal=ing.T,
    )


def ocp_cost(mpc, x, v, mu):
    """The OCP objective evaluated along the predicted trajectory."""
    model, basis = mpc.model, mpc.basis
    xbar, ubar, _ = basis.equilibrium(v)
    nu = model.n_u
    xi = np.asarray(x, dtype=float)
    J = 0.0
    for i in range(mpc.N):
        u = mu[i * nu:(i + 1) * nu]
        dx, du = xi - xbar, u - ubar
        J += dx @ mpc.Q @ dx + du @ mpc.R @ du
        xi = model.step(xi, u)
    dx = xi - xbar
    return float(J + dx @ mpc.P @ dx)


@dataclass
class MpcResult:
    u: np.ndarray
    mu: np.ndarray
    J: float
    solution: object


def mpc_feedback(mpc, x, v, warm=None):
    """First input of the OCP minimizer; raises ``ocp_infeasible`` off Gamma_N."""
    sol = solve_qp(mpc.qp(x, v), warm_start=warm)
    if sol.status != "optimal":
        raise InfeasibleError("ocp_infeasible", f"OCP {sol.status} at x={x}, v={v}")
    nu = mpc.model.n_u
    return MpcResult(u=sol.z[:nu], mu=sol.z, J=ocp_cost(mpc, x, v, sol.z), solution=sol)


def feasible_set_block(mpc, log=None):
    nmu = mpc.M.shape[1]
    keep = list(range(nmu, nmu + mpc.n_theta))
    return project_fm(mpc.constraint_polyhedron(), keep, log=log)


def feasible_set_block_from(model, Yset, T, N, log=None):
    """Block method from the raw ingredients (no cost data needed)."""
    if N == 0:
        return T
    M, L, b = constraint_matrices(model, Yset, T, N)
    nmu = M.shape[1]
    P = Polyhedron(np.hstack([M, L]), b)
    return project_fm(P, list(range(nmu, nmu + L.shape[1])), log=log)


def feasible_set_recursive(model, basis, Yset, T, N, log=None):
    """Return ``[Gamma_0, ..., Gamma_N]`` with ``Gamma_0 = T``."""
    nx, nu, nv = model.n_x, model.n_u, basis.n_v
    n_theta = nx + nv
    # (x, v, u) -> (A x + B u, v)
    Me = np.zeros((n_theta, n_theta + nu))
    Me[:nx, :nx] = model.A
    Me[:nx, n_theta:] = model.B
    Me[nx:, nx:n_theta] = np.eye(nv)
    W = Polyhedron(
        Yset.Y @ np.hstack([model.C, np.zeros((model.n_y, nv)), model.D]),
        Yset.h,
    )
    gammas = [T]
    for _ in range(N):
        # the preimage of an irredundant set under this onto map stays
        # irredundant, so only the projected result needs pruning
        lifted = intersect(affine_preimage(Me, gammas[-1]), W, prune=False)
        gammas.append(project_fm(lifted, list(range(n_theta)), log=log, prune_input=False))
    return gammas


def theta_feasible(model, Yset, T, N, x0, v):
    theta = np.concatenate([np.atleast_1d(x0), np.atleast_1d(v)])
    if N == 0:
        return T.contains_point(theta, TOL.phase1)
    M, L, b = constraint_matrices(model, Yset, T, N)
    ok, _ = feasibility_phase1(M, b - L @ theta)
    return ok


def find_N_star(model, Yset, T, x0, v, N_max=1000):
    """Smallest horizon whose OCP is feasible at ``(x0, v)``.

    Feasible sets are nested in N, so the search gallops upward and then
    bisects instead of testing every horizon.
    """
    if theta_feasible(model, Yset, T, 0, x0, v):
        return 0
    lo, hi = 0, 1
    while not theta_feasible(model, Yset, T, hi, x0, v):
        lo = hi
        if hi >= N_max:
            raise InfeasibleError("not_found", f"no feasible horizon up to N_max={N_max}")
        hi = min(2 * hi, N_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if theta_feasible(model, Yset, T, mid, x0, v):
            hi = mid
        else:
            lo = mid
    return hi
