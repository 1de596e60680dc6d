"""Dense strictly convex QP solver (Goldfarb-Idnani dual active set).

Solves ``min 1/2 z'Hz + f'z  s.t.  A z <= b``. The method starts at the
unconstrained minimizer and adds violated constraints one at a time while
keeping the working-set multipliers nonnegative, so it is well suited to
problems with few variables and many constraints (the governor QP) and to
warm starts from a previous active set (the receding-horizon MPC QP).

The factorization is the standard one: ``J = L^{-T} Q`` and an upper
triangular ``R`` with ``Q' L^{-1} N = [R; 0]`` for the active normals ``N``.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._lp import LinearProgram
from .errors import NumericalError
from .tolerances import TOL

OPTIMAL, INFEASIBLE, MAX_ITER = "optimal", "infeasible", "max_iter"

_TIKHONOV = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        d = H.shape[0]
        f = np.asarray(self.f, dtype=float).reshape(d)
        A = np.asarray(self.A, dtype=float).reshape(-1, d)
        b = np.asarray(self.b, dtype=float).reshape(A.shape[0])
        for name, val in (("H", H), ("f", f), ("A", A), ("b", b)):
            object.__setattr__(self, name, val)

    @property
    def n_var(self):
        return self.H.shape[0]

    @property
    def n_con(self):
        return self.A.shape[0]

    def objective(self, z):
        return 0.5 * z @ self.H @ z + self.f @ z


@dataclass
class QpSolution:
    z: np.ndarray
    lam: np.ndarray
    status: str
    iterations: int
    kkt_residual: float
    active: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == OPTIMAL


def kkt_residuals(p, z, lam, relative=False):
    """Return (stationarity, primal infeasibility, complementarity, dual infeasibility).

    With ``relative=True`` each term is divided by ``1 + `` the size of the
    quantities it balances, so the numbers do not grow with the data scale.
    """
    g = p.H @ z + p.f
    Atl = p.A.T @ lam if p.n_con else np.zeros_like(g)
    stat = np.linalg.norm(g + Atl, np.inf) if p.n_var else 0.0
    if p.n_con:
        viol = p.A @ z - p.b
        feas = max(0.0, float(np.max(viol)))
        comp = float(np.max(np.abs(lam * viol)))
        dual = max(0.0, -float(np.min(lam)))
    else:
        feas = comp = dual = 0.0
    if relative and p.n_var:
        inf = lambda a: float(np.max(np.abs(a))) if np.size(a) else 0.0  # noqa: E731
        stat /= 1.0 + max(inf(p.H @ z), inf(p.f), inf(Atl))
        if p.n_con:
            Az = p.A @ z
            feas /= 1.0 + max(inf(Az), inf(p.b))
            comp /= 1.0 + inf(lam) * max(inf(Az), inf(p.b))
            dual /= 1.0 + inf(lam)
    return float(stat), feas, comp, dual


def _cholesky(H):
    scale = max(1.0, float(np.max(np.abs(np.diag(H))))) if H.size else 1.0
    for tau in _TIKHONOV:
        try:
            return np.linalg.cholesky(H + tau * scale * np.eye(H.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("ill_conditioned", "Hessian is not positive definite")


class _Workspace:
    """Active-set factorization state for one solve."""

    def __init__(self, L):
        n = L.shape[0]
        self.n = n
        self.J = sla.solve_triangular(L, np.eye(n), lower=True).T  # L^{-T}
        self.R = np.zeros((n, n))
        self.q = 0

    def directions(self, normal):
        d = self.J.T @ normal
        q = self.q
        z = self.J[:, q:] @ d[q:]
        r = sla.solve_triangular(self.R[:q, :q], d[:q], lower=False) if q else np.zeros(0)
        return d, z, r

    def add(self, d):
        q, n = self.q, self.n
        tail = d[q:].copy()
        alpha = np.linalg.norm(tail)
        if q < n - 1 and alpha > 0:
            # Householder reflector mapping tail onto alpha * e1
            v = tail.copy()
            v[0] += np.copysign(alpha, tail[0]) if tail[0] != 0 else alpha
            v /= np.linalg.norm(v)
            self.J[:, q:] -= 2.0 * np.outer(self.J[:, q:] @ v, v)
            head = tail[0] - 2.0 * v[0] * (v @ tail)
        else:
            head = tail[0]
        self.R[:q, q] = d[:q]
        self.R[q, q] = head
        self.q += 1

    def drop(self, idx):
        q = self.q
        self.R[:, idx:q - 1] = self.R[:, idx + 1:q].copy()
        self.R[:, q - 1] = 0.0
        # restore triangularity of the Hessenberg block with Givens rotations
        for k in range(idx, q - 1):
            a, b = self.R[k, k], self.R[k + 1, k]
            if b == 0.0:
                continue
            rr = np.hypot(a, b)
            c, s = a / rr, b / rr
            rows = self.R[[k, k + 1], k:q - 1]
            self.R[k, k:q - 1] = c * rows[0] + s * rows[1]
            self.R[k + 1, k:q - 1] = -s * rows[0] + c * rows[1]
            jk, jk1 = self.J[:, k].copy(), self.J[:, k + 1].copy()
            self.J[:, k] = c * jk + s * jk1
            self.J[:, k + 1] = -s * jk + c * jk1
        self.q -= 1


def solve_qp(p, warm_start=None, max_iter=None, tol=None):
    """Solve a strictly convex QP with the Goldfarb-Idnani dual method.

    ``warm_start`` is an iterable of constraint indices believed active; they
    seed the working set whenever their multipliers come out nonnegative.
    """
    tol = TOL if tol is None else tol
    d, m = p.n_var, p.n_con
    max_iter = 10 * (d + m) if max_iter is None else max_iter
    L = _cholesky(p.H)
    z = -sla.cho_solve((L, True), p.f)
    if m == 0:
        return _finish(p, z, np.zeros(0), [], OPTIMAL, 0)

    # constraints in the method's native form  n_i' z >= c_i
    N = -p.A
    c = -p.b
    norms = np.linalg.norm(p.A, axis=1)
    norms[norms == 0] = 1.0
    ws = _Workspace(L)
    active, u = [], []
    iters = 0

    if warm_start:
        z, active, u, iters = _warm(p, ws, L, z, N, c, list(dict.fromkeys(warm_start)), tol)

    is_active = np.zeros(m, dtype=bool)
    is_active[active] = True
    feas_tol = tol.feas

    while True:
        s = N @ z - c
        s[is_active] = np.inf
        viol = s / norms
        p_idx = int(np.argmin(viol))  # argmin returns the lowest index on ties
        if viol[p_idx] >= -feas_tol:
            return _finish(p, z, _full_lam(m, active, u), active, OPTIMAL, iters)
        u_new = 0.0
        normal = N[p_idx]
        while True:
            if iters >= max_iter:
                return _finish(p, z, _full_lam(m, active, u), active, MAX_ITER, iters)
            iters += 1
            dvec, step, r = ws.directions(normal)
            # partial (dual) step length
            t1, drop_k = np.inf, -1
            for k, rk in enumerate(r):
                if rk > 1e-14 and u[k] / rk < t1:
                    t1, drop_k = u[k] / rk, k
            # full (primal) step length
            curv = step @ normal
            if np.linalg.norm(step) > 1e-13 * max(1.0, np.linalg.norm(normal)) and curv > 1e-300:
                t2 = -(normal @ z - c[p_idx]) / curv
            else:
                t2 = np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                return _finish(p, z, _full_lam(m, active, u), active, INFEASIBLE, iters)
            if not np.isfinite(t2):
                u = [uk - t * rk for uk, rk in zip(u, r)]
                u_new += t
                _drop(ws, active, u, is_active, drop_k)
                continue
            z = z + t * step
            u = [uk - t * rk for uk, rk in zip(u, r)]
            u_new += t
            if t2 <= t1:
                ws.add(dvec)
                active.append(p_idx)
                u.append(u_new)
                is_active[p_idx] = True
                break
            _drop(ws, active, u, is_active, drop_k)


def _drop(ws, active, u, is_active, k):
    ws.drop(k)
    is_active[active[k]] = False
    del active[k]
    del u[k]


def _warm(p, ws, L, z0, N, c, cand, tol):
    """Seed the working set with ``cand`` keeping only a dual-feasible subset."""
    d = p.n_var
    drops = 0
    cand = [j for j in cand if 0 <= j < p.n_con][:d]
    while cand:
        Nw = N[cand].T
        Linv_N = sla.solve_triangular(L, Nw, lower=True)
        Q, R = np.linalg.qr(Linv_N, mode="complete")
        diag = np.abs(np.diag(R[: len(cand), : len(cand)]))
        if np.any(diag <= 1e-10 * max(1.0, float(np.max(diag)))):
            bad = int(np.argmin(diag))
            del cand[bad]
            drops += 1
            continue
        J = sla.solve_triangular(L, Q, lower=True, trans="T")
        q = len(cand)
        J1, R1 = J[:, :q], R[:q, :q]
        z = z0 + J1 @ sla.solve_triangular(R1, c[cand] - Nw.T @ z0, trans="T")
        grad = p.H @ z + p.f
        u = sla.solve_triangular(R1, J1.T @ grad)
        if np.all(u >= -tol.opt):
            ws.J = J
            ws.R = np.zeros((d, d))
            ws.R[:q, :q] = R1
            ws.q = q
            return z, list(cand), [max(0.0, float(x)) for x in u], drops
        del cand[int(np.argmin(u))]
        drops += 1
    return z0, [], [], drops


def _full_lam(m, active, u):
    lam = np.zeros(m)
    for j, uj in zip(active, u):
        lam[j] = uj
    return lam


def _finish(p, z, lam, active, status, iters):
    res = max(kkt_residuals(p, z, lam, relative=True)) if status == OPTIMAL else np.inf
    return QpSolution(z=z, lam=lam, status=status, iterations=iters, kkt_residual=res, active=list(active))


def feasibility_phase1(A, b, tol=None):
    """Decide whether ``{z : A z <= b}`` is nonempty.

    Minimizes a single elastic slack ``s >= 0`` over ``A z <= b + s``; the
    set is feasible iff the optimal slack is at most ``tol``. Returns
    ``(feasible, witness)``.
    """
    tol = TOL.phase1 if tol is None else tol
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    m, d = A.shape
    if m == 0:
        return True, np.zeros(d)
    scale = np.linalg.norm(A, axis=1)
    scale[scale == 0] = 1.0
    An, bn = A / scale[:, None], b / scale
    aug = np.hstack([An, -np.ones((m, 1))])
    s_row = np.zeros((1, d + 1))
    s_row[0, -1] = -1.0
    lp = LinearProgram(np.vstack([aug, s_row]), np.concatenate([bn, [0.0]]))
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    _, value, sol = lp.maximize(cost)
    slack = -value
    return bool(slack <= tol), sol[:d]
