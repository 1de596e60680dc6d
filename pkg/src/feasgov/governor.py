"""Feasibility governor (exact and under-approximated) and a command-governor
baseline acting on the terminal set of the LQR closed loop."""
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, InfeasibleError, InvariantViolation
from .polyhedra import Polyhedron, bounding_box, contains, strict_contains
from .qp import QpProblem, solve_qp
from .tolerances import TOL

EXACT, UNDER_APPROX = "exact", "under_approx"
INJECTIVE, SELECTED = "injective", "selected"

_ZERO_V_ROW = 1e-12


@dataclass
class GovernorState:
    """Everything the online governor needs; mutated only by its control loop.

    ``F`` is a polyhedron over ``(x, v)``: Gamma_N in exact mode and the
    under-approximation otherwise.
    """

    F: Polyhedron
    Veps: Polyhedron
    G_z: np.ndarray
    r: np.ndarray
    v_star: np.ndarray
    n_x: int
    mode: str = EXACT
    v_prev: np.ndarray = None
    psi_mode: str = field(init=False)
    hessian: np.ndarray = field(init=False, repr=False)
    linear: np.ndarray = field(init=False, repr=False)
    active: list = field(default_factory=list, repr=False)
    last_solution: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode not in (EXACT, UNDER_APPROX):
            raise ValueError(f"unknown governor mode {self.mode!r}")
        self.G_z = np.atleast_2d(np.asarray(self.G_z, dtype=float))
        self.r = np.asarray(self.r, dtype=float).reshape(-1)
        self.v_star = np.asarray(self.v_star, dtype=float).reshape(-1)
        nv = self.G_z.shape[1]
        s = np.linalg.svd(self.G_z, compute_uv=False)
        injective = s.size == nv and s[-1] > TOL.rank * max(1.0, s[0])
        self.psi_mode = INJECTIVE if injective else SELECTED
        if injective:
            self.hessian = 2.0 * self.G_z.T @ self.G_z
            self.linear = -2.0 * self.G_z.T @ self.r
        else:
            self.hessian = 2.0 * np.eye(nv)
            self.linear = -2.0 * self.v_star
        # rows of F that do not involve v only restrict x; they are checked
        # separately so the QP row set (and its warm start) stays fixed
        Fx, Fv = self.F.A[:, : self.n_x], self.F.A[:, self.n_x:]
        has_v = np.linalg.norm(Fv, axis=1) > _ZERO_V_ROW
        self._x_rows = (Fx[~has_v], self.F.b[~has_v])
        self._Fx, self._Fv, self._c = Fx[has_v], Fv[has_v], self.F.b[has_v]
        self._A = np.vstack([self._Fv, self.Veps.A])
        if self.v_prev is not None:
            self.v_prev = np.asarray(self.v_prev, dtype=float).reshape(-1)

    @property
    def n_v(self):
        return self.G_z.shape[1]

    @property
    def eta(self):
        """Guaranteed decrease rate of V per squared reference step.

        Strong convexity of psi with modulus ``2 lam_min(G_z'G_z)`` gives
        ``psi(v_prev) - psi(v) >= lam_min ||v - v_prev||^2`` whenever v_prev is
        feasible for the new problem.
        """
        if self.psi_mode == INJECTIVE:
            lam = float(np.min(np.linalg.eigvalsh(self.G_z.T @ self.G_z)))
        else:
            lam = 1.0
        return lam - 1e-9


def psi(v, r, state):
    v = np.asarray(v, dtype=float).reshape(-1)
    if state.psi_mode == INJECTIVE:
        e = state.G_z @ v - np.asarray(r, dtype=float).reshape(-1)
    else:
        e = v - state.v_star
    return float(e @ e)


def lyapunov_value(v, state):
    return psi(v, state.r, state)


def _governor_qp(x, state):
    x = np.asarray(x, dtype=float).reshape(-1)
    Ax, bx = state._x_rows
    if Ax.shape[0] and np.any(Ax @ x - bx > TOL.membership):
        return None
    b = np.concatenate([state._c - state._Fx @ x, state.Veps.b])
    return QpProblem(state.hessian, state.linear, state._A, b)


def _solve_governor(x, state):
    p = _governor_qp(x, state)
    if p is None:
        raise InfeasibleError("state_outside_domain", f"x={x} is outside the governor domain")
    sol = solve_qp(p, warm_start=state.active or None)
    if sol.status != "optimal":
        raise InfeasibleError("state_outside_domain", f"empty reference slice at x={x}")
    state.active = list(sol.active)
    return sol


def fg_step(x, state):
    """Closest admissible reference (in psi) keeping ``(x, v)`` in F."""
    sol = _solve_governor(x, state)
    state.v_prev = sol.z.copy()
    state.last_solution = sol
    return sol.z.copy()


def fg_step_underapprox(x, state):
    """Re-plan inside F when ``(x, v_prev)`` lies in F, else hold v_prev."""
    if state.v_prev is None:
        raise AssumptionError("bad_initialization", "v_prev is not initialized")
    theta = np.concatenate([np.asarray(x, dtype=float).reshape(-1), state.v_prev])
    if state.F.contains_point(theta, TOL.membership):
        return fg_step(x, state)
    state.last_solution = None
    return state.v_prev.copy()


def init_underapprox(x0, state):
    """Seed v_prev with a reference that puts ``(x0, v_prev)`` inside F."""
    try:
        sol = _solve_governor(x0, state)
    except InfeasibleError as exc:
        raise AssumptionError("bad_initialization", f"no v with (x0, v) in F: {exc}") from exc
    state.v_prev = sol.z.copy()
    return state.v_prev


def cg_step(x, v_prev, v_target, O_infty_cl, tol=None):
    """Largest step from v_prev towards v_target that keeps ``(x, v)`` in O."""
    tol = TOL.membership if tol is None else tol
    x = np.asarray(x, dtype=float).reshape(-1)
    v_prev = np.asarray(v_prev, dtype=float).reshape(-1)
    d = np.asarray(v_target, dtype=float).reshape(-1) - v_prev
    theta = np.concatenate([x, v_prev])
    slack = O_infty_cl.b - O_infty_cl.A @ theta
    if np.any(slack < -tol):
        raise InvariantViolation("cg_invariant_violated", None, f"(x, v_prev) left O_inf by {-slack.min():.3g}")
    slope = O_infty_cl.A[:, x.size:] @ d
    up = slope > 1e-14
    lam = 1.0
    if np.any(up):
        lam = float(min(1.0, np.min(np.maximum(slack[up], 0.0) / slope[up])))
    return v_prev + max(lam, 0.0) * d


def box_underapprox(Gamma, Sigma, iters=40):
    """Axis-aligned box inside Gamma, scaled about its center by bisection.

    Raises ``under_approx_invalid`` if Gamma is unbounded or the largest box
    does not hold Sigma strictly inside.
    """
    lo, hi = bounding_box(Gamma)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise AssumptionError("under_approx_invalid", "box under-approximation needs a bounded Gamma_N")
    c = 0.5 * (lo + hi)
    if not Gamma.contains_point(c):
        raise AssumptionError("under_approx_invalid", "box center lies outside Gamma_N")

    def box(s):
        return Polyhedron.from_box(c + s * (lo - c), c + s * (hi - c))

    a, b = 0.0, 1.0
    if contains(Gamma, box(1.0)):
        a = 1.0
    else:
        for _ in range(iters):
            m = 0.5 * (a + b)
            if contains(Gamma, box(m)):
                a = m
            else:
                b = m
    B = box(a)
    if a <= 0.0 or not strict_contains(B, Sigma):
        raise AssumptionError("under_approx_invalid", "largest inscribed box does not contain Sigma strictly")
    return B
