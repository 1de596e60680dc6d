"""Closed-loop simulation with logging, metrics and fail-fast monitors.

Every step runs the governor (if any), then the controller, then the plant.
The monitors turn the closed-loop guarantees into assertions: constraint
satisfaction, monotone Lyapunov value, the quadratic decrease estimate and
MPC cost decrease while the reference is held.
"""
import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, InvariantViolation
from .governor import (
    EXACT,
    UNDER_APPROX,
    GovernorState,
    box_underapprox,
    cg_step,
    fg_step,
    fg_step_underapprox,
    init_underapprox,
    lyapunov_value,
)
from .mpc import condense, mpc_feedback
from .polyhedra import contains, strict_contains
from .scenario import feasible_set, feasible_sets

CONTROLLERS = ("fg", "fg_under", "mpc", "cg")
GOVERNED = ("fg", "fg_under", "cg")

SAFETY_TOL = 1e-8
LYAPUNOV_TOL = 1e-9
COST_RTOL = 1e-6


@dataclass
class SimLog:
    controller: str
    x: list = field(default_factory=list)
    u: list = field(default_factory=list)
    y: list = field(default_factory=list)
    z: list = field(default_factory=list)
    v: list = field(default_factory=list)
    V: list = field(default_factory=list)
    J: list = field(default_factory=list)
    margin: list = field(default_factory=list)
    fg_time: list = field(default_factory=list)  # seconds
    mpc_time: list = field(default_factory=list)
    fg_active: list = field(default_factory=list)
    kkt: list = field(default_factory=list)  # worst KKT residual of the step's QPs

    def __len__(self):
        return len(self.x)

    def array(self, name):
        return np.array(getattr(self, name), dtype=float)

    def header(self):
        cols = ["k"]
        for name in ("x", "u", "y", "z", "v"):
            width = np.asarray(getattr(self, name)[0]).size if len(self) else 0
            cols += [f"{name}{i + 1}" for i in range(width)]
        return cols + ["V", "J", "margin", "fg_ms", "mpc_ms", "fg_active"]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        g = lambda a: f"{float(a):.12g}"  # noqa: E731
        for k in range(len(self)):
            row = [str(k)]
            for name in ("x", "u", "y", "z", "v"):
                row += [g(a) for a in np.atleast_1d(getattr(self, name)[k])]
            row += [g(self.V[k]), g(self.J[k]), g(self.margin[k])]
            row += [g(1e3 * self.fg_time[k]), g(1e3 * self.mpc_time[k]), str(int(self.fg_active[k]))]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def deterministic_part(self):
        """The log without wall-clock fields, for reproducibility checks."""
        names = ("x", "u", "y", "z", "v", "V", "J", "margin", "fg_active")
        return {n: np.array(getattr(self, n)) for n in names}


def _under_approx_set(syn, N, spec, Gamma_N):
    spec = spec.strip().lower()
    if spec.startswith("gamma:"):
        i = int(spec.split(":", 1)[1])
        if not 0 <= i <= N:
            raise AssumptionError("under_approx_invalid", f"Gamma_{i} is not below N={N}")
        F = feasible_sets(syn, i)[i]
    elif spec == "box":
        F = box_underapprox(Gamma_N, syn.Sigma)
    else:
        raise ValueError(f"unknown under-approximation spec {spec!r}")
    if not contains(Gamma_N, F):
        raise AssumptionError("under_approx_invalid", "F is not inside Gamma_N")
    if not strict_contains(F, syn.Sigma):
        raise AssumptionError("under_approx_invalid", "Sigma is not strictly inside F")
    return F


def _governor_state(syn, F, mode):
    return GovernorState(
        F=F, Veps=syn.Veps, G_z=syn.basis.G_z, r=syn.scenario.r,
        v_star=syn.v_star, n_x=syn.model.n_x, mode=mode,
    )


def simulate(syn, controller, steps=None, N=None, F_spec=None, x0=None, monitors=True):
    """Run the closed loop for ``steps`` transitions (``steps + 1`` log rows).

    ``controller`` is one of ``fg``, ``fg_under``, ``mpc`` (reference held at
    v*) and ``cg`` (command governor on the LQR loop). Monitor failures raise
    InvariantViolation with the step index.
    """
    controller = controller.replace("-", "_")
    if controller not in CONTROLLERS:
        raise ValueError(f"unknown controller {controller!r}")
    sc = syn.scenario
    steps = sc.steps if steps is None else int(steps)
    N = sc.N if N is None else int(N)
    model, basis, ing = syn.model, syn.basis, syn.terminal
    x = np.array(sc.x0 if x0 is None else x0, dtype=float).reshape(-1)
    log = SimLog(controller=controller)

    mpc = condense(model, basis, ing, syn.Yset, N, syn.Q, syn.R) if controller != "cg" else None
    state = None
    if controller == "fg":
        state = _governor_state(syn, feasible_set(syn, N), EXACT)
    elif controller == "fg_under":
        F = _under_approx_set(syn, N, F_spec or sc.F_spec, feasible_set(syn, N))
        state = _governor_state(syn, F, UNDER_APPROX)
        init_underapprox(x, state)
    elif controller == "cg":
        # start from the best reference the LQR loop admits at x0
        state = _governor_state(syn, ing.T, UNDER_APPROX)
        init_underapprox(x, state)
    eta = state.eta if state is not None else None
    ff = ing.K @ basis.G_x + basis.G_u

    warm = None
    for k in range(steps + 1):
        kkt = 0.0
        t0 = time.perf_counter()
        if controller == "fg":
            v = fg_step(x, state)
        elif controller == "fg_under":
            v = fg_step_underapprox(x, state)
        elif controller == "cg":
            v = cg_step(x, state.v_prev, syn.v_star, ing.T)
            state.v_prev = v
        else:
            v = syn.v_star.copy()
        t1 = time.perf_counter()
        sol = getattr(state, "last_solution", None) if controller in ("fg", "fg_under") else None
        if sol is not None:
            kkt = max(kkt, sol.kkt_residual)
            state.last_solution = None
        if controller == "cg":
            u = -ing.K @ x + ff @ v
            dx = x - basis.G_x @ v
            J = float(dx @ ing.P @ dx)
        else:
            res = mpc_feedback(mpc, x, v, warm)
            warm = res.solution.active
            u, J = res.u, res.J
            kkt = max(kkt, res.solution.kkt_residual)
        t2 = time.perf_counter()

        y = model.output(x, u)
        V = lyapunov_value(v, state) if state is not None else _psi_plain(syn, v)
        log.x.append(x.copy())
        log.u.append(np.atleast_1d(u).copy())
        log.y.append(y)
        log.z.append(model.tracked(x, u))
        log.v.append(np.atleast_1d(v).copy())
        log.V.append(V)
        log.J.append(J)
        log.margin.append(syn.Yset.margin(y))
        log.fg_time.append(t1 - t0)
        log.mpc_time.append(t2 - t1)
        log.fg_active.append(controller != "mpc" and not np.allclose(v, syn.v_star, rtol=0, atol=1e-9))
        log.kkt.append(kkt)
        if monitors:
            _check_step(log, k, syn, controller, eta)
        x = model.step(x, u)
    return log


def _psi_plain(syn, v):
    if syn.basis.injective:
        e = syn.basis.G_z @ v - syn.scenario.r
    else:
        e = v - syn.v_star
    return float(e @ e)


def _check_step(log, k, syn, controller, eta):
    if log.margin[k] < -SAFETY_TOL:
        raise InvariantViolation("constraint_violated", k, f"margin {log.margin[k]:.3e}")
    if k == 0:
        return
    dv = log.v[k] - log.v[k - 1]
    dV = log.V[k] - log.V[k - 1]
    if controller in GOVERNED:
        if dV > LYAPUNOV_TOL:
            raise InvariantViolation("lyapunov_increase", k, f"V rose by {dV:.3e}")
        step2 = float(dv @ dv)
        if step2 > 0 and dV > -eta * step2 + LYAPUNOV_TOL:
            raise InvariantViolation("decrease_bound", k, f"dV={dV:.3e} vs -eta|dv|^2={-eta * step2:.3e}")
    if controller != "cg" and not np.any(dv):
        # with the reference held the OCP value is a Lyapunov function of x
        ex = log.x[k - 1] - syn.basis.G_x @ log.v[k - 1]
        bound = log.J[k - 1] - float(ex @ syn.Q @ ex) + COST_RTOL * max(1.0, abs(log.J[k - 1]))
        if log.J[k] > bound:
            raise InvariantViolation("cost_increase", k, f"J={log.J[k]:.6e} above {bound:.6e}")


NOT_REACHED = "not_reached"


@dataclass
class Metrics:
    rise_time_steps: object
    settling_time_steps: object
    v_convergence_step: object
    max_violation: float
    tave: float
    tmax: float
    max_kkt: float = 0.0

    def as_row(self):
        return {
            "rise_time_steps": self.rise_time_steps,
            "settling_time_steps": self.settling_time_steps,
            "v_convergence_step": self.v_convergence_step,
            "max_violation": self.max_violation,
            "tave_s": self.tave,
            "tmax_s": self.tmax,
            "max_kkt": self.max_kkt,
        }


def rise_time(z, r, z0=None):
    """Steps from the first 10% crossing to the first 90% crossing."""
    z = np.asarray(z, dtype=float).reshape(len(z), -1)[:, 0]
    r = float(np.atleast_1d(r)[0])
    z0 = z[0] if z0 is None else z0
    span = r - z0
    if span == 0:
        return NOT_REACHED
    frac = (z - z0) / span
    lo, hi = np.flatnonzero(frac >= 0.1), np.flatnonzero(frac >= 0.9)
    if lo.size == 0 or hi.size == 0:
        return NOT_REACHED
    return int(hi[0] - lo[0])


def settling_time(z, r, band=0.02, z0=None):
    """First step after the last exit from the +-band (relative to the step span)."""
    z = np.asarray(z, dtype=float).reshape(len(z), -1)[:, 0]
    r = float(np.atleast_1d(r)[0])
    z0 = z[0] if z0 is None else z0
    width = band * abs(r - z0) if r != z0 else band * max(1.0, abs(r))
    outside = np.flatnonzero(np.abs(z - r) > width)
    if outside.size == 0:
        return 0
    if outside[-1] == len(z) - 1:
        return NOT_REACHED
    return int(outside[-1] + 1)


def convergence_step(v, v_star, tol=1e-9):
    """First t with ``||v_k - v*|| <= tol`` for every k >= t."""
    v = np.asarray(v, dtype=float).reshape(len(v), -1)
    off = np.flatnonzero(np.linalg.norm(v - np.asarray(v_star).reshape(1, -1), axis=1) > tol)
    if off.size == 0:
        return 0
    if off[-1] == len(v) - 1:
        return NOT_REACHED
    return int(off[-1] + 1)


def compute_metrics(log, r, v_star=None):
    if len(log) == 0:
        raise ValueError("empty log")
    z = log.array("z")
    total = log.array("fg_time") + log.array("mpc_time")
    return Metrics(
        rise_time_steps=rise_time(z, r),
        settling_time_steps=settling_time(z, r),
        v_convergence_step=NOT_REACHED if v_star is None else convergence_step(log.array("v"), v_star),
        max_violation=float(max(0.0, -np.min(log.margin))),
        tave=float(np.mean(total)),
        tmax=float(np.max(total)),
        max_kkt=float(np.max(log.kkt)),
    )
