"""LTI plant, equilibrium parameterization and admissible reference sets."""
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionError
from .numerics import as_matrix, kernel_basis, solve_dare
from .polyhedra import Polyhedron, bounding_box
from .qp import QpProblem, solve_qp
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class LtiModel:
    """x+ = Ax + Bu,  y = Cx + Du (constrained),  z = Ex + Fu (tracked)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    ts: float = 1.0

    def __post_init__(self):
        for name in "ABCDEF":
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        nx, nu = self.B.shape
        checks = {
            "A": (nx, nx),
            "C": (self.C.shape[0], nx),
            "D": (self.C.shape[0], nu),
            "E": (self.E.shape[0], nx),
            "F": (self.E.shape[0], nu),
        }
        for name, shape in checks.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def n_x(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B.shape[1]

    @property
    def n_y(self):
        return self.C.shape[0]

    @property
    def n_z(self):
        return self.E.shape[0]

    def step(self, x, u):
        return self.A @ x + self.B @ u

    def output(self, x, u):
        return self.C @ x + self.D @ u

    def tracked(self, x, u):
        return self.E @ x + self.F @ u

    def check_stabilizable(self):
        try:
            solve_dare(self.A, self.B, np.eye(self.n_x), np.eye(self.n_u))
        except Exception as exc:
            raise AssumptionError("not_stabilizable", "(A, B) failed the DARE test") from exc


@dataclass(frozen=True, eq=False)
class EquilibriumBasis:
    G_x: np.ndarray
    G_u: np.ndarray
    G_z: np.ndarray
    G_y: np.ndarray

    @property
    def n_v(self):
        return self.G_x.shape[1]

    @property
    def injective(self):
        s = np.linalg.svd(self.G_z, compute_uv=False)
        return s.size == self.n_v and s[-1] > TOL.rank * max(1.0, s[0])

    def equilibrium(self, v):
        v = np.asarray(v, dtype=float).reshape(self.n_v)
        return self.G_x @ v, self.G_u @ v, self.G_z @ v


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """{y : Y y <= h}; compact with the origin in its interior."""

    Y: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        P = Polyhedron(self.Y, self.h)
        object.__setattr__(self, "Y", P.A)
        object.__setattr__(self, "h", P.b)
        if np.any(P.b <= 0):
            raise AssumptionError("origin_not_interior", "0 must lie strictly inside Y")
        lo, hi = bounding_box(P)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise AssumptionError("not_compact", "constraint set Y is unbounded")

    @classmethod
    def box(cls, lower, upper):
        P = Polyhedron.from_box(lower, upper)
        return cls(P.A, P.b)

    @property
    def polyhedron(self):
        return Polyhedron(self.Y, self.h)

    def margin(self, y):
        """Smallest row slack (negative means violated)."""
        return float(np.min(self.h - self.Y @ np.asarray(y, dtype=float)))


def equilibrium_matrix(model):
    nx, nu, nz = model.n_x, model.n_u, model.n_z
    return np.block([
        [np.eye(nx) - model.A, -model.B, np.zeros((nx, nz))],
        [model.E, model.F, -np.eye(nz)],
    ])


def equilibrium_basis(model):
    """Kernel basis of the steady-state equations, split into blocks.

    When ``G_z`` is square and invertible the basis is re-expressed so that
    ``G_z = I``, i.e. the auxiliary reference lives in output units.
    """
    G = kernel_basis(equilibrium_matrix(model))
    nx, nu = model.n_x, model.n_u
    G_x, G_u, G_z = G[:nx], G[nx:nx + nu], G[nx + nu:]
    rank = np.linalg.matrix_rank(G_z, tol=TOL.rank * max(1.0, np.linalg.norm(G_z, 2)))
    if rank < min(G_z.shape):
        raise AssumptionError("Gz_rank_deficient", f"rank(G_z) = {rank}")
    if G_z.shape[0] == G_z.shape[1]:
        T = np.linalg.inv(G_z)
        G_x, G_u, G_z = G_x @ T, G_u @ T, np.eye(G_z.shape[0])
    G_y = model.C @ G_x + model.D @ G_u
    # roundoff-level entries would otherwise show up as spurious set rows
    scale = max(1.0, np.max(np.abs(G)))
    G_x, G_u, G_y = (np.where(np.abs(M) < 1e-13 * scale, 0.0, M) for M in (G_x, G_u, G_y))
    return EquilibriumBasis(G_x=G_x, G_u=G_u, G_z=G_z, G_y=G_y)


def admissible_reference_set(basis, Yset, eps):
    """Return ``(V_eps, R_eps)``.

    ``R_eps`` is only materialized when ``G_z`` is square and invertible;
    otherwise it is ``None`` and lives implicitly as ``G_z V_eps``.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    Veps = Polyhedron(Yset.Y @ basis.G_y, (1.0 - eps) * Yset.h)
    assert Veps.contains_point(np.zeros(basis.n_v))
    Reps = None
    if basis.G_z.shape[0] == basis.G_z.shape[1]:
        Ginv = np.linalg.inv(basis.G_z)
        Reps = Polyhedron(Veps.A @ Ginv, Veps.b)
    return Veps, Reps


def sigma_set(basis, Veps):
    """{(x, v) : x = G_x v, v in V_eps} with the equality as a row pair."""
    nx, nv = basis.G_x.shape
    eq = np.hstack([np.eye(nx), -basis.G_x])
    A = np.vstack([eq, -eq, np.hstack([np.zeros((Veps.n_rows, nx)), Veps.A])])
    b = np.concatenate([np.zeros(2 * nx), Veps.b])
    return Polyhedron(A, b)


def select_v_star(basis, Veps, r):
    """A minimizer of ``||G_z v - r||`` over V_eps.

    For injective ``G_z`` it is unique. Otherwise the minimum-norm element of
    the optimal face is returned: a lightly penalized solve fixes the
    (unique) optimal output ``G_z v``, then a second QP picks the smallest
    ``v`` reaching it.
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    Gz = basis.G_z
    nv = basis.n_v
    if basis.injective:
        sol = solve_qp(QpProblem(2 * Gz.T @ Gz, -2 * Gz.T @ r, Veps.A, Veps.b))
        return sol.z
    pen = solve_qp(QpProblem(2 * (Gz.T @ Gz + 1e-8 * np.eye(nv)), -2 * Gz.T @ r, Veps.A, Veps.b))
    s = Gz @ pen.z
    A = np.vstack([Veps.A, Gz, -Gz])
    b = np.concatenate([Veps.b, s + 1e-12, -s + 1e-12])
    sol = solve_qp(QpProblem(2 * np.eye(nv), np.zeros(nv), A, b))
    return sol.z if sol.ok else pen.z
