"""Dense linear-algebra helpers: Riccati/Lyapunov solvers, kernels, ZOH."""
import numpy as np
import scipy.linalg as sla

from .errors import AssumptionError, NumericalError
from .tolerances import TOL


def as_matrix(M, name="matrix"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def sym(M):
    return 0.5 * (M + M.T)


def spectral_radius(A):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def relative_residual(R, P):
    return float(np.linalg.norm(R, "fro") / max(1.0, np.linalg.norm(P, "fro")))


def riccati_map(P, A, B, Q, R):
    S = R + B.T @ P @ B
    K = np.linalg.solve(S, B.T @ P @ A)
    return sym(Q + A.T @ P @ A - A.T @ P @ B @ K), K


def dare_residual(P, A, B, Q, R):
    P_next, _ = riccati_map(P, A, B, Q, R)
    return P_next - P


def solve_dare(A, B, Q, R, max_iter=10_000, tol=None):
    """Solve the discrete algebraic Riccati equation by fixed-point iteration.

    Returns ``(P, K)`` with ``K = (R + B'PB)^{-1} B'PA`` so that ``A - BK`` is
    the LQR closed loop.
    """
    tol = TOL.dare if tol is None else tol
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    Q, R = as_matrix(Q, "Q"), as_matrix(R, "R")
    if not np.allclose(R, R.T) or np.min(np.linalg.eigvalsh(sym(R))) <= 0:
        raise AssumptionError("invalid_weights", "R must be symmetric positive definite")
    if not np.allclose(Q, Q.T) or np.min(np.linalg.eigvalsh(sym(Q))) < -1e-12:
        raise AssumptionError("invalid_weights", "Q must be symmetric positive semidefinite")

    P = sym(Q)
    for _ in range(max_iter):
        P_next, K = riccati_map(P, A, B, Q, R)
        if not np.all(np.isfinite(P_next)):
            break
        step = np.linalg.norm(P_next - P, "fro")
        P = P_next
        if step <= tol * max(1.0, np.linalg.norm(P, "fro")):
            K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
            if spectral_radius(A - B @ K) >= 1.0:
                break
            return P, K
    raise NumericalError("dare_diverged", f"no convergence in {max_iter} iterations")


def solve_discrete_lyapunov(Abar, S):
    """Return P solving ``Abar' P Abar - P + S = 0`` for Schur ``Abar``."""
    Abar, S = as_matrix(Abar, "Abar"), as_matrix(S, "S")
    if spectral_radius(Abar) >= 1.0:
        raise AssumptionError("not_schur", "spectral radius of Abar must be < 1")
    n = Abar.shape[0]
    # vec(A'PA) = kron(A', A') vec(P) in column-major order
    lhs = np.eye(n * n) - np.kron(Abar.T, Abar.T)
    vecP = np.linalg.solve(lhs, S.reshape(-1, order="F"))
    P = vecP.reshape((n, n), order="F")
    # one step of iterative refinement
    resid = Abar.T @ P @ Abar - P + S
    P = P + np.linalg.solve(lhs, resid.reshape(-1, order="F")).reshape((n, n), order="F")
    return sym(P)


def kernel_basis(Z, rtol=None):
    """Orthonormal basis (as columns) of ker Z.

    Rank is decided with threshold ``rtol * ||Z||_2``. Each column is signed so
    its first non-negligible entry is positive, which keeps the output stable
    across runs.
    """
    rtol = TOL.rank if rtol is None else rtol
    Z = as_matrix(Z, "Z")
    q = Z.shape[1]
    _, s, Vt = np.linalg.svd(Z, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    G = Vt[rank:].T.copy()
    if G.shape[1] == 0:
        raise AssumptionError("trivial_kernel", "ker Z = {0}")
    for j in range(G.shape[1]):
        col = G[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size and col[idx[0]] < 0:
            G[:, j] = -col
    assert G.shape == (q, q - rank)
    return G


def zoh_discretize(Ac, Bc, ts):
    """Zero-order-hold discretization via the augmented matrix exponential."""
    Ac, Bc = as_matrix(Ac, "Ac"), as_matrix(Bc, "Bc")
    if ts <= 0:
        raise ValueError("ts must be positive")
    n, m = Bc.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = Ac
    aug[:n, n:] = Bc
    E = sla.expm(aug * ts)
    return E[:n, :n], E[:n, n:]


def parse_matrix(text):
    """Parse ``"1 0.1; 0 1"`` into a 2-D array."""
    rows = [r.split() for r in text.strip().split(";")]
    rows = [r for r in rows if r]
    if not rows:
        return np.zeros((0, 0))
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"ragged matrix text: {text!r}")
    return np.array([[float(v) for v in r] for r in rows])


def format_matrix(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "; ".join(" ".join(repr(float(v)) for v in row) for row in M)
