"""H-representation polyhedra ``{z : A z <= b}`` and the calculus on them.

Rows are normalized to unit length on construction so all tolerances are
absolute distances. Projection is Fourier-Motzkin elimination with LP-based
redundancy removal after every eliminated variable.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import HalfspaceIntersection

from ._lp import INF, INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram
from .errors import InfeasibleError, NumericalError
from .tolerances import TOL

_ZERO_ROW = 1e-11
_DEFAULT_BLOWUP_CAP = 200_000
_ADJACENCY_MIN_PAIRS = 400
_ADJACENCY_MAX_DIM = 6  # vertex enumeration explodes beyond this


@dataclass(frozen=True, eq=False)
class Polyhedron:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.shape[0] == 0 and A.ndim == 2 and b.size == 0:
            A = A.reshape(0, A.shape[1])
        if A.shape[0] != b.size:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.size}")
        A, b = _normalize(A, b)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.A.shape[0]

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, rows={self.n_rows})"

    @classmethod
    def universe(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0))

    @classmethod
    def from_box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        n = lo.size
        rows, rhs = [], []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            if np.isfinite(hi[i]):
                rows.append(e)
                rhs.append(hi[i])
            if np.isfinite(lo[i]):
                rows.append(-e)
                rhs.append(-lo[i])
        return cls(np.array(rows).reshape(-1, n), np.array(rhs))

    def contains_point(self, z, tol=None):
        tol = TOL.membership if tol is None else tol
        z = np.asarray(z, dtype=float).reshape(-1)
        return bool(np.all(self.A @ z - self.b <= tol))

    def slack(self, z):
        return self.b - self.A @ np.asarray(z, dtype=float).reshape(-1)

    def is_empty(self):
        if self.n_rows == 0:
            return False
        return not LinearProgram(self.A, self.b).feasible()


def _normalize(A, b):
    n = A.shape[1]
    if A.shape[0] == 0:
        return A.copy(), b.copy()
    norms = np.linalg.norm(A, axis=1)
    zero = norms <= _ZERO_ROW
    if np.any(zero & (b < -_ZERO_ROW)):
        return _empty_rows(n)
    A, b, norms = A[~zero], b[~zero], norms[~zero]
    # leave already-unit rows untouched so files round-trip bit-exactly
    rescale = np.abs(norms - 1.0) > 4 * np.finfo(float).eps
    A = A.copy()
    b = b.copy()
    A[rescale] /= norms[rescale, None]
    b[rescale] /= norms[rescale]
    return A, b


def _empty_rows(n):
    # the contradictory pair e1'z <= -1, -e1'z <= -1 keeps rows normalized
    A = np.zeros((2, max(n, 1)))[:, :n]
    if n:
        A[0, 0], A[1, 0] = 1.0, -1.0
    return A, np.array([-1.0, -1.0])


def lp_support(c, P):
    """Return ``(max c'z over P, argmax)``."""
    status, value, z = LinearProgram(P.A, P.b).maximize(c)
    if status == INFEASIBLE:
        raise InfeasibleError("empty_set", "support query on an empty set")
    if status == UNBOUNDED:
        raise NumericalError("unbounded", "support function is +inf in this direction")
    return value, z


def _check_dims(P, Q):
    if P.dim != Q.dim:
        raise ValueError(f"dimension mismatch: {P.dim} vs {Q.dim}")


def intersect(P, Q, prune=True):
    _check_dims(P, Q)
    R = Polyhedron(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]))
    return remove_redundant(R) if prune else R


def affine_preimage(M, P, offset=None):
    """``{x : M x + offset in P}``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != P.dim:
        raise ValueError(f"M has {M.shape[0]} rows, P has dim {P.dim}")
    b = P.b if offset is None else P.b - P.A @ np.asarray(offset, dtype=float)
    return Polyhedron(P.A @ M, b)


def embed(P, n_total, indices):
    """Lift P into ``R^n_total`` with P's coordinates placed at ``indices``."""
    A = np.zeros((P.n_rows, n_total))
    A[:, list(indices)] = P.A
    return Polyhedron(A, P.b)


def _dedup(A, b):
    if A.shape[0] < 2:
        return A, b
    key = np.round(A, 10)
    order = np.lexsort(np.column_stack([b, key[:, ::-1]]).T)
    key, A, b = key[order], A[order], b[order]
    first = np.ones(A.shape[0], dtype=bool)
    first[1:] = np.any(key[1:] != key[:-1], axis=1)
    # within a group the smallest b sorts first
    return A[first], b[first]


def _chebyshev_center(A, b):
    """Interior point and radius; radius <= 0 for flat or empty sets."""
    n = A.shape[1]
    aug = np.hstack([A, np.ones((A.shape[0], 1))])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    lp = LinearProgram(np.vstack([aug, c]), np.concatenate([b, [1.0]]))
    status, value, z = lp.maximize(c)
    if status != OPTIMAL:
        return None, -np.inf
    return z[:n], value


def _ray_certified(A, b, center, dirs, chunk=1024):
    """Rows hit first by rays from an interior point are facets.

    ``dirs`` holds one ray direction per column; ties are not certified.
    """
    m, n = A.shape
    certified = np.zeros(m, dtype=bool)
    if n == 0 or m < 2:
        return certified
    slack = b - A @ center
    for k in range(0, dirs.shape[1], chunk):
        rate = A @ dirs[:, k:k + chunk]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(rate > 1e-12, slack[:, None] / rate, np.inf)
        two = np.partition(t, 1, axis=0)[:2]
        best = np.argmin(t, axis=0)
        ok = np.isfinite(two[0]) & (two[1] - two[0] > 1e-9 * np.maximum(1.0, np.abs(two[0])))
        certified[best[ok]] = True
    return certified


def remove_redundant(P, tol=None):
    """Drop implied rows; raises ``empty_set`` if P is empty.

    Full-dimensional sets use Clarkson's scheme: each candidate is tested by
    an LP over the facets found so far, and a ray shot from an interior
    point towards the LP maximizer reveals the next facet. Flat sets fall
    back to one LP per row against all remaining rows.
    """
    tol = TOL.redundancy if tol is None else tol
    A, b = _dedup(np.asarray(P.A), np.asarray(P.b))
    m, n = A.shape
    if m == 0:
        return Polyhedron(A, b)
    full = LinearProgram(A, b)
    if not full.feasible():
        raise InfeasibleError("empty_set", "redundancy removal on an empty set")
    if m == 1:
        return Polyhedron(A, b)
    center, radius = _chebyshev_center(A, b)
    if radius > 1e-9:
        keep = _clarkson(A, b, center, tol, full)
    else:
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            keep[i] = _row_needed(full, A, b, i, tol)
    return Polyhedron(A[keep], b[keep])


def _row_needed(lp, A, b, i, tol):
    """Sequential test of row i against every row still in ``lp``."""
    lp.set_upper(i, b[i] + 1.0)
    status, value, _ = lp.maximize(A[i])
    if status == OPTIMAL and value <= b[i] + tol:
        lp.set_upper(i, INF)
        return False
    lp.set_upper(i, b[i])
    return True


def _clarkson(A, b, center, tol, full):
    m, n = A.shape
    state = np.zeros(m, dtype=np.int8)  # 0 unknown, 1 facet, -1 redundant
    # rays along every row normal and a batch of random directions find most
    # facets up front, leaving few LP-driven discoveries
    rng = np.random.default_rng(0)
    dirs = np.hstack([A.T, rng.standard_normal((n, min(max(64, 4 * m), 4096)))])
    state[_ray_certified(A, b, center, dirs)] = 1
    facets = np.flatnonzero(state == 1)
    slack_c = b - A @ center

    # row 0 is a probe whose coefficients are swapped per test; facets are
    # appended as they are found so the LP keeps its warm basis
    lp = LinearProgram(np.vstack([np.zeros((1, n)), A[facets]]), np.concatenate([[0.0], b[facets]]))

    for i in range(m):
        if state[i] != 0:
            continue
        for _ in range(m + 1):
            lp.set_row(0, A[i], b[i] + 1.0)
            status, value, z = lp.maximize(A[i])
            if status == OPTIMAL and value <= b[i] + tol:
                state[i] = -1
                break
            d = z - center
            live = state >= 0
            rate = A @ d
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(live & (rate > 1e-12), slack_c / rate, np.inf)
            order = np.argsort(t, kind="stable")[:2]
            j = int(order[0])
            if not np.isfinite(t[j]) or t[order[1]] - t[j] <= 1e-9 * max(1.0, abs(t[j])):
                # ambiguous hit: decide row i directly against all live rows
                for r in np.flatnonzero(state < 0):
                    full.set_upper(r, INF)
                state[i] = 1 if _row_needed(full, A, b, i, tol) else -1
                if state[i] == 1:
                    lp.add_rows(A[i:i + 1], b[i:i + 1])
                break
            state[j] = 1
            lp.add_rows(A[j:j + 1], b[j:j + 1])
            if j == i:
                break
        else:
            raise NumericalError("redundancy_stalled", f"row {i} never resolved")
    return state == 1


def _adjacent_pairs(A, b, pos, neg):
    """(pos, neg) row pairs whose facets share a ridge, or None.

    A projected facet can only come from two facets meeting in a ridge, which
    carries at least ``d - 1`` vertices of the (lineality-free) polytope. The
    vertices come from Qhull's halfspace intersection; any failure returns
    None and the caller combines every pair.
    """
    L = null_space(A)
    Q = null_space(L.T) if L.shape[1] else np.eye(A.shape[1])
    Ar = A @ Q
    d = Ar.shape[1]
    if not 2 <= d <= _ADJACENCY_MAX_DIM:
        return None
    norms = np.linalg.norm(Ar, axis=1)
    if np.any(norms < 1e-9):
        return None
    Ar, br = Ar / norms[:, None], b / norms
    center, radius = _chebyshev_center(Ar, br)
    if not radius > 1e-7 or not np.isfinite(radius):
        return None
    try:
        hs = HalfspaceIntersection(np.hstack([Ar, -br[:, None]]), center)
        verts = hs.intersections
    except Exception:
        return None
    if not np.all(np.isfinite(verts)):
        return None
    scale = max(1.0, float(np.max(np.abs(verts))))
    tight = (br[None, :] - verts @ Ar.T) <= 1e-7 * scale
    common = tight[:, pos].T.astype(np.int32) @ tight[:, neg].astype(np.int32)
    ip, ineg = np.nonzero(common >= d - 1)
    return ip, ineg


def _elimination_cost(A, j):
    col = A[:, j]
    return int(np.sum(col > _ZERO_ROW)) * int(np.sum(col < -_ZERO_ROW))


def project_fm(P, keep, max_rows=_DEFAULT_BLOWUP_CAP, log=None, prune_input=True):
    """Project P onto the coordinates in ``keep`` (result ordered as ``keep``).

    ``prune_input=False`` skips the initial redundancy pass, for callers that
    know P is already (nearly) irredundant; the result is the same set.
    """
    keep = [int(k) for k in keep]
    if not keep or len(set(keep)) != len(keep) or min(keep) < 0 or max(keep) >= P.dim:
        raise ValueError(f"invalid keep indices {keep} for dim {P.dim}")
    cols = list(range(P.dim))
    cur = remove_redundant(P) if prune_input else P
    A, b = np.array(cur.A), np.array(cur.b)
    while len(cols) > len(keep):
        candidates = [c for c in cols if c not in keep]
        costs = [_elimination_cost(A, cols.index(c)) for c in candidates]
        var = candidates[int(np.argmin(costs))]
        j = cols.index(var)
        col = A[:, j]
        pos, neg = col > _ZERO_ROW, col < -_ZERO_ROW
        zero = ~(pos | neg)
        Ap, bp, An, bn = A[pos], b[pos], A[neg], b[neg]
        pairs = None
        if pos.sum() * neg.sum() > _ADJACENCY_MIN_PAIRS:
            pairs = _adjacent_pairs(A, b, pos, neg)
        if pairs is None:
            ip, ineg = np.divmod(np.arange(Ap.shape[0] * An.shape[0]), An.shape[0])
        else:
            ip, ineg = pairs
        n_new = ip.size + int(zero.sum())
        if n_new > max_rows:
            raise NumericalError("projection_blowup", f"{n_new} rows exceeds cap {max_rows}")
        cp = Ap[ip, j][:, None]
        cn = -An[ineg, j][:, None]
        combo = cn * Ap[ip] + cp * An[ineg]
        combo_b = cn[:, 0] * bp[ip] + cp[:, 0] * bn[ineg]
        A = np.vstack([A[zero], combo])
        b = np.concatenate([b[zero], combo_b])
        A = np.delete(A, j, axis=1)
        cols.pop(j)
        if log is not None:
            log(var, int(pos.sum()), int(neg.sum()), A.shape[0])
        reduced = remove_redundant(Polyhedron(A, b))
        A, b = np.array(reduced.A), np.array(reduced.b)
    order = [cols.index(k) for k in keep]
    return Polyhedron(A[:, order], b)


def contains(P, Q, tol=None):
    """True iff Q is a subset of P (up to ``tol``)."""
    tol = TOL.containment if tol is None else tol
    _check_dims(P, Q)
    if Q.n_rows and Q.is_empty():
        return True
    lp = LinearProgram(Q.A, Q.b)
    for a, bi in zip(P.A, P.b):
        status, value, _ = lp.maximize(a)
        if status == UNBOUNDED or value > bi + tol:
            return False
    return True


def strict_contains(P, Q, margin=1e-6):
    """True iff every row of P keeps a gap of at least ``margin`` over Q."""
    _check_dims(P, Q)
    if Q.n_rows and Q.is_empty():
        return True
    lp = LinearProgram(Q.A, Q.b)
    for a, bi in zip(P.A, P.b):
        status, value, _ = lp.maximize(a)
        if status == UNBOUNDED or value > bi - margin:
            return False
    return True


def equal(P, Q, tol=None):
    return contains(P, Q, tol) and contains(Q, P, tol)


def slice_set(P, values, fixed=None, prune=True):
    """Section of P with the coordinates ``fixed`` pinned to ``values``.

    ``fixed`` defaults to the leading coordinates. An empty section is
    returned unpruned (its rows are simply inconsistent).
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    fixed = list(range(values.size)) if fixed is None else [int(i) for i in fixed]
    free = [i for i in range(P.dim) if i not in fixed]
    S = Polyhedron(P.A[:, free], P.b - P.A[:, fixed] @ values)
    if prune and S.n_rows and not S.is_empty():
        return remove_redundant(S)
    return S


def bounding_box(P):
    lo, hi = np.full(P.dim, -np.inf), np.full(P.dim, np.inf)
    lp = LinearProgram(P.A, P.b)
    for i in range(P.dim):
        e = np.zeros(P.dim)
        e[i] = 1.0
        s, v, _ = lp.maximize(e)
        if s == INFEASIBLE:
            raise InfeasibleError("empty_set", "bounding box of an empty set")
        hi[i] = v
        s, v, _ = lp.maximize(-e)
        lo[i] = -v
    return lo, hi


def canonical(P):
    """Rows in lexicographic order of ``(a_1, ..., a_n, b)``."""
    M = np.column_stack([P.A, P.b])
    order = np.lexsort(M.T[::-1])
    return Polyhedron(P.A[order], P.b[order])


def write_poly(P, path, comment=None):
    P = canonical(P)
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"{P.n_rows} {P.dim}")
    for a, bi in zip(P.A, P.b):
        lines.append(" ".join(repr(float(v)) for v in (*a, bi)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_poly(path):
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    m, n = (int(t) for t in lines[0].split())
    data = np.array([[float(t) for t in ln.split()] for ln in lines[1 : 1 + m]]).reshape(m, n + 1)
    return Polyhedron(data[:, :n], data[:, n])


def read_poly_header(path):
    """Parse ``key=value`` pairs from leading comment lines."""
    meta = {}
    for ln in Path(path).read_text().splitlines():
        if not ln.startswith("#"):
            break
        for tok in ln[1:].split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k] = v
    return meta
