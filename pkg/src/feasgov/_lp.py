"""Thin wrapper around HiGHS for the many small LPs of the set calculus.

One ``LinearProgram`` holds ``{z : A z <= b}`` with free variables. The
objective and individual row bounds can be changed between solves, so the
redundancy and containment loops re-solve from a warm basis instead of
rebuilding the model.
"""
import numpy as np
import highspy
import scipy.sparse as sp

INF = highspy.kHighsInf
_MS = highspy.HighsModelStatus

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class LinearProgram:
    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        self.m, self.n = A.shape
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("primal_feasibility_tolerance", 1e-9)
        h.setOptionValue("dual_feasibility_tolerance", 1e-9)
        h.addVars(self.n, np.full(self.n, -INF), np.full(self.n, INF))
        if self.m:
            csr = sp.csr_matrix(A)
            h.addRows(
                self.m,
                np.full(self.m, -INF),
                b,
                csr.nnz,
                csr.indptr[:-1].astype(np.int32),
                csr.indices.astype(np.int32),
                csr.data,
            )
        self._h = h
        self._cols = np.arange(self.n, dtype=np.int32)
        self._feasible = None

    def add_rows(self, A, b):
        """Append rows ``A z <= b``; the current basis is kept."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        csr = sp.csr_matrix(A)
        self._h.addRows(
            A.shape[0], np.full(A.shape[0], -INF), b, csr.nnz,
            csr.indptr[:-1].astype(np.int32), csr.indices.astype(np.int32), csr.data,
        )
        self.m += A.shape[0]
        self._feasible = None

    def set_upper(self, i, value):
        self._h.changeRowBounds(int(i), -INF, float(value))
        self._feasible = None if value < INF else self._feasible

    def set_row(self, i, coeffs, upper):
        """Overwrite row i's coefficients and upper bound."""
        for j, v in enumerate(np.asarray(coeffs, dtype=float)):
            self._h.changeCoeff(int(i), j, float(v))
        self._h.changeRowBounds(int(i), -INF, float(upper))
        self._feasible = None

    def _run(self, c):
        self._h.changeColsCost(self.n, self._cols, np.asarray(c, dtype=float))
        self._h.run()
        return self._h.getModelStatus()

    def feasible(self):
        if self._feasible is None:
            status = self._run(np.zeros(self.n))
            if status == _MS.kModelEmpty:
                self._feasible = True
            else:
                self._feasible = status == _MS.kOptimal
        return self._feasible

    def maximize(self, c):
        """Return ``(status, value, argmax)``."""
        c = np.asarray(c, dtype=float)
        if self.m == 0:
            if np.any(c != 0):
                return UNBOUNDED, np.inf, None
            return OPTIMAL, 0.0, np.zeros(self.n)
        status = self._run(-c)
        if status == _MS.kOptimal:
            x = np.array(self._h.getSolution().col_value)
            return OPTIMAL, float(c @ x), x
        if status == _MS.kInfeasible:
            return INFEASIBLE, -np.inf, None
        if status in (_MS.kUnbounded, _MS.kUnboundedOrInfeasible):
            if self.feasible():
                return UNBOUNDED, np.inf, None
            return INFEASIBLE, -np.inf, None
        # HiGHS occasionally stalls on degenerate warm starts; retry cold
        self._h.clearSolver()
        status = self._run(-c)
        if status == _MS.kOptimal:
            x = np.array(self._h.getSolution().col_value)
            return OPTIMAL, float(c @ x), x
        raise RuntimeError(f"LP solver returned status {status}")


def solve_lp(c, A_ub, b_ub):
    """Minimize ``c'z`` over ``A_ub z <= b_ub``; returns ``(status, value, z)``."""
    lp = LinearProgram(A_ub, b_ub)
    status, value, z = lp.maximize(-np.asarray(c, dtype=float))
    return status, -value, z
