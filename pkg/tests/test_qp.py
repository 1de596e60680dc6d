import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feasgov.qp import QpProblem, feasibility_phase1, kkt_residuals, solve_qp


def enumerate_active_sets(p):
    """Brute-force oracle: best KKT point over all 2^m candidate active sets."""
    d, m = p.n_var, p.n_con
    best = None
    for k in range(min(d, m) + 1):
        for S in itertools.combinations(range(m), k):
            S = list(S)
            AS = p.A[S]
            K = np.block([[p.H, AS.T], [AS, np.zeros((k, k))]])
            rhs = np.concatenate([-p.f, p.b[S]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            z, lam = sol[:d], sol[d:]
            if np.any(lam < -1e-9) or np.any(p.A @ z > p.b + 1e-9):
                continue
            val = p.objective(z)
            if best is None or val < best[0] - 1e-12:
                best = (val, z)
    return best


def random_qp(rng, d, m):
    M = rng.normal(size=(d, d))
    H = M @ M.T + 0.1 * np.eye(d)
    f = rng.normal(size=d)
    A = rng.normal(size=(m, d))
    z0 = rng.normal(size=d)
    # b keeps a known point strictly feasible roughly half the time
    b = A @ z0 + rng.uniform(-0.5, 1.0, size=m)
    return QpProblem(H, f, A, b)


@pytest.mark.parametrize("seed", range(200))
def test_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    d, m = int(rng.integers(1, 5)), int(rng.integers(1, 9))
    p = random_qp(rng, d, m)
    oracle = enumerate_active_sets(p)
    sol = solve_qp(p)
    if oracle is None:
        assert sol.status == "infeasible"
        return
    assert sol.ok
    np.testing.assert_allclose(sol.z, oracle[1], atol=1e-6)
    assert sol.kkt_residual <= 1e-8


def test_scalar_lower_bound():
    sol = solve_qp(QpProblem([[1.0]], [0.0], [[-1.0]], [-1.0]))
    assert sol.z[0] == pytest.approx(1.0)
    assert sol.lam[0] == pytest.approx(1.0)


def test_unconstrained():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    f = np.array([1.0, -1.0])
    sol = solve_qp(QpProblem(H, f, np.zeros((0, 2)), np.zeros(0)))
    np.testing.assert_allclose(sol.z, -np.linalg.solve(H, f))


def test_box_projection():
    A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    sol = solve_qp(QpProblem(np.eye(2), [-2.0, -0.5], A, np.ones(4)))
    np.testing.assert_allclose(sol.z, [1.0, 0.5], atol=1e-12)
    np.testing.assert_allclose(sol.lam, [1, 0, 0, 0], atol=1e-12)


def test_infeasible():
    sol = solve_qp(QpProblem([[1.0]], [0.0], [[1.0], [-1.0]], [-1.0, -1.0]))
    assert sol.status == "infeasible" and not sol.ok


@given(st.integers(0, 100_000))
def test_warm_start_same_answer(seed):
    rng = np.random.default_rng(seed)
    p = random_qp(rng, 3, 8)
    cold = solve_qp(p)
    if not cold.ok:
        return
    q = QpProblem(p.H, p.f, p.A, p.b + rng.uniform(-1e-3, 1e-3, size=p.n_con))
    again = solve_qp(q)
    warm = solve_qp(q, warm_start=cold.active)
    assert warm.status == again.status
    if again.ok:
        np.testing.assert_allclose(warm.z, again.z, atol=1e-8)


def test_warm_start_not_slower_on_mpc_stream(di_y1):
    from feasgov.mpc import condense
    from feasgov.sim import simulate

    log = simulate(di_y1, "fg", steps=40)
    mpc = condense(di_y1.model, di_y1.basis, di_y1.terminal, di_y1.Yset, 10, di_y1.Q, di_y1.R)
    prev = None
    for x, v in zip(log.x, log.v):
        p = mpc.qp(x, v)
        cold = solve_qp(p)
        if prev is not None:
            warm = solve_qp(p, warm_start=prev)
            assert warm.ok and warm.iterations <= cold.iterations
            np.testing.assert_allclose(warm.z, cold.z, atol=1e-8)
        prev = cold.active


def test_deterministic():
    rng = np.random.default_rng(5)
    p = random_qp(rng, 4, 8)
    a, b = solve_qp(p), solve_qp(p)
    np.testing.assert_array_equal(a.z, b.z)
    assert a.active == b.active


def test_relative_kkt_is_scale_free():
    rng = np.random.default_rng(1)
    p = random_qp(rng, 3, 6)
    sol = solve_qp(p)
    big = QpProblem(1e6 * p.H, 1e6 * p.f, p.A, p.b)
    sol_big = solve_qp(big)
    r1 = max(kkt_residuals(p, sol.z, sol.lam, relative=True))
    r2 = max(kkt_residuals(big, sol_big.z, sol_big.lam, relative=True))
    assert r1 <= 1e-10 and r2 <= 1e-10


class TestPhase1:
    def test_half_line(self):
        ok, w = feasibility_phase1([[1.0]], [1.0])
        assert ok and w[0] <= 1 + 1e-9

    def test_contradiction(self):
        ok, _ = feasibility_phase1([[1.0], [-1.0]], [-1.0, -1.0])
        assert not ok

    def test_di_initial_condition_needs_governor(self, di_y1):
        from feasgov.mpc import theta_feasible

        assert not theta_feasible(di_y1.model, di_y1.Yset, di_y1.terminal.T, 10, [-1.0, 0.0], [0.75])
