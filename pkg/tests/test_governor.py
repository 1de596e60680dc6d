import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feasgov.errors import AssumptionError, InfeasibleError, InvariantViolation
from feasgov.governor import (
    EXACT,
    INJECTIVE,
    SELECTED,
    UNDER_APPROX,
    GovernorState,
    box_underapprox,
    cg_step,
    fg_step,
    fg_step_underapprox,
    init_underapprox,
    lyapunov_value,
    psi,
)
from feasgov.polyhedra import Polyhedron, contains, strict_contains
from feasgov.scenario import feasible_set, feasible_sets

BOX = Polyhedron.from_box([-1, -1], [1, 1])
V1 = Polyhedron.from_box([-0.9], [0.9])


def state_for(syn, F, mode=EXACT):
    return GovernorState(F=F, Veps=syn.Veps, G_z=syn.basis.G_z, r=syn.scenario.r,
                         v_star=syn.v_star, n_x=syn.model.n_x, mode=mode)


def toy_state(r=0.75, G_z=((1.0,),), F=BOX, Veps=V1, v_star=None, mode=EXACT):
    G_z = np.array(G_z)
    v_star = np.zeros(G_z.shape[1]) if v_star is None else v_star
    return GovernorState(F=F, Veps=Veps, G_z=G_z, r=np.atleast_1d(r), v_star=np.atleast_1d(v_star), n_x=1, mode=mode)


class TestPsi:
    def test_values(self):
        s = toy_state()
        assert psi([0.75], [0.75], s) == 0.0
        assert psi([0.5], [0.75], s) == pytest.approx(0.0625)
        assert s.psi_mode == INJECTIVE

    def test_selected_mode(self):
        V = Polyhedron.from_box([-1, -1], [1, 1])
        F = Polyhedron.from_box([-1, -1, -1], [1, 1, 1])
        s = toy_state(r=0.3, G_z=((1.0, 0.0),), F=F, Veps=V, v_star=np.array([0.3, 0.0]))
        assert s.psi_mode == SELECTED
        assert lyapunov_value([0.3, 0.0], s) == 0.0
        assert s.eta == pytest.approx(1.0, abs=1e-8)

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_nonnegative(self, v, r):
        assert psi([v], [r], toy_state(r=r)) >= 0.0

    def test_eta(self):
        assert toy_state(G_z=((2.0,),)).eta == pytest.approx(4.0 - 1e-9)


class TestFgStep:
    def test_unconstrained_optimum(self):
        s = toy_state(r=0.5)
        assert fg_step([0.0], s)[0] == pytest.approx(0.5)

    def test_clipped_by_F(self):
        F = Polyhedron([[1.0, 0.0], [-1, 0], [0, -1], [-1.0, 1.0]], [1, 1, 1, 0.1])
        s = toy_state(r=0.75, F=F)
        assert fg_step([0.2], s)[0] == pytest.approx(0.3, abs=1e-9)

    def test_outside_domain(self):
        s = toy_state()
        with pytest.raises(InfeasibleError) as exc:
            fg_step([3.0], s)
        assert exc.value.code == "state_outside_domain"

    def test_idempotent(self, di_y1):
        s = state_for(di_y1, feasible_set(di_y1, 10))
        x = np.array([-1.0, 0.0])
        v1 = fg_step(x, s)
        v2 = fg_step(x, s)
        np.testing.assert_array_equal(v1, v2)

    def test_di_throttles_then_releases(self, di_y1):
        s = state_for(di_y1, feasible_set(di_y1, 10))
        v0 = fg_step(np.array([-1.0, 0.0]), s)[0]
        assert v0 < 0.75
        assert s.last_solution.kkt_residual <= 1e-8
        v = fg_step(np.array([0.75, 0.0]), s)[0]
        assert v == pytest.approx(0.75, abs=1e-9)

    def test_continuity(self, di_y1):
        # the governor is a parametric QP solution, hence Lipschitz in x
        s = state_for(di_y1, feasible_set(di_y1, 10))
        xs = np.linspace(-1.0, -0.5, 51)
        vs = np.array([fg_step(np.array([x, 0.0]), s)[0] for x in xs])
        assert np.max(np.abs(np.diff(vs))) < 0.1


class TestUnderApprox:
    def test_replan_branch(self):
        s = toy_state(mode=UNDER_APPROX)
        s.v_prev = np.array([0.0])
        assert fg_step_underapprox([0.0], s)[0] == pytest.approx(0.75)

    def test_hold_branch(self):
        s = toy_state(mode=UNDER_APPROX)
        s.v_prev = np.array([0.5])
        np.testing.assert_array_equal(fg_step_underapprox([2.0], s), [0.5])

    def test_requires_init(self):
        s = toy_state(mode=UNDER_APPROX)
        with pytest.raises(AssumptionError) as exc:
            fg_step_underapprox([0.0], s)
        assert exc.value.code == "bad_initialization"

    def test_bad_initialization(self):
        s = toy_state(mode=UNDER_APPROX)
        with pytest.raises(AssumptionError) as exc:
            init_underapprox([5.0], s)
        assert exc.value.code == "bad_initialization"

    def test_gamma5_domain_inside_gamma10(self, di_y1):
        g = feasible_sets(di_y1, 10)
        assert contains(g[10], g[5]) and strict_contains(g[5], di_y1.Sigma)

    def test_box(self):
        G = Polyhedron([[1.0, 1.0], [-1, -1], [1, -1], [-1, 1]], [2, 2, 0.5, 0.5])
        Sigma = Polyhedron.from_box([-0.1, -0.1], [0.1, 0.1])
        B = box_underapprox(G, Sigma)
        assert contains(G, B) and strict_contains(B, Sigma)

    def test_box_cannot_hold_diagonal_sigma(self, di_y1):
        # Sigma runs along x1 = v, so any box holding it pokes out of Gamma
        with pytest.raises(AssumptionError) as exc:
            box_underapprox(feasible_set(di_y1, 10), di_y1.Sigma)
        assert exc.value.code == "under_approx_invalid"

    def test_box_rejects_unbounded(self):
        with pytest.raises(AssumptionError):
            box_underapprox(Polyhedron([[1.0, 0.0]], [1.0]), Polyhedron.from_box([0, 0], [0, 0]))


class TestCg:
    def test_full_step(self):
        np.testing.assert_allclose(cg_step([0.0], [0.0], [0.5], BOX), [0.5])

    def test_no_move(self):
        np.testing.assert_allclose(cg_step([0.3], [0.2], [0.2], BOX), [0.2])

    def test_partial_step(self):
        np.testing.assert_allclose(cg_step([0.0], [0.0], [4.0], BOX), [1.0])

    def test_violation(self):
        with pytest.raises(InvariantViolation) as exc:
            cg_step([2.0], [0.0], [0.5], BOX)
        assert exc.value.code == "cg_invariant_violated"

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-3, 3))
    def test_stays_inside(self, x, v, target):
        out = cg_step([x], [v], [target], BOX)
        assert BOX.contains_point([x, out[0]], 1e-9)
        # never overshoots the target
        assert min(v, target) - 1e-12 <= out[0] <= max(v, target) + 1e-12
