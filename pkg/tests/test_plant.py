import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feasgov.errors import AssumptionError
from feasgov.plant import (
    ConstraintSet,
    LtiModel,
    admissible_reference_set,
    equilibrium_basis,
    equilibrium_matrix,
    select_v_star,
    sigma_set,
)
from feasgov.polyhedra import Polyhedron, equal, lp_support


def integrator():
    return LtiModel([[1.0]], [[1.0]], [[1.0], [0.0]], [[0.0], [1.0]], [[1.0]], [[0.0]])


def test_double_integrator_basis(di_y1):
    b = di_y1.basis
    np.testing.assert_allclose(b.G_x, [[1.0], [0.0]], atol=1e-12)
    np.testing.assert_allclose(b.G_u, [[0.0]], atol=1e-12)
    np.testing.assert_allclose(b.G_z, [[1.0]])
    np.testing.assert_allclose(b.G_y, [[1.0], [0.0], [0.0]], atol=1e-12)


def test_static_gain_basis():
    # x+ = u, z = x: every equilibrium has x = u = z
    m = LtiModel([[0.0]], [[1.0]], [[1.0]], [[0.0]], [[1.0]], [[0.0]])
    b = equilibrium_basis(m)
    np.testing.assert_allclose([b.G_x[0, 0], b.G_u[0, 0], b.G_z[0, 0]], [1, 1, 1], atol=1e-12)


def test_vehicle_basis(vehicle):
    b = vehicle.basis
    assert b.n_v == 1
    np.testing.assert_allclose(b.G_z, [[1.0]])
    Z = equilibrium_matrix(vehicle.model)
    G = np.vstack([b.G_x, b.G_u, b.G_z])
    assert np.linalg.norm(Z @ G) <= 1e-9


def test_reference_set_scalar_integrator(fig2):
    assert equal(fig2.Veps, Polyhedron.from_box([-0.8], [0.8]))


def test_reference_set_shrinks():
    m = integrator()
    Y = ConstraintSet.box([-1, -0.25], [1, 0.25])
    b = equilibrium_basis(m)
    widths = [lp_support(np.ones(1), admissible_reference_set(b, Y, e)[0])[0] for e in (0.1, 0.5, 0.9, 0.999)]
    assert np.all(np.diff(widths) < 0) and widths[-1] < 2e-3


def test_reference_set_di(di_y1):
    assert equal(di_y1.Veps, Polyhedron.from_box([-0.95], [0.95]))


def test_sigma_segment(fig2):
    S = fig2.Sigma
    for v in np.linspace(-0.8, 0.8, 9):
        assert S.contains_point([v, v])
    assert not S.contains_point([0.1, 0.0])
    assert not S.contains_point([0.9, 0.9])


def test_sigma_support(di_y1):
    assert lp_support(np.array([0, 0, 1.0]), di_y1.Sigma)[0] == pytest.approx(0.95)


class TestVStar:
    def test_interior(self, di_y1):
        assert select_v_star(di_y1.basis, di_y1.Veps, [0.75])[0] == pytest.approx(0.75, abs=1e-10)

    def test_clipped(self, fig2):
        assert select_v_star(fig2.basis, fig2.Veps, [4.0])[0] == pytest.approx(0.8, abs=1e-10)

    def test_non_injective_min_norm(self):
        from feasgov.plant import EquilibriumBasis

        b = EquilibriumBasis(G_x=np.eye(2), G_u=np.zeros((1, 2)), G_z=np.array([[1.0, 0.0]]), G_y=np.eye(2))
        V = Polyhedron.from_box([-1, -1], [1, 1])
        np.testing.assert_allclose(select_v_star(b, V, [0.3]), [0.3, 0.0], atol=1e-6)


@given(st.floats(-0.95, 0.95))
def test_equilibria_are_fixed_points(v):
    syn = _di()
    b, m = syn.basis, syn.model
    x, u, z = b.equilibrium([v])
    np.testing.assert_allclose(m.step(x, u), x, atol=1e-12)
    np.testing.assert_allclose(m.tracked(x, u), z, atol=1e-12)
    assert syn.Yset.margin(m.output(x, u)) - 0.05 * np.min(syn.Yset.h) >= -1e-9


_CACHE = {}


def _di():
    from feasgov.scenario import load_scenario, synthesize

    if "di" not in _CACHE:
        _CACHE["di"] = synthesize(load_scenario("di_y1"))
    return _CACHE["di"]


@given(st.floats(-0.9, 0.9))
def test_v_star_reproduces_reachable_reference(r):
    syn = _di()
    v = select_v_star(syn.basis, syn.Veps, [r])
    assert abs(syn.basis.G_z @ v - r)[0] <= 1e-8


class TestConstraintSet:
    def test_origin_interior(self):
        with pytest.raises(AssumptionError) as exc:
            ConstraintSet.box([0.0], [1.0])
        assert exc.value.code == "origin_not_interior"

    def test_unbounded(self):
        with pytest.raises(AssumptionError) as exc:
            ConstraintSet([[1.0, 0.0]], [1.0])
        assert exc.value.code == "not_compact"

    def test_margin(self):
        Y = ConstraintSet.box([-1, -2], [1, 2])
        assert Y.margin([0.5, 0.0]) == pytest.approx(0.5)
        assert Y.margin([1.5, 0.0]) == pytest.approx(-0.5)


def test_shape_checks():
    with pytest.raises(ValueError):
        LtiModel(np.eye(2), np.ones((2, 1)), np.eye(2), np.zeros((2, 2)), np.eye(2), np.zeros((2, 1)))


def test_not_stabilizable():
    m = LtiModel(2 * np.eye(2), [[1.0], [0.0]], np.eye(2), np.zeros((2, 1)), [[1.0, 0.0]], [[0.0]])
    with pytest.raises(AssumptionError) as exc:
        m.check_stabilizable()
    assert exc.value.code == "not_stabilizable"
