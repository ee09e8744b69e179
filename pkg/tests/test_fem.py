import numpy as np
import pytest

from lamegap.asymptotics import aux_scalar
from lamegap.elasticity import LameParameters, rigid_basis
from lamegap.fem import (
    AssemblyError, DisplacementField, assemble, gradient_at, interpolate, l2_error, locate,
    solve_dirichlet, solve_dirichlet_many, strain_energy_product, value_at,
)
from lamegap.harness.acceptance import convergence_orders
from lamegap.mesh import Mesh, rectangle_mesh

P = LameParameters(1.3, 0.7)


def reference_triangle() -> Mesh:
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    T = np.array([[0, 1, 2]])
    E = np.array([[0, 1], [1, 2], [2, 0]])
    return Mesh(V, T, E, np.array(["OUTER"] * 3))


def test_reference_element_kernel():
    sysm = assemble(reference_triangle(), P, order=1)
    Ke = sysm.Ke[0]
    assert Ke.shape == (6, 6)
    for c in range(2):
        t = np.zeros(6)
        t[c::2] = 1.0
        np.testing.assert_allclose(Ke @ t, 0.0, atol=1e-14)
    rot = interpolate(sysm.space, rigid_basis(2)[2])
    assert abs(rot.values @ Ke @ rot.values) < 1e-12


@pytest.mark.parametrize("order", [1, 2])
def test_two_element_patch_rank(order):
    sysm = assemble(rectangle_mesh(1, 1), P, order)
    K = sysm.K.toarray()
    np.testing.assert_allclose(K, K.T, atol=1e-14)
    w = np.linalg.eigvalsh(K)
    assert int(np.sum(np.abs(w) < 1e-10 * np.abs(w).max())) == 3


@pytest.mark.parametrize("order", [1, 2])
def test_patch_test_exact(order):
    A = np.array([[0.3, -0.7], [1.1, 0.2]])
    b = np.array([0.5, -2.0])
    sysm = assemble(rectangle_mesh(4, 3, 1.0, 0.8), P, order)
    u = solve_dirichlet(sysm, {"OUTER": lambda x: x @ A.T + b})
    assert np.abs(u.nodal - (sysm.space.nodes @ A.T + b)).max() <= 1e-10
    for x in ([0.37, 0.61], [0.9, 0.1], [0.5, 0.4]):
        np.testing.assert_allclose(gradient_at(u, x), A, atol=1e-10)


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_rigid_data_gives_rigid_solution(alpha):
    sysm = assemble(rectangle_mesh(3, 3), P, 2)
    psi = rigid_basis(2)[alpha - 1]
    u = solve_dirichlet(sysm, {"OUTER": psi})
    np.testing.assert_allclose(u.nodal, psi(sysm.space.nodes), atol=1e-10)
    assert abs(strain_energy_product(sysm, u, u)) <= 1e-12


def test_rotation_gradient():
    sysm = assemble(rectangle_mesh(2, 2), P, 2)
    f = interpolate(sysm.space, rigid_basis(2)[2])
    np.testing.assert_allclose(gradient_at(f, [0.3, 0.7]), [[0, 1], [-1, 0]], atol=1e-14)


def test_energy_product_properties(rng):
    sysm = assemble(rectangle_mesh(3, 3), P, 2)
    lin = interpolate(sysm.space, lambda x: np.column_stack([x[:, 0], 0 * x[:, 0]]))
    assert strain_energy_product(sysm, lin, lin) == pytest.approx(P.lam + 2 * P.mu, rel=1e-12)
    a = DisplacementField(sysm.space, rng.standard_normal(sysm.space.n_dofs))
    b = DisplacementField(sysm.space, rng.standard_normal(sysm.space.n_dofs))
    ab, ba = strain_energy_product(sysm, a, b), strain_energy_product(sysm, b, a)
    bound = 1e-14 * np.sqrt(strain_energy_product(sysm, a, a) * strain_energy_product(sysm, b, b))
    assert abs(ab - ba) <= max(bound, 1e-13 * abs(ab))
    for psi in rigid_basis(2):
        r = interpolate(sysm.space, psi)
        assert abs(strain_energy_product(sysm, r, a)) <= 1e-12 * max(1.0, abs(strain_energy_product(sysm, a, a)))


def test_energy_region_restriction():
    sysm = assemble(rectangle_mesh(4, 4), P, 1)
    lin = interpolate(sysm.space, lambda x: np.column_stack([x[:, 0], 0 * x[:, 0]]))
    half = strain_energy_product(sysm, lin, lin, region=lambda c: c[:, 0] < 0.5)
    assert half == pytest.approx(0.5 * (P.lam + 2 * P.mu), rel=1e-12)


@pytest.mark.parametrize("order,rate", [(1, 2.0), (2, 3.0)])
def test_manufactured_convergence(order, rate):
    orders = convergence_orders(order)
    assert abs(orders[-1] - rate) <= 0.1 * rate


def test_aux_interpolant_gradient_at_gap_midpoint(mesh_001, square_001):
    g = square_001
    sysm = assemble(mesh_001, LameParameters(1, 1), 2)

    def vbar(x):
        out = np.zeros((len(x), 2))
        near = np.abs(x[:, 0]) < 0.5
        for k in np.flatnonzero(near):
            out[k, 0] = aux_scalar(g, x[k])[0]
        return out

    f = interpolate(sysm.space, vbar)
    G = gradient_at(f, (0.0, g.epsilon / 2))
    assert G[0, 1] == pytest.approx(1 / g.epsilon, rel=1e-3)
    assert abs(G[0, 0]) < 1e-2 / g.epsilon


def test_locate_and_value(rng):
    sysm = assemble(rectangle_mesh(2, 2), P, 2)
    f = interpolate(sysm.space, lambda x: np.column_stack([x[:, 0] ** 2, x[:, 1]]))
    np.testing.assert_allclose(value_at(f, [0.3, 0.6]), [0.09, 0.6], atol=1e-14)
    with pytest.raises(ValueError):
        locate(sysm.space, np.array([2.0, 2.0]))
    assert l2_error(f, lambda x: np.column_stack([x[:, 0] ** 2, x[:, 1]])) < 1e-14


def test_solve_many_requires_same_tags():
    sysm = assemble(rectangle_mesh(2, 2), P, 1)
    zero = lambda x: np.zeros((len(x), 2))  # noqa: E731
    with pytest.raises(ValueError):
        solve_dirichlet_many(sysm, [{"OUTER": zero}, {}])


def test_inverted_element_rejected():
    m = reference_triangle()
    m.triangles = m.triangles[:, [0, 2, 1]]
    with pytest.raises(AssemblyError):
        assemble(m, P, 1)
