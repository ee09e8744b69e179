import json

import numpy as np
import pytest

from lamegap.asymptotics import aux_field_gradient
from lamegap.decomposition import (
    PHI_PRESETS, BlowupFactorSet, assemble_block_system, cramer_solve, dump_json, factor_entries,
    flux_residual, reconstruct_solution, reduced_matrices, regular_part_diagnostics,
    solve_basis_fields, solve_free_constants,
)
from lamegap.elasticity import rigid_basis
from lamegap.fem import assemble, gradient_at


@pytest.fixture(scope="module")
def system(mesh_001, unit_lame):
    return assemble(mesh_001, unit_lame, 2)


@pytest.fixture(scope="module")
def fields(mesh_001, square_001, unit_lame, system):
    return solve_basis_fields(mesh_001, square_001, unit_lame, PHI_PRESETS["x1_x2"], system=system)


@pytest.fixture(scope="module")
def zero_fields(mesh_001, square_001, unit_lame, system):
    return solve_basis_fields(mesh_001, square_001, unit_lame, PHI_PRESETS["zero"], system=system)


@pytest.fixture(scope="module")
def factors(fields):
    return factor_entries(fields)


def test_zero_data_gives_zero_v0(zero_fields):
    assert np.abs(zero_fields.v0.values).max() == 0.0


def test_sum_fields_carry_rigid_data(fields):
    space = fields.system.space
    psi = rigid_basis(2)
    outer = space.boundary_nodes("OUTER")
    for a in (1, 2, 3):
        s = fields.sum_field(a).nodal
        for tag in ("D1", "D2"):
            nodes = space.boundary_nodes(tag)
            np.testing.assert_allclose(s[nodes], psi[a - 1](space.nodes[nodes]), atol=1e-13)
        np.testing.assert_allclose(s[outer], 0.0, atol=1e-13)


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_v1_tracks_auxiliary_field(fields, square_001, alpha):
    x = (0.0, square_001.epsilon / 2)
    ref = aux_field_gradient(square_001, alpha, x)
    err = np.linalg.norm(gradient_at(fields.v[1, alpha], x) - ref) / np.linalg.norm(ref)
    assert err <= 0.2


def test_factor_structure(factors):
    n = factors.n
    assert n == 3
    for a in range(n):
        assert factors.a[0, 0, a, a] > 0
    assert factors.symmetry_defect() <= 1e-8
    F, Y = assemble_block_system(factors)
    assert F.shape == (6, 6) and Y.shape == (6,)
    np.testing.assert_allclose(factors.C, factors.B.T, rtol=0, atol=1e-8 * np.abs(factors.B).max())
    assert np.all(np.linalg.eigvalsh(F) > 0)


def test_zero_data_loads_vanish(zero_fields):
    fs = factor_entries(zero_fields)
    assert np.all(fs.b == 0)
    assert np.all(fs.Y == 0)
    X = solve_free_constants(fs.F, fs.Y)
    assert np.all(X.X1 == 0) and np.all(X.X2 == 0)
    rec = reconstruct_solution(zero_fields, X, [(0.0, 0.005)])
    assert np.abs(rec.u.values).max() == 0.0
    diag = regular_part_diagnostics(zero_fields, X, zero_fields.geometry)
    assert diag["max_regular"] == 0.0


def test_identity_system():
    Y = np.arange(1.0, 7.0)
    X = solve_free_constants(np.eye(6), Y)
    np.testing.assert_allclose(np.concatenate([X.X1, X.X2]), Y)


def test_cramer_matches_direct(rng):
    Q = rng.standard_normal((6, 6))
    F = Q @ Q.T + 6 * np.eye(6)
    Y = rng.standard_normal(6)
    np.testing.assert_allclose(cramer_solve(F, Y), np.linalg.solve(F, Y), rtol=1e-10, atol=1e-12)
    X = solve_free_constants(F, Y)
    assert X.cramer_agreement() <= 1e-10


def test_singular_system_rejected():
    F = np.ones((6, 6))
    with pytest.raises(np.linalg.LinAlgError):
        solve_free_constants(F, np.ones(6))


def test_reduced_matrix_shapes(factors):
    F0, F1 = reduced_matrices(factors.F, factors.Y)
    assert F0.shape == (4, 4)
    assert [M.shape for M in F1] == [(5, 5), (5, 5), (4, 4)]
    np.testing.assert_allclose(F1[2][:, 1:], F0[:, 1:])


def test_reconstruction_is_rigid_on_inclusions(fields, factors):
    X = solve_free_constants(factors.F, factors.Y)
    rec = reconstruct_solution(fields, X)
    space = fields.system.space
    psi = rigid_basis(2)
    for tag, C in (("D1", X.C1), ("D2", X.C2)):
        nodes = space.boundary_nodes(tag)
        pts = space.nodes[nodes]
        expect = sum(C[a] * psi[a](pts) for a in range(3))
        np.testing.assert_allclose(rec.u.nodal[nodes], expect, atol=1e-12)
    assert flux_residual(factors, X) <= 1e-8
    assert X.cramer_agreement() <= 1e-8


def test_regular_part_small_at_centre(fields, factors, square_001):
    X = solve_free_constants(factors.F, factors.Y)
    diag = regular_part_diagnostics(fields, X, square_001)
    assert diag["center_ratio"] < 0.1


def test_json_roundtrip(factors):
    d = json.loads(dump_json(factors))
    back = BlowupFactorSet.from_json_dict(d)
    np.testing.assert_array_equal(back.a, factors.a)
    np.testing.assert_array_equal(back.b, factors.b)
    assert back.epsilon == factors.epsilon
    assert "a[1][2][3][1]" in d and "b[2][3]" in d
