import numpy as np
import pytest

from equideform.errors import PreconditionError
from equideform.equivariance import (nondegeneracy_report, numerical_kernel,
                                     operator_diagnostics, rank_basis,
                                     slice_basis, transversality_margin)
from equideform.mesh import build_grid
from equideform.variational import (CmcCircle, JacobiOperator, ProblemState,
                                    circle_seed, jacobi, killing_jacobi_basis,
                                    pairing, profile_cylinder_seed, residual_norm,
                                    sphere_equator_seed, torus_line_seed)


def _flat_circle(N=64, H=2.0):
    g = build_grid("periodic", N)
    prob, st = circle_seed(0.0, H, g)
    return prob, st


def _w_orthonormality_defect(vectors, w):
    if vectors.shape[1] == 0:
        return 0.0
    G = vectors.T @ (w[:, None] * vectors)
    return float(np.max(np.abs(G - np.eye(vectors.shape[1]))))


# ---------------------------------------------------------------- kernel


def test_kernel_flat_circle_dim_two():
    prob, st = _flat_circle()
    kb = numerical_kernel(jacobi(prob, st, 0.0))
    assert kb.dim == 2
    assert kb.gap > 1e6
    assert not kb.indeterminate
    w = pairing(prob).weights
    assert _w_orthonormality_defect(kb.vectors, w) < 1e-12


def test_kernel_vanishes_after_shift():
    prob, st = _flat_circle()
    J = jacobi(prob, st, 0.0)
    shifted = JacobiOperator(matrix=J.matrix + 0.5 * np.eye(J.matrix.shape[0]),
                             pairing=J.pairing, lambda_hat=0.0)
    kb = numerical_kernel(shifted)
    assert kb.dim == 0
    assert kb.singular_values.size == 0
    assert kb.gap == np.inf


def test_kernel_sphere_equator_dim_three():
    g = build_grid("periodic", 65)
    prob, st = sphere_equator_seed(g)
    kb = numerical_kernel(jacobi(prob, st, 1.0))
    assert kb.dim == 3
    assert kb.gap > 1e3


def test_kernel_tol_rel_validation():
    prob, st = _flat_circle()
    J = jacobi(prob, st, 0.0)
    for bad in (0.0, -1e-9, 2e-2, 1.0):
        with pytest.raises(PreconditionError):
            numerical_kernel(J, tol_rel=bad)
    # the boundary itself is allowed, but such a wide tolerance sweeps in
    # physical eigenvalues and the gap guard has to flag it
    kb = numerical_kernel(J, tol_rel=1e-2)
    assert kb.dim > 2
    assert kb.indeterminate


def test_rank_basis_drops_dependent_vectors():
    rng = np.random.default_rng(7)
    w = np.full(32, 2 * np.pi / 32)
    u = rng.standard_normal(32)
    v = rng.standard_normal(32)
    B = rank_basis([u, 2.0 * u, v], w)
    assert B.shape == (32, 2)
    assert _w_orthonormality_defect(B, w) < 1e-12
    assert rank_basis([], w).shape == (32, 0)


# -------------------------------------------------------- nondegeneracy


def test_nondegeneracy_round_circle():
    g = build_grid("periodic", 64)
    prob, st = circle_seed(1.0, 2.0, g)
    rep = nondegeneracy_report(prob, st, 1.0)
    assert rep.verdict == "nondegenerate"
    assert rep.kernel_dim == 2
    assert rep.killing_rank == 2
    assert rep.max_principal_angle < 1e-6
    assert rep.residual_norm < 1e-8
    pay = rep.to_payload()
    assert pay["verdict"] == "nondegenerate"
    assert len(pay["principal_angles"]) == 2
    assert set(pay["tolerances"]) == {"tol_rel", "angle_tol", "kernel_tolerance"}


def test_nondegeneracy_profile_trivial_kernel():
    g = build_grid("dirichlet", 64, order=4)
    prob, st = profile_cylinder_seed(2.0, g)
    rep = nondegeneracy_report(prob, st, 0.0)
    assert rep.verdict == "nondegenerate"
    assert rep.kernel_dim == 0
    assert rep.killing_rank == 0
    assert rep.principal_angles.size == 0


def test_nondegeneracy_torus_line():
    g = build_grid("periodic", 65)
    prob, st = torus_line_seed((1, 1), g, np.eye(2), np.eye(2))
    rep = nondegeneracy_report(prob, st, 0.0)
    assert rep.verdict == "nondegenerate"
    assert rep.kernel_dim == 2
    assert rep.killing_rank == 2


def test_nondegeneracy_rejects_noncritical_state():
    prob, st = _flat_circle()
    bad = ProblemState(st.values + 1e-3 * np.cos(3 * prob.grid.nodes))
    assert residual_norm(prob, bad, 0.0) >= 1e-8
    with pytest.raises(PreconditionError):
        nondegeneracy_report(prob, bad, 0.0)


def test_nondegeneracy_injected_shift_is_degenerate():
    prob, st = _flat_circle()
    J = jacobi(prob, st, 0.0)
    shifted = JacobiOperator(matrix=J.matrix + 0.5 * np.eye(J.matrix.shape[0]),
                             pairing=J.pairing, lambda_hat=0.0)
    rep = nondegeneracy_report(prob, st, 0.0, operator=shifted)
    assert rep.verdict == "degenerate"
    assert rep.kernel_dim == 0
    assert rep.killing_rank == 2


# ---------------------------------------------------------------- slice


def test_slice_basis_shape_and_orthogonality():
    g = build_grid("periodic", 64)
    prob, st = circle_seed(1.0, 2.0, g)
    slc = slice_basis(prob, st, 1.0)
    w = pairing(prob).weights
    assert slc.vectors.shape == (64, 62)
    assert _w_orthonormality_defect(slc.vectors, w) < 1e-12
    B = rank_basis(killing_jacobi_basis(prob, st, 1.0), w)
    cross = B.T @ (w[:, None] * slc.vectors)
    assert np.max(np.abs(cross)) < 1e-12


def test_slice_basis_trivial_group_is_identity_sized():
    g = build_grid("dirichlet", 64, order=4)
    prob, st = profile_cylinder_seed(2.0, g)
    slc = slice_basis(prob, st, 0.0)
    assert slc.vectors.shape == (64, 64)


def test_slice_excludes_torus_constant_fields():
    g = build_grid("periodic", 65)
    prob, st = torus_line_seed((1, 1), g, np.eye(2), np.eye(2))
    slc = slice_basis(prob, st, 0.0)
    w = pairing(prob).weights
    N = 65
    for comp in range(2):
        c = np.zeros(2 * N)
        c[comp * N:(comp + 1) * N] = 1.0
        assert np.max(np.abs(slc.vectors.T @ (w * c))) < 1e-10


# ------------------------------------------------------- transversality


def test_margin_is_one_on_own_slice():
    g = build_grid("periodic", 64)
    prob, st = circle_seed(1.0, 2.0, g)
    slc = slice_basis(prob, st, 1.0)
    m = transversality_margin(prob, st, 1.0, slc)
    assert abs(m - 1.0) < 1e-10


def test_margin_survives_parameter_step():
    g = build_grid("periodic", 64)
    prob, st = circle_seed(1.0, 2.0, g)
    slc = slice_basis(prob, st, 1.0)
    prob2, st2 = circle_seed(0.9, 2.0, g)
    m = transversality_margin(prob2, st2, 0.9, slc)
    assert m > 0.5


# ----------------------------------------------------------- diagnostics


def test_diagnostics_clean_operator():
    prob, st = _flat_circle()
    rep = operator_diagnostics(jacobi(prob, st, 0.0))
    assert rep.symmetry_residual < 1e-10
    assert rep.index == 0
    assert np.isnan(rep.fd_consistency)
    assert not rep.flagged


def test_diagnostics_fd_consistency_with_context():
    prob, st = _flat_circle()
    rep = operator_diagnostics(jacobi(prob, st, 0.0), problem=prob, state=st,
                               lambda_hat=0.0)
    assert rep.fd_consistency < 1e-5
    assert not rep.flagged


def test_diagnostics_profile_needs_smaller_step():
    g = build_grid("dirichlet", 64, order=4)
    prob, st = profile_cylinder_seed(2.0, g)
    rep = operator_diagnostics(jacobi(prob, st, 0.0), problem=prob, state=st,
                               lambda_hat=0.0, step=1e-6)
    assert rep.fd_consistency < 1e-4
    assert rep.index == 0
    assert not rep.flagged


def test_diagnostics_flags_asymmetry():
    prob, st = _flat_circle()
    J = jacobi(prob, st, 0.0)
    M = J.matrix.copy()
    M[0, 1] += 1.0
    rep = operator_diagnostics(JacobiOperator(matrix=M, pairing=J.pairing,
                                              lambda_hat=0.0))
    assert rep.symmetry_residual > 1e-8
    assert rep.flagged


def test_diagnostics_payload_roundtrip():
    prob, st = _flat_circle()
    pay = operator_diagnostics(jacobi(prob, st, 0.0)).to_payload()
    assert set(pay) == {"symmetry_residual", "index", "fd_consistency", "flagged"}
    assert pay["index"] == 0
