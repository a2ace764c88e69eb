import numpy as np
import pytest
import scipy.sparse as sp

from lagstab.analysis import exact_solution, linear_solution
from lagstab.exceptions import InvalidArgument, SingularSystem
from lagstab.solver import (MethodSpec, SaddleSystem, Variant, assemble_system, compute_infsup,
                            factorize, infsup_matrices, solve)
from lagstab.spaces import P0_DISC, P1_CONT, P2_DISC


def test_one_by_one():
    sol = solve(SaddleSystem.from_matrix([[2.0]], [4.0]))
    assert sol.u[0] == pytest.approx(2.0)
    assert sol.det_sign == 1 and sol.pivot_ratio == 1.0


def test_det_sign_and_singular():
    _, _, sign = factorize(sp.csr_matrix(np.diag([1.0, -3.0, 2.0])))
    assert sign == -1
    _, _, sign = factorize(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert sign == -1
    with pytest.raises(SingularSystem) as exc:
        factorize(sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]])))
    assert exc.value.pivot_ratio < 1e-13


def test_tiny_pivot_is_singular():
    with pytest.raises(SingularSystem):
        solve(SaddleSystem.from_matrix(np.diag([1.0, 1e-15]), [1.0, 1.0]))


@pytest.mark.parametrize("variant", ["stable", "projection", "jump", "bh-sym", "nitsche-sym"])
@pytest.mark.parametrize("degree", [1, 2])
def test_symmetric_variants_have_symmetric_matrices(variant, degree):
    s = assemble_system(MethodSpec(variant, degree=degree, n=4), exact_solution())
    assert abs(s.matrix - s.matrix.T).max() < 1e-13


@pytest.mark.parametrize("variant", ["bh-nonsym", "nitsche-nonsym"])
def test_nonsymmetric_variants(variant):
    s = assemble_system(MethodSpec(variant, n=4), exact_solution())
    assert abs(s.matrix - s.matrix.T).max() > 1e-3


def test_block_sizes():
    s = assemble_system(MethodSpec("projection", n=4), exact_solution())
    assert s.n_u == 25 and s.n_lam == 16
    assert s.matrix.shape == (41, 41)
    s = assemble_system(MethodSpec("stable", degree=2, n=4), exact_solution())
    assert s.n_lam == 10


def test_method_spec_validation():
    assert MethodSpec("jump", degree=2).mult_kind == P2_DISC
    assert MethodSpec("projection").refine_factor == 2
    assert MethodSpec("stable").mult_kind == P1_CONT
    with pytest.raises(InvalidArgument):
        MethodSpec("projection", degree=3)
    with pytest.raises(InvalidArgument):
        MethodSpec("projection", gamma=-1)
    with pytest.raises(ValueError):
        MethodSpec("unknown")
    with pytest.raises(InvalidArgument):
        MethodSpec("jump", mult_kind=P1_CONT)
    with pytest.raises(InvalidArgument):
        MethodSpec("nitsche-sym", mult_kind=P0_DISC)
    assert MethodSpec("jump").with_gamma(3.0).gamma == 3.0
    assert Variant("bh-sym").uses_gamma and not Variant("stable").uses_gamma


def test_stable_solution_satisfies_constraint():
    data = linear_solution()
    sol = solve(assemble_system(MethodSpec("stable", n=4), data))
    assert sol.residual < 1e-10
    # multiplier equals -dn u = -c * n_y: +0.9 on the bottom... sign per side
    t = sol.system.mult.trace
    expected = np.where(t.normals[:, 1] < 0, -0.9, 0.9)
    lam_seg = sol.lam[sol.system.mult.seg_dofs].mean(axis=1)
    assert np.allclose(lam_seg, expected, atol=1e-10)


def test_deterministic():
    spec = MethodSpec("projection", n=8)
    a = solve(assemble_system(spec, exact_solution()))
    b = solve(assemble_system(spec, exact_solution()))
    assert np.array_equal(a.u, b.u) and np.array_equal(a.lam, b.lam)


def test_infsup_small_oracle():
    # B = [1, 0], M_V = I, M_L = 1 -> beta = 1
    assert compute_infsup(np.array([[1.0, 0.0]]), None, np.eye(2), np.eye(1)) == pytest.approx(1)
    assert compute_infsup(np.array([[0.0, 0.0]]), np.eye(1) * 4, np.eye(2), np.eye(1)) == \
        pytest.approx(2)
    with pytest.raises(InvalidArgument):
        compute_infsup(np.ones((1, 2)), None, np.eye(2), -np.eye(1))


def test_infsup_projection_lifts_kernel():
    assert compute_infsup(*infsup_matrices(4, 1, P0_DISC, 2)) == 0.0
    assert compute_infsup(*infsup_matrices(4, 1, P0_DISC, 2, "projection")) > 0.3
    with pytest.raises(InvalidArgument):
        infsup_matrices(4, 1, P0_DISC, 2, "magic")


def test_stable_pair_ignores_gamma():
    a = assemble_system(MethodSpec("stable", n=4, gamma=1.0), exact_solution()).matrix
    b = assemble_system(MethodSpec("stable", n=4, gamma=7.5), exact_solution()).matrix
    assert (a != b).nnz == 0


def test_infsup_diagonal_toy():
    B = np.diag([2.0, 3.0])
    beta = compute_infsup(B, None, np.diag([4.0, 1.0]), np.diag([1.0, 9.0]))
    # generalized eigenvalues are b_i^2 / (mv_i ml_i)
    assert beta == pytest.approx(min(2 / np.sqrt(4 * 1), 3 / np.sqrt(1 * 9)))


def test_unstabilised_refined_pair_has_exact_kernel():
    B, _, _, _ = infsup_matrices(8, 1, P0_DISC, 2)
    B = B.toarray()
    assert B.shape[0] - np.linalg.matrix_rank(B) == 2 * (8 - 1)


@pytest.mark.parametrize("variant", ["stable", "projection", "jump", "bh-nonsym",
                                     "nitsche-nonsym", "nitsche-sym"])
def test_solve_succeeds_with_small_residual(variant):
    sol = solve(assemble_system(MethodSpec(variant, n=8), exact_solution()))
    assert sol.residual <= 1e-10
