import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lagstab.exceptions import InvalidArgument, UnsupportedConfiguration
from lagstab.mesh import DIRICHLET_SIDES, build_unit_square_mesh, extract_trace_mesh
from lagstab.spaces import P0_DISC, P1_CONT, P2_DISC, build_multiplier_space, build_primal_space
from lagstab.stabilization import (assemble_bh_stab, assemble_jump_stab, assemble_projection_stab,
                                   mixed_mass, project_to_stable)


def spaces(n=4, kind=P0_DISC, r=2):
    mesh = build_unit_square_mesh(n)
    mult = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, r), kind)
    stable = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, 1), P1_CONT)
    return mesh, mult, stable


def sample_values(space, t):
    """Values of every basis function at parameters t of the finest trace."""
    v, _, _ = space.eval_basis(t)
    out = np.zeros((space.trace.n_segments * len(t), space.n_dofs))
    for s, dofs in enumerate(space.seg_dofs):
        out[s * len(t):(s + 1) * len(t), dofs] = v
    return out


def test_projection_matches_least_squares_oracle():
    # P0 on a refined trace projected onto P1: compare with a dense
    # least-squares fit on a fine Gauss sampling of the trace
    _, mult, stable = spaces(3, P0_DISC, 2)
    op = project_to_stable(mult, stable)
    lam = np.sin(np.arange(mult.n_dofs) * 1.3)
    g, w = np.polynomial.legendre.leggauss(6)
    g, w = 0.5 * (g + 1), 0.5 * w
    # sample on the fine (multiplier) trace; express P1 functions there
    fine = mult.trace
    mid = fine.seg_sub
    t_coarse = (mid[:, None] + g[None, :]) / fine.refine_factor
    rows = []
    for s in range(fine.n_segments):
        coarse_seg = np.flatnonzero(stable.trace.seg_edge == fine.seg_edge[s])[0]
        v, _, _ = stable.eval_basis(t_coarse[s])
        r = np.zeros((len(g), stable.n_dofs))
        r[:, stable.seg_dofs[coarse_seg]] = v
        rows.append(r)
    P1 = np.vstack(rows)
    wt = np.sqrt(np.repeat(fine.h_seg, len(g)) * np.tile(w, fine.n_segments))
    target = np.repeat(lam, len(g))
    coef, *_ = np.linalg.lstsq(wt[:, None] * P1, wt * target, rcond=None)
    assert np.allclose(op(lam), coef, atol=1e-12)


@pytest.mark.parametrize("kind,r", [(P0_DISC, 2), (P2_DISC, 1), (P0_DISC, 1)])
def test_projection_stab_psd_with_kernel_L(kind, r):
    _, mult, stable = spaces(4, kind, r)
    S = assemble_projection_stab(mult, stable, 1.0).toarray()
    assert np.allclose(S, S.T, atol=1e-15)
    assert np.linalg.eigvalsh(S).min() > -1e-13
    # functions already in L (linear along each side) are not penalised
    lin = mult.interpolate(lambda x, y: 1 + 2 * x) if kind == P2_DISC else None
    if lin is not None:
        assert lin @ S @ lin == pytest.approx(0, abs=1e-13)
    const = mult.interpolate(lambda x, y: np.ones_like(x))
    assert const @ S @ const == pytest.approx(0, abs=1e-14)


def test_projection_is_idempotent_on_stable_space():
    _, _, stable = spaces(4)
    op = project_to_stable(stable, stable)
    assert np.allclose(op.matrix, np.eye(stable.n_dofs), atol=1e-12)


def test_mixed_mass_of_constants():
    _, mult, stable = spaces(4)
    M = mixed_mass(stable, mult)
    assert M.sum() == pytest.approx(2.0, abs=1e-13)


def test_jump_energy_single_node():
    # two P0 values a, b on adjacent segments: gamma h^2 (a - b)^2
    mesh = build_unit_square_mesh(2)
    mult = build_multiplier_space(extract_trace_mesh(mesh, ("bottom",), 1), P0_DISC)
    S = assemble_jump_stab(mult, 3.0).toarray()
    lam = np.array([1.5, -0.5])
    assert lam @ S @ lam == pytest.approx(3.0 * 0.25 * 4.0, abs=1e-14)


def test_jump_does_not_cross_components():
    _, mult, _ = spaces(4, P0_DISC, 1)
    S = assemble_jump_stab(mult, 1.0).toarray()
    step = np.where(mult.trace.seg_component == 0, 1.0, -2.0)
    assert step @ S @ step == pytest.approx(0, abs=1e-14)


def test_jump_p2_kernel_is_global_quadratics():
    _, mult, _ = spaces(4, P2_DISC, 1)
    S = assemble_jump_stab(mult, 1.0).toarray()
    q = mult.interpolate(lambda x, y: 1 - x + 3 * x**2)
    assert q @ S @ q == pytest.approx(0, abs=1e-12)
    c = mult.interpolate(lambda x, y: x**3)
    assert c @ S @ c > 1e-6
    assert np.linalg.eigvalsh(S).min() > -1e-12


def test_jump_rejects_continuous():
    _, _, stable = spaces(2)
    with pytest.raises(UnsupportedConfiguration):
        assemble_jump_stab(stable, 1.0)


def test_negative_gamma():
    mesh, mult, stable = spaces(2)
    with pytest.raises(InvalidArgument):
        assemble_projection_stab(mult, stable, -1.0)
    with pytest.raises(InvalidArgument):
        assemble_bh_stab(build_primal_space(mesh, 1), mult, -1.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 50))
def test_bh_linear_in_gamma(gamma):
    mesh, mult, _ = spaces(3)
    V = build_primal_space(mesh, 1)
    r1 = assemble_bh_stab(V, mult, 1.0)
    rg = assemble_bh_stab(V, mult, gamma)
    for a, b in ((r1.uu, rg.uu), (r1.ul, rg.ul), (r1.lu, rg.lu), (r1.ll, rg.ll)):
        assert abs(gamma * a - b).max() <= 1e-12 * max(1.0, gamma)


def test_bh_energy_is_residual_square():
    # lam = -dn u exactly for u = y on y = 0, 1 -> zero residual
    mesh, mult, _ = spaces(3, P0_DISC, 2)
    V = build_primal_space(mesh, 1)
    R = assemble_bh_stab(V, mult, 1.0)
    u = V.interpolate(lambda x, y: y)
    lam = mult.interpolate(lambda x, y: np.where(y > 0.5, -1.0, 1.0))
    assert R.energy(u, lam) == pytest.approx(0, abs=1e-14)
    assert R.energy(u, np.zeros_like(lam)) == pytest.approx(2 * (1 / 3), abs=1e-13)
    assert abs(R.ul - R.lu.T).max() < 1e-15


def test_projection_stab_alternating_p0_against_dense_oracle():
    mesh, mult, stable = spaces(4, P0_DISC, 2)
    lam = (-1.0) ** np.arange(mult.n_dofs)
    op = project_to_stable(mult, stable)
    # dense oracle: ||lam - pi lam||^2 by fine sampling of the residual
    g, w = np.polynomial.legendre.leggauss(5)
    g, w = 0.5 * (g + 1), 0.5 * w
    fine = mult.trace
    pl = op(lam)
    total = 0.0
    for s in range(fine.n_segments):
        coarse = np.flatnonzero(stable.trace.seg_edge == fine.seg_edge[s])[0]
        t = (fine.seg_sub[s] + g) / fine.refine_factor
        v, _, _ = stable.eval_basis(t)
        resid = lam[s] - v @ pl[stable.seg_dofs[coarse]]
        total += fine.h_seg[s] * w @ resid**2
    gamma, h = 2.5, 0.25
    S = assemble_projection_stab(mult, stable, gamma).toarray()
    assert op.residual_norm(lam) ** 2 == pytest.approx(total, abs=1e-10)
    assert lam @ S @ lam == pytest.approx(gamma * h * total, abs=1e-10)
