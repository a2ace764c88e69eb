"""Multiplier stabilisation operators.

* projection stabilisation ``gamma <h (lam - pi lam), mu - pi mu>`` against a
  stable space L (continuous P1 on the unrefined trace),
* jump penalties at interior trace nodes,
* the residual term ``gamma <h (lam + dn u), mu + dn v>``.

The weight h is the length of the parent volume edge, except for the jump
penalty, which uses the multiplier segment length.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .exceptions import InvalidArgument, UnsupportedConfiguration
from .forms import multiplier_on_trace, trace_quadrature
from .quadrature import gauss_segment
from .spaces import P0_DISC, P1_CONT, P2_DISC, check_nested


def _finer(a, b):
    """The finer of two nested trace meshes."""
    if a.refine_factor >= b.refine_factor:
        check_nested(a, b)
        return a
    check_nested(b, a)
    return b


def mixed_mass(row, col, h_power=0, degree=6):
    """Dense ``int h**h_power row_i col_j`` over the finer of the two traces."""
    trace = _finer(row.trace, col.trace)
    rule = gauss_segment(degree)
    rv, rd = multiplier_on_trace(row, trace, rule.points)
    cv, cd = multiplier_on_trace(col, trace, rule.points)
    w = rule.weights[None, :] * (trace.h_seg * trace.h_parent ** h_power)[:, None]
    local = np.einsum("sq,sqa,sqb->sab", w, rv, cv)
    out = np.zeros((row.n_dofs, col.n_dofs))
    np.add.at(out, (np.broadcast_to(rd[:, :, None], local.shape),
                    np.broadcast_to(cd[:, None, :], local.shape)), local)
    return out


@dataclass(eq=False)
class ProjectionOperator:
    """L2 projection from a multiplier space onto a stable space.

    ``matrix`` maps source coefficients to target coefficients.
    """

    source: object
    target: object
    matrix: np.ndarray
    target_mass: np.ndarray
    mixed: np.ndarray

    def __call__(self, lam):
        return self.matrix @ lam

    def residual_form(self, h_power=0):
        """Dense matrix of ``<h**p (lam - pi lam), mu - pi mu>`` on the source space."""
        src, tgt, P = self.source, self.target, self.matrix
        m_ss = mixed_mass(src, src, h_power)
        m_ts = mixed_mass(tgt, src, h_power)
        m_tt = mixed_mass(tgt, tgt, h_power)
        S = m_ss - m_ts.T @ P - P.T @ m_ts + P.T @ m_tt @ P
        return 0.5 * (S + S.T)

    def residual_norm(self, lam, h_power=0):
        lam = np.asarray(lam, dtype=float)
        return float(np.sqrt(max(lam @ self.residual_form(h_power) @ lam, 0.0)))


def project_to_stable(source, target):
    """Coefficient matrix of the L2 projection of ``source`` onto ``target``.

    Both spaces must live on the same boundary components with nested trace
    meshes. The projection decouples per component because the target basis
    functions never straddle two components.
    """
    _finer(source.trace, target.trace)
    m_tt = mixed_mass(target, target)
    m_ts = mixed_mass(target, source)
    P = sla.solve(m_tt, m_ts, assume_a="pos")
    return ProjectionOperator(source, target, P, m_tt, m_ts)


def assemble_projection_stab(mult, stable, gamma):
    """``gamma <h (lam - pi lam), mu - pi mu>`` as a sparse matrix on ``mult``."""
    if gamma < 0:
        raise InvalidArgument(f"gamma must be non-negative, got {gamma!r}")
    op = project_to_stable(mult, stable)
    return sp.csr_matrix(gamma * op.residual_form(h_power=1))


def assemble_jump_stab(mult, gamma):
    """Penalty on jumps at interior trace nodes.

    P0-disc: ``gamma h^2 [lam][mu]`` per node. P2-disc: jumps of the value,
    first and second arc-length derivatives with weights gamma h^2, h^4, h^6.
    Component endpoints carry no penalty.
    """
    if mult.kind == P1_CONT:
        raise UnsupportedConfiguration("continuous multipliers have no jumps to penalise")
    if mult.kind not in (P0_DISC, P2_DISC):
        raise UnsupportedConfiguration(f"no jump penalty for {mult.kind}")
    trace = mult.trace
    left, right = trace.node_segments[:, 0], trace.node_segments[:, 1]
    hl, hr = trace.h_seg[left], trace.h_seg[right]
    h = 0.5 * (hl + hr)
    n = mult.n_dofs
    if len(left) == 0:
        return sp.csr_matrix((n, n))

    # jump = right trace at t=0 minus left trace at t=1, per derivative order
    v0, d0, dd0 = mult.eval_basis([0.0])
    v1, d1, dd1 = mult.eval_basis([1.0])
    orders = [(v0[0], v1[0], 0)]
    if mult.kind == P2_DISC:
        orders += [(d0[0], d1[0], 1), (dd0[0], dd1[0], 2)]
    rows, cols, vals = [], [], []
    dofs = np.hstack([mult.seg_dofs[right], mult.seg_dofs[left]])
    for at_right, at_left, i in orders:
        coef = np.hstack([at_right[None, :] / hr[:, None] ** i,
                          -at_left[None, :] / hl[:, None] ** i])
        w = gamma * h ** (2 + 2 * i)
        local = w[:, None, None] * coef[:, :, None] * coef[:, None, :]
        rows.append(np.broadcast_to(dofs[:, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(dofs[:, None, :], local.shape).ravel())
        vals.append(local.ravel())
    S = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    return S


@dataclass(eq=False)
class ResidualBlocks:
    """Blocks of ``gamma <h (lam + dn u), mu + dn v>``.

    ``uu`` (test v, trial u), ``ul`` (test v, trial lam),
    ``lu`` (test mu, trial u), ``ll`` (test mu, trial lam).
    """

    uu: sp.csr_matrix
    ul: sp.csr_matrix
    lu: sp.csr_matrix
    ll: sp.csr_matrix

    def energy(self, u, lam):
        return float(u @ (self.uu @ u) + u @ (self.ul @ lam)
                     + lam @ (self.lu @ u) + lam @ (self.ll @ lam))


def assemble_bh_stab(primal, mult, gamma, degree=None):
    """Residual stabilisation blocks on the multiplier trace."""
    if gamma < 0:
        raise InvalidArgument(f"gamma must be non-negative, got {gamma!r}")
    trace = mult.trace
    tq = trace_quadrature(primal, trace, 2 * primal.degree + 2 if degree is None else degree)
    mv, md = multiplier_on_trace(mult, trace, tq.t)
    w = gamma * tq.weights * tq.h[:, None]
    nu, nl = primal.n_dofs, mult.n_dofs

    def block(rv, rd, cv, cd, shape):
        local = np.einsum("sq,sqa,sqb->sab", w, rv, cv)
        rows = np.broadcast_to(rd[:, :, None], local.shape).ravel()
        cols = np.broadcast_to(cd[:, None, :], local.shape).ravel()
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()

    return ResidualBlocks(
        uu=block(tq.dn, tq.dofs, tq.dn, tq.dofs, (nu, nu)),
        ul=block(tq.dn, tq.dofs, mv, md, (nu, nl)),
        lu=block(mv, md, tq.dn, tq.dofs, (nl, nu)),
        ll=block(mv, md, mv, md, (nl, nl)),
    )
