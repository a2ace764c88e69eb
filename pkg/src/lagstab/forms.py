"""Assembly of a(u, v), b(lambda, v), Nitsche boundary terms and loads.

Matrices are returned as ``scipy.sparse.csr_matrix``; triplets are summed on
conversion, so element contributions may be emitted in any order.
Sign convention: the multiplier approximates the flux ``-grad(u).n``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import UnsupportedConfiguration
from .mesh import DIRICHLET_SIDES, NEUMANN_SIDES, extract_trace_mesh
from .quadrature import gauss_segment, gauss_triangle
from .spaces import affine_maps, check_nested, lagrange_basis, to_reference


@dataclass
class ProblemData:
    """Data of the Poisson problem ``-lap u = f`` with mixed boundary conditions.

    ``g_neumann`` receives the outward normal components and should return
    ``grad(u).n``. ``u`` and ``grad_u`` are only needed for error evaluation.
    """

    f: Callable
    g_dirichlet: Callable
    g_neumann: Callable
    u: Optional[Callable] = None
    grad_u: Optional[Callable] = None
    dirichlet_sides: tuple = DIRICHLET_SIDES
    neumann_sides: tuple = NEUMANN_SIDES
    name: str = field(default="custom")

    def multiplier(self, x, y, nx, ny):
        """Exact multiplier ``-grad(u).n``."""
        gx, gy = self.grad_u(x, y)
        return -(gx * nx + gy * ny)


def _coo(rows, cols, vals, shape):
    m = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
    return m.tocsr()


def _local_to_global(local, row_dofs, col_dofs, shape):
    """Scatter local matrices (K, a, b) with dof maps (K, a), (K, b)."""
    rows = np.broadcast_to(row_dofs[:, :, None], local.shape)
    cols = np.broadcast_to(col_dofs[:, None, :], local.shape)
    return _coo(rows, cols, local, shape)


def assemble_stiffness(space, degree=None):
    """Matrix of ``a(u, v) = int grad u . grad v``."""
    k = space.degree
    rule = gauss_triangle(2 * (k - 1) if degree is None else degree)
    _, grads = space.physical_gradients(rule.points)
    _, _, det, _ = affine_maps(space.mesh)
    w = rule.weights[None, :] * np.abs(det)[:, None]
    local = np.einsum("kq,kqai,kqbi->kab", w, grads, grads)
    n = space.n_dofs
    return _local_to_global(local, space.cell_dofs, space.cell_dofs, (n, n))


def assemble_mass(space, degree=None):
    """Volume mass matrix ``int u v``."""
    rule = gauss_triangle(2 * space.degree if degree is None else degree)
    vals, _ = space.eval_basis(rule.points)
    _, _, det, _ = affine_maps(space.mesh)
    local = np.einsum("q,qa,qb->ab", rule.weights, vals, vals)[None] * np.abs(det)[:, None, None]
    n = space.n_dofs
    return _local_to_global(local, space.cell_dofs, space.cell_dofs, (n, n))


@dataclass
class TraceQuad:
    """Primal basis data at quadrature points of every segment of a trace mesh."""

    t: np.ndarray            # (nq,) local segment parameters
    points: np.ndarray       # (S, nq, 2)
    weights: np.ndarray      # (S, nq), includes the segment length
    values: np.ndarray       # (S, nq, nb) primal basis values
    dn: np.ndarray           # (S, nq, nb) primal normal derivatives
    dofs: np.ndarray         # (S, nb) primal dofs
    normals: np.ndarray      # (S, 2)
    h: np.ndarray            # (S,) parent volume edge length


def trace_quadrature(primal, trace, degree):
    """Evaluate the primal basis on the segments of ``trace``."""
    mesh = primal.mesh
    rule = gauss_segment(degree)
    t = rule.points
    pts = trace.points(t)
    tri = mesh.boundary_tri[trace.seg_edge]
    xi = to_reference(mesh, tri[:, None], pts)
    s, nq = pts.shape[:2]
    vals, rgrad = lagrange_basis(primal.degree, xi.reshape(-1, 2))
    nb = vals.shape[1]
    vals = vals.reshape(s, nq, nb)
    rgrad = rgrad.reshape(s, nq, nb, 2)
    _, _, _, inv = affine_maps(mesh)
    grads = np.einsum("sqbi,sij->sqbj", rgrad, inv[tri])
    normals = trace.normals
    dn = np.einsum("sqbj,sj->sqb", grads, normals)
    weights = rule.weights[None, :] * trace.h_seg[:, None]
    return TraceQuad(t, pts, weights, vals, dn, primal.cell_dofs[tri], normals, trace.h_parent)


def multiplier_on_trace(mult, trace, t):
    """Values and dofs of ``mult``'s basis at parameters ``t`` of ``trace`` segments.

    ``trace`` must be a (possibly refined) copy of ``mult.trace``. Returns
    values (S, nq, n_local) and dofs (S, n_local).
    """
    coarse = mult.trace
    t = np.asarray(t, dtype=float)
    if coarse is trace:
        v, _, _ = mult.eval_basis(t)
        return np.broadcast_to(v, (trace.n_segments,) + v.shape).copy(), mult.seg_dofs
    check_nested(trace, coarse)
    # parameter along the parent edge, then into the enclosing coarse segment
    s_par = (trace.seg_sub[:, None] + t[None, :]) / trace.refine_factor
    mid = (trace.seg_sub + 0.5) / trace.refine_factor
    seg_c, _ = coarse.locate(trace.seg_edge, mid)
    tc = s_par * coarse.refine_factor - np.floor(mid * coarse.refine_factor)[:, None]
    v, _, _ = mult.eval_basis(tc.ravel())
    return v.reshape(tc.shape + (mult.n_local,)), mult.seg_dofs[seg_c]


def _trace_matrix(w, rv, rd, cv, cd, shape):
    local = np.einsum("sq,sqa,sqb->sab", w, rv, cv)
    return _local_to_global(local, rd, cd, shape)


def _integration_trace(primal, mult):
    if mult.trace.mesh is not primal.mesh:
        raise UnsupportedConfiguration("multiplier trace mesh is not a trace of the primal mesh")
    return mult.trace


def assemble_coupling(primal, mult, degree=None):
    """Matrix B with ``B[i, j] = int mu_i phi_j`` (one row per multiplier dof)."""
    trace = _integration_trace(primal, mult)
    tq = trace_quadrature(primal, trace, 2 * primal.degree + 2 if degree is None else degree)
    mv, md = multiplier_on_trace(mult, trace, tq.t)
    return _trace_matrix(tq.weights, mv, md, tq.values, tq.dofs, (mult.n_dofs, primal.n_dofs))


def assemble_multiplier_mass(mult, h_power=0, degree=4):
    """Multiplier mass matrix weighted by ``h**h_power`` (h = parent edge length)."""
    trace = mult.trace
    rule = gauss_segment(degree)
    v, _, _ = mult.eval_basis(rule.points)
    w = rule.weights[None, :] * (trace.h_seg * trace.h_parent ** h_power)[:, None]
    vv = np.broadcast_to(v, (trace.n_segments,) + v.shape)
    n = mult.n_dofs
    return _trace_matrix(w, vv, mult.seg_dofs, vv, mult.seg_dofs, (n, n))


def assemble_boundary_mass(primal, sides=DIRICHLET_SIDES, h_power=0, degree=None):
    """Primal boundary mass ``int_sides h**h_power u v``."""
    trace = extract_trace_mesh(primal.mesh, sides, 1)
    tq = trace_quadrature(primal, trace, 2 * primal.degree + 2 if degree is None else degree)
    w = tq.weights * tq.h[:, None] ** h_power
    n = primal.n_dofs
    return _trace_matrix(w, tq.values, tq.dofs, tq.values, tq.dofs, (n, n))


def _volume_load(primal, f, degree):
    mesh = primal.mesh
    rule = gauss_triangle(degree)
    vals, _ = primal.eval_basis(rule.points)
    p0, J, det, _ = affine_maps(mesh)
    x = p0[:, None, :] + np.einsum("kij,qj->kqi", J, rule.points)
    fx = np.asarray(f(x[..., 0], x[..., 1]), dtype=float) * np.ones(x.shape[:2])
    local = np.einsum("kq,q,qa->ka", fx, rule.weights, vals) * np.abs(det)[:, None]
    return np.bincount(primal.cell_dofs.ravel(), local.ravel(), minlength=primal.n_dofs)


def _eval_boundary(func, tq):
    x, y = tq.points[..., 0], tq.points[..., 1]
    nx = np.broadcast_to(tq.normals[:, None, 0], x.shape)
    ny = np.broadcast_to(tq.normals[:, None, 1], x.shape)
    return np.asarray(func(x, y, nx, ny), dtype=float) * np.ones(x.shape)


def assemble_load(primal, mult, data, degree=None):
    """Right-hand sides ``(F, G)``.

    ``F_i = int f phi_i + int_Neumann g_N phi_i`` and
    ``G_i = int_Dirichlet mu_i g_D``; ``G`` is empty when ``mult`` is None.
    """
    deg = 2 * primal.degree + 2 if degree is None else degree
    F = _volume_load(primal, data.f, min(deg, 6))
    if data.neumann_sides:
        tq = trace_quadrature(primal, extract_trace_mesh(primal.mesh, data.neumann_sides, 1), deg)
        gn = _eval_boundary(data.g_neumann, tq)
        F += np.bincount(tq.dofs.ravel(),
                         np.einsum("sq,sqa->sa", tq.weights * gn, tq.values).ravel(),
                         minlength=primal.n_dofs)
    if mult is None:
        return F, np.zeros(0)
    trace = _integration_trace(primal, mult)
    rule = gauss_segment(deg)
    pts = trace.points(rule.points)
    g = np.asarray(data.g_dirichlet(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])
    mv, md = multiplier_on_trace(mult, trace, rule.points)
    w = rule.weights[None, :] * trace.h_seg[:, None]
    G = np.bincount(md.ravel(), np.einsum("sq,sqa->sa", w * g, mv).ravel(), minlength=mult.n_dofs)
    return F, G


def assemble_nitsche(primal, symmetric, data=None, sides=DIRICHLET_SIDES, degree=None):
    """Penalty-free Nitsche boundary terms on ``sides``.

    Matrix: ``-int dn(u) v - int dn(v) u`` (symmetric) or
    ``-int dn(u) v + int dn(v) u`` (nonsymmetric). Right-hand side:
    ``-int dn(v) g`` or ``+int dn(v) g``; zero if ``data`` is None.
    """
    trace = extract_trace_mesh(primal.mesh, sides, 1)
    tq = trace_quadrature(primal, trace, 2 * primal.degree + 2 if degree is None else degree)
    sign = -1.0 if symmetric else 1.0
    # row = test function v, column = trial u
    local = (-np.einsum("sq,sqa,sqb->sab", tq.weights, tq.values, tq.dn)
             + sign * np.einsum("sq,sqa,sqb->sab", tq.weights, tq.dn, tq.values))
    n = primal.n_dofs
    N = _local_to_global(local, tq.dofs, tq.dofs, (n, n))
    rhs = np.zeros(n)
    if data is not None:
        pts = tq.points
        g = np.asarray(data.g_dirichlet(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])
        rhs = sign * np.bincount(tq.dofs.ravel(),
                                 np.einsum("sq,sqa->sa", tq.weights * g, tq.dn).ravel(),
                                 minlength=n)
    return N, rhs
