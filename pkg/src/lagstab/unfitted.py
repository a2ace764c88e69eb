"""Unfitted coupling of two diffusion subdomains across the line x = x0.

Omega_1 = {x < x0}, Omega_2 = {x > x0}. Each subdomain gets a P1 space on
the background elements it touches, so elements crossed by the interface
carry two copies of their nodal dofs. A piecewise constant multiplier on the
cut band enforces ``u_1 = u_2`` weakly and is stabilised by penalising its
jumps across interior faces of the band:

    a_1(u_1, v_1) + a_2(u_2, v_2) + <lam, v_1 - v_2>_Gamma        = (f, v)
    <mu, u_1 - u_2>_Gamma - gamma sum_F h_F |F| [lam][mu]          = 0

The multiplier approximates ``-du/dx`` on the interface. ``u = 0`` is imposed
strongly on the outer boundary.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .analysis import ErrorRecord, estimate_rates
from .exceptions import DegenerateCut, InvalidArgument
from .forms import ProblemData
from .mesh import build_unit_square_mesh
from .quadrature import gauss_segment, gauss_triangle
from .solver import SaddleSystem, solve
from .spaces import affine_maps, lagrange_basis, to_reference

INSIDE_1, INSIDE_2, CUT = 1, 2, 0
GRID_TOL = 1e-9


def _clip(poly, x0, keep_left):
    """Sutherland-Hodgman clip of a convex polygon against x <= x0 (or x >= x0)."""
    out = []
    side = (lambda p: p[0] <= x0) if keep_left else (lambda p: p[0] >= x0)
    for i in range(len(poly)):
        p, q = poly[i], poly[(i + 1) % len(poly)]
        if side(p):
            out.append(p)
        if side(p) != side(q):
            t = (x0 - p[0]) / (q[0] - p[0])
            out.append(np.array([x0, p[1] + t * (q[1] - p[1])]))
    return out


def _fan(poly):
    return [np.array([poly[0], poly[i], poly[i + 1]]) for i in range(1, len(poly) - 1)]


def _area(tri):
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    return 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])


def cut_triangle(vertices, x0):
    """Split a triangle by the vertical line x = x0.

    Returns ``(left, right, segment)``: lists of sub-triangles (3, 2) on each
    side and the two endpoints of the intersection with the line (None if
    the line misses the interior).
    """
    v = [np.asarray(p, dtype=float) for p in vertices]
    xs = [p[0] for p in v]
    if max(xs) <= x0:
        return _fan(v), [], None
    if min(xs) >= x0:
        return [], _fan(v), None
    left = _clip(v, x0, True)
    right = _clip(v, x0, False)
    seg = np.array([p for p in left if p[0] == x0])
    seg = seg[np.argsort(seg[:, 1])]
    return _fan(left), _fan(right), seg


@dataclass(eq=False)
class CutGeometry:
    """Classification of background elements and the cut decomposition."""

    mesh: object
    x0: float
    classification: np.ndarray      # (M,) INSIDE_1, INSIDE_2 or CUT
    cut_elements: np.ndarray        # (C,) element indices
    pieces: list                    # per cut element: (left triangles, right triangles)
    segments: np.ndarray            # (C, 2, 2) endpoints of Gamma cap K
    band_faces: np.ndarray          # (F,) indices into mesh.interior_faces

    def sub_area(self, c, side):
        return sum(_area(t) for t in self.pieces[c][side])


def classify_and_cut(mesh, x0):
    """Cut every element of ``mesh`` by the line x = x0."""
    x0 = float(x0)
    grid = mesh.nodes[:, 0]
    if np.any(np.abs(grid - x0) <= GRID_TOL):
        raise DegenerateCut(f"interface x0={x0!r} lies within {GRID_TOL:g} of a mesh vertex line")
    xs = mesh.nodes[mesh.triangles][..., 0]
    cls = np.full(len(mesh.triangles), CUT, dtype=np.int64)
    cls[xs.max(axis=1) < x0] = INSIDE_1
    cls[xs.min(axis=1) > x0] = INSIDE_2
    cut = np.flatnonzero(cls == CUT)
    pieces, segs = [], []
    for k in cut:
        left, right, seg = cut_triangle(mesh.nodes[mesh.triangles[k]], x0)
        pieces.append((left, right))
        segs.append(seg)
    is_cut = cls == CUT
    band = np.flatnonzero(is_cut[mesh.face_tris[:, 0]] & is_cut[mesh.face_tris[:, 1]])
    return CutGeometry(mesh, x0, cls, cut, pieces,
                       np.array(segs).reshape(-1, 2, 2), band)


@dataclass(eq=False)
class InterfaceSpaces:
    """Doubled P1 dofs on the cut band plus one multiplier per cut element.

    ``node_dofs[i]`` maps background nodes to dofs of subdomain ``i`` (-1 when
    the node is absent or carries the homogeneous boundary value).
    """

    geometry: CutGeometry
    node_dofs: tuple
    n_primal: int
    n_lam: int

    def elements(self, i):
        cls = self.geometry.classification
        return np.flatnonzero((cls == (INSIDE_1 if i == 0 else INSIDE_2)) | (cls == CUT))


def build_interface_spaces(geometry):
    mesh = geometry.mesh
    on_boundary = np.zeros(len(mesh.nodes), dtype=bool)
    on_boundary[mesh.boundary_edges.ravel()] = True
    maps, offset = [], 0
    for side in (INSIDE_1, INSIDE_2):
        cls = geometry.classification
        tris = mesh.triangles[(cls == side) | (cls == CUT)]
        present = np.zeros(len(mesh.nodes), dtype=bool)
        present[tris.ravel()] = True
        free = present & ~on_boundary
        m = np.full(len(mesh.nodes), -1, dtype=np.int64)
        m[free] = offset + np.arange(free.sum())
        offset += int(free.sum())
        maps.append(m)
    return InterfaceSpaces(geometry, tuple(maps), offset, len(geometry.cut_elements))


def sin_solution():
    """``u = sin(pi x) sin(pi y)``, smooth across any vertical interface."""
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad_u(x, y):
        return pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)

    return ProblemData(f=lambda x, y: 2 * pi**2 * u(x, y), g_dirichlet=u,
                       g_neumann=lambda x, y, nx, ny: sum(g * c for g, c in zip(grad_u(x, y), (nx, ny))),
                       u=u, grad_u=grad_u, name="sine")


def _element_quadrature(geometry, i, rule):
    """Quadrature over Omega_i batched by piece.

    Returns parent elements (P,), physical points (P, nq, 2) and weights
    (P, nq). Uncut elements contribute one piece each.
    """
    mesh = geometry.mesh
    cls = geometry.classification
    full = np.flatnonzero(cls == (INSIDE_1 if i == 0 else INSIDE_2))
    tris = [mesh.nodes[mesh.triangles[full]]]
    parents = [full]
    for c, k in enumerate(geometry.cut_elements):
        for tri in geometry.pieces[c][i]:
            tris.append(tri[None])
            parents.append(np.array([k]))
    tris = np.concatenate(tris)
    a = tris[:, 1] - tris[:, 0]
    b = tris[:, 2] - tris[:, 0]
    det = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    x = (tris[:, None, 0] + rule.points[None, :, 0, None] * a[:, None]
         + rule.points[None, :, 1, None] * b[:, None])
    return np.concatenate(parents), x, rule.weights[None, :] * det[:, None]


def _p1_grads(mesh):
    _, _, _, inv = affine_maps(mesh)
    _, rgrad = lagrange_basis(1, np.zeros((1, 2)))
    return np.einsum("bi,kij->kbj", rgrad[0], inv)   # (M, 3, 2), constant per element


def _basis_at(mesh, k, x):
    xi = to_reference(mesh, k[:, None], x)
    phi, _ = lagrange_basis(1, xi.reshape(-1, 2))
    return phi.reshape(x.shape[:2] + (3,))


def assemble_interface_system(geometry, gamma, data):
    """Saddle-point system of the transmission problem on ``geometry``."""
    if gamma < 0:
        raise InvalidArgument(f"gamma must be non-negative, got {gamma!r}")
    spaces = build_interface_spaces(geometry)
    mesh = geometry.mesh
    grads = _p1_grads(mesh)
    rule = gauss_triangle(6)

    nu, nl = spaces.n_primal, spaces.n_lam
    rows, cols, vals = [], [], []
    F = np.zeros(nu)
    for i in (0, 1):
        k, x, w = _element_quadrature(geometry, i, rule)
        dofs = spaces.node_dofs[i][mesh.triangles[k]]
        local = w.sum(axis=1)[:, None, None] * np.einsum("kai,kbi->kab", grads[k], grads[k])
        phi = _basis_at(mesh, k, x)
        load = np.einsum("kq,kqa->ka", w * data.f(x[..., 0], x[..., 1]), phi)
        # dofs of -1 sit on the outer boundary and are dropped
        keep = (dofs[:, :, None] >= 0) & (dofs[:, None, :] >= 0)
        rows.append(np.broadcast_to(dofs[:, :, None], local.shape)[keep])
        cols.append(np.broadcast_to(dofs[:, None, :], local.shape)[keep])
        vals.append(local[keep])
        F += np.bincount(dofs[dofs >= 0], load[dofs >= 0], minlength=nu)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nu, nu)).tocsr()

    seg_rule = gauss_segment(4)
    brow, bcol, bval = [], [], []
    for c, k in enumerate(geometry.cut_elements):
        p, q = geometry.segments[c]
        x = p + np.outer(seg_rule.points, q - p)
        w = seg_rule.weights * np.linalg.norm(q - p)
        phi, _ = lagrange_basis(1, to_reference(mesh, k, x))
        integ = w @ phi
        for i, sign in ((0, 1.0), (1, -1.0)):
            dofs = spaces.node_dofs[i][mesh.triangles[k]]
            keep = dofs >= 0
            brow.append(np.full(keep.sum(), c))
            bcol.append(dofs[keep])
            bval.append(sign * integ[keep])
    B = sp.coo_matrix((np.concatenate(bval), (np.concatenate(brow), np.concatenate(bcol))),
                      shape=(nl, nu)).tocsr()

    S = interface_stab(geometry, gamma)
    M = sp.bmat([[A, B.T], [B, -S]], format="csr")
    rhs = np.concatenate([F, np.zeros(nl)])
    system = SaddleSystem(M, rhs, nu, nl, None, None, None, {"A": A, "B": B, "S": S})
    system.spaces = spaces
    return system


def interface_stab(geometry, gamma):
    """``gamma sum_F h_F |F| [lam][mu]`` over interior faces of the cut band.

    Each face is counted once.
    """
    mesh = geometry.mesh
    nl = len(geometry.cut_elements)
    index = np.full(len(mesh.triangles), -1, dtype=np.int64)
    index[geometry.cut_elements] = np.arange(nl)
    faces = mesh.interior_faces[geometry.band_faces]
    length = np.linalg.norm(mesh.nodes[faces[:, 0]] - mesh.nodes[faces[:, 1]], axis=1)
    w = gamma * length**2
    a = index[mesh.face_tris[geometry.band_faces, 0]]
    b = index[mesh.face_tris[geometry.band_faces, 1]]
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([w, w, -w, -w])
    return sp.coo_matrix((vals, (rows, cols)), shape=(nl, nl)).tocsr()


def interface_errors(system, u, lam, data):
    """Broken H1 seminorm and L2 errors summed over both subdomains, plus the
    multiplier error ``||h^(1/2)(lam - lam_h)||_Gamma``."""
    spaces = system.spaces
    geometry = spaces.geometry
    mesh = geometry.mesh
    grads = _p1_grads(mesh)
    rule = gauss_triangle(6)
    h1 = l2 = 0.0
    for i in (0, 1):
        k, x, w = _element_quadrature(geometry, i, rule)
        dofs = spaces.node_dofs[i][mesh.triangles[k]]
        coef = np.where(dofs >= 0, u[np.maximum(dofs, 0)], 0.0)
        uh = np.einsum("kqa,ka->kq", _basis_at(mesh, k, x), coef)
        gh = np.einsum("ka,kai->ki", coef, grads[k])
        gx, gy = data.grad_u(x[..., 0], x[..., 1])
        l2 += np.sum(w * (data.u(x[..., 0], x[..., 1]) - uh) ** 2)
        h1 += np.sum(w * ((gx - gh[:, None, 0]) ** 2 + (gy - gh[:, None, 1]) ** 2))
    seg_rule = gauss_segment(6)
    em = 0.0
    h = mesh.h
    for c in range(len(geometry.cut_elements)):
        p, q = geometry.segments[c]
        x = p + np.outer(seg_rule.points, q - p)
        w = seg_rule.weights * np.linalg.norm(q - p)
        exact = data.multiplier(x[:, 0], x[:, 1], 1.0, 0.0)
        em += h * (w @ (exact - lam[c]) ** 2)
    return float(np.sqrt(h1)), float(np.sqrt(l2)), float(np.sqrt(em))


def solve_interface(n, x0, gamma=1.0, data=None):
    """Solve on the ``n x n`` mesh; returns ``(SolutionFields, ErrorRecord)``."""
    data = sin_solution() if data is None else data
    geometry = classify_and_cut(build_unit_square_mesh(n), x0)
    system = assemble_interface_system(geometry, gamma, data)
    sol = solve(system)
    h1, l2, em = interface_errors(system, sol.u, sol.lam, data)
    rec = ErrorRecord(n, geometry.mesh.h, system.matrix.shape[0], h1, l2, em,
                      "ok", "unfitted", 1, gamma)
    return sol, rec


def interface_convergence(levels, x0=0.5137, gamma=1.0, data=None):
    records = [solve_interface(n, x0, gamma, data)[1] for n in sorted(levels)]
    return records, estimate_rates(records)
