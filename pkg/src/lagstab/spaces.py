"""Primal Lagrange spaces on triangles and multiplier spaces on trace meshes."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgument, UnsupportedConfiguration
from .mesh import SIDES

P0_DISC = "P0-disc"
P2_DISC = "P2-disc"
P1_CONT = "P1-cont"
MULTIPLIER_KINDS = (P0_DISC, P2_DISC, P1_CONT)


def lagrange_basis(degree, xi):
    """Reference Lagrange basis on the unit triangle.

    Local ordering: the three vertices, then for ``degree == 2`` the
    midpoints of edges (0,1), (1,2), (2,0).

    Returns values of shape (nq, nb) and reference gradients (nq, nb, 2).
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    x, y = xi[:, 0], xi[:, 1]
    L = np.stack([1.0 - x - y, x, y], axis=1)
    dL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    nq = len(xi)
    if degree == 1:
        return L, np.broadcast_to(dL, (nq, 3, 2)).copy()
    if degree != 2:
        raise InvalidArgument(f"unsupported primal degree {degree!r}")
    vals = np.empty((nq, 6))
    grads = np.empty((nq, 6, 2))
    for i in range(3):
        vals[:, i] = L[:, i] * (2.0 * L[:, i] - 1.0)
        grads[:, i] = (4.0 * L[:, i] - 1.0)[:, None] * dL[i]
    for k, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
        vals[:, 3 + k] = 4.0 * L[:, i] * L[:, j]
        grads[:, 3 + k] = 4.0 * (L[:, j, None] * dL[i] + L[:, i, None] * dL[j])
    return vals, grads


def affine_maps(mesh):
    """Per-triangle affine data: origin, Jacobian, determinant, inverse."""
    p = mesh.nodes[mesh.triangles]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1] / det
    inv[:, 1, 1] = J[:, 0, 0] / det
    inv[:, 0, 1] = -J[:, 0, 1] / det
    inv[:, 1, 0] = -J[:, 1, 0] / det
    return p[:, 0], J, det, inv


def to_reference(mesh, tri, x):
    """Reference coordinates of physical points ``x`` (..., 2) in triangles ``tri``."""
    p0, _, _, inv = affine_maps(mesh)
    d = x - p0[tri]
    return np.einsum("...ij,...j->...i", inv[tri], d)


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Continuous Lagrange space of degree 1 or 2."""

    mesh: object
    degree: int
    cell_dofs: np.ndarray
    n_dofs: int
    dof_coords: np.ndarray
    boundary_dofs: dict

    @property
    def n_local(self):
        return self.cell_dofs.shape[1]

    def eval_basis(self, xi):
        return lagrange_basis(self.degree, xi)

    def interpolate(self, func):
        """Nodal interpolant coefficients of ``func(x, y)``."""
        return np.asarray(func(self.dof_coords[:, 0], self.dof_coords[:, 1]), dtype=float) \
            * np.ones(self.n_dofs)

    def physical_gradients(self, xi):
        """Values (nq, nb) and physical gradients (M, nq, nb, 2) at reference points."""
        vals, grads = self.eval_basis(xi)
        _, _, _, inv = affine_maps(self.mesh)
        return vals, np.einsum("qbi,kij->kqbj", grads, inv)


def build_primal_space(mesh, k):
    """Continuous P1 (nodal) or P2 (nodal + edge midpoint) space on ``mesh``."""
    if k not in (1, 2):
        raise InvalidArgument(f"primal degree must be 1 or 2, got {k!r}")
    nn = len(mesh.nodes)
    if k == 1:
        cell_dofs = mesh.triangles.copy()
        coords = mesh.nodes.copy()
    else:
        cell_dofs = np.hstack([mesh.triangles, nn + mesh.tri_edges])
        mids = 0.5 * (mesh.nodes[mesh.edges[:, 0]] + mesh.nodes[mesh.edges[:, 1]])
        coords = np.vstack([mesh.nodes, mids])
    n_dofs = len(coords)

    bdofs = {}
    be_index = {tuple(sorted(e)): i for i, e in enumerate(mesh.edges.tolist())}
    for side in SIDES:
        edges = mesh.boundary_edges[mesh.side_edges(side)]
        dofs = set(edges.ravel().tolist())
        if k == 2:
            dofs |= {nn + be_index[tuple(sorted(e))] for e in edges.tolist()}
        bdofs[side] = np.array(sorted(dofs), dtype=np.int64)
    return FeSpace(mesh, k, cell_dofs, n_dofs, coords, bdofs)


@dataclass(frozen=True, eq=False)
class MultSpace:
    """Multiplier space on a trace mesh.

    ``seg_dofs`` maps each segment's local basis functions to global dofs.
    Local bases are written in the segment parameter t in [0, 1]: the
    constant for P0-disc, Lagrange at t = 0, 1/2, 1 for P2-disc and
    (1 - t, t) for P1-cont.
    """

    trace: object
    kind: str
    seg_dofs: np.ndarray
    n_dofs: int

    @property
    def n_local(self):
        return self.seg_dofs.shape[1]

    @property
    def poly_degree(self):
        return {P0_DISC: 0, P1_CONT: 1, P2_DISC: 2}[self.kind]

    def eval_basis(self, t):
        """Values, d/dt and d2/dt2 of the local basis, each (nq, n_local)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        one, zero = np.ones_like(t), np.zeros_like(t)
        if self.kind == P0_DISC:
            return one[:, None], zero[:, None], zero[:, None]
        if self.kind == P1_CONT:
            return (np.stack([1 - t, t], axis=1),
                    np.stack([-one, one], axis=1),
                    np.stack([zero, zero], axis=1))
        v = np.stack([2 * (t - 0.5) * (t - 1), -4 * t * (t - 1), 2 * t * (t - 0.5)], axis=1)
        d1 = np.stack([4 * t - 3, -8 * t + 4, 4 * t - 1], axis=1)
        d2 = np.stack([4 * one, -8 * one, 4 * one], axis=1)
        return v, d1, d2

    def interpolate(self, func):
        """Coefficients of the nodal interpolant (segment midpoint value for P0)."""
        tr = self.trace
        nodes_t = {P0_DISC: [0.5], P1_CONT: [0.0, 1.0], P2_DISC: [0.0, 0.5, 1.0]}[self.kind]
        pts = tr.points(nodes_t)
        vals = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:2])
        out = np.zeros(self.n_dofs)
        out[self.seg_dofs] = vals
        return out


def build_multiplier_space(trace, kind):
    """Multiplier space of the given kind on ``trace``."""
    if kind not in MULTIPLIER_KINDS:
        raise InvalidArgument(f"unknown multiplier kind {kind!r}")
    s = trace.n_segments
    if kind == P0_DISC:
        seg_dofs = np.arange(s)[:, None]
    elif kind == P2_DISC:
        seg_dofs = np.arange(3 * s).reshape(s, 3)
    else:
        # continuous within each component; new dof at the start of a component
        seg_dofs = np.empty((s, 2), dtype=np.int64)
        nxt = 0
        for i in range(s):
            if i == 0 or trace.seg_component[i] != trace.seg_component[i - 1]:
                seg_dofs[i, 0] = nxt
                nxt += 1
            else:
                seg_dofs[i, 0] = seg_dofs[i - 1, 1]
            seg_dofs[i, 1] = nxt
            nxt += 1
    return MultSpace(trace, kind, seg_dofs.astype(np.int64), int(seg_dofs.max()) + 1)


def check_nested(fine, coarse):
    """Ensure two trace meshes share components and have nested refinement."""
    if fine.mesh is not coarse.mesh:
        raise UnsupportedConfiguration("trace meshes come from different volume meshes")
    if fine.components != coarse.components:
        raise UnsupportedConfiguration("trace meshes cover different boundary components")
    if fine.refine_factor % coarse.refine_factor:
        raise UnsupportedConfiguration(
            f"refine factors {fine.refine_factor} and {coarse.refine_factor} are not nested")
