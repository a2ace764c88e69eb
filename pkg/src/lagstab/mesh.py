"""Structured triangulations of the unit square and boundary trace meshes.

Nodes of the ``n x n`` mesh are numbered row by row, ``i + j*(n+1)`` for the
point ``(i/n, j/n)``. Each grid square is split along the diagonal from its
lower-left to its upper-right corner.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgument

BOTTOM, TOP, LEFT, RIGHT = "bottom", "top", "left", "right"
SIDES = (BOTTOM, RIGHT, TOP, LEFT)
DIRICHLET_SIDES = (BOTTOM, TOP)
NEUMANN_SIDES = (LEFT, RIGHT)

_OUTWARD = {
    BOTTOM: (0.0, -1.0),
    RIGHT: (1.0, 0.0),
    TOP: (0.0, 1.0),
    LEFT: (-1.0, 0.0),
}

# local edge j joins local vertices _LOCAL_EDGES[j]
_LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangulation with the connectivity needed by the assemblers.

    Attributes
    ----------
    nodes : (N, 2) array
    triangles : (M, 3) int array, counterclockwise
    edges : (E, 2) int array of unique edges, each stored with sorted nodes
    tri_edges : (M, 3) int array, local edge j = (v_j, v_{j+1 mod 3})
    boundary_edges : (Eb, 2) int array, oriented with the domain on the left
    boundary_tags : (Eb,) str array of side names
    boundary_normals : (Eb, 2) outward unit normals
    boundary_tri : (Eb,) index of the adjacent triangle
    interior_faces : (Fi, 2) int array of node pairs
    face_tris : (Fi, 2) int array of the two adjacent triangles
    """

    nodes: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    boundary_normals: np.ndarray
    boundary_tri: np.ndarray
    interior_faces: np.ndarray
    face_tris: np.ndarray
    n: int = 0

    @property
    def h(self):
        """Largest element diameter."""
        p = self.nodes[self.triangles]
        d = np.stack([
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ])
        return float(d.max())

    @property
    def areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def side_edges(self, side):
        """Indices into the boundary edge arrays lying on ``side``."""
        return np.flatnonzero(self.boundary_tags == side)


def build_unit_square_mesh(n):
    """Structured ``n x n`` diagonal-split mesh of the unit square."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"need n >= 1 subdivisions, got {n!r}")
    n = int(n)
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    a = i + j * (n + 1)
    b = a + 1
    c = b + n + 1
    d = a + n + 1
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper
    return mesh_from_triangles(nodes, triangles, n=n)


def _side_of(midpoint, tol=1e-12):
    x, y = midpoint
    if abs(y) < tol:
        return BOTTOM
    if abs(y - 1.0) < tol:
        return TOP
    if abs(x) < tol:
        return LEFT
    if abs(x - 1.0) < tol:
        return RIGHT
    raise InvalidArgument(f"boundary edge at {midpoint} is not on the unit square")


def mesh_from_triangles(nodes, triangles, n=0):
    """Build a :class:`TriMesh` of (a subset of) the unit square.

    Boundary edges must lie on the four sides of the unit square so that they
    can be tagged.
    """
    nodes = np.asarray(nodes, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    m = len(triangles)

    local = triangles[:, _LOCAL_EDGES]  # (M, 3, 2)
    flat = local.reshape(-1, 2)
    key = np.sort(flat, axis=1)
    edges, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    tri_edges = inverse.reshape(m, 3)
    owner = np.repeat(np.arange(m), 3)

    bmask = counts[inverse] == 1
    boundary_edges = flat[bmask]  # keeps the element orientation -> domain on the left
    boundary_tri = owner[bmask]
    mids = 0.5 * (nodes[boundary_edges[:, 0]] + nodes[boundary_edges[:, 1]])
    tags = np.array([_side_of(p) for p in mids])
    normals = np.array([_OUTWARD[t] for t in tags], dtype=float).reshape(-1, 2)

    order = np.argsort(inverse[~bmask], kind="stable")
    shared_edge = inverse[~bmask][order]
    shared_tri = owner[~bmask][order]
    if len(shared_edge) % 2:
        raise InvalidArgument("non-manifold triangulation")
    face_tris = shared_tri.reshape(-1, 2)
    interior_faces = edges[shared_edge[0::2]]

    return TriMesh(
        nodes=nodes,
        triangles=triangles,
        edges=edges,
        tri_edges=tri_edges,
        boundary_edges=boundary_edges,
        boundary_tags=tags,
        boundary_normals=normals,
        boundary_tri=boundary_tri,
        interior_faces=interior_faces,
        face_tris=face_tris,
        n=n,
    )


@dataclass(frozen=True, eq=False)
class TraceMesh:
    """Segment mesh on a union of boundary sides.

    Segments are ordered by arc coordinate within each component (left to
    right on horizontal sides, bottom to top on vertical ones) and components
    follow the order of ``components``.

    Attributes
    ----------
    seg_start, seg_end : (S, 2) segment endpoints, in arc direction
    seg_component : (S,) index into ``components``
    seg_edge : (S,) index of the parent volume boundary edge
    seg_sub : (S,) position of the segment within its parent edge
    h_seg : (S,) segment lengths
    h_parent : (S,) length of the parent volume edge
    normals : (S, 2) outward normal of the parent edge
    arc : (S, 2) arc coordinates of the segment endpoints
    interior_nodes : (K, 2) coordinates of nodes strictly inside a component
    node_segments : (K, 2) segments left and right of each interior node
    """

    mesh: TriMesh
    components: tuple
    refine_factor: int
    seg_start: np.ndarray
    seg_end: np.ndarray
    seg_component: np.ndarray
    seg_edge: np.ndarray
    seg_sub: np.ndarray
    arc: np.ndarray
    interior_nodes: np.ndarray
    node_segments: np.ndarray
    _lookup: dict = field(repr=False, default_factory=dict)

    @property
    def n_segments(self):
        return len(self.seg_edge)

    @property
    def h_seg(self):
        return np.linalg.norm(self.seg_end - self.seg_start, axis=1)

    @property
    def h_parent(self):
        e = self.mesh.boundary_edges[self.seg_edge]
        return np.linalg.norm(self.mesh.nodes[e[:, 1]] - self.mesh.nodes[e[:, 0]], axis=1)

    @property
    def normals(self):
        return self.mesh.boundary_normals[self.seg_edge]

    def points(self, t):
        """Physical points at local parameters ``t`` (in [0, 1]) of every segment.

        Returns an array of shape (S, len(t), 2).
        """
        t = np.asarray(t, dtype=float)
        d = self.seg_end - self.seg_start
        return self.seg_start[:, None, :] + t[None, :, None] * d[:, None, :]

    def locate(self, edge, s):
        """Segment index and local parameter for parent-edge parameter ``s``.

        ``edge`` and ``s`` are arrays of equal shape; ``s`` runs in arc
        direction along the parent edge.
        """
        r = self.refine_factor
        sub = np.minimum(np.floor(np.asarray(s) * r).astype(np.int64), r - 1)
        t = np.asarray(s) * r - sub
        seg = np.vectorize(lambda e, k: self._lookup[(int(e), int(k))], otypes=[np.int64])(edge, sub)
        return seg, t


def extract_trace_mesh(mesh, components, refine_factor=1):
    """Trace mesh of the boundary sides in ``components``.

    Each volume boundary edge is split into ``refine_factor`` equal segments.
    """
    if isinstance(components, str):
        components = (components,)
    comps = [c for c in SIDES if c in set(components)]
    unknown = set(components) - set(SIDES)
    if unknown:
        raise InvalidArgument(f"unknown side tags {sorted(unknown)}")
    if not comps:
        raise InvalidArgument("need at least one boundary component")
    if int(refine_factor) != refine_factor or refine_factor < 1:
        raise InvalidArgument(f"refine_factor must be a positive integer, got {refine_factor!r}")
    r = int(refine_factor)

    starts, ends, comp_idx, seg_edge, seg_sub, arcs = [], [], [], [], [], []
    inodes, nsegs = [], []
    lookup = {}
    for ci, side in enumerate(comps):
        idx = mesh.side_edges(side)
        e = mesh.boundary_edges[idx]
        p, q = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
        axis = 0 if side in (BOTTOM, TOP) else 1
        # orient every parent edge in increasing arc coordinate
        flip = q[:, axis] < p[:, axis]
        a = np.where(flip[:, None], q, p)
        b = np.where(flip[:, None], p, q)
        order = np.argsort(a[:, axis], kind="stable")
        first = len(seg_edge)
        for k in order:
            for sub in range(r):
                s0, s1 = sub / r, (sub + 1) / r
                x0 = a[k] + s0 * (b[k] - a[k])
                x1 = a[k] + s1 * (b[k] - a[k])
                lookup[(int(idx[k]), sub)] = len(seg_edge)
                starts.append(x0)
                ends.append(x1)
                comp_idx.append(ci)
                seg_edge.append(int(idx[k]))
                seg_sub.append(sub)
                arcs.append((x0[axis], x1[axis]))
        last = len(seg_edge)
        for s in range(first, last - 1):
            inodes.append(ends[s])
            nsegs.append((s, s + 1))

    return TraceMesh(
        mesh=mesh,
        components=tuple(comps),
        refine_factor=r,
        seg_start=np.array(starts, dtype=float).reshape(-1, 2),
        seg_end=np.array(ends, dtype=float).reshape(-1, 2),
        seg_component=np.array(comp_idx, dtype=np.int64),
        seg_edge=np.array(seg_edge, dtype=np.int64),
        seg_sub=np.array(seg_sub, dtype=np.int64),
        arc=np.array(arcs, dtype=float).reshape(-1, 2),
        interior_nodes=np.array(inodes, dtype=float).reshape(-1, 2),
        node_segments=np.array(nsegs, dtype=np.int64).reshape(-1, 2),
        _lookup=lookup,
    )


def write_mesh(mesh, path):
    """Dump the mesh as plain text records ``v x y``, ``t i j k``, ``e i j tag``."""
    with open(path, "w") as fh:
        for x, y in mesh.nodes:
            fh.write(f"v {x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"t {i} {j} {k}\n")
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fh.write(f"e {i} {j} {tag}\n")
