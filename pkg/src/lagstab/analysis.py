"""Manufactured solutions, error norms, convergence rates and the gamma sweep."""

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import InvalidArgument, NumericalFailure, SingularSystem
from .forms import ProblemData, assemble_mass, multiplier_on_trace
from .mesh import DIRICHLET_SIDES, build_unit_square_mesh, extract_trace_mesh
from .quadrature import gauss_segment, gauss_triangle
from .solver import MethodSpec, Variant, assemble_system, factorize, solve
from .spaces import P0_DISC, P1_CONT, affine_maps, build_multiplier_space
from .stabilization import assemble_jump_stab, project_to_stable

PI = np.pi


def exact_solution():
    """Smooth test case on the unit square, Dirichlet on y = 0, 1."""

    def u(x, y):
        return np.cos(PI * x) * np.cos(PI * y) / (2 * PI**2) + 0.25 * x * (1 - x) * y * (1 - y)

    def grad_u(x, y):
        ux = -np.sin(PI * x) * np.cos(PI * y) / (2 * PI) + 0.25 * (1 - 2 * x) * y * (1 - y)
        uy = -np.cos(PI * x) * np.sin(PI * y) / (2 * PI) + 0.25 * x * (1 - x) * (1 - 2 * y)
        return ux, uy

    def f(x, y):
        return np.cos(PI * x) * np.cos(PI * y) + 0.5 * (x * (1 - x) + y * (1 - y))

    def g_n(x, y, nx, ny):
        ux, uy = grad_u(x, y)
        return ux * nx + uy * ny

    return ProblemData(f=f, g_dirichlet=u, g_neumann=g_n, u=u, grad_u=grad_u, name="cosine")


def linear_solution(a=0.3, b=1.7, c=-0.9):
    """Patch-test data ``u = a + b x + c y``."""

    def u(x, y):
        return a + b * x + c * y

    def grad_u(x, y):
        return b * np.ones_like(x), c * np.ones_like(y)

    return ProblemData(
        f=lambda x, y: np.zeros_like(x),
        g_dirichlet=u,
        g_neumann=lambda x, y, nx, ny: b * nx + c * ny,
        u=u, grad_u=grad_u, name="linear")


def zero_solution():
    z = lambda x, y: np.zeros_like(x)
    return ProblemData(f=z, g_dirichlet=z, g_neumann=lambda x, y, nx, ny: np.zeros_like(x),
                       u=z, grad_u=lambda x, y: (np.zeros_like(x), np.zeros_like(y)), name="zero")


@dataclass
class ErrorRecord:
    n: int
    h: float
    n_dofs: int
    err_h1: float
    err_l2: float
    err_mult: float = float("nan")
    status: str = "ok"
    method: str = ""
    degree: int = 1
    gamma: float = 1.0

    def as_dict(self):
        return asdict(self)


def volume_errors(primal, u_h, data, degree=None):
    """``(|u - u_h|_H1, ||u - u_h||_L2)`` by elementwise quadrature."""
    mesh = primal.mesh
    rule = gauss_triangle(min(2 * primal.degree + 4, 6) if degree is None else degree)
    vals, grads = primal.physical_gradients(rule.points)
    p0, J, det, _ = affine_maps(mesh)
    x = p0[:, None, :] + np.einsum("kij,qj->kqi", J, rule.points)
    coef = u_h[primal.cell_dofs]
    uh = np.einsum("qb,kb->kq", vals, coef)
    guh = np.einsum("kqbi,kb->kqi", grads, coef)
    ue = data.u(x[..., 0], x[..., 1])
    gx, gy = data.grad_u(x[..., 0], x[..., 1])
    w = rule.weights[None, :] * np.abs(det)[:, None]
    l2 = np.sum(w * (ue - uh) ** 2)
    h1 = np.sum(w * ((gx - guh[..., 0]) ** 2 + (gy - guh[..., 1]) ** 2))
    return float(np.sqrt(h1)), float(np.sqrt(l2))


def multiplier_error(mult, lam_h, data, degree=6):
    """``||h^(1/2) (lam - lam_h)||`` over the multiplier trace."""
    trace = mult.trace
    rule = gauss_segment(degree)
    v, d = multiplier_on_trace(mult, trace, rule.points)
    lh = np.einsum("sqa,sa->sq", v, lam_h[d])
    pts = trace.points(rule.points)
    nrm = trace.normals
    lam = data.multiplier(pts[..., 0], pts[..., 1], nrm[:, None, 0], nrm[:, None, 1])
    w = rule.weights[None, :] * (trace.h_seg * trace.h_parent)[:, None]
    return float(np.sqrt(np.sum(w * (lam - lh) ** 2)))


def compute_errors(sol, data, spec=None):
    """Error record of a solved system against the exact fields in ``data``."""
    if data.u is None or data.grad_u is None:
        raise InvalidArgument("error evaluation needs the exact solution and its gradient")
    system = sol.system
    spec = spec if spec is not None else system.spec
    primal = system.primal
    h1, l2 = volume_errors(primal, sol.u, data)
    em = float("nan")
    if system.mult is not None and not spec.variant.is_nitsche:
        em = multiplier_error(system.mult, sol.lam, data)
    return ErrorRecord(spec.n, primal.mesh.h, system.matrix.shape[0], h1, l2, em,
                       "ok", spec.variant.value, spec.degree, spec.gamma)


def estimate_rates(records):
    """Least-squares slopes of log(err) against log(h) for each error norm."""
    if len(records) < 3:
        raise InvalidArgument("need at least three mesh levels to estimate a rate")
    h = np.array([r.h for r in records])
    if np.any(np.diff(h) >= 0):
        raise InvalidArgument("mesh sizes must be strictly decreasing")
    out = {}
    for key in ("err_h1", "err_l2", "err_mult"):
        e = np.array([getattr(r, key) for r in records], dtype=float)
        if np.all(np.isfinite(e)) and np.all(e > 0):
            out[key] = float(np.polyfit(np.log(h), np.log(e), 1)[0])
        else:
            out[key] = float("nan")
    return out


def convergence_study(variant, degree, levels, gamma=1.0, data=None):
    """Solve on each level and return (records, slopes)."""
    data = exact_solution() if data is None else data
    records = []
    for n in sorted(levels):
        spec = MethodSpec(variant, degree=degree, n=n, gamma=gamma)
        try:
            sol = solve(assemble_system(spec, data))
            rec = compute_errors(sol, data, spec)
        except (SingularSystem, NumericalFailure) as exc:
            rec = ErrorRecord(n, np.sqrt(2) / n, 0, float("nan"), float("nan"),
                              status=type(exc).__name__, method=Variant(variant).value,
                              degree=degree, gamma=gamma)
        records.append(rec)
    return records, estimate_rates(records)


@dataclass
class SweepRow:
    gamma: float
    distance: float
    status: str
    pivot_ratio: float
    det_sign: int
    negative_eigs: int = -1
    near_singular: bool = False


def inertia_negative(matrix):
    """Number of negative eigenvalues of a symmetric matrix, via dense LDL^T."""
    A = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix, dtype=float)
    _, D, _ = sla.ldl(0.5 * (A + A.T))
    # D is block diagonal with 1x1 and 2x2 blocks; Sylvester's law does the rest
    return int(np.sum(np.linalg.eigvalsh(D) < 0))


def gamma_sweep(variant, gammas, n=20, degree=1, data=None):
    """Distance between residual-stabilised and penalty-free Nitsche solutions.

    ``variant`` is ``bh-sym`` or ``bh-nonsym``; the reference is the Nitsche
    method of the same symmetry on the same mesh.

    An eigenvalue of the system matrix passing through zero between two
    consecutive gammas marks a singular parameter in between. For the
    symmetric variant the crossing is detected by a change of inertia
    (eigenvalues of a symmetric pencil with point symmetry tend to cross in
    pairs, which the determinant sign cannot see); otherwise by a change of
    determinant sign. Of the two neighbouring rows, the one with the smaller
    pivot ratio is flagged. Rows whose factorisation fails are flagged too.
    """
    variant = Variant(variant)
    if variant not in (Variant.BH_SYM, Variant.BH_NONSYM):
        raise InvalidArgument("gamma sweeps compare a residual-stabilised variant with Nitsche")
    data = exact_solution() if data is None else data
    ref_variant = Variant.NITSCHE_SYM if variant is Variant.BH_SYM else Variant.NITSCHE_NONSYM
    ref = solve(assemble_system(MethodSpec(ref_variant, degree=degree, n=n), data))
    M = assemble_mass(ref.system.primal)
    symmetric = variant.is_symmetric

    rows = []
    for g in gammas:
        system = assemble_system(MethodSpec(variant, degree=degree, n=n, gamma=float(g)), data)
        neg = inertia_negative(system.matrix) if symmetric else -1
        try:
            sol = solve(system)
        except SingularSystem as exc:
            rows.append(SweepRow(float(g), float("nan"), "singular", exc.pivot_ratio, 0, neg, True))
            continue
        except NumericalFailure:
            _, ratio, sign = factorize(system.matrix)
            rows.append(SweepRow(float(g), float("nan"), "singular", ratio, sign, neg, True))
            continue
        d = sol.u - ref.u
        rows.append(SweepRow(float(g), float(np.sqrt(d @ (M @ d))), "ok",
                             sol.pivot_ratio, sol.det_sign, neg))

    for a, b in zip(rows, rows[1:]):
        if a.status != "ok" or b.status != "ok":
            continue
        crossed = a.negative_eigs != b.negative_eigs if symmetric else a.det_sign != b.det_sign
        if crossed:
            (a if a.pivot_ratio <= b.pivot_ratio else b).near_singular = True
    return rows


def norm_equivalence_bound(n, mult_kind=P0_DISC, refine_factor=2):
    """Largest generalized eigenvalue of the projection residual against the jump penalty.

    Both quadratic forms vanish on multipliers with zero jumps (constants per
    component for P0, one quadratic per component for P2), so the eigenproblem
    is posed on the orthogonal complement of that common kernel.
    """
    mesh = build_unit_square_mesh(n)
    mult = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, refine_factor), mult_kind)
    stable = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, 1), P1_CONT)
    proj = project_to_stable(mult, stable).residual_form(h_power=1)
    jump = assemble_jump_stab(mult, 1.0).toarray()
    Z = sla.null_space(sla.null_space(jump).T)
    ev = sla.eigh(Z.T @ proj @ Z, Z.T @ jump @ Z, eigvals_only=True)
    return float(ev[-1])
