"""Saddle-point systems for the method variants, direct solves, inf-sup constants.

Block layout ``[[A, B_up^T], [B_lo, -S]]`` with unknowns ``(u, lam)``:

========================  ===========================================
variant                   blocks
========================  ===========================================
stable                    B_up = B_lo = B, S = 0
projection, jump          B_up = B_lo = B, S = projection/jump penalty
bh-sym                    a + b(lam,v) + b(mu,u) - gamma<h(lam+dn u),(mu+dn v)>
bh-nonsym                 a + b(lam,v) - b(u,mu) + gamma<h(lam+dn u),(mu+dn v)>
nitsche-sym/-nonsym       single block A + N
========================  ===========================================
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import InvalidArgument, NumericalFailure, SingularSystem
from .forms import (assemble_boundary_mass, assemble_coupling, assemble_load,
                    assemble_multiplier_mass, assemble_nitsche, assemble_stiffness)
from .mesh import DIRICHLET_SIDES, build_unit_square_mesh, extract_trace_mesh
from .spaces import (P0_DISC, P1_CONT, P2_DISC, build_multiplier_space,
                     build_primal_space)
from .stabilization import (assemble_bh_stab, assemble_jump_stab,
                            assemble_projection_stab)

PIVOT_TOL = 1e-13
RESIDUAL_TOL = 1e-10


class Variant(str, Enum):
    STABLE = "stable"
    PROJECTION = "projection"
    JUMP = "jump"
    BH_NONSYM = "bh-nonsym"
    BH_SYM = "bh-sym"
    NITSCHE_NONSYM = "nitsche-nonsym"
    NITSCHE_SYM = "nitsche-sym"

    @property
    def is_nitsche(self):
        return self in (Variant.NITSCHE_NONSYM, Variant.NITSCHE_SYM)

    @property
    def is_symmetric(self):
        return self not in (Variant.BH_NONSYM, Variant.NITSCHE_NONSYM)

    @property
    def uses_gamma(self):
        return self in (Variant.PROJECTION, Variant.JUMP, Variant.BH_NONSYM, Variant.BH_SYM)


def default_multiplier(variant, degree):
    """(kind, refine_factor) used in the reference experiments."""
    variant = Variant(variant)
    if variant.is_nitsche:
        return None, None
    if variant is Variant.STABLE:
        return P1_CONT, 1
    return (P0_DISC, 2) if degree == 1 else (P2_DISC, 1)


@dataclass(frozen=True)
class MethodSpec:
    variant: Variant
    degree: int = 1
    n: int = 8
    gamma: float = 1.0
    mult_kind: str = None
    refine_factor: int = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.degree not in (1, 2):
            raise InvalidArgument(f"degree must be 1 or 2, got {self.degree!r}")
        if self.gamma < 0:
            raise InvalidArgument(f"gamma must be non-negative, got {self.gamma!r}")
        kind, r = default_multiplier(self.variant, self.degree)
        if self.variant.is_nitsche:
            if self.mult_kind is not None:
                raise InvalidArgument("Nitsche variants carry no multiplier space")
            return
        if self.mult_kind is None:
            object.__setattr__(self, "mult_kind", kind)
            object.__setattr__(self, "refine_factor", r)
        elif self.refine_factor is None:
            object.__setattr__(self, "refine_factor", 1)
        if self.variant is Variant.STABLE and self.mult_kind != P1_CONT:
            raise InvalidArgument("the stable pair uses P1-cont multipliers")
        if self.variant is Variant.JUMP and self.mult_kind == P1_CONT:
            raise InvalidArgument("jump stabilisation needs a discontinuous multiplier")

    def with_gamma(self, gamma):
        return replace(self, gamma=gamma)


@dataclass(eq=False)
class SaddleSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_u: int
    n_lam: int
    spec: MethodSpec = None
    primal: object = None
    mult: object = None
    blocks: dict = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, matrix, rhs, n_u=None):
        matrix = sp.csr_matrix(np.atleast_2d(matrix) if not sp.issparse(matrix) else matrix)
        n_u = matrix.shape[0] if n_u is None else n_u
        return cls(matrix, np.atleast_1d(np.asarray(rhs, dtype=float)), n_u, matrix.shape[0] - n_u)


@dataclass(eq=False)
class SolutionFields:
    u: np.ndarray
    lam: np.ndarray
    residual: float
    pivot_ratio: float
    det_sign: int
    system: SaddleSystem = None


def build_spaces(spec):
    mesh = build_unit_square_mesh(spec.n)
    primal = build_primal_space(mesh, spec.degree)
    mult = stable = None
    if not spec.variant.is_nitsche:
        mult = build_multiplier_space(
            extract_trace_mesh(mesh, DIRICHLET_SIDES, spec.refine_factor), spec.mult_kind)
        if spec.variant is Variant.PROJECTION:
            stable = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, 1), P1_CONT)
    return primal, mult, stable


def assemble_system(spec, data):
    """Compose the linear system of ``spec`` for problem ``data``."""
    primal, mult, stable = build_spaces(spec)
    A = assemble_stiffness(primal)
    F, G = assemble_load(primal, mult, data)
    v = spec.variant
    if v.is_nitsche:
        N, g = assemble_nitsche(primal, symmetric=(v is Variant.NITSCHE_SYM), data=data)
        return SaddleSystem((A + N).tocsr(), F + g, primal.n_dofs, 0, spec, primal, None,
                            {"A": A, "N": N})

    B = assemble_coupling(primal, mult)
    nl = mult.n_dofs
    zero = sp.csr_matrix((nl, nl))
    if v is Variant.STABLE:
        blocks = [[A, B.T], [B, zero]]
        rhs = np.concatenate([F, G])
        extra = {}
    elif v in (Variant.PROJECTION, Variant.JUMP):
        S = (assemble_projection_stab(mult, stable, spec.gamma) if v is Variant.PROJECTION
             else assemble_jump_stab(mult, spec.gamma))
        blocks = [[A, B.T], [B, -S]]
        rhs = np.concatenate([F, G])
        extra = {"S": S}
    else:
        R = assemble_bh_stab(primal, mult, spec.gamma)
        if v is Variant.BH_SYM:
            blocks = [[A - R.uu, B.T - R.ul], [B - R.lu, -R.ll]]
            rhs = np.concatenate([F, G])
        else:
            blocks = [[A + R.uu, B.T + R.ul], [-B + R.lu, R.ll]]
            rhs = np.concatenate([F, -G])
        extra = {"R": R}
    M = sp.bmat(blocks, format="csr")
    return SaddleSystem(M, rhs, primal.n_dofs, nl, spec, primal, mult, {"A": A, "B": B, **extra})


def _perm_parity(perm):
    perm = np.asarray(perm)
    seen = np.zeros(len(perm), dtype=bool)
    parity = 0
    for i in range(len(perm)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            parity ^= (length - 1) & 1
    return -1 if parity else 1


def factorize(matrix):
    """Sparse LU with partial pivoting and pivot diagnostics.

    Returns ``(lu, pivot_ratio, det_sign)``; ``pivot_ratio`` is the smallest
    over the largest absolute pivot. Raises :class:`SingularSystem` below
    ``PIVOT_TOL``.
    """
    M = sp.csc_matrix(matrix)
    try:
        lu = spla.splu(M, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularSystem(f"factorisation failed: {exc}", 0.0) from exc
    piv = lu.U.diagonal()
    a = np.abs(piv)
    ratio = float(a.min() / a.max()) if a.max() > 0 else 0.0
    det_sign = int(np.prod(np.sign(piv))) * _perm_parity(lu.perm_r) * _perm_parity(lu.perm_c)
    if ratio < PIVOT_TOL:
        raise SingularSystem(f"pivot ratio {ratio:.3e} below {PIVOT_TOL:g}", ratio)
    return lu, ratio, det_sign


def solve(system, refine_steps=2):
    """Direct solve with a couple of iterative-refinement sweeps."""
    lu, ratio, det_sign = factorize(system.matrix)
    b = system.rhs
    x = lu.solve(b)
    bnorm = np.linalg.norm(b)
    scale = bnorm if bnorm > 0 else 1.0
    res = np.linalg.norm(system.matrix @ x - b) / scale
    for _ in range(refine_steps):
        if res <= 0.1 * RESIDUAL_TOL:
            break
        x = x + lu.solve(b - system.matrix @ x)
        res = np.linalg.norm(system.matrix @ x - b) / scale
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise NumericalFailure(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return SolutionFields(x[:system.n_u], x[system.n_u:], float(res), ratio, det_sign, system)


def solve_method(spec, data):
    return solve(assemble_system(spec, data))


def compute_infsup(B, S, M_V, M_L):
    """Discrete inf-sup constant.

    Square root of the smallest eigenvalue of
    ``(B M_V^{-1} B^T + S) x = beta^2 M_L x`` (dense).
    """
    dense = lambda m: m.toarray() if sp.issparse(m) else np.atleast_2d(np.asarray(m, dtype=float))
    B, M_V, M_L = dense(B), dense(M_V), dense(M_L)
    S = np.zeros((B.shape[0],) * 2) if S is None else dense(S)
    try:
        sla.cholesky(M_L)
    except sla.LinAlgError as exc:
        raise InvalidArgument("multiplier norm matrix is not positive definite") from exc
    K = B @ sla.solve(M_V, B.T, assume_a="pos") + S
    K = 0.5 * (K + K.T)
    ev = sla.eigh(K, M_L, eigvals_only=True, subset_by_index=[0, 0])
    return float(np.sqrt(max(ev[0], 0.0)))


def infsup_matrices(n, degree, mult_kind, refine_factor, stabilizer=None, gamma=1.0):
    """Coupling, stabiliser and norm matrices for the boundary inf-sup test.

    ``stabilizer`` is None, ``"projection"`` or ``"jump"``. The primal norm is
    ``|grad v|^2 + <h^-1 v, v>`` on the Dirichlet sides, the multiplier norm
    ``<h lam, lam>``.
    """
    mesh = build_unit_square_mesh(n)
    primal = build_primal_space(mesh, degree)
    mult = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, refine_factor), mult_kind)
    B = assemble_coupling(primal, mult)
    M_V = assemble_stiffness(primal) + assemble_boundary_mass(primal, DIRICHLET_SIDES, h_power=-1)
    M_L = assemble_multiplier_mass(mult, h_power=1)
    S = None
    if stabilizer == "projection":
        stable = build_multiplier_space(extract_trace_mesh(mesh, DIRICHLET_SIDES, 1), P1_CONT)
        S = assemble_projection_stab(mult, stable, gamma)
    elif stabilizer == "jump":
        S = assemble_jump_stab(mult, gamma)
    elif stabilizer is not None:
        raise InvalidArgument(f"unknown stabiliser {stabilizer!r}")
    return B, S, M_V, M_L
