"""Enriched DOF numbering, element stiffness, global assembly and solve.

DOF layout: standard displacement DOFs for every node first (node-major),
then Heaviside DOFs for the J nodes, then 4x tip DOFs for the K nodes.
Element stiffness is sum_points w * B^T C B with B either compatible
(conventional backend: shape-function derivatives plus analytic enrichment
gradients on the conforming triangulation) or smoothed (sm/lsm).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import mesh as msh
from . import quadrature as quad
from . import smoothing
from .enrichment import ElementBasis
from .smoothing import StrainOperator, strain_matrix

_SUPPORT_CUTOFF = 1e-4   # min relative cut area keeping a Heaviside DOF


@dataclass
class Material:
    E: float
    nu: float
    regime: str = "plane-strain"   # plane-strain | plane-stress | 3d

    def __post_init__(self):
        if not (self.E > 0 and 0 <= self.nu < 0.5):
            raise ValueError("need E > 0 and 0 <= nu < 0.5")

    @property
    def C(self):
        E, nu = self.E, self.nu
        if self.regime == "plane-strain":
            f = E / ((1 + nu) * (1 - 2 * nu))
            return f * np.array([[1 - nu, nu, 0.0], [nu, 1 - nu, 0.0],
                                 [0.0, 0.0, (1 - 2 * nu) / 2]])
        if self.regime == "plane-stress":
            f = E / (1 - nu * nu)
            return f * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0],
                                 [0.0, 0.0, (1 - nu) / 2]])
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        C = np.zeros((6, 6))
        C[:3, :3] = lam
        C[np.arange(3), np.arange(3)] += 2 * mu
        C[np.arange(3, 6), np.arange(3, 6)] = mu
        return C

    @property
    def e_star(self):
        """Effective modulus for SIF relations (E' in plane strain)."""
        if self.regime == "plane-strain":
            return self.E / (1 - self.nu ** 2)
        return self.E


class DofMap:
    """Global DOF numbering: u for all nodes, a for J nodes, b^1..4 for K."""

    def __init__(self, mesh, classification):
        self.dim = mesh.dim
        self.nnode = len(mesh.nodes)
        base = self.dim * self.nnode
        self.a_base = {}
        for n in np.sort(classification.node_set_J):
            self.a_base[int(n)] = base
            base += self.dim
        self.b_base = {}
        for n in np.sort(classification.node_set_K):
            self.b_base[int(n)] = base
            base += 4 * self.dim
        self.ndof = base

    def std(self, node, comp=None):
        if comp is None:
            return self.dim * node + np.arange(self.dim)
        return self.dim * node + comp

    def column_dofs(self, columns):
        """Global DOF ids (len = dim * ncols) for element basis columns."""
        out = np.empty(self.dim * len(columns), dtype=int)
        for c, col in enumerate(columns):
            if col[0] == "u":
                start = self.dim * col[1]
            elif col[0] == "a":
                start = self.a_base[col[1]]
            else:
                start = self.b_base[col[1]] + self.dim * col[2]
            out[self.dim * c: self.dim * (c + 1)] = \
                np.arange(start, start + self.dim)
        return out


def build_dofmap(mesh, classification):
    return DofMap(mesh, classification)


def element_strain_operators(mesh, classification, e, method,
                             standard_grid=None):
    """(basis, [StrainOperator]) of one element for any backend."""
    if method in ("sm", "lsm"):
        return smoothing.smoothed_strain_operators(
            mesh, classification, e, method, standard_grid)
    if method != "xfem":
        raise ValueError(f"unknown method {method!r}")
    basis = ElementBasis(mesh, classification, e)
    lo, hi = mesh.element_box(e)
    if np.any(hi <= lo):
        raise ValueError(f"element {e}: non-positive Jacobian")
    tag = classification.tags[e]
    if mesh.dim == 2:
        cells = quad.partition(lo, hi, tag, "xfem", classification.crack,
                               e, standard_grid)
    else:
        cells = quad.partition3d(lo, hi, tag, "xfem", classification.crack, e)
    ops = []
    for ci, sc in enumerate(cells):
        pts, w = quad.interior_points(sc, "xfem", tag)
        grads = basis.gradients(pts)
        for p in range(len(w)):
            ops.append(StrainOperator(strain_matrix(grads[p]), float(w[p]),
                                      pts[p], "xfem", ci))
    return basis, ops


def element_stiffness(mesh, classification, e, method, material,
                      standard_grid=None):
    """Element stiffness block and its global DOF columns are derived from
    the strain operators; returns (basis, Ke, npts)."""
    basis, ops = element_strain_operators(mesh, classification, e, method,
                                          standard_grid)
    C = material.C
    n = mesh.dim * basis.ncols
    Ke = np.zeros((n, n))
    for op in ops:
        Ke += op.weight * (op.B.T @ C @ op.B)
    return basis, Ke, len(ops)


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    F: np.ndarray
    dofmap: DofMap
    npts: int = 0
    eliminated: list = field(default_factory=list)

    @property
    def ndof(self):
        return self.dofmap.ndof


def boundary_edges(mesh, side):
    """(element, (local node, local node)) pairs of one rectangle side."""
    nx, ny = mesh.divisions
    if side == "bottom":
        return [(i, (0, 1)) for i in range(nx)]
    if side == "top":
        return [((ny - 1) * nx + i, (2, 3)) for i in range(nx)]
    if side == "left":
        return [(j * nx, (3, 0)) for j in range(ny)]
    if side == "right":
        return [(j * nx + nx - 1, (1, 2)) for j in range(ny)]
    raise ValueError(f"unknown side {side!r}")


def assemble(mesh, classification, dofmap, material, method,
             tractions=(), standard_grid=None):
    """Assemble the global stiffness and consistent load vector.

    ``tractions`` is a sequence of (side, value) pairs; value is a constant
    traction vector or a callable pts -> (npts, dim).  All standard
    unenriched elements of a structured mesh share one stiffness block.
    """
    ndof = dofmap.ndof
    rows, cols, data = [], [], []
    npts_total = 0

    shared = None
    special = []
    for e in range(len(mesh.elements)):
        basis = ElementBasis(mesh, classification, e)
        pure = (classification.tags[e] == msh.STANDARD
                and not basis.j_local and not basis.k_local)
        if pure and shared is not None:
            dofs = dofmap.column_dofs(basis.columns)
            rows.append(np.repeat(dofs, len(dofs)))
            cols.append(np.tile(dofs, len(dofs)))
            data.append(shared[0].ravel())
            npts_total += shared[1]
            continue
        b2, Ke, npts = element_stiffness(mesh, classification, e, method,
                                         material, standard_grid)
        if pure and shared is None:
            shared = (Ke, npts)
        dofs = dofmap.column_dofs(basis.columns)
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        data.append(Ke.ravel())
        npts_total += npts
        if not pure:
            special.append(e)

    K = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(ndof, ndof)).tocsr()

    F = np.zeros(ndof)
    x, wg = np.polynomial.legendre.leggauss(2)
    for side, value in tractions:
        for e, (i0, i1) in boundary_edges(mesh, side):
            basis = ElementBasis(mesh, classification, e)
            nds = mesh.elements[e]
            a, b = mesh.nodes[nds[i0]], mesh.nodes[nds[i1]]
            pts = 0.5 * (a + b) + np.outer(x, 0.5 * (b - a))
            w = wg * 0.5 * np.linalg.norm(b - a)
            tvals = value(pts) if callable(value) else \
                np.broadcast_to(np.asarray(value, dtype=float),
                                (len(pts), mesh.dim))
            vals = basis.values(pts)
            dofs = dofmap.column_dofs(basis.columns)
            fe = np.einsum("p,pc,pd->cd", w, vals, tvals).ravel()
            np.add.at(F, dofs, fe)
    return GlobalSystem(K, F, dofmap, npts_total)


def heaviside_support_constraints(mesh, classification, dofmap):
    """Constrain to zero the Heaviside DOFs whose node support is cut with
    relative area below 1e-4 on one side (conditioning safeguard)."""
    out = {}
    if classification.crack is None:
        return out
    supports = {}
    for e in range(len(mesh.elements)):
        for n in mesh.elements[e]:
            supports.setdefault(int(n), []).append(e)
    for n in classification.node_set_J:
        plus = minus = 0.0
        for e in supports[int(n)]:
            lo, hi = mesh.element_box(e)
            if classification.tags[e] == msh.SPLIT:
                cells = quad.partition(lo, hi, msh.SPLIT, "sm",
                                       classification.crack, e)
                for sc in cells:
                    if sc.side > 0:
                        plus += sc.measure
                    else:
                        minus += sc.measure
            else:
                area = float(np.prod(hi - lo))
                c = 0.5 * (lo + hi)
                if msh.signed_distance(classification.crack, c) >= 0:
                    plus += area
                else:
                    minus += area
        if min(plus, minus) / (plus + minus) < _SUPPORT_CUTOFF:
            base = dofmap.a_base[int(n)]
            for d in range(dofmap.dim):
                out[base + d] = 0.0
    return out


@dataclass
class ReducedSystem:
    K: sp.csc_matrix
    rhs: np.ndarray
    free: np.ndarray
    values: np.ndarray     # prescribed values on the full DOF vector
    ndof: int


def apply_dirichlet(system, constraints):
    """Symmetric elimination of prescribed DOFs (columns moved to the RHS)."""
    ndof = system.ndof
    fixed = np.fromiter(constraints.keys(), dtype=int,
                        count=len(constraints))
    vals = np.fromiter(constraints.values(), dtype=float,
                       count=len(constraints))
    mask = np.ones(ndof, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    full_vals = np.zeros(ndof)
    full_vals[fixed] = vals
    K = system.K.tocsc()
    rhs = system.F[free] - K[free][:, fixed] @ vals
    return ReducedSystem(K[free][:, free], rhs, free, full_vals, ndof)


def solve_reduced(reduced):
    """Direct sparse solve; returns (u_full, relative residual)."""
    u = reduced.values.copy()
    if len(reduced.free) == 0:
        return u, 0.0
    try:
        lu = spla.splu(reduced.K.tocsc())
    except RuntimeError as err:
        raise ValueError(f"singular reduced system: {err}") from err
    uf = lu.solve(reduced.rhs)
    res = np.linalg.norm(reduced.K @ uf - reduced.rhs) \
        / max(np.linalg.norm(reduced.rhs), 1e-300)
    u[reduced.free] = uf
    return u, float(res)


def solve(system, constraints):
    """Convenience wrapper: eliminate constraints and solve."""
    reduced = apply_dirichlet(system, constraints)
    return solve_reduced(reduced)


class FeField:
    """Evaluates the discrete displacement field and its gradient."""

    def __init__(self, mesh, classification, dofmap, u):
        self.mesh = mesh
        self.clf = classification
        self.dofmap = dofmap
        self.u = np.asarray(u, dtype=float)
        self._cache = {}

    def _basis(self, e):
        if e not in self._cache:
            b = ElementBasis(self.mesh, self.clf, e)
            self._cache[e] = (b, self.dofmap.column_dofs(b.columns))
        return self._cache[e]

    def _grouped(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts, self.mesh.locate(pts)

    def displacement(self, pts):
        pts, elems = self._grouped(pts)
        dim = self.mesh.dim
        out = np.empty((len(pts), dim))
        for e in np.unique(elems):
            idx = np.flatnonzero(elems == e)
            basis, dofs = self._basis(int(e))
            vals = basis.values(pts[idx])
            ue = self.u[dofs].reshape(-1, dim)
            out[idx] = vals @ ue
        return out

    def displacement_gradient(self, pts):
        """du_i/dx_j as (npts, dim, dim); points must lie off the crack."""
        pts, elems = self._grouped(pts)
        dim = self.mesh.dim
        out = np.empty((len(pts), dim, dim))
        for e in np.unique(elems):
            idx = np.flatnonzero(elems == e)
            basis, dofs = self._basis(int(e))
            grads = basis.gradients(pts[idx])
            ue = self.u[dofs].reshape(-1, dim)
            out[idx] = np.einsum("pcj,ci->pij", grads, ue)
        return out
