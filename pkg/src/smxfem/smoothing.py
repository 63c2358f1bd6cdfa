"""Strain smoothing over subcells via boundary integration.

Constant smoothing averages each shape-function derivative over a subcell
from boundary values alone.  Linear smoothing tests the derivative against
a linear/multilinear monomial basis: for every monomial q and direction i

    sum_m w_m q(p_m) d_i[m] = boundary integral of N q n_i
                              - domain integral of N dq/dx_i

(the divergence-consistency correction), solved as a square moment system
whose size equals the interior-rule point count.  Only function VALUES are
ever needed, for the enriched functions as well - no derivatives, no
Jacobian, no isoparametric map.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import mesh as msh
from . import quadrature as quad
from .enrichment import ElementBasis

logger = logging.getLogger(__name__)

_COND_REPORT = 1e8


@dataclass
class StrainOperator:
    """Strain-displacement matrix at one integration point, with its
    quadrature weight and provenance."""
    B: np.ndarray
    weight: float
    point: np.ndarray
    backend: str
    subcell: int


def strain_matrix(grads):
    """Expand scalar-basis gradients (nfun, dim) into the Voigt
    strain-displacement matrix (3 x 2*nfun in 2D, 6 x 3*nfun in 3D)."""
    nfun, dim = grads.shape
    if dim == 2:
        B = np.zeros((3, 2 * nfun))
        B[0, 0::2] = grads[:, 0]
        B[1, 1::2] = grads[:, 1]
        B[2, 0::2] = grads[:, 1]
        B[2, 1::2] = grads[:, 0]
        return B
    B = np.zeros((6, 3 * nfun))
    gx, gy, gz = grads[:, 0], grads[:, 1], grads[:, 2]
    B[0, 0::3] = gx
    B[1, 1::3] = gy
    B[2, 2::3] = gz
    B[3, 0::3], B[3, 1::3] = gy, gx
    B[4, 1::3], B[4, 2::3] = gz, gy
    B[5, 0::3], B[5, 2::3] = gz, gx
    return B


def _monomial_values(exps, pts, c, s):
    t = (np.atleast_2d(pts) - c) / s
    vals = np.ones((len(t), len(exps)))
    for j, e in enumerate(exps):
        for ax, p in enumerate(e):
            if p:
                vals[:, j] *= t[:, ax] ** p
    return vals


def _monomial_derivatives(exps, pts, c, s, i):
    t = (np.atleast_2d(pts) - c) / s
    out = np.zeros((len(t), len(exps)))
    for j, e in enumerate(exps):
        if e[i] == 0:
            continue
        v = np.full(len(t), e[i] / s)
        for ax, p in enumerate(e):
            pw = p - (1 if ax == i else 0)
            if pw:
                v = v * t[:, ax] ** pw
        out[:, j] = v
    return out


def constant_smoothed_gradients(subcell, values_fn):
    """One averaged gradient per function over the subcell:
    (1/measure) * boundary integral of N n.  Returns (nfun, dim)."""
    measure = subcell.measure
    if measure <= 0.0:
        raise ValueError("degenerate subcell")
    acc = None
    for face in subcell.boundary_faces():
        bp, bw = face.rule()
        vals = values_fn(bp, subcell.side)
        contrib = np.einsum("pf,p,i->fi", vals, bw, face.normal)
        acc = contrib if acc is None else acc + contrib
    return acc / measure


def moment_system(subcell, values_fn):
    """Assemble the linear-smoothing moment system.

    Returns (pts, w, W, F) with W the (nbasis x npts) weighted-monomial
    matrix and F of shape (nbasis, nfun, dim) stacking boundary-minus-
    domain-correction right-hand sides.
    """
    if subcell.measure <= 0.0:
        raise ValueError("degenerate subcell")
    exps = quad.moment_basis(subcell.kind)
    pts, w = subcell.interior_rule("moment")
    c = subcell.centroid
    s = max(np.ptp(subcell.vertices, axis=0))
    Q = _monomial_values(exps, pts, c, s)
    W = (Q * w[:, None]).T
    dim = subcell.dim

    F = None
    for face in subcell.boundary_faces():
        bp, bw = face.rule()
        vals = values_fn(bp, subcell.side)
        qb = _monomial_values(exps, bp, c, s)
        if F is None:
            F = np.zeros((len(exps), vals.shape[1], dim))
        for i in range(dim):
            F[:, :, i] += qb.T @ (vals * (bw * face.normal[i])[:, None])
    vin = values_fn(pts, subcell.side)
    for i in range(dim):
        dq = _monomial_derivatives(exps, pts, c, s, i)
        F[:, :, i] -= dq.T @ (vin * w[:, None])
    return pts, w, W, F


def linear_smoothed_gradients(subcell, values_fn):
    """Divergence-consistent smoothed gradients at the interior points.

    Returns (pts, w, grads) with grads of shape (nfun, npts, dim).
    """
    pts, w, W, F = moment_system(subcell, values_fn)
    cond = np.linalg.cond(W)
    if cond > _COND_REPORT:
        logger.warning("moment matrix condition %.2e on subcell of measure "
                       "%.3e", cond, subcell.measure)
    nb, nfun, dim = F.shape
    try:
        D = np.linalg.solve(W, F.reshape(nb, nfun * dim))
    except np.linalg.LinAlgError as err:
        raise ValueError("degenerate subcell: singular moment matrix") \
            from err
    grads = D.reshape(len(pts), nfun, dim).transpose(1, 0, 2)
    return pts, w, grads


def dc_residuals(subcell, values_fn):
    """Consistency residuals |W d - f| after the moment solve, shape
    (nbasis, nfun, dim)."""
    pts, w, W, F = moment_system(subcell, values_fn)
    nb, nfun, dim = F.shape
    D = np.linalg.solve(W, F.reshape(nb, nfun * dim))
    return np.abs(W @ D - F.reshape(nb, nfun * dim)).reshape(F.shape)


def smoothed_strain_operators(mesh, classification, e, method,
                              standard_grid=None):
    """Strain operators of one element under a smoothing backend.

    Returns (basis, ops): one operator per subcell (sm) or per subcell
    interior point (lsm); columns follow the element's canonical scalar
    basis order (standard, then Heaviside, then tip columns).
    """
    basis = ElementBasis(mesh, classification, e)
    lo, hi = mesh.element_box(e)
    tag = classification.tags[e]
    if mesh.dim == 2:
        cells = quad.partition(lo, hi, tag, method, classification.crack,
                               e, standard_grid)
    else:
        cells = quad.partition3d(lo, hi, tag, method, classification.crack,
                                 e)
    ops = []
    for ci, sc in enumerate(cells):
        if method == "sm":
            g = constant_smoothed_gradients(sc, basis.values)
            ops.append(StrainOperator(strain_matrix(g), sc.measure,
                                      sc.centroid, "sm", ci))
        elif method == "lsm":
            pts, w, grads = linear_smoothed_gradients(sc, basis.values)
            for m in range(len(w)):
                ops.append(StrainOperator(strain_matrix(grads[:, m, :]),
                                          float(w[m]), pts[m], "lsm", ci))
        else:
            raise ValueError(f"not a smoothing backend: {method!r}")
    return basis, ops
