"""Analytical crack-tip reference fields, SIF extraction and error norms.

The near-tip (Williams) expansions for modes I and II supply boundary data
for the infinite-plate benchmark, auxiliary fields for the domain-form
interaction integral, and exact fields for the error norms.  All closed
forms are written in the tip-local frame (x1 along the crack extension,
x2 the left normal) and rotated to global coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from . import mesh as msh
from . import quadrature as quad
from .assembly import Material
from .enrichment import ElementBasis


@dataclass
class SifPair:
    k1: float
    k2: float
    meta: dict = field(default_factory=dict)


def _kappa(material):
    nu = material.nu
    if material.regime == "plane-stress":
        return (3.0 - nu) / (1.0 + nu)
    return 3.0 - 4.0 * nu


def williams_displacement(mode, r, theta, k, material):
    """Tip-local displacements of the first Williams term, shape (..., 2)."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    mu = material.E / (2.0 * (1.0 + material.nu))
    kap = _kappa(material)
    c = k / (2.0 * mu) * np.sqrt(r / (2.0 * np.pi))
    st, ct = np.sin(theta / 2.0), np.cos(theta / 2.0)
    cth = np.cos(theta)
    if mode == 1:
        ux = c * ct * (kap - cth)
        uy = c * st * (kap - cth)
    else:
        ux = c * st * (kap + 2.0 + cth)
        uy = -c * ct * (kap - 2.0 + cth)
    return np.stack([ux, uy], axis=-1)


def williams_displacement_gradient(mode, r, theta, k, material):
    """Tip-local displacement gradient du_i/dx_j, shape (..., 2, 2)."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("Williams gradient singular at r = 0")
    mu = material.E / (2.0 * (1.0 + material.nu))
    kap = _kappa(material)
    c = k / (2.0 * mu) / np.sqrt(2.0 * np.pi)
    st, ct = np.sin(theta / 2.0), np.cos(theta / 2.0)
    s, co = np.sin(theta), np.cos(theta)
    sr = np.sqrt(r)
    if mode == 1:
        g = np.stack([ct * (kap - co), st * (kap - co)], axis=-1)
        gp = np.stack([-st * (kap - co) / 2 + ct * s,
                       ct * (kap - co) / 2 + st * s], axis=-1)
    else:
        g = np.stack([st * (kap + 2 + co), -ct * (kap - 2 + co)], axis=-1)
        gp = np.stack([ct * (kap + 2 + co) / 2 - st * s,
                       st * (kap - 2 + co) / 2 + ct * s], axis=-1)
    dr = c * g / (2 * sr[..., None])
    dt = c * sr[..., None] * gp
    d1 = co[..., None] * dr - (s / r)[..., None] * dt
    d2 = s[..., None] * dr + (co / r)[..., None] * dt
    return np.stack([d1, d2], axis=-1)


def williams_stress(mode, r, theta, k):
    """Tip-local stresses (s11, s22, s12) of the first Williams term."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    f = k / np.sqrt(2.0 * np.pi * r)
    st, ct = np.sin(theta / 2.0), np.cos(theta / 2.0)
    s3, c3 = np.sin(1.5 * theta), np.cos(1.5 * theta)
    if mode == 1:
        s11 = f * ct * (1.0 - st * s3)
        s22 = f * ct * (1.0 + st * s3)
        s12 = f * ct * st * c3
    else:
        s11 = -f * st * (2.0 + ct * c3)
        s22 = f * st * ct * c3
        s12 = f * ct * (1.0 - st * s3)
    return np.stack([s11, s22, s12], axis=-1)


def westergaard_displacement(r, theta, k1, E, nu):
    """Mode-I near-tip displacements (plane strain), tip-local coordinates."""
    return williams_displacement(1, r, theta, k1,
                                 Material(E, nu, "plane-strain"))


def westergaard_strain(r, theta, k1, E, nu):
    """Mode-I strain tensor (plane strain), tip-local, shape (..., 2, 2)."""
    g = williams_displacement_gradient(1, r, theta, k1,
                                       Material(E, nu, "plane-strain"))
    return 0.5 * (g + np.swapaxes(g, -1, -2))


class WestergaardField:
    """Exact mixed-mode near-tip field in global coordinates.

    Provides the same displacement / displacement_gradient protocol as the
    discrete field, so it can drive boundary conditions, error norms and
    the extraction self-consistency oracle.
    """

    def __init__(self, crack, tip_index, k1, k2, material):
        self.crack = crack
        self.tip_index = tip_index
        self.k1, self.k2 = float(k1), float(k2)
        self.material = material
        tip = crack.tips[tip_index]
        self.R = np.column_stack([tip.tangent, tip.normal])

    def _polar(self, pts):
        r, theta = msh.tip_polar(self.crack, self.tip_index, pts)
        return np.atleast_1d(r), np.atleast_1d(theta)

    def displacement(self, pts):
        r, theta = self._polar(pts)
        u = np.zeros((len(r), 2))
        if self.k1:
            u += williams_displacement(1, r, theta, self.k1, self.material)
        if self.k2:
            u += williams_displacement(2, r, theta, self.k2, self.material)
        return u @ self.R.T

    def displacement_gradient(self, pts):
        r, theta = self._polar(pts)
        g = np.zeros((len(r), 2, 2))
        if self.k1:
            g += williams_displacement_gradient(1, r, theta, self.k1,
                                                self.material)
        if self.k2:
            g += williams_displacement_gradient(2, r, theta, self.k2,
                                                self.material)
        return np.einsum("ia,pab,jb->pij", self.R, g, self.R)

    def strain_voigt(self, pts):
        g = self.displacement_gradient(pts)
        return np.stack([g[:, 0, 0], g[:, 1, 1],
                         g[:, 0, 1] + g[:, 1, 0]], axis=-1)


class UniformStrainField:
    """Affine reference field (patch tests)."""

    def __init__(self, A, b):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def displacement(self, pts):
        return np.atleast_2d(pts) @ self.A.T + self.b

    def displacement_gradient(self, pts):
        n = len(np.atleast_2d(pts))
        return np.broadcast_to(self.A, (n,) + self.A.shape).copy()

    def strain_voigt(self, pts):
        n = len(np.atleast_2d(pts))
        A = self.A
        if A.shape[0] == 2:
            v = np.array([A[0, 0], A[1, 1], A[0, 1] + A[1, 0]])
        else:
            v = np.array([A[0, 0], A[1, 1], A[2, 2], A[0, 1] + A[1, 0],
                          A[1, 2] + A[2, 1], A[0, 2] + A[2, 0]])
        return np.broadcast_to(v, (n, len(v))).copy()


def edge_reference_KI(sigma, a, W):
    """Empirical single-edge-notch K_I = f(a/W) sigma sqrt(pi a)."""
    al = a / W
    if not 0.0 < al < 1.0:
        raise ValueError("a/W outside formula validity")
    f = 1.12 - 0.231 * al + 10.55 * al ** 2 - 21.72 * al ** 3 \
        + 30.39 * al ** 4
    return f * sigma * np.sqrt(np.pi * a)


def inclined_reference(sigma, a, beta):
    """Infinite-plate SIFs of a center crack inclined by beta to the load
    normal: K_I = sigma sqrt(pi a) cos^2 beta, K_II = ... sin beta cos beta."""
    if not 0.0 <= beta <= np.pi / 2 + 1e-12:
        raise ValueError("beta outside [0, pi/2]")
    k = sigma * np.sqrt(np.pi * a)
    return SifPair(k * np.cos(beta) ** 2, k * np.sin(beta) * np.cos(beta))


# ---------------------------------------------------------------------------
# interaction integral

def _ramp(r, r1, r2):
    """Cubic plateau weight q(r) and dq/dr: 1 inside r1, 0 outside r2."""
    s = np.clip((r - r1) / (r2 - r1), 0.0, 1.0)
    q = 1.0 - (3.0 * s * s - 2.0 * s ** 3)
    dq = np.where((r > r1) & (r < r2), -6.0 * s * (1.0 - s) / (r2 - r1), 0.0)
    return q, dq


def _annulus_points(mesh, crack, tip_point, r1, r2, gauss_n=4):
    """Quadrature points/weights of all elements overlapping the ramp
    annulus, honouring the crack (cut elements use their triangulation)."""
    lo_d, hi_d = mesh.extents
    h = mesh.spacing
    pts_all, w_all = [], []
    rule = quad.tensor_rule(2, gauss_n)
    tri = quad.triangle_rule("high13")
    for e in range(len(mesh.elements)):
        lo, hi = mesh.element_box(e)
        cbox = 0.5 * (lo + hi)
        rad = 0.5 * np.linalg.norm(hi - lo)
        d = np.linalg.norm(cbox - tip_point)
        if d - rad > r2 or d + rad < r1:
            continue
        path = msh.crack_path_in_box(crack, lo, hi) if crack else []
        tip_inside = any(msh._in_half_open_box(t.point, lo, hi)
                         for t in crack.tips) if crack else False
        if len(path) >= 2 or tip_inside:
            tag = msh.TIP if tip_inside else msh.SPLIT
            try:
                cells = quad.partition(lo, hi, tag, "xfem", crack, e)
            except ValueError:
                cells = [quad.Subcell(e, "quad", quad._box_polygon(lo, hi))]
            for sc in cells:
                if sc.kind != "tri":
                    p = 0.5 * (lo + hi) + 0.5 * rule.points * (hi - lo)
                    w = rule.weights * sc.measure / 4.0
                else:
                    v = sc.vertices
                    p = v[0] + tri.points @ np.array([v[1] - v[0],
                                                      v[2] - v[0]])
                    w = tri.weights * 2.0 * sc.measure
                pts_all.append(p)
                w_all.append(w)
        else:
            p = 0.5 * (lo + hi) + 0.5 * rule.points * (hi - lo)
            pts_all.append(p)
            w_all.append(rule.weights * np.prod(hi - lo) / 4.0)
    return np.vstack(pts_all), np.concatenate(w_all)


def _interaction_value(field, crack, tip_index, material, pts, w, r1, r2):
    tip = crack.tips[tip_index]
    R = np.column_stack([tip.tangent, tip.normal])
    xl = (pts - tip.point) @ R
    r = np.hypot(xl[:, 0], xl[:, 1])
    theta = np.arctan2(xl[:, 1], xl[:, 0])
    _, dqdr = _ramp(r, r1, r2)
    mask = dqdr != 0.0
    if not np.any(mask):
        raise ValueError("extraction annulus contains no quadrature points")
    pts, w, r, theta = pts[mask], w[mask], r[mask], theta[mask]
    gradq = (dqdr[mask] / r)[:, None] * xl[mask]

    g_glob = field.displacement_gradient(pts)
    g = np.einsum("ai,pab,bj->pij", R, g_glob, R)
    eps = 0.5 * (g + np.swapaxes(g, -1, -2))
    C = material.C
    ev = np.stack([eps[:, 0, 0], eps[:, 1, 1], 2.0 * eps[:, 0, 1]], axis=-1)
    sv = ev @ C.T
    sig = np.empty_like(g)
    sig[:, 0, 0], sig[:, 1, 1] = sv[:, 0], sv[:, 1]
    sig[:, 0, 1] = sig[:, 1, 0] = sv[:, 2]

    out = []
    for mode in (1, 2):
        ga = williams_displacement_gradient(mode, r, theta, 1.0, material)
        sa_v = williams_stress(mode, r, theta, 1.0)
        sa = np.empty_like(ga)
        sa[:, 0, 0], sa[:, 1, 1] = sa_v[:, 0], sa_v[:, 1]
        sa[:, 0, 1] = sa[:, 1, 0] = sa_v[:, 2]
        epsa = 0.5 * (ga + np.swapaxes(ga, -1, -2))
        wint = np.einsum("pij,pij->p", sig, epsa)
        term = (np.einsum("pij,pi->pj", sa, g[:, :, 0])
                + np.einsum("pij,pi->pj", sig, ga[:, :, 0]))
        term[:, 0] -= wint
        I = float(np.sum(w * np.einsum("pj,pj->p", term, gradq)))
        out.append(material.e_star * I / 2.0)
    return out


def interaction_integral(field, mesh, crack, tip_index, material,
                         r_inner=None, r_outer=None, crack_half_length=None):
    """Extract (K_I, K_II) by the domain-form interaction integral.

    Default annulus: inner 1.5h, outer min(3h + tip-element diagonal, a/2).
    A second evaluation at 0.75x the outer radius provides the plateau
    check, reported in the metadata.
    """
    h = float(np.max(mesh.spacing))
    diag = float(np.linalg.norm(mesh.spacing))
    if r_inner is None:
        r_inner = 1.5 * h
    if r_outer is None:
        r_outer = 3.0 * h + diag
        if crack_half_length is not None:
            r_outer = min(r_outer, 0.5 * crack_half_length)
    if r_outer <= r_inner:
        raise ValueError("extraction annulus is empty")
    tip_pt = crack.tips[tip_index].point
    lo_d, hi_d = mesh.extents
    if np.any(tip_pt - r_outer < lo_d - 1e-12) \
            or np.any(tip_pt + r_outer > hi_d + 1e-12):
        raise ValueError("extraction domain crosses the outer boundary")

    pts, w = _annulus_points(mesh, crack, tip_pt, r_inner, r_outer)
    k1, k2 = _interaction_value(field, crack, tip_index, material,
                                pts, w, r_inner, r_outer)
    r_alt = r_inner + 0.75 * (r_outer - r_inner)
    k1b, k2b = _interaction_value(field, crack, tip_index, material,
                                  pts, w, r_inner, r_alt)
    scale = max(abs(k1), abs(k2), 1e-300)
    plateau = max(abs(k1 - k1b), abs(k2 - k2b)) / scale
    return SifPair(k1, k2, {"radii": (r_inner, r_outer),
                            "alt_radius": r_alt,
                            "alt": (k1b, k2b),
                            "plateau_rel": plateau})


# ---------------------------------------------------------------------------
# error norms

def error_norms(u, mesh, classification, dofmap, method, material,
                reference, standard_grid=None):
    """Relative L2 and energy-seminorm errors against a reference field.

    Integration uses each backend's own subcell points (smoothed strains
    for sm/lsm, compatible strains for xfem), so no quadrature point
    straddles the crack.
    """
    from .assembly import element_strain_operators

    C = material.C
    num_l2 = den_l2 = num_h1 = den_h1 = 0.0
    shared = None
    dim = mesh.dim
    for e in range(len(mesh.elements)):
        basis = ElementBasis(mesh, classification, e)
        pure = (classification.tags[e] == msh.STANDARD
                and not basis.j_local and not basis.k_local)
        if pure and shared is not None:
            local_pts, Bs, ws, V = shared
            lo, hi = mesh.element_box(e)
            pts = local_pts + lo
        else:
            b2, ops = element_strain_operators(mesh, classification, e,
                                               method, standard_grid)
            pts = np.array([op.point for op in ops])
            Bs = [op.B for op in ops]
            ws = np.array([op.weight for op in ops])
            V = basis.values(pts)
            if pure and shared is None:
                lo, hi = mesh.element_box(e)
                shared = (pts - lo, Bs, ws, V)
        dofs = dofmap.column_dofs(basis.columns)
        ue = u[dofs]
        uh = V @ ue.reshape(-1, dim)
        uref = reference.displacement(pts)
        du = uh - uref
        num_l2 += float(ws @ np.sum(du * du, axis=1))
        den_l2 += float(ws @ np.sum(uref * uref, axis=1))
        eh = np.array([B @ ue for B in Bs])
        eref = reference.strain_voigt(pts)
        de = eh - eref
        num_h1 += float(ws @ np.einsum("pi,ij,pj->p", de, C, de))
        den_h1 += float(ws @ np.einsum("pi,ij,pj->p", eref, C, eref))
    rel_l2 = np.sqrt(num_l2 / den_l2) if den_l2 > 0 else np.sqrt(num_l2)
    rel_h1 = np.sqrt(num_h1 / den_h1) if den_h1 > 0 else np.sqrt(num_h1)
    return rel_l2, rel_h1
