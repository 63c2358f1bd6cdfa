"""Heaviside and crack-tip enrichment functions and their shifted forms.

The four tip functions are sqrt(r)*{sin(t/2), cos(t/2), sin(t)sin(t/2),
sin(t)cos(t/2)} in tip polar coordinates; only the first one jumps across
the crack faces (theta = +-pi).  Shifting (value minus value at the owning
node) keeps the enriched approximation interpolatory at the nodes.
"""

import numpy as np

from . import mesh as msh

_ONCRACK_TOL = 1e-12


def heaviside(phi):
    """Sign enrichment: +1 for phi >= 0, -1 otherwise (0 ties to +1)."""
    return np.where(np.asarray(phi) >= 0.0, 1.0, -1.0)


def tip_functions(r, theta):
    """Values of the four near-tip basis functions, shape (..., 4)."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sr = np.sqrt(r)
    st, ct = np.sin(theta / 2), np.cos(theta / 2)
    s = np.sin(theta)
    return np.stack([sr * st, sr * ct, sr * s * st, sr * s * ct], axis=-1)


def tip_function_gradients(r, theta, frame):
    """Global-coordinate gradients of the tip functions, (..., 4, 2).

    ``frame`` is the 2x2 matrix [tangent, normal] (columns) of the tip.
    Each component scales as 1/sqrt(r); r = 0 is singular.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("tip function gradient is singular at r = 0")
    sr = np.sqrt(r)
    st, ct = np.sin(theta / 2), np.cos(theta / 2)
    s, c = np.sin(theta), np.cos(theta)

    # dF/dr and dF/dtheta of Fm = sqrt(r) * fm(theta)
    f = np.stack([st, ct, s * st, s * ct], axis=-1)
    fp = np.stack([ct / 2, -st / 2,
                   c * st + s * ct / 2,
                   c * ct - s * st / 2], axis=-1)
    dr = f / (2 * sr[..., None])
    dt = sr[..., None] * fp

    # local cartesian (x1 along tangent, x2 along normal)
    d1 = c[..., None] * dr - (s / r)[..., None] * dt
    d2 = s[..., None] * dr + (c / r)[..., None] * dt
    frame = np.asarray(frame, dtype=float)
    grad = (d1[..., None] * frame[:, 0]) + (d2[..., None] * frame[:, 1])
    return grad


def tip_frame(crack, tip_index):
    t = crack.tips[tip_index]
    return np.column_stack([t.tangent, t.normal])


def crack_side_theta(r, theta, xt, side):
    """Snap theta of points lying exactly on the crack faces to side*pi.

    On-crack points (|theta| ~ pi) are ambiguous; quadrature points that sit
    on a subcell edge shared with the crack take the subcell's side.
    """
    if side == 0:
        return theta
    on = (np.abs(np.abs(theta) - np.pi) < 1e-9) & (xt < 0)
    return np.where(on, side * np.pi, theta)


def shifted_heaviside_values(crack, pts, node_xy, side=0):
    """H(x) - H(x_J) at ``pts``; ``side`` (+-1) disambiguates on-crack points."""
    phi = msh.signed_distance(crack, pts)
    phi = np.atleast_1d(phi)
    h = heaviside(phi)
    if side != 0:
        scale = max(1.0, float(np.max(np.abs(np.asarray(pts)))))
        h = np.where(np.abs(phi) < _ONCRACK_TOL * scale, float(side), h)
    hj = heaviside(msh.signed_distance(crack, node_xy))
    return h - hj


def shifted_tip_values(crack, tip_index, pts, node_xy, side=0):
    """F_m(x) - F_m(x_K) for m = 1..4, shape (npts, 4)."""
    tip = crack.tips[tip_index]
    pts2 = np.atleast_2d(np.asarray(pts, dtype=float))
    d = pts2 - tip.point
    xt = d @ tip.tangent
    xn = d @ tip.normal
    r = np.hypot(xt, xn)
    theta = np.arctan2(xn, xt)
    theta = np.where(theta == -np.pi, np.pi, theta)
    theta = crack_side_theta(r, theta, xt, side)
    rk, tk = msh.tip_polar(crack, tip_index, node_xy)
    return tip_functions(r, theta) - tip_functions(rk, tk)


class ElementBasis:
    """Scalar basis columns of one element: standard shape functions followed
    by shifted Heaviside columns (J nodes) and shifted tip columns (K nodes,
    4 each).  Smoothing backends consume values only; the conventional
    backend also uses gradients.
    """

    def __init__(self, mesh, classification, e):
        self.mesh = mesh
        self.clf = classification
        self.e = int(e)
        self.lo, self.hi = mesh.element_box(e)
        nodes = mesh.elements[e]
        self.nodes = nodes
        jset = set(classification.node_set_J.tolist())
        kset = set(classification.node_set_K.tolist())
        self.j_local = [i for i, n in enumerate(nodes) if int(n) in jset]
        self.k_local = [i for i, n in enumerate(nodes) if int(n) in kset]
        self.k_tip = [classification.tip_of_node[int(nodes[i])]
                      for i in self.k_local]
        self.columns = [("u", int(n)) for n in nodes]
        self.columns += [("a", int(nodes[i])) for i in self.j_local]
        for i in self.k_local:
            self.columns += [("b", int(nodes[i]), m) for m in range(4)]

    @property
    def ncols(self):
        return len(self.columns)

    def values(self, pts, side=0):
        """(npts, ncols) scalar basis values; ``side`` resolves on-crack pts."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        N = msh.shape_values(self.lo, self.hi, pts)
        cols = [N]
        crack = self.clf.crack
        for i in self.j_local:
            xj = self.mesh.nodes[self.nodes[i]]
            dh = shifted_heaviside_values(crack, pts, xj, side)
            cols.append((N[:, i] * dh)[:, None])
        for i, tipidx in zip(self.k_local, self.k_tip):
            xk = self.mesh.nodes[self.nodes[i]]
            df = shifted_tip_values(crack, tipidx, pts, xk, side)
            cols.append(N[:, i][:, None] * df)
        return np.hstack(cols)

    def gradients(self, pts):
        """(npts, ncols, dim) gradients for the conventional backend.

        Heaviside columns use the piecewise-constant jump times the shape
        gradient; tip columns add the analytic tip-function gradients.
        Points must not sit on the crack or at a tip.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        N = msh.shape_values(self.lo, self.hi, pts)
        G = msh.shape_gradients(self.lo, self.hi, pts)
        out = [G]
        crack = self.clf.crack
        for i in self.j_local:
            xj = self.mesh.nodes[self.nodes[i]]
            dh = shifted_heaviside_values(crack, pts, xj)
            out.append((G[:, i, :] * dh[:, None])[:, None, :])
        for i, tipidx in zip(self.k_local, self.k_tip):
            xk = self.mesh.nodes[self.nodes[i]]
            df = shifted_tip_values(crack, tipidx, pts, xk)
            r, theta = msh.tip_polar(crack, tipidx, pts)
            r, theta = np.atleast_1d(r), np.atleast_1d(theta)
            gf = tip_function_gradients(r, theta, tip_frame(crack, tipidx))
            g = (G[:, i, None, :] * df[:, :, None]
                 + N[:, i, None, None] * gf)
            out.append(g)
        return np.concatenate(out, axis=1)
