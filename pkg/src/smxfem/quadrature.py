"""Gauss rules, integration subcells and cut-element partitioning.

Subcells are integration-only subdivisions of an element (no DOFs).  Cut
elements are partitioned so the crack lies on subcell boundaries; subcell
counts per element class follow the fixed scheme

    2D: standard sm 4 / lsm 1, tip 5, split 8
    3D: standard sm 6 / lsm 1, tip 24, split 12

The 2D tip construction fans the element boundary (with the crack entry
point inserted) from the tip; split elements fan the two crack-side
polygons from their centroids.  In 3D the crack is an axis-aligned planar
half-plane: split = 2 boxes, tip = 4 boxes (crack plane x front plane),
tetrahedralized with the 6-tet Kuhn subdivision.  The conventional-XFEM 3D
tip rule uses the 5-tet box decomposition with a degree-5 rule (20 x 15 =
300 points); split uses 12 Kuhn tets with the degree-3 rule (60 points).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import mesh as msh

SQ5 = np.sqrt(5.0)
SQ15 = np.sqrt(15.0)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray


def gauss_segment(n):
    """n-point Gauss rule on [-1, 1] (exact to degree 2n-1)."""
    x, w = leggauss(n)
    return QuadratureRule(x, w)


def tensor_rule(dim, n=2):
    """n^dim tensor Gauss rule on [-1, 1]^dim."""
    x, w = leggauss(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    W = np.ones(len(pts))
    for wg in wgrids:
        W *= wg.ravel()
    return QuadratureRule(pts, W)


def triangle_rule(order="low"):
    """Reference-triangle rules: 'low' = 3-point degree 2, 'high13' =
    13-point degree 7 (weights sum to 1/2)."""
    if order == "low":
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        w = np.full(3, 1 / 6)
        return QuadratureRule(pts, w)
    if order != "high13":
        raise ValueError(f"unknown triangle rule {order!r}")
    bary = [(np.array([1 / 3, 1 / 3, 1 / 3]), -0.149570044467670)]
    for a, wg in ((0.260345966079038, 0.175615257433204),
                  (0.065130102902216, 0.053347235608839)):
        c = 1.0 - 2.0 * a
        for lam in ((a, a, c), (a, c, a), (c, a, a)):
            bary.append((np.array(lam), wg))
    a, b = 0.312865496004875, 0.638444188569809
    c = 1.0 - a - b
    for lam in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b),
                (c, b, a)):
        bary.append((np.array(lam), 0.077113760890257))
    pts = np.array([[l[1], l[2]] for l, _ in bary])
    w = np.array([wg for _, wg in bary]) * 0.5
    return QuadratureRule(pts, w)


def tet_rule(npts):
    """Reference-tetrahedron rules (weights sum to 1/6): 4-point degree 2,
    5-point degree 3, 15-point degree 5."""
    if npts == 4:
        a = (5.0 + 3.0 * SQ5) / 20.0
        b = (5.0 - SQ5) / 20.0
        pts, w = [], []
        for i in range(4):
            lam = [b] * 4
            lam[i] = a
            pts.append(lam)
            w.append(0.25)
    elif npts == 5:
        pts = [[0.25] * 4]
        w = [-0.8]
        for i in range(4):
            lam = [1 / 6] * 4
            lam[i] = 0.5
            pts.append(lam)
            w.append(0.45)
    elif npts == 15:
        pts = [[0.25] * 4]
        w = [16 / 135]
        for a, wg in (((7.0 - SQ15) / 34.0, (2665.0 + 14.0 * SQ15) / 37800.0),
                      ((7.0 + SQ15) / 34.0, (2665.0 - 14.0 * SQ15) / 37800.0)):
            b = 1.0 - 3.0 * a
            for i in range(4):
                lam = [a] * 4
                lam[i] = b
                pts.append(lam)
                w.append(wg)
        a = (10.0 - 2.0 * SQ15) / 40.0
        b = 0.5 - a
        for pair in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
            lam = [a] * 4
            lam[pair[0]] = b
            lam[pair[1]] = b
            pts.append(lam)
            w.append(10 / 189)
    else:
        raise ValueError(f"no {npts}-point tetrahedron rule")
    bary = np.asarray(pts)
    return QuadratureRule(bary[:, 1:], np.asarray(w) / 6.0)


# ---------------------------------------------------------------------------
# faces and subcells

@dataclass(frozen=True)
class Face:
    """Boundary face of a subcell: a segment (2D) or triangle/rectangle (3D)
    with outward unit normal."""
    vertices: np.ndarray
    normal: np.ndarray
    measure: float

    def rule(self):
        """Physical Gauss points and weights on the face (2-pt segment,
        3-pt triangle, 2x2 rectangle)."""
        v = self.vertices
        if len(v) == 2:
            x, w = leggauss(2)
            mid, half = 0.5 * (v[0] + v[1]), 0.5 * (v[1] - v[0])
            return mid + np.outer(x, half), w * self.measure / 2.0
        if len(v) == 3:
            lam = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6],
                            [1 / 6, 1 / 6, 2 / 3]])
            return lam @ v, np.full(3, self.measure / 3.0)
        # axis-aligned rectangle: tensor 2x2 in its plane
        x, w = leggauss(2)
        c = v.mean(axis=0)
        e1 = 0.5 * (v[1] - v[0])
        e2 = 0.5 * (v[3] - v[0])
        pts = np.array([c + a * e1 + b * e2 for a in x for b in x])
        return pts, np.full(4, self.measure / 4.0)


@dataclass
class Subcell:
    """Integration subcell; ``kind`` in {'tri','quad','tet','hex'}.  quad and
    hex subcells are axis-aligned boxes."""
    parent: int
    kind: str
    vertices: np.ndarray
    side: float = 0.0          # +-1 if the cell abuts the crack, else 0

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def measure(self):
        v = self.vertices
        if self.kind == "tri":
            return 0.5 * abs(np.cross(v[1] - v[0], v[2] - v[0]))
        if self.kind == "quad":
            lo, hi = v.min(axis=0), v.max(axis=0)
            return float(np.prod(hi - lo))
        if self.kind == "tet":
            return abs(np.linalg.det(v[1:] - v[0])) / 6.0
        lo, hi = v.min(axis=0), v.max(axis=0)
        return float(np.prod(hi - lo))

    @property
    def centroid(self):
        if self.kind in ("tri", "tet"):
            return self.vertices.mean(axis=0)
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return 0.5 * (lo + hi)

    def boundary_faces(self):
        v = self.vertices
        if self.kind in ("tri", "quad") and self.dim == 2:
            faces = []
            n = len(v)
            if _polygon_area(v) < 0:
                v = v[::-1]
            for i in range(n):
                a, b = v[i], v[(i + 1) % n]
                L = float(np.linalg.norm(b - a))
                normal = np.array([(b - a)[1], -(b - a)[0]]) / L
                faces.append(Face(np.array([a, b]), normal, L))
            return faces
        if self.kind == "tet":
            faces = []
            for tri, opp in (((0, 1, 2), 3), ((0, 1, 3), 2), ((0, 2, 3), 1),
                             ((1, 2, 3), 0)):
                a, b, c = v[list(tri)]
                nv = np.cross(b - a, c - a)
                area = 0.5 * float(np.linalg.norm(nv))
                normal = nv / (2.0 * area)
                if normal @ (v[opp] - a) > 0:
                    normal = -normal
                faces.append(Face(np.array([a, b, c]), normal, area))
            return faces
        # hex (axis-aligned box)
        lo, hi = v.min(axis=0), v.max(axis=0)
        faces = []
        for ax in range(3):
            o1, o2 = (ax + 1) % 3, (ax + 2) % 3
            for val, sgn in ((lo[ax], -1.0), (hi[ax], 1.0)):
                corners = []
                for a, b in ((lo[o1], lo[o2]), (hi[o1], lo[o2]),
                             (hi[o1], hi[o2]), (lo[o1], hi[o2])):
                    p = np.empty(3)
                    p[ax], p[o1], p[o2] = val, a, b
                    corners.append(p)
                normal = np.zeros(3)
                normal[ax] = sgn
                area = float((hi[o1] - lo[o1]) * (hi[o2] - lo[o2]))
                faces.append(Face(np.array(corners), normal, area))
        return faces

    def interior_rule(self, npts_kind="moment"):
        """Physical interior points/weights.  'moment' matches the smoothing
        basis size (tri 3, quad 4, tet 4, hex 8); 'one' is the centroid;
        integers pick that many points for tri/tet."""
        v = self.vertices
        if npts_kind == "one":
            return self.centroid[None, :], np.array([self.measure])
        if self.kind == "tri":
            n = 3 if npts_kind == "moment" else npts_kind
            rule = triangle_rule("low" if n == 3 else "high13")
            pts = v[0] + rule.points @ np.array([v[1] - v[0], v[2] - v[0]])
            return pts, rule.weights * (2.0 * self.measure)
        if self.kind == "tet":
            n = 4 if npts_kind == "moment" else npts_kind
            rule = tet_rule(n)
            pts = v[0] + rule.points @ (v[1:] - v[0])
            return pts, rule.weights * (6.0 * self.measure)
        lo, hi = v.min(axis=0), v.max(axis=0)
        rule = tensor_rule(self.dim)
        pts = 0.5 * (lo + hi) + 0.5 * rule.points * (hi - lo)
        return pts, rule.weights * self.measure / 2 ** self.dim


def _polygon_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def moment_basis(kind):
    """Monomial exponent list of the smoothing basis for a subcell kind."""
    if kind == "tri":
        return [(0, 0), (1, 0), (0, 1)]
    if kind == "quad":
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    if kind == "tet":
        return [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    return [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
            (1, 1, 0), (0, 1, 1), (1, 0, 1), (1, 1, 1)]


# ---------------------------------------------------------------------------
# 2D partitioning

def _box_polygon(lo, hi):
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]],
                     [lo[0], hi[1]]])


def _perimeter_coord(p, lo, hi):
    """Arclength coordinate of a boundary point, CCW from the lower-left."""
    w, h = hi[0] - lo[0], hi[1] - lo[1]
    tol = 1e-9 * min(w, h)
    if abs(p[1] - lo[1]) < tol:
        return p[0] - lo[0]
    if abs(p[0] - hi[0]) < tol:
        return w + (p[1] - lo[1])
    if abs(p[1] - hi[1]) < tol:
        return w + h + (hi[0] - p[0])
    if abs(p[0] - lo[0]) < tol:
        return 2 * w + h + (hi[1] - p[1])
    raise ValueError("point not on box boundary")


def _subcell_side(crack, tri, parent):
    c = tri.mean(axis=0)
    return float(np.sign(msh.signed_distance(crack, c)))


def _fan_from_centroid(poly, parent, crack):
    # area centroid rather than vertex mean: robust for uneven polygons
    A = _polygon_area(poly)
    cx = cy = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        f = x0 * y1 - x1 * y0
        cx += (x0 + x1) * f
        cy += (y0 + y1) * f
    c = np.array([cx, cy]) / (6.0 * A)
    cells = []
    for i in range(n):
        tri = np.array([poly[i], poly[(i + 1) % n], c])
        sc = Subcell(parent, "tri", tri)
        sc.side = _subcell_side(crack, tri, parent)
        cells.append(sc)
    return cells


def _split_partition(lo, hi, crack, parent):
    path = msh.crack_path_in_box(crack, lo, hi)
    if len(path) < 2:
        raise ValueError("split element without a crack path")
    A, B = np.asarray(path[0]), np.asarray(path[-1])
    sA, sB = _perimeter_coord(A, lo, hi), _perimeter_coord(B, lo, hi)
    corners = _box_polygon(lo, hi)
    perim = 2.0 * ((hi[0] - lo[0]) + (hi[1] - lo[1]))
    scorn = [_perimeter_coord(c, lo, hi) for c in corners]
    interior = [np.asarray(p) for p in path[1:-1]]

    def walk(s_from, s_to):
        span = (s_to - s_from) % perim
        pts = [(0.0, None)]
        for c, s in zip(corners, scorn):
            d = (s - s_from) % perim
            if 1e-12 * perim < d < span - 1e-12 * perim:
                pts.append((d, c))
        pts.sort(key=lambda t: t[0])
        return [p for _, p in pts[1:]]

    poly1 = [A] + walk(sA, sB) + [B] + interior[::-1]
    poly2 = [B] + walk(sB, sA) + [A] + interior
    cells = []
    for poly in (np.array(poly1), np.array(poly2)):
        cells.extend(_fan_from_centroid(poly, parent, crack))
    return cells


def _tip_partition(lo, hi, crack, parent):
    path = msh.crack_path_in_box(crack, lo, hi)
    if len(path) != 2:
        raise ValueError("tip element crack path must be a single segment")
    tol = 1e-9 * min(hi[0] - lo[0], hi[1] - lo[1])
    on0 = msh._on_box_boundary(path[0], lo, hi, tol)
    on1 = msh._on_box_boundary(path[1], lo, hi, tol)
    if on0 == on1:
        raise ValueError("tip element needs one boundary and one interior end")
    entry, tip = (path[0], path[1]) if on0 else (path[1], path[0])
    entry, tip = np.asarray(entry), np.asarray(tip)
    corners = _box_polygon(lo, hi)
    sE = _perimeter_coord(entry, lo, hi)
    ring = sorted(list(zip([_perimeter_coord(c, lo, hi) for c in corners],
                           range(4))))
    verts = []
    inserted = False
    for s, idx in ring:
        if not inserted and s > sE:
            verts.append(entry)
            inserted = True
        verts.append(corners[idx])
    if not inserted:
        verts.append(entry)
    cells = []
    n = len(verts)
    for i in range(n):
        tri = np.array([verts[i], verts[(i + 1) % n], tip])
        if _polygon_area(tri) < 0:
            tri = tri[::-1]
        sc = Subcell(parent, "tri", tri)
        sc.side = _subcell_side(crack, tri, parent)
        cells.append(sc)
    return cells


def _standard_grid_cells(lo, hi, grid, parent):
    gx, gy = grid
    xs = np.linspace(lo[0], hi[0], gx + 1)
    ys = np.linspace(lo[1], hi[1], gy + 1)
    cells = []
    for j in range(gy):
        for i in range(gx):
            verts = _box_polygon((xs[i], ys[j]), (xs[i + 1], ys[j + 1]))
            cells.append(Subcell(parent, "quad", verts))
    return cells


def partition(lo, hi, tag, method, crack=None, parent=-1, standard_grid=None):
    """Partition one 2D element into integration subcells.

    Standard elements: sm -> 4 congruent subquads, lsm/xfem -> the element
    itself (``standard_grid`` overrides).  Tip -> 5 triangles, split -> 8
    triangles, identical for all methods (only the rules differ).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if tag == msh.STANDARD:
        if standard_grid is None:
            standard_grid = (2, 2) if method == "sm" else (1, 1)
        return _standard_grid_cells(lo, hi, standard_grid, parent)
    if crack is None:
        raise ValueError("cut-element partition needs the crack")
    if tag == msh.SPLIT:
        return _split_partition(lo, hi, crack, parent)
    if tag == msh.TIP:
        return _tip_partition(lo, hi, crack, parent)
    raise ValueError(f"unknown element tag {tag}")


def interior_points(subcell, method, tag):
    """Stiffness-integration points/weights on a subcell for a backend."""
    if method == "sm":
        return subcell.interior_rule("one")
    if method == "lsm":
        return subcell.interior_rule("moment")
    if subcell.kind == "tri":
        return subcell.interior_rule(13 if tag == msh.TIP else 3)
    if subcell.kind == "tet":
        return subcell.interior_rule(15 if tag == msh.TIP else 5)
    return subcell.interior_rule("moment")   # tensor Gauss on boxes


# ---------------------------------------------------------------------------
# 3D partitioning (planar axis-aligned cracks; used by the 3D kernels)

@dataclass(frozen=True)
class PlanarCrack3D:
    """Half-plane crack {x[plane_axis] = plane_offset, x[front_axis] <=
    front_offset}; the front line is parallel to the remaining axis."""
    plane_axis: int
    plane_offset: float
    front_axis: int
    front_offset: float


_KUHN_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1),
               (2, 1, 0)]


def kuhn_tets(lo, hi):
    """Six-tet Kuhn subdivision of a box."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    tets = []
    for perm in _KUHN_PERMS:
        verts = [lo.copy()]
        p = lo.copy()
        for ax in perm:
            p = p.copy()
            p[ax] = hi[ax]
            verts.append(p)
        tets.append(np.array(verts))
    return tets


def five_tets(lo, hi):
    """Five-tet decomposition of a box (central tet + 4 corner tets)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def corner(bits):
        return np.where(np.asarray(bits, dtype=bool), hi, lo)

    c = corner
    return [np.array([c((1, 0, 0)), c((0, 1, 0)), c((0, 0, 1)), c((1, 1, 1))]),
            np.array([c((0, 0, 0)), c((1, 0, 0)), c((0, 1, 0)), c((0, 0, 1))]),
            np.array([c((1, 1, 0)), c((1, 0, 0)), c((0, 1, 0)), c((1, 1, 1))]),
            np.array([c((1, 0, 1)), c((1, 0, 0)), c((0, 0, 1)), c((1, 1, 1))]),
            np.array([c((0, 1, 1)), c((0, 1, 0)), c((0, 0, 1)), c((1, 1, 1))])]


def _cut_box(lo, hi, axis, value):
    m1, m2 = hi.copy(), lo.copy()
    m1[axis] = value
    m2[axis] = value
    return [(lo.copy(), m1), (m2, hi.copy())]


def partition3d(lo, hi, tag, method, crack=None, parent=-1):
    """3D analogue of :func:`partition` for planar axis-aligned cracks."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if tag == msh.STANDARD:
        if method == "sm":
            return [Subcell(parent, "tet", t) for t in kuhn_tets(lo, hi)]
        return [Subcell(parent, "hex", _box_corners3d(lo, hi))]
    if crack is None:
        raise ValueError("cut-element partition needs the crack")
    if tag == msh.SPLIT:
        boxes = _cut_box(lo, hi, crack.plane_axis, crack.plane_offset)
        cells = []
        for blo, bhi in boxes:
            side = 1.0 if 0.5 * (blo + bhi)[crack.plane_axis] \
                > crack.plane_offset else -1.0
            for t in kuhn_tets(blo, bhi):
                cells.append(Subcell(parent, "tet", t, side))
        return cells
    if tag == msh.TIP:
        cells = []
        for blo, bhi in _cut_box(lo, hi, crack.plane_axis,
                                 crack.plane_offset):
            side = 1.0 if 0.5 * (blo + bhi)[crack.plane_axis] \
                > crack.plane_offset else -1.0
            for blo2, bhi2 in _cut_box(blo, bhi, crack.front_axis,
                                       crack.front_offset):
                tets = five_tets(blo2, bhi2) if method == "xfem" \
                    else kuhn_tets(blo2, bhi2)
                for t in tets:
                    cells.append(Subcell(parent, "tet", t, side))
        return cells
    raise ValueError(f"unknown element tag {tag}")


def _box_corners3d(lo, hi):
    out = []
    for z in (lo[2], hi[2]):
        for x, y in ((lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]),
                     (lo[0], hi[1])):
            out.append([x, y, z])
    return np.array(out)


def census(tag, method, dim=2):
    """Interior-point count of one element for a backend (Table-1 scheme)."""
    if dim == 2:
        lo, hi = np.zeros(2), np.ones(2)
        if tag == msh.STANDARD:
            cells = partition(lo, hi, tag, method)
        elif tag == msh.SPLIT:
            crack = msh.crack_through([[-1.0, 0.4701], [2.0, 0.4701]])
            cells = partition(lo, hi, tag, method, crack)
        else:
            crack = msh.edge_crack([[-1.0, 0.4701], [0.5301, 0.4701]])
            cells = partition(lo, hi, tag, method, crack)
    else:
        lo, hi = np.zeros(3), np.ones(3)
        crack = PlanarCrack3D(1, 0.4701, 0, 0.5301)
        cells = partition3d(lo, hi, tag, method, crack)
    return sum(len(interior_points(sc, method, tag)[1]) for sc in cells)
