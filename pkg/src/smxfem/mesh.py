"""Structured meshes, crack geometry and element classification.

Meshes are axis-aligned structured grids of 4-node quads (2D) or 8-node
hexes (3D).  Cracks are piecewise-linear polylines with at most two active
tips; the sign convention for the crack level set is + on the left of the
direction of travel along the polyline.
"""

from dataclasses import dataclass, field

import numpy as np

# element tags
STANDARD = 0
SPLIT = 1
TIP = 2

_DEGENERACY_TOL = 1e-9   # x element size, triggers crack perturbation
_PERTURBATION = 1e-6     # x element size, applied to the crack


@dataclass(frozen=True)
class StructuredMesh:
    """Axis-aligned structured grid. ``nodes`` is (nnode, dim), ``elements``
    is (nelem, 4 or 8) with counter-clockwise (2D) / standard hex ordering."""
    nodes: np.ndarray
    elements: np.ndarray
    extents: np.ndarray          # (2, dim): lower & upper corner
    divisions: tuple             # (nx, ny[, nz])

    @property
    def dim(self):
        return self.extents.shape[1]

    @property
    def spacing(self):
        lo, hi = self.extents
        return (hi - lo) / np.asarray(self.divisions, dtype=float)

    def element_box(self, e):
        """Lower/upper corner of element e (axis-aligned)."""
        verts = self.nodes[self.elements[e]]
        return verts.min(axis=0), verts.max(axis=0)

    def element_index(self, ij):
        nx = self.divisions[0]
        if self.dim == 2:
            i, j = ij
            return j * nx + i
        i, j, k = ij
        ny = self.divisions[1]
        return (k * ny + j) * nx + i

    def locate(self, pts):
        """Element index containing each point (half-open cells, clamped to
        the grid so boundary points resolve deterministically)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo, _ = self.extents
        h = self.spacing
        idx = np.floor((pts - lo) / h).astype(int)
        for ax, n in enumerate(self.divisions):
            np.clip(idx[:, ax], 0, n - 1, out=idx[:, ax])
        if self.dim == 2:
            return idx[:, 1] * self.divisions[0] + idx[:, 0]
        nx, ny, _ = self.divisions
        return (idx[:, 2] * ny + idx[:, 1]) * nx + idx[:, 0]


def build_structured_mesh(extents, nx, ny):
    """Structured quad mesh on the rectangle ``extents`` = ((x0,y0),(x1,y1)).

    Nodes are numbered row-major (x fastest); element connectivity is
    counter-clockwise.
    """
    if nx < 1 or ny < 1:
        raise ValueError("subdivision counts must be >= 1")
    extents = np.asarray(extents, dtype=float).reshape(2, 2)
    if np.any(extents[1] <= extents[0]):
        raise ValueError("degenerate extents")
    x = np.linspace(extents[0, 0], extents[1, 0], nx + 1)
    y = np.linspace(extents[0, 1], extents[1, 1], ny + 1)
    X, Y = np.meshgrid(x, y, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    n0 = (j * (nx + 1) + i).ravel()
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    return StructuredMesh(nodes, elements.astype(int), extents, (nx, ny))


def build_structured_box(extents, nx, ny, nz):
    """Structured hex mesh on a box; standard 8-node ordering per element."""
    if min(nx, ny, nz) < 1:
        raise ValueError("subdivision counts must be >= 1")
    extents = np.asarray(extents, dtype=float).reshape(2, 3)
    if np.any(extents[1] <= extents[0]):
        raise ValueError("degenerate extents")
    ax = [np.linspace(extents[0, d], extents[1, d], n + 1)
          for d, n in enumerate((nx, ny, nz))]
    Z, Y, X = np.meshgrid(ax[2], ax[1], ax[0], indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    npx, npy = nx + 1, ny + 1
    elems = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                n0 = (k * npy + j) * npx + i
                base = [n0, n0 + 1, n0 + npx + 1, n0 + npx]
                elems.append(base + [b + npx * npy for b in base])
    return StructuredMesh(nodes, np.array(elems, dtype=int), extents,
                          (nx, ny, nz))


# ---------------------------------------------------------------------------
# shape functions on axis-aligned boxes (bilinear / trilinear)

def shape_values(lo, hi, pts):
    """Values of the 4 (2D) or 8 (3D) corner shape functions at ``pts``,
    shape (npts, nnode)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    t = (pts - lo) / (np.asarray(hi, dtype=float) - lo)
    if pts.shape[1] == 2:
        x, y = t[:, 0], t[:, 1]
        return np.column_stack([(1 - x) * (1 - y), x * (1 - y),
                                x * y, (1 - x) * y])
    x, y, z = t[:, 0], t[:, 1], t[:, 2]
    quad = np.column_stack([(1 - x) * (1 - y), x * (1 - y),
                            x * y, (1 - x) * y])
    return np.hstack([quad * (1 - z)[:, None], quad * z[:, None]])


def shape_gradients(lo, hi, pts):
    """Physical gradients of the corner shape functions, (npts, nnode, dim)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    h = np.asarray(hi, dtype=float) - lo
    t = (pts - lo) / h
    if pts.shape[1] == 2:
        x, y = t[:, 0], t[:, 1]
        g = np.empty((len(pts), 4, 2))
        g[:, 0, 0], g[:, 0, 1] = -(1 - y), -(1 - x)
        g[:, 1, 0], g[:, 1, 1] = (1 - y), -x
        g[:, 2, 0], g[:, 2, 1] = y, x
        g[:, 3, 0], g[:, 3, 1] = -y, (1 - x)
        return g / h
    x, y, z = t[:, 0], t[:, 1], t[:, 2]
    q = np.column_stack([(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y])
    qx = np.column_stack([-(1 - y), (1 - y), y, -y])
    qy = np.column_stack([-(1 - x), -x, x, (1 - x)])
    g = np.empty((len(pts), 8, 3))
    for c, zf, zd in ((0, 1 - z, -1.0), (4, z, 1.0)):
        g[:, c:c + 4, 0] = qx * zf[:, None]
        g[:, c:c + 4, 1] = qy * zf[:, None]
        g[:, c:c + 4, 2] = q * zd
    return g / h


# ---------------------------------------------------------------------------
# crack geometry

@dataclass(frozen=True)
class CrackTip:
    point: np.ndarray
    tangent: np.ndarray   # unit, pointing out of the material (extension dir)

    @property
    def normal(self):
        """Left normal; completes the right-handed tip frame."""
        return np.array([-self.tangent[1], self.tangent[0]])


@dataclass(frozen=True)
class CrackGeometry:
    """Piecewise-linear crack. ``vertices`` ordered along the travel
    direction; + side of the level set is the left of travel."""
    vertices: np.ndarray
    tips: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        if len(v) < 2:
            raise ValueError("crack needs at least two vertices")
        if _polyline_self_intersects(v):
            raise ValueError("crack polyline self-intersects")
        for t in self.tips:
            if abs(np.linalg.norm(t.tangent) - 1.0) > 1e-12:
                raise ValueError("tip tangent must be unit length")

    def translated(self, delta):
        tips = tuple(CrackTip(t.point + delta, t.tangent) for t in self.tips)
        return CrackGeometry(self.vertices + delta, tips)


def _polyline_self_intersects(v):
    for i in range(len(v) - 1):
        for j in range(i + 2, len(v) - 1):
            if _segments_cross(v[i], v[i + 1], v[j], v[j + 1]):
                return True
    return False


def _segments_cross(a, b, c, d):
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def _end_tip(vertices, which):
    if which == 0:
        t = vertices[0] - vertices[1]
        p = vertices[0]
    else:
        t = vertices[-1] - vertices[-2]
        p = vertices[-1]
    return CrackTip(np.asarray(p, dtype=float), t / np.linalg.norm(t))


def crack_through(vertices):
    """Crack running fully through the domain: no active tips."""
    return CrackGeometry(np.asarray(vertices, dtype=float))


def edge_crack(vertices):
    """Crack entering through the boundary; single tip at the last vertex."""
    v = np.asarray(vertices, dtype=float)
    return CrackGeometry(v, (_end_tip(v, 1),))


def interior_crack(vertices):
    """Crack with both ends inside the material; tips at both ends."""
    v = np.asarray(vertices, dtype=float)
    return CrackGeometry(v, (_end_tip(v, 0), _end_tip(v, 1)))


def signed_distance(crack, pts):
    """Signed normal distance to the crack line extended through the tips.

    + on the left of the direction of travel; magnitude is the Euclidean
    distance to the (extended) polyline.
    """
    arr = np.asarray(pts, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    v = crack.vertices
    nseg = len(v) - 1
    best = np.full(len(pts), np.inf)
    sign = np.ones(len(pts))
    for s in range(nseg):
        a, b = v[s], v[s + 1]
        d = b - a
        L2 = d @ d
        t = ((pts - a) @ d) / L2
        lo = -np.inf if s == 0 else 0.0
        hi = np.inf if s == nseg - 1 else 1.0
        t = np.clip(t, lo, hi)
        proj = a + t[:, None] * d
        diff = pts - proj
        dist = np.hypot(diff[:, 0], diff[:, 1])
        cross = d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0])
        closer = dist < best
        best = np.where(closer, dist, best)
        sign = np.where(closer, np.where(cross >= 0, 1.0, -1.0), sign)
    out = sign * best
    return float(out[0]) if single else out


def tip_polar(crack, tip_index, pts):
    """Polar coordinates (r, theta) around a tip, theta measured from the
    tip tangent, in (-pi, pi]; theta = +-pi on the crack faces."""
    tip = crack.tips[tip_index]
    arr = np.asarray(pts, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    d = pts - tip.point
    xt = d @ tip.tangent
    xn = d @ tip.normal
    r = np.hypot(xt, xn)
    theta = np.arctan2(xn, xt)
    # arctan2(-0., x<0) yields -pi; the contract wants (-pi, pi]
    theta = np.where(theta == -np.pi, np.pi, theta)
    if single:
        return float(r[0]), float(theta[0])
    return r, theta


# ---------------------------------------------------------------------------
# polyline / box intersection helpers

def _clip_segment_to_box(a, b, lo, hi):
    """Liang-Barsky clip; returns (t0, t1) of the parametric overlap or None."""
    d = b - a
    t0, t1 = 0.0, 1.0
    for ax in range(2):
        if d[ax] == 0.0:
            if a[ax] < lo[ax] or a[ax] > hi[ax]:
                return None
            continue
        ta = (lo[ax] - a[ax]) / d[ax]
        tb = (hi[ax] - a[ax]) / d[ax]
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return None
    return t0, t1


def crack_path_in_box(crack, lo, hi):
    """Polyline of the crack restricted to the closed box [lo, hi], as a list
    of points (empty if it misses the box)."""
    path = []
    v = crack.vertices
    for s in range(len(v) - 1):
        clip = _clip_segment_to_box(v[s], v[s + 1], lo, hi)
        if clip is None:
            continue
        t0, t1 = clip
        if t1 - t0 <= 0.0:
            continue
        p0 = v[s] + t0 * (v[s + 1] - v[s])
        p1 = v[s] + t1 * (v[s + 1] - v[s])
        if path and np.allclose(path[-1], p0, atol=1e-14):
            path.append(p1)
        else:
            path.extend([p0, p1])
    return path


def _on_box_boundary(p, lo, hi, tol):
    return (abs(p[0] - lo[0]) < tol or abs(p[0] - hi[0]) < tol
            or abs(p[1] - lo[1]) < tol or abs(p[1] - hi[1]) < tol)


def _in_half_open_box(p, lo, hi):
    return lo[0] <= p[0] < hi[0] and lo[1] <= p[1] < hi[1]


# ---------------------------------------------------------------------------
# classification

@dataclass
class ElementClassification:
    """Per-element tags plus enrichment node sets.

    ``crack`` is the (possibly perturbed) crack actually used for all
    downstream geometry; ``tip_of_node`` maps each K node to its tip index.
    """
    tags: np.ndarray
    node_set_J: np.ndarray
    node_set_K: np.ndarray
    tip_of_node: dict
    crack: CrackGeometry
    tip_elements: dict = field(default_factory=dict)   # tip index -> element

    def tag_counts(self):
        return {name: int(np.sum(self.tags == t))
                for name, t in (("standard", STANDARD), ("split", SPLIT),
                                ("tip", TIP))}


def no_crack_classification(mesh):
    """All-standard classification for uncracked meshes (2D or 3D)."""
    return ElementClassification(np.zeros(len(mesh.elements), dtype=int),
                                 np.empty(0, dtype=int),
                                 np.empty(0, dtype=int), {}, None)


def _mesh_lines(mesh):
    lo, hi = mesh.extents
    return [np.linspace(lo[ax], hi[ax], mesh.divisions[ax] + 1)
            for ax in range(2)]


def _crack_is_degenerate(mesh, crack):
    """True if a crack vertex/tip sits on a mesh line, or the polyline passes
    through a node, within the degeneracy tolerance."""
    h = float(np.min(mesh.spacing))
    tol = _DEGENERACY_TOL * h
    lines = _mesh_lines(mesh)
    probe = list(crack.vertices) + [t.point for t in crack.tips]
    for p in probe:
        for ax in range(2):
            if np.any(np.abs(lines[ax] - p[ax]) < tol):
                return True
    # polyline passing through a node (vertices themselves off the lines)
    lo = crack.vertices.min(axis=0) - tol
    hi = crack.vertices.max(axis=0) + tol
    X, Y = np.meshgrid(lines[0], lines[1], indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    near = nodes[(nodes[:, 0] >= lo[0]) & (nodes[:, 0] <= hi[0])
                 & (nodes[:, 1] >= lo[1]) & (nodes[:, 1] <= hi[1])]
    if len(near):
        if np.any(np.abs(signed_distance(crack, near)) < tol):
            return True
    return False


def perturb_crack(mesh, crack):
    """Resolve crack/grid degeneracies by nudging the crack (never the mesh).

    Translates by 1e-6 x element size along the crack normal, then, if a tip
    is still grid-aligned in the tangential direction, along the tangent.
    """
    if not _crack_is_degenerate(mesh, crack):
        return crack
    h = float(np.min(mesh.spacing))
    seg = crack.vertices[1] - crack.vertices[0]
    seg = seg / np.linalg.norm(seg)
    normal = np.array([-seg[1], seg[0]])
    tangent = crack.tips[-1].tangent if crack.tips else seg
    moved = crack
    for direction in (normal, tangent, normal, tangent):
        moved = moved.translated(_PERTURBATION * h * direction)
        if not _crack_is_degenerate(mesh, moved):
            return moved
    raise RuntimeError("could not resolve crack/grid degeneracy")


def classify(mesh, crack):
    """Tag every element Standard/Split/Tip and build the enrichment sets.

    J = nodes whose support is completely cut (>=1 split element, no tip in
    the support); K = nodes of tip elements.  Applies the perturbation rule
    first; the perturbed crack is returned on the result and must be used
    for all downstream geometry.
    """
    crack = perturb_crack(mesh, crack)
    nelem = len(mesh.elements)
    tags = np.zeros(nelem, dtype=int)
    lo_dom, hi_dom = mesh.extents
    h = mesh.spacing
    tol = 1e-12 * float(np.min(h))

    # active tips: strictly inside the domain
    active_tips = [(i, t) for i, t in enumerate(crack.tips)
                   if np.all(t.point > lo_dom + tol)
                   and np.all(t.point < hi_dom - tol)]

    # prefilter candidate elements by the crack bounding box
    pad = 1e-9 * float(np.min(h))
    bb_lo = crack.vertices.min(axis=0) - pad
    bb_hi = crack.vertices.max(axis=0) + pad
    centers = 0.5 * (mesh.nodes[mesh.elements[:, 0]]
                     + mesh.nodes[mesh.elements[:, 2]])
    near = np.flatnonzero(np.all(centers >= bb_lo - h, axis=1)
                          & np.all(centers <= bb_hi + h, axis=1))

    tip_elements = {}
    for i, t in active_tips:
        e = int(mesh.locate(t.point[None, :])[0])
        tags[e] = TIP
        tip_elements[i] = e

    bnd_tol = 1e-12 * float(np.min(h))
    for e in near:
        if tags[e] == TIP:
            continue
        lo, hi = mesh.element_box(e)
        path = crack_path_in_box(crack, lo, hi)
        if len(path) < 2:
            continue
        length = sum(np.linalg.norm(path[k + 1] - path[k])
                     for k in range(len(path) - 1))
        if length <= bnd_tol:
            continue
        if (_on_box_boundary(path[0], lo, hi, bnd_tol)
                and _on_box_boundary(path[-1], lo, hi, bnd_tol)):
            tags[e] = SPLIT

    # node -> supporting elements
    nnode = len(mesh.nodes)
    sup_split = np.zeros(nnode, dtype=bool)
    sup_tip = np.zeros(nnode, dtype=bool)
    for e in np.flatnonzero(tags == SPLIT):
        sup_split[mesh.elements[e]] = True
    tip_of_node = {}
    for i, e in tip_elements.items():
        for n in mesh.elements[e]:
            sup_tip[n] = True
            tip_of_node[int(n)] = i
    node_set_K = np.flatnonzero(sup_tip)
    node_set_J = np.flatnonzero(sup_split & ~sup_tip)
    return ElementClassification(tags, node_set_J, node_set_K, tip_of_node,
                                 crack, tip_elements)
