"""Benchmark harness: configure, run and serialize the fracture studies.

Problems
  griffith      infinite center-crack plate: a 10x10 section around one tip
                with exact near-tip displacements prescribed on the whole
                outer boundary; L2/H1 norms and K_I error vs mesh size.
  edge-tension  1x2 single-edge-notch plate, a/W = 0.5, remote tension.
  edge-shear    7x16 edge-cracked plate, bottom clamped, unit shear on top
                (reference K_I = 34, K_II = 4.55).
  inclined      20x20 plate, center crack of half-length 1 inclined by
                beta, remote tension; K_I/K_II vs the infinite-plate
                closed form per angle.
  patch3d       single-hex affine patch test of the 3D kernels.

CSV contract: header problem,method,h,dofs,relL2,relH1,KI,KII,errKI,
errKII,npts,ms (a trailing beta column is appended for inclined runs).
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import assembly as asm
from . import fracture as fr
from . import mesh as msh

CSV_COLUMNS = ["problem", "method", "h", "dofs", "relL2", "relH1", "KI",
               "KII", "errKI", "errKII", "npts", "ms"]

PROBLEMS = ("griffith", "edge-tension", "edge-shear", "inclined", "patch3d")
METHODS = ("xfem", "sm", "lsm")


@dataclass
class BenchmarkConfig:
    problem: str
    method: str
    refinements: tuple = ()
    beta: tuple = ()              # degrees; inclined only
    out: str = ""
    report: str = ""
    deterministic: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        refs = tuple(int(r) for r in self.refinements)
        if not refs:
            refs = _DEFAULT_REFINEMENTS[self.problem]
        if any(b <= a for a, b in zip(refs, refs[1:])):
            raise ValueError("refinement list must be strictly increasing")
        self.refinements = refs
        self.beta = tuple(float(b) for b in self.beta)
        if self.problem == "inclined" and not self.beta:
            self.beta = (0.0, 15.0, 30.0, 45.0, 60.0, 75.0)


_DEFAULT_REFINEMENTS = {
    "griffith": (10, 20, 40, 80),
    "edge-tension": (10, 20, 40),
    "edge-shear": (14, 28, 56),
    "inclined": (100,),
    "patch3d": (1,),
}


@dataclass
class BenchmarkRow:
    problem: str
    method: str
    h: float
    dofs: int
    rel_l2: float
    rel_h1: float
    k1: float
    k2: float
    err_k1: float
    err_k2: float
    npts: int
    ms: float
    beta: float = float("nan")
    note: str = ""

    def csv_values(self, with_beta=False, deterministic=False):
        ms = 0.0 if deterministic else self.ms
        vals = [self.problem, self.method, _fmt(self.h), str(self.dofs),
                _fmt(self.rel_l2), _fmt(self.rel_h1), _fmt(self.k1),
                _fmt(self.k2), _fmt(self.err_k1), _fmt(self.err_k2),
                str(self.npts), _fmt(ms)]
        if with_beta:
            vals.append(_fmt(self.beta))
        return vals


def _fmt(x):
    return "%.17g" % float(x)


def _boundary_nodes(mesh):
    lo, hi = mesh.extents
    tol = 1e-12 * float(np.max(hi - lo))
    on = np.zeros(len(mesh.nodes), dtype=bool)
    for ax in range(mesh.dim):
        on |= (np.abs(mesh.nodes[:, ax] - lo[ax]) < tol) \
            | (np.abs(mesh.nodes[:, ax] - hi[ax]) < tol)
    return np.flatnonzero(on)


def _nearest_node(mesh, p):
    return int(np.argmin(np.sum((mesh.nodes - np.asarray(p)) ** 2, axis=1)))


def _solve(mesh, clf, material, method, tractions, constraints):
    dm = asm.build_dofmap(mesh, clf)
    system = asm.assemble(mesh, clf, dm, material, method, tractions)
    cons = dict(constraints)
    cons.update(asm.heaviside_support_constraints(mesh, clf, dm))
    u, res = asm.solve(system, cons)
    return dm, system, u, res


def _griffith_level(n, method):
    E, nu, sigma, a = 1e7, 0.3, 1e4, 100.0
    mat = asm.Material(E, nu, "plane-strain")
    k_exact = sigma * math.sqrt(math.pi * a)
    mesh = msh.build_structured_mesh(((0.0, 0.0), (10.0, 10.0)), n, n)
    crack = msh.edge_crack([[-2.5, 5.0], [5.0, 5.0]])
    clf = msh.classify(mesh, crack)
    ref = fr.WestergaardField(clf.crack, 0, k_exact, 0.0, mat)
    cons = {}
    for nd in _boundary_nodes(mesh):
        ux, uy = ref.displacement(mesh.nodes[nd])[0]
        cons[2 * nd] = ux
        cons[2 * nd + 1] = uy
    dm, system, u, res = _solve(mesh, clf, mat, method, (), cons)
    rel_l2, rel_h1 = fr.error_norms(u, mesh, clf, dm, method, mat, ref)
    fld = asm.FeField(mesh, clf, dm, u)
    sif = fr.interaction_integral(fld, mesh, clf.crack, 0, mat,
                                  crack_half_length=a)
    return BenchmarkRow("griffith", method, 10.0 / n, dm.ndof, rel_l2,
                        rel_h1, sif.k1, sif.k2,
                        abs(sif.k1 - k_exact) / k_exact,
                        abs(sif.k2) / k_exact, system.npts, 0.0)


def _edge_tension_level(n, method):
    E, nu, sigma, a, W = 1e3, 0.3, 1.0, 0.5, 1.0
    mat = asm.Material(E, nu, "plane-strain")
    k_ref = fr.edge_reference_KI(sigma, a, W)
    mesh = msh.build_structured_mesh(((0.0, 0.0), (W, 2.0)), n, 2 * n)
    crack = msh.edge_crack([[-0.25, 1.0], [a, 1.0]])
    clf = msh.classify(mesh, crack)
    cons = {}
    nbr = _nearest_node(mesh, (W, 0.0))
    ntr = _nearest_node(mesh, (W, 2.0))
    cons[2 * nbr] = cons[2 * nbr + 1] = 0.0
    cons[2 * ntr] = 0.0
    tr = [("top", (0.0, sigma)), ("bottom", (0.0, -sigma))]
    dm, system, u, res = _solve(mesh, clf, mat, method, tr, cons)
    fld = asm.FeField(mesh, clf, dm, u)
    sif = fr.interaction_integral(fld, mesh, clf.crack, 0, mat,
                                  crack_half_length=a)
    return BenchmarkRow("edge-tension", method, W / n, dm.ndof,
                        float("nan"), float("nan"), sif.k1, sif.k2,
                        abs(sif.k1 - k_ref) / k_ref,
                        abs(sif.k2) / k_ref, system.npts, 0.0)


def _edge_shear_level(n, method):
    E, nu, tau, a = 3e7, 0.25, 1.0, 3.5
    W, L = 7.0, 16.0
    k1_ref, k2_ref = 34.0, 4.55
    if (n * 16) % 7:
        raise ValueError("edge-shear refinement must be a multiple of 7")
    mat = asm.Material(E, nu, "plane-strain")
    mesh = msh.build_structured_mesh(((0.0, 0.0), (W, L)), n, n * 16 // 7)
    crack = msh.edge_crack([[-1.75, 8.0], [a, 8.0]])
    clf = msh.classify(mesh, crack)
    cons = {}
    lo, hi = mesh.extents
    bottom = np.flatnonzero(np.abs(mesh.nodes[:, 1] - lo[1]) < 1e-12 * L)
    for nd in bottom:
        cons[2 * nd] = cons[2 * nd + 1] = 0.0
    tr = [("top", (tau, 0.0))]
    dm, system, u, res = _solve(mesh, clf, mat, method, tr, cons)
    fld = asm.FeField(mesh, clf, dm, u)
    sif = fr.interaction_integral(fld, mesh, clf.crack, 0, mat,
                                  crack_half_length=a)
    return BenchmarkRow("edge-shear", method, W / n, dm.ndof,
                        float("nan"), float("nan"), sif.k1, sif.k2,
                        abs(sif.k1 - k1_ref) / k1_ref,
                        abs(sif.k2 - k2_ref) / k2_ref, system.npts, 0.0)


def _inclined_level(n, method, beta_deg):
    E, nu, sigma, a = 1e7, 0.3, 1e4, 1.0
    mat = asm.Material(E, nu, "plane-strain")
    beta = math.radians(beta_deg)
    ref = fr.inclined_reference(sigma, a, beta)
    mesh = msh.build_structured_mesh(((0.0, 0.0), (20.0, 20.0)), n, n)
    c = np.array([10.0, 10.0])
    d = np.array([math.cos(beta), math.sin(beta)])
    crack = msh.interior_crack([c - a * d, c + a * d])
    clf = msh.classify(mesh, crack)
    cons = {}
    nbl = _nearest_node(mesh, (0.0, 0.0))
    nbr = _nearest_node(mesh, (20.0, 0.0))
    cons[2 * nbl] = cons[2 * nbl + 1] = 0.0
    cons[2 * nbr + 1] = 0.0
    tr = [("top", (0.0, sigma)), ("bottom", (0.0, -sigma))]
    dm, system, u, res = _solve(mesh, clf, mat, method, tr, cons)
    fld = asm.FeField(mesh, clf, dm, u)
    sif = fr.interaction_integral(fld, mesh, clf.crack, 1, mat,
                                  crack_half_length=a)
    k_norm = sigma * math.sqrt(math.pi * a)
    err1 = abs(sif.k1 - ref.k1) / (ref.k1 if ref.k1 > 0.1 * k_norm
                                   else k_norm)
    err2 = abs(sif.k2 - ref.k2) / (ref.k2 if ref.k2 > 0.1 * k_norm
                                   else k_norm)
    row = BenchmarkRow("inclined", method, 20.0 / n, dm.ndof,
                       float("nan"), float("nan"), sif.k1, sif.k2,
                       err1, err2, system.npts, 0.0, beta=beta_deg)
    return row


def _patch3d_level(n, method):
    mat = asm.Material(100.0, 0.25, "3d")
    mesh = msh.build_structured_box(((0.0,) * 3, (1.0,) * 3), n, n, n)
    clf = msh.no_crack_classification(mesh)
    A = np.array([[3e-3, -1e-3, 2e-3], [1e-3, 2e-3, -1e-3],
                  [-2e-3, 1e-3, 4e-3]])
    ref = fr.UniformStrainField(A, np.array([1e-3, -2e-3, 3e-3]))
    cons = {}
    for nd in _boundary_nodes(mesh):
        for dcomp, val in enumerate(ref.displacement(mesh.nodes[nd])[0]):
            cons[3 * nd + dcomp] = val
    dm, system, u, res = _solve(mesh, clf, mat,
                                method if method != "xfem" else "lsm",
                                (), cons)
    rel_l2, rel_h1 = fr.error_norms(u, mesh, clf, dm,
                                    method if method != "xfem" else "lsm",
                                    mat, ref)
    return BenchmarkRow("patch3d", method, 1.0 / n, dm.ndof, rel_l2,
                        rel_h1, float("nan"), float("nan"), float("nan"),
                        float("nan"), system.npts, 0.0)


def run(config):
    """Run all levels of a benchmark config; one BenchmarkRow per level
    (per angle for the inclined sweep).  A failing level is recorded with
    a note and the remaining levels continue."""
    rows = []
    levels = []
    for n in config.refinements:
        if config.problem == "inclined":
            levels.extend((n, b) for b in config.beta)
        else:
            levels.append((n, None))
    for n, beta in levels:
        t0 = time.perf_counter()
        try:
            if config.problem == "griffith":
                row = _griffith_level(n, config.method)
            elif config.problem == "edge-tension":
                row = _edge_tension_level(n, config.method)
            elif config.problem == "edge-shear":
                row = _edge_shear_level(n, config.method)
            elif config.problem == "inclined":
                row = _inclined_level(n, config.method, beta)
            else:
                row = _patch3d_level(n, config.method)
        except Exception as err:   # keep remaining levels running
            row = BenchmarkRow(config.problem, config.method, float("nan"),
                               0, *([float("nan")] * 6), 0, 0.0,
                               beta=float("nan") if beta is None else beta,
                               note=f"level n={n} failed: {err}")
            rows.append(row)
            continue
        row.ms = (time.perf_counter() - t0) * 1e3
        rows.append(row)
    return rows


def convergence_rate(rows, column="rel_l2"):
    """Least-squares slope of log(error) vs log(h) over the valid rows."""
    pts = [(r.h, getattr(r, column)) for r in rows
           if np.isfinite(r.h) and np.isfinite(getattr(r, column))
           and getattr(r, column) > 0]
    if len(pts) < 2:
        raise ValueError("need at least two rows with positive errors")
    lh = np.log([p[0] for p in pts])
    le = np.log([p[1] for p in pts])
    return float(np.polyfit(lh, le, 1)[0])


def write_csv(rows, path, deterministic=False):
    with_beta = any(r.problem == "inclined" for r in rows)
    header = CSV_COLUMNS + (["beta"] if with_beta else [])
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(r.csv_values(with_beta, deterministic)))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as f:
        f.write(text)
    return text


def write_report(config, rows, path):
    lines = [f"problem: {config.problem}", f"method: {config.method}",
             f"refinements: {','.join(str(n) for n in config.refinements)}"]
    if config.problem == "inclined":
        lines.append(f"beta: {','.join(_fmt(b) for b in config.beta)}")
    lines.append("")
    for r in rows:
        if r.note:
            lines.append(f"ERROR {r.note}")
        else:
            lines.append(f"h={r.h:g} dofs={r.dofs} relL2={r.rel_l2:.4e} "
                         f"relH1={r.rel_h1:.4e} KI={r.k1:.6g} "
                         f"KII={r.k2:.6g} errKI={r.err_k1:.4e} "
                         f"errKII={r.err_k2:.4e} npts={r.npts} "
                         f"ms={r.ms:.1f}")
    ok = [r for r in rows if not r.note]
    for col, name in (("rel_l2", "relL2"), ("rel_h1", "relH1"),
                      ("err_k1", "errKI"), ("err_k2", "errKII")):
        try:
            lines.append(f"slope {name}: {convergence_rate(ok, col):.4f}")
        except ValueError:
            pass
    text = "\n".join(lines) + "\n"
    with open(path, "w") as f:
        f.write(text)
    return text
