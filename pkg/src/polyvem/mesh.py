"""Polygonal meshes of the unit square: representation, generators, audit, I/O.

A mesh is immutable once built. Cells are CCW vertex loops; edges, adjacency
and boundary flags are derived.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import Voronoi, cKDTree

from .quadrature import polygon_area, polygon_centroid, polygon_rule

FORMAT_HEADER = "polyvem-mesh 1"


class MeshError(ValueError):
    """Malformed mesh data or input file."""


class PolyMesh:
    """Polygonal tessellation.

    Parameters
    ----------
    vertices : (nV, 2) array of coordinates.
    cells : sequence of integer vertex loops, counter-clockwise.
    """

    def __init__(self, vertices, cells, validate: bool = True):
        verts = np.array(vertices, dtype=float).reshape(-1, 2)
        loops = [np.array(c, dtype=np.int64) for c in cells]
        if validate:
            _validate(verts, loops)
        verts.flags.writeable = False
        for c in loops:
            c.flags.writeable = False
        self.vertices = verts
        self.cells = tuple(loops)
        self._build_topology()

    def _build_topology(self):
        edge_id: dict[tuple[int, int], int] = {}
        edges = []
        edge_cells = []
        cell_edges = []
        cell_edge_sign = []
        for ci, loop in enumerate(self.cells):
            ids = np.empty(loop.size, dtype=np.int64)
            sgn = np.empty(loop.size, dtype=np.int64)
            for j in range(loop.size):
                a, b = int(loop[j]), int(loop[(j + 1) % loop.size])
                key = (a, b) if a < b else (b, a)
                e = edge_id.get(key)
                if e is None:
                    e = len(edges)
                    edge_id[key] = e
                    edges.append(key)
                    edge_cells.append([ci, -1])
                else:
                    if edge_cells[e][1] != -1:
                        raise MeshError(f"edge {key} shared by more than two cells")
                    edge_cells[e][1] = ci
                ids[j] = e
                sgn[j] = 1 if a < b else -1
            cell_edges.append(ids)
            cell_edge_sign.append(sgn)
        self.edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_cells = np.array(edge_cells, dtype=np.int64).reshape(-1, 2)
        self.cell_edges = tuple(cell_edges)
        self.cell_edge_sign = tuple(cell_edge_sign)
        self.boundary_edges = self.edge_cells[:, 1] < 0
        flags = np.zeros(len(self.vertices), dtype=bool)
        flags[self.edges[self.boundary_edges].ravel()] = True
        self.boundary_vertices = flags
        for arr in (self.edges, self.edge_cells, self.boundary_edges, self.boundary_vertices):
            arr.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_coords(self, c: int) -> np.ndarray:
        return self.vertices[self.cells[c]]

    @cached_property
    def areas(self) -> np.ndarray:
        return np.array([polygon_area(self.cell_coords(c)) for c in range(self.n_cells)])

    @cached_property
    def centroids(self) -> np.ndarray:
        return np.array([polygon_centroid(self.cell_coords(c)) for c in range(self.n_cells)])

    @cached_property
    def diameters(self) -> np.ndarray:
        out = np.empty(self.n_cells)
        for c in range(self.n_cells):
            p = self.cell_coords(c)
            d = p[:, None, :] - p[None, :, :]
            out[c] = np.sqrt((d**2).sum(-1).max())
        return out

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_cells

    def __eq__(self, other):
        if not isinstance(other, PolyMesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and len(self.cells) == len(other.cells)
            and all(np.array_equal(a, b) for a, b in zip(self.cells, other.cells))
        )

    def __repr__(self):
        return f"PolyMesh(nV={self.n_vertices}, nE={self.n_edges}, nC={self.n_cells}, h={self.h:.4g})"


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _is_simple(poly: np.ndarray) -> bool:
    m = len(poly)
    if m < 3:
        return False
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            if _segments_cross(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m]):
                return False
    return True


def _validate(verts: np.ndarray, loops: list[np.ndarray]):
    if not np.all(np.isfinite(verts)):
        raise MeshError("non-finite vertex coordinates")
    nv = len(verts)
    for ci, loop in enumerate(loops):
        if loop.size < 3:
            raise MeshError(f"cell {ci} has fewer than 3 vertices")
        if loop.min() < 0 or loop.max() >= nv:
            raise MeshError(f"cell {ci}: vertex index out of range [0, {nv})")
        if len(set(loop.tolist())) != loop.size:
            raise MeshError(f"cell {ci} repeats a vertex")
        poly = verts[loop]
        if polygon_area(poly) <= 0.0:
            raise MeshError(f"cell {ci} is not counter-clockwise")
        if loop.size > 3 and not _is_simple(poly):
            raise MeshError(f"cell {ci} is self-intersecting")


# --------------------------------------------------------------------- generators


def gen_quad(n: int) -> PolyMesh:
    """n x n uniform squares on (0, 1)^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(t, t, indexing="xy")
    verts = np.column_stack([xx.ravel(), yy.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            v0 = j * (n + 1) + i
            cells.append([v0, v0 + 1, v0 + n + 2, v0 + n + 1])
    return PolyMesh(verts, cells)


def gen_tria(n: int, perturb: float = 0.0, rng_seed: int = 0) -> PolyMesh:
    """Split-quad triangulation with interior vertices jittered by perturb / n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= perturb < 0.3:
        raise ValueError("perturb must lie in [0, 0.3)")
    q = gen_quad(n)
    verts = np.array(q.vertices)
    if perturb > 0.0:
        rng = np.random.default_rng(rng_seed)
        shift = rng.uniform(-1.0, 1.0, size=verts.shape) * (perturb / n)
        shift[q.boundary_vertices] = 0.0
        verts = verts + shift
    cells = []
    for a, b, c, d in (cell.tolist() for cell in q.cells):
        cells.append([a, b, c])
        cells.append([a, c, d])
    for cell in cells:
        if polygon_area(verts[cell]) <= 0.0:
            raise MeshError("perturbation flipped a triangle")
    return PolyMesh(verts, cells)


def clip_polygon(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Keep the part of ``poly`` with normal . x <= offset (Sutherland-Hodgman)."""
    out = []
    m = len(poly)
    vals = poly @ normal - offset
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        vp, vq = vals[i], vals[(i + 1) % m]
        if vp <= 0.0:
            out.append(p)
        if (vp < 0.0 < vq) or (vq < 0.0 < vp):
            t = vp / (vp - vq)
            out.append(p + t * (q - p))
    return np.array(out).reshape(-1, 2)


_UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def voronoi_cell_by_clipping(seeds: np.ndarray, i: int) -> np.ndarray:
    """Voronoi cell of seeds[i] in the unit square by clipping against every other seed."""
    p = seeds[i]
    poly = _UNIT_SQUARE.copy()
    for j, q in enumerate(seeds):
        if j == i:
            continue
        normal = q - p
        offset = 0.5 * float(q @ q - p @ p)
        poly = clip_polygon(poly, normal, offset)
        if len(poly) == 0:
            break
    return poly


def _check_seeds(seeds: np.ndarray):
    if seeds.ndim != 2 or seeds.shape[1] != 2 or len(seeds) < 1:
        raise ValueError("seeds must be an (n, 2) array with n >= 1")
    if np.any(seeds <= 0.0) or np.any(seeds >= 1.0):
        raise ValueError("seeds must lie strictly inside the unit square")
    if len(seeds) > 1:
        tree = cKDTree(seeds)
        if tree.query_pairs(1e-14):
            raise ValueError("duplicate seeds")


def _voronoi_flat(seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clipped Voronoi polygons as one CCW-ordered point array plus offsets.

    The seed set is mirrored across the four sides of the square, which makes
    the Voronoi regions of the original seeds exactly the clipped cells.
    """
    n = len(seeds)
    if n == 1:
        return _UNIT_SQUARE.copy(), np.array([0, 4])
    x, y = seeds[:, 0], seeds[:, 1]
    pts = np.vstack(
        [
            seeds,
            np.column_stack([-x, y]),
            np.column_stack([2.0 - x, y]),
            np.column_stack([x, -y]),
            np.column_stack([x, 2.0 - y]),
        ]
    )
    vor = Voronoi(pts)
    regions = [vor.regions[r] for r in vor.point_region[:n]]
    sizes = np.array([len(r) for r in regions])
    if np.any(sizes < 3) or any(-1 in r for r in regions):
        raise MeshError("unbounded Voronoi region inside the mirrored set")
    owner = np.repeat(np.arange(n), sizes)
    flat = np.clip(vor.vertices[np.concatenate(regions)], 0.0, 1.0)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    mean = np.add.reduceat(flat, offsets[:-1], axis=0) / sizes[:, None]
    d = flat - mean[owner]
    order = np.lexsort((np.arctan2(d[:, 1], d[:, 0]), owner))
    return flat[order], offsets


def _voronoi_polygons(seeds: np.ndarray) -> list[np.ndarray]:
    flat, offsets = _voronoi_flat(seeds)
    return [flat[a:b] for a, b in zip(offsets[:-1], offsets[1:])]


def _weld(polys: list[np.ndarray], tol: float) -> tuple[np.ndarray, list[list[int]]]:
    """Merge coincident points (within tol) into shared vertices; drop repeated loop entries."""
    allpts = np.vstack(polys)
    tree = cKDTree(allpts)
    parent = np.arange(len(allpts))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in sorted(tree.query_pairs(tol)):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(len(allpts))])
    uniq, inv = np.unique(roots, return_inverse=True)
    verts = allpts[uniq]
    # snap to the box sides
    for col in range(2):
        v = verts[:, col]
        v[np.abs(v) < tol] = 0.0
        v[np.abs(v - 1.0) < tol] = 1.0
    cells = []
    start = 0
    for poly in polys:
        ids = inv[start : start + len(poly)].tolist()
        start += len(poly)
        loop = []
        for v in ids:
            if not loop or loop[-1] != v:
                loop.append(v)
        while len(loop) > 1 and loop[0] == loop[-1]:
            loop.pop()
        cells.append(loop)
    return verts, cells


def _merge_degenerate(verts: np.ndarray, cells: list[list[int]], min_area: float):
    """Merge cells with area below ``min_area`` into the neighbour across their longest edge."""
    cells = [list(c) for c in cells]
    while True:
        areas = [polygon_area(verts[c]) if len(c) >= 3 else 0.0 for c in cells]
        bad = [i for i, a in enumerate(areas) if a < min_area]
        if not bad:
            break
        i = bad[0]
        ci = cells[i]
        m = len(ci)
        lengths = [np.linalg.norm(verts[ci[(j + 1) % m]] - verts[ci[j]]) for j in range(m)]
        target = None
        for j in np.argsort(lengths)[::-1]:
            p, q = ci[j], ci[(j + 1) % m]
            for o, co in enumerate(cells):
                if o == i or len(co) < 3:
                    continue
                mo = len(co)
                for t in range(mo):
                    if co[t] == q and co[(t + 1) % mo] == p:
                        target = (o, t, j)
                        break
                if target:
                    break
            if target:
                break
        if target is None:
            cells.pop(i)
            continue
        o, t, j = target
        co = cells[o]
        mo = len(co)
        # walk the neighbour from p (index t+1) round to q (index t), then the tiny cell from q back to p
        neigh_path = [co[(t + 1 + s) % mo] for s in range(mo)]
        own_path = [ci[(j + 1 + s) % m] for s in range(1, m - 1)]
        merged = neigh_path + own_path
        loop = []
        for v in merged:
            if v not in loop:
                loop.append(v)
        cells[o] = loop
        cells.pop(i)
    used = sorted({v for c in cells for v in c})
    remap = {v: n for n, v in enumerate(used)}
    return verts[used], [[remap[v] for v in c] for c in cells]


def lloyd_step(seeds: np.ndarray) -> np.ndarray:
    """Move every seed to the centroid of its clipped Voronoi cell."""
    flat, offsets = _voronoi_flat(seeds)
    sizes = np.diff(offsets)
    owner = np.repeat(np.arange(len(sizes)), sizes)
    nxt = np.arange(len(flat)) + 1
    nxt[offsets[1:] - 1] = offsets[:-1]
    p, q = flat, flat[nxt]
    cr = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = 0.5 * np.bincount(owner, cr)
    cx = np.bincount(owner, (p[:, 0] + q[:, 0]) * cr)
    cy = np.bincount(owner, (p[:, 1] + q[:, 1]) * cr)
    return np.column_stack([cx, cy]) / (6.0 * area[:, None])


def cvt_energy(seeds: np.ndarray, degree: int = 2) -> float:
    """sum over seeds of int_cell |x - seed|^2 dx."""
    total = 0.0
    for s, poly in zip(seeds, _voronoi_polygons(seeds)):
        rule = polygon_rule(poly, degree)
        total += rule.integrate(((rule.points - s) ** 2).sum(axis=1))
    return total


def gen_voronoi(
    n_seeds: int,
    lloyd_iters: int = 0,
    rng_seed: int = 0,
    seeds: np.ndarray | None = None,
) -> PolyMesh:
    """Voronoi tessellation of (0, 1)^2; ``lloyd_iters`` > 0 gives a centroidal one.

    Seeds are uniform random from ``rng_seed`` unless given explicitly.
    """
    if seeds is None:
        if n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        rng = np.random.default_rng(rng_seed)
        seeds = rng.uniform(0.0, 1.0, size=(n_seeds, 2))
    seeds = np.array(seeds, dtype=float)
    _check_seeds(seeds)
    if lloyd_iters < 0:
        raise ValueError("lloyd_iters must be >= 0")
    for _ in range(lloyd_iters):
        seeds = lloyd_step(seeds)
    polys = _voronoi_polygons(seeds)
    verts, cells = _weld(polys, tol=1e-11)
    verts, cells = _merge_degenerate(verts, cells, min_area=1e-12)
    return PolyMesh(verts, cells)


def generate(family: str, level: int, rng_seed: int = 0, lloyd_iters: int | None = None) -> PolyMesh:
    """One mesh of a named family: quad/tria take n, voro/rand take a seed count."""
    if family == "quad":
        return gen_quad(level)
    if family == "tria":
        return gen_tria(level)
    if family == "voro":
        return gen_voronoi(level, DEFAULT_LLOYD_ITERS if lloyd_iters is None else lloyd_iters, rng_seed)
    if family == "rand":
        return gen_voronoi(level, 0, rng_seed)
    raise ValueError(f"unknown mesh family {family!r}")


DEFAULT_LLOYD_ITERS = 100
MESH_FAMILIES = ("quad", "tria", "voro", "rand")


# --------------------------------------------------------------------- audit


@dataclass(frozen=True)
class MeshQualityReport:
    """Per-cell shape measures, all divided by the cell diameter h_E.

    edge_ratio: shortest edge over h_E.
    star_ratio: radius of the largest disc inside the kernel of the cell.
    centroid_star_ratio: radius of the largest disc about the centroid inside
        the kernel (zero when the centroid is outside it); a cheaper lower bound.
    """

    edge_ratio: np.ndarray
    star_ratio: np.ndarray
    centroid_star_ratio: np.ndarray

    @property
    def min_edge_ratio(self) -> float:
        return float(self.edge_ratio.min())

    @property
    def min_star_ratio(self) -> float:
        return float(self.star_ratio.min())


def _kernel_inradius(p: np.ndarray, inward: np.ndarray, offsets: np.ndarray) -> float:
    # max r s.t. the disc (x, r) satisfies every edge half-plane: -inward . x + r <= -offset
    a_ub = np.column_stack([-inward, np.ones(len(p))])
    res = linprog([0.0, 0.0, -1.0], A_ub=a_ub, b_ub=-offsets, bounds=[(None, None)] * 2 + [(0.0, None)])
    return float(res.x[2]) if res.status == 0 else 0.0


def audit_mesh(mesh: PolyMesh) -> MeshQualityReport:
    """Shape-regularity measures of every cell (report only, never raises)."""
    er = np.empty(mesh.n_cells)
    sr = np.empty(mesh.n_cells)
    cr = np.empty(mesh.n_cells)
    for c in range(mesh.n_cells):
        p = mesh.cell_coords(c)
        t = np.roll(p, -1, axis=0) - p
        lengths = np.hypot(t[:, 0], t[:, 1])
        h = mesh.diameters[c]
        er[c] = lengths.min() / h
        inward = np.column_stack([-t[:, 1], t[:, 0]]) / lengths[:, None]
        offsets = (inward * p).sum(axis=1)
        dist = inward @ mesh.centroids[c] - offsets
        cr[c] = max(dist.min(), 0.0) / h
        sr[c] = _kernel_inradius(p, inward, offsets) / h
    return MeshQualityReport(er, sr, cr)


# --------------------------------------------------------------------- I/O


def write_mesh(mesh: PolyMesh) -> bytes:
    lines = [FORMAT_HEADER, f"{mesh.n_vertices} {mesh.n_cells}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [" ".join([str(len(c))] + [str(int(v)) for v in c]) for c in mesh.cells]
    return ("\n".join(lines) + "\n").encode("ascii")


def read_mesh(data: bytes | str) -> PolyMesh:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise MeshError(f"bad header, expected {FORMAT_HEADER!r}")
    try:
        nv, nc = (int(t) for t in lines[1].split())
    except (IndexError, ValueError) as exc:
        raise MeshError("bad count line") from exc
    if len(lines) != 2 + nv + nc:
        raise MeshError(f"expected {nv} vertex and {nc} cell lines, got {len(lines) - 2} lines")
    try:
        verts = np.array([[float(t) for t in ln.split()] for ln in lines[2 : 2 + nv]]).reshape(nv, 2)
        cells = []
        for ln in lines[2 + nv :]:
            tok = [int(t) for t in ln.split()]
            if tok[0] != len(tok) - 1:
                raise MeshError(f"cell line declares {tok[0]} vertices but lists {len(tok) - 1}")
            cells.append(tok[1:])
    except ValueError as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed mesh body: {exc}") from exc
    return PolyMesh(verts, cells)


def save_mesh(mesh: PolyMesh, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_mesh(mesh))


def load_mesh(path) -> PolyMesh:
    with open(path, "rb") as fh:
        return read_mesh(fh.read())
