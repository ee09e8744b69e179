"""Gap-graded conforming triangulations of Omega = D minus (D1 u D2).

The neck band |x1| <= R is covered by a structured strip: ``n_layers`` layers
of quads between the two profiles, each split into two triangles, with
column widths proportional to the local gap. Everything else is filled by a
force-based smoothing mesher (Persson-Strang style) on top of repeated
Delaunay triangulations, with boundary vertices fixed exactly on the
analytic curves and the strip sides shared as interior edges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import shapely
from scipy.spatial import Delaunay, cKDTree
from shapely.geometry import Polygon

from .geometry import GapGeometry, OuterCircle, OuterPolygon

log = logging.getLogger(__name__)

TAGS = ("D1", "D2", "OUTER")


class MeshError(RuntimeError):
    """Mesh generation could not meet its quality or conformity contract."""


@dataclass(frozen=True)
class MeshParams:
    """Target sizes for the gap-graded mesher.

    ``aspect`` is the strip column width over the local layer height;
    ``growth`` is the size-field slope away from the neck and the inclusions.
    """

    n_layers: int = 8
    min_angle: float = 18.0
    h_far: float = 0.5
    h_incl: float = 0.1
    aspect: float = 1.5
    growth: float = 0.2
    smooth_iters: int = 80

    def __post_init__(self) -> None:
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if not 0 < self.min_angle < 60:
            raise ValueError("min_angle must lie in (0, 60) degrees")
        if self.h_far <= 0 or self.h_incl <= 0 or self.aspect <= 0 or self.growth <= 0:
            raise ValueError("mesh sizes must be positive")

    def refined(self, factor: int = 2) -> "MeshParams":
        """Same grading with every target size divided by ``factor``."""
        return replace(
            self,
            n_layers=self.n_layers * factor,
            h_far=self.h_far / factor,
            h_incl=self.h_incl / factor,
        )


@dataclass
class Mesh:
    vertices: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (M, 3), counter-clockwise
    boundary_edges: np.ndarray  # (K, 2)
    boundary_tags: np.ndarray  # (K,) of str
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def tagged_vertices(self, tag: str) -> np.ndarray:
        """Sorted vertex indices on boundary edges carrying ``tag``."""
        return np.unique(self.boundary_edges[self.boundary_tags == tag])

    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    def min_angle(self) -> float:
        return float(np.degrees(triangle_min_angles(self.vertices, self.triangles).min()))


def triangle_areas(P: np.ndarray, T: np.ndarray) -> np.ndarray:
    a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def triangle_min_angles(P: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Smallest interior angle of each triangle, in radians."""
    X = P[T]
    angles = []
    for k in range(3):
        u = X[:, (k + 1) % 3] - X[:, k]
        v = X[:, (k + 2) % 3] - X[:, k]
        cos = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles.append(np.arccos(np.clip(cos, -1.0, 1.0)))
    return np.min(angles, axis=0)


def unique_edges(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted unique edges of a triangulation and the count of triangles on each."""
    E = np.sort(np.vstack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]), axis=1)
    E, counts = np.unique(E, axis=0, return_counts=True)
    return E, counts


# ---------------------------------------------------------------------------
# curve sampling and the generic smoothing mesher


def sample_curve(
    curve: Callable[[np.ndarray], np.ndarray], hfun: Callable[[np.ndarray], np.ndarray],
    n_dense: int = 4000,
) -> np.ndarray:
    """Interior points of a parametrised curve, spaced by the size field.

    Points are exact curve evaluations, so they inherit whatever accuracy the
    parametrisation has. Endpoints (s = 0, 1) are not returned.
    """
    s = np.linspace(0.0, 1.0, n_dense)
    pts = curve(s)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    mid = 0.5 * (pts[1:] + pts[:-1])
    F = np.concatenate([[0.0], np.cumsum(seg / hfun(mid))])
    n_seg = max(1, int(round(F[-1])))
    targets = np.linspace(0.0, F[-1], n_seg + 1)[1:-1]
    return curve(np.interp(targets, F, s))


@dataclass
class _Loop:
    """Closed boundary loop given by global vertex indices and per-edge tags.

    Edge k joins ``nodes[k]`` and ``nodes[k + 1]`` (wrapping); ``tags[k]`` is
    None for edges that are internal to the final mesh (shared strip sides).
    """

    nodes: list[int]
    tags: list[Optional[str]]


def _smooth_region(
    P_fixed: np.ndarray,
    loops: Sequence[_Loop],
    region: Polygon,
    hfun: Callable[[np.ndarray], np.ndarray],
    h_min: float,
    iters: int,
    seed: int = 20240611,
) -> tuple[np.ndarray, np.ndarray]:
    """Fill ``region`` with graded nodes and triangulate.

    ``P_fixed`` holds the global coordinates of all vertices referenced by
    ``loops``. Returns (free vertex coordinates, triangles in the index space
    of vstack([P_fixed, free])).
    """
    tree = cKDTree(_densify(region, h_min / 8))

    def bdist(pts: np.ndarray) -> np.ndarray:
        return tree.query(pts)[0]

    minx, miny, maxx, maxy = region.bounds
    # Candidate lattice at the finest spacing, thinned to density 1/h^2.
    s = h_min
    ny = int(math.ceil((maxy - miny) / (s * math.sqrt(3) / 2))) + 1
    nx = int(math.ceil((maxx - minx) / s)) + 2
    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    X = minx + (ii + 0.5 * (jj % 2)) * s
    Y = miny + jj * s * math.sqrt(3) / 2
    cand = np.column_stack([X.ravel(), Y.ravel()])
    cand = cand[shapely.contains_xy(region, cand[:, 0], cand[:, 1])]
    hc = hfun(cand)
    rng = np.random.default_rng(seed)
    cand = cand[rng.random(len(cand)) < (s / hc) ** 2]
    hc = hfun(cand)
    dist = bdist(cand)
    Q = cand[dist > 0.7 * hc]

    nf = len(P_fixed)
    dt, fscale = 0.2, 1.2
    for it in range(iters):
        P = np.vstack([P_fixed, Q])
        T = Delaunay(P).simplices
        cen = P[T].mean(axis=1)
        T = T[shapely.contains_xy(region, cen[:, 0], cen[:, 1])]
        E, _ = unique_edges(T)
        bar = P[E[:, 0]] - P[E[:, 1]]
        L = np.linalg.norm(bar, axis=1)
        hb = hfun(0.5 * (P[E[:, 0]] + P[E[:, 1]]))
        L0 = hb * fscale * math.sqrt(np.sum(L**2) / np.sum(hb**2))
        Fm = np.maximum(L0 - L, 0.0) / L
        Fv = Fm[:, None] * bar
        Ftot = np.zeros_like(P)
        np.add.at(Ftot, E[:, 0], Fv)
        np.add.at(Ftot, E[:, 1], -Fv)
        step = dt * Ftot[nf:]
        Qn = Q + step
        hq = hfun(Qn)
        ok = shapely.contains_xy(region, Qn[:, 0], Qn[:, 1])
        ok[ok] &= bdist(Qn[ok]) > 0.35 * hq[ok]
        Q = np.where(ok[:, None], Qn, Q)
        move = np.max(np.linalg.norm(step[ok], axis=1) / hq[ok]) if ok.any() else 0.0
        if move < 2e-3:
            break
    log.debug("smoothing stopped after %d iterations", it + 1)

    P = np.vstack([P_fixed, Q])
    T = Delaunay(P).simplices
    cen = P[T].mean(axis=1)
    T = T[shapely.contains_xy(region, cen[:, 0], cen[:, 1])]
    return Q, T


def _densify(region: Polygon, step: float) -> np.ndarray:
    """Points along every ring of ``region`` at spacing <= step."""
    out = []
    for ring in [region.exterior, *region.interiors]:
        C = np.asarray(ring.coords)
        for a, b in zip(C[:-1], C[1:]):
            k = max(1, int(math.ceil(np.linalg.norm(b - a) / step)))
            out.append(a + np.outer(np.arange(k) / k, b - a))
    return np.vstack(out)


def _check_conformity(T: np.ndarray, loops: Sequence[_Loop]) -> None:
    E, counts = unique_edges(T)
    exposed = {tuple(e) for e in E[counts == 1]}
    wanted = set()
    for lp in loops:
        n = len(lp.nodes)
        for k in range(n):
            a, b = lp.nodes[k], lp.nodes[(k + 1) % n]
            wanted.add((min(a, b), max(a, b)))
    if np.any(counts > 2):
        raise MeshError("non-manifold edge in triangulation")
    if exposed != wanted:
        missing = sorted(wanted - exposed)[:5]
        extra = sorted(exposed - wanted)[:5]
        raise MeshError(f"boundary not recovered: missing {missing}, spurious {extra}")


# ---------------------------------------------------------------------------
# the neck strip


def _strip_columns(g: GapGeometry, params: MeshParams) -> np.ndarray:
    """Column edge abscissae on [-R, R], symmetric, with x1 = 0 a column edge."""
    R = g.neck_radius
    x = np.linspace(0.0, R, 20001)
    density = params.n_layers / (params.aspect * g.delta(x))
    N = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(x))])
    m = max(1, int(math.ceil(N[-1])))
    half = np.interp(np.linspace(0.0, N[-1], m + 1), N, x)
    half[-1] = R
    return np.concatenate([-half[:0:-1], half])


def _build_strip(g: GapGeometry, params: MeshParams):
    xs = _strip_columns(g, params)
    n = params.n_layers
    bot = g.h2(xs)
    top = g.epsilon + g.h1(xs)
    frac = np.arange(n + 1) / n
    V = np.empty((len(xs), n + 1, 2))
    V[:, :, 0] = xs[:, None]
    V[:, :, 1] = bot[:, None] + frac[None, :] * (top - bot)[:, None]
    # keep the profile endpoints bit-exact
    V[:, 0, 1], V[:, n, 1] = bot, top

    def idx(j, i):
        return j * (n + 1) + i

    tris = []
    for j in range(len(xs) - 1):
        left_half = xs[j + 1] <= 0.0
        for i in range(n):
            a, b, c, d = idx(j, i), idx(j + 1, i), idx(j + 1, i + 1), idx(j, i + 1)
            # diagonals mirror about x1 = 0
            if left_half:
                tris += [(a, b, d), (b, c, d)]
            else:
                tris += [(a, b, c), (a, c, d)]
    bedges, btags = [], []
    for j in range(len(xs) - 1):
        bedges += [(idx(j, 0), idx(j + 1, 0)), (idx(j, n), idx(j + 1, n))]
        btags += ["D2", "D1"]
    return xs, V.reshape(-1, 2), np.array(tris, dtype=np.int64), bedges, btags


# ---------------------------------------------------------------------------


def _outer_points(g: GapGeometry, h: float) -> np.ndarray:
    outer = g.outer
    if isinstance(outer, OuterCircle):
        k = max(12, int(math.ceil(2 * math.pi * outer.radius / h)))
        t = 2 * math.pi * np.arange(k) / k
        cx, cy = outer.center
        return np.column_stack([cx + outer.radius * np.cos(t), cy + outer.radius * np.sin(t)])
    if isinstance(outer, OuterPolygon):
        V = np.asarray(outer.vertices, dtype=float)
        out = []
        for a, b in zip(V, np.roll(V, -1, axis=0)):
            k = max(1, int(math.ceil(np.linalg.norm(b - a) / h)))
            out.append(a + np.outer(np.arange(k) / k, b - a))
        return np.vstack(out)
    raise TypeError(f"unknown outer boundary {outer!r}")


def build_mesh(g: GapGeometry, params: Optional[MeshParams] = None) -> Mesh:
    """Gap-graded triangulation of the two-inclusion domain.

    The result is deterministic for a given (geometry, params) pair.
    """
    params = params or MeshParams()
    if g.epsilon <= 0:
        raise ValueError("touching configuration requires extrapolation path")
    R, n = g.neck_radius, params.n_layers
    xs, Vs, Ts, s_edges, s_tags = _build_strip(g, params)
    ncol = len(xs)

    def sidx(j, i):
        return j * (n + 1) + i

    right = [sidx(ncol - 1, i) for i in range(n + 1)]
    left = [sidx(0, i) for i in range(n + 1)]

    dR = float(g.delta(R))
    h_R = 1.2 * dR / n
    y_lo, y_hi = Vs[right[0], 1], Vs[right[-1], 1]

    def dist_sides(pts: np.ndarray) -> np.ndarray:
        dx = np.abs(pts[:, 0]) - R
        dy = np.maximum(np.maximum(y_lo - pts[:, 1], pts[:, 1] - y_hi), 0.0)
        return np.hypot(dx, dy)

    arc1 = g.profile.outer_arc(1, g.epsilon, R)
    arc2 = g.profile.outer_arc(2, g.epsilon, R)
    s_dense = np.linspace(0, 1, 20001)
    incl_tree = cKDTree(np.vstack([arc1(s_dense), arc2(s_dense)]))

    def hfun(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        dS = dist_sides(pts)
        dI = incl_tree.query(pts)[0]
        return np.minimum.reduce([
            np.full(len(pts), params.h_far),
            h_R + params.growth * dS,
            params.h_incl + params.growth * dI,
        ])

    P1 = sample_curve(arc1, hfun)
    P2 = sample_curve(arc2, hfun)[::-1]  # traverse D2 from x1 = -R to +R
    PO = _outer_points(g, params.h_far)

    ns = len(Vs)
    i1 = list(range(ns, ns + len(P1)))
    i2 = list(range(ns + len(P1), ns + len(P1) + len(P2)))
    io = list(range(ns + len(P1) + len(P2), ns + len(P1) + len(P2) + len(PO)))
    P_fixed = np.vstack([Vs, P1, P2, PO])

    inner_nodes = [right[n]] + i1 + [left[n]] + left[n - 1::-1] + i2 + right[0:n]
    inner_tags = (
        ["D1"] * (len(i1) + 1)
        + [None] * n
        + ["D2"] * (len(i2) + 1)
        + [None] * n
    )
    inner = _Loop(inner_nodes, inner_tags)
    outer = _Loop(io, ["OUTER"] * len(io))

    hole = Polygon(P_fixed[inner_nodes])
    region = Polygon(P_fixed[io], holes=[P_fixed[inner_nodes][::-1]])
    if not region.is_valid or not hole.is_valid:
        raise MeshError("boundary loops self-intersect; check neck radius and outer boundary")
    clearance = region.exterior.distance(hole)
    if clearance < R:
        raise MeshError(f"inclusions within {clearance:.3g} of the outer boundary (need >= R = {R})")

    # Only loop vertices take part in the exterior triangulation.
    used = np.array(sorted(set(inner_nodes) | set(io)))
    remap = -np.ones(len(P_fixed), dtype=np.int64)
    remap[used] = np.arange(len(used))
    loops_local = [_Loop([int(remap[v]) for v in lp.nodes], lp.tags) for lp in (inner, outer)]
    h_min = min(h_R, params.h_incl)
    Q, T_loc = _smooth_region(P_fixed[used], loops_local, region, hfun, h_min, params.smooth_iters)
    _check_conformity(T_loc, loops_local)

    back = np.concatenate([used, len(P_fixed) + np.arange(len(Q))])
    T_ext = back[T_loc]
    P = np.vstack([P_fixed, Q])
    T = np.vstack([Ts, T_ext])

    ar = triangle_areas(P, T)
    flip = ar < 0
    T[flip] = T[flip][:, [0, 2, 1]]

    bedges, btags = list(s_edges), list(s_tags)
    for lp in (inner, outer):
        m = len(lp.nodes)
        for k in range(m):
            if lp.tags[k] is not None:
                bedges.append((lp.nodes[k], lp.nodes[(k + 1) % m]))
                btags.append(lp.tags[k])

    mesh = Mesh(
        vertices=P,
        triangles=T,
        boundary_edges=np.array(bedges, dtype=np.int64),
        boundary_tags=np.array(btags),
        meta={
            "epsilon": g.epsilon,
            "n_layers": n,
            "strip_columns": xs,
            "strip_vertex_count": ns,
            "min_angle_floor": params.min_angle,
        },
    )
    _final_checks(mesh, params)
    return mesh


def _final_checks(mesh: Mesh, params: MeshParams) -> None:
    ar = mesh.areas()
    if np.any(ar <= 0):
        k = int(np.argmin(ar))
        raise MeshError(f"degenerate triangle {k} at {mesh.vertices[mesh.triangles[k]].mean(axis=0)}")
    E, counts = unique_edges(mesh.triangles)
    exposed = {tuple(e) for e in E[counts == 1]}
    tagged = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    if exposed != tagged or len(tagged) != len(mesh.boundary_edges):
        raise MeshError("tagged boundary edges do not match the triangulation boundary")
    ang = np.degrees(triangle_min_angles(mesh.vertices, mesh.triangles))
    mesh.meta["min_angle"] = float(ang.min())
    if ang.min() < params.min_angle:
        k = int(np.argmin(ang))
        where = mesh.vertices[mesh.triangles[k]].mean(axis=0)
        raise MeshError(
            f"minimum angle {ang.min():.2f} deg below floor {params.min_angle} "
            f"near ({where[0]:.4g}, {where[1]:.4g})"
        )


# ---------------------------------------------------------------------------
# audits


def gap_crossing_counts(mesh: Mesh, g: GapGeometry, n_samples: int = 50) -> np.ndarray:
    """Number of triangles met by the vertical gap segment at sampled x1 in (-R, R).

    Samples avoid vertex abscissae so that each crossing is unambiguous.
    """
    R = g.neck_radius
    # irrational offset keeps samples off column edges
    xs = -R + 2 * R * (np.arange(n_samples) + 0.5 + 1e-3 * math.sqrt(2)) / n_samples
    X = mesh.vertices[mesh.triangles]
    xmin, xmax = X[:, :, 0].min(axis=1), X[:, :, 0].max(axis=1)
    cen = X.mean(axis=1)
    counts = np.empty(n_samples, dtype=int)
    for k, x in enumerate(xs):
        hit = (xmin < x) & (xmax > x)
        lo, hi = g.h2(x), g.epsilon + g.h1(x)
        counts[k] = int(np.sum(hit & (cen[:, 1] > lo) & (cen[:, 1] < hi)))
    return counts


def gap_layer_count(mesh: Mesh, g: GapGeometry) -> int:
    """Number of element layers across the gap at x1 = 0, from vertex levels."""
    V = mesh.vertices
    on = np.abs(V[:, 0]) < 1e-14
    y = V[on, 1]
    inside = (y >= -1e-14) & (y <= g.epsilon + 1e-14)
    return int(np.unique(np.round(y[inside], 14)).size) - 1


def boundary_residual(mesh: Mesh, g: GapGeometry) -> float:
    """Largest implicit-equation residual over D1 and D2 boundary vertices."""
    r = 0.0
    for which, tag in ((1, "D1"), (2, "D2")):
        idx = mesh.tagged_vertices(tag)
        r = max(r, float(np.abs(g.profile.implicit(which, mesh.vertices[idx], g.epsilon)).max()))
    return r


# ---------------------------------------------------------------------------
# refinement and simple domains


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: split every triangle into four at straight edge midpoints."""
    T = mesh.triangles
    E, _ = unique_edges(T)
    nv = mesh.n_vertices
    key = {tuple(e): nv + k for k, e in enumerate(E.tolist())}
    mids = 0.5 * (mesh.vertices[E[:, 0]] + mesh.vertices[E[:, 1]])

    def m(a, b):
        return np.array([key[(min(x, y), max(x, y))] for x, y in zip(a, b)])

    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    ab, bc, ca = m(a, b), m(b, c), m(c, a)
    Tn = np.vstack([
        np.column_stack([a, ab, ca]),
        np.column_stack([ab, b, bc]),
        np.column_stack([ca, bc, c]),
        np.column_stack([ab, bc, ca]),
    ])
    be = mesh.boundary_edges
    bm = m(be[:, 0], be[:, 1])
    Bn = np.vstack([np.column_stack([be[:, 0], bm]), np.column_stack([bm, be[:, 1]])])
    tags = np.concatenate([mesh.boundary_tags, mesh.boundary_tags])
    meta = dict(mesh.meta)
    meta["refinements"] = meta.get("refinements", 0) + 1
    return Mesh(np.vstack([mesh.vertices, mids]), Tn, Bn, tags, meta)


def annulus_mesh(r_in: float = 0.5, r_out: float = 1.0, h: float = 0.15) -> Mesh:
    """Polygonal annulus (inner loop tagged D1, outer loop OUTER) without any gap."""
    k_out = max(8, int(math.ceil(2 * math.pi * r_out / h)))
    k_in = max(6, int(math.ceil(2 * math.pi * r_in / h)))
    t_o = 2 * math.pi * np.arange(k_out) / k_out
    t_i = 2 * math.pi * np.arange(k_in) / k_in
    PO = np.column_stack([r_out * np.cos(t_o), r_out * np.sin(t_o)])
    PI = np.column_stack([r_in * np.cos(t_i), r_in * np.sin(t_i)])
    P_fixed = np.vstack([PO, PI])
    outer = _Loop(list(range(k_out)), ["OUTER"] * k_out)
    inner = _Loop(list(range(k_out, k_out + k_in)), ["D1"] * k_in)
    region = Polygon(PO, holes=[PI[::-1]])

    def hfun(pts):
        return np.full(len(np.atleast_2d(pts)), h)

    Q, T = _smooth_region(P_fixed, [outer, inner], region, hfun, h, 80)
    _check_conformity(T, [outer, inner])
    P = np.vstack([P_fixed, Q])
    ar = triangle_areas(P, T)
    T[ar < 0] = T[ar < 0][:, [0, 2, 1]]
    be, bt = [], []
    for lp in (outer, inner):
        m = len(lp.nodes)
        for j in range(m):
            be.append((lp.nodes[j], lp.nodes[(j + 1) % m]))
            bt.append(lp.tags[j])
    return Mesh(P, T, np.array(be, dtype=np.int64), np.array(bt), {"domain": "annulus"})


def rectangle_mesh(nx: int, ny: int, width: float = 1.0, height: float = 1.0) -> Mesh:
    """Structured right-triangle mesh of [0, w] x [0, h]; all boundary edges tagged OUTER."""
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return i * (ny + 1) + j

    T = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            T += [(a, b, c), (a, c, d)]
    T = np.array(T, dtype=np.int64)
    E, counts = unique_edges(T)
    be = E[counts == 1]
    return Mesh(P, T, be, np.array(["OUTER"] * len(be)), {"domain": "rectangle"})


# ---------------------------------------------------------------------------
# plain-text IO


def write_mesh(mesh: Mesh, path: str | Path) -> None:
    """Write the vertex, triangle and boundary-edge tables.

    Format::

        vertices N
        <index> <x> <y>
        triangles M
        <index> <v0> <v1> <v2>
        boundary_edges K
        <v0> <v1> <tag>
    """
    lines = [f"vertices {mesh.n_vertices}"]
    lines += [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(mesh.vertices.tolist())]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {a} {b} {c}" for i, (a, b, c) in enumerate(mesh.triangles.tolist())]
    lines.append(f"boundary_edges {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {t}" for (a, b), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: str | Path) -> Mesh:
    rows = Path(path).read_text().splitlines()
    pos = 0

    def section(name: str) -> list[list[str]]:
        nonlocal pos
        head = rows[pos].split()
        if head[0] != name:
            raise ValueError(f"expected section {name!r} at line {pos + 1}, got {rows[pos]!r}")
        k = int(head[1])
        body = [r.split() for r in rows[pos + 1:pos + 1 + k]]
        pos += k + 1
        return body

    V = np.array([[float(r[1]), float(r[2])] for r in section("vertices")])
    T = np.array([[int(r[1]), int(r[2]), int(r[3])] for r in section("triangles")], dtype=np.int64)
    B = section("boundary_edges")
    be = np.array([[int(r[0]), int(r[1])] for r in B], dtype=np.int64).reshape(-1, 2)
    tags = np.array([r[2] for r in B])
    return Mesh(V, T, be, tags)
