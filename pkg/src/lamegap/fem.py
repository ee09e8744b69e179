"""Lagrange P1/P2 finite elements for the pure-Dirichlet Lamé problem in 2D.

Degrees of freedom are interleaved: dof 2*k + c is component c at node k.
P2 nodes are the mesh vertices followed by one node per unique edge, placed
at the straight-edge midpoint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elasticity import LameParameters
from .mesh import Mesh, triangle_areas, unique_edges

log = logging.getLogger(__name__)

# Symmetric 6-point rule exact for degree 4 (barycentric points, weights sum to 1).
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
QUAD_DEG4 = (
    np.array([
        [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
        [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
    ]),
    np.array([_W1] * 3 + [_W2] * 3),
)
# Degree-2 rule for P1 (exact for the constant integrand, kept for L2 norms).
QUAD_DEG2 = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.array([1 / 3, 1 / 3, 1 / 3]),
)


class AssemblyError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


def shape_values(order: int, lam: np.ndarray) -> np.ndarray:
    """Shape functions at barycentric points lam (..., 3) -> (..., nloc)."""
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    if order == 1:
        return np.stack([l0, l1, l2], axis=-1)
    return np.stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ], axis=-1)


def shape_bary_derivs(order: int, lam: np.ndarray) -> np.ndarray:
    """d N_k / d lam_m at barycentric points: (..., nloc, 3)."""
    lam = np.asarray(lam, dtype=float)
    shp = lam.shape[:-1]
    if order == 1:
        return np.broadcast_to(np.eye(3), shp + (3, 3)).copy()
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    z = np.zeros(shp)
    rows = [
        [4 * l0 - 1, z, z],
        [z, 4 * l1 - 1, z],
        [z, z, 4 * l2 - 1],
        [4 * l1, 4 * l0, z],
        [z, 4 * l2, 4 * l1],
        [4 * l2, z, 4 * l0],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


@dataclass
class FESpace:
    mesh: Mesh
    order: int
    nodes: np.ndarray  # (Nn, 2)
    elem_nodes: np.ndarray  # (M, nloc)
    edges: np.ndarray  # (Ne, 2) unique vertex edges
    grad_lam: np.ndarray  # (M, 3, 2) gradients of barycentric coordinates
    area: np.ndarray  # (M,)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.nodes)

    def boundary_nodes(self, tag: str) -> np.ndarray:
        """All nodes (vertices and, for P2, edge midpoints) on edges tagged ``tag``."""
        m = self.mesh
        be = np.sort(m.boundary_edges[m.boundary_tags == tag], axis=1)
        out = [be.ravel()]
        if self.order == 2 and len(be):
            pos = _edge_lookup(self.edges, be)
            out.append(m.n_vertices + pos)
        return np.unique(np.concatenate(out))


def _edge_lookup(edges: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Row positions of sorted ``query`` edges inside the sorted unique ``edges``."""
    nv = int(max(edges.max(), query.max())) + 1
    keys = edges[:, 0].astype(np.int64) * nv + edges[:, 1]
    q = query[:, 0].astype(np.int64) * nv + query[:, 1]
    pos = np.searchsorted(keys, q)
    if np.any(pos >= len(keys)) or np.any(keys[np.minimum(pos, len(keys) - 1)] != q):
        raise AssemblyError("boundary edge not present in the triangulation")
    return pos


def make_space(mesh: Mesh, order: int = 2) -> FESpace:
    if order not in (1, 2):
        raise ValueError(f"element order must be 1 or 2, got {order}")
    P, T = mesh.vertices, mesh.triangles
    area = triangle_areas(P, T)
    bad = np.flatnonzero(area <= 0)
    if bad.size:
        raise AssemblyError(f"degenerate or inverted element {int(bad[0])} (area {area[bad[0]]:.3e})")
    X = P[T]
    # barycentric gradients: grad lam_i = (y_j - y_k, x_k - x_j) / (2 area)
    gl = np.empty((len(T), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        d = X[:, j] - X[:, k]
        gl[:, i, 0] = d[:, 1] / (2 * area)
        gl[:, i, 1] = -d[:, 0] / (2 * area)
    edges, _ = unique_edges(T)
    if order == 1:
        return FESpace(mesh, 1, P.copy(), T.copy(), edges, gl, area)
    loc = [(0, 1), (1, 2), (2, 0)]
    mids = []
    for a, b in loc:
        e = np.sort(T[:, [a, b]], axis=1)
        mids.append(mesh.n_vertices + _edge_lookup(edges, e))
    nodes = np.vstack([P, 0.5 * (P[edges[:, 0]] + P[edges[:, 1]])])
    elem = np.column_stack([T] + mids)
    return FESpace(mesh, 2, nodes, elem, edges, gl, area)


def _strain_matrices(space: FESpace, lam_q: np.ndarray) -> np.ndarray:
    """Engineering-strain B matrices (M, nq, 3, 2*nloc) at barycentric points."""
    dN = shape_bary_derivs(space.order, lam_q)  # (nq, nloc, 3)
    G = np.einsum("qkm,emx->eqkx", dN, space.grad_lam)  # (M, nq, nloc, 2)
    M, nq, nloc, _ = G.shape
    B = np.zeros((M, nq, 3, 2 * nloc))
    B[:, :, 0, 0::2] = G[..., 0]
    B[:, :, 1, 1::2] = G[..., 1]
    B[:, :, 2, 0::2] = G[..., 1]
    B[:, :, 2, 1::2] = G[..., 0]
    return B


def elasticity_matrix(p: LameParameters) -> np.ndarray:
    lam, mu = p.lam, p.mu
    return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])


@dataclass
class AssembledSystem:
    space: FESpace
    params: LameParameters
    K: sp.csr_matrix
    Ke: np.ndarray  # (M, 2 nloc, 2 nloc) element matrices
    elem_dofs: np.ndarray  # (M, 2 nloc)
    quad_degree: int
    _factor_cache: dict = field(default_factory=dict, repr=False)

    def dirichlet_nodes(self, tags) -> np.ndarray:
        return np.unique(np.concatenate([self.space.boundary_nodes(t) for t in tags]))


def assemble(mesh: Mesh, p: LameParameters, order: int = 2) -> AssembledSystem:
    """Global stiffness of the Lamé energy by exact-for-polynomial quadrature."""
    if p.dim != 2:
        raise ValueError("the finite element solver is two-dimensional")
    space = make_space(mesh, order)
    lam_q, w_q = QUAD_DEG4 if order == 2 else QUAD_DEG2
    B = _strain_matrices(space, lam_q)
    D = elasticity_matrix(p)
    Ke = np.einsum("q,e,eqia,ij,eqjb->eab", w_q, space.area, B, D, B, optimize=True)
    en = space.elem_nodes
    dofs = np.empty((len(en), 2 * en.shape[1]), dtype=np.int64)
    dofs[:, 0::2] = 2 * en
    dofs[:, 1::2] = 2 * en + 1
    nd = dofs.shape[1]
    rows = np.repeat(dofs, nd, axis=1).ravel()
    cols = np.tile(dofs, (1, nd)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(space.n_dofs, space.n_dofs)).tocsr()
    K.sum_duplicates()
    return AssembledSystem(space, p, K, Ke, dofs, 4 if order == 2 else 2)


@dataclass
class DisplacementField:
    space: FESpace
    values: np.ndarray  # (2 * n_nodes,)
    residual: float = 0.0

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def nodal(self) -> np.ndarray:
        return self.values.reshape(-1, 2)

    def __add__(self, other: "DisplacementField") -> "DisplacementField":
        _same_space(self, other)
        return DisplacementField(self.space, self.values + other.values)

    def __sub__(self, other: "DisplacementField") -> "DisplacementField":
        _same_space(self, other)
        return DisplacementField(self.space, self.values - other.values)

    def __mul__(self, s: float) -> "DisplacementField":
        return DisplacementField(self.space, s * self.values)

    __rmul__ = __mul__


def _same_space(a: DisplacementField, b: DisplacementField) -> None:
    if a.space is not b.space:
        raise ValueError("fields live on different meshes or spaces")


BoundaryData = Callable[[np.ndarray], np.ndarray]


def _factor(sysm: AssembledSystem, fixed: np.ndarray):
    key = fixed.tobytes()
    if key not in sysm._factor_cache:
        n = sysm.space.n_dofs
        free = np.setdiff1d(np.arange(n), fixed)
        Kff = sysm.K[free][:, free].tocsc()
        Kfd = sysm.K[free][:, fixed]
        try:
            lu = spla.splu(Kff, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            lu = None
            log.warning("direct factorization failed (%s); using preconditioned CG", exc)
        sysm._factor_cache = {key: (free, Kff, Kfd, lu)}
    return sysm._factor_cache[key]


def _cg(Kff, rhs: np.ndarray) -> np.ndarray:
    dinv = 1.0 / Kff.diagonal()
    M = spla.LinearOperator(Kff.shape, matvec=lambda v: dinv * v)
    out = np.empty_like(rhs)
    for k in range(rhs.shape[1]):
        x, info = spla.cg(Kff, rhs[:, k], rtol=1e-12, atol=0.0, M=M, maxiter=20 * Kff.shape[0])
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
        out[:, k] = x
    return out


def solve_dirichlet_many(
    sysm: AssembledSystem, bcs: list[Mapping[str, BoundaryData]], rtol: float = 1e-10,
) -> list[DisplacementField]:
    """Solve several Dirichlet problems that fix the same tag set, sharing one factorization."""
    if not bcs:
        return []
    tags = sorted(bcs[0])
    if any(sorted(b) != tags for b in bcs):
        raise ValueError("all boundary-condition sets must fix the same tags")
    space = sysm.space
    node_sets = {t: space.boundary_nodes(t) for t in tags}
    fixed_nodes = np.unique(np.concatenate(list(node_sets.values())))
    fixed = np.sort(np.concatenate([2 * fixed_nodes, 2 * fixed_nodes + 1]))
    free, Kff, Kfd, lu = _factor(sysm, fixed)

    U = np.zeros((space.n_dofs, len(bcs)))
    for k, bc in enumerate(bcs):
        for t in tags:
            nodes = node_sets[t]
            val = np.asarray(bc[t](space.nodes[nodes]), dtype=float).reshape(len(nodes), 2)
            U[2 * nodes, k] = val[:, 0]
            U[2 * nodes + 1, k] = val[:, 1]
    rhs = -(Kfd @ U[fixed])
    if lu is not None:
        X = lu.solve(rhs)
        for _ in range(2):  # iterative refinement
            r = rhs - Kff @ X
            X += lu.solve(r)
    else:
        X = _cg(Kff, rhs)
    res = Kff @ X - rhs
    scale = np.maximum(np.linalg.norm(rhs, axis=0), np.linalg.norm(Kfd.data) * np.abs(U[fixed]).max(axis=0))
    rel = np.linalg.norm(res, axis=0) / np.where(scale > 0, scale, 1.0)
    if np.any(rel > rtol):
        if lu is not None:
            X = _cg(Kff, rhs)
            res = Kff @ X - rhs
            rel = np.linalg.norm(res, axis=0) / np.where(scale > 0, scale, 1.0)
        if np.any(rel > rtol):
            raise SolverError(f"relative residual {rel.max():.2e} above {rtol:.0e}; check mesh or assembly")
    U[free] = X
    return [DisplacementField(space, U[:, k].copy(), float(rel[k])) for k in range(len(bcs))]


def solve_dirichlet(sysm: AssembledSystem, bc: Mapping[str, BoundaryData]) -> DisplacementField:
    """Strong Dirichlet solve; ``bc`` maps each boundary tag to a function of (N, 2) points."""
    return solve_dirichlet_many(sysm, [bc])[0]


def element_energies(sysm: AssembledSystem, a: DisplacementField, b: DisplacementField) -> np.ndarray:
    ua = a.values[sysm.elem_dofs]
    ub = b.values[sysm.elem_dofs]
    return np.einsum("ea,eab,eb->e", ua, sysm.Ke, ub)


def strain_energy_product(
    sysm: AssembledSystem, a: DisplacementField, b: DisplacementField,
    region: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    """Integral of (C0 e(a), e(b)), optionally restricted to elements whose centroid is in ``region``."""
    _same_space(a, b)
    if a.space is not sysm.space:
        raise ValueError("fields do not belong to this assembled system")
    e = element_energies(sysm, a, b)
    if region is not None:
        cen = sysm.space.mesh.vertices[sysm.space.mesh.triangles].mean(axis=1)
        e = e[region(cen)]
    return float(np.sum(e))


def interpolate(space: FESpace, f: Callable[[np.ndarray], np.ndarray]) -> DisplacementField:
    vals = np.asarray(f(space.nodes), dtype=float).reshape(-1, 2)
    return DisplacementField(space, vals.ravel().copy())


def locate(space: FESpace, x: np.ndarray, tol: float = 1e-12) -> tuple[int, np.ndarray]:
    """Lowest-index element containing x and the barycentric coordinates there."""
    x = np.asarray(x, dtype=float)
    V = space.mesh.vertices[space.mesh.triangles]
    lam12 = np.einsum("emx,ex->em", space.grad_lam[:, 1:], x[None, :] - V[:, 0])
    lam = np.column_stack([1.0 - lam12.sum(axis=1), lam12])
    inside = np.all(lam >= -tol, axis=1)
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        raise ValueError(f"point {tuple(x)} lies outside the mesh")
    e = int(hits[0])
    return e, lam[e]


def gradient_at(f: DisplacementField, x) -> np.ndarray:
    """Displacement gradient G[i, j] = d u_i / d x_j of the interpolant at x."""
    space = f.space
    e, lam = locate(space, x)
    dN = shape_bary_derivs(space.order, lam)  # (nloc, 3)
    gN = dN @ space.grad_lam[e]  # (nloc, 2)
    u = f.nodal[space.elem_nodes[e]]  # (nloc, 2)
    return u.T @ gN


def value_at(f: DisplacementField, x) -> np.ndarray:
    space = f.space
    e, lam = locate(space, x)
    return shape_values(space.order, lam) @ f.nodal[space.elem_nodes[e]]


def l2_error(f: DisplacementField, exact: Callable[[np.ndarray], np.ndarray]) -> float:
    """L2 norm of f - exact by the degree-4 rule on every element."""
    space = f.space
    lam_q, w_q = QUAD_DEG4
    N = shape_values(space.order, lam_q)  # (nq, nloc)
    uh = np.einsum("qk,ekc->eqc", N, f.nodal[space.elem_nodes])
    V = space.mesh.vertices[space.mesh.triangles]
    xq = np.einsum("qm,emx->eqx", lam_q, V)
    ue = np.asarray(exact(xq.reshape(-1, 2))).reshape(uh.shape)
    err = np.sum((uh - ue) ** 2, axis=2)
    return float(np.sqrt(np.sum(space.area[:, None] * w_q[None, :] * err)))


def dump_field(f: DisplacementField, path: str | Path) -> None:
    """Plain-text table: node index, x, y, u1, u2."""
    X, U = f.space.nodes, f.nodal
    lines = ["# node x y u1 u2"]
    lines += [f"{k} {x!r} {y!r} {a!r} {b!r}" for k, ((x, y), (a, b)) in enumerate(zip(X.tolist(), U.tolist()))]
    Path(path).write_text("\n".join(lines) + "\n")
