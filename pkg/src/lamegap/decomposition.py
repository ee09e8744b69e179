"""Decomposition of the two-inclusion solution into basis fields.

    u = sum_a C1^a v1^a + sum_a C2^a v2^a + v0

where v_i^a equals the rigid motion psi_a on the boundary of D_i and zero
on the other boundaries, and v0 carries the outer data phi. The free
constants follow from the zero-net-traction conditions, written through
energy inner products a_ij^{ab} and load terms b_j^b.

Block matrices are indexed [test, unknown]: row beta, column alpha, so
``A[beta, alpha] = a_11^{alpha beta}``. With that layout the full matrix F
is the Gram matrix of {v1^a} u {v1^a + v2^a} and is symmetric positive
definite.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .elasticity import LameParameters, n_rigid, rigid_basis
from .fem import (
    AssembledSystem, AssemblyError, DisplacementField, assemble, gradient_at,
    solve_dirichlet_many, SolverError,
)
from .geometry import GapGeometry
from .mesh import Mesh

BoundaryFn = Callable[[np.ndarray], np.ndarray]

PHI_PRESETS: dict[str, BoundaryFn] = {
    "x1_x2": lambda x: np.column_stack([x[:, 0], x[:, 1]]),
    "x2_x1": lambda x: np.column_stack([x[:, 1], x[:, 0]]),
    "zero": lambda x: np.zeros((len(x), 2)),
}


def _zero(x: np.ndarray) -> np.ndarray:
    return np.zeros((len(x), 2))


@dataclass
class BasisFieldSet:
    system: AssembledSystem
    v: dict  # (i, alpha) -> DisplacementField, alpha 1-based
    v0: DisplacementField
    lift: DisplacementField  # phi on the outer boundary nodes, zero elsewhere
    phi: BoundaryFn
    geometry: Optional[GapGeometry] = None

    @property
    def n_modes(self) -> int:
        return n_rigid(2)

    def sum_field(self, alpha: int) -> DisplacementField:
        return self.v[1, alpha] + self.v[2, alpha]


def solve_basis_fields(
    m: Mesh, g: Optional[GapGeometry], p: LameParameters, phi: BoundaryFn,
    order: int = 2, system: Optional[AssembledSystem] = None,
) -> BasisFieldSet:
    """Seven Dirichlet solves sharing one factorization (d = 2)."""
    sysm = system or assemble(m, p, order)
    psi = rigid_basis(2)
    keys = [(i, a.index) for i in (1, 2) for a in psi]
    bcs = []
    for i, a in keys:
        mot = psi[a - 1]
        bcs.append({"D1": mot if i == 1 else _zero, "D2": mot if i == 2 else _zero, "OUTER": _zero})
    bcs.append({"D1": _zero, "D2": _zero, "OUTER": phi})
    try:
        sols = solve_dirichlet_many(sysm, bcs)
    except SolverError as exc:
        raise SolverError(f"basis solve failed for (i, alpha) in {keys} or v0: {exc}") from exc
    v = dict(zip(keys, sols[:-1]))
    # discrete lift of phi: boundary interpolant with zero interior values
    space = sysm.space
    lift_vals = np.zeros(space.n_dofs)
    nodes = space.boundary_nodes("OUTER")
    vals = np.asarray(phi(space.nodes[nodes]), dtype=float).reshape(-1, 2)
    lift_vals[2 * nodes] = vals[:, 0]
    lift_vals[2 * nodes + 1] = vals[:, 1]
    lift = DisplacementField(space, lift_vals)
    return BasisFieldSet(sysm, v, sols[-1], lift, phi, g)


@dataclass
class BlowupFactorSet:
    """Energy entries a[i-1, j-1, alpha-1, beta-1] and loads b[j-1, beta-1]."""

    a: np.ndarray  # (2, 2, n, n)
    b: np.ndarray  # (2, n)
    epsilon: Optional[float] = None

    @property
    def n(self) -> int:
        return self.a.shape[-1]

    @property
    def A(self) -> np.ndarray:
        return self.a[0, 0].T

    @property
    def B(self) -> np.ndarray:
        return (self.a[0, 0] + self.a[1, 0]).T

    @property
    def C(self) -> np.ndarray:
        return (self.a[0, 0] + self.a[0, 1]).T

    @property
    def D(self) -> np.ndarray:
        return self.a.sum(axis=(0, 1)).T

    @property
    def F(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    @property
    def Y(self) -> np.ndarray:
        return np.concatenate([self.b[0], self.b.sum(axis=0)])

    def F0(self) -> np.ndarray:
        return reduced_matrices(self.F, self.Y)[0]

    def F1(self, alpha: int) -> np.ndarray:
        return reduced_matrices(self.F, self.Y)[1][alpha - 1]

    def symmetry_defect(self) -> float:
        """max |a_ij^{ab} - a_ji^{ba}| relative to the largest entry."""
        swapped = np.transpose(self.a, (1, 0, 3, 2))
        return float(np.abs(self.a - swapped).max() / np.abs(self.a).max())

    def to_json_dict(self) -> dict:
        out: dict = {}
        n = self.n
        for i, j, al, be in itertools.product((1, 2), (1, 2), range(1, n + 1), range(1, n + 1)):
            out[f"a[{i}][{j}][{al}][{be}]"] = float(self.a[i - 1, j - 1, al - 1, be - 1])
        for j, be in itertools.product((1, 2), range(1, n + 1)):
            out[f"b[{j}][{be}]"] = float(self.b[j - 1, be - 1])
        out["F"] = self.F.tolist()
        out["Y"] = self.Y.tolist()
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "BlowupFactorSet":
        n = int(round(np.sqrt(sum(1 for k in d if k.startswith("a[")) / 4)))
        a = np.empty((2, 2, n, n))
        b = np.empty((2, n))
        for i, j, al, be in itertools.product((1, 2), (1, 2), range(1, n + 1), range(1, n + 1)):
            a[i - 1, j - 1, al - 1, be - 1] = d[f"a[{i}][{j}][{al}][{be}]"]
        for j, be in itertools.product((1, 2), range(1, n + 1)):
            b[j - 1, be - 1] = d[f"b[{j}][{be}]"]
        return cls(a, b, d.get("epsilon"))


def factor_entries(fields: BasisFieldSet, sym_tol: float = 1e-8) -> BlowupFactorSet:
    """All a_ij^{ab} = a(v_i^a, v_j^b) and b_j^b = -a(v_j^b, lift of phi)."""
    sysm = fields.system
    n = fields.n_modes
    cols = [fields.v[i, a].values for i in (1, 2) for a in range(1, n + 1)]
    V = np.column_stack(cols)
    G = V.T @ (sysm.K @ V)
    a = G.reshape(2, n, 2, n).transpose(0, 2, 1, 3).copy()
    b = -(V.T @ (sysm.K @ fields.lift.values)).reshape(2, n)
    fs = BlowupFactorSet(a, b, fields.geometry.epsilon if fields.geometry else None)
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise AssemblyError("non-finite factor entries")
    defect = fs.symmetry_defect()
    if defect > sym_tol:
        raise AssemblyError(f"a_ij^(ab) symmetry defect {defect:.2e} exceeds {sym_tol:.0e}")
    return fs


def assemble_block_system(fs: BlowupFactorSet, fields: Optional[BasisFieldSet] = None):
    """(F, Y) with F = [[A, B], [C, D]] and Y = [b_1; b_1 + b_2]."""
    return fs.F, fs.Y


def reduced_matrices(F: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """The d = 2 matrices F0 and F1^alpha for alpha = 1, 2, 3.

    F0 drops the rows and columns of the two translational unknowns of the
    first block, whose diagonal energies diverge. F1^alpha (alpha = 1, 2)
    keeps row alpha on top of F0's rows, with Y in place of the dropped
    column. F1^3 is F0 with its first column replaced by Y.
    """
    keep = [2, 3, 4, 5]
    F0 = F[np.ix_(keep, keep)]
    F1 = []
    for alpha in (1, 2):
        rows = [alpha - 1] + keep
        M = np.column_stack([Y[rows], F[np.ix_(rows, keep)]])
        F1.append(M)
    M3 = F0.copy()
    M3[:, 0] = Y[keep]
    F1.append(M3)
    return F0, F1


@dataclass
class FreeConstants:
    X1: np.ndarray  # C1 - C2
    X2: np.ndarray  # C2
    residual: float
    cond: float
    cramer: np.ndarray  # det(F with column k replaced by Y) / det F, k = 1..2n
    cramer_reduced: np.ndarray  # det F1^a / (a_11^{aa} det F0) for a <= 2, det F1^3 / det F0

    @property
    def C1(self) -> np.ndarray:
        return self.X1 + self.X2

    @property
    def C2(self) -> np.ndarray:
        return self.X2

    def cramer_agreement(self) -> float:
        x = np.concatenate([self.X1, self.X2])
        scale = max(np.abs(x).max(), 1e-300)
        return float(np.abs(self.cramer - x).max() / scale)

    def to_json_dict(self) -> dict:
        return {
            "X1": self.X1.tolist(),
            "X2": self.X2.tolist(),
            "cond": self.cond,
            "residual": self.residual,
            "cramer_ratios": self.cramer.tolist(),
            "cramer_reduced": self.cramer_reduced.tolist(),
        }


def cramer_solve(F: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """x_k = det(F_k) / det(F), F_k being F with column k replaced by Y.

    Determinants via slogdet so that large energy entries do not overflow.
    """
    s0, l0 = np.linalg.slogdet(F)
    if s0 == 0:
        raise np.linalg.LinAlgError("singular matrix in Cramer solve")
    out = np.empty(len(Y))
    for k in range(len(Y)):
        Fk = F.copy()
        Fk[:, k] = Y
        s, l = np.linalg.slogdet(Fk)
        out[k] = s * s0 * np.exp(l - l0) if s != 0 else 0.0
    return out


def solve_free_constants(F: np.ndarray, Y: np.ndarray, cond_max: float = 1e14) -> FreeConstants:
    """Direct dense solve, with Cramer-form ratios kept for comparison."""
    F = np.asarray(F, dtype=float)
    Y = np.asarray(Y, dtype=float)
    cond = float(np.linalg.cond(F))
    if not np.isfinite(cond) or cond > cond_max:
        raise np.linalg.LinAlgError(f"block matrix numerically singular (condition estimate {cond:.3e})")
    x = np.linalg.solve(F, Y)
    x += np.linalg.solve(F, Y - F @ x)  # one refinement step
    ynorm = np.linalg.norm(Y)
    res = float(np.linalg.norm(F @ x - Y) / ynorm) if ynorm > 0 else float(np.linalg.norm(F @ x))
    n = len(Y) // 2
    cr = cramer_solve(F, Y)
    reduced = np.full(3, np.nan)
    if n == 3:
        F0, F1 = reduced_matrices(F, Y)
        d0 = np.linalg.det(F0)
        if d0 != 0:
            for k in range(3):
                denom = d0 * (F[k, k] if k < 2 else 1.0)
                reduced[k] = np.linalg.det(F1[k]) / denom
    return FreeConstants(x[:n].copy(), x[n:].copy(), res, cond, cr, reduced)


@dataclass
class Reconstruction:
    u: DisplacementField
    singular: DisplacementField
    regular: DisplacementField
    probes: list = field(default_factory=list)  # (point, grad u, grad singular, grad regular)


def reconstruct_solution(
    fields: BasisFieldSet, X: FreeConstants, probes: Sequence[Sequence[float]] = (),
) -> Reconstruction:
    n = fields.n_modes
    sing = sum((X.X1[a - 1] * fields.v[1, a] for a in range(2, n + 1)), X.X1[0] * fields.v[1, 1])
    reg = fields.v0
    for a in range(1, n + 1):
        reg = reg + X.X2[a - 1] * fields.sum_field(a)
    u = sing + reg
    out = Reconstruction(u, sing, reg)
    for x in probes:
        out.probes.append((tuple(x), gradient_at(u, x), gradient_at(sing, x), gradient_at(reg, x)))
    return out


def flux_residual(fs: BlowupFactorSet, X: FreeConstants) -> float:
    """sum_b |sum_a C1^a a_11^{ab} + sum_a C2^a a_21^{ab} - b_1^b| (first row block)."""
    r = X.C1 @ fs.a[0, 0] + X.C2 @ fs.a[1, 0] - fs.b[0]
    return float(np.abs(r).sum())


def regular_part_diagnostics(
    fields: BasisFieldSet, X: FreeConstants, g: GapGeometry, n_probes: int = 9,
) -> dict:
    """Regular-part gradient against the singular part along the gap mid-line."""
    rec = reconstruct_solution(fields, X)
    xs = np.linspace(-0.5 * g.neck_radius, 0.5 * g.neck_radius, n_probes)
    reg_norms, ratios = [], []
    for x in xs:
        mid = 0.5 * (g.epsilon + float(g.h1(x)) + float(g.h2(x)))
        gr = np.linalg.norm(gradient_at(rec.regular, (x, mid)))
        gs = np.linalg.norm(gradient_at(rec.singular, (x, mid)))
        reg_norms.append(gr)
        ratios.append(gr / gs if gs > 0 else (0.0 if gr == 0 else np.inf))
    centre = (0.0, 0.5 * g.epsilon)
    gr0 = float(np.linalg.norm(gradient_at(rec.regular, centre)))
    gs0 = float(np.linalg.norm(gradient_at(rec.singular, centre)))
    return {
        "probe_x1": xs.tolist(),
        "max_regular": float(max(reg_norms)),
        "max_ratio": float(max(ratios)),
        "center_regular": gr0,
        "center_singular": gs0,
        "center_ratio": gr0 / gs0 if gs0 > 0 else (0.0 if gr0 == 0 else float("inf")),
    }


def dump_json(fs: BlowupFactorSet, X: Optional[FreeConstants] = None) -> str:
    d = fs.to_json_dict()
    if X is not None:
        d.update(X.to_json_dict())
    return json.dumps(d, sort_keys=True, indent=1)
