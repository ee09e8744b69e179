"""Isotropic elasticity tensor, rigid-motion basis and gap constants.

Everything here is mesh-free and exact up to floating point. Matrices are
d x d numpy arrays; displacement gradients use the convention
``G[i, j] = d u_i / d x_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class LameParameters:
    """Lamé pair (lam, mu) in dimension ``dim``.

    ``kappa3`` is an optional calibration bound: when given, the pair must
    also satisfy ``kappa3 <= mu`` and ``dim*lam + 2*mu <= 1/kappa3``.
    """

    lam: float
    mu: float
    dim: int = 2
    kappa3: Optional[float] = None

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if not (math.isfinite(self.lam) and math.isfinite(self.mu)):
            raise ValueError("Lamé parameters must be finite")
        if self.mu <= 0 or self.dim * self.lam + 2 * self.mu <= 0:
            raise ValueError(
                f"ellipticity violated: need mu > 0 and d*lam + 2*mu > 0 "
                f"(lam={self.lam}, mu={self.mu}, d={self.dim})"
            )
        if self.kappa3 is not None:
            bulk = self.dim * self.lam + 2 * self.mu
            if not (self.kappa3 <= self.mu and bulk <= 1.0 / self.kappa3):
                raise ValueError(
                    f"calibration bound kappa3={self.kappa3} violated by "
                    f"mu={self.mu}, d*lam+2*mu={bulk}"
                )

    @property
    def ellipticity_bounds(self) -> tuple[float, float]:
        """(lower, upper) constants of the quadratic form on symmetric matrices."""
        a, b = 2 * self.mu, self.dim * self.lam + 2 * self.mu
        return min(a, b), max(a, b)


def apply_tensor(A: np.ndarray, p: LameParameters) -> np.ndarray:
    """Return C0 A = lam tr(A) I + mu (A + A^T)."""
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    eye = np.eye(d)
    tr = np.trace(A, axis1=-2, axis2=-1)[..., None, None]
    return p.lam * tr * eye + p.mu * (A + np.swapaxes(A, -1, -2))


def energy_density(E: np.ndarray, F: np.ndarray, p: LameParameters) -> float:
    """Contraction (C0 E, F) = lam tr(E) tr(F) + mu (E + E^T) : F."""
    E = np.asarray(E, dtype=float)
    F = np.asarray(F, dtype=float)
    return float(p.lam * np.trace(E) * np.trace(F) + p.mu * np.sum((E + E.T) * F))


def sym(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + np.swapaxes(A, -1, -2))


@dataclass(frozen=True)
class RigidMotion:
    """One element psi_alpha of the rigid-displacement basis.

    Translations carry ``translation`` (a unit vector) and ``rotation=None``.
    Rotations carry the pair (j, k), j < k, zero-based, and evaluate to
    x_k e_j - x_j e_k.
    """

    index: int
    dim: int
    translation: tuple[float, ...] = field(default=())
    rotation: Optional[tuple[int, int]] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.dim,))
        if self.rotation is None:
            out[...] = np.asarray(self.translation)
        else:
            j, k = self.rotation
            out[..., j] = x[..., k]
            out[..., k] = -x[..., j]
        return out

    def gradient(self) -> np.ndarray:
        """Constant gradient matrix G[i, j] = d psi_i / d x_j."""
        G = np.zeros((self.dim, self.dim))
        if self.rotation is not None:
            j, k = self.rotation
            G[j, k] = 1.0
            G[k, j] = -1.0
        return G

    @property
    def is_translation(self) -> bool:
        return self.rotation is None


def rigid_basis(dim: int) -> list[RigidMotion]:
    """Translations e_1..e_d, then rotations in lexicographic (j, k) order."""
    if dim < 2:
        raise ValueError(f"rigid basis needs d >= 2, got {dim}")
    motions: list[RigidMotion] = []
    for i in range(dim):
        e = [0.0] * dim
        e[i] = 1.0
        motions.append(RigidMotion(index=i + 1, dim=dim, translation=tuple(e)))
    for j in range(dim):
        for k in range(j + 1, dim):
            motions.append(RigidMotion(index=len(motions) + 1, dim=dim, rotation=(j, k)))
    return motions


def n_rigid(dim: int) -> int:
    return dim * (dim + 1) // 2


def gamma_product(gamma: float) -> float:
    """Gamma(1/(1+g)) * Gamma(g/(1+g))."""
    s = 1.0 / (1.0 + gamma)
    return math.gamma(s) * math.gamma(1.0 - s)


def gap_constant(gamma: float, tau: float) -> float:
    """M_{gamma,tau} = 2 Gamma(1/(1+g)) Gamma(g/(1+g)) / ((1+g) tau^(1/(1+g))).

    This is the coefficient of eps^(-g/(1+g)) in the integral of
    1/(eps + tau |x|^(1+g)) over the real line.
    """
    if not gamma > 0 or not tau > 0:
        raise ValueError(f"gap_constant needs gamma > 0 and tau > 0 (got {gamma}, {tau})")
    if gamma > 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return 2.0 * gamma_product(gamma) / ((1.0 + gamma) * tau ** (1.0 / (1.0 + gamma)))


def lame_coeff(p: LameParameters, alpha: int) -> float:
    """L_d^alpha: mu for alpha < d, lam + 2 mu for alpha = d (1-based alpha)."""
    if not 1 <= alpha <= p.dim:
        raise ValueError(f"alpha must lie in 1..{p.dim}, got {alpha}")
    return p.lam + 2 * p.mu if alpha == p.dim else p.mu


@dataclass(frozen=True)
class NamedConstants:
    gamma_gamma: float
    m_gamma_tau: float
    l_d_alpha: tuple[float, ...]


def named_constants(gamma: float, tau: float, p: LameParameters) -> NamedConstants:
    return NamedConstants(
        gamma_gamma=gamma_product(gamma),
        m_gamma_tau=gap_constant(gamma, tau),
        l_d_alpha=tuple(lame_coeff(p, a) for a in range(1, p.dim + 1)),
    )
