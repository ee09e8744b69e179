"""Two-inclusion configurations: neck profiles, presets and closed boundaries.

Coordinates are 2D with x = (x1, x2). The upper inclusion D1 touches the
line x2 = eps from above at the origin, the lower inclusion D2 touches
x2 = 0 from below. Inside the neck band |x1| <= 2R the facing boundaries
are the graphs x2 = eps + h1(x1) and x2 = h2(x1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np


def _superellipse_cap(r: float, p: float, x: np.ndarray) -> np.ndarray:
    """r - (r^p - |x|^p)^(1/p), evaluated without cancellation near x = 0."""
    t = np.abs(x / r) ** p
    return -r * np.expm1(np.log1p(-t) / p)


def _superellipse_cap_deriv(r: float, p: float, x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return np.sign(x) * ax ** (p - 1.0) * (r**p - ax**p) ** (1.0 / p - 1.0)


@dataclass(frozen=True)
class SquareProfile:
    """Curvilinear squares |x1|^p + |x2 - c|^p = r^p with p = 1 + gamma."""

    r1: float
    r2: float
    gamma: float
    kind: str = field(default="square", init=False)

    @property
    def p(self) -> float:
        return 1.0 + self.gamma

    @property
    def tau(self) -> float:
        return (self.r1 ** (-self.gamma) + self.r2 ** (-self.gamma)) / (1.0 + self.gamma)

    @property
    def sigma(self) -> float:
        # Taylor remainder of h1 - h2 is O(|x|^(2 + 2 gamma))
        return 1.0 + self.gamma

    @property
    def size(self) -> float:
        return max(self.r1, self.r2)

    def h1(self, x):
        return _superellipse_cap(self.r1, self.p, np.asarray(x, dtype=float))

    def h2(self, x):
        return -_superellipse_cap(self.r2, self.p, np.asarray(x, dtype=float))

    def dh1(self, x):
        return _superellipse_cap_deriv(self.r1, self.p, np.asarray(x, dtype=float))

    def dh2(self, x):
        return -_superellipse_cap_deriv(self.r2, self.p, np.asarray(x, dtype=float))

    def implicit(self, which: int, pts: np.ndarray, eps: float) -> np.ndarray:
        """Residual of the boundary equation of D_which at points (N, 2)."""
        pts = np.asarray(pts, dtype=float)
        if which == 1:
            r, c = self.r1, eps + self.r1
        else:
            r, c = self.r2, -self.r2
        return np.abs(pts[:, 0]) ** self.p + np.abs(pts[:, 1] - c) ** self.p - r**self.p

    def outer_arc(self, which: int, eps: float, x_cut: float) -> Callable[[np.ndarray], np.ndarray]:
        """Parametrisation s in [0, 1] of the boundary of D_which outside |x1| < x_cut.

        s = 0 sits at x1 = +x_cut on the neck side, s = 1 at x1 = -x_cut. The
        points are exact: each satisfies the implicit equation to rounding.
        """
        p = self.p
        r = self.r1 if which == 1 else self.r2
        c = eps + self.r1 if which == 1 else -self.r2
        t_cut = math.acos((x_cut / r) ** (p / 2.0))
        if which == 1:
            t0, t1 = -t_cut, math.pi + t_cut
        else:
            t0, t1 = t_cut, -math.pi - t_cut

        def arc(s: np.ndarray) -> np.ndarray:
            t = t0 + (t1 - t0) * np.asarray(s, dtype=float)
            ct, st = np.cos(t), np.sin(t)
            x1 = r * np.sign(ct) * np.abs(ct) ** (2.0 / p)
            x2 = c + r * np.sign(st) * np.abs(st) ** (2.0 / p)
            return np.column_stack([x1, x2])

        return arc


@dataclass(frozen=True)
class PowerProfile:
    """Symmetric power profiles h1 = -h2 = tau |x1|^(1+gamma) / 2 on the neck band.

    Away from the band each inclusion is closed by the circular arc tangent
    to the profile at |x1| = 2R.
    """

    tau: float
    gamma: float
    sigma: float
    blend_radius: float
    kind: str = field(default="power", init=False)

    @property
    def p(self) -> float:
        return 1.0 + self.gamma

    def h1(self, x):
        return 0.5 * self.tau * np.abs(np.asarray(x, dtype=float)) ** self.p

    def h2(self, x):
        return -self.h1(x)

    def dh1(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.tau * self.p * np.sign(x) * np.abs(x) ** self.gamma

    def dh2(self, x):
        return -self.dh1(x)

    def _cap_circle(self) -> tuple[float, float]:
        """(centre height above the junction, radius) of the closing circle."""
        b = self.blend_radius
        s = float(self.dh1(b))
        rho = b * math.sqrt(1.0 + s * s) / s
        return b / s, rho

    @property
    def size(self) -> float:
        return self._cap_circle()[1]

    def implicit(self, which: int, pts: np.ndarray, eps: float) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        b = self.blend_radius
        sgn = 1.0 if which == 1 else -1.0
        base = eps if which == 1 else 0.0
        y0 = base + sgn * float(self.h1(b))
        dyc, rho = self._cap_circle()
        yc = y0 + sgn * dyc
        ax = np.abs(pts[:, 0])
        on_band = (ax <= b) & (sgn * (pts[:, 1] - y0) <= 0)
        res_band = pts[:, 1] - (base + sgn * self.h1(pts[:, 0]))
        res_circ = np.hypot(pts[:, 0], pts[:, 1] - yc) - rho
        return np.where(on_band, res_band, res_circ)

    def outer_arc(self, which: int, eps: float, x_cut: float) -> Callable[[np.ndarray], np.ndarray]:
        b = self.blend_radius
        sgn = 1.0 if which == 1 else -1.0
        base = eps if which == 1 else 0.0
        y0 = base + sgn * float(self.h1(b))
        dyc, rho = self._cap_circle()
        yc = y0 + sgn * dyc
        phi0 = math.atan2(y0 - yc, b)
        phi1 = math.atan2(y0 - yc, -b)
        if which == 1:
            phi1 += 2 * math.pi if phi1 < phi0 else 0.0
        else:
            phi1 -= 2 * math.pi if phi1 > phi0 else 0.0
        len_band = b - x_cut
        len_circ = abs(phi1 - phi0) * rho
        total = 2 * len_band + len_circ
        f0, f1 = len_band / total, (len_band + len_circ) / total

        def arc(s: np.ndarray) -> np.ndarray:
            s = np.asarray(s, dtype=float)
            out = np.empty((s.size, 2))
            a = s <= f0
            x = x_cut + (b - x_cut) * s[a] / f0
            out[a] = np.column_stack([x, base + sgn * self.h1(x)])
            m = (s > f0) & (s < f1)
            ph = phi0 + (phi1 - phi0) * (s[m] - f0) / (f1 - f0)
            out[m] = np.column_stack([rho * np.cos(ph), yc + rho * np.sin(ph)])
            z = s >= f1
            x = -b + (b - x_cut) * (s[z] - f1) / (1.0 - f1)
            out[z] = np.column_stack([x, base + sgn * self.h1(x)])
            return out

        return arc


Profile = Union[SquareProfile, PowerProfile]


@dataclass(frozen=True)
class OuterCircle:
    center: tuple[float, float]
    radius: float
    kind: str = field(default="circle", init=False)


@dataclass(frozen=True)
class OuterPolygon:
    vertices: tuple[tuple[float, float], ...]
    kind: str = field(default="polygon", init=False)


Outer = Union[OuterCircle, OuterPolygon]


@dataclass(frozen=True)
class GapGeometry:
    """Immutable two-inclusion configuration.

    ``epsilon = 0`` describes the touching configuration; it is accepted for
    closed-form consumers but cannot be meshed.
    """

    epsilon: float
    gamma: float
    neck_radius: float
    profile: Profile
    outer: Outer

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.neck_radius <= 0:
            raise ValueError("neck radius must be positive")

    @property
    def tau(self) -> float:
        return self.profile.tau

    @property
    def sigma(self) -> float:
        return self.profile.sigma

    def with_epsilon(self, eps: float) -> "GapGeometry":
        outer = self.outer
        if isinstance(outer, OuterCircle):
            outer = OuterCircle(center=(outer.center[0], eps / 2.0), radius=outer.radius)
        return GapGeometry(eps, self.gamma, self.neck_radius, self.profile, outer)

    def _check_band(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 2 * self.neck_radius * (1 + 1e-12)):
            raise ValueError(
                f"|x'| must be <= 2R = {2 * self.neck_radius} (profiles live on the neck band)"
            )
        return x

    def h1(self, x):
        return self.profile.h1(self._check_band(x))

    def h2(self, x):
        return self.profile.h2(self._check_band(x))

    def dh1(self, x):
        return self.profile.dh1(self._check_band(x))

    def dh2(self, x):
        return self.profile.dh2(self._check_band(x))

    def delta(self, x):
        x = self._check_band(x)
        return self.epsilon + self.profile.h1(x) - self.profile.h2(x)

    def ddelta(self, x):
        x = self._check_band(x)
        return self.profile.dh1(x) - self.profile.dh2(x)


def profile_eval(g: GapGeometry, x: float) -> tuple[float, float, float]:
    """(h1, h2, delta) at the tangential coordinate x."""
    h1 = float(g.h1(x))
    h2 = float(g.h2(x))
    return h1, h2, g.epsilon + h1 - h2


def _default_outer(size: float, eps: float) -> OuterCircle:
    return OuterCircle(center=(0.0, eps / 2.0), radius=4.0 * size)


def curvilinear_square_preset(
    r1: float, r2: float, gamma: float, eps: float, r0: float,
    outer: Optional[Outer] = None,
) -> GapGeometry:
    """Two curvilinear squares with rounded-off angles; neck radius R = r0."""
    if not (r1 > 0 and r2 > 0):
        raise ValueError(f"radii must be positive, got r1={r1}, r2={r2}")
    if not 0 < r0 < 0.5 * min(r1, r2):
        raise ValueError(f"need 0 < r0 < min(r1, r2)/2, got r0={r0}")
    prof = SquareProfile(r1=r1, r2=r2, gamma=gamma)
    return GapGeometry(eps, gamma, r0, prof, outer or _default_outer(prof.size, eps))


def power_profile_preset(
    tau: float, gamma: float, sigma: float, eps: float, R: float,
    outer: Optional[Outer] = None,
) -> GapGeometry:
    """Exact power profiles h1 - h2 = tau |x'|^(1+gamma), closed by tangent arcs at 2R."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    prof = PowerProfile(tau=tau, gamma=gamma, sigma=sigma, blend_radius=2 * R)
    return GapGeometry(eps, gamma, R, prof, outer or _default_outer(prof.size, eps))


def neck_region(g: GapGeometry, r: float) -> Callable[[np.ndarray], np.ndarray]:
    """Membership predicate for Omega_r(0'), vectorised over (N, 2) points."""
    if not 0 < r <= 2 * g.neck_radius:
        raise ValueError(f"neck radius r must lie in (0, 2R], got {r}")

    def inside(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x = pts[:, 0]
        ok = np.abs(x) < r
        xc = np.where(ok, x, 0.0)
        lo = g.profile.h2(xc)
        hi = g.epsilon + g.profile.h1(xc)
        return ok & (pts[:, 1] > lo) & (pts[:, 1] < hi)

    return inside


def h2_constant(g: GapGeometry, n: int = 2001) -> float:
    """Sampled kappa_1: sup over the band of |h_i'(x')| / |x'|^gamma."""
    x = np.linspace(-2 * g.neck_radius, 2 * g.neck_radius, n)
    x = x[x != 0]
    ratio = np.maximum(np.abs(g.profile.dh1(x)), np.abs(g.profile.dh2(x))) / np.abs(x) ** g.gamma
    return float(ratio.max())


def envelope_constants(g: GapGeometry, n: int = 4001) -> tuple[float, float]:
    """(tau_1, tau_2) with tau_1 |x'|^(1+g) <= h1 - h2 <= tau_2 |x'|^(1+g) on the band."""
    x = np.linspace(-2 * g.neck_radius, 2 * g.neck_radius, n)
    x = x[x != 0]
    q = (g.profile.h1(x) - g.profile.h2(x)) / np.abs(x) ** (1 + g.gamma)
    return float(q.min()), float(q.max())


def quasi_constancy_radius(g: GapGeometry) -> float:
    """The factor vartheta(tau, kappa_1) = 1 / (8 kappa_1 max(1, tau^(-g/(1+g))))."""
    k1 = h2_constant(g)
    return 1.0 / (8.0 * k1 * max(1.0, g.tau ** (-g.gamma / (1 + g.gamma))))
