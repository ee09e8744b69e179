"""Closed-form asymptotics of the gradient between two close inclusions.

Auxiliary fields, neck integrals, remainder scales, the leading-order
expansions in d = 2 and d >= 3, the refined two-square example, pointwise
bounds at the gap centre, and extrapolation of touching-limit ("starred")
factor matrices from an eps-sweep.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .decomposition import BlowupFactorSet, reduced_matrices
from .elasticity import LameParameters, gap_constant, lame_coeff, n_rigid, rigid_basis
from .geometry import GapGeometry, SquareProfile


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# auxiliary fields


def _check_neck(g: GapGeometry, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise ValueError("expected a 2D point")
    if abs(x[0]) > 2 * g.neck_radius:
        raise ValueError(f"point {tuple(x)} lies outside the neck band |x1| <= {2 * g.neck_radius}")
    return x


def aux_scalar(g: GapGeometry, x) -> tuple[float, np.ndarray]:
    """Keller-type profile vbar = (x2 - h2) / delta and its exact gradient."""
    x = _check_neck(g, x)
    h2 = float(g.h2(x[0]))
    d = float(g.delta(x[0]))
    v = (x[1] - h2) / d
    dd = float(g.ddelta(x[0]))
    dh2 = float(g.dh2(x[0]))
    grad = np.array([-dh2 / d - v * dd / d, 1.0 / d])
    return v, grad


def aux_field_gradient(g: GapGeometry, alpha: int, x) -> np.ndarray:
    """Gradient of ubar_1^alpha = psi_alpha * vbar: psi (x) grad vbar + vbar grad psi."""
    psi = rigid_basis(2)
    if not 1 <= alpha <= len(psi):
        raise ValueError(f"alpha must lie in 1..{len(psi)}, got {alpha}")
    x = _check_neck(g, x)
    v, gv = aux_scalar(g, x)
    m = psi[alpha - 1]
    return np.outer(m(x), gv) + v * m.gradient()


@dataclass(frozen=True)
class RadialGap:
    """Symmetric radial profiles h1 = -h2 = tau |x'|^(1+gamma) / 2 in dimension d."""

    tau: float
    gamma: float
    epsilon: float
    dim: int

    def delta(self, xp: np.ndarray) -> float:
        return self.epsilon + self.tau * float(np.linalg.norm(xp)) ** (1 + self.gamma)

    def aux_scalar(self, x) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        xp, xd = x[:-1], x[-1]
        r = float(np.linalg.norm(xp))
        p = 1 + self.gamma
        h2 = -0.5 * self.tau * r**p
        d = self.delta(xp)
        v = (xd - h2) / d
        # d/dx' of r^p = p r^(p-2) x'
        dr = p * r ** (p - 2) * xp if r > 0 else np.zeros_like(xp)
        dh2 = -0.5 * self.tau * dr
        dd = self.tau * dr
        grad = np.concatenate([-dh2 / d - v * dd / d, [1.0 / d]])
        return v, grad

    def aux_field_gradient(self, alpha: int, x) -> np.ndarray:
        psi = rigid_basis(self.dim)
        if not 1 <= alpha <= len(psi):
            raise ValueError(f"alpha must lie in 1..{len(psi)}, got {alpha}")
        x = np.asarray(x, dtype=float)
        v, gv = self.aux_scalar(x)
        m = psi[alpha - 1]
        return np.outer(m(x), gv) + v * m.gradient()


# ---------------------------------------------------------------------------
# neck integral and remainder scales


def neck_integral(gamma: float, tau: float, R: float, eps: float, rtol: float = 1e-10) -> float:
    """Integral of 1 / (eps + tau |x|^(1+gamma)) over |x| < R by adaptive quadrature.

    The stretched variable t = x (tau/eps)^(1/(1+gamma)) puts the peak on a
    unit scale; the [0, 1] and [1, T] pieces are integrated separately.
    """
    if min(gamma, tau, R, eps) <= 0:
        raise ValueError("neck_integral needs positive parameters")
    p = 1.0 + gamma
    scale = (eps / tau) ** (1.0 / p)
    T = R / scale

    def f(t):
        return 1.0 / (1.0 + t**p)

    total, err = 0.0, 0.0
    for a, b in ((0.0, min(1.0, T)), (1.0, T)):
        if b <= a:
            continue
        if b > 1e3 * max(a, 1.0):
            # geometric breakpoints keep the slowly decaying tail well sampled
            pts = np.geomspace(max(a, 1.0), b, 12)[1:-1]
            val, e = integrate.quad(f, a, b, points=pts, epsabs=0.0, epsrel=1e-13, limit=2000)
        else:
            val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=2000)
        total += val
        err += e
    if err > rtol * total:
        raise QuadratureError(f"neck quadrature error estimate {err / total:.2e} above {rtol:.0e}")
    return 2.0 * scale / eps * total


REMAINDER_KINDS = ("eps_gamma_sigma", "bar_eps_gamma_d", "tilde_eps_gamma_sigma")


def _theta_bar(gamma: float) -> float:
    return gamma**2 / (2 * (1 + 2 * gamma) * (1 + gamma) ** 2)


def remainder_exponent(kind: str, gamma: float, sigma: Optional[float] = None, d: int = 2) -> tuple[float, bool]:
    """(exponent, has_log) such that the remainder scale is eps^exponent (times |ln eps|)."""
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if kind == "eps_gamma_sigma":
        if sigma is None or sigma <= 0:
            raise ValueError("this remainder needs sigma > 0")
        if gamma > sigma:
            return min(sigma / (1 + gamma), _theta_bar(gamma)), False
        return _theta_bar(gamma), False
    if kind == "bar_eps_gamma_d":
        if d < 3:
            raise ValueError("this remainder is defined for d >= 3")
        if d == 3:
            return gamma**2 * (1 - gamma) / (2 * (1 + 2 * gamma) * (1 + gamma) ** 2), False
        if d == 4:
            return _theta_bar(gamma) * min(1 + gamma, 2 - gamma), False
        return gamma**2 / (2 * (1 + 2 * gamma) * (1 + gamma)), False
    if kind == "tilde_eps_gamma_sigma":
        if sigma is None or sigma <= 0:
            raise ValueError("this remainder needs sigma > 0")
        if gamma > sigma:
            return sigma / (1 + gamma), False
        if gamma == sigma:
            return gamma / (1 + gamma), True
        return gamma / (1 + gamma), False
    raise ValueError(f"unknown remainder kind {kind!r}; expected one of {REMAINDER_KINDS}")


def remainder_scale(kind: str, gamma: float, sigma: Optional[float], d: int, eps: float) -> float:
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    q, has_log = remainder_exponent(kind, gamma, sigma, d)
    val = eps**q
    return val * abs(math.log(eps)) if has_log else val


# ---------------------------------------------------------------------------
# starred matrices


@dataclass
class EntryFit:
    value: float  # limit x*
    exponent: float  # q in x* + c eps^q, or the power-law slope for divergent entries
    coeff: float
    residual: float  # relative rms misfit
    reliable: bool
    kind: str  # "converging", "constant", "divergent"


def fit_limit(eps: Sequence[float], vals: Sequence[float], rel_tol: float = 1e-3) -> EntryFit:
    """Fit x(eps) = x* + c eps^q with free q by profiling over q."""
    e = np.asarray(eps, dtype=float)
    y = np.asarray(vals, dtype=float)
    if len(e) < 3:
        raise ValueError("need at least three samples to fit a limit")
    scale = np.abs(y).max()
    if scale == 0 or np.ptp(y) <= 1e-10 * scale:
        return EntryFit(float(y.mean()), 0.0, 0.0, 0.0, True, "constant")

    def solve(q: float):
        Amat = np.column_stack([np.ones_like(e), e**q])
        coef, *_ = np.linalg.lstsq(Amat, y, rcond=None)
        r = Amat @ coef - y
        return float(r @ r), coef

    qs = np.linspace(0.02, 3.0, 150)
    best = int(np.argmin([solve(q)[0] for q in qs]))
    lo, hi = qs[max(best - 1, 0)], qs[min(best + 1, len(qs) - 1)]
    res = optimize.minimize_scalar(lambda q: solve(q)[0], bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    q = float(res.x)
    ss, (xs, c) = solve(q)
    rel = math.sqrt(ss / len(e)) / max(abs(xs), np.abs(y).max())
    at_bound = q <= 0.0201 or q >= 2.999
    reliable = rel <= rel_tol and not at_bound and np.isfinite(xs)
    return EntryFit(float(xs), q, float(c), rel, bool(reliable), "converging")


def fit_divergent(eps: Sequence[float], vals: Sequence[float], lead: float, s: float) -> EntryFit:
    """Fit a divergent entry: free power-law slope plus the lead * eps^-s (1 + c eps^p) model."""
    e = np.asarray(eps, dtype=float)
    y = np.asarray(vals, dtype=float)
    if np.any(y <= 0):
        return EntryFit(float("nan"), float("nan"), float("nan"), float("inf"), False, "divergent")
    slope, icpt = np.polyfit(np.log(e), np.log(y), 1)
    z = y / (lead * e ** (-s)) - 1.0

    def cost(pw: float):
        Amat = e[:, None] ** pw
        c = float(np.linalg.lstsq(Amat, z, rcond=None)[0][0])
        r = c * e**pw - z
        return float(r @ r), c

    res = optimize.minimize_scalar(lambda pw: cost(pw)[0], bounds=(0.01, 3.0), method="bounded")
    ss, c = cost(float(res.x))
    rel = math.sqrt(ss / len(e))
    return EntryFit(float("inf"), float(slope), c, rel, False, "divergent")


@dataclass
class StarredMatrices:
    """Touching-limit factor data.

    ``F`` and ``Y`` hold starred values; entries that diverge in the limit are
    NaN and never enter the reduced matrices.
    """

    dim: int
    F: np.ndarray
    Y: np.ndarray
    fits: dict = field(default_factory=dict)  # key -> EntryFit
    divergent: tuple = ()

    # -- d = 2 layout ------------------------------------------------------
    def F0(self) -> np.ndarray:
        return reduced_matrices(self.F, self.Y)[0]

    def F1(self, alpha: int) -> np.ndarray:
        return reduced_matrices(self.F, self.Y)[1][alpha - 1]

    def det_ratios_d2(self) -> np.ndarray:
        if self.dim != 2:
            raise ValueError("reduced F0/F1 layout exists only for d = 2")
        F0, F1 = reduced_matrices(self.F, self.Y)
        for M in [F0, *F1]:
            if not np.all(np.isfinite(M)):
                raise ValueError("starred matrices contain unreliable or divergent entries")
        d0 = np.linalg.det(F0)
        if abs(d0) <= 1e-14 * np.prod(np.abs(np.diag(F0))):
            raise np.linalg.LinAlgError("det F0* is (numerically) zero")
        return np.array([np.linalg.det(M) / d0 for M in F1])

    # -- d >= 3 layout -----------------------------------------------------
    def F2(self, alpha: int) -> np.ndarray:
        M = self.F.copy()
        M[:, alpha - 1] = self.Y
        return M

    def det_ratios_full(self) -> np.ndarray:
        d = np.linalg.det(self.F)
        if d == 0 or not np.isfinite(d):
            raise np.linalg.LinAlgError("det F* is zero or undefined")
        return np.array([np.linalg.det(self.F2(a)) / d for a in range(1, n_rigid(self.dim) + 1)])

    @property
    def unreliable(self) -> list[str]:
        return sorted(k for k, f in self.fits.items() if not f.reliable and f.kind != "divergent")

    @classmethod
    def from_matrices(cls, F, Y, dim: int) -> "StarredMatrices":
        F = np.asarray(F, dtype=float)
        Y = np.asarray(Y, dtype=float)
        n = n_rigid(dim)
        if F.shape != (2 * n, 2 * n) or Y.shape != (2 * n,):
            raise ValueError(f"expected F of shape {(2 * n, 2 * n)} and Y of length {2 * n}")
        return cls(dim, F, Y)

    def to_json_dict(self) -> dict:
        out: dict = {"dim": self.dim, "F": _nan_list(self.F), "Y": _nan_list(self.Y),
                     "divergent": list(self.divergent)}
        for k, f in sorted(self.fits.items()):
            out[k] = _finite_or_str(f.value)
            out[f"{k}.fit_exponent"] = _finite_or_str(f.exponent)
            out[f"{k}.fit_residual"] = _finite_or_str(f.residual)
            out[f"{k}.reliable"] = f.reliable
            out[f"{k}.kind"] = f.kind
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "StarredMatrices":
        F = np.array(d["F"], dtype=float)
        Y = np.array(d["Y"], dtype=float)
        fits = {}
        for k in d:
            if k.endswith(".fit_exponent"):
                base = k[: -len(".fit_exponent")]
                fits[base] = EntryFit(
                    float(d[base]), float(d[k]), float("nan"), float(d[f"{base}.fit_residual"]),
                    bool(d[f"{base}.reliable"]), d[f"{base}.kind"],
                )
        return cls(int(d["dim"]), F, Y, fits, tuple(d.get("divergent", ())))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=1)

    @classmethod
    def loads(cls, text: str) -> "StarredMatrices":
        return cls.from_json_dict(json.loads(text))


def _finite_or_str(x: float):
    return x if math.isfinite(x) else str(x)


def _nan_list(a: np.ndarray):
    return np.where(np.isfinite(a), a, np.nan).tolist()


def limit_matrices_extrapolate(
    samples: Sequence[tuple[float, BlowupFactorSet]],
    gamma: float, tau: float, p: LameParameters, rel_tol: float = 1e-3, zero_tol: float = 1e-4,
) -> StarredMatrices:
    """Entrywise eps -> 0 extrapolation of the block system of a d = 2 sweep.

    The individual energies a_ij^{aa} (a = 1, 2) all diverge, but every
    entry of F outside its top-left 2 x 2 block combines them into a
    convergent quantity, so the fits run on F and Y. Each is fitted to
    x* + c eps^q with free q. The translational self-energies F[1][1] and
    F[2][2] are fitted to L M eps^(-g/(1+g)) (1 + c eps^p) instead, and the
    whole 2 x 2 block is left out of the starred matrices.

    Entries whose magnitude stays below ``zero_tol`` times the largest
    convergent entry of their array vanish by symmetry in the limit and are
    set to zero.
    """
    if len(samples) < 4:
        raise ValueError("starred extrapolation needs at least four sweep points")
    eps = np.array([e for e, _ in samples], dtype=float)
    if np.any(np.diff(eps) >= 0):
        raise ValueError("samples must be ordered by strictly decreasing eps")
    n = samples[0][1].n
    F = np.stack([fs.F for _, fs in samples])  # (k, 2n, 2n)
    Y = np.stack([fs.Y for _, fs in samples])
    s = gamma / (1 + gamma)
    M = gap_constant(gamma, tau)
    div = np.zeros((2 * n, 2 * n), dtype=bool)
    div[:2, :2] = True
    F_scale = np.abs(F[:, ~div]).max()
    Y_scale = np.abs(Y).max()
    F_star = np.full((2 * n, 2 * n), np.nan)
    Y_star = np.full(2 * n, np.nan)
    fits: dict = {}
    divergent = []
    for r, c in itertools.product(range(2 * n), range(2 * n)):
        key = f"F[{r + 1}][{c + 1}]"
        series = F[:, r, c]
        if div[r, c]:
            divergent.append(key)
            if r == c:
                fits[key] = fit_divergent(eps, series, lame_coeff(p, r + 1) * M, s)
            else:
                fits[key] = EntryFit(float("inf"), float("nan"), float("nan"), float("nan"), False, "divergent")
            continue
        f = _fit_or_zero(eps, series, F_scale, rel_tol, zero_tol)
        fits[key] = f
        F_star[r, c] = f.value if f.reliable else np.nan
    for r in range(2 * n):
        key = f"Y[{r + 1}]"
        f = _fit_or_zero(eps, Y[:, r], Y_scale, rel_tol, zero_tol)
        fits[key] = f
        Y_star[r] = f.value if f.reliable else np.nan
    return StarredMatrices(2, F_star, Y_star, fits, tuple(divergent))


def _fit_or_zero(eps, series, scale: float, rel_tol: float, zero_tol: float) -> EntryFit:
    if scale == 0 or np.abs(series).max() <= zero_tol * scale:
        return EntryFit(0.0, 0.0, 0.0, 0.0, True, "zero")
    return fit_limit(eps, series, rel_tol)


def _scale_of(F: np.ndarray) -> float:
    v = np.abs(F[np.isfinite(F)])
    return float(v.max()) if v.size else 1.0


# ---------------------------------------------------------------------------
# expansions


@dataclass
class Expansion:
    c_diff: np.ndarray  # predicted C1^a - C2^a
    grad: Optional[np.ndarray]  # predicted grad u at x
    remainder_kind: str
    remainder: float
    extra_budget: float = 0.0
    det_ratios: Optional[np.ndarray] = None


def expansion_d2(
    star: StarredMatrices, g: GapGeometry, p: LameParameters, eps: float, x=None,
    phi_norm: float = 1.0,
) -> Expansion:
    """Leading-order free constants and gradient for two inclusions in the plane.

    C1^a - C2^a = (det F1*^a / det F0*) eps^(g/(1+g)) / (L^a M) for a = 1, 2
    and det F1*^3 / det F0* for the rotation.
    """
    ratios = star.det_ratios_d2()
    gam = g.gamma
    M = gap_constant(gam, g.tau)
    s = gam / (1 + gam)
    c = np.array([
        ratios[0] * eps**s / (lame_coeff(p, 1) * M),
        ratios[1] * eps**s / (lame_coeff(p, 2) * M),
        ratios[2],
    ])
    grad = None
    extra = 0.0
    if x is not None:
        ge = g.with_epsilon(eps)
        grad = sum(c[a] * aux_field_gradient(ge, a + 1, x) for a in range(3))
        extra = float(ge.delta(np.asarray(x, dtype=float)[0])) ** (-(1 - gam) / (1 + gam)) * phi_norm
    rem = remainder_scale("eps_gamma_sigma", gam, g.sigma, 2, eps)
    return Expansion(c, grad, "eps_gamma_sigma", rem, extra, ratios)


def expansion_dge3(
    star: StarredMatrices, gamma: float, d: int, eps: float, x=None, tau: float = 1.0,
) -> Expansion:
    """C1^a - C2^a = det F2*^a / det F*, with the eps-bar(gamma, d) remainder budget.

    The gradient is assembled from radial auxiliary fields with profile
    tau |x'|^(1+gamma) (formula level; no finite element counterpart).
    """
    if d < 3 or star.dim != d:
        raise ValueError(f"expansion_dge3 needs d >= 3 and matching starred data (got d={d}, star.dim={star.dim})")
    ratios = star.det_ratios_full()
    grad = None
    if x is not None:
        rg = RadialGap(tau, gamma, eps, d)
        grad = sum(ratios[a] * rg.aux_field_gradient(a + 1, x) for a in range(n_rigid(d)))
    rem = remainder_scale("bar_eps_gamma_d", gamma, None, d, eps)
    return Expansion(ratios.copy(), grad, "bar_eps_gamma_d", rem, 0.0, ratios)


# ---------------------------------------------------------------------------
# the two-square example


def _square_tail_constant(prof: SquareProfile) -> float:
    """Limit of 1/(h1 - h2) - 1/(tau0 |x|^(1+g)) at x -> 0 from the second Taylor term."""
    p = prof.p
    kappa = sum((p - 1) * r ** (1 - 2 * p) / (2 * p * p) for r in (prof.r1, prof.r2))
    return -kappa / prof.tau**2


def square_gap_constant(g: GapGeometry, r0: float, cutoff: float = 1e-3) -> float:
    """C*: integral over |x1| < r0 of 1/(h1 - h2) - 1/(tau0 |x1|^(1+g)).

    The integrand is bounded. [cutoff, r0] is integrated adaptively and
    (0, cutoff) through the leading Taylor value, whose error is
    O(cutoff^(2 + g)).
    """
    prof = g.profile
    if not isinstance(prof, SquareProfile):
        raise ValueError("the refined example applies to the curvilinear-square preset only")
    if not 0 < cutoff < r0:
        raise ValueError("need 0 < cutoff < r0")
    p, tau0 = prof.p, prof.tau

    def f(x):
        return 1.0 / (prof.h1(x) - prof.h2(x)) - 1.0 / (tau0 * x**p)

    val, err = integrate.quad(f, cutoff, r0, epsabs=1e-13, epsrel=1e-12, limit=500)
    if err > 1e-9:
        raise QuadratureError(f"C* quadrature error estimate {err:.1e}")
    return 2.0 * (val + cutoff * _square_tail_constant(prof))


@dataclass
class RefinedPrediction:
    c_star: float
    k_star: np.ndarray  # alpha = 1, 2
    g_star: np.ndarray
    factor: np.ndarray  # 1 / (1 + G* eps^(g/(1+g)))
    c_diff_refined: np.ndarray
    c_diff_leading: np.ndarray


def example_refined(
    g: GapGeometry, p: LameParameters, star: Optional[StarredMatrices], r0: float, eps: float,
    k_star: Optional[Sequence[float]] = None, cutoff: float = 1e-3,
) -> RefinedPrediction:
    """Refined free constants for two curvilinear squares.

    K*_a = L^a C* - 2 L^a / (g tau0 r0^g) is the constant term of the
    self-energy a_11^{aa}; G*_a = K*_a / (L^a M) enters through the factor
    1 / (1 + G*_a eps^(g/(1+g))). ``k_star`` overrides the computed K*.
    """
    if not isinstance(g.profile, SquareProfile):
        raise ValueError("the refined example applies to the curvilinear-square preset only")
    gam, tau0 = g.gamma, g.tau
    M = gap_constant(gam, tau0)
    s = gam / (1 + gam)
    c_star = square_gap_constant(g, r0, cutoff)
    L = np.array([lame_coeff(p, 1), lame_coeff(p, 2)])
    if k_star is None:
        K = L * c_star - 2 * L / (gam * tau0 * r0**gam)
    else:
        K = np.asarray(k_star, dtype=float)
    G = K / (L * M)
    factor = 1.0 / (1.0 + G * eps**s)
    if star is not None:
        lead = expansion_d2(star, g, p, eps).c_diff
    else:
        lead = np.array([1.0, 1.0, 1.0]) * np.nan
    refined = lead.copy()
    refined[:2] = lead[:2] * factor
    return RefinedPrediction(c_star, K, G, factor, refined, lead)


# ---------------------------------------------------------------------------
# pointwise bounds


def pointwise_bounds(
    star: StarredMatrices, g: GapGeometry, p: LameParameters, eps: float, C: float = 1.0,
    tau_bounds: Optional[tuple[float, float]] = None,
) -> tuple[float, float]:
    """Lower and upper bounds for |grad u| on the line x' = 0.

    d = 2: tau1^(1/(1+g)) |det F1*^a0| / (C L^a0 |det F0*|) eps^(-1/(1+g)) from
    below and C max_a tau2^(1/(1+g)) |det F1*^a| / (L^a |det F0*|) eps^(-1/(1+g))
    from above. d >= 3 uses det F2*^a / det F* and eps^-1. The unknown
    constant C >= 1 is a caller-supplied calibration.
    """
    if C < 1:
        raise ValueError("the calibration constant must be >= 1")
    if star.dim == 2:
        from .geometry import envelope_constants

        t1, t2 = tau_bounds or envelope_constants(g)
        ratios = np.abs(star.det_ratios_d2()[:2])
        if np.all(ratios == 0):
            raise ValueError("all det F1*^a vanish for a = 1, 2: no lower bound available")
        L = np.array([lame_coeff(p, 1), lame_coeff(p, 2)])
        e = eps ** (-1.0 / (1 + g.gamma))
        lower = max(t1 ** (1 / (1 + g.gamma)) * ratios / L) / C * e
        upper = C * max(t2 ** (1 / (1 + g.gamma)) * ratios / L) * e
        return float(lower), float(upper)
    ratios = np.abs(star.det_ratios_full()[: star.dim])
    if np.all(ratios == 0):
        raise ValueError("all det F2*^a vanish for a <= d: no lower bound available")
    return float(ratios.max() / (C * eps)), float(C * ratios.max() / eps)


def calibrate_bound_constant(lower: float, upper: float, measured: float) -> float:
    """Smallest C >= 1 putting ``measured`` inside the C-scaled bounds (given at C = 1)."""
    return max(1.0, lower / measured, measured / upper)
