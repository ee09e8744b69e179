"""Epsilon sweep: per-point pipeline, deterministic merge, post-processing."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import asymptotics as asy
from ..decomposition import (
    PHI_PRESETS, BlowupFactorSet, factor_entries, flux_residual, reconstruct_solution,
    regular_part_diagnostics, solve_basis_fields, solve_free_constants,
)
from ..elasticity import lame_coeff
from ..fem import gradient_at
from ..geometry import GapGeometry, SquareProfile
from ..mesh import build_mesh, gap_crossing_counts, gap_layer_count
from .config import RunConfig
from .rates import degenerate_fit, fit_rate_or_degenerate

log = logging.getLogger(__name__)

F0_SAMPLES = 100
F0_SEED = 7


@dataclass
class SweepReport:
    config: dict
    points: list  # per-eps records, decreasing eps
    failures: list  # {"epsilon", "error"}
    rates: dict = field(default_factory=dict)
    starred: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def ok_points(self) -> list:
        return [p for p in self.points if p["status"] == "ok"]

    def to_json_dict(self, with_timings: bool = True) -> dict:
        out = {
            "config": self.config,
            "points": self.points,
            "failures": self.failures,
            "rates": self.rates,
            "starred": self.starred,
            "analysis": self.analysis,
            "verdicts": self.verdicts,
        }
        if with_timings:
            out["timings"] = self.timings
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "SweepReport":
        return cls(d["config"], d["points"], d["failures"], d.get("rates", {}), d.get("starred", {}),
                   d.get("analysis", {}), d.get("verdicts", []), d.get("timings", {}))


def probe_point(g: GapGeometry, x1: float, s: float) -> tuple[float, float]:
    """Point at x1 a fraction ``s`` of the way from the lower to the upper boundary."""
    lo = float(g.h2(x1))
    return (x1, lo + s * float(g.delta(x1)))


def _norm(a) -> float:
    return float(np.linalg.norm(a))


def run_point(cfg: RunConfig, eps: float) -> tuple[dict, dict]:
    """Full decomposition at one eps. Returns (record, timings)."""
    t: dict = {}
    g = cfg.geometry.build(eps)
    p = cfg.material.build()
    t0 = time.perf_counter()
    m = build_mesh(g, cfg.mesh.build())
    t["mesh"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    fields = solve_basis_fields(m, g, p, PHI_PRESETS[cfg.phi], order=cfg.mesh.order)
    t["solve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    fs = factor_entries(fields, sym_tol=cfg.tolerances.symmetry_rel)
    X = solve_free_constants(fs.F, fs.Y)
    t["factors"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    centre = (0.0, 0.5 * eps)
    probes = [centre] + [probe_point(g, x1, s) for x1, s in cfg.probes]
    rec = reconstruct_solution(fields, X, probes)
    probe_out = []
    for x, gu, gs, gr in rec.probes:
        probe_out.append({
            "x": list(x), "grad_u": gu.tolist(), "grad_norm": _norm(gu),
            "singular_norm": _norm(gs), "regular_norm": _norm(gr),
        })
    aux = []
    for a in (1, 2, 3):
        ref = asy.aux_field_gradient(g, a, centre)
        aux.append(_norm(gradient_at(fields.v[1, a], centre) - ref) / _norm(ref))
    regular = regular_part_diagnostics(fields, X, g)

    F0 = fs.F0()
    rng = np.random.default_rng(F0_SEED)
    xi = rng.standard_normal((F0_SAMPLES, F0.shape[0]))
    quot = np.einsum("ki,ij,kj->k", xi, F0, xi) / np.einsum("ki,ki->k", xi, xi)
    Bm, Cm = fs.B, fs.C
    c_bt = float(np.abs(Cm - Bm.T).max() / max(np.abs(Bm).max(), 1e-300))
    crossings = gap_crossing_counts(m, g)
    t["probes"] = time.perf_counter() - t0

    record = {
        "epsilon": eps,
        "status": "ok",
        "mesh": {
            "n_vertices": int(m.n_vertices), "n_triangles": int(m.n_triangles),
            "min_angle": float(m.min_angle()), "gap_layers": int(gap_layer_count(m, g)),
            "min_gap_crossings": int(crossings.min()),
        },
        "factors": fs.to_json_dict(),
        "constants": X.to_json_dict(),
        "c_diff": X.X1.tolist(),
        "cramer_agreement": X.cramer_agreement(),
        "flux_residual": flux_residual(fs, X),
        "solve_residual": float(max(f.residual for f in [*fields.v.values(), fields.v0])),
        "symmetry_defect": fs.symmetry_defect(),
        "c_minus_bt": c_bt,
        "f0_min_rayleigh": float(quot.min()),
        "f0_all_positive": bool(np.all(quot > 0)),
        "probes": probe_out,
        "aux_rel_error": aux,
        "regular": regular,
    }
    return record, t


def _run_point_safe(cfg: RunConfig, eps: float) -> tuple[dict, dict]:
    try:
        return run_point(cfg, eps)
    except Exception as exc:  # recorded; the sweep continues
        log.warning("eps = %g failed: %s", eps, exc)
        return {"epsilon": eps, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}, {}


def run_sweep(cfg: RunConfig, with_verdicts: bool = True) -> SweepReport:
    t_start = time.perf_counter()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            futs = {e: ex.submit(_run_point_safe, cfg, e) for e in cfg.eps}
            results = {e: f.result() for e, f in futs.items()}
    else:
        results = {e: _run_point_safe(cfg, e) for e in cfg.eps}
    # merge keyed by eps in config order
    points, timings, failures = [], {}, []
    for e in cfg.eps:
        rec, t = results[e]
        points.append(rec)
        timings[repr(e)] = t
        if rec["status"] != "ok":
            failures.append({"epsilon": e, "error": rec["error"]})
    # the worker count changes nothing but wall time, so it lives with the timings
    report = SweepReport(cfg.model_dump(mode="json", exclude={"workers"}), points, failures)
    analyse(report, cfg)
    if with_verdicts:
        from .acceptance import evaluate

        report.verdicts = [v.to_json_dict() for v in evaluate(report, cfg)]
    timings["total"] = time.perf_counter() - t_start
    timings["workers"] = cfg.workers
    report.timings = timings
    for name in ("points", "failures", "rates", "starred", "analysis", "verdicts"):
        setattr(report, name, clean(getattr(report, name)))
    return report


# ---------------------------------------------------------------------------
# post-processing


def _factor_set(rec: dict) -> BlowupFactorSet:
    return BlowupFactorSet.from_json_dict(rec["factors"])


def _rate(pts) -> dict:
    return fit_rate_or_degenerate(pts).to_json_dict()


def analyse(report: SweepReport, cfg: RunConfig) -> None:
    ok = report.ok_points()
    g0 = cfg.geometry.build(cfg.eps[0])
    p = cfg.material.build()
    an: dict = {}
    rates: dict = {}
    if len(ok) < 3:
        report.rates = {k: degenerate_fit(len(ok), "too few points").to_json_dict()
                        for k in ("a11_11", "a11_22", "grad_center")}
        report.analysis = {"error": f"only {len(ok)} successful sweep points"}
        return

    eps = [r["epsilon"] for r in ok]
    fss = [_factor_set(r) for r in ok]
    rates["a11_11"] = _rate([(e, fs.a[0, 0, 0, 0]) for e, fs in zip(eps, fss)])
    rates["a11_22"] = _rate([(e, fs.a[0, 0, 1, 1]) for e, fs in zip(eps, fss)])
    rates["grad_center"] = _rate([(e, r["probes"][0]["grad_norm"]) for e, r in zip(eps, ok)])
    # free constants: symmetric zeros and phi = 0 come out as degenerate input
    cscale = max(max(abs(v) for v in r["c_diff"]) for r in ok)
    for a in range(3):
        pts = [(e, abs(r["c_diff"][a])) for e, r in zip(eps, ok)]
        if cscale == 0 or max(v for _, v in pts) <= 1e-4 * cscale:
            rates[f"c_diff_{a + 1}"] = degenerate_fit(len(pts)).to_json_dict()
        else:
            rates[f"c_diff_{a + 1}"] = _rate(pts)
    rates["target_energy_slope"] = -g0.gamma / (1 + g0.gamma)
    rates["target_grad_slope"] = -1.0 / (1 + g0.gamma)
    report.rates = rates

    a33 = asy.fit_limit(eps, [fs.a[0, 0, 2, 2] for fs in fss])
    an["a11_33_fit"] = {"value": a33.value, "exponent": a33.exponent, "residual": a33.residual,
                        "reliable": a33.reliable, "kind": a33.kind}

    starred: dict = {}
    if not cfg.extrapolate or len(ok) < 4:
        an["extrapolation"] = ("disabled" if not cfg.extrapolate
                               else f"refused: {len(ok)} successful points, 4 needed")
        report.starred, report.analysis = starred, an
        return

    samples = list(zip(eps, fss))
    try:
        star4 = asy.limit_matrices_extrapolate(samples[:4], g0.gamma, g0.tau, p)
        starred["largest4"] = star4.to_json_dict()
    except Exception as exc:
        star4 = None
        starred["largest4_error"] = str(exc)
    try:
        star_all = asy.limit_matrices_extrapolate(samples, g0.gamma, g0.tau, p)
        starred["all"] = star_all.to_json_dict()
    except Exception as exc:
        star_all = None
        starred["all_error"] = str(exc)
    report.starred = starred

    # cross-consistency of the leading-order constants
    if star4 is not None:
        preds = []
        for e, r in zip(eps, ok):
            try:
                ex = asy.expansion_d2(star4, g0, p, e)
                preds.append({"epsilon": e, "predicted": ex.c_diff.tolist(), "fem": r["c_diff"],
                              "det_ratios": ex.det_ratios.tolist(), "remainder": ex.remainder})
            except Exception as exc:
                preds.append({"epsilon": e, "error": str(exc)})
        an["expansion"] = preds

    # refined two-square prediction
    if isinstance(g0.profile, SquareProfile) and star4 is not None:
        r0 = cfg.geometry.r0
        ref = []
        try:
            for e, r in zip(eps, ok):
                rp = asy.example_refined(g0, p, star4, r0, e)
                ref.append({
                    "epsilon": e, "refined": rp.c_diff_refined.tolist(),
                    "leading": rp.c_diff_leading.tolist(), "fem": r["c_diff"],
                    "factor": rp.factor.tolist(),
                })
            an["refined"] = {
                "c_star": rp.c_star, "k_star": rp.k_star.tolist(), "g_star": rp.g_star.tolist(),
                "c_star_cutoffs": {repr(c): asy.square_gap_constant(g0, r0, c) for c in (1e-3, 1e-4)},
                "points": ref,
            }
            # empirical constant term of a11^{aa} for comparison with K*
            s = g0.gamma / (1 + g0.gamma)
            M = asy.gap_constant(g0.gamma, g0.tau)
            k_emp = []
            for a in (0, 1):
                L = lame_coeff(p, a + 1)
                off = [fs.a[0, 0, a, a] - L * M * e ** (-s) for e, fs in zip(eps, fss)]
                k_emp.append(float(off[-1]))
            an["refined"]["k_offset_smallest_eps"] = k_emp
        except Exception as exc:
            an["refined"] = {"error": str(exc)}

    # pointwise bounds calibrated at the largest eps
    if star4 is not None:
        try:
            lo0, up0 = asy.pointwise_bounds(star4, g0, p, eps[0])
            C = asy.calibrate_bound_constant(lo0, up0, ok[0]["probes"][0]["grad_norm"])
            bnd = []
            for e, r in zip(eps, ok):
                lo, up = asy.pointwise_bounds(star4, g0, p, e, C=C)
                meas = r["probes"][0]["grad_norm"]
                bnd.append({"epsilon": e, "lower": lo, "upper": up, "measured": meas,
                            "inside": bool(lo <= meas <= up)})
            an["bounds"] = {"C": C, "points": bnd}
        except Exception as exc:
            an["bounds"] = {"error": str(exc)}

    an["remainder_exponent"] = asy.remainder_exponent("eps_gamma_sigma", g0.gamma, g0.sigma)[0]
    report.analysis = an


def clean(obj):
    """JSON-safe copy: non-finite floats to None, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return clean(obj.item())
    return obj


def finite_check(obj, path: str = "") -> list[str]:
    """Paths of non-finite numbers in a JSON-like structure."""
    bad = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            bad += finite_check(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            bad += finite_check(v, f"{path}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        bad.append(path)
    return bad
