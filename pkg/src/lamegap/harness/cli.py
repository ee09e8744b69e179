"""Command line entry point: ``lamegap <subcommand> [--config FILE] [flags]``.

Flags mirror the config keys and override values read from ``--config``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .. import asymptotics as asy
from ..decomposition import PHI_PRESETS, factor_entries, solve_basis_fields, solve_free_constants
from ..elasticity import named_constants
from ..geometry import SquareProfile
from ..mesh import build_mesh, write_mesh
from .config import ConfigError, RunConfig, parse_config, validate

log = logging.getLogger("lamegap")

# flag dest -> config path
_OVERRIDES = {
    "preset": ("geometry", "preset"), "gamma": ("geometry", "gamma"),
    "r1": ("geometry", "r1"), "r2": ("geometry", "r2"), "r0": ("geometry", "r0"),
    "tau": ("geometry", "tau"), "sigma": ("geometry", "sigma"), "R": ("geometry", "R"),
    "lam": ("material", "lam"), "mu": ("material", "mu"),
    "phi": ("phi",), "eps": ("eps",), "workers": ("workers",),
    "n_layers": ("mesh", "n_layers"), "min_angle": ("mesh", "min_angle"),
    "h_far": ("mesh", "h_far"), "h_incl": ("mesh", "h_incl"), "order": ("mesh", "order"),
    "out_dir": ("output", "directory"), "stem": ("output", "stem"), "formats": ("output", "formats"),
}


def _add_config_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", type=Path, help="YAML run config")
    g = ap.add_argument_group("geometry")
    g.add_argument("--preset", choices=["square", "power"])
    g.add_argument("--gamma", type=float)
    g.add_argument("--r1", type=float)
    g.add_argument("--r2", type=float)
    g.add_argument("--r0", type=float, help="neck radius of the square preset")
    g.add_argument("--tau", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--R", type=float, help="neck radius of the power preset")
    m = ap.add_argument_group("material")
    m.add_argument("--lam", type=float)
    m.add_argument("--mu", type=float)
    r = ap.add_argument_group("run")
    r.add_argument("--phi", choices=sorted(PHI_PRESETS))
    r.add_argument("--eps", type=float, nargs="+", help="gap widths, strictly decreasing")
    r.add_argument("--workers", type=int)
    r.add_argument("--no-extrapolate", action="store_true")
    r.add_argument("--probe", type=float, nargs=2, action="append", metavar=("X1", "S"),
                   help="extra probe at x1, fraction S across the gap (repeatable)")
    h = ap.add_argument_group("mesh")
    h.add_argument("--n-layers", type=int)
    h.add_argument("--min-angle", type=float)
    h.add_argument("--h-far", type=float)
    h.add_argument("--h-incl", type=float)
    h.add_argument("--order", type=int, choices=[1, 2])
    o = ap.add_argument_group("output")
    o.add_argument("--out-dir")
    o.add_argument("--stem")
    o.add_argument("--formats", nargs="+", choices=["json", "csv", "markdown"])


def build_config(args: argparse.Namespace) -> RunConfig:
    base = parse_config(args.config).model_dump() if args.config else RunConfig().model_dump()
    for dest, path in _OVERRIDES.items():
        val = getattr(args, dest, None)
        if val is None:
            continue
        node = base
        for k in path[:-1]:
            node = node[k]
        node[path[-1]] = val
    if getattr(args, "no_extrapolate", False):
        base["extrapolate"] = False
    if getattr(args, "probe", None):
        base["probes"] = [tuple(p) for p in args.probe]
    return validate(base)


def _write_or_print(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        log.info("wrote %s", out)


def cmd_mesh(args, cfg: RunConfig) -> int:
    eps = args.at if args.at is not None else cfg.eps[0]
    g = cfg.geometry.build(eps)
    m = build_mesh(g, cfg.mesh.build())
    out = args.out or Path(cfg.output.directory) / f"mesh_eps{eps:g}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_mesh(m, out)
    print(f"eps={eps:g} vertices={m.n_vertices} triangles={m.n_triangles} "
          f"min_angle={m.min_angle():.2f} -> {out}")
    return 0


def _solve(cfg: RunConfig, eps: float):
    g = cfg.geometry.build(eps)
    p = cfg.material.build()
    m = build_mesh(g, cfg.mesh.build())
    fields = solve_basis_fields(m, g, p, PHI_PRESETS[cfg.phi], order=cfg.mesh.order)
    fs = factor_entries(fields, sym_tol=cfg.tolerances.symmetry_rel)
    return fs, solve_free_constants(fs.F, fs.Y)


def cmd_factors(args, cfg: RunConfig) -> int:
    eps = args.at if args.at is not None else cfg.eps[0]
    fs, _ = _solve(cfg, eps)
    _write_or_print(json.dumps(fs.to_json_dict(), sort_keys=True, indent=1) + "\n", args.out)
    return 0


def cmd_solve(args, cfg: RunConfig) -> int:
    from .sweep import clean, run_point

    eps = args.at if args.at is not None else cfg.eps[0]
    rec, t = run_point(cfg, eps)
    _write_or_print(json.dumps(clean(rec), sort_keys=True, indent=1) + "\n", args.out)
    log.info("timings %s", {k: round(v, 3) for k, v in t.items()})
    return 0


def cmd_asym(args, cfg: RunConfig) -> int:
    g = cfg.geometry.build(cfg.eps[0])
    p = cfg.material.build()
    gam = g.gamma
    nc = named_constants(gam, g.tau, p)
    out: dict = {
        "gamma": gam, "tau": g.tau, "sigma": g.sigma,
        "M": nc.m_gamma_tau,
        "gamma_product": nc.gamma_gamma,
        "L": list(nc.l_d_alpha),
        "energy_exponent": -gam / (1 + gam),
        "gradient_exponent": -1 / (1 + gam),
        "neck_integral": {},
        "remainder_exponent": {
            "eps_gamma_sigma": asy.remainder_exponent("eps_gamma_sigma", gam, g.sigma)[0],
            "tilde_eps_gamma_sigma": asy.remainder_exponent("tilde_eps_gamma_sigma", gam, g.sigma)[0],
            **{f"bar_eps_gamma_d{d}": asy.remainder_exponent("bar_eps_gamma_d", gam, None, d)[0] for d in (3, 4, 5, 6)},
        },
    }
    for e in cfg.eps:
        val = asy.neck_integral(gam, g.tau, g.neck_radius, e)
        out["neck_integral"][repr(e)] = {"value": val, "ratio": val / (out["M"] * e ** (-gam / (1 + gam)))}
    if isinstance(g.profile, SquareProfile):
        r0 = cfg.geometry.r0
        rp = asy.example_refined(g, p, None, r0, cfg.eps[0])
        out["square"] = {"C_star": rp.c_star, "K_star": rp.k_star.tolist(), "G_star": rp.g_star.tolist()}
    _write_or_print(json.dumps(out, sort_keys=True, indent=1) + "\n", args.out)
    return 0


def _emit(report, cfg: RunConfig) -> None:
    from .report import emit_report

    for fmt in cfg.output.formats:
        for path in emit_report(report, fmt, cfg.output.directory, cfg.output.stem):
            log.info("wrote %s", path)


def cmd_sweep(args, cfg: RunConfig) -> int:
    from .sweep import run_sweep

    report = run_sweep(cfg, with_verdicts=True)
    _emit(report, cfg)
    for f in report.failures:
        print(f"eps={f['epsilon']:g} FAILED: {f['error']}")
    r = report.rates.get("a11_11", {})
    if r.get("status") == "ok":
        print(f"slope a11^11 = {r['slope']:.4f} +- {r['confidence']:.4f}")
    return 0


def cmd_verify(args, cfg: RunConfig) -> int:
    from .acceptance import Verdict
    from .sweep import run_sweep

    report = run_sweep(cfg, with_verdicts=True)
    _emit(report, cfg)
    enabled = set(args.only) if args.only else None
    all_ok = True
    for v in report.verdicts:
        if enabled is not None and v["id"] not in enabled:
            continue
        print(Verdict(**v).line())
        all_ok &= bool(v["passed"])
    return 0 if all_ok else 1


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lamegap", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    specs = {
        "mesh": (cmd_mesh, "write the mesh of one gap configuration"),
        "solve": (cmd_solve, "full decomposition at one eps"),
        "factors": (cmd_factors, "print the blow-up factor set at one eps"),
        "sweep": (cmd_sweep, "eps sweep, extrapolation, rates and reports"),
        "asym": (cmd_asym, "closed-form evaluations only"),
        "verify": (cmd_verify, "sweep plus acceptance verdicts; exit 1 on any failure"),
    }
    for name, (fn, help_) in specs.items():
        sp = sub.add_parser(name, help=help_)
        _add_config_flags(sp)
        if name in ("mesh", "solve", "factors"):
            sp.add_argument("--at", type=float, help="gap width (default: first eps of the config)")
        if name in ("mesh", "solve", "factors", "asym"):
            sp.add_argument("--out", type=Path, help="output file (default: stdout, or results dir for mesh)")
        if name == "verify":
            sp.add_argument("--only", type=int, nargs="+", metavar="ID", help="criteria that gate the exit code")
        sp.set_defaults(func=fn)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
