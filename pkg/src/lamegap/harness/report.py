"""Report emission.

Files written for a stem ``S``:

* ``S.json``: the full record without wall-clock data, so reruns of one
  config give byte-identical files. Non-finite numbers become ``null``.
* ``S.timings.json``: wall-clock seconds per eps and stage.
* ``S.csv``: header ``epsilon,quantity,value``, one row per scalar of each
  per-eps record.
* ``S.md``: human summary with the acceptance table.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .sweep import SweepReport, clean

CSV_HEADER = ("epsilon", "quantity", "value")
FORMATS = ("json", "csv", "markdown")


def report_json(r: SweepReport) -> str:
    return json.dumps(clean(r.to_json_dict(with_timings=False)), sort_keys=True, indent=1) + "\n"


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    elif isinstance(obj, bool):
        out.append((prefix, int(obj)))
    elif isinstance(obj, (int, float)) or obj is None:
        out.append((prefix, obj))


def csv_rows(r: SweepReport) -> list[tuple]:
    rows = []
    for rec in r.points:
        if rec["status"] != "ok":
            continue
        flat: list = []
        body = {k: v for k, v in rec.items() if k not in ("epsilon", "status")}
        # F and Y duplicate the a/b entries
        body["factors"] = {k: v for k, v in body["factors"].items() if k not in ("F", "Y", "epsilon")}
        _flatten("", clean(body), flat)
        rows += [(rec["epsilon"], q, "" if v is None else v) for q, v in flat]
    return rows


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, dict):
        return ", ".join(f"{k}={_fmt(v)}" for k, v in x.items())
    if isinstance(x, list):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def report_markdown(r: SweepReport) -> str:
    cfg = r.config
    g = cfg["geometry"]
    lines = [
        "# Sweep report",
        "",
        f"Geometry `{g['preset']}` with gamma = {g['gamma']}, phi = `{cfg['phi']}`, "
        f"lambda = {cfg['material']['lam']}, mu = {cfg['material']['mu']}, P{cfg['mesh']['order']} elements.",
        "",
        "## Sweep points",
        "",
        "| eps | status | vertices | a11^11 | a11^22 | C1-C2 | abs grad u at centre |",
        "|---|---|---|---|---|---|---|",
    ]
    for p in r.points:
        if p["status"] != "ok":
            lines.append(f"| {p['epsilon']:g} | failed: {p['error']} | | | | | |")
            continue
        f = p["factors"]
        lines.append(
            f"| {p['epsilon']:g} | ok | {p['mesh']['n_vertices']} | {f['a[1][1][1][1]']:.6g} | "
            f"{f['a[1][1][2][2]']:.6g} | {_fmt(p['c_diff'])} | {p['probes'][0]['grad_norm']:.6g} |"
        )
    lines += ["", "## Fitted rates", "", "| quantity | slope | 95% half-width | status |", "|---|---|---|---|"]
    for k, v in sorted(r.rates.items()):
        if isinstance(v, dict):
            lines.append(f"| {k} | {_fmt(v['slope'])} | {_fmt(v['confidence'])} | {v['status']} |")
    lines += ["", "## Acceptance", "", "| # | criterion | verdict | measured | target | tolerance |",
              "|---|---|---|---|---|---|"]
    for v in r.verdicts:
        verdict = "PASS" if v["passed"] else "FAIL"
        lines.append(f"| {v['id']} | {v['name']} | {verdict} | {_fmt(v['measured'])} | "
                     f"{_fmt(v['target'])} | {_fmt(v['tolerance'])} |")
    if r.failures:
        lines += ["", "## Failed points", ""] + [f"- eps = {f['epsilon']:g}: {f['error']}" for f in r.failures]
    return "\n".join(lines) + "\n"


def emit_report(r: SweepReport, fmt: str, directory: str | Path, stem: str = "report") -> list[Path]:
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            main = d / f"{stem}.json"
            main.write_text(report_json(r))
            tim = d / f"{stem}.timings.json"
            tim.write_text(json.dumps(clean(r.timings), sort_keys=True, indent=1) + "\n")
            return [main, tim]
        if fmt == "csv":
            path = d / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(CSV_HEADER)
                w.writerows(csv_rows(r))
            return [path]
        path = d / f"{stem}.md"
        path.write_text(report_markdown(r))
        return [path]
    except OSError as exc:
        raise OSError(f"cannot write report to {d}: {exc}") from exc


def load_report(path: str | Path) -> SweepReport:
    p = Path(path)
    r = SweepReport.from_json_dict(json.loads(p.read_text()))
    tim = p.with_name(p.stem + ".timings.json")
    if tim.is_file():
        r.timings = json.loads(tim.read_text())
    return r
