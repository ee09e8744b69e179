"""Report emission and sweep bookkeeping on a small coarse configuration."""

import csv
import json
import math

import pytest

from lamegap.harness.config import validate
from lamegap.harness.report import CSV_HEADER, emit_report, load_report, report_json, report_markdown
from lamegap.harness.sweep import finite_check, run_sweep

COARSE = {
    "eps": [0.04, 0.02, 0.01],
    "extrapolate": False,
    "mesh": {"n_layers": 4, "h_far": 0.6, "h_incl": 0.15, "order": 1},
}

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def coarse_cfg():
    return validate(COARSE)


@pytest.fixture(scope="module")
def coarse_report(coarse_cfg):
    return run_sweep(coarse_cfg, with_verdicts=True)


def test_points_in_config_order(coarse_report, coarse_cfg):
    assert [p["epsilon"] for p in coarse_report.points] == coarse_cfg.eps
    assert not coarse_report.failures
    assert set(coarse_report.timings) == {repr(e) for e in coarse_cfg.eps} | {"total", "workers"}


def test_json_round_trip(coarse_report, tmp_path):
    paths = emit_report(coarse_report, "json", tmp_path, "r")
    assert [p.name for p in paths] == ["r.json", "r.timings.json"]
    back = load_report(paths[0])
    assert report_json(back) == report_json(coarse_report)
    assert back.timings["total"] == pytest.approx(coarse_report.timings["total"])


def test_json_has_no_nonfinite_and_no_timings(coarse_report):
    text = report_json(coarse_report)
    assert "NaN" not in text and "Infinity" not in text
    assert "timings" not in json.loads(text)
    assert finite_check(json.loads(text)) == []


def test_csv_header_and_rows(coarse_report, tmp_path):
    (path,) = emit_report(coarse_report, "csv", tmp_path, "r")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER
    quantities = {r[1] for r in rows[1:]}
    assert "factors.a[1][1][1][1]" in quantities
    assert "probes[0].grad_norm" in quantities
    assert not any(q.startswith("factors.F") or q.startswith("factors.Y") for q in quantities)
    eps_seen = {float(r[0]) for r in rows[1:]}
    assert eps_seen == set(COARSE["eps"])
    for r in rows[1:]:
        if r[2]:
            assert math.isfinite(float(r[2]))


def test_markdown_lists_every_criterion(coarse_report, tmp_path):
    (path,) = emit_report(coarse_report, "markdown", tmp_path, "r")
    text = path.read_text()
    assert text == report_markdown(coarse_report)
    ids = [v["id"] for v in coarse_report.verdicts]
    assert sorted(ids) == list(range(1, 11))
    for i in ids:
        assert sum(line.startswith(f"| {i} |") for line in text.splitlines()) == 1


def test_rates_present(coarse_report):
    r = coarse_report.rates
    for key in ("a11_11", "a11_22", "grad_center"):
        assert r[key]["status"] == "ok" and r[key]["n"] == 3
    assert r["target_energy_slope"] == pytest.approx(-1 / 3)
    assert coarse_report.analysis["extrapolation"] == "disabled"


def test_unknown_format_and_unwritable_dir(coarse_report, tmp_path):
    with pytest.raises(ValueError, match="unknown report format"):
        emit_report(coarse_report, "xml", tmp_path)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="cannot write report"):
        emit_report(coarse_report, "json", blocker / "sub")


def test_rerun_is_byte_identical_across_worker_counts(coarse_report):
    again = run_sweep(validate({**COARSE, "workers": 3}), with_verdicts=True)
    assert report_json(again) == report_json(coarse_report)


def test_zero_boundary_data():
    rep = run_sweep(validate({**COARSE, "phi": "zero", "workers": 3}), with_verdicts=False)
    for p in rep.points:
        assert max(abs(c) for c in p["c_diff"]) < 1e-12
        assert p["probes"][0]["grad_norm"] < 1e-12
    for a in (1, 2, 3):
        assert rep.rates[f"c_diff_{a}"]["status"] == "degenerate input"
    assert rep.rates["grad_center"]["status"] == "degenerate input"
    # the energy factors depend only on the geometry
    assert rep.rates["a11_11"]["status"] == "ok"
