import io
import json
import math
from pathlib import Path

import pytest
from conftest import CONFIGS_DIR, make_problem

from wkbpole.errors import ConfigError, ParseError, ReportIoError, ValidationError
from wkbpole.harness import SUITES, emit, load_config, parse_config, run
from wkbpole.harness.config import default_samples
from wkbpole.harness.emit import CSV_COLUMNS, report_document, report_frame
from wkbpole.harness.suites import Measurement, Metric, MetricKind, Suite, SuiteContext
from wkbpole.potential import Strip

BASE = """\
potential: "1/z + 0.3*z"
strip: 0.35
h_list: [0.02, 0.01]
suites: [stirling]
"""


def _config(extra: str = "", base: str = BASE):
    return parse_config(base + extra)


def _fake_suite(monkeypatch: pytest.MonkeyPatch, name: str, kind: MetricKind, value, threshold: float | None = 0.015) -> None:
    def measure(ctx: SuiteContext) -> dict[str, Measurement]:
        return {"deviation": Measurement(value(ctx.h))}

    monkeypatch.setitem(SUITES, name, Suite(name, "test suite", (Metric("deviation", kind, threshold),), measure))


def test_builtin_suites_are_registered() -> None:
    assert set(SUITES) == {
        "wkb",
        "uniform_gamma",
        "near_rplus",
        "basis_wronskian",
        "pole_structure",
        "branch_identities",
        "stirling",
        "continuation_principle",
    }


def test_g0_identity_thresholds() -> None:
    suite = SUITES["branch_identities"]

    assert suite.metric("g0_tilde").threshold == 1e-9
    assert suite.metric("g0_contour").threshold == 1e-8
    assert [m.name for m in SUITES["continuation_principle"].metrics] == ["max_rel_error", "max_im_momentum"]


def test_parse_config_defaults() -> None:
    config = _config()

    assert config.h_list == (0.02, 0.01)
    assert config.z0 == pytest.approx(-0.245)
    assert config.z1 == pytest.approx(0.245)
    assert config.output_format == "csv"
    assert config.suites == ("stirling",)
    assert len(config.sample_points) == 50
    assert config.regularity is not None and config.regularity.regular
    assert config.summary()["sample_points"] == 50


def test_default_samples_avoid_the_pole() -> None:
    strip = Strip(0.35, 0.35)

    samples = default_samples(strip)

    assert len(set(samples)) == 50
    assert all(strip.contains(z, closed=False) and z != 0 for z in samples)


def test_load_config_reads_the_shipped_files() -> None:
    config = load_config(CONFIGS_DIR / "smoke.yaml")

    assert config.suites == ("stirling", "branch_identities")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(CONFIGS_DIR / "missing.yaml")


def test_explicit_sample_sets_and_anchors() -> None:
    config = _config("anchors: {z0: -0.2, z1: 0.1}\nsample_sets:\n  a: ['0.1+0.1j', -0.1]\n  b: [-0.1, 0.2j]\n")

    assert (config.z0, config.z1) == (-0.2, 0.1)
    assert config.sample_points == (0.1 + 0.1j, -0.1, 0.2j)


def test_yaml_errors_carry_a_location() -> None:
    with pytest.raises(ParseError) as excinfo:
        parse_config("potential: [1, 2\nh_list: [0.01]\n")

    assert excinfo.value.line is not None
    assert "line" in str(excinfo.value)

    with pytest.raises(ParseError) as excinfo:
        parse_config("- just\n- a list\n")
    assert excinfo.value.line == 1


@pytest.mark.parametrize(
    ("extra", "invariant"),
    [
        ("thresholds: {stirling: {error_r10: fast}}\n", "thresholds"),
        ("thresholds: {stirling: {nope: 1.0}}\n", "thresholds"),
        ("thresholds: {wat: {error_r10: 1.0}}\n", "thresholds"),
        ("output: {format: xml}\n", "output_format"),
        ("colour: blue\n", "keys"),
        ("numerics: {pole_gard: 1.0}\n", "numerics"),
        ("sample_sets: {a: [0.5]}\n", "sample_points_in_strip"),
        ("sample_sets: {a: [0]}\n", "sample_points_in_strip"),
        ("anchors: {z0: 0.1}\n", "anchors"),
        ("energy: nonsense\n", "energy"),
    ],
)
def test_validation_errors_name_the_broken_rule(extra: str, invariant: str) -> None:
    with pytest.raises(ValidationError) as excinfo:
        _config(extra)

    assert excinfo.value.invariant == invariant


@pytest.mark.parametrize(
    ("base", "invariant"),
    [
        ('potential: "1/z"\nh_list: [0.01, 0.02]\n', "h_list_decreasing"),
        ('potential: "1/z"\nh_list: [0.05]\n', "h_bound"),
        ('potential: "1/z"\nh_list: []\n', "h_list"),
        ('potential: "1/z"\nh_list: [0.01]\nsuites: [wkb, magic]\n', "suites"),
        ('potential: "0.3*z"\nh_list: [0.01]\n', "potential"),
        ("h_list: [0.01]\n", "potential"),
        ('potential: "1/z + 0.3*z"\nstrip: {d_x: 0.6, d_y: 0.35}\nh_list: [0.05]\n', "regular_strip"),
    ],
)
def test_structural_validation(base: str, invariant: str) -> None:
    with pytest.raises(ValidationError) as excinfo:
        parse_config(base)

    assert excinfo.value.invariant == invariant


def test_threshold_overrides() -> None:
    config = _config("thresholds: {stirling: {error_r10: 0.5}}\n")

    assert config.threshold("stirling", "error_r10") == 0.5
    assert config.threshold("stirling", "radius_ratio") == 1.0


def test_run_stirling_suite() -> None:
    report = run(_config())

    assert report.passed
    assert [(r.suite, r.h) for r in report.results] == [("stirling", 0.02), ("stirling", 0.01)]
    assert report.checks == []
    result = report.result("stirling", 0.01)
    assert result.metric("error_r10").value < 0.01
    assert result.metric("max_error").passed


def test_parallel_run_keeps_configuration_order() -> None:
    config = _config("", base=BASE.replace("[0.02, 0.01]", "[0.03, 0.02, 0.01]"))

    report = run(config, jobs=2)

    assert [r.h for r in report.results] == [0.03, 0.02, 0.01]
    assert report.passed


def test_failing_suite_becomes_an_error_record(monkeypatch: pytest.MonkeyPatch) -> None:
    def explode(h: float) -> float:
        raise RuntimeError("boom")

    _fake_suite(monkeypatch, "broken", MetricKind.EXACT, explode)
    report = run(_config(base=BASE.replace("[stirling]", "[broken, stirling]")))

    broken = report.result("broken", 0.01)
    assert broken.error == "RuntimeError: boom"
    assert not report.passed
    assert report.result("stirling", 0.01).passed

    frame = report_frame(report)
    errors = frame[frame["metric"] == "error"]
    assert list(errors["suite"]) == ["broken", "broken"]
    assert not errors["passed"].any()
    assert emit(report, "csv", io.StringIO()) == 1


def test_convergent_metric_must_decrease_along_the_sweep(monkeypatch: pytest.MonkeyPatch) -> None:
    _fake_suite(monkeypatch, "converging", MetricKind.CONVERGENT, lambda h: h)
    _fake_suite(monkeypatch, "stalled", MetricKind.CONVERGENT, lambda h: 0.01)
    report = run(_config(base=BASE.replace("[stirling]", "[converging, stalled]")))

    # the coarse step is above the threshold but only the finest one is held to it
    assert report.result("converging", 0.02).passed
    checks = {check.suite: check for check in report.checks}
    assert checks["converging"].passed
    assert checks["converging"].values == (0.02, 0.01)
    assert not checks["stalled"].passed
    assert all(result.passed for result in report.results)
    assert not report.passed

    frame = report_frame(report)
    sweep = frame[frame["metric"] == "deviation:decreasing"].set_index("suite")
    assert bool(sweep.loc["converging", "passed"])
    assert not bool(sweep.loc["stalled", "passed"])
    assert sweep.loc["converging", "value"] == 0.01
    assert sweep["h"].isna().all()


def test_exact_metric_applies_at_every_step(monkeypatch: pytest.MonkeyPatch) -> None:
    _fake_suite(monkeypatch, "exact", MetricKind.EXACT, lambda h: h)
    report = run(_config(base=BASE.replace("[stirling]", "[exact]")))

    assert not report.result("exact", 0.02).passed
    assert report.result("exact", 0.01).passed


def test_json_document(monkeypatch: pytest.MonkeyPatch) -> None:
    _fake_suite(monkeypatch, "unknown_value", MetricKind.INFO, lambda h: math.nan, threshold=None)
    report = run(_config(base=BASE.replace("[stirling]", "[unknown_value, stirling]")))
    out = io.StringIO()

    assert emit(report, "json", out) == 0
    document = json.loads(out.getvalue())
    assert document["schema_version"] == "1"
    assert document["passed"] is True
    assert document["config"]["potential"] == report.config["potential"]
    first = document["results"][0]
    assert first["suite"] == "unknown_value"
    assert first["metrics"]["deviation"]["value"] is None
    assert first["metrics"]["deviation"]["kind"] == "info"
    assert "stirling@0.01" in document["timing"]["tasks"]
    assert report_document(report)["results"][0]["metrics"]["deviation"]["value"] is None


def test_emit_csv_to_a_file(tmp_path: Path) -> None:
    report = run(_config())
    destination = tmp_path / "reports" / "smoke.csv"

    assert emit(report, "csv", destination) == 0
    lines = destination.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 2 * len(SUITES["stirling"].metrics)


def test_emit_reports_io_errors(tmp_path: Path) -> None:
    report = run(_config())

    with pytest.raises(ReportIoError):
        emit(report, "csv", tmp_path)
    with pytest.raises(ValueError, match="unknown format"):
        emit(report, "xml", io.StringIO())


def test_csv_rows_carry_means_worst_points_and_runtimes(monkeypatch: pytest.MonkeyPatch) -> None:
    def measure(ctx: SuiteContext) -> dict[str, Measurement]:
        return {"deviation": Measurement(0.004, mean=0.002, worst_point=0.1 - 0.2j)}

    monkeypatch.setitem(SUITES, "located", Suite("located", "test suite", (Metric("deviation", MetricKind.EXACT, 0.01),), measure))
    report = run(_config(base=BASE.replace("[stirling]", "[located]")))

    frame = report_frame(report)
    row = frame[(frame["h"] == 0.01) & (frame["metric"] == "deviation")].iloc[0]
    assert row["mean"] == 0.002
    assert (row["worst_re"], row["worst_im"]) == (0.1, -0.2)
    assert row["runtime"] >= 0.0
    assert row["runtime"] == report.result("located", 0.01).runtime


def test_json_report_is_reproducible_apart_from_timing() -> None:
    config = _config()
    first, second = io.StringIO(), io.StringIO()

    emit(run(config), "json", first)
    emit(run(_config()), "json", second)

    documents = [json.loads(out.getvalue()) for out in (first, second)]
    for document in documents:
        document.pop("timing")
    assert json.dumps(documents[0], sort_keys=True) == json.dumps(documents[1], sort_keys=True)


def test_suite_results_do_not_depend_on_the_rest_of_the_sweep() -> None:
    alone = run(_config(base=BASE.replace("[stirling]", "[branch_identities]")))
    together = run(_config(base=BASE.replace("[stirling]", "[stirling, branch_identities]")))

    for h in (0.02, 0.01):
        expected = {m.name: m.value for m in alone.result("branch_identities", h).metrics}
        actual = {m.name: m.value for m in together.result("branch_identities", h).metrics}
        assert actual.keys() == expected.keys()
        for name, value in expected.items():
            assert actual[name] == pytest.approx(value, rel=1e-12, abs=1e-300)


def test_basis_coefficients_are_held_to_an_exact_threshold() -> None:
    suite = SUITES["basis_wronskian"]
    ctx = SuiteContext(make_problem(), 0.02, -0.245 + 0j, 0.245 + 0j, ())

    measured = suite.run(ctx)

    assert suite.metric("coefficient_spread").kind is MetricKind.EXACT
    assert suite.metric("coefficient_spread").threshold == 1e-6
    assert measured["coefficient_spread"].value < 1e-6
    # phi is proportional to f-, so only b is resolved everywhere
    assert 0.0 < measured["unresolved_fraction"].value <= 0.5


def test_continuation_segment_runs_at_height_one_tenth() -> None:
    measured = SUITES["continuation_principle"].run(SuiteContext(make_problem(), 0.02, -0.245 + 0j, 0.245 + 0j, ()))

    momentum = measured["max_im_momentum"]
    assert momentum.value < 0.0
    assert momentum.worst_point.imag == pytest.approx(0.1)
    assert abs(momentum.worst_point.real) <= 0.25 + 1e-12
    assert math.isfinite(measured["max_rel_error"].value)
