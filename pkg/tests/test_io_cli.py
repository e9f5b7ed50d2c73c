import csv
import json

import numpy as np
import pytest

import rakeuq.io as io
from rakeuq import (
    FieldDistribution,
    HarmonicSet,
    SchemaError,
    area_average,
    build_design_matrix,
    compute_metrics,
    design_matrix,
    fit,
    station_predictions,
)
from rakeuq.cli import main

from conftest import (
    BETA,
    ENGINE_THETA,
    R_INNER,
    R_OUTER,
    SCAN_THETA,
    SIGMA_B,
    STATIONS,
    coefficient_truth,
)


def campaign_doc(theta=ENGINE_THETA, noise=None):
    data = design_matrix(np.asarray(theta), (1, 4)) @ coefficient_truth()
    doc = {
        "geometry": {
            "theta_deg": list(map(float, theta)),
            "r_stations": STATIONS.tolist(),
            "r_inner": R_INNER,
            "r_outer": R_OUTER,
        },
        "measurements": data.tolist(),
        "uncertainty": {"iid": {"sigma_b": SIGMA_B}},
        "units": "K",
    }
    if noise == "correlated":
        rho = np.full((42, 42), 0.95)
        np.fill_diagonal(rho, 1.0)
        doc["uncertainty"] = {
            "correlation": {"sigma": [SIGMA_B] * 42, "rho": rho.tolist()}
        }
    return doc


@pytest.fixture
def campaign_path(tmp_path):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(campaign_doc()))
    return str(path)


def test_campaign_round_trip(campaign_path):
    campaign = io.load_campaign(campaign_path)
    assert campaign.geometry.n_rakes == 6
    assert campaign.geometry.n_stations == 7
    assert campaign.meas.iid_sigma == pytest.approx(SIGMA_B)
    assert campaign.units == "K"


def test_missing_uncertainty_block_names_field(tmp_path):
    doc = campaign_doc()
    del doc["uncertainty"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError) as err:
        io.load_campaign(str(path))
    assert "uncertainty" in str(err.value)


def test_two_uncertainty_blocks_rejected(tmp_path):
    doc = campaign_doc()
    doc["uncertainty"]["diagonal"] = {"sigma": [0.5] * 42}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        io.load_campaign(str(path))


def test_negative_sigma_named(tmp_path):
    doc = campaign_doc()
    doc["uncertainty"]["iid"]["sigma_b"] = -0.1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError) as err:
        io.load_campaign(str(path))
    assert "sigma_b" in str(err.value)


def test_ragged_measurements_rejected(tmp_path):
    doc = campaign_doc()
    doc["measurements"][2] = doc["measurements"][2][:-1]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        io.load_campaign(str(path))


def test_measurement_rake_count_must_match_geometry(tmp_path):
    doc = campaign_doc()
    doc["measurements"] = doc["measurements"][:-1]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        io.load_campaign(str(path))


def test_non_psd_correlation_rejected(tmp_path):
    doc = campaign_doc()
    rho = np.eye(42)
    rho[0, 1] = rho[1, 0] = 0.9
    rho[0, 2] = rho[2, 0] = 0.9
    rho[1, 2] = rho[2, 1] = -0.9
    doc["uncertainty"] = {"correlation": {"sigma": [0.5] * 42, "rho": rho.tolist()}}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        io.load_campaign(str(path))


def test_fit_report_matches_library(campaign_path, tmp_path):
    out = tmp_path / "report.json"
    code = main(
        ["fit", campaign_path, "--harmonics", "1,4", "--beta", str(BETA),
         "--output", str(out), "--n-theta", "72", "--n-r", "13"]
    )
    assert code == 0
    report = json.loads(out.read_text())

    campaign = io.load_campaign(campaign_path)
    model = build_design_matrix(
        campaign.geometry, HarmonicSet((1, 4)), beta=BETA
    )
    coeffs = fit(model, campaign.measurements)
    field = FieldDistribution.from_measurements(model, campaign.meas)
    metrics = compute_metrics(model, coeffs, campaign.meas, field)
    area = area_average(model, field)

    assert report["fit"]["omega"] == [1, 4]
    assert report["fit"]["lambda"] == 0.0
    assert report["metrics"]["eps_p_sq"] == metrics.eps_p_sq
    assert report["metrics"]["mean_eps_p_sq"] == metrics.mean_eps
    assert report["metrics"]["g"] == 7
    assert report["metrics"]["metric_divisor"] == 41
    assert report["metrics"]["moment_divisor"] == 42
    assert report["area_average"]["mean"] == area.mean
    assert report["area_average"]["two_sigma"] == area.two_sigma
    assert report["legacy"]["sampling_std"] > 0.0
    assert report["predictive"]["max_two_sigma"] > 0.0
    assert report["units"] == "K"

    # written floats are repr round-trips: reloading changes nothing
    assert json.loads(json.dumps(report)) == report


def test_fit_writes_coefficient_file(campaign_path, tmp_path):
    out = tmp_path / "report.json"
    code = main(
        ["fit", campaign_path, "--harmonics", "1,4", "--beta", str(BETA),
         "--output", str(out)]
    )
    assert code == 0
    coeff_doc = json.loads((tmp_path / "report.json.coefficients.json").read_text())
    campaign = io.load_campaign(campaign_path)
    model = build_design_matrix(
        campaign.geometry, HarmonicSet((1, 4)), beta=BETA
    )
    coeffs = fit(model, campaign.measurements)
    assert np.array(coeff_doc["X"]).shape == (5, 7)
    np.testing.assert_array_equal(np.array(coeff_doc["X"]), coeffs.X)


def test_grid_csv_layout_and_integration(campaign_path, tmp_path):
    out = tmp_path / "grid.csv"
    code = main(
        ["grid", campaign_path, "--harmonics", "1,4", "--beta", str(BETA),
         "--n-r", "400", "--n-theta", "360", "--output", str(out)]
    )
    assert code == 0
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["r_frac", "theta_deg", "mean", "variance"]
    body = rows[1:]
    assert len(body) == 400 * 360
    # theta varies fastest
    assert body[0][0] == body[1][0]
    assert body[0][1] != body[1][1]

    # cell-centred grid: area-weighted average of the mean column should
    # reproduce the analytic area average of the fitted field
    r = np.array([float(row[0]) for row in body])
    mean = np.array([float(row[2]) for row in body])
    radius = R_INNER + (R_OUTER - R_INNER) * r
    want = (mean * radius).sum() / radius.sum()
    campaign = io.load_campaign(campaign_path)
    model = build_design_matrix(
        campaign.geometry, HarmonicSet((1, 4)), beta=BETA
    )
    coeffs = fit(model, campaign.measurements)
    field = FieldDistribution.from_measurements(model, campaign.meas)
    area = area_average(model, field)
    assert want == pytest.approx(area.mean, abs=1e-4 * abs(area.mean))


def test_scan_cli(tmp_path, capsys):
    doc = campaign_doc(theta=SCAN_THETA)
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "scan.csv"
    code = main(
        ["scan", str(path), "--beta", str(BETA), "--output", str(out)]
    )
    assert code == 0
    assert "omega=(1, 4)" in capsys.readouterr().out
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["omega1", "omega2", "lambda", "mean_eps"]
    assert len(rows) == 46
    assert [rows[1][0], rows[1][1]] == ["1", "4"]


def test_scan_needs_iid(tmp_path):
    doc = campaign_doc(noise="correlated")
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(doc))
    code = main(["scan", str(path), "--output", str(tmp_path / "scan.csv")])
    assert code == 3


def test_rake_mc_cli_zero_scatter_matches_fit(campaign_path, tmp_path):
    out = tmp_path / "rake.csv"
    code = main(
        ["rake-mc", campaign_path, "--harmonics", "1,4", "--beta", str(BETA),
         "--sigma-theta", "0", "--draws", "256", "--n-prediction", "45",
         "--output", str(out)]
    )
    assert code == 0
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))[1:]
    assert len(rows) == 45 * 7
    campaign = io.load_campaign(campaign_path)
    model = build_design_matrix(
        campaign.geometry, HarmonicSet((1, 4)), beta=BETA
    )
    coeffs = fit(model, campaign.measurements)
    theta_pred = np.arange(45) * 8.0
    det = station_predictions(coeffs.X, theta_pred, (1, 4))
    got = np.array([float(r[2]) for r in rows]).reshape(45, 7)
    np.testing.assert_array_equal(got, det)
    var = np.array([float(r[3]) for r in rows])
    assert (var == 0.0).all()


def test_fit_exit_code_on_missing_file(tmp_path):
    code = main(["fit", str(tmp_path / "nope.json"), "--harmonics", "1,4"])
    assert code == 2


def test_fit_exit_code_on_schema_error(tmp_path):
    doc = campaign_doc()
    del doc["uncertainty"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code = main(["fit", str(path), "--harmonics", "1,4"])
    assert code == 2


def test_fit_exit_code_on_exhausted_ladder(campaign_path):
    code = main(["fit", campaign_path, "--harmonics", "1,4", "--beta", "1e-6"])
    assert code == 4


def test_efficiency_cli_default_state(tmp_path):
    out = tmp_path / "eta.json"
    code = main(["efficiency", "--output", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert 0.0 < doc["eta_mean"] < 1.0
    assert set(doc["contributions"]) == {"T01", "T02", "P01", "P02", "gamma"}
    assert doc["eta_variance"] == pytest.approx(sum(doc["contributions"].values()))


def test_efficiency_cli_state_file_and_mc(tmp_path):
    state_doc = {
        "means": {"T01": 1000.0, "T02": 800.0, "P01": 8e5, "P02": 2e5, "gamma": 1.4},
        "sigmas": {"T01": 2.0, "T02": 2.0, "P01": 500.0, "P02": 500.0, "gamma": 0.001},
    }
    spath = tmp_path / "state.json"
    spath.write_text(json.dumps(state_doc))
    out = tmp_path / "eta.json"
    code = main(
        ["efficiency", str(spath), "--samples", "20000", "--seed", "5",
         "--output", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["eta_mean"] == pytest.approx(0.6115274695000418, abs=1e-6)
    assert doc["mc_check"]["sigma_eta"] == pytest.approx(doc["sigma_eta"], rel=0.05)


def test_efficiency_cli_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["efficiency", "--rho-values", "0,0.5,0.9,0.999", "--output", str(out)])
    assert code == 0
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["rho", "sigma_eta"]
    sig = [float(r[1]) for r in rows[1:]]
    assert sig == sorted(sig, reverse=True)


def test_legacy_cli(tmp_path):
    budget = {
        "components": [
            {"label": "calibration", "value": 1.0},
            {"label": "spatial", "value": 2.371},
        ]
    }
    path = tmp_path / "budget.json"
    path.write_text(json.dumps(budget))
    out = tmp_path / "total.json"
    code = main(["legacy", str(path), "--output", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["total"] == pytest.approx(2.573, abs=5e-4)


def test_legacy_cli_with_samples(tmp_path):
    budget = {
        "components": [{"label": "calibration", "value": 1.0}],
        "samples": [1.0, 2.0, 3.0],
    }
    path = tmp_path / "budget.json"
    path.write_text(json.dumps(budget))
    out = tmp_path / "total.json"
    code = main(["legacy", str(path), "--output", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    labels = [c["label"] for c in doc["components"]]
    assert "sampling" in labels
    assert doc["total"] == pytest.approx(np.sqrt(2.0), rel=1e-9)


def test_fig1_demo_cli(tmp_path, capsys):
    out = tmp_path / "demo.csv"
    code = main(["fig1-demo", "--output", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "K=   3" in printed
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["n_rakes", "legacy", "model_eps_p_sq"]
    assert [r[0] for r in rows[1:]] == ["3", "8", "300"]


def test_write_and_read_json_round_trip(tmp_path):
    doc = {"a": 0.1 + 0.2, "b": [1e-17, 3.14]}
    path = tmp_path / "doc.json"
    io.write_json(doc, path)
    again = io.read_json(path)
    assert again == doc
