"""File formats: campaign input, JSON reports, CSV outputs.

A campaign file is JSON with three required blocks:

    {
      "geometry": {"theta_deg": [...N], "r_stations": [...M],
                   "r_inner": 0.45, "r_outer": 0.75},
      "measurements": [[...M]...N],          # row n = rake n, column m = station m
      "uncertainty": {"iid": {"sigma_b": 0.51}},
      "units": "K"                           # optional, defaults to K
    }

The uncertainty block is exactly one of ``iid`` (scalar sigma), ``diagonal``
(one sigma per probe, column-major vec order: rake index fastest) or
``correlation`` (the same sigma vector plus an NM x NM correlation matrix,
giving Sigma_B = D rho D). Schema violations raise SchemaError with the
offending field path; the CLI maps them to exit code 2.

Reports are plain dicts serialized with json, which round-trips every float
bit-exactly.
"""

import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import jsonschema
import numpy as np
import scipy

from . import __version__
from .errors import RakeUqError, SchemaError
from .fourier import CoefficientMatrix, FourierModel
from .geometry import AnnulusGeometry
from .propagation import MeasurementDistribution

_NUMBER = {"type": "number"}
_NUMBER_ARRAY = {"type": "array", "items": _NUMBER, "minItems": 1}
_MATRIX = {"type": "array", "items": _NUMBER_ARRAY, "minItems": 1}

CAMPAIGN_SCHEMA = {
    "type": "object",
    "required": ["geometry", "measurements", "uncertainty"],
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object",
            "required": ["theta_deg", "r_stations", "r_inner", "r_outer"],
            "additionalProperties": False,
            "properties": {
                "theta_deg": _NUMBER_ARRAY,
                "r_stations": _NUMBER_ARRAY,
                "r_inner": _NUMBER,
                "r_outer": _NUMBER,
            },
        },
        "measurements": _MATRIX,
        "uncertainty": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "iid": {
                    "type": "object",
                    "required": ["sigma_b"],
                    "additionalProperties": False,
                    "properties": {"sigma_b": {"type": "number", "minimum": 0}},
                },
                "diagonal": {
                    "type": "object",
                    "required": ["sigma"],
                    "additionalProperties": False,
                    "properties": {"sigma": _NUMBER_ARRAY},
                },
                "correlation": {
                    "type": "object",
                    "required": ["sigma", "rho"],
                    "additionalProperties": False,
                    "properties": {"sigma": _NUMBER_ARRAY, "rho": _MATRIX},
                },
            },
        },
        "units": {"type": "string"},
    },
}

STATION_STATE_SCHEMA = {
    "type": "object",
    "required": ["means", "sigmas"],
    "additionalProperties": False,
    "properties": {
        "means": {
            "type": "object",
            "required": ["T01", "T02", "P01", "P02", "gamma"],
            "additionalProperties": False,
            "properties": {name: _NUMBER for name in ("T01", "T02", "P01", "P02", "gamma")},
        },
        "sigmas": {
            "type": "object",
            "required": ["T01", "T02", "P01", "P02", "gamma"],
            "additionalProperties": False,
            "properties": {name: {"type": "number", "minimum": 0} for name in ("T01", "T02", "P01", "P02", "gamma")},
        },
        "rho": _MATRIX,
    },
}

BUDGET_SCHEMA = {
    "type": "object",
    "required": ["components"],
    "additionalProperties": False,
    "properties": {
        "components": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["label", "value"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string"},
                    "value": {"type": "number", "minimum": 0},
                },
            },
        },
        "samples": _NUMBER_ARRAY,
    },
}


def _validate_schema(doc, schema, what: str):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = ".".join(str(p) for p in err.absolute_path) or what
        raise SchemaError(err.message, field=path)


def read_json(path):
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}", field=str(path)) from None


def write_json(obj, path):
    with open(path, "w") as handle:
        json.dump(obj, handle, indent=2)
        handle.write("\n")


@dataclass(frozen=True)
class Campaign:
    """A validated campaign: geometry, mean readings, noise model, units."""

    geometry: AnnulusGeometry
    measurements: np.ndarray
    meas: MeasurementDistribution
    units: str = "K"


def campaign_from_dict(doc) -> Campaign:
    """Build a Campaign from a parsed JSON document, validating throughout."""
    _validate_schema(doc, CAMPAIGN_SCHEMA, "campaign")
    geo = doc["geometry"]
    try:
        geometry = AnnulusGeometry(
            np.asarray(geo["theta_deg"], dtype=float),
            np.asarray(geo["r_stations"], dtype=float),
            float(geo["r_inner"]),
            float(geo["r_outer"]),
        )
    except RakeUqError as exc:
        raise SchemaError(str(exc), field="geometry") from None
    rows = doc["measurements"]
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise SchemaError("rows have unequal lengths", field="measurements")
    B = np.asarray(rows, dtype=float)
    if B.shape != (geometry.n_rakes, geometry.n_stations):
        raise SchemaError(
            f"expected {geometry.n_rakes} x {geometry.n_stations}, got {B.shape}",
            field="measurements",
        )
    unc = doc["uncertainty"]
    try:
        if "iid" in unc:
            meas = MeasurementDistribution.from_iid(B, float(unc["iid"]["sigma_b"]))
        elif "diagonal" in unc:
            meas = MeasurementDistribution.from_diagonal(B, unc["diagonal"]["sigma"])
        else:
            block = unc["correlation"]
            meas = MeasurementDistribution.from_correlation(B, block["sigma"], block["rho"])
    except RakeUqError as exc:
        raise SchemaError(str(exc), field="uncertainty") from None
    return Campaign(geometry, B, meas, doc.get("units", "K"))


def load_campaign(path) -> Campaign:
    return campaign_from_dict(read_json(path))


def load_station_state(path):
    """Read an efficiency state file into a StationState."""
    from .efficiency import PARAM_NAMES, StationState

    doc = read_json(path)
    _validate_schema(doc, STATION_STATE_SCHEMA, "state")
    z = np.array([doc["means"][name] for name in PARAM_NAMES], dtype=float)
    sigma = np.array([doc["sigmas"][name] for name in PARAM_NAMES], dtype=float)
    rho = np.asarray(doc["rho"], dtype=float) if "rho" in doc else None
    try:
        return StationState(z, sigma, rho)
    except RakeUqError as exc:
        raise SchemaError(str(exc), field="state") from None


def load_budget(path):
    """Read a budget file: labelled components plus optional raw samples."""
    from .legacy import UncertaintyBudget

    doc = read_json(path)
    _validate_schema(doc, BUDGET_SCHEMA, "budget")
    components = tuple((c["label"], float(c["value"])) for c in doc["components"])
    samples = np.asarray(doc["samples"], dtype=float) if "samples" in doc else None
    try:
        return UncertaintyBudget(components), samples
    except RakeUqError as exc:
        raise SchemaError(str(exc), field="components") from None


def provenance(seed=None, samples=None) -> dict:
    info = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if seed is not None:
        info["seed"] = int(seed)
    if samples is not None:
        info["samples"] = int(samples)
    return info


def assert_finite(obj, path: str = "report"):
    """Reports must not carry NaN or infinities; fail loudly if one appears."""
    if isinstance(obj, dict):
        for key, value in obj.items():
            assert_finite(value, f"{path}.{key}")
    elif isinstance(obj, (list, tuple)):
        for i, value in enumerate(obj):
            assert_finite(value, f"{path}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise RakeUqError(f"non-finite value at {path}")


def build_report(
    model: FourierModel,
    coeffs: CoefficientMatrix,
    metrics,
    area,
    *,
    legacy_block=None,
    predictive_block=None,
    method: str = "analytic",
    units: str = "K",
    seed=None,
    samples=None,
) -> dict:
    """Assemble the JSON uncertainty report for one fitted campaign."""
    n_meas = model.n_rakes * model.n_stations
    report = {
        "fit": {
            "omega": list(model.harmonics.omega),
            "lambda": float(coeffs.lambda_used),
            "cond_AtA": float(model.cond_AtA),
            "beta": float(model.beta),
            "coefficient_norm": coeffs.spectral_norm,
        },
        "metrics": {
            "eps_p_sq": metrics.eps_p_sq,
            "eps_m_sq": metrics.eps_m_sq,
            "mean_eps_p_sq": metrics.mean_eps,
            "var_eps_p_sq": metrics.var_eps,
            "method": method,
            "metric_divisor": n_meas - 1,
            "moment_divisor": n_meas,
        },
        "area_average": {
            "mean": area.mean,
            "variance": area.variance,
            "two_sigma": area.two_sigma,
        },
        "units": units,
        "provenance": provenance(seed=seed, samples=samples),
    }
    if metrics.chi2 is not None:
        report["metrics"]["g"] = int(metrics.chi2.g)
        report["metrics"]["phi"] = float(metrics.chi2.phi)
    if legacy_block is not None:
        report["legacy"] = legacy_block
    if predictive_block is not None:
        report["predictive"] = predictive_block
    assert_finite(report)
    return report


def coefficients_to_dict(model: FourierModel, coeffs: CoefficientMatrix) -> dict:
    return {
        "omega": list(model.harmonics.omega),
        "lambda": float(coeffs.lambda_used),
        "theta_deg": model.geometry.theta_deg.tolist(),
        "r_stations": model.geometry.r_stations.tolist(),
        "X": coeffs.X.tolist(),
    }


def write_grid_csv(path, r_fracs, theta_deg, mean, variance):
    """Grid rows, row-major with theta fastest: r_frac, theta_deg, mean, variance."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["r_frac", "theta_deg", "mean", "variance"])
        for i, r in enumerate(r_fracs):
            for j, t in enumerate(theta_deg):
                writer.writerow([repr(float(r)), repr(float(t)),
                                 repr(float(mean[i, j])), repr(float(variance[i, j]))])


def write_scan_csv(path, result):
    """Frequency-scan rows: omega1, omega2, lambda, mean_eps (flagged rows
    carry an empty lambda and mean_eps = inf)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["omega1", "omega2", "lambda", "mean_eps"])
        for entry in result.entries:
            lam = "" if entry.lambda_used is None else repr(float(entry.lambda_used))
            writer.writerow([entry.omega[0], entry.omega[1], lam, repr(float(entry.mean_eps))])


def write_rake_mc_csv(path, model: FourierModel, result):
    """Rake-scatter grid rows: theta_deg, r_frac, mean, variance."""
    stations = model.geometry.r_stations
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["theta_deg", "r_frac", "mean", "variance"])
        for i, t in enumerate(result.theta_pred_deg):
            for m, r in enumerate(stations):
                writer.writerow([repr(float(t)), repr(float(r)),
                                 repr(float(result.grid_mean[i, m])),
                                 repr(float(result.grid_var[i, m]))])


def write_sweep_csv(path, rho_values, sigmas):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rho", "sigma_eta"])
        for rho, sigma in zip(rho_values, sigmas):
            writer.writerow([repr(float(rho)), repr(float(sigma))])


def write_demo_csv(path, rows):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["n_rakes", "legacy", "model_eps_p_sq"])
        for row in rows:
            writer.writerow([row.n_rakes, repr(float(row.legacy)), repr(float(row.model_eps_p_sq))])
