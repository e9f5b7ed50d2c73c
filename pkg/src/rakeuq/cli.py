"""Command-line interface.

Subcommands mirror the library's capabilities:

    rakeuq fit        campaign.json --harmonics 1,4 --output report.json
    rakeuq grid       campaign.json --harmonics 1,4 --output grid.csv
    rakeuq scan       campaign.json --output scan.csv
    rakeuq rake-mc    campaign.json --harmonics 1,4 --sigma-theta 0.51 ...
    rakeuq efficiency state.json --rho-values 0,0.5,0.9 ...
    rakeuq legacy     budget.json --output total.json
    rakeuq fig1-demo  --frequency 2 --rake-counts 3,8,300 --output demo.csv

Exit codes: 0 success, 2 input schema error, 3 numeric failure, 4 ridge
ladder exhausted. RAKEUQ_THREADS caps Monte Carlo thread parallelism.
"""

import argparse
import json
import sys

import numpy as np

from . import io
from .area import area_average
from .efficiency import DEFAULT_STATE, correlation_sweep, taylor_variance
from .errors import RakeUqError, RegularizationExhausted, SchemaError
from .fourier import DEFAULT_BETA, DEFAULT_LADDER, build_design_matrix, fit
from .geometry import HarmonicSet
from .legacy import HarmonicField, fig1_demo, legacy_sampling_uncertainty, rss_total
from .montecarlo import SamplerConfig, efficiency_mc, frequency_scan, mc_propagate_model, rake_position_mc
from .propagation import FieldDistribution, predictive_grid
from .residuals import UncertaintyMetrics, compute_metrics, sampling_metric


def _parse_harmonics(text: str) -> HarmonicSet:
    try:
        return HarmonicSet(tuple(int(tok) for tok in text.split(",") if tok.strip()))
    except ValueError:
        raise RakeUqError(f"cannot parse harmonics {text!r}") from None


def _parse_floats(text: str):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise RakeUqError(f"cannot parse float list {text!r}") from None


def _parse_ints(text: str):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise RakeUqError(f"cannot parse integer list {text!r}") from None


def _build_model(campaign, args):
    harmonics = _parse_harmonics(args.harmonics)
    ladder = _parse_floats(args.lambda_ladder) if args.lambda_ladder else DEFAULT_LADDER
    return build_design_matrix(
        campaign.geometry,
        harmonics,
        lambda_ladder=ladder,
        beta=args.beta,
        radial_basis=args.radial_basis,
    )


def _grid_centers(n_r: int, n_theta: int):
    r = (np.arange(n_r) + 0.5) / n_r
    t = (np.arange(n_theta) + 0.5) * (360.0 / n_theta)
    return r, t


def _emit(report: dict, output):
    if output:
        io.write_json(report, output)
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")


def cmd_fit(args) -> int:
    campaign = io.load_campaign(args.campaign)
    model = _build_model(campaign, args)
    coeffs = fit(model, campaign.measurements)
    field = FieldDistribution.from_measurements(model, campaign.meas, coeffs.lambda_used)
    if campaign.meas.iid_sigma is not None:
        metrics = compute_metrics(model, coeffs, campaign.meas, field)
        method = "analytic"
    else:
        mc = mc_propagate_model(
            model, campaign.meas, SamplerConfig(args.seed, args.samples),
            lam=coeffs.lambda_used,
        )
        eps_p = sampling_metric(model, coeffs, campaign.meas)
        metrics = UncertaintyMetrics(
            eps_p_sq=eps_p,
            eps_m_sq=mc.eps_mean - eps_p,
            mean_eps=mc.eps_mean,
            var_eps=mc.eps_var,
        )
        method = "monte-carlo"
    area = area_average(model, field)
    sigma_b = campaign.meas.iid_sigma
    legacy_value = legacy_sampling_uncertainty(campaign.measurements)
    legacy_block = {"sampling_std": legacy_value}
    if sigma_b is not None:
        legacy_block["rss_with_measurement_two_sigma"] = rss_total(
            [1.96 * sigma_b, legacy_value]
        )
    r_grid, t_grid = _grid_centers(args.n_r, args.n_theta)
    _, grid_var = predictive_grid(model, field, r_grid, t_grid)
    two_sigma = 1.96 * np.sqrt(grid_var)
    predictive_block = {
        "max_two_sigma": float(two_sigma.max()),
        "mean_two_sigma": float(two_sigma.mean()),
    }
    report = io.build_report(
        model, coeffs, metrics, area,
        legacy_block=legacy_block,
        predictive_block=predictive_block,
        method=method,
        units=campaign.units,
        seed=args.seed if method == "monte-carlo" else None,
        samples=args.samples if method == "monte-carlo" else None,
    )
    _emit(report, args.output)
    coeff_path = args.coefficients
    if coeff_path is None and args.output:
        coeff_path = str(args.output) + ".coefficients.json"
    if coeff_path:
        io.write_json(io.coefficients_to_dict(model, coeffs), coeff_path)
    return 0


def cmd_grid(args) -> int:
    campaign = io.load_campaign(args.campaign)
    model = _build_model(campaign, args)
    coeffs = fit(model, campaign.measurements)
    field = FieldDistribution.from_measurements(model, campaign.meas, coeffs.lambda_used)
    r_grid, t_grid = _grid_centers(args.n_r, args.n_theta)
    mean, var = predictive_grid(model, field, r_grid, t_grid)
    io.write_grid_csv(args.output, r_grid, t_grid, mean, var)
    return 0


def cmd_scan(args) -> int:
    campaign = io.load_campaign(args.campaign)
    sigma_b = campaign.meas.iid_sigma
    if sigma_b is None:
        raise RakeUqError("the frequency scan needs an iid uncertainty block")
    ladder = _parse_floats(args.lambda_ladder) if args.lambda_ladder else None
    result = frequency_scan(
        campaign.geometry,
        campaign.measurements,
        sigma_b,
        max_freq=args.max_freq,
        beta=args.beta,
        lambda_ladder=ladder,
        radial_basis=args.radial_basis,
    )
    io.write_scan_csv(args.output, result)
    best = result.best
    print(f"best pair: omega={best.omega} mean_eps={best.mean_eps:.6g} "
          f"lambda={best.lambda_used}")
    flagged = sum(1 for e in result.entries if e.flagged)
    if flagged:
        print(f"{flagged} pair(s) exhausted the ridge ladder and were flagged")
    return 0


def cmd_rake_mc(args) -> int:
    campaign = io.load_campaign(args.campaign)
    model = _build_model(campaign, args)
    config = SamplerConfig(args.seed, args.draws)
    result = rake_position_mc(
        model,
        campaign.measurements,
        args.sigma_theta,
        config,
        n_prediction=args.n_prediction,
    )
    io.write_rake_mc_csv(args.output, model, result)
    print(f"{result.n_draws} draws, {result.n_failed} failed, "
          f"{int(np.count_nonzero(result.lambdas))} needed ridge")
    return 0


def cmd_efficiency(args) -> int:
    state = io.load_station_state(args.state) if args.state else DEFAULT_STATE
    report = taylor_variance(state)
    doc = {
        "eta_mean": report.eta_mean,
        "eta_variance": report.eta_variance,
        "sigma_eta": report.sigma_eta,
        "two_sigma_pct_of_eta": 200.0 * report.sigma_eta / report.eta_mean,
        "contributions": report.contributions,
        "contribution_fractions": report.contribution_fractions,
        "provenance": io.provenance(),
    }
    if args.samples:
        mc_mean, mc_sigma, mc_se = efficiency_mc(
            state, SamplerConfig(args.seed, args.samples)
        )
        doc["mc_check"] = {
            "eta_mean": mc_mean,
            "sigma_eta": mc_sigma,
            "sigma_eta_se": mc_se,
            "seed": args.seed,
            "samples": args.samples,
        }
    if args.rho_values:
        rho_values = _parse_floats(args.rho_values)
        sigmas = correlation_sweep(state, rho_values)
        if not args.output:
            raise RakeUqError("--rho-values needs --output for the sweep CSV")
        io.write_sweep_csv(args.output, rho_values, sigmas)
        print(f"wrote sweep of {len(rho_values)} correlation values")
        return 0
    io.assert_finite(doc)
    _emit(doc, args.output)
    return 0


def cmd_legacy(args) -> int:
    budget, samples = io.load_budget(args.budget)
    components = list(budget.components)
    if samples is not None:
        components.append(("sampling", legacy_sampling_uncertainty(samples)))
    doc = {
        "components": [{"label": label, "value": value} for label, value in components],
        "total": rss_total([value for _, value in components]),
    }
    _emit(doc, args.output)
    return 0


def cmd_fig1_demo(args) -> int:
    field = HarmonicField(
        mean=args.mean,
        amplitude=args.amplitude,
        frequency=args.frequency,
        phase_deg=args.phase,
    )
    rows = fig1_demo(field, _parse_ints(args.rake_counts), offset_deg=args.offset)
    if args.output:
        io.write_demo_csv(args.output, rows)
    for row in rows:
        print(f"K={row.n_rakes:4d}  legacy={row.legacy:.6g}  "
              f"model_eps_p_sq={row.model_eps_p_sq:.6g}")
    print(f"field rms about mean: {field.rms_about_mean:.6g}")
    return 0


def _add_common(parser, *, samples_default=200000):
    parser.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    parser.add_argument("--samples", type=int, default=samples_default,
                        help="Monte Carlo sample count")
    parser.add_argument("--lambda-ladder", default="",
                        help="comma-separated ridge penalties")
    parser.add_argument("--beta", type=float, default=DEFAULT_BETA,
                        help="coefficient norm guard")
    parser.add_argument("--output", default=None, help="output path")


def _add_model_args(parser):
    parser.add_argument("--harmonics", required=True,
                        help="comma-separated harmonic orders, e.g. 1,4")
    parser.add_argument("--radial-basis", choices=("cubic", "linear"),
                        default="cubic", help="radial blending basis")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rakeuq",
        description="flow-field reconstruction uncertainty from rake measurements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a campaign and write the JSON report")
    p.add_argument("campaign")
    _add_model_args(p)
    _add_common(p)
    p.add_argument("--n-theta", type=int, default=360)
    p.add_argument("--n-r", type=int, default=50)
    p.add_argument("--coefficients", default=None,
                   help="path for the fitted-coefficient JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("grid", help="predictive mean/variance grid as CSV")
    p.add_argument("campaign")
    _add_model_args(p)
    _add_common(p)
    p.add_argument("--n-theta", type=int, default=360)
    p.add_argument("--n-r", type=int, default=50)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("scan", help="rank harmonic pairs by expected misfit")
    p.add_argument("campaign")
    _add_common(p)
    p.add_argument("--max-freq", type=int, default=10)
    p.add_argument("--radial-basis", choices=("cubic", "linear"), default="cubic")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("rake-mc", help="Monte Carlo over rake placement scatter")
    p.add_argument("campaign")
    _add_model_args(p)
    _add_common(p)
    p.add_argument("--sigma-theta", type=float, required=True,
                   help="angle scatter std dev in degrees")
    p.add_argument("--draws", type=int, default=50000)
    p.add_argument("--n-prediction", type=int, default=360)
    p.set_defaults(func=cmd_rake_mc)

    p = sub.add_parser("efficiency", help="efficiency uncertainty budget")
    p.add_argument("state", nargs="?", default=None,
                   help="state JSON (defaults to a synthetic representative state)")
    _add_common(p, samples_default=0)
    p.add_argument("--rho-values", default="",
                   help="comma-separated correlations for a sweep CSV")
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("legacy", help="root-sum-square an uncertainty budget")
    p.add_argument("budget")
    _add_common(p)
    p.set_defaults(func=cmd_legacy)

    p = sub.add_parser("fig1-demo", help="legacy vs model metric demo table")
    _add_common(p)
    p.add_argument("--frequency", type=int, default=2)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--offset", type=float, default=0.0,
                   help="rake placement phase offset in degrees")
    p.add_argument("--rake-counts", default="3,8,300")
    p.set_defaults(func=cmd_fig1_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegularizationExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (RakeUqError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
