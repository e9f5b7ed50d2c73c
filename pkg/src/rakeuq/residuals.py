"""Distribution of the spatial sampling error metric.

The sampling metric is the per-probe mean-square misfit between the fitted
field and the measured means,

    eps_p^2 = ||A X - mu_B||_F^2 / (NM - 1).

Under iid probe noise sigma_b the scaled residual power (NM/sigma_b^2) *
||R||_F^2 / NM follows a noncentral chi-square law with g = rank(Sigma_R)
degrees of freedom and noncentrality phi = vec(mu_R)^T Sigma_R^+ vec(mu_R),
which gives closed-form moments for the metric:

    mu(eps_p^2)      = sigma_b^2/(NM) * (g + phi)
    sigma^2(eps_p^2) = (sigma_b^2/(NM))^2 * (2g + 4 phi)

Note the two divisors: the metric itself uses NM-1, the chi-square moments
use NM. Both are reported so the mixed convention stays auditable. The
measurement imprecision metric is the gap eps_m^2 = mu(eps_p^2) - eps_p^2,
which vanishes as sigma_b -> 0 for data inside the model span.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidParams, RequiresIidNoise, TooFewSamples
from .fourier import CoefficientMatrix, FourierModel
from .propagation import FieldDistribution, MeasurementDistribution, vec

# Singular values above this fraction of the largest count toward rank.
RANK_RTOL = 1e-10

# Stop the pdf series once a term falls below this fraction of the partial sum.
SERIES_RTOL = 1e-14


def sampling_metric(model: FourierModel, X, mu_B) -> float:
    """eps_p^2: mean-square misfit of the fit against the measured means."""
    if isinstance(mu_B, MeasurementDistribution):
        mu_B = mu_B.mu_B
    mu_B = np.asarray(mu_B, dtype=float)
    X = X.X if isinstance(X, CoefficientMatrix) else np.asarray(X, dtype=float)
    n_meas = mu_B.size
    if n_meas < 2:
        raise TooFewSamples("the sampling metric needs at least two probes")
    resid = model.A @ X - mu_B.reshape(model.n_rakes, -1)
    return float(np.sum(resid**2) / (n_meas - 1))


@dataclass(frozen=True)
class ChiSquareParams:
    """Noncentral chi-square parameters of the scaled residual power."""

    g: int
    phi: float
    scale: float  # sigma_b^2 / (NM)


def chi_square_params(field: FieldDistribution) -> ChiSquareParams:
    """Degrees of freedom and noncentrality from the residual moments.

    Only valid when the measurement noise was iid (Sigma_B = sigma_b^2 I);
    other covariances raise RequiresIidNoise and call for Monte Carlo.
    """
    if field.iid_sigma is None:
        raise RequiresIidNoise(
            "closed-form residual statistics need Sigma_B = sigma_b^2 I"
        )
    mu_r = vec(field.mu_R)
    n_meas = mu_r.size
    sv, U = np.linalg.eigh(np.asarray(field.Sigma_R, dtype=float))
    sv = sv[::-1]
    U = U[:, ::-1]
    smax = float(sv[0]) if sv.size else 0.0
    if smax <= 0.0:
        # Noise-free exact fit: define phi = 0, but a nonzero residual mean
        # with zero residual covariance has no chi-square description.
        if float(mu_r @ mu_r) > 1e-20:
            raise InvalidParams(
                "zero residual covariance with nonzero residual mean"
            )
        g = 0
        phi = 0.0
    else:
        keep = sv > RANK_RTOL * smax
        g = int(np.count_nonzero(keep))
        proj = U[:, : g].T @ mu_r
        phi = float(proj @ (proj / sv[:g]))
    scale = field.iid_sigma**2 / n_meas
    return ChiSquareParams(g, phi, float(scale))


def error_moments(params: ChiSquareParams, n_rakes: int, n_stations: int, sigma_b: float):
    """Closed-form mean and variance of eps_p^2 under iid noise."""
    n_meas = n_rakes * n_stations
    if n_meas < 1:
        raise InvalidParams("need at least one measurement")
    scale = sigma_b**2 / n_meas
    mean = scale * (params.g + params.phi)
    var = scale**2 * (2.0 * params.g + 4.0 * params.phi)
    return float(mean), float(var)


def imprecision_metric(mean_eps: float, eps_p_sq: float) -> float:
    """eps_m^2: the part of the expected misfit owed to instrument noise."""
    return float(mean_eps - eps_p_sq)


def noncentral_chisq_pdf(x, g: int, phi: float):
    """Density of the noncentral chi-square law, by its Poisson mixture series.

    Each term is a Poisson(phi/2) weight times a central chi-square density
    with g + 2j degrees of freedom; the series stops once a term drops below
    1e-14 of the running sum (past the Poisson mode). Scalar or array x.
    """
    if g < 1:
        raise InvalidParams("need g >= 1 degrees of freedom")
    if phi < 0.0:
        raise InvalidParams("noncentrality must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise InvalidParams("the density is supported on x >= 0")
    scalar_input = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    positive = x > 0.0
    if np.any(x == 0.0):
        # Pointwise limits at the origin depend only on the leading term.
        if g < 2:
            out[x == 0.0] = np.inf
        elif g == 2:
            out[x == 0.0] = 0.5 * np.exp(-0.5 * phi)
    if np.any(positive):
        xp = x[positive]
        log_x = np.log(xp)
        total = np.zeros_like(xp)
        half_phi = 0.5 * phi
        log_half_phi = np.log(half_phi) if half_phi > 0.0 else -np.inf
        j = 0
        while True:
            dof = g + 2 * j
            # j * log(phi/2) with the 0 * -inf corner pinned to 0
            log_pow = j * log_half_phi if j > 0 else 0.0
            log_w = -half_phi + log_pow - gammaln(j + 1)
            log_f = (
                (0.5 * dof - 1.0) * log_x
                - 0.5 * xp
                - 0.5 * dof * np.log(2.0)
                - gammaln(0.5 * dof)
            )
            term = np.exp(log_w + log_f)
            total += term
            j += 1
            if half_phi == 0.0:
                break
            past_mode = j > half_phi
            if past_mode and np.all(term <= SERIES_RTOL * np.maximum(total, 1e-300)):
                break
            if j > 100000:
                raise InvalidParams("noncentral chi-square series did not converge")
        out[positive] = total
    return float(out[0]) if scalar_input else out


@dataclass(frozen=True)
class UncertaintyMetrics:
    """The two reported metrics plus the moments behind them."""

    eps_p_sq: float
    eps_m_sq: float
    mean_eps: float
    var_eps: float
    chi2: ChiSquareParams = None


def compute_metrics(
    model: FourierModel,
    coeffs: CoefficientMatrix,
    meas: MeasurementDistribution,
    field: FieldDistribution,
) -> UncertaintyMetrics:
    """Assemble both metrics from a fit and its propagated moments (iid only)."""
    eps_p = sampling_metric(model, coeffs, meas)
    params = chi_square_params(field)
    mean_eps, var_eps = error_moments(
        params, model.n_rakes, model.n_stations, field.iid_sigma
    )
    return UncertaintyMetrics(
        eps_p_sq=eps_p,
        eps_m_sq=imprecision_metric(mean_eps, eps_p),
        mean_eps=mean_eps,
        var_eps=var_eps,
        chi2=params,
    )
