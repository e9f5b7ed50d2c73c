"""Area averaging of the reconstructed field over the annulus.

Integrating the Fourier model over the full circumference kills every
harmonic, so only the constant-coefficient row of X survives:

    mean = 2/(r_o^2 - r_i^2) * integral r * v(r)^T U mu_1 dr,

with mu_1 the constant-harmonic coefficients across stations (first row of
mu_X) and r the physical radius r_i + (r_o - r_i) * fraction. The variance
integrates the two-point covariance of circumferential ring means against the
same radius weighting on both arguments:

    var = 4/(r_o^2 - r_i^2)^2 * double integral r r' K(f, f') dr dr',
    K(f, f') = v(f)^T U C00 U^T v(f'),

where C00 picks the constant-row block Cov(X[0, m], X[0, m']) out of Sigma_X.
Radial integrals use composite Gauss-Legendre quadrature with a panel between
neighbouring stations (plus edge panels), and an order-doubling check.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NegativeVariance, QuadratureFailure
from .fourier import FourierModel
from .propagation import FieldDistribution

# Gauss-Legendre points per inter-station panel; doubled for the convergence check.
PANEL_POINTS = 64
QUAD_RTOL = 1e-10


def _panels(model: FourierModel) -> np.ndarray:
    knots = np.concatenate(([0.0], model.geometry.r_stations, [1.0]))
    return np.unique(knots)


def _radius_weight_vector(model: FourierModel, points: int) -> np.ndarray:
    """q = integral over span of r(f) * U^T v(f) * dr, as a length-M vector."""
    geometry = model.geometry
    nodes, weights = np.polynomial.legendre.leggauss(points)
    knots = _panels(model)
    q = np.zeros(model.n_stations)
    for lo, hi in zip(knots[:-1], knots[1:]):
        half = 0.5 * (hi - lo)
        f = lo + half * (nodes + 1.0)
        blend = model.radial.blend(f)  # (points, M)
        r_phys = geometry.physical_radius(f)
        q += half * geometry.span * (weights * r_phys) @ blend
    return q


def _converged_weight_vector(model: FourierModel) -> np.ndarray:
    q = _radius_weight_vector(model, PANEL_POINTS)
    q2 = _radius_weight_vector(model, 2 * PANEL_POINTS)
    scale = float(np.linalg.norm(q2))
    if scale > 0.0 and float(np.linalg.norm(q - q2)) > QUAD_RTOL * scale:
        raise QuadratureFailure(
            "radial quadrature did not converge under order doubling"
        )
    return q2


def _constant_row_block(model: FourierModel, Sigma_X) -> np.ndarray:
    """C00[m, n] = Cov(X[0, m], X[0, n]) out of the vectorized Sigma_X."""
    K, M = model.n_coeffs, model.n_stations
    S = np.asarray(Sigma_X, dtype=float)
    return S.reshape(M, K, M, K)[:, 0, :, 0]


def area_average_mean(model: FourierModel, mu_X) -> float:
    """Annulus area average of the mean reconstructed field."""
    mu_X = np.asarray(mu_X, dtype=float)
    geometry = model.geometry
    q = _converged_weight_vector(model)
    norm = 2.0 / (geometry.r_outer**2 - geometry.r_inner**2)
    return float(norm * (q @ mu_X[0, :]))


def ring_average_covariance(model: FourierModel, Sigma_X, frac, frac_other=None) -> float:
    """Covariance of the circumferential ring means at two span fractions.

    This is the two-point integrand of the area-average variance; it is
    symmetric in its arguments and its diagonal (frac_other omitted or equal)
    is the variance of the ring mean at that radius.
    """
    if frac_other is None:
        frac_other = frac
    C00 = _constant_row_block(model, Sigma_X)
    w1 = model.radial.blend(float(frac))
    w2 = model.radial.blend(float(frac_other))
    return float(w1 @ C00 @ w2)


def area_average_variance(model: FourierModel, Sigma_X) -> float:
    """Variance of the annulus area average of the reconstructed field."""
    geometry = model.geometry
    C00 = _constant_row_block(model, Sigma_X)
    q = _converged_weight_vector(model)
    norm = 2.0 / (geometry.r_outer**2 - geometry.r_inner**2)
    var = float(norm**2 * (q @ C00 @ q))
    if var < 0.0:
        scale = float(np.linalg.norm(np.asarray(Sigma_X, dtype=float)))
        if var < -1e-10 * scale:
            raise NegativeVariance(f"area-average variance {var:.3e} is negative")
        var = 0.0
    return var


@dataclass(frozen=True)
class AreaAverageResult:
    """Area-averaged value with its variance and 1.96-sigma half width."""

    mean: float
    variance: float
    two_sigma: float


def area_average(model: FourierModel, field: FieldDistribution) -> AreaAverageResult:
    """Area-average the propagated field distribution."""
    mean = area_average_mean(model, field.mu_X)
    var = area_average_variance(model, field.Sigma_X)
    return AreaAverageResult(mean, var, 1.96 * float(np.sqrt(var)))
