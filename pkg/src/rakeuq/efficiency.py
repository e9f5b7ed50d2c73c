"""First-order uncertainty analysis of isentropic turbine efficiency.

Efficiency from stagnation conditions across the stage:

    eta = (T01 - T02) / (T01 * (1 - (P02/P01)^((gamma-1)/gamma)))

Parameters are ordered z = (T01, T02, P01, P02, gamma). The Taylor variance is
the quadratic form sigma_eta^2 = grad^T Sigma grad with Sigma = D rho D, D the
diagonal of per-parameter standard deviations and rho their correlation
matrix. Per-parameter contributions (d eta/d z_i)^2 sigma_i^2 show where the
budget goes; they sum to the variance only when rho = I.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatio, DimensionMismatch, InvalidCorrelation, InvalidParams

PARAM_NAMES = ("T01", "T02", "P01", "P02", "gamma")

# Per-parameter standard deviations of a well-instrumented rig:
# 2.4 K and 1.4 K on the inlet/outlet temperatures, 600 Pa and 100 Pa on the
# pressures, 0.001 on gamma.
DEFAULT_SIGMAS = np.array([2.4, 1.4, 600.0, 100.0, 0.001])


def _split(z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 5:
        raise DimensionMismatch("state vector must have 5 entries (T01,T02,P01,P02,gamma)")
    return z[..., 0], z[..., 1], z[..., 2], z[..., 3], z[..., 4]


def _denominator(T01, P01, P02, gamma):
    exponent = (gamma - 1.0) / gamma
    pr = np.power(P02 / P01, exponent)
    D = 1.0 - pr
    if np.any(D == 0.0):
        raise DegenerateRatio("pressure-ratio term vanished (P02 = P01 or gamma = 1)")
    return D, pr, exponent


def efficiency(z):
    """Isentropic efficiency at state(s) z; z may be (5,) or (n, 5)."""
    T01, T02, P01, P02, gamma = _split(z)
    if np.any(T01 <= 0.0) or np.any(P01 <= 0.0) or np.any(P02 <= 0.0):
        raise InvalidParams("temperatures and pressures must be positive")
    if np.any(gamma <= 1.0):
        raise InvalidParams("gamma must exceed 1")
    D, _, _ = _denominator(T01, P01, P02, gamma)
    eta = (T01 - T02) / (T01 * D)
    return float(eta) if np.ndim(z) == 1 else eta


def efficiency_gradient(z) -> np.ndarray:
    """Analytic gradient of the efficiency wrt (T01, T02, P01, P02, gamma)."""
    T01, T02, P01, P02, gamma = _split(np.asarray(z, dtype=float))
    if np.ndim(z) != 1:
        raise DimensionMismatch("gradient takes a single state vector")
    efficiency(z)  # reuse the domain checks
    D, pr, exponent = _denominator(T01, P01, P02, gamma)
    num = T01 - T02
    core = num * exponent * pr / (T01 * D**2)  # shared by both pressure terms
    return np.array(
        [
            T02 / (T01**2 * D),
            -1.0 / (T01 * D),
            -core / P01,
            core / P02,
            num * pr * np.log(P02 / P01) / (T01 * D**2 * gamma**2),
        ]
    )


def validate_correlation(rho, n: int) -> np.ndarray:
    """Check a correlation matrix: square, symmetric, unit diagonal, PSD."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (n, n):
        raise InvalidCorrelation(f"correlation matrix must be {n} x {n}")
    if not np.allclose(rho, rho.T, atol=1e-12):
        raise InvalidCorrelation("correlation matrix must be symmetric")
    if not np.allclose(np.diag(rho), 1.0, atol=1e-12):
        raise InvalidCorrelation("correlation matrix needs a unit diagonal")
    if np.any(np.abs(rho) > 1.0 + 1e-12):
        raise InvalidCorrelation("correlations must lie in [-1, 1]")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.T))
    if evals[0] < -1e-10:
        raise InvalidCorrelation("correlation matrix is not positive semidefinite")
    return 0.5 * (rho + rho.T)


@dataclass(frozen=True)
class StationState:
    """Means, standard deviations and correlations of the five parameters."""

    z: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if z.shape != (5,) or sigma.shape != (5,):
            raise DimensionMismatch("z and sigma must both have 5 entries")
        if np.any(sigma < 0.0):
            raise InvalidParams("standard deviations must be nonnegative")
        efficiency(z)  # validates the mean state
        rho = np.eye(5) if self.rho is None else validate_correlation(self.rho, 5)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)

    @property
    def covariance(self) -> np.ndarray:
        return (self.sigma[:, None] * self.rho) * self.sigma[None, :]


# Synthetic but representative single-stage turbine state used by the demos
# and as the CLI default; not measured data.
DEFAULT_STATE = StationState(
    z=np.array([1600.0, 1180.0, 1.6e6, 4.0e5, 1.33]),
    sigma=DEFAULT_SIGMAS.copy(),
)


@dataclass(frozen=True)
class EfficiencyReport:
    """First-order efficiency uncertainty and its per-parameter breakdown."""

    eta_mean: float
    eta_variance: float
    contributions: dict
    contribution_fractions: dict

    @property
    def sigma_eta(self) -> float:
        return float(np.sqrt(self.eta_variance))


def taylor_variance(state: StationState) -> EfficiencyReport:
    """Propagate the state covariance through the first-order expansion."""
    grad = efficiency_gradient(state.z)
    var = float(grad @ state.covariance @ grad)
    if var < 0.0:
        var = 0.0
    contrib = (grad * state.sigma) ** 2
    total = contrib.sum()
    fractions = contrib / total if total > 0.0 else np.zeros_like(contrib)
    return EfficiencyReport(
        eta_mean=efficiency(state.z),
        eta_variance=var,
        contributions=dict(zip(PARAM_NAMES, contrib.tolist())),
        contribution_fractions=dict(zip(PARAM_NAMES, fractions.tolist())),
    )


def block_correlation(rho_value: float) -> np.ndarray:
    """5x5 correlation with rho between the temperatures and between the
    pressures, gamma independent."""
    if not -1.0 <= rho_value <= 1.0:
        raise InvalidCorrelation(f"correlation {rho_value} outside [-1, 1]")
    rho = np.eye(5)
    rho[0, 1] = rho[1, 0] = rho_value
    rho[2, 3] = rho[3, 2] = rho_value
    return rho


def correlation_sweep(state: StationState, rho_values) -> np.ndarray:
    """sigma(eta) as the temperature and pressure pair correlations sweep.

    Returns one standard deviation per requested correlation value. The
    state's own rho is ignored; each sweep point uses the block pattern.
    """
    out = np.empty(len(rho_values))
    grad = efficiency_gradient(state.z)
    for i, r in enumerate(rho_values):
        rho = block_correlation(float(r))
        cov = (state.sigma[:, None] * rho) * state.sigma[None, :]
        out[i] = np.sqrt(max(float(grad @ cov @ grad), 0.0))
    return out
