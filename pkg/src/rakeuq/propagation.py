"""Gaussian propagation of measurement uncertainty through the Fourier fit.

Measurements are modelled as a matrix Gaussian over the N x M measurement
matrix B, carried in vectorized form: vec(B) stacks columns (rake index
fastest, station slowest) and Sigma_B is the NM x NM covariance of that
vector. Because the fit acts column-wise, X = P B vectorizes to
vec(X) = (I_M kron P) vec(B), and first/second moments push through exactly:

    mu_X = P mu_B                Sigma_X = (I kron P) Sigma_B (I kron P)^T
    mu_F = A mu_X                Sigma_F = (I kron A) Sigma_X (I kron A)^T
    mu_R = mu_F - mu_B           Sigma_R = (I kron (AP - I)) Sigma_B (...)^T

F is the fitted value at the rakes and R = F - B the fit residual. Every
propagated covariance is symmetrized and PSD-checked before use.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NotPSD
from .fourier import FourierModel, design_row


def vec(matrix) -> np.ndarray:
    """Column-major vectorization: rake index fastest, station slowest."""
    return np.asarray(matrix, dtype=float).reshape(-1, order="F")


def unvec(vector, n_rakes: int, n_stations: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(vector, dtype=float).reshape((n_rakes, n_stations), order="F")


def ensure_psd(S, name: str = "covariance") -> np.ndarray:
    """Symmetrize S and clip trace-relative negligible negative eigenvalues.

    Rank-deficient propagated covariances legitimately carry eigenvalues a
    few machine epsilons below zero; those are clipped silently. Eigenvalues
    down to -1e-10 * trace are clipped with a warning, and anything more
    negative raises NotPSD.
    """
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.T)
    tr = float(np.trace(S))
    if tr < 0.0:
        raise NotPSD(f"{name} has negative trace {tr}")
    evals, evecs = np.linalg.eigh(S)
    if evals[0] >= 0.0:
        return S
    tol = 1e-10 * tr
    if evals[0] < -tol:
        raise NotPSD(f"{name} has eigenvalue {evals[0]:.3e} below -1e-10*trace")
    roundoff = 1e3 * np.finfo(float).eps * tr
    if evals[0] < -roundoff:
        warnings.warn(
            f"clipping {np.sum(evals < 0.0)} negative eigenvalue(s) of {name}",
            RuntimeWarning,
            stacklevel=2,
        )
    S = (evecs * np.maximum(evals, 0.0)) @ evecs.T
    return 0.5 * (S + S.T)


def _detect_iid(Sigma_B: np.ndarray):
    """Return sigma_b if Sigma_B equals sigma_b^2 I within tight tolerance."""
    d = np.diag(Sigma_B)
    if d.size == 0 or np.any(d < 0.0):
        return None
    scale = float(d[0])
    if not np.allclose(d, scale, rtol=1e-12, atol=1e-300 + 1e-12 * abs(scale)):
        return None
    off = Sigma_B - np.diag(d)
    if not np.allclose(off, 0.0, atol=1e-12 * max(scale, 1e-300)):
        return None
    return float(np.sqrt(scale))


@dataclass(frozen=True)
class MeasurementDistribution:
    """Gaussian measurement model: mean matrix plus vectorized covariance.

    ``iid_sigma`` is the scalar noise level when Sigma_B = sigma_b^2 I and
    None otherwise; downstream closed forms that require iid noise key off it.
    """

    mu_B: np.ndarray
    Sigma_B: np.ndarray
    iid_sigma: float = None

    def __post_init__(self):
        mu = np.asarray(self.mu_B, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        if mu.ndim != 2:
            raise DimensionMismatch("mu_B must be an N x M matrix")
        S = ensure_psd(np.asarray(self.Sigma_B, dtype=float), "Sigma_B")
        if S.shape != (mu.size, mu.size):
            raise DimensionMismatch(
                f"Sigma_B must be {mu.size} x {mu.size} for mu_B {mu.shape}"
            )
        object.__setattr__(self, "mu_B", mu)
        object.__setattr__(self, "Sigma_B", S)
        if self.iid_sigma is None:
            object.__setattr__(self, "iid_sigma", _detect_iid(S))

    @classmethod
    def from_iid(cls, mu_B, sigma_b: float) -> "MeasurementDistribution":
        """Independent identical noise sigma_b on every probe reading."""
        mu = np.asarray(mu_B, dtype=float)
        if sigma_b < 0.0:
            raise InvalidParams("sigma_b must be nonnegative")
        return cls(mu, sigma_b**2 * np.eye(mu.size), float(sigma_b))

    @classmethod
    def from_diagonal(cls, mu_B, sigma) -> "MeasurementDistribution":
        """Independent noise with one sigma per probe, in vec (column) order."""
        mu = np.asarray(mu_B, dtype=float)
        sigma = np.asarray(sigma, dtype=float).ravel()
        if sigma.size != mu.size:
            raise DimensionMismatch("need one sigma per measurement")
        if np.any(sigma < 0.0):
            raise InvalidParams("sigmas must be nonnegative")
        return cls(mu, np.diag(sigma**2))

    @classmethod
    def from_correlation(cls, mu_B, sigma, rho) -> "MeasurementDistribution":
        """Correlated noise Sigma_B = D rho D with D = diag(sigma)."""
        from .efficiency import validate_correlation  # shared validator

        mu = np.asarray(mu_B, dtype=float)
        sigma = np.asarray(sigma, dtype=float).ravel()
        if sigma.size != mu.size:
            raise DimensionMismatch("need one sigma per measurement")
        if np.any(sigma < 0.0):
            raise InvalidParams("sigmas must be nonnegative")
        rho = validate_correlation(np.asarray(rho, dtype=float), mu.size)
        return cls(mu, (sigma[:, None] * rho) * sigma[None, :])

    @property
    def n_rakes(self) -> int:
        return self.mu_B.shape[0]

    @property
    def n_stations(self) -> int:
        return self.mu_B.shape[1]


def _check_meas(model: FourierModel, meas: MeasurementDistribution):
    if (meas.n_rakes, meas.n_stations) != (model.n_rakes, model.n_stations):
        raise DimensionMismatch(
            f"measurements are {meas.n_rakes} x {meas.n_stations}, model expects "
            f"{model.n_rakes} x {model.n_stations}"
        )


def propagate_coefficients(model: FourierModel, meas: MeasurementDistribution, lam: float = 0.0):
    """Moments of the fitted coefficients: (mu_X, Sigma_X)."""
    _check_meas(model, meas)
    P = model.pseudoinverse(lam)
    mu_X = P @ meas.mu_B
    IP = np.kron(np.eye(model.n_stations), P)
    Sigma_X = ensure_psd(IP @ meas.Sigma_B @ IP.T, "Sigma_X")
    return mu_X, Sigma_X


def propagate_field(model: FourierModel, mu_X, Sigma_X):
    """Moments of the fitted values at the rake angles: (mu_F, Sigma_F)."""
    mu_X = np.asarray(mu_X, dtype=float)
    if mu_X.shape != (model.n_coeffs, model.n_stations):
        raise DimensionMismatch("mu_X has the wrong shape for this model")
    IA = np.kron(np.eye(model.n_stations), model.A)
    mu_F = model.A @ mu_X
    Sigma_F = ensure_psd(IA @ np.asarray(Sigma_X, dtype=float) @ IA.T, "Sigma_F")
    return mu_F, Sigma_F


def residual_moments(model: FourierModel, meas: MeasurementDistribution, mu_F, lam: float = 0.0):
    """Moments of the fit residual R = F - B: (mu_R, Sigma_R)."""
    _check_meas(model, meas)
    mu_F = np.asarray(mu_F, dtype=float)
    if mu_F.shape != meas.mu_B.shape:
        raise DimensionMismatch("mu_F has the wrong shape for these measurements")
    K = model.A @ model.pseudoinverse(lam) - np.eye(model.n_rakes)
    IK = np.kron(np.eye(model.n_stations), K)
    mu_R = mu_F - meas.mu_B
    Sigma_R = ensure_psd(IK @ meas.Sigma_B @ IK.T, "Sigma_R")
    return mu_R, Sigma_R


@dataclass(frozen=True)
class FieldDistribution:
    """All propagated Gaussian moments for one model and measurement set."""

    mu_X: np.ndarray
    Sigma_X: np.ndarray
    mu_F: np.ndarray
    Sigma_F: np.ndarray
    mu_R: np.ndarray
    Sigma_R: np.ndarray
    iid_sigma: float
    lambda_used: float

    @classmethod
    def from_measurements(
        cls, model: FourierModel, meas: MeasurementDistribution, lam: float = 0.0
    ) -> "FieldDistribution":
        mu_X, Sigma_X = propagate_coefficients(model, meas, lam)
        mu_F, Sigma_F = propagate_field(model, mu_X, Sigma_X)
        mu_R, Sigma_R = residual_moments(model, meas, mu_F, lam)
        return cls(mu_X, Sigma_X, mu_F, Sigma_F, mu_R, Sigma_R, meas.iid_sigma, lam)

    @property
    def n_rakes(self) -> int:
        return self.mu_F.shape[0]

    @property
    def n_stations(self) -> int:
        return self.mu_F.shape[1]


def predictive_moments(
    model: FourierModel,
    field: FieldDistribution,
    r_frac: float,
    theta_deg: float,
    r2_frac: float = None,
    theta2_deg: float = None,
):
    """Mean at (r, theta) and covariance with a second point.

    With the second point omitted it returns (mean, variance) at one
    location. Radii are span fractions in [0, 1]; angles degrees.
    """
    if r2_frac is None:
        r2_frac = r_frac
    if theta2_deg is None:
        theta2_deg = theta_deg
    K, M = model.n_coeffs, model.n_stations
    S4 = np.asarray(field.Sigma_X, dtype=float).reshape(M, K, M, K)
    w1 = model.radial.blend(float(r_frac))
    w2 = model.radial.blend(float(r2_frac))
    a1 = design_row(float(theta_deg), model.harmonics.omega)
    a2 = design_row(float(theta2_deg), model.harmonics.omega)
    mean = float(a1 @ field.mu_X @ w1)
    cov = float(np.einsum("m,k,mknl,n,l->", w1, a1, S4, w2, a2))
    if (r2_frac, theta2_deg) == (r_frac, theta_deg):
        cov = max(cov, 0.0)
    return mean, cov


def predictive_grid(model: FourierModel, field: FieldDistribution, r_fracs, theta_deg):
    """Vectorized predictive mean and variance on an (r, theta) grid.

    Returns two arrays of shape (len(r_fracs), len(theta_deg)).
    """
    K, M = model.n_coeffs, model.n_stations
    W = np.atleast_2d(model.radial.blend(np.asarray(r_fracs, dtype=float)))
    A_g = design_row(np.asarray(theta_deg, dtype=float), model.harmonics.omega)
    A_g = np.atleast_2d(A_g)
    mean = W @ field.mu_X.T @ A_g.T
    S4 = np.asarray(field.Sigma_X, dtype=float).reshape(M, K, M, K)
    S_r = np.einsum("ra,abcd,rc->rbd", W, S4, W)
    var = np.einsum("tk,rkl,tl->rt", A_g, S_r, A_g)
    return mean, np.maximum(var, 0.0)
