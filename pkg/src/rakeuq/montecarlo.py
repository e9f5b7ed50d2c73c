"""Seeded Monte Carlo engine and the two sampling studies built on it.

Everything here is deterministic for a fixed seed and sample count: batches
draw from generators spawned off one seed sequence and are reduced in a fixed
order, so results are bit-identical whether batches run serially or on the
thread pool capped by the RAKEUQ_THREADS environment variable.

Three drivers sit on the shared sampler:

* ``mc_propagate_model`` pushes measurement noise through the fixed linear
  fit map and returns empirical moments of coefficients, fitted values,
  residuals, the sampling metric and a predictive grid. It is the sampling
  cross-check for the closed-form Gaussian propagation.
* ``frequency_scan`` ranks every unordered harmonic pair by the expected
  sampling metric, walking the ridge ladder where a pair is ill-conditioned.
* ``rake_position_mc`` perturbs the rake angles themselves, refitting every
  draw, to expose how uncertain rake placement moves the reconstruction.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    DimensionMismatch,
    DrawFailed,
    InvalidParams,
    NotPSD,
    RegularizationExhausted,
    SingularDesign,
)
from .fourier import (
    FourierModel,
    HarmonicSet,
    build_design_matrix,
    coefficient_norm,
    design_matrix,
    fit,
    qr_solve,
    ridge_solve,
)
from .geometry import AnnulusGeometry
from .propagation import FieldDistribution, MeasurementDistribution, unvec
from .residuals import chi_square_params, error_moments

BATCH = 8192


@dataclass(frozen=True)
class SamplerConfig:
    """Seed, sample count and antithetic switch for one Monte Carlo run."""

    seed: int
    n_samples: int
    antithetic: bool = False

    def __post_init__(self):
        if int(self.n_samples) < 2:
            raise InvalidParams("need at least two samples")
        if int(self.seed) < 0:
            raise InvalidParams("seed must be nonnegative")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "n_samples", int(self.n_samples))


def _worker_count() -> int:
    raw = os.environ.get("RAKEUQ_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_batches(fn, args_list):
    """Evaluate batches, possibly concurrently, preserving batch order."""
    workers = _worker_count()
    if workers <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda args: fn(*args), args_list))


def _batch_plan(config: SamplerConfig):
    """Spawned child seeds and batch sizes; independent of thread count."""
    n = config.n_samples
    n_batches = max(1, math.ceil(n / BATCH))
    sizes = [BATCH] * (n_batches - 1) + [n - BATCH * (n_batches - 1)]
    children = np.random.SeedSequence(config.seed).spawn(n_batches)
    return children, sizes


def psd_factor(cov) -> np.ndarray:
    """Matrix L with cov = L L^T: Cholesky, or an eigen factor when cov is
    only semidefinite. Raises NotPSD for meaningfully negative eigenvalues."""
    cov = np.asarray(cov, dtype=float)
    cov = 0.5 * (cov + cov.T)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(cov)
        tol = 1e-10 * max(float(np.trace(cov)), 0.0)
        if evals[0] < -max(tol, 1e-300):
            raise NotPSD(
                f"covariance eigenvalue {evals[0]:.3e} is negative beyond tolerance"
            ) from None
        return evecs * np.sqrt(np.maximum(evals, 0.0))


def _standard_draws(rng, n: int, dim: int, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal((n, dim))
    half = (n + 1) // 2
    z = rng.standard_normal((half, dim))
    return np.concatenate([z, -z], axis=0)[:n]


def sample_mvn(mean, cov, config: SamplerConfig) -> np.ndarray:
    """Draw config.n_samples rows from N(mean, cov); bitwise seed-stable."""
    mean = np.asarray(mean, dtype=float).ravel()
    L = psd_factor(cov)
    if L.shape[0] != mean.size:
        raise DimensionMismatch("mean and covariance sizes differ")
    rng = np.random.default_rng(config.seed)
    z = _standard_draws(rng, config.n_samples, mean.size, config.antithetic)
    return mean + z @ L.T


@dataclass(frozen=True)
class McPropagation:
    """Empirical moments from sampling the measurement distribution."""

    n_samples: int
    mu_X: np.ndarray
    Sigma_X: np.ndarray
    mu_F: np.ndarray
    Sigma_F: np.ndarray
    mu_R: np.ndarray
    Sigma_R: np.ndarray
    eps_mean: float
    eps_var: float
    eps_mean_se: float
    eps_var_se: float
    eps_samples: np.ndarray
    r_fracs: np.ndarray
    theta_grid_deg: np.ndarray
    grid_mean: np.ndarray
    grid_var: np.ndarray
    grid_mean_se: np.ndarray


def mc_propagate_model(
    model: FourierModel,
    meas: MeasurementDistribution,
    config: SamplerConfig,
    *,
    lam: float = 0.0,
    r_fracs=None,
    theta_grid_deg=None,
) -> McPropagation:
    """Sample measurements and push each draw through the fixed fit map.

    Every draw uses the pseudoinverse for the given lambda (default the
    unregularized fit), matching the linear map behind the closed forms this
    function cross-checks; the ridge ladder is deliberately not walked here.
    """
    if (meas.n_rakes, meas.n_stations) != (model.n_rakes, model.n_stations):
        raise DimensionMismatch("measurement shape does not match the model")
    if config.n_samples < 2:
        raise InvalidParams("empirical covariances need at least two samples")
    P = model.pseudoinverse(lam)
    A = model.A
    N, M, K = model.n_rakes, model.n_stations, model.n_coeffs
    NM = N * M
    mu_vec = meas.mu_B.reshape(-1, order="F")
    L = psd_factor(meas.Sigma_B)
    if r_fracs is None:
        r_fracs = model.geometry.r_stations
    if theta_grid_deg is None:
        theta_grid_deg = np.arange(0.0, 360.0, 10.0)
    r_fracs = np.atleast_1d(np.asarray(r_fracs, dtype=float))
    theta_grid_deg = np.atleast_1d(np.asarray(theta_grid_deg, dtype=float))
    W = np.atleast_2d(model.radial.blend(r_fracs))
    A_g = design_matrix(theta_grid_deg, model.harmonics.omega)

    def push(vb):
        size = vb.shape[0]
        B = vb.reshape(size, M, N).transpose(0, 2, 1)
        X = P @ B
        F = A @ X
        R = F - B
        Xv = X.transpose(0, 2, 1).reshape(size, K * M)
        Fv = F.transpose(0, 2, 1).reshape(size, NM)
        Rv = R.transpose(0, 2, 1).reshape(size, NM)
        eps = np.einsum("bnm,bnm->b", R, R) / NM
        T = np.einsum("rm,bkm,tk->brt", W, X, A_g)
        return Xv, Fv, Rv, eps, T

    # Reference trajectory of the mean measurement. Accumulating deviations
    # from it keeps the running sums well conditioned, and makes degenerate
    # cases (Sigma_B = 0) come out as exact zeros instead of roundoff noise.
    Xv0, Fv0, Rv0, _, T0 = push(mu_vec[None, :])
    Xv0, Fv0, Rv0, T0 = Xv0[0], Fv0[0], Rv0[0], T0[0]

    def run_batch(seed_child, size):
        rng = np.random.default_rng(seed_child)
        z = _standard_draws(rng, size, NM, config.antithetic)
        Xv, Fv, Rv, eps, T = push(mu_vec + z @ L.T)
        dX, dF, dR, dT = Xv - Xv0, Fv - Fv0, Rv - Rv0, T - T0
        return (
            dX.sum(axis=0), dX.T @ dX,
            dF.sum(axis=0), dF.T @ dF,
            dR.sum(axis=0), dR.T @ dR,
            eps, dT.sum(axis=0), np.einsum("brt,brt->rt", dT, dT),
        )

    children, sizes = _batch_plan(config)
    results = _map_batches(run_batch, list(zip(children, sizes)))

    n = config.n_samples
    n_grid = (W.shape[0], A_g.shape[0])
    sums = [np.zeros(K * M), np.zeros((K * M, K * M)),
            np.zeros(NM), np.zeros((NM, NM)),
            np.zeros(NM), np.zeros((NM, NM)),
            np.zeros(n_grid), np.zeros(n_grid)]
    eps_parts = []
    for res in results:
        for acc, idx in zip(sums, (0, 1, 2, 3, 4, 5, 7, 8)):
            acc += res[idx]
        eps_parts.append(res[6])
    eps = np.concatenate(eps_parts)

    def moments(ref, s1, s2):
        cov = (s2 - np.outer(s1, s1) / n) / (n - 1)
        return ref + s1 / n, 0.5 * (cov + cov.T)

    mu_x, cov_x = moments(Xv0, sums[0], sums[1])
    mu_f, cov_f = moments(Fv0, sums[2], sums[3])
    mu_r, cov_r = moments(Rv0, sums[4], sums[5])
    grid_mean = T0 + sums[6] / n
    grid_var = (sums[7] - sums[6] ** 2 / n) / (n - 1)
    grid_var = np.maximum(grid_var, 0.0)
    eps_mean = float(eps.mean())
    eps_var = float(eps.var(ddof=1))
    centered = eps - eps_mean
    m4 = float((centered**4).mean())
    return McPropagation(
        n_samples=n,
        mu_X=unvec(mu_x, K, M), Sigma_X=cov_x,
        mu_F=unvec(mu_f, N, M), Sigma_F=cov_f,
        mu_R=unvec(mu_r, N, M), Sigma_R=cov_r,
        eps_mean=eps_mean,
        eps_var=eps_var,
        eps_mean_se=float(np.sqrt(eps_var / n)),
        eps_var_se=float(np.sqrt(max(m4 - eps_var**2, 0.0) / n)),
        eps_samples=eps,
        r_fracs=r_fracs,
        theta_grid_deg=theta_grid_deg,
        grid_mean=grid_mean,
        grid_var=grid_var,
        grid_mean_se=np.sqrt(grid_var / n),
    )


@dataclass(frozen=True)
class ScanEntry:
    """One harmonic pair's expected sampling metric under iid noise."""

    omega: tuple
    lambda_used: float
    mean_eps: float
    cond_AtA: float
    flagged: bool


@dataclass(frozen=True)
class FrequencyScanResult:
    """All unordered harmonic pairs, best (smallest mean_eps) first."""

    entries: tuple
    sigma_b: float
    max_freq: int

    @property
    def best(self) -> ScanEntry:
        return self.entries[0]


def frequency_scan(
    geometry: AnnulusGeometry,
    mu_B,
    sigma_b: float,
    *,
    max_freq: int = 10,
    beta: float = None,
    lambda_ladder=None,
    radial_basis: str = "cubic",
) -> FrequencyScanResult:
    """Rank every unordered harmonic pair by expected sampling metric.

    Fits the mean measurements for each pair (w1, w2), w1 < w2 <= max_freq,
    walking the ridge ladder when needed, then evaluates the closed-form
    mu(eps_p^2) under iid noise sigma_b. Pairs whose ladder is exhausted are
    flagged and sort last with mean_eps = inf rather than being dropped.
    """
    if max_freq < 2:
        raise InvalidParams("max_freq must be at least 2")
    if sigma_b <= 0.0:
        raise InvalidParams("sigma_b must be positive")
    mu_B = np.asarray(mu_B, dtype=float)
    if mu_B.ndim == 1:
        mu_B = mu_B[:, None]
    meas = MeasurementDistribution.from_iid(mu_B, sigma_b)
    build_kwargs = {"radial_basis": radial_basis}
    if beta is not None:
        build_kwargs["beta"] = beta
    if lambda_ladder is not None:
        build_kwargs["lambda_ladder"] = lambda_ladder
    entries = []
    for pair in combinations(range(1, max_freq + 1), 2):
        cond = math.inf
        try:
            model = build_design_matrix(geometry, HarmonicSet(pair), **build_kwargs)
            cond = model.cond_AtA
            coeffs = fit(model, mu_B)
            field = FieldDistribution.from_measurements(model, meas, coeffs.lambda_used)
            params = chi_square_params(field)
            mean_eps, _ = error_moments(params, meas.n_rakes, meas.n_stations, sigma_b)
            entries.append(ScanEntry(pair, coeffs.lambda_used, mean_eps, cond, False))
        except (RegularizationExhausted, SingularDesign):
            entries.append(ScanEntry(pair, None, math.inf, cond, True))
    entries.sort(key=lambda e: (e.mean_eps, e.omega))
    return FrequencyScanResult(tuple(entries), float(sigma_b), int(max_freq))


@dataclass(frozen=True)
class RakeMCResult:
    """Per-draw fits and grid statistics under rake-placement scatter."""

    coefficients: np.ndarray  # (n_ok, 2k+1, M), draw order, failures removed
    lambdas: np.ndarray  # ridge penalty used per kept draw
    theta_pred_deg: np.ndarray
    grid_mean: np.ndarray  # (n_prediction, M)
    grid_var: np.ndarray
    n_draws: int
    n_failed: int


def _fit_batch(model: FourierModel, A_stack: np.ndarray, B: np.ndarray):
    """Fit every design in a stack, walking the ladder for bad slices.

    Returns (X (b, K, M), lambdas (b,), ok mask (b,)).
    """
    size = A_stack.shape[0]
    K = A_stack.shape[-1]
    M = B.shape[-1]
    X = np.full((size, K, M), np.nan)
    lambdas = np.zeros(size)
    batched_failed = None
    try:
        X[:] = qr_solve(A_stack, B)
    except np.linalg.LinAlgError:
        batched_failed = True
    if batched_failed:
        # Some slice was exactly singular; do the plain solve slice by slice.
        for i in range(size):
            try:
                X[i] = qr_solve(A_stack[i], B)
            except np.linalg.LinAlgError:
                X[i] = np.nan
    finite = np.isfinite(X).all(axis=(1, 2))
    norms = np.full(size, np.inf)
    if np.any(finite):
        sv = np.linalg.svd(X[finite], compute_uv=False)
        norms[finite] = sv[..., 0]
    ok = norms < model.beta
    for i in np.nonzero(~ok)[0]:
        for lam in model.lambda_ladder:
            try:
                cand = ridge_solve(A_stack[i], B, lam)
            except np.linalg.LinAlgError:
                continue
            if coefficient_norm(cand) < model.beta:
                X[i] = cand
                lambdas[i] = lam
                ok[i] = True
                break
    return X, lambdas, ok


def rake_position_mc(
    model: FourierModel,
    B,
    sigma_theta,
    config: SamplerConfig,
    *,
    mu_theta_deg=None,
    n_prediction: int = 360,
    max_failure_fraction: float = 0.01,
) -> RakeMCResult:
    """Propagate rake-placement scatter by refitting perturbed angle draws.

    ``sigma_theta`` is either a scalar standard deviation in degrees (iid
    across rakes) or a full N x N covariance. Each draw wraps its angles into
    [0, 360), rebuilds the design matrix and fits the fixed measurement
    matrix B through the usual norm guard and ridge ladder; draws whose
    ladder is exhausted are dropped and counted, and the run aborts with
    DrawFailed when more than ``max_failure_fraction`` of draws fail.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.shape != (model.n_rakes, model.n_stations):
        raise DimensionMismatch("B must be N x M for this model")
    N = model.n_rakes
    mu_theta = (
        model.geometry.theta_deg
        if mu_theta_deg is None
        else np.asarray(mu_theta_deg, dtype=float)
    )
    if mu_theta.shape != (N,):
        raise DimensionMismatch("mu_theta_deg must have one angle per rake")
    Sigma_theta = np.asarray(sigma_theta, dtype=float)
    if Sigma_theta.ndim == 0:
        if Sigma_theta < 0.0:
            raise InvalidParams("sigma_theta must be nonnegative")
        Sigma_theta = float(Sigma_theta) ** 2 * np.eye(N)
    if Sigma_theta.shape != (N, N):
        raise DimensionMismatch("Sigma_theta must be N x N")
    L = psd_factor(Sigma_theta)
    if n_prediction < 1:
        raise InvalidParams("need at least one prediction angle")
    theta_pred = np.arange(n_prediction) * (360.0 / n_prediction)
    omega = model.harmonics.omega
    A_pred = design_matrix(theta_pred, omega)

    # Prediction of the fit at the nominal angles, used as the accumulation
    # origin. Deviations from it sum to exactly zero when Sigma_theta = 0,
    # so the degenerate case reproduces the deterministic fit bit for bit.
    X_nom, _, ok_nom = _fit_batch(model, design_matrix(mu_theta, omega)[None], B)
    G_ref = A_pred @ X_nom[0] if ok_nom[0] else np.zeros((n_prediction, model.n_stations))

    def run_batch(seed_child, size):
        rng = np.random.default_rng(seed_child)
        z = _standard_draws(rng, size, N, config.antithetic)
        thetas = np.mod(mu_theta + z @ L.T, 360.0)
        A_stack = design_matrix(thetas, omega)
        X, lambdas, ok = _fit_batch(model, A_stack, B)
        X_ok = X[ok]
        # matmul broadcasts to (n_ok, P, M), applying the same kernel per
        # slice as the deterministic station_predictions path.
        D = A_pred @ X_ok - G_ref
        return (
            X_ok,
            lambdas[ok],
            int(np.sum(~ok)),
            D.sum(axis=0),
            np.einsum("bpm,bpm->pm", D, D),
        )

    children, sizes = _batch_plan(config)
    results = _map_batches(run_batch, list(zip(children, sizes)))

    slices = [r[0] for r in results]
    lambdas = np.concatenate([r[1] for r in results])
    n_failed = sum(r[2] for r in results)
    s1 = sum(r[3] for r in results)
    s2 = sum(r[4] for r in results)
    n = config.n_samples
    if n_failed > max_failure_fraction * n or n_failed == n:
        raise DrawFailed(
            f"{n_failed} of {n} rake-position draws failed to fit "
            f"(> {max_failure_fraction:.0%})"
        )
    n_ok = n - n_failed
    coeffs = np.concatenate(slices, axis=0) if slices else np.empty((0, model.n_coeffs, model.n_stations))
    grid_mean = G_ref + s1 / n_ok
    grid_var = np.maximum((s2 - s1**2 / n_ok) / max(n_ok - 1, 1), 0.0)
    return RakeMCResult(
        coefficients=coeffs,
        lambdas=lambdas,
        theta_pred_deg=theta_pred,
        grid_mean=grid_mean,
        grid_var=grid_var,
        n_draws=n,
        n_failed=n_failed,
    )


def efficiency_mc(state, config: SamplerConfig):
    """Sample the five-parameter state and evaluate the exact efficiency.

    Returns (mean, sigma, sigma standard error). The draws go through the
    full nonlinear formula, not the first-order expansion, so this doubles
    as a linearization check.
    """
    from .efficiency import StationState, efficiency

    if not isinstance(state, StationState):
        raise InvalidParams("state must be a StationState")
    draws = sample_mvn(state.z, state.covariance, config)
    eta = efficiency(draws)
    sigma = float(np.std(eta, ddof=1))
    se = sigma / math.sqrt(2.0 * (config.n_samples - 1))
    return float(np.mean(eta)), sigma, se
