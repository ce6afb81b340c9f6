"""Multivariate probit with the latent covariance modelled by a Bayesian FPCA.

Each subject's latent vector is z_i = beta + Omega Psi c_i' + eps_i, where
Omega holds 2K cubic B-spline functions evaluated along the (j, k) column
order, Psi (2K x L) are the basis coefficients of the L principal
components and c_i are the subject's scores.

vec() is column-major throughout: vec(Psi) stacks the columns Psi_l, and the
stacked latent deviations of all subjects are (C kron Omega) vec(Psi).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.interpolate import BSpline
from tqdm import tqdm

from eval_checker.custom_exception import (
    DimensionError,
    MissingBlockError,
    NumericalJitterWarning,
    PreconditionError,
    SplineOrderWarning,
)
from model_handler.constant import (
    DEFAULT_A,
    DEFAULT_L_SCORES,
    DEFAULT_XI,
    JITTER,
    LAMBDA_ELL_INIT,
    PSI_INIT_SD,
    SIGMA_EPS2_INIT,
    SPLINE_ORDER,
)
from model_handler.probit_gibbs import (
    ChainRecorder,
    LatentState,
    PenaltyState,
    assemble_chain,
    beta_update_moments,
    check_prior_mean,
    draw_latent,
    initial_beta,
    update_penalty,
)
from model_handler.stochastics import draw_inverse_gamma, draw_mvn


@dataclass(frozen=True)
class BasisSystem:
    Omega: np.ndarray
    P0: np.ndarray
    P2: np.ndarray
    xi: float
    order: int = SPLINE_ORDER
    P: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "P", self.xi * self.P0 + (1.0 - self.xi) * self.P2)

    @property
    def D(self):
        return self.Omega.shape[0]


def _clamped_knots(n_functions, order):
    interior = np.linspace(0.0, 1.0, n_functions - order + 2)[1:-1]
    return np.concatenate([np.zeros(order), interior, np.ones(order)])


def build_basis(K, xi=DEFAULT_XI):
    if K < 1:
        raise PreconditionError(f"K must be positive, got {K}")
    if not 0.0 < xi <= 1.0:
        raise PreconditionError(f"xi must lie in (0, 1], got {xi}")
    D = 2 * K
    order = min(SPLINE_ORDER, D)
    if order < SPLINE_ORDER:
        warnings.warn(
            f"{D} basis functions cannot carry a cubic spline; using order {order} instead",
            SplineOrderWarning,
        )
    knots = _clamped_knots(D, order)
    grid = np.linspace(0.0, 1.0, D)
    Omega = BSpline(knots, np.eye(D), order - 1)(grid)
    if np.linalg.matrix_rank(Omega) < D:
        raise DimensionError(f"basis matrix is rank deficient for K = {K}")
    second_difference = np.diff(np.eye(D), 2, axis=0)
    return BasisSystem(
        Omega=Omega,
        P0=np.eye(D),
        P2=second_difference.T @ second_difference,
        xi=float(xi),
        order=order,
    )


@dataclass
class FpcaState:
    Psi: np.ndarray
    C: np.ndarray
    sigma_eps2: float = SIGMA_EPS2_INIT
    lambda_ell: np.ndarray = None

    def __post_init__(self):
        if self.lambda_ell is None:
            self.lambda_ell = np.full(self.Psi.shape[1], LAMBDA_ELL_INIT)
        if self.Psi.shape[1] != self.C.shape[1] or self.lambda_ell.shape != (self.Psi.shape[1],):
            raise DimensionError(
                f"Psi {self.Psi.shape}, C {self.C.shape} and lambda_ell {self.lambda_ell.shape} disagree on L"
            )
        if not (self.sigma_eps2 > 0 and (self.lambda_ell > 0).all()):
            raise PreconditionError("sigma_eps2 and every lambda_ell must be positive")

    @property
    def Lambda_psi(self):
        return np.diag(1.0 / self.lambda_ell)

    def loadings(self, Omega):
        return Omega @ self.Psi

    def latent_deviation(self, Omega):
        """Row i is Omega Psi c_i' for every subject at once."""
        return self.C @ self.loadings(Omega).T


def score_contribution(Psi, Omega, c_i):
    Psi, Omega, c_i = (np.asarray(a, dtype=np.float64) for a in (Psi, Omega, c_i))
    if Omega.ndim != 2 or Psi.ndim != 2 or c_i.ndim != 1:
        raise DimensionError("Omega and Psi must be matrices and c_i a vector")
    if Omega.shape[1] != Psi.shape[0] or Psi.shape[1] != c_i.shape[0]:
        raise DimensionError(f"cannot form Omega {Omega.shape} Psi {Psi.shape} c_i {c_i.shape}")
    return Omega @ Psi @ c_i


def _cholesky_with_jitter(precision):
    try:
        return linalg.cholesky(precision, lower=True, check_finite=False)
    except linalg.LinAlgError:
        warnings.warn(f"precision matrix of order {precision.shape[0]} is not SPD; adding {JITTER} I", NumericalJitterWarning)
        return linalg.cholesky(precision + JITTER * np.eye(precision.shape[0]), lower=True, check_finite=False)


def _psi_system(resid, C, basis, lambda_ell, sigma_eps2):
    """Precision and linear term of the vec(Psi) conditional."""
    Omega = basis.Omega
    precision = np.kron(C.T @ C, Omega.T @ Omega) / sigma_eps2 + np.kron(np.diag(1.0 / lambda_ell), basis.P)
    linear = (Omega.T @ resid.T @ C).reshape(-1, order="F") / sigma_eps2
    return precision, linear


def psi_update_moments(resid, C, basis, lambda_ell, sigma_eps2):
    """Mean and covariance of vec(Psi) given the residuals Z - W beta."""
    precision, linear = _psi_system(resid, C, basis, np.asarray(lambda_ell, dtype=np.float64), sigma_eps2)
    factor = _cholesky_with_jitter(precision)
    mean = linalg.cho_solve((factor, True), linear, check_finite=False)
    covariance = linalg.cho_solve((factor, True), np.eye(precision.shape[0]), check_finite=False)
    return mean, covariance


def draw_psi(resid, C, basis, lambda_ell, sigma_eps2, rng):
    precision, linear = _psi_system(resid, C, basis, lambda_ell, sigma_eps2)
    factor = _cholesky_with_jitter(precision)
    mean = linalg.cho_solve((factor, True), linear, check_finite=False)
    noise = linalg.solve_triangular(
        factor, rng.generator.standard_normal(mean.shape[0]), lower=True, trans="T", check_finite=False
    )
    return (mean + noise).reshape((basis.D, -1), order="F")


def score_update_moments(resid, loadings, sigma_eps2):
    """Means (n x L) and shared covariance (L x L) of the subject scores."""
    covariance = np.linalg.inv(loadings.T @ loadings / sigma_eps2 + np.eye(loadings.shape[1]))
    covariance = 0.5 * (covariance + covariance.T)
    return resid @ loadings @ covariance / sigma_eps2, covariance


def fpca_beta_moments(Z, state, basis, lambda_inv, prior_mean=None):
    return beta_update_moments(
        Z, lambda_inv, prior_mean, offset=state.latent_deviation(basis.Omega), sigma2=state.sigma_eps2
    )


def fpca_sweep(latent, penalty, state, upper, basis, rng, prior_mean=None, debug=False, sweep=0):
    n, D = upper.shape
    K = D // 2
    deviation = state.latent_deviation(basis.Omega)
    # sigma_z^2 = 1 in the latent draw, whatever the current sigma_eps2.
    latent.Z = draw_latent(latent.beta + deviation, upper, rng, debug, sweep)
    mean, covariance = fpca_beta_moments(latent.Z, state, basis, 1.0 / penalty.lam, prior_mean)
    latent.beta = draw_mvn(mean, covariance, rng)
    update_penalty(latent.beta, penalty, rng, prior_mean)

    resid = latent.Z - latent.beta
    state.Psi = draw_psi(resid, state.C, basis, state.lambda_ell, state.sigma_eps2, rng)
    loadings = state.loadings(basis.Omega)
    score_mean, score_covariance = score_update_moments(resid, loadings, state.sigma_eps2)
    state.C = draw_mvn(score_mean, score_covariance, rng)

    error = resid - state.C @ loadings.T
    state.sigma_eps2 = draw_inverse_gamma(1.0 + n * K, 1.0 + 0.5 * float(np.sum(error * error)), rng)
    quadratic = np.einsum("dl,de,el->l", state.Psi, basis.P, state.Psi)
    state.lambda_ell = draw_inverse_gamma(np.full(state.Psi.shape[1], 2.0 * K), K + 0.5 * quadratic, rng)
    return latent, penalty, state


def initial_fpca_state(n, basis, L_scores, rng):
    return FpcaState(
        Psi=PSI_INIT_SD * rng.generator.standard_normal((basis.D, L_scores)),
        C=np.zeros((n, L_scores)),
    )


def _fpca_chain(table, config, rng, basis, A, L_scores, prior_mean, keep_blocks, desc):
    upper = table.x.astype(bool)
    latent = LatentState(Z=np.zeros(table.x.shape), beta=initial_beta(table))
    penalty = PenaltyState(A=A)
    state = initial_fpca_state(table.n, basis, L_scores, rng)
    recorder = ChainRecorder(config.retained, 2 * table.K)
    for sweep in tqdm(range(config.total_iterations), desc=desc, disable=not config.show_progress, leave=False):
        fpca_sweep(latent, penalty, state, upper, basis, rng, prior_mean, config.debug, sweep)
        slot = config.retained_index(sweep)
        if slot is None:
            continue
        blocks = {
            "lambda": penalty.lam,
            "sigma_eps2": state.sigma_eps2,
            "lambda_ell": state.lambda_ell,
            "psi": state.Psi,
            "loadings": state.loadings(basis.Omega),
        }
        if keep_blocks:
            blocks["scores"] = state.C
        recorder.record(slot, latent.beta, **blocks)
    return recorder


def gibbs_fpca(
    table,
    config,
    rng,
    A=DEFAULT_A,
    L_scores=DEFAULT_L_SCORES,
    xi=DEFAULT_XI,
    prior_mean=None,
    keep_blocks=False,
):
    if not A > 0:
        raise PreconditionError(f"A must be positive, got {A}")
    if L_scores < 1:
        raise PreconditionError(f"at least one score is required, got {L_scores}")
    prior_mean = check_prior_mean(prior_mean, table)
    basis = build_basis(table.K, xi)
    recorders = [
        _fpca_chain(table, config, rng.child(chain), basis, A, L_scores, prior_mean, keep_blocks, f"mvp chain {chain + 1}")
        for chain in range(config.chains)
    ]
    loadings = np.stack([recorder.blocks["loadings"] for recorder in recorders])
    return assemble_chain(
        "mvp",
        table,
        config,
        recorders,
        {"A": A, "L_scores": L_scores, "xi": xi, "spline_order": basis.order},
        latent_scale=marginal_latent_scale(loadings),
    )


def marginal_latent_scale(loadings):
    """sd of each latent coordinate once the scores are integrated out.

    With c_i ~ N(0, I) and unit noise in the latent draw, z_ijk has variance
    1 + (Omega Psi Psi' Omega')_jj, so theta_jk = Phi(beta_jk / sd_jk).
    """
    return np.sqrt(1.0 + np.sum(np.square(loadings), axis=-1))


def latent_covariance_summary(chain):
    """Posterior mean of Omega Psi Psi' Omega' + sigma_eps2 I."""
    for name in ("loadings", "sigma_eps2"):
        if not chain.has_block(name):
            raise MissingBlockError(name, chain.model)
    loadings = chain.pooled("loadings")
    summary = np.einsum("rdl,rel->de", loadings, loadings) / loadings.shape[0]
    summary += chain.pooled("sigma_eps2").mean() * np.eye(loadings.shape[1])
    return 0.5 * (summary + summary.T)
