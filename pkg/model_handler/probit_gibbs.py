"""Naive (flat prior) and penalized (half-Cauchy shrinkage) Gibbs samplers for
the saturated MMP probit model z_ijk = beta_jk + eps_ijk.

The design matrix W is a stack of 2K x 2K identities, one per subject, so it is
never built: W'W = n I and W'Z is the vector of column sums of Z.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri
from tqdm import tqdm

from eval_checker.custom_exception import PreconditionError, SignPatternError
from model_handler.constant import (
    DEFAULT_A,
    DEFAULT_BURN_IN,
    DEFAULT_CHAINS,
    DEFAULT_ITERATIONS,
    DEFAULT_SEED,
    DEFAULT_THINNING,
    LAMBDA_INIT,
    MU_INIT,
    SIGMA_Z2,
)
from model_handler.mmp_table import rho_from_beta
from model_handler.posterior import PosteriorChain
from model_handler.stochastics import draw_inverse_gamma, draw_mvn, truncated_normal


@dataclass(frozen=True)
class SamplerConfig:
    total_iterations: int = DEFAULT_ITERATIONS
    burn_in: int = DEFAULT_BURN_IN
    thinning: int = DEFAULT_THINNING
    chains: int = DEFAULT_CHAINS
    seed: int = DEFAULT_SEED
    debug: bool = False
    show_progress: bool = False

    def __post_init__(self):
        if self.burn_in < 0 or self.burn_in >= self.total_iterations:
            raise PreconditionError(
                f"burn-in ({self.burn_in}) must be nonnegative and below the total iterations ({self.total_iterations})"
            )
        if self.thinning < 1 or (self.total_iterations - self.burn_in) % self.thinning != 0:
            raise PreconditionError(
                f"thinning ({self.thinning}) must be positive and divide the {self.total_iterations - self.burn_in} post-burn-in sweeps"
            )
        if self.chains < 1:
            raise PreconditionError(f"at least one chain is required, got {self.chains}")

    @property
    def retained(self):
        return (self.total_iterations - self.burn_in) // self.thinning

    def retained_index(self, sweep):
        """Slot of ``sweep`` in the retained draws, or None if it is discarded."""
        offset = sweep - self.burn_in
        if offset < 0 or offset % self.thinning != 0:
            return None
        return offset // self.thinning

    def as_dict(self):
        return asdict(self)


@dataclass
class LatentState:
    Z: np.ndarray
    beta: np.ndarray
    sigma_z2: float = SIGMA_Z2


@dataclass
class PenaltyState:
    lam: float = LAMBDA_INIT
    mu: float = MU_INIT
    A: float = DEFAULT_A

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0 and self.A > 0):
            raise PreconditionError(f"lambda, mu and A must be positive, got ({self.lam}, {self.mu}, {self.A})")


@dataclass
class ChainRecorder:
    """Preallocated storage for one chain's retained draws."""

    retained: int
    D: int
    beta: np.ndarray = field(init=False)
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.beta = np.empty((self.retained, self.D))

    def record(self, slot, beta, **blocks):
        self.beta[slot] = beta
        for name, value in blocks.items():
            if name not in self.blocks:
                self.blocks[name] = np.empty((self.retained,) + np.shape(value))
            self.blocks[name][slot] = value


def initial_beta(table):
    """Phi^-1 of the column means, clamped to [1/(2n), 1 - 1/(2n)]."""
    low = 1.0 / (2 * table.n)
    return ndtri(np.clip(table.column_means(), low, 1.0 - low))


def check_sign_pattern(Z, upper, sweep):
    violations = int(np.count_nonzero((Z >= 0) != upper))
    if violations:
        raise SignPatternError(sweep, violations)


def draw_latent(mean, upper, rng, debug=False, sweep=0):
    """z_ijk ~ N(mean_ijk, 1) truncated to the side fixed by x_ijk."""
    Z = truncated_normal(mean, upper, rng.generator)
    if debug:
        check_sign_pattern(Z, upper, sweep)
    return Z


def beta_update_moments(Z, lambda_inv, prior_mean=None, offset=None, sigma2=SIGMA_Z2):
    """Moments of the block beta conditional.

    covariance = (n / sigma2 + lambda_inv)^-1 I and
    mean = covariance (colsum(Z - offset) / sigma2 + lambda_inv m).
    With lambda_inv = 0 this is the flat-prior update N(colmeans(Z), I / n).
    """
    Z = np.asarray(Z, dtype=np.float64)
    if not np.isfinite(Z).all():
        raise PreconditionError("latent matrix must be finite")
    n, D = Z.shape
    precision = n / sigma2 + lambda_inv
    resid = Z if offset is None else Z - offset
    score = resid.sum(axis=0) / sigma2
    if prior_mean is not None:
        score = score + lambda_inv * np.asarray(prior_mean, dtype=np.float64)
    return score / precision, np.eye(D) / precision


def update_penalty(beta, penalty, rng, prior_mean=None):
    """lambda | beta, mu then mu | lambda for the half-Cauchy mixture."""
    K = beta.shape[0] / 2
    deviation = beta if prior_mean is None else beta - prior_mean
    penalty.lam = draw_inverse_gamma(K + 0.5, 1.0 / penalty.mu + 0.5 * float(deviation @ deviation), rng)
    penalty.mu = draw_inverse_gamma(1.0, 1.0 / penalty.A**2 + 1.0 / penalty.lam, rng)
    return penalty


def probit_sweep(latent, upper, rng, penalty=None, prior_mean=None, debug=False, sweep=0):
    """One Gibbs sweep; ``penalty=None`` gives the flat-prior sampler."""
    n = upper.shape[0]
    latent.Z = draw_latent(np.broadcast_to(latent.beta, (n, latent.beta.shape[0])), upper, rng, debug, sweep)
    lambda_inv = 0.0 if penalty is None else 1.0 / penalty.lam
    mean, covariance = beta_update_moments(latent.Z, lambda_inv, prior_mean)
    latent.beta = draw_mvn(mean, covariance, rng)
    if penalty is not None:
        update_penalty(latent.beta, penalty, rng, prior_mean)
    return latent


def _probit_chain(table, config, rng, penalized, A, prior_mean, desc):
    upper = table.x.astype(bool)
    # The first sweep's z-draw at beta0 is the initial latent matrix Z0.
    latent = LatentState(Z=np.zeros(table.x.shape), beta=initial_beta(table))
    penalty = PenaltyState(A=A) if penalized else None
    recorder = ChainRecorder(config.retained, 2 * table.K)
    for sweep in tqdm(range(config.total_iterations), desc=desc, disable=not config.show_progress, leave=False):
        probit_sweep(latent, upper, rng, penalty, prior_mean, config.debug, sweep)
        slot = config.retained_index(sweep)
        if slot is not None:
            if penalized:
                recorder.record(slot, latent.beta, **{"lambda": penalty.lam})
            else:
                recorder.record(slot, latent.beta)
    return recorder


def assemble_chain(model, table, config, recorders, extra_config=None, latent_scale=None):
    """Stacks per-chain recorders into a PosteriorChain.

    ``latent_scale`` holds the marginal latent sd per draw (chains, retained, 2K);
    theta is then Phi(beta / latent_scale) rather than Phi(beta).
    """
    beta = np.stack([recorder.beta for recorder in recorders])
    standardized = beta if latent_scale is None else beta / latent_scale
    blocks = {}
    for name in recorders[0].blocks:
        blocks[name] = np.stack([recorder.blocks[name] for recorder in recorders])
    echo = config.as_dict()
    echo["model"] = model
    echo.update(extra_config or {})
    return PosteriorChain(
        model=model,
        set_labels=table.set_labels,
        rho=rho_from_beta(standardized).rho,
        beta=beta,
        blocks=blocks,
        config=echo,
    )


def check_prior_mean(prior_mean, table):
    if prior_mean is None:
        return None
    prior_mean = np.asarray(prior_mean, dtype=np.float64)
    if prior_mean.shape != (2 * table.K,) or not np.isfinite(prior_mean).all():
        raise PreconditionError(f"prior mean must be a finite vector of length {2 * table.K}")
    return prior_mean


def gibbs_naive(table, config, rng):
    recorders = [
        _probit_chain(table, config, rng.child(chain), False, DEFAULT_A, None, f"naive chain {chain + 1}")
        for chain in range(config.chains)
    ]
    return assemble_chain("naive", table, config, recorders)


def gibbs_penalized(table, config, rng, A=DEFAULT_A, prior_mean=None):
    if not A > 0:
        raise PreconditionError(f"A must be positive, got {A}")
    prior_mean = check_prior_mean(prior_mean, table)
    recorders = [
        _probit_chain(table, config, rng.child(chain), True, A, prior_mean, f"penalized chain {chain + 1}")
        for chain in range(config.chains)
    ]
    return assemble_chain("penalized", table, config, recorders, {"A": A})
