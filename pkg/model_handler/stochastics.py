"""Seedable random variates for the Gibbs conditionals.

Every stream is a PCG64 generator seeded from ``SeedSequence(seed,
spawn_key=(stream_id, ...))``, so replicate streams are independent by
construction and a given (seed, stream_id) path always replays the same draws.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from eval_checker.custom_exception import NotPositiveDefiniteError, PreconditionError
from model_handler.constant import MAX_REJECTION_ROUNDS, TAIL_MASS_THRESHOLD

# ndtr(-TAIL_CUTOFF) == TAIL_MASS_THRESHOLD
TAIL_CUTOFF = float(-ndtri(TAIL_MASS_THRESHOLD))


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: tuple = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        stream_id = self.stream_id if isinstance(self.stream_id, tuple) else (int(self.stream_id),)
        object.__setattr__(self, "stream_id", tuple(int(s) for s in stream_id))
        sequence = np.random.SeedSequence(int(self.seed) % 2**64, spawn_key=self.stream_id)
        object.__setattr__(self, "generator", np.random.Generator(np.random.PCG64(sequence)))

    def child(self, *stream_id):
        """A new independent stream nested under this one."""
        return RngStream(self.seed, self.stream_id + tuple(int(s) for s in stream_id))


class TruncationRegion(Enum):
    BELOW_ZERO = "below-zero"
    AT_OR_ABOVE_ZERO = "at-or-above-zero"

    @classmethod
    def for_response(cls, x):
        return cls.AT_OR_ABOVE_ZERO if x == 1 else cls.BELOW_ZERO


def _exponential_tail(lower, generator):
    """X ~ N(0,1) | X >= lower for lower > 0, by exponential rejection."""
    lower = np.asarray(lower, dtype=np.float64)
    alpha = 0.5 * (lower + np.sqrt(lower * lower + 4.0))
    out = np.empty_like(lower)
    pending = np.arange(lower.size)
    for _ in range(MAX_REJECTION_ROUNDS):
        if pending.size == 0:
            return out
        a = alpha.ravel()[pending]
        proposal = lower.ravel()[pending] + generator.exponential(1.0 / a)
        accept = generator.random(pending.size) <= np.exp(-0.5 * (proposal - a) ** 2)
        out.ravel()[pending[accept]] = proposal[accept]
        pending = pending[~accept]
    raise PreconditionError("exponential rejection did not terminate")


def _standard_upper(lower, generator):
    """X ~ N(0,1) | X >= lower, inverse-CDF unless the kept mass is tiny."""
    lower = np.asarray(lower, dtype=np.float64)
    out = np.empty_like(lower)
    tail = lower > TAIL_CUTOFF
    if tail.any():
        out[tail] = _exponential_tail(lower[tail], generator)
    body = ~tail
    if body.any():
        # P(X >= x) / P(X >= lower) = u with u in (0, 1]
        u = 1.0 - generator.random(int(body.sum()))
        out[body] = -ndtri(u * ndtr(-lower[body]))
    return np.maximum(out, lower)


def truncated_normal(mean, upper_region, generator, sd=1.0):
    """Vectorised draws; ``upper_region`` is True where the region is [0, inf)."""
    mean = np.asarray(mean, dtype=np.float64)
    upper_region = np.broadcast_to(np.asarray(upper_region, dtype=bool), mean.shape)
    sd = np.broadcast_to(np.asarray(sd, dtype=np.float64), mean.shape)
    # Both sides reduce to an upper-tail draw: Z < 0 is -(Z') with Z' >= 0.
    sign = np.where(upper_region, 1.0, -1.0)
    standard = _standard_upper((-sign * mean / sd).ravel(), generator).reshape(mean.shape)
    z = sign * (sign * mean + sd * standard)
    below_limit = np.nextafter(0.0, -1.0)
    return np.where(upper_region, np.maximum(z, 0.0), np.minimum(z, below_limit))


def draw_truncated_normal(mean, sd, region, rng):
    if not sd > 0:
        raise PreconditionError(f"sd must be positive, got {sd}")
    region = TruncationRegion(region)
    upper = region is TruncationRegion.AT_OR_ABOVE_ZERO
    return float(truncated_normal(np.array([mean]), np.array([upper]), rng.generator, sd)[0])


def draw_inverse_gamma(shape, scale, rng):
    """1 / g with g ~ Gamma(shape, rate=scale); broadcasts over array arguments."""
    shape = np.asarray(shape, dtype=np.float64)
    scale = np.asarray(scale, dtype=np.float64)
    if not ((shape > 0).all() and (scale > 0).all()):
        raise PreconditionError(f"inverse gamma needs shape > 0 and scale > 0, got ({shape}, {scale})")
    draw = 1.0 / rng.generator.gamma(shape, 1.0 / scale)
    return float(draw) if np.ndim(draw) == 0 else draw


def first_failing_minor(matrix):
    for order in range(1, matrix.shape[0] + 1):
        try:
            np.linalg.cholesky(matrix[:order, :order])
        except np.linalg.LinAlgError:
            return order
    return matrix.shape[0]


def cholesky_factor(matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise PreconditionError(f"covariance must be square, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=1e-10, atol=1e-12):
        raise NotPositiveDefiniteError(first_failing_minor(0.5 * (matrix + matrix.T)))
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(first_failing_minor(matrix)) from e


def draw_mvn(mean, covariance, rng, size=None):
    mean = np.asarray(mean, dtype=np.float64)
    factor = cholesky_factor(covariance)
    if factor.shape[0] != mean.shape[-1]:
        raise PreconditionError(f"mean has {mean.shape[-1]} entries, covariance is {factor.shape[0]}x{factor.shape[0]}")
    shape = mean.shape if size is None else (size,) + mean.shape
    return mean + rng.generator.standard_normal(shape) @ factor.T


def draw_bernoulli_matrix(probabilities, rng):
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if np.isnan(probabilities).any() or (probabilities < 0).any() or (probabilities > 1).any():
        raise PreconditionError("Bernoulli probabilities must lie in [0, 1]")
    return (rng.generator.random(probabilities.shape) < probabilities).astype(np.int8)
