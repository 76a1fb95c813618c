"""Per-event occurrence distributions over fixed-length documents.

Each event (word or word pair) gets a distribution over how many times it
occurs in a document of exactly N tokens: Poisson for constant-rate events,
negative binomial (a Poisson whose rate is gamma distributed across
documents) for bursty ones.  Profiles tabulate the pmf truncated to 0..N
together with suffix sums, which is what the conditional estimators consume.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

logger = logging.getLogger(__name__)

# Overdispersion below this relative excess is treated as sampling noise and
# the event stays Poisson.
FIT_EPSILON = 1e-9

# Profiles whose truncated mass loses more than this get a diagnostic warning.
TRUNCATION_WARN = 0.01


class ParameterError(ValueError):
    """Invalid distribution parameters."""


class UnobservedEventError(ValueError):
    """Raised when asked to fit a distribution to an event that never occurs."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to converge to the requested accuracy."""


@dataclass(frozen=True)
class PoissonParams:
    """Constant-rate occurrence model; lam is the expected count per document."""

    lam: float

    def __post_init__(self) -> None:
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ParameterError(f"Poisson rate must be positive and finite: {self.lam}")


@dataclass(frozen=True)
class NegBinParams:
    """Gamma-mixed Poisson: rate ~ Gamma(shape=alpha, scale=beta).

    Mean alpha*beta, variance alpha*beta*(beta+1); beta -> 0 recovers Poisson.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"shape must be positive and finite: {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ParameterError(f"scale must be positive and finite: {self.beta}")


@dataclass(frozen=True)
class PointMassParams:
    """Degenerate distribution putting all mass on one count.

    Only produced as a last-resort profile fallback when a fitted pmf
    underflows everywhere on 0..N.
    """

    value: int

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ParameterError(f"point mass must sit on a nonnegative count: {self.value}")


RateDistribution = Union[PoissonParams, NegBinParams, PointMassParams]


# ---------------------------------------------------------------------------
# pmfs

def poisson_log_pmf(x: int, lam: float) -> float:
    if x < 0:
        return -math.inf
    return x * math.log(lam) - lam - math.lgamma(x + 1)


def poisson_pmf(x: int, params: PoissonParams) -> float:
    """P[X = x] for a Poisson occurrence model."""
    return math.exp(poisson_log_pmf(x, params.lam))


def negbin_log_pmf(x: int, alpha: float, beta: float) -> float:
    if x < 0:
        return -math.inf
    # C(alpha+x-1, x) beta^x / (1+beta)^(alpha+x)
    return (
        math.lgamma(alpha + x)
        - math.lgamma(alpha)
        - math.lgamma(x + 1)
        + x * math.log(beta)
        - (alpha + x) * math.log1p(beta)
    )


def negbin_pmf(x: int, params: NegBinParams) -> float:
    """P[X = x] for a gamma-mixed Poisson occurrence model (closed form)."""
    return math.exp(negbin_log_pmf(x, params.alpha, params.beta))


def gamma_pdf(rate: float, alpha: float, beta: float) -> float:
    """Density of the mixing distribution over per-document rates."""
    if rate < 0:
        return 0.0
    if rate == 0.0:
        if alpha < 1:
            raise ParameterError("gamma density diverges at 0 for shape < 1")
        return 0.0 if alpha > 1 else 1.0 / beta
    log_pdf = (
        (alpha - 1) * math.log(rate)
        - rate / beta
        - math.lgamma(alpha)
        - alpha * math.log(beta)
    )
    return math.exp(log_pdf)


def poisson_gamma_mixture_pmf(
    x: int,
    alpha: float,
    beta: float,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
) -> float:
    """Integrate the Poisson pmf against the gamma rate density numerically.

    Mathematically identical to ``negbin_pmf``; kept as an independent route
    so the closed form can be checked against direct integration.  Raises
    QuadratureError when the integrator does not converge.
    """
    if x < 0:
        return 0.0

    def integrand(lam: float) -> float:
        if lam <= 0.0:
            return 0.0
        log_val = (
            x * math.log(lam)
            - lam
            - math.lgamma(x + 1)
            + (alpha - 1) * math.log(lam)
            - lam / beta
            - math.lgamma(alpha)
            - alpha * math.log(beta)
        )
        return math.exp(log_val) if log_val > -745.0 else 0.0

    value, abserr, info, *rest = quad(
        integrand, 0.0, np.inf, epsabs=epsabs, epsrel=epsrel, limit=200, full_output=1
    )
    if rest:  # explanation string present -> integrator gave up
        raise QuadratureError(f"mixture integral did not converge for x={x}: {rest[0]}")
    if abserr > max(1e-8, 1e-6 * abs(value)):
        raise QuadratureError(
            f"mixture integral error estimate too large for x={x}: {abserr:g}"
        )
    return value


def mean_of(dist: RateDistribution) -> float:
    """Expected count per document, before truncation."""
    if isinstance(dist, PoissonParams):
        return dist.lam
    if isinstance(dist, NegBinParams):
        return dist.alpha * dist.beta
    return float(dist.value)


def variance_of(dist: RateDistribution) -> float:
    if isinstance(dist, PoissonParams):
        return dist.lam
    if isinstance(dist, NegBinParams):
        return dist.alpha * dist.beta * (dist.beta + 1.0)
    return 0.0


def scaled(dist: RateDistribution, factor: float) -> RateDistribution:
    """Rescale a distribution to a document length ``factor`` times the original.

    The per-token rate is preserved: Poisson scales lam, the gamma mixture
    scales its per-document scale parameter (shape, i.e. burstiness, is a
    length-free property of the word).
    """
    if factor <= 0 or not math.isfinite(factor):
        raise ParameterError(f"scale factor must be positive and finite: {factor}")
    if isinstance(dist, PoissonParams):
        return PoissonParams(lam=dist.lam * factor)
    if isinstance(dist, NegBinParams):
        return NegBinParams(alpha=dist.alpha, beta=dist.beta * factor)
    return PointMassParams(value=int(math.floor(dist.value * factor + 0.5)))


# ---------------------------------------------------------------------------
# fitting

def fit_rate(
    mean: float,
    variance: float | None,
    family: str = "auto",
) -> RateDistribution:
    """Method-of-moments fit of an occurrence distribution.

    With family "auto", overdispersed events (variance exceeding the mean by
    more than a relative FIT_EPSILON) get a negative binomial, everything
    else a Poisson.  "poisson" and "negbin" force the family; a forced
    negbin silently degrades to Poisson when the data are not overdispersed,
    since the moment equations have no valid solution there.  ``variance``
    may be None (single-document data), which always yields Poisson.
    """
    if family not in ("auto", "poisson", "negbin"):
        raise ParameterError(f"unknown family: {family!r}")
    if not math.isfinite(mean) or mean < 0:
        raise ParameterError(f"mean must be finite and nonnegative: {mean}")
    if mean == 0.0:
        raise UnobservedEventError("cannot fit an occurrence model to a zero-mean event")
    if variance is not None and (not math.isfinite(variance) or variance < 0):
        raise ParameterError(f"variance must be finite and nonnegative: {variance}")

    if family == "poisson" or variance is None:
        return PoissonParams(lam=mean)

    if variance > mean * (1.0 + FIT_EPSILON):
        beta = variance / mean - 1.0
        alpha = mean / beta
        return NegBinParams(alpha=alpha, beta=beta)
    return PoissonParams(lam=mean)


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class RateProfile:
    """Truncated, renormalized occurrence pmf with precomputed suffix sums.

    ``theta[j]`` is the probability of exactly j occurrences in a document of
    ``n_tokens`` tokens, renormalized over 0..n_tokens.  Arrays only extend to
    ``support_end``, the last count with representable mass; every value
    beyond it is an exact zero.  The suffix arrays carry one trailing zero so
    that index support_end + 1 is valid:

        tail_mass[n]         = sum_{j >= n} theta[j]   (tail_mass[0] == 1.0)
        tail_first_moment[n] = sum_{j >= n} j * theta[j]

    Suffix sums, not prefix sums, because the conditional estimators divide
    two tail quantities; forming tails by subtracting prefixes from 1 loses
    all precision once the tail is small.
    """

    event: str
    n_tokens: int
    theta: np.ndarray
    tail_mass: np.ndarray
    tail_first_moment: np.ndarray
    mean: float
    target_mean: float
    truncation_loss: float
    degenerate: bool = False

    @property
    def support_end(self) -> int:
        return len(self.theta) - 1

    def mass_below(self, n: int) -> float:
        """sum_{j < n} theta[j], derived from the tail representation."""
        n = min(n, self.support_end + 1)
        return 1.0 - float(self.tail_mass[n])

    def first_moment_below(self, n: int) -> float:
        """sum_{j < n} j * theta[j]."""
        n = min(n, self.support_end + 1)
        return self.mean - float(self.tail_first_moment[n])

    def pmf(self, x: int) -> float:
        if 0 <= x <= self.support_end:
            return float(self.theta[x])
        return 0.0


def _support_bound(dist: RateDistribution, n_tokens: int) -> int:
    """Smallest grid bound past which the pmf has no representable mass."""
    if isinstance(dist, PointMassParams):
        return min(dist.value, n_tokens)
    mu = mean_of(dist)
    sd = math.sqrt(variance_of(dist))
    bound = mu + 40.0 * sd + 60.0
    if not math.isfinite(bound) or bound >= n_tokens:
        return n_tokens
    hi = int(math.ceil(bound))
    if isinstance(dist, PoissonParams):
        log_pmf = lambda x: poisson_log_pmf(x, dist.lam)
    else:
        log_pmf = lambda x: negbin_log_pmf(x, dist.alpha, dist.beta)
    # double until the pmf has underflowed; heavy-tailed mixtures need room
    while hi < n_tokens and log_pmf(hi) > -745.0:
        hi = min(n_tokens, hi * 2)
    return min(hi, n_tokens)


def _pmf_grid(dist: RateDistribution, hi: int) -> np.ndarray:
    """Pmf values on 0..hi, computed in log space."""
    x = np.arange(hi + 1, dtype=np.float64)
    if isinstance(dist, PoissonParams):
        log_p = x * math.log(dist.lam) - dist.lam - gammaln(x + 1.0)
    elif isinstance(dist, NegBinParams):
        a, b = dist.alpha, dist.beta
        log_p = (
            gammaln(a + x)
            - math.lgamma(a)
            - gammaln(x + 1.0)
            + x * math.log(b)
            - (a + x) * math.log1p(b)
        )
    else:
        p = np.zeros(hi + 1)
        if dist.value <= hi:
            p[dist.value] = 1.0
        return p
    with np.errstate(under="ignore"):
        return np.exp(log_p)


def build_profile(
    dist: RateDistribution,
    n_tokens: int,
    event: str = "",
) -> RateProfile:
    """Tabulate a distribution on 0..n_tokens and renormalize the kept mass.

    The lost tail mass is recorded as ``truncation_loss`` (a warning is
    logged above TRUNCATION_WARN).  If the pmf underflows at every grid
    point, the profile degrades to a point mass at the clamped rounded mean
    rather than failing, flagged via ``degenerate``.
    """
    if n_tokens < 1:
        raise ParameterError(f"n_tokens must be >= 1: {n_tokens}")

    target = mean_of(dist)
    hi = _support_bound(dist, n_tokens)
    raw = _pmf_grid(dist, hi)
    total = float(raw.sum())

    if not (total > 0.0 and math.isfinite(total)):
        value = min(n_tokens, max(0, int(math.floor(target + 0.5))))
        logger.warning(
            "profile for %r underflowed everywhere on 0..%d; "
            "falling back to a point mass at %d",
            event or dist,
            n_tokens,
            value,
        )
        return build_profile(PointMassParams(value=value), n_tokens, event=event)

    nonzero = np.nonzero(raw)[0]
    raw = raw[: nonzero[-1] + 1]

    loss = max(0.0, 1.0 - total)
    if loss > TRUNCATION_WARN:
        logger.warning(
            "profile for %r loses %.3g of its mass to truncation at N=%d",
            event or dist,
            loss,
            n_tokens,
        )

    theta = raw / total
    k = np.arange(theta.size, dtype=np.float64)
    tail0 = np.concatenate([np.cumsum(theta[::-1])[::-1], [0.0]])
    tail1 = np.concatenate([np.cumsum((k * theta)[::-1])[::-1], [0.0]])
    # pin tail_mass[0] to exactly 1.0 so conditionals at n=0 are exact
    scale = tail0[0]
    theta /= scale
    tail0 /= scale
    tail1 /= scale

    return RateProfile(
        event=event,
        n_tokens=n_tokens,
        theta=theta,
        tail_mass=tail0,
        tail_first_moment=tail1,
        mean=float(tail1[0]),
        target_mean=target,
        truncation_loss=loss,
        degenerate=isinstance(dist, PointMassParams),
    )


def profile_from_weights(
    weights: "np.ndarray | list[float]",
    n_tokens: int,
    event: str = "",
) -> RateProfile:
    """Build a profile from explicit nonnegative pmf weights on 0..len-1.

    Weights are renormalized; they must fit within 0..n_tokens.  Useful for
    constructing small hand-specified profiles.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0 or w.size > n_tokens + 1:
        raise ParameterError("weights must be a nonempty 1-d array on 0..n_tokens")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ParameterError("weights must be finite and nonnegative")
    total = float(w.sum())
    if total <= 0:
        raise ParameterError("weights must have positive total mass")
    theta = w / total
    k = np.arange(theta.size, dtype=np.float64)
    tail0 = np.concatenate([np.cumsum(theta[::-1])[::-1], [0.0]])
    tail1 = np.concatenate([np.cumsum((k * theta)[::-1])[::-1], [0.0]])
    scale = tail0[0]
    theta /= scale
    tail0 /= scale
    tail1 /= scale
    return RateProfile(
        event=event,
        n_tokens=n_tokens,
        theta=theta,
        tail_mass=tail0,
        tail_first_moment=tail1,
        mean=float(tail1[0]),
        target_mean=float(tail1[0]),
        truncation_loss=0.0,
    )
