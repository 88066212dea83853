"""Penalized-complexity priors for the mixing shapes and the vague priors
used for regression coefficients and the correlation range.

The PC priors penalize distance from the exponential base model: for beta1
the distance is measured by the KLD of Gamma(shape beta1) from Exp, for the
tail index xi (equivalently beta2 = 1/xi) the distance is
d(xi) = sqrt(2) * xi / sqrt(1 - xi) on 0 < xi < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

# Gamma(shape 0.01, rate 0.01) for the range: mean 1, variance 100.
RANGE_PRIOR_SHAPE = 0.01
RANGE_PRIOR_RATE = 0.01
# Gaussian variance for covariate coefficients (log-intercepts and slopes).
COEF_PRIOR_VAR = 100.0

# within this distance of beta1 = 1 the KLD square root switches to its
# leading-order expansion to dodge catastrophic cancellation
_BETA1_SERIES_EPS = 1e-6


@dataclass(frozen=True)
class PriorSet:
    """Penalty rates of the two PC priors; everything else is fixed."""

    kappa1: float = 1.0
    kappa2: float = 1.0

    def __post_init__(self):
        if not (self.kappa1 > 0 and self.kappa2 > 0):
            raise ValueError("PC penalty rates must be positive")


def kld_gamma_vs_exp(beta1):
    """KLD of a unit-mean-rate Gamma(shape beta1) from the exponential base.

    Equals (beta1 - 1) * digamma(beta1) - log Gamma(beta1); zero exactly at
    beta1 = 1 and strictly increasing in |beta1 - 1|.
    """
    if not beta1 > 0:
        raise ValueError("beta1 must be positive")
    return (beta1 - 1.0) * special.digamma(beta1) - special.gammaln(beta1)


def _distance_beta1(beta1):
    """sqrt(2 * KLD) and its absolute derivative, series-guarded near 1."""
    delta = beta1 - 1.0
    trigamma = special.polygamma(1, beta1)
    if abs(delta) < _BETA1_SERIES_EPS:
        root = math.sqrt(trigamma)
        return abs(delta) * root, root
    ell = math.sqrt(2.0 * kld_gamma_vs_exp(beta1))
    return ell, abs(delta) * trigamma / ell


def pc_logprior_beta1(beta1, kappa1=1.0):
    """Log density of the PC prior on beta1 > 0 with penalty rate kappa1."""
    if not beta1 > 0:
        return -math.inf
    ell, dell = _distance_beta1(beta1)
    return math.log(kappa1 / 2.0) - kappa1 * ell + math.log(dell)


def pc_logprior_xi(xi, kappa2=1.0):
    """Log density of the PC prior on the tail index, supported on (0, 1)."""
    if not 0.0 < xi < 1.0:
        return -math.inf
    dist = math.sqrt(2.0) * kappa2 * xi / math.sqrt(1.0 - xi)
    return (
        math.log(math.sqrt(2.0) * kappa2)
        - dist
        + math.log1p(-xi / 2.0)
        - 1.5 * math.log1p(-xi)
    )


def pc_logprior_beta2(beta2, kappa2=1.0):
    """PC prior on beta2 = 1/xi, supported on beta2 > 1 (finite-mean region)."""
    if not beta2 > 1.0:
        return -math.inf
    s = beta2 * (beta2 - 1.0)
    return (
        math.log(math.sqrt(2.0) * kappa2)
        - math.sqrt(2.0) * kappa2 / math.sqrt(s)
        + math.log(beta2 - 0.5)
        - 1.5 * math.log(s)
    )


def vague_logprior_range(rho):
    """Gamma(shape 0.01, rate 0.01) log density, a diffuse unit-mean prior."""
    if not rho > 0:
        return -math.inf
    k, r = RANGE_PRIOR_SHAPE, RANGE_PRIOR_RATE
    return k * math.log(r) - special.gammaln(k) + (k - 1.0) * math.log(rho) - r * rho


def vague_logprior_coef(c):
    """Centered Gaussian with variance 100 for regression coefficients."""
    return -0.5 * math.log(2.0 * math.pi * COEF_PRIOR_VAR) - c * c / (2.0 * COEF_PRIOR_VAR)
