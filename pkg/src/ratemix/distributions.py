"""Univariate building blocks: generalized Pareto, gamma (rate
parametrization), generalized inverse Gaussian, and the gamma-gamma
marginal of the rate-mixture construction, plus Weibull-type tail algebra.

Everything that is a density is evaluated in log space; linear-scale pdf
helpers exponentiate at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

# below this |xi| the generalized Pareto expressions switch to their
# exponential (xi -> 0) limit
XI_EPS = 1e-9


class DomainError(ValueError):
    """Argument outside a distribution's support or parameter space."""


def _as_array(y):
    arr = np.asarray(y, dtype=float)
    return arr, (arr.ndim == 0)


def _ret(arr, scalar):
    return float(arr) if scalar else arr


# ---------------------------------------------------------------------------
# generalized Pareto
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GpParams:
    """Scale tau > 0 and tail index xi (xi < 0 gives a bounded upper tail)."""

    tau: float
    xi: float

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"GP scale must be positive, got {self.tau}")


def gp_cdf(y, params):
    """Distribution function 1 - (1 + xi*y/tau)^(-1/xi) on its support."""
    y, scalar = _as_array(y)
    tau, xi = params.tau, params.xi
    if np.any(y < 0):
        raise DomainError("GP support starts at 0")
    if abs(xi) < XI_EPS:
        out = -np.expm1(-y / tau)
    else:
        t = 1.0 + xi * y / tau
        if np.any(t < 0):
            raise DomainError("y outside GP support for xi < 0")
        out = 1.0 - t ** (-1.0 / xi)
    return _ret(out, scalar)


def gp_quantile(prob, params):
    """Inverse of gp_cdf; prob in [0, 1)."""
    prob, scalar = _as_array(prob)
    tau, xi = params.tau, params.xi
    if np.any((prob < 0) | (prob >= 1)):
        raise DomainError("prob must lie in [0, 1)")
    if abs(xi) < XI_EPS:
        out = -tau * np.log1p(-prob)
    else:
        out = tau * np.expm1(-xi * np.log1p(-prob)) / xi
    return _ret(out, scalar)


# ---------------------------------------------------------------------------
# gamma, rate first
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaParams:
    """Gamma(rate, shape): density rate^shape * y^(shape-1) * exp(-rate*y) / Gamma(shape)."""

    rate: float
    shape: float

    def __post_init__(self):
        if not (self.rate > 0 and self.shape > 0):
            raise DomainError(
                f"gamma rate and shape must be positive, got ({self.rate}, {self.shape})"
            )


def gamma_logpdf(y, params):
    y, scalar = _as_array(y)
    if np.any(y <= 0):
        raise DomainError("gamma density needs y > 0")
    a, b = params.rate, params.shape
    out = b * math.log(a) - special.gammaln(b) + special.xlogy(b - 1.0, y) - a * y
    return _ret(out, scalar)


def gamma_cdf(y, params):
    y, scalar = _as_array(y)
    if np.any(y < 0):
        raise DomainError("gamma support starts at 0")
    return _ret(special.gammainc(params.shape, params.rate * y), scalar)


def gamma_quantile(prob, params):
    prob, scalar = _as_array(prob)
    if np.any((prob < 0) | (prob >= 1)):
        raise DomainError("prob must lie in [0, 1)")
    return _ret(special.gammaincinv(params.shape, prob) / params.rate, scalar)


def gamma_sample(params, rng, size=None):
    return rng.gamma(shape=params.shape, scale=1.0 / params.rate, size=size)


# ---------------------------------------------------------------------------
# generalized inverse Gaussian
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GigParams:
    """GIG(a, b, beta) with density proportional to y^(beta-1) exp(-(a*y + b/y)/2).

    Admissible corner cases: b = 0 needs beta > 0 (gamma law with rate a/2),
    a = 0 needs beta < 0 (inverse-gamma law); otherwise a, b > 0 and beta is
    unrestricted.
    """

    a: float
    b: float
    beta: float

    def __post_init__(self):
        a, b, beta = self.a, self.b, self.beta
        if a < 0 or b < 0:
            raise DomainError("GIG needs a >= 0 and b >= 0")
        if a == 0 and b == 0:
            raise DomainError("GIG needs a > 0 or b > 0")
        if b == 0 and not beta > 0:
            raise DomainError("GIG with b = 0 needs beta > 0")
        if a == 0 and not beta < 0:
            raise DomainError("GIG with a = 0 needs beta < 0")


def gig_logpdf(y, params):
    y, scalar = _as_array(y)
    if np.any(y <= 0):
        raise DomainError("GIG density needs y > 0")
    a, b, beta = params.a, params.b, params.beta
    if b == 0:
        return _ret(gamma_logpdf(y, GammaParams(rate=a / 2.0, shape=beta)), scalar)
    if a == 0:
        # 1/Y is Gamma(rate b/2, shape -beta)
        out = (
            -beta * math.log(b / 2.0)
            - special.gammaln(-beta)
            + (beta - 1.0) * np.log(y)
            - b / (2.0 * y)
        )
        return _ret(out, scalar)
    omega = math.sqrt(a * b)
    # log(2 K_beta(omega)) via the scaled Bessel function for stability
    log_norm = 0.5 * beta * (math.log(a) - math.log(b)) - (
        math.log(2.0) + math.log(special.kve(beta, omega)) - omega
    )
    out = log_norm + (beta - 1.0) * np.log(y) - 0.5 * (a * y + b / y)
    return _ret(out, scalar)


def gig_sample(params, rng, size=None):
    """Draws from the GIG law; boundary cases fall back to (inverse-)gamma."""
    a, b, beta = params.a, params.b, params.beta
    if b == 0:
        return rng.gamma(shape=beta, scale=2.0 / a, size=size)
    if a == 0:
        return 1.0 / rng.gamma(shape=-beta, scale=2.0 / b, size=size)
    omega = math.sqrt(a * b)
    draws = stats.geninvgauss.rvs(p=beta, b=omega, size=size, random_state=rng)
    return draws * math.sqrt(b / a)


# ---------------------------------------------------------------------------
# gamma-gamma marginal
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaGammaParams:
    """Marginal of Y | L ~ Gamma(L, beta1) with L ~ Gamma(alpha, beta2).

    Equal in law to (alpha*beta1/beta2) * F(2*beta1, 2*beta2); the tail index
    is 1/beta2.
    """

    alpha: float
    beta1: float
    beta2: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta1 > 0 and self.beta2 > 0):
            raise DomainError("gamma-gamma parameters must be positive")


def gamma_gamma_logpdf(y, params):
    y, scalar = _as_array(y)
    if np.any(y <= 0):
        raise DomainError("gamma-gamma density needs y > 0")
    a, b1, b2 = params.alpha, params.beta1, params.beta2
    out = (
        -b1 * math.log(a)
        + special.gammaln(b1 + b2)
        - special.gammaln(b1)
        - special.gammaln(b2)
        - (b1 + b2) * np.log1p(y / a)
        + special.xlogy(b1 - 1.0, y)
    )
    return _ret(out, scalar)


def gamma_gamma_pdf(y, params):
    return np.exp(gamma_gamma_logpdf(y, params))


def gamma_gamma_cdf(y, params):
    y, scalar = _as_array(y)
    if np.any(y < 0):
        raise DomainError("gamma-gamma support starts at 0")
    frac = y / (y + params.alpha)
    return _ret(special.betainc(params.beta1, params.beta2, frac), scalar)


def gamma_gamma_quantile(prob, params):
    prob, scalar = _as_array(prob)
    if np.any((prob < 0) | (prob >= 1)):
        raise DomainError("prob must lie in [0, 1)")
    t = special.betaincinv(params.beta1, params.beta2, prob)
    return _ret(params.alpha * t / (1.0 - t), scalar)


def gamma_gamma_moment(r, params):
    """E(Y^r) through the scaled-F representation; finite only for r < beta2."""
    a, b1, b2 = params.alpha, params.beta1, params.beta2
    if not r < b2:
        raise DomainError(f"moment of order {r} needs beta2 > {r}")
    if not r > -b1:
        raise DomainError(f"moment of order {r} needs beta1 > {-r}")
    scale = a * b1 / b2
    log_f_moment = (
        r * (math.log(b2) - math.log(b1))
        + special.gammaln(b1 + r)
        - special.gammaln(b1)
        + special.gammaln(b2 - r)
        - special.gammaln(b2)
    )
    return scale**r * math.exp(log_f_moment)


def gamma_gamma_sample(params, rng, size=None):
    """Ratio draw: Y = Ytilde / L with Ytilde ~ Gamma(1, beta1), L ~ Gamma(alpha, beta2)."""
    lam = rng.gamma(shape=params.beta2, scale=1.0 / params.alpha, size=size)
    ytil = rng.gamma(shape=params.beta1, scale=1.0, size=size)
    return ytil / lam


# ---------------------------------------------------------------------------
# Weibull-type tail algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeibullTail:
    """Survival behavior P(X > x) ~ r(x) exp(-rate * x^index) with index > 0."""

    rate: float
    index: float

    def __post_init__(self):
        if not (self.rate > 0 and self.index > 0):
            raise DomainError("Weibull tail needs positive rate and index")


def weibull_tail_combine(num, den):
    """Tail of a ratio X / W where X has tail `num` and 1/W has tail `den`.

    The product is again Weibull-type; the combined index is the harmonic-sum
    eta_num*eta_den/(eta_num+eta_den) and the combined rate mixes the two
    rates through the exponent b = eta_num/(eta_num+eta_den).
    """
    e_num, e_den = num.index, den.index
    b = e_num / (e_num + e_den)
    index = e_num * e_den / (e_num + e_den)
    rate = (
        num.rate ** (1.0 - b)
        * den.rate**b
        * ((den.rate / num.rate) ** b + (num.rate / den.rate) ** (1.0 - b))
    )
    return WeibullTail(rate=rate, index=index)


def gamma_gig_sample(k, beta1, gig, rng, size=None):
    """Draws of (Ytilde / L)^k with Ytilde ~ Gamma(1, beta1) and L ~ GIG."""
    if not k > 0:
        raise DomainError("exponent k must be positive")
    ytil = rng.gamma(shape=beta1, scale=1.0, size=size)
    lam = gig_sample(gig, rng, size=size)
    return (ytil / lam) ** k
