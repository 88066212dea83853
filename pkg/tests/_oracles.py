"""Independent reference implementations used by the tests.

Everything here is assembled from scipy/math primitives directly, on purpose:
these functions re-derive quantities that the package computes through its own
code paths, so agreement between the two is meaningful. Slow is fine.
"""

import math

import mpmath as mp
import numpy as np
from scipy import integrate, special, stats

from ratemix.latent_field import make_design
from ratemix.likelihood import ExceedanceData, HyperParams


# ---------------------------------------------------------------------------
# priors, re-derived
# ---------------------------------------------------------------------------

def kld_quad(beta1):
    """KL divergence of Gamma(1, beta1) from Exp(1) by quadrature."""

    def integrand(y):
        log_g = (beta1 - 1.0) * math.log(y) - y - special.gammaln(beta1)
        log_e = -y
        return math.exp(log_g) * (log_g - log_e)

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
    return val


def pc_beta1_logprior_oracle(beta1, kappa1):
    """PC prior for beta1 with the distance and its slope both from quadrature.

    Uses mpmath at elevated precision so the numeric derivative of the
    distance contributes error well below 1e-10.
    """
    with mp.workdps(40):

        def dist(b):
            kld = mp.quad(
                lambda y: y ** (b - 1) * mp.e ** (-y) / mp.gamma(b) * ((b - 1) * mp.log(y) - mp.loggamma(b)),
                [0, mp.inf],
            )
            return mp.sqrt(2 * kld)

        ell = dist(mp.mpf(beta1))
        dell = mp.diff(dist, mp.mpf(beta1), h=mp.mpf("1e-8"))
        out = mp.log(kappa1 / mp.mpf(2)) - kappa1 * ell + mp.log(abs(dell))
        return float(out)


def pc_xi_logprior_oracle(xi, kappa2):
    if not 0.0 < xi < 1.0:
        return -np.inf
    return (
        math.log(math.sqrt(2.0) * kappa2)
        - kappa2 * math.sqrt(2.0) * xi / math.sqrt(1.0 - xi)
        + math.log(1.0 - xi / 2.0)
        - 1.5 * math.log(1.0 - xi)
    )


def vague_range_logprior_oracle(rho):
    return stats.gamma.logpdf(rho, a=0.01, scale=100.0)


def vague_coef_logprior_oracle(c):
    return stats.norm.logpdf(c, scale=10.0)


# ---------------------------------------------------------------------------
# transform, re-derived from the reverse map
# ---------------------------------------------------------------------------

def inverse_transform_oracle(vec):
    """(alpha0, beta1, beta2, rho) from (alpha_t, beta1_t, beta2_t, rho_t)."""
    at, b1t, b2t, rt = vec
    alpha = math.exp(2.0 * at) * math.exp(-b1t) * math.exp(-b2t)
    beta1 = math.exp(-at) * math.exp(b1t)
    beta2 = math.exp(-b2t)
    rho = math.exp(rt)
    return np.array([alpha, beta1, beta2, rho])


def numeric_log_jacobian(vec, h=1e-6):
    """log |det d(natural)/d(transformed)| by central differences."""
    k = len(vec)
    J = np.empty((k, k))
    for j in range(k):
        up = np.array(vec, dtype=float)
        dn = np.array(vec, dtype=float)
        up[j] += h
        dn[j] -= h
        J[:, j] = (inverse_transform_oracle(up) - inverse_transform_oracle(dn)) / (2.0 * h)
    sign, logdet = np.linalg.slogdet(J)
    assert sign != 0
    return logdet


# ---------------------------------------------------------------------------
# full posterior assembly, independent path
# ---------------------------------------------------------------------------

def _gamma_cdf_by_quad(u, rate, shape):
    val, _ = integrate.quad(
        lambda t: math.exp(
            shape * math.log(rate) - special.gammaln(shape) + (shape - 1.0) * math.log(t) - rate * t
        ),
        0.0,
        u,
        limit=200,
        epsabs=1e-13,
        epsrel=1e-13,
    )
    return val


def logpost_oracle(hyper, log_lam, data, model, kappa1=1.0, kappa2=1.0):
    """Augmented log-posterior of the transformed state, built from scratch.

    Observation cdf terms come from quadrature of the gamma density, the
    copula from scipy's multivariate normal, priors from the formulas above,
    and the hyperparameter Jacobian from a finite-difference determinant.
    Only comparable between states (no shared normalization with the
    package's own value is assumed).
    """
    lam = np.exp(np.asarray(log_lam, dtype=float))
    n, d = lam.shape
    coefs = np.asarray(hyper.alpha_coefs, dtype=float)
    alpha_site = np.exp(coefs[0] + model.covariates @ coefs[1:])
    beta1, beta2, rho = hyper.beta1, hyper.beta2, hyper.rho

    total = 0.0
    for i in range(n):
        for j in range(d):
            u, e, y, lij = data.u[i, j], data.e[i, j], data.y[i, j], lam[i, j]
            if np.isinf(u):
                continue
            if e == 1.0:
                total += (
                    beta1 * math.log(lij)
                    - special.gammaln(beta1)
                    + (beta1 - 1.0) * math.log(y)
                    - lij * y
                )
            else:
                total += math.log(_gamma_cdf_by_quad(u, lij, beta1))

    corr = np.exp(-model.design.dist / rho)
    mvn = stats.multivariate_normal(mean=np.zeros(d), cov=corr)
    for i in range(n):
        g = stats.gamma.cdf(lam[i], a=beta2, scale=1.0 / alpha_site)
        z = stats.norm.ppf(g)
        total += mvn.logpdf(z) - np.sum(stats.norm.logpdf(z))
        total += np.sum(stats.gamma.logpdf(lam[i], a=beta2, scale=1.0 / alpha_site))

    # priors are densities of the natural parameters; the intercept prior is
    # Gaussian on log(alpha0)
    log_a0 = coefs[0]
    total += vague_coef_logprior_oracle(log_a0) - log_a0
    for c in coefs[1:]:
        total += vague_coef_logprior_oracle(c)
    total += pc_beta1_logprior_oracle(beta1, kappa1)
    xi = 1.0 / beta2
    total += pc_xi_logprior_oracle(xi, kappa2) - 2.0 * math.log(beta2)
    total += vague_range_logprior_oracle(rho)

    alpha0 = math.exp(log_a0)
    tvec = np.array(
        [
            math.log(alpha0 * beta1 / beta2),
            math.log(alpha0 * beta1**2 / beta2),
            -math.log(beta2),
            math.log(rho),
        ]
    )
    total += numeric_log_jacobian(tvec)
    total += float(np.sum(log_lam))
    return total


# ---------------------------------------------------------------------------
# random mixed-censoring scenarios for gradient checks
# ---------------------------------------------------------------------------

def random_config(rng, n=3, d=4):
    """Random data + hyperparameters + latent state with all three cell kinds."""
    coords = rng.uniform(0.0, 1.0, size=(d, 2))
    covariates = rng.normal(size=(d, 2))
    hyper = HyperParams(
        alpha_coefs=np.concatenate(([rng.normal(scale=0.5)], rng.normal(scale=0.4, size=2))),
        beta1=float(np.exp(rng.normal(loc=0.5, scale=0.5))),
        beta2=float(1.2 + np.exp(rng.normal(scale=0.5))),
        rho=float(np.exp(rng.normal(scale=0.5))),
    )
    y = rng.gamma(shape=2.0, scale=1.0, size=(n, d))
    u = np.quantile(y, 0.5, axis=0)[None, :] * np.ones((n, d))
    kind = rng.integers(0, 3, size=(n, d))
    # kind 0: exceedance, kind 1: censored, kind 2: fully censored
    y = np.where(kind == 0, u + rng.gamma(2.0, 1.0, size=(n, d)), u * rng.uniform(0.2, 0.9, size=(n, d)))
    u = np.where(kind == 2, np.inf, u)
    y = np.where(kind == 2, np.nan, y)
    e = np.where(kind == 0, 1.0, 0.0)
    data = ExceedanceData(y, u, e)
    design = make_design(coords)
    # latent rates near their own margin keep the copula z-scores moderate;
    # far-tail z makes the gamma cdf lose the relative precision that a
    # finite-difference check needs
    alpha_site = np.exp(hyper.alpha_coefs[0] + covariates @ hyper.alpha_coefs[1:])
    lam = rng.gamma(shape=hyper.beta2, scale=1.0 / alpha_site, size=(n, d))
    log_lam = np.log(lam) + rng.normal(scale=0.2, size=(n, d))
    return data, design, covariates, hyper, log_lam


def fd_grad(fun, log_lam, h=1e-6):
    """Central finite differences of a scalar function of the latent matrix."""
    g = np.empty_like(log_lam)
    for idx in np.ndindex(log_lam.shape):
        up = log_lam.copy()
        dn = log_lam.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (fun(up) - fun(dn)) / (2.0 * h)
    return g


# ---------------------------------------------------------------------------
# one-cell posterior by quadrature
# ---------------------------------------------------------------------------

def onecell_quad_cdf(y, u, e, alpha, beta1, beta2, grid):
    """Normalized cdf of log lambda for a single observation cell.

    The unnormalized density on the log scale is
    obs(y or u | lambda) * gamma(lambda; alpha, beta2) * lambda.
    """

    def logdens(ll):
        lam = math.exp(ll)
        if np.isinf(u):
            obs = 0.0
        elif e == 1.0:
            obs = beta1 * math.log(lam) - special.gammaln(beta1) + (beta1 - 1.0) * math.log(y) - lam * y
        else:
            obs = math.log(special.gammainc(beta1, lam * u))
        marg = beta2 * math.log(alpha) - special.gammaln(beta2) + (beta2 - 1.0) * math.log(lam) - alpha * lam
        return obs + marg + ll

    vals = np.array([logdens(ll) for ll in grid])
    dens = np.exp(vals - vals.max())
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    return cdf / cdf[-1]
