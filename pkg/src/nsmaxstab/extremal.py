"""Max-stable calculus for the extremal-t family.

Bivariate exponent measure, its partial derivatives and log density,
pairwise extremal coefficients, two-component max-mixtures, and marginal
transforms between GEV, unit Frechet and Gumbel scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from .covmodel import CovariateLink, PlainCorrelation, SumMixtureCorrelation, SiteSet


@dataclass(frozen=True)
class DependenceModel:
    """Extremal-t max-stable law: degrees of freedom plus a correlation model."""

    df: float
    correlation: PlainCorrelation | SumMixtureCorrelation

    def __post_init__(self):
        if self.df <= 0.0:
            raise ValueError("degrees of freedom must be positive")

    def pair_rho(self, coords, covariates, pairs) -> np.ndarray:
        return self.correlation.pair_rho(coords, covariates, pairs)

    def corr_matrix(self, coords, covariates) -> np.ndarray:
        return self.correlation.matrix(coords, covariates)


@dataclass(frozen=True)
class MaxMixtureModel:
    """Pointwise maximum of two extremal-t fields with weights a(s), 1-a(s).

    Z(s) = max[a(s) Z1(s), {1-a(s)} Z2(s)] with a(s) built from a logit
    link on site covariates, so a(s) lies in (0, 1) by construction.
    """

    components: tuple[DependenceModel, DependenceModel]
    weight: CovariateLink
    scaler: dict | None = None

    def weights(self, covariates) -> np.ndarray:
        eta = self.weight.linear(covariates, self.scaler)
        return 1.0 / (1.0 + np.exp(-eta))


def spectral_constant(df: float) -> float:
    """Normalizing constant making E[c max(0, eps)^df] = 1."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    return (2.0 ** (1.0 - 0.5 * df)) * math.sqrt(math.pi) \
        / math.gamma(0.5 * (df + 1.0))


def exponent_V(z1: float, z2: float, rho: float, df: float) -> float:
    """Bivariate exponent measure of the extremal-t model."""
    return core.exponent_v(z1, z2, rho, df)


def dV_dz1(z1, z2, rho, df) -> float:
    return core.exponent_parts(z1, z2, rho, df)[1]


def dV_dz2(z1, z2, rho, df) -> float:
    return core.exponent_parts(z1, z2, rho, df)[2]


def d2V_dz1dz2(z1, z2, rho, df) -> float:
    return core.exponent_parts(z1, z2, rho, df)[3]


def bivar_logdensity(z1, z2, rho, df) -> float:
    """log{(V1 V2 - V12) exp(-V)}; -inf sentinel on nonpositive numerator."""
    return core.pair_logdensity(z1, z2, rho, df)


def extremal_coefficient_pair(model, sites: SiteSet, j1: int, j2: int) -> float:
    """Pairwise extremal coefficient theta = V(1, 1) between two stations."""
    pair = np.array([[j1, j2]])
    if isinstance(model, MaxMixtureModel):
        c1, c2 = model.components
        rho1 = float(c1.pair_rho(sites.coords, sites.covariates, pair)[0])
        rho2 = float(c2.pair_rho(sites.coords, sites.covariates, pair)[0])
        a = model.weights(sites.covariates)
        v = core.maxmix_parts(1.0, 1.0, rho1, rho2, c1.df, c2.df,
                              float(a[j1]), float(a[j2]))
        return v[0]
    rho = float(model.pair_rho(sites.coords, sites.covariates, pair)[0])
    return core.theta_from_rho(rho, model.df)


def theta_from_rho(rho: float, df: float) -> float:
    """theta = 2 T_{df+1}( sqrt{(df+1)(1-rho)/(1+rho)} )."""
    return core.theta_from_rho(rho, df)


def maxmix_exponent(model: MaxMixtureModel, z, sites: SiteSet,
                    pair=(0, 1)) -> float:
    """Exponent measure of a two-component max-mixture at a site pair.

    Only the bivariate case is implemented; component exponent measures
    in higher dimensions have no closed form here.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (2,):
        raise ValueError("max-mixture exponent is implemented for D = 2 only")
    if np.any(z <= 0.0):
        raise ValueError("exponent measure requires positive z")
    j1, j2 = pair
    a = model.weights(sites.covariates)
    a1, a2 = float(a[j1]), float(a[j2])
    if not (0.0 < a1 < 1.0 and 0.0 < a2 < 1.0):
        raise ValueError("max-mixture weights must lie strictly in (0, 1)")
    c1, c2 = model.components
    idx = np.array([[j1, j2]])
    rho1 = float(c1.pair_rho(sites.coords, sites.covariates, idx)[0])
    rho2 = float(c2.pair_rho(sites.coords, sites.covariates, idx)[0])
    v1 = core.exponent_v(z[0] / a1, z[1] / a2, rho1, c1.df)
    v2 = core.exponent_v(z[0] / (1.0 - a1), z[1] / (1.0 - a2), rho2, c2.df)
    return v1 + v2


@dataclass(frozen=True)
class GevParams:
    """Generalized extreme-value parameters (location, scale, shape)."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("GEV scale must be positive")


_XI_TINY = 1e-8


def gev_cdf(x: float, p: GevParams) -> float:
    if abs(p.xi) < _XI_TINY:
        return math.exp(-math.exp(-(x - p.mu) / p.sigma))
    t = 1.0 + p.xi * (x - p.mu) / p.sigma
    if t <= 0.0:
        return 0.0 if p.xi > 0 else 1.0
    return math.exp(-t ** (-1.0 / p.xi))


def gev_to_frechet(x, p: GevParams):
    """Map GEV(x) to the unit Frechet scale, z = -1/log G(x).

    Accepts scalars or arrays; the Gumbel limit is used for |xi| below
    1e-8. Values outside the GEV support raise.
    """
    x = np.asarray(x, dtype=float)
    if abs(p.xi) < _XI_TINY:
        z = np.exp((x - p.mu) / p.sigma)
    else:
        t = 1.0 + p.xi * (x - p.mu) / p.sigma
        if np.any(t <= 0.0):
            raise ValueError("value outside the GEV support")
        z = t ** (1.0 / p.xi)
    if z.ndim == 0:
        return float(z)
    return z


def frechet_to_gumbel(z):
    """Unit Frechet to standard Gumbel scale: log z."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise ValueError("Frechet values must be positive")
    out = np.log(z)
    if out.ndim == 0:
        return float(out)
    return out
