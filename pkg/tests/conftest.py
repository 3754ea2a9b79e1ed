import math

import numpy as np
import pytest

import nsmaxstab as ns


def ks_statistic(sample, cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a CDF callable."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    f = np.array([cdf(v) for v in x])
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return max(upper, lower)


def ks_critical(n: int, level: float = 0.01) -> float:
    # asymptotic critical value c(level)/sqrt(n); c(0.01) = 1.628
    coeffs = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}
    return coeffs[level] / math.sqrt(n)


def frechet_cdf(z: float) -> float:
    return math.exp(-1.0 / z) if z > 0 else 0.0


def empirical_pair_theta(z1, z2) -> float:
    """theta-hat = m / sum 1/max(z1, z2), the Frechet-scale moment estimator."""
    m = len(z1)
    return m / float(np.sum(1.0 / np.maximum(z1, z2)))


def rho_for_theta(theta: float, df: float) -> float:
    """Correlation giving a target pairwise extremal coefficient."""
    from nsmaxstab.mathkit import student_t_quantile
    q = student_t_quantile(theta / 2.0, df + 1.0)
    return (df + 1.0 - q * q) / (df + 1.0 + q * q)


def pair_sites(distance: float) -> ns.SiteSet:
    return ns.SiteSet(np.array([[0.3, 0.5], [0.3 + distance, 0.5]]))


def parametric_model(beta1, beta2, df, alpha) -> ns.DependenceModel:
    tpl = ns.ParametricRadialTemplate(beta1=beta1, beta2=beta2, df=df,
                                      alpha=alpha)
    return tpl.build(tpl.parameter_vector().natural())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
