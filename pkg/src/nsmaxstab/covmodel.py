"""Spatially varying kernel matrices and non-stationary correlation functions.

The construction pairs a 2x2 SPD kernel field Omega_s (parametric or
covariate-linked through log / logit links) with an isotropic base
correlation of unit range, yielding the locally elliptic correlation

    rho(s1, s2) = |O1|^(1/4) |O2|^(1/4) |(O1+O2)/2|^(-1/2) R(Q^(1/2)),
    Q = h^T {(O1+O2)/2}^(-1) h.

Gaussian sum-mixtures of two such correlations with a logit-linked,
spatially varying proportion are supported as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import mathkit

JITTER_START = 1e-10
JITTER_MAX = 1e-6


@dataclass(frozen=True)
class PoweredExponential:
    """Isotropic base correlation R(r) = exp(-r^alpha), unit range."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError("smoothness alpha must lie in (0, 2]")


def base_correlation(base: PoweredExponential, r: float) -> float:
    """Evaluate the base correlation at a nonnegative distance."""
    if r < 0.0:
        raise ValueError("distance must be nonnegative")
    return math.exp(-(r ** base.alpha))


@dataclass(frozen=True)
class CovariateLink:
    """Linear predictor eta(s) = X(s)^T beta over named covariates."""

    names: tuple[str, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.beta):
            raise ValueError(
                f"covariate names and coefficients differ in length "
                f"({len(self.names)} vs {len(self.beta)})"
            )

    def linear(self, covariates: dict, scaler=None) -> np.ndarray:
        eta = None
        for name, b in zip(self.names, self.beta):
            if name not in covariates:
                raise KeyError(f"covariate {name!r} missing from site set")
            x = np.asarray(covariates[name], dtype=float)
            if scaler is not None and name in scaler and name != "intercept":
                center, scale = scaler[name]
                x = (x - center) / scale
            eta = b * x if eta is None else eta + b * x
        if eta is None:
            raise ValueError("covariate link has no terms")
        return eta


def make_scaler(covariates: dict, names) -> dict:
    """Center/scale table for the named covariates (intercept excluded)."""
    scaler = {}
    for name in names:
        if name == "intercept":
            continue
        x = np.asarray(covariates[name], dtype=float)
        sd = float(np.std(x))
        scaler[name] = (float(np.mean(x)), sd if sd > 0 else 1.0)
    return scaler


@dataclass(frozen=True)
class ParametricKernel:
    """Radial kernel field omega(s) = beta1 * 2^(-beta2 |s_x|).

    ``scale`` multiplies the whole matrix, Omega_s = scale * omega(s)^2 I;
    setting it to (2 df)^(2/alpha) keeps parameter values comparable to
    the Brown-Resnick-scaled simulation designs.
    """

    beta1: float
    beta2: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.beta1 <= 0.0:
            raise ValueError("range beta1 must be positive")
        if self.scale <= 0.0:
            raise ValueError("kernel scale must be positive")

    def params_at(self, coords: np.ndarray, covariates: dict):
        sx = np.abs(np.asarray(coords, dtype=float).reshape(-1, 2)[:, 0])
        w = math.sqrt(self.scale) * self.beta1 * np.exp2(-self.beta2 * sx)
        return w, w.copy(), np.zeros_like(w)


@dataclass(frozen=True)
class CovariateKernel:
    """Kernel field with log-linked ranges and logit-linked anisotropy.

    omega_x and omega_y use log links; delta uses logit[(delta+1)/2].
    ``omega_y=None`` together with ``delta=None`` gives the locally
    isotropic variant (omega_y = omega_x, delta = 0).
    """

    omega_x: CovariateLink
    omega_y: CovariateLink | None = None
    delta: CovariateLink | None = None
    scaler: dict | None = None

    @property
    def isotropic(self) -> bool:
        return self.omega_y is None and self.delta is None

    def params_at(self, coords: np.ndarray, covariates: dict):
        wx = np.exp(self.omega_x.linear(covariates, self.scaler))
        if self.omega_y is None:
            wy = wx.copy()
        else:
            wy = np.exp(self.omega_y.linear(covariates, self.scaler))
        if self.delta is None:
            dl = np.zeros_like(wx)
        else:
            eta = self.delta.linear(covariates, self.scaler)
            dl = 2.0 / (1.0 + np.exp(-eta)) - 1.0
        return wx, wy, dl


@dataclass(frozen=True)
class FunctionKernel:
    """Kernel field driven by coordinate functions, for simulation setups.

    ``fx`` maps coordinates (D, 2) to omega_x values; ``fy`` and
    ``fdelta`` default to isotropy (omega_y = omega_x, delta = 0).
    """

    fx: object
    fy: object = None
    fdelta: object = None

    def params_at(self, coords: np.ndarray, covariates: dict):
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        wx = np.asarray(self.fx(coords), dtype=float)
        wy = wx.copy() if self.fy is None else np.asarray(self.fy(coords), float)
        if self.fdelta is None:
            dl = np.zeros_like(wx)
        else:
            dl = np.asarray(self.fdelta(coords), dtype=float)
        return wx, wy, dl


def _single_row(cov_row: dict) -> dict:
    return {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in cov_row.items()}


def kernel_matrix_at(spec, s, cov_row: dict) -> np.ndarray:
    """2x2 SPD kernel matrix Omega_s at one site."""
    coords = np.asarray(s, dtype=float).reshape(1, 2)
    wx, wy, dl = spec.params_at(coords, _single_row(cov_row))
    wx, wy, dl = float(wx[0]), float(wy[0]), float(dl[0])
    off = wx * wy * dl
    return np.array([[wx * wx, off], [off, wy * wy]])


def quadratic_form(omega1: np.ndarray, omega2: np.ndarray, h) -> float:
    """Q = h^T {(O1 + O2)/2}^(-1) h for 2x2 SPD kernel matrices."""
    m = 0.5 * (np.asarray(omega1, float) + np.asarray(omega2, float))
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det <= 0.0:
        raise ValueError("average kernel matrix is singular")
    h = np.asarray(h, dtype=float)
    q = (m[1, 1] * h[0] * h[0] - 2.0 * m[0, 1] * h[0] * h[1]
         + m[0, 0] * h[1] * h[1]) / det
    return float(max(q, 0.0))


def _pair_rho(wx, wy, dl, alpha, coords, i, j):
    # Vectorized Paciorek-Schervish correlation over index pairs (i, j).
    o11i, o11j = wx[i] ** 2, wx[j] ** 2
    o22i, o22j = wy[i] ** 2, wy[j] ** 2
    o12i = wx[i] * wy[i] * dl[i]
    o12j = wx[j] * wy[j] * dl[j]
    deti = o11i * o22i - o12i ** 2
    detj = o11j * o22j - o12j ** 2
    m11 = 0.5 * (o11i + o11j)
    m22 = 0.5 * (o22i + o22j)
    m12 = 0.5 * (o12i + o12j)
    detm = m11 * m22 - m12 ** 2
    dx = coords[j, 0] - coords[i, 0]
    dy = coords[j, 1] - coords[i, 1]
    q = np.maximum((m22 * dx * dx - 2.0 * m12 * dx * dy + m11 * dy * dy) / detm,
                   0.0)
    pref = (deti * detj) ** 0.25 / np.sqrt(detm)
    return pref * np.exp(-q ** (0.5 * alpha))


@dataclass(frozen=True)
class PlainCorrelation:
    """Non-stationary correlation from one kernel field and base model."""

    kernel: ParametricKernel | CovariateKernel
    base: PoweredExponential

    def pair_rho(self, coords, covariates, pairs: np.ndarray) -> np.ndarray:
        wx, wy, dl = self.kernel.params_at(coords, covariates)
        pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        return _pair_rho(wx, wy, dl, self.base.alpha, np.asarray(coords, float),
                         pairs[:, 0], pairs[:, 1])

    def matrix(self, coords, covariates) -> np.ndarray:
        return _corr_matrix(self, coords, covariates)


@dataclass(frozen=True)
class SumMixtureCorrelation:
    """Correlation of a(s) eps1 + {1-a(s)} eps2 after standardization.

    The two components usually share one kernel field and differ in the
    smoothness of their base correlations.
    """

    comp1: PlainCorrelation
    comp2: PlainCorrelation
    weight: CovariateLink
    scaler: dict | None = None

    def weights(self, covariates) -> np.ndarray:
        eta = self.weight.linear(covariates, self.scaler)
        return 1.0 / (1.0 + np.exp(-eta))

    def pair_rho(self, coords, covariates, pairs: np.ndarray) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        rho1 = self.comp1.pair_rho(coords, covariates, pairs)
        rho2 = self.comp2.pair_rho(coords, covariates, pairs)
        a = self.weights(covariates)
        ai, aj = a[pairs[:, 0]], a[pairs[:, 1]]
        num = ai * aj * rho1 + (1.0 - ai) * (1.0 - aj) * rho2
        den = np.sqrt(ai ** 2 + (1.0 - ai) ** 2) * np.sqrt(aj ** 2 + (1.0 - aj) ** 2)
        return num / den

    def matrix(self, coords, covariates) -> np.ndarray:
        return _corr_matrix(self, coords, covariates)


def ns_correlation(spec, base: PoweredExponential, s1, s2, cov1: dict,
                   cov2: dict) -> float:
    """Non-stationary correlation between two sites (scalar form)."""
    o1 = kernel_matrix_at(spec, s1, cov1)
    o2 = kernel_matrix_at(spec, s2, cov2)
    h = np.asarray(s2, float) - np.asarray(s1, float)
    q = quadratic_form(o1, o2, h)
    det1 = o1[0, 0] * o1[1, 1] - o1[0, 1] ** 2
    det2 = o2[0, 0] * o2[1, 1] - o2[0, 1] ** 2
    m = 0.5 * (o1 + o2)
    detm = m[0, 0] * m[1, 1] - m[0, 1] ** 2
    pref = (det1 * det2) ** 0.25 / math.sqrt(detm)
    return pref * base_correlation(base, math.sqrt(q))


def mixture_correlation(spec: SumMixtureCorrelation, s1, s2, cov1: dict,
                        cov2: dict) -> float:
    """Sum-mixture correlation between two sites (scalar form)."""
    coords = np.vstack([np.asarray(s1, float), np.asarray(s2, float)])
    covs = {}
    keys = set(cov1) | set(cov2)
    for k in keys:
        covs[k] = np.array([float(cov1[k]), float(cov2[k])])
    return float(spec.pair_rho(coords, covs, np.array([[0, 1]]))[0])


def _corr_matrix(model, coords, covariates) -> np.ndarray:
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    d = coords.shape[0]
    r = np.eye(d)
    if d > 1:
        iu = np.triu_indices(d, k=1)
        pairs = np.column_stack(iu)
        rho = model.pair_rho(coords, covariates, pairs)
        r[iu] = rho
        r[(iu[1], iu[0])] = rho
    return r


def correlation_matrix(model, coords, covariates) -> np.ndarray:
    """D x D correlation matrix of a correlation model over a site set."""
    if np.asarray(coords).size == 0:
        raise ValueError("site set must be nonempty")
    return _corr_matrix(model, coords, covariates)


def chol_correlation(r: np.ndarray):
    """Cholesky factor of a correlation matrix with escalating jitter.

    Retries with jitter 1e-10 * I escalating tenfold up to 1e-6 when the
    plain factorization fails; returns (L, jitter_applied) and warns when
    jitter was needed.
    """
    try:
        return mathkit.cholesky(r), 0.0
    except mathkit.NotPositiveDefiniteError:
        pass
    jitter = JITTER_START
    eye = np.eye(r.shape[0])
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            L = mathkit.cholesky(r + jitter * eye)
        except mathkit.NotPositiveDefiniteError:
            jitter *= 10.0
            continue
        warnings.warn(
            f"correlation matrix required jitter {jitter:.1e} to factorize",
            stacklevel=2,
        )
        return L, jitter
    raise mathkit.NotPositiveDefiniteError(r.shape[0] - 1, float("nan"))


@dataclass(frozen=True)
class GridSpec:
    """Regular grid descriptor (origin, spacing, nx, ny)."""

    origin: tuple[float, float]
    spacing: float
    nx: int
    ny: int

    def coords(self) -> np.ndarray:
        xs = self.origin[0] + self.spacing * np.arange(self.nx)
        ys = self.origin[1] + self.spacing * np.arange(self.ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass
class SiteSet:
    """Ordered station coordinates with per-site covariates.

    ``covariates`` always contains an ``intercept`` entry equal to one;
    it is added when missing. ``ids`` defaults to s001, s002, ...
    """

    coords: np.ndarray
    covariates: dict = field(default_factory=dict)
    ids: list = None
    grid: GridSpec | None = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        if self.coords.shape[0] == 0:
            raise ValueError("site set must be nonempty")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("site coordinates must be finite")
        d = self.coords.shape[0]
        covs = {k: np.asarray(v, dtype=float) for k, v in self.covariates.items()}
        for k, v in covs.items():
            if v.shape != (d,):
                raise ValueError(f"covariate {k!r} has wrong length")
        covs.setdefault("intercept", np.ones(d))
        if not np.allclose(covs["intercept"], 1.0):
            raise ValueError("intercept covariate must equal 1 at every site")
        self.covariates = covs
        if self.ids is None:
            self.ids = [f"s{k + 1:03d}" for k in range(d)]
        if len(self.ids) != d:
            raise ValueError("ids length does not match coordinates")
        if self.grid is not None:
            gc = self.grid.coords()
            if gc.shape != self.coords.shape or not np.allclose(gc, self.coords):
                raise ValueError("grid descriptor inconsistent with coordinates")

    @property
    def n_sites(self) -> int:
        return self.coords.shape[0]

    def covariate_row(self, j: int) -> dict:
        return {k: float(v[j]) for k, v in self.covariates.items()}
