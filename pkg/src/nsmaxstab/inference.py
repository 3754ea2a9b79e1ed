"""Maximum pairwise likelihood estimation.

Pair-selection policies, unconstrained working-scale parameterization,
Nelder-Mead maximization with restarts, sandwich (J^-1 K J^-1) variance
from finite differences combined with per-replicate scores, CLIC/CBIC
model-selection criteria, and bootstrap confidence intervals.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import core, mathkit
from .covmodel import (CovariateKernel, CovariateLink, ParametricKernel,
                       PlainCorrelation, PoweredExponential, SiteSet,
                       SumMixtureCorrelation, make_scaler)
from .extremal import DependenceModel, MaxMixtureModel

SCORE_FD_STEP = 1e-4


@dataclass
class Dataset:
    """Station set with an m x D matrix of unit-Frechet block maxima.

    Missing observations are masked out (and stored as NaN). Every
    station must have at least one observation.
    """

    sites: SiteSet
    values: np.ndarray
    mask: np.ndarray = None
    unit_frechet: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.sites.n_sites:
            raise ValueError("values must be an m x D matrix matching the sites")
        if self.mask is None:
            self.mask = np.isfinite(self.values)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise ValueError("mask shape must match the value matrix")
        if self.unit_frechet and np.any(self.values[self.mask] <= 0.0):
            raise ValueError("observed unit-Frechet maxima must be positive")
        if np.any(~np.isfinite(self.values[self.mask])):
            raise ValueError("observed values must be finite")
        if np.any(self.mask.sum(axis=0) < 1):
            raise ValueError("every station needs at least one observation")

    @property
    def m(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# working-scale transforms

class Identity:
    tag = "identity"

    def to_working(self, v): return v

    def to_natural(self, w): return w

    def dnat_dwork(self, w): return 1.0


class Log:
    tag = "log"

    def to_working(self, v):
        if v <= 0.0:
            raise ValueError("log-transformed parameter must be positive")
        return math.log(v)

    def to_natural(self, w): return math.exp(w)

    def dnat_dwork(self, w): return math.exp(w)


class Logit:
    """Maps an open interval (lo, hi) to the real line."""

    tag = "logit"

    def __init__(self, lo: float, hi: float):
        self.lo, self.hi = lo, hi

    def to_working(self, v):
        if not self.lo < v < self.hi:
            raise ValueError(f"parameter must lie in ({self.lo}, {self.hi})")
        return math.log((v - self.lo) / (self.hi - v))

    def to_natural(self, w):
        # clamp so saturated working values stay invertible
        s = min(max(1.0 / (1.0 + math.exp(-w)), 1e-12), 1.0 - 1e-12)
        return self.lo + (self.hi - self.lo) * s

    def dnat_dwork(self, w):
        s = 1.0 / (1.0 + math.exp(-w))
        return (self.hi - self.lo) * s * (1.0 - s)


@dataclass(frozen=True)
class Parameter:
    name: str
    value: float
    transform: object = field(default_factory=Identity)
    fixed: bool = False


class ParameterVector:
    """Named parameters with transform tags and fixed-parameter flags."""

    def __init__(self, params: list[Parameter]):
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names")
        self.params = list(params)

    @property
    def free(self) -> list[Parameter]:
        return [p for p in self.params if not p.fixed]

    @property
    def free_names(self) -> list[str]:
        return [p.name for p in self.free]

    def natural(self) -> dict:
        return {p.name: p.value for p in self.params}

    def working(self) -> np.ndarray:
        return np.array([p.transform.to_working(p.value) for p in self.free])

    def with_working(self, w) -> "ParameterVector":
        w = np.asarray(w, dtype=float)
        out = []
        k = 0
        for p in self.params:
            if p.fixed:
                out.append(p)
            else:
                out.append(replace(p, value=p.transform.to_natural(float(w[k]))))
                k += 1
        return ParameterVector(out)

    def with_values(self, **values) -> "ParameterVector":
        out = []
        for p in self.params:
            if p.name in values:
                out.append(replace(p, value=float(values[p.name])))
            else:
                out.append(p)
        return ParameterVector(out)

    def dnat_dwork(self) -> np.ndarray:
        return np.array([
            p.transform.dnat_dwork(p.transform.to_working(p.value))
            for p in self.free
        ])


# ---------------------------------------------------------------------------
# pair selection

@dataclass(frozen=True)
class PairSelection:
    """Pair-inclusion policy: all, closest fraction, or an explicit list.

    Selecting pairs from data-estimated extremal coefficients is not
    offered: reusing the data for selection and estimation biases the
    fit.
    """

    policy: str = "all"
    q: float = None
    pairs: tuple = None

    def __post_init__(self):
        if self.policy not in ("all", "closest_fraction", "explicit"):
            raise ValueError(f"unknown pair policy {self.policy!r}")
        if self.policy == "closest_fraction":
            if self.q is None or not 0.0 < self.q <= 1.0:
                raise ValueError("closest_fraction needs q in (0, 1]")
        if self.policy == "explicit" and not self.pairs:
            raise ValueError("explicit policy needs a nonempty pair list")


def select_pairs(policy: PairSelection, sites: SiteSet) -> np.ndarray:
    """Resolve a pair policy into an array of station index pairs (j1 < j2)."""
    d = sites.n_sites
    if d < 2:
        raise ValueError("need at least two stations to form pairs")
    iu = np.triu_indices(d, k=1)
    allp = np.column_stack(iu)
    if policy.policy == "all":
        return allp
    if policy.policy == "explicit":
        pairs = np.asarray([(min(a, b), max(a, b)) for a, b in policy.pairs],
                           dtype=int)
        if np.any(pairs[:, 0] == pairs[:, 1]) or np.any(pairs < 0) \
                or np.any(pairs >= d):
            raise ValueError("explicit pair list contains invalid indices")
        return pairs
    dist = np.hypot(*(sites.coords[allp[:, 0]] - sites.coords[allp[:, 1]]).T)
    keep = math.ceil(policy.q * allp.shape[0])
    # ties broken by (j1, j2) lexicographic order via stable sort on distance
    order = np.argsort(dist, kind="stable")
    chosen = np.sort(order[:keep])
    return allp[chosen]


# ---------------------------------------------------------------------------
# model templates

class ModelTemplate:
    """Maps a natural-scale parameter dictionary to a dependence model."""

    def parameter_vector(self) -> ParameterVector:
        raise NotImplementedError

    def build(self, natural: dict):
        raise NotImplementedError

    def start_overrides(self) -> list[dict]:
        """Candidate range values for the default start-value grid search."""
        return [{}]


class ParametricRadialTemplate(ModelTemplate):
    """Simulation-study model: omega(s) = beta1 * 2^(-beta2 |s_x|), scaled
    by (2 df)^(2/alpha) so parameter values stay comparable across df."""

    def __init__(self, beta1=0.1, beta2=0.0, df=5.0, alpha=1.0, *,
                 estimate_beta2=True, estimate_df=False, estimate_alpha=True,
                 brown_resnick_scaling=True):
        self.brown_resnick_scaling = brown_resnick_scaling
        self._init = dict(beta1=beta1, beta2=beta2, df=df, alpha=alpha)
        self._fixed = dict(beta2=not estimate_beta2, df=not estimate_df,
                           alpha=not estimate_alpha)

    def parameter_vector(self) -> ParameterVector:
        i = self._init
        return ParameterVector([
            Parameter("beta1", i["beta1"], Log()),
            Parameter("beta2", i["beta2"], Identity(), fixed=self._fixed["beta2"]),
            Parameter("df", i["df"], Log(), fixed=self._fixed["df"]),
            Parameter("alpha", i["alpha"], Logit(0.0, 2.0),
                      fixed=self._fixed["alpha"]),
        ])

    def build(self, natural: dict):
        scale = (2.0 * natural["df"]) ** (2.0 / natural["alpha"]) \
            if self.brown_resnick_scaling else 1.0
        kernel = ParametricKernel(natural["beta1"], natural["beta2"], scale)
        corr = PlainCorrelation(kernel, PoweredExponential(natural["alpha"]))
        return DependenceModel(natural["df"], corr)

    def start_overrides(self) -> list[dict]:
        return [{"beta1": w} for w in (0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)]


class CovariateModelTemplate(ModelTemplate):
    """Covariate-linked model in the style of the fitted model zoo.

    ``omega_x_covs`` etc. name covariates beyond the intercept; covariates
    are standardized with center/scale taken from ``sites`` and stored
    with the model. ``alphas`` holds one smoothness for a plain model or
    two for a Gaussian sum-mixture (sharing the kernel field).
    """

    def __init__(self, sites: SiteSet, *, omega_x_covs=(), anisotropic=False,
                 omega_y_covs=(), mixture_a_covs=None, df=5.0,
                 estimate_df=False, alphas=(1.0,)):
        self.anisotropic = anisotropic
        self.omega_x_covs = tuple(omega_x_covs)
        self.omega_y_covs = tuple(omega_y_covs) if anisotropic else ()
        self.mixture_a_covs = None if mixture_a_covs is None \
            else tuple(mixture_a_covs)
        self.df = df
        self.estimate_df = estimate_df
        self.alphas = tuple(alphas)
        if self.mixture_a_covs is not None and len(self.alphas) != 2:
            raise ValueError("sum-mixture models need exactly two alphas")
        if self.mixture_a_covs is None and len(self.alphas) != 1:
            raise ValueError("plain models need exactly one alpha")
        used = set(self.omega_x_covs) | set(self.omega_y_covs) \
            | set(self.mixture_a_covs or ())
        for name in used:
            if name not in sites.covariates:
                raise KeyError(f"covariate {name!r} missing from site set")
        self.scaler = make_scaler(sites.covariates, sorted(used))

    def parameter_vector(self) -> ParameterVector:
        params = [Parameter("omega_x.intercept", math.log(0.5))]
        params += [Parameter(f"omega_x.{c}", 0.0) for c in self.omega_x_covs]
        if self.anisotropic:
            params.append(Parameter("omega_y.intercept", math.log(0.5)))
            params += [Parameter(f"omega_y.{c}", 0.0) for c in self.omega_y_covs]
            params.append(Parameter("delta.intercept", 0.0))
        if self.mixture_a_covs is not None:
            params.append(Parameter("a.intercept", 0.0))
            params += [Parameter(f"a.{c}", 0.0) for c in self.mixture_a_covs]
        if len(self.alphas) == 1:
            params.append(Parameter("alpha", self.alphas[0], Logit(0.0, 2.0)))
        else:
            params.append(Parameter("alpha1", self.alphas[0], Logit(0.0, 2.0)))
            params.append(Parameter("alpha2", self.alphas[1], Logit(0.0, 2.0)))
        params.append(Parameter("df", self.df, Log(), fixed=not self.estimate_df))
        return ParameterVector(params)

    def _link(self, natural, block, covs) -> CovariateLink:
        names = ("intercept",) + covs
        return CovariateLink(names, tuple(natural[f"{block}.{c}"] for c in names))

    def build(self, natural: dict):
        kernel = CovariateKernel(
            omega_x=self._link(natural, "omega_x", self.omega_x_covs),
            omega_y=self._link(natural, "omega_y", self.omega_y_covs)
            if self.anisotropic else None,
            delta=CovariateLink(("intercept",), (natural["delta.intercept"],))
            if self.anisotropic else None,
            scaler=self.scaler,
        )
        if self.mixture_a_covs is None:
            corr = PlainCorrelation(kernel, PoweredExponential(natural["alpha"]))
        else:
            corr = SumMixtureCorrelation(
                comp1=PlainCorrelation(kernel, PoweredExponential(natural["alpha1"])),
                comp2=PlainCorrelation(kernel, PoweredExponential(natural["alpha2"])),
                weight=self._link(natural, "a", self.mixture_a_covs),
                scaler=self.scaler,
            )
        return DependenceModel(natural["df"], corr)

    def start_overrides(self) -> list[dict]:
        return [{"omega_x.intercept": math.log(w),
                 **({"omega_y.intercept": math.log(w)} if self.anisotropic else {})}
                for w in (0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)]

    @property
    def n_free(self) -> int:
        return len(self.parameter_vector().free)


class MaxMixtureTemplate(ModelTemplate):
    """Two-component max-mixture with a logit-linked spatial proportion."""

    def __init__(self, sites: SiteSet, comp1: ModelTemplate,
                 comp2: ModelTemplate, a_covs=()):
        self.comp1 = comp1
        self.comp2 = comp2
        self.a_covs = tuple(a_covs)
        for name in self.a_covs:
            if name not in sites.covariates:
                raise KeyError(f"covariate {name!r} missing from site set")
        self.scaler = make_scaler(sites.covariates, self.a_covs)

    def parameter_vector(self) -> ParameterVector:
        params = []
        for prefix, tpl in (("m1", self.comp1), ("m2", self.comp2)):
            for p in tpl.parameter_vector().params:
                params.append(replace(p, name=f"{prefix}.{p.name}"))
        params.append(Parameter("a.intercept", 0.0))
        params += [Parameter(f"a.{c}", 0.0) for c in self.a_covs]
        return ParameterVector(params)

    def build(self, natural: dict):
        sub1 = {k[3:]: v for k, v in natural.items() if k.startswith("m1.")}
        sub2 = {k[3:]: v for k, v in natural.items() if k.startswith("m2.")}
        names = ("intercept",) + self.a_covs
        weight = CovariateLink(names, tuple(natural[f"a.{c}"] for c in names))
        return MaxMixtureModel(
            components=(self.comp1.build(sub1), self.comp2.build(sub2)),
            weight=weight, scaler=self.scaler,
        )

    def start_overrides(self) -> list[dict]:
        return [{f"m1.{k}": v for k, v in ov.items()}
                | {f"m2.{k}": v for k, v in ov2.items()}
                for ov in self.comp1.start_overrides()[:3]
                for ov2 in self.comp2.start_overrides()[:3]]


# ---------------------------------------------------------------------------
# pairwise likelihood

class PairwiseLikelihood:
    """Precomputed replicate-pair term layout for one dataset and pair set.

    Terms with both observations present are flattened once; each
    objective evaluation recomputes only the pair correlations and the
    per-term log densities. The total is accumulated with math.fsum, so
    it is exactly invariant to pair and replicate ordering.
    """

    def __init__(self, data: Dataset, template: ModelTemplate,
                 pairs: np.ndarray):
        self.data = data
        self.template = template
        self.pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        if self.pairs.shape[0] == 0:
            raise ValueError("pair set is empty")
        z1, z2, term_pair, term_rep = [], [], [], []
        for p, (j1, j2) in enumerate(self.pairs):
            rows = np.flatnonzero(data.mask[:, j1] & data.mask[:, j2])
            z1.append(data.values[rows, j1])
            z2.append(data.values[rows, j2])
            term_pair.append(np.full(rows.size, p))
            term_rep.append(rows)
        self.z1 = np.ascontiguousarray(np.concatenate(z1))
        self.z2 = np.ascontiguousarray(np.concatenate(z2))
        self.term_pair = np.concatenate(term_pair)
        self.term_rep = np.concatenate(term_rep)
        self.n_terms = self.z1.size
        if self.n_terms == 0:
            raise ValueError("no jointly observed replicate-pair terms")
        self.invalid_terms = 0
        self._terms = np.empty(self.n_terms)

    def _term_values(self, natural: dict) -> np.ndarray:
        model = self.template.build(natural)
        coords = self.data.sites.coords
        covs = self.data.sites.covariates
        if isinstance(model, MaxMixtureModel):
            c1, c2 = model.components
            rho1 = np.ascontiguousarray(
                c1.pair_rho(coords, covs, self.pairs)[self.term_pair])
            rho2 = np.ascontiguousarray(
                c2.pair_rho(coords, covs, self.pairs)[self.term_pair])
            a = model.weights(covs)
            a1 = np.ascontiguousarray(a[self.pairs[self.term_pair, 0]])
            a2 = np.ascontiguousarray(a[self.pairs[self.term_pair, 1]])
            bad = core.maxmix_loglik_terms(self.z1, self.z2, rho1, rho2,
                                           a1, a2, c1.df, c2.df, self._terms)
        else:
            rho = np.ascontiguousarray(
                model.pair_rho(coords, covs, self.pairs)[self.term_pair])
            bad = core.loglik_terms(self.z1, self.z2, rho, model.df,
                                    self._terms)
        if bad == self.n_terms:
            raise ValueError("pairwise likelihood is -inf for every term")
        self.invalid_terms += int(bad)
        return self._terms

    def loglik(self, natural: dict) -> float:
        return math.fsum(self._term_values(natural))

    def per_replicate(self, natural: dict) -> np.ndarray:
        terms = self._term_values(natural)
        return np.bincount(self.term_rep, weights=terms, minlength=self.data.m)


@dataclass
class FitResult:
    """Maximum pairwise likelihood fit with sandwich uncertainty."""

    params: ParameterVector
    loglik: float
    pairs: np.ndarray
    policy: PairSelection
    m: int
    converged: bool
    iterations: int
    nfev: int
    restart_values: list
    model: object = None
    J: np.ndarray = None
    K: np.ndarray = None
    covariance: np.ndarray = None
    se: dict = None
    clic: float = None
    cbic: float = None
    invalid_terms: int = 0

    def natural(self) -> dict:
        return self.params.natural()

    def to_json_dict(self) -> dict:
        free = self.params.free_names
        out = {
            "estimates": self.natural(),
            "free_parameters": free,
            "transforms": {p.name: p.transform.tag for p in self.params.params},
            "loglik": self.loglik,
            "m": self.m,
            "n_pairs": int(self.pairs.shape[0]),
            "pairs": self.pairs.tolist(),
            "pair_policy": {"policy": self.policy.policy, "q": self.policy.q},
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "nfev": int(self.nfev),
            "restart_values": self.restart_values,
            "invalid_terms": int(self.invalid_terms),
            "clic": self.clic,
            "cbic": self.cbic,
        }
        if self.se is not None:
            out["stderr"] = self.se
        if self.covariance is not None:
            out["covariance"] = self.covariance.tolist()
            out["covariance_order"] = free
        return out

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)


def _default_start(template: ModelTemplate, pv: ParameterVector,
                   objective) -> ParameterVector:
    # stationary moment-style initialization: grid search over candidate
    # range values, all other coefficients at their template defaults
    best, best_val = pv, math.inf
    for overrides in template.start_overrides():
        cand = pv.with_values(**overrides) if overrides else pv
        val = objective(cand.working())
        if val < best_val:
            best, best_val = cand, val
    return best


def fit(data: Dataset, template: ModelTemplate, start: ParameterVector = None,
        policy: PairSelection = PairSelection("all"), *, restarts: int = 3,
        restart_scale: float = 0.1, restart_seed: int = 0,
        compute_sandwich: bool = True, xatol: float = 1e-5,
        fatol: float = 1e-7, max_iter: int = None) -> FitResult:
    """Maximize the pairwise log likelihood on the working scale.

    Runs Nelder-Mead from the starting point and from ``restarts - 1``
    perturbed copies, keeping the best run. Sandwich matrices, standard
    errors and CLIC/CBIC are attached unless ``compute_sandwich=False``.
    """
    pairs = select_pairs(policy, data.sites)
    like = PairwiseLikelihood(data, template, pairs)
    pv0 = start if start is not None else template.parameter_vector()

    def objective(w):
        try:
            value = like.loglik(pv0.with_working(w).natural())
        except (ValueError, OverflowError):
            return math.inf
        return math.inf if value == -math.inf else -value

    if start is None:
        pv0 = _default_start(template, pv0, objective)

    w0 = pv0.working()
    runs = []
    for k in range(max(restarts, 1)):
        if k == 0:
            wstart = w0
        else:
            rng = mathkit.RngStream(restart_seed, k)
            wstart = w0 + restart_scale * rng.normal(w0.size)
        try:
            res = mathkit.nelder_mead(objective, wstart, xatol=xatol,
                                      fatol=fatol, max_iter=max_iter)
        except ValueError:
            continue
        runs.append(res)
    if not runs:
        raise ValueError("objective could not be evaluated at any start")
    best = min(runs, key=lambda r: r.fun)
    if not any(r.converged for r in runs):
        warnings.warn("no optimizer run converged; result kept with "
                      "converged=False", stacklevel=2)

    pv_hat = pv0.with_working(best.x)
    like.invalid_terms = 0
    loglik_hat = like.loglik(pv_hat.natural())
    result = FitResult(
        params=pv_hat, loglik=loglik_hat, pairs=pairs, policy=policy,
        m=data.m, converged=best.converged, iterations=best.iterations,
        nfev=best.nfev,
        restart_values=[(-r.fun if math.isfinite(r.fun) else None) for r in runs],
        model=template.build(pv_hat.natural()),
        invalid_terms=like.invalid_terms,
    )
    if compute_sandwich:
        try:
            J, K, cov_w = sandwich_variance(pv_hat, data, pairs,
                                            template=template,
                                            likelihood=like)
        except ValueError:
            # flat or slightly indefinite likelihood directions (weakly
            # identified parameters) break J; escalate a ridge until the
            # factorization goes through so the model can still be ranked
            ridge = 1e-8
            while True:
                try:
                    J, K, cov_w = sandwich_variance(
                        pv_hat, data, pairs, template=template,
                        likelihood=like, ridge=ridge)
                    break
                except ValueError:
                    ridge *= 100.0
                    if ridge > 1.0:
                        raise
            warnings.warn(
                "J is numerically singular at the optimum; sandwich "
                f"matrices regularized with ridge {ridge:g} -- review "
                "parameter identifiability", stacklevel=2)
        result.J, result.K = J, K
        dg = pv_hat.dnat_dwork()
        result.covariance = dg[:, None] * cov_w * dg[None, :]
        result.se = {n: math.sqrt(max(result.covariance[i, i], 0.0))
                     for i, n in enumerate(pv_hat.free_names)}
        tr = float(np.trace(mathkit.spd_solve(J, K)))
        result.clic = -2.0 * loglik_hat + 2.0 * tr
        result.cbic = -2.0 * loglik_hat + math.log(data.m) * tr
    return result


def _sandwich_trace(J: np.ndarray, K: np.ndarray) -> float:
    try:
        return float(np.trace(mathkit.spd_solve(J, K)))
    except mathkit.NotPositiveDefiniteError as err:
        raise ValueError(
            "J is singular at the optimum; review parameter identifiability"
        ) from err


def sandwich_variance(pv_hat: ParameterVector, data: Dataset,
                      pairs: np.ndarray, *, template: ModelTemplate,
                      likelihood: PairwiseLikelihood = None,
                      step: float = SCORE_FD_STEP, ridge: float = 0.0):
    """Per-replicate J and K matrices and the working-scale covariance.

    J is the negated finite-difference Hessian of the total pairwise log
    likelihood divided by m; K is the empirical covariance of the m
    per-replicate finite-difference score vectors (the direct method).
    The covariance of the estimator is J^-1 K J^-1 / m.
    """
    like = likelihood if likelihood is not None \
        else PairwiseLikelihood(data, template, pairs)
    w_hat = pv_hat.working()
    p = w_hat.size
    m = data.m

    def total(w):
        return like.loglik(pv_hat.with_working(w).natural())

    H = mathkit.finite_diff_hessian(total, w_hat, step=step)
    J = -H / m
    if ridge > 0.0:
        J = J + ridge * max(float(np.max(np.abs(np.diag(J)))), 1.0) * np.eye(p)

    scores = np.zeros((m, p))
    for k in range(p):
        e = np.zeros(p)
        e[k] = step
        lp = like.per_replicate(pv_hat.with_working(w_hat + e).natural())
        lm = like.per_replicate(pv_hat.with_working(w_hat - e).natural())
        scores[:, k] = (lp - lm) / (2.0 * step)
    centered = scores - scores.mean(axis=0)
    K = centered.T @ centered / m

    try:
        Jinv_K = mathkit.spd_solve(J, K) if p else np.zeros((0, 0))
        cov_w = mathkit.spd_solve(J, Jinv_K.T).T / m
    except mathkit.NotPositiveDefiniteError as err:
        raise ValueError(
            "J is singular at the optimum; review parameter identifiability"
        ) from err
    cov_w = 0.5 * (cov_w + cov_w.T)
    return J, K, cov_w


def clic(fit_result: FitResult) -> float:
    """Composite likelihood information criterion (lower is better)."""
    tr = _sandwich_trace(fit_result.J, fit_result.K)
    return -2.0 * fit_result.loglik + 2.0 * tr


def cbic(fit_result: FitResult) -> float:
    """Composite Bayesian information criterion (lower is better)."""
    tr = _sandwich_trace(fit_result.J, fit_result.K)
    return -2.0 * fit_result.loglik + math.log(fit_result.m) * tr


@dataclass
class BootstrapResult:
    intervals: dict
    estimates: dict
    n_failed: int
    B: int


def bootstrap_ci(data: Dataset, template: ModelTemplate,
                 policy: PairSelection, B: int, seed: int, *,
                 start: ParameterVector = None, block_length: int = None,
                 level: float = 0.95, max_iter: int = None) -> BootstrapResult:
    """Bootstrap quantile intervals by resampling independent replicates.

    Refits start at the full-data estimate with a single optimizer run.
    ``block_length`` switches to a circular block bootstrap for mildly
    time-dependent replicates. Fails if more than 20% of refits error
    out or diverge.
    """
    if B < 2:
        raise ValueError("need at least B = 2 resamples")
    if B < 100:
        warnings.warn("B >= 100 recommended for bootstrap intervals",
                      stacklevel=2)
    base = fit(data, template, start=start, policy=policy, restarts=1,
               compute_sandwich=False, max_iter=max_iter)
    m = data.m
    draws = []
    failed = 0
    for b in range(B):
        rng = mathkit.RngStream(seed, b + 1)
        if block_length is None:
            rows = rng.integers(0, m, size=m)
        else:
            n_blocks = math.ceil(m / block_length)
            starts = rng.integers(0, m, size=n_blocks)
            rows = np.concatenate([
                (s + np.arange(block_length)) % m for s in starts
            ])[:m]
        resampled = Dataset(data.sites, data.values[rows], data.mask[rows],
                            unit_frechet=data.unit_frechet)
        try:
            r = fit(resampled, template, start=base.params, policy=policy,
                    restarts=1, compute_sandwich=False, max_iter=max_iter)
        except ValueError:
            failed += 1
            continue
        draws.append([r.natural()[n] for n in base.params.free_names])
    if failed > 0.2 * B:
        raise ValueError(f"{failed} of {B} bootstrap refits failed")
    draws = np.asarray(draws)
    alpha = 0.5 * (1.0 - level)
    intervals = {}
    for i, name in enumerate(base.params.free_names):
        lo = float(np.quantile(draws[:, i], alpha))
        hi = float(np.quantile(draws[:, i], 1.0 - alpha))
        intervals[name] = (lo, hi)
    return BootstrapResult(intervals=intervals, estimates=base.natural(),
                           n_failed=failed, B=B)


def pairwise_loglik(pv: ParameterVector, data: Dataset,
                    template: ModelTemplate, pairs: np.ndarray) -> float:
    """Pairwise log likelihood at a natural-scale parameter vector."""
    like = PairwiseLikelihood(data, template, pairs)
    return like.loglik(pv.natural())
