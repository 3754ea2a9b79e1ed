"""Non-stationary extremal-t max-stable processes: simulation, pairwise
likelihood inference, return levels and extremal-coefficient diagnostics."""

__version__ = "0.1.0"

from .core import BACKEND
from .covmodel import (CovariateKernel, CovariateLink, FunctionKernel,
                       GridSpec, ParametricKernel, PlainCorrelation,
                       PoweredExponential, SiteSet, SumMixtureCorrelation)
from .extremal import (DependenceModel, GevParams, MaxMixtureModel,
                       bivar_logdensity, exponent_V, extremal_coefficient_pair,
                       frechet_to_gumbel, gev_to_frechet, theta_from_rho)
from .inference import (CovariateModelTemplate, Dataset, FitResult,
                        MaxMixtureTemplate, PairSelection, Parameter,
                        ParameterVector, ParametricRadialTemplate,
                        bootstrap_ci, cbic, clic, fit, select_pairs)
from .mathkit import RngStream
from .returnlevel import (Region, areal_extremal_coefficient,
                          return_level_curve, return_level_empirical,
                          return_level_max_exact, simulate_functionals)
from .simulate import (FieldRealizations, SimulationConfig, quantile_scale,
                       simulate_extremal_t, simulate_gaussian,
                       simulate_smith_stephenson, unit_square_sites)

__all__ = [
    "BACKEND", "__version__",
    "CovariateKernel", "CovariateLink", "FunctionKernel", "GridSpec",
    "ParametricKernel", "PlainCorrelation", "PoweredExponential", "SiteSet",
    "SumMixtureCorrelation",
    "DependenceModel", "GevParams", "MaxMixtureModel", "bivar_logdensity",
    "exponent_V", "extremal_coefficient_pair", "frechet_to_gumbel",
    "gev_to_frechet", "theta_from_rho",
    "CovariateModelTemplate", "Dataset", "FitResult", "MaxMixtureTemplate",
    "PairSelection", "Parameter", "ParameterVector",
    "ParametricRadialTemplate", "bootstrap_ci", "cbic", "clic", "fit",
    "select_pairs",
    "RngStream",
    "Region", "areal_extremal_coefficient", "return_level_curve",
    "return_level_empirical", "return_level_max_exact",
    "simulate_functionals",
    "FieldRealizations", "SimulationConfig", "quantile_scale",
    "simulate_extremal_t", "simulate_gaussian", "simulate_smith_stephenson",
    "unit_square_sites",
]
