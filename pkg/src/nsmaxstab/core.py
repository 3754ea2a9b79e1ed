"""Numerical-kernel backend selection.

The package ships the same scalar/batch kernels twice: a Cython
extension (``_fastcore``) and a pure-Python fallback (``_purecore``).
The compiled module is preferred when importable; set the environment
variable ``NSMAXSTAB_BACKEND`` to ``pure`` or ``compiled`` to force a
choice (``compiled`` raises if the extension was not built).
"""

import os

_requested = os.environ.get("NSMAXSTAB_BACKEND", "").strip().lower()

if _requested == "pure":
    from . import _purecore as kernels
    BACKEND = "pure"
elif _requested in ("", "compiled"):
    try:
        from . import _fastcore as kernels
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "NSMAXSTAB_BACKEND=compiled but the _fastcore extension is "
                "not built; run `python setup.py build_ext --inplace`"
            )
        from . import _purecore as kernels
        BACKEND = "pure"
else:
    raise ValueError(
        f"unknown NSMAXSTAB_BACKEND={_requested!r}; use 'pure' or 'compiled'"
    )

incbeta = kernels.incbeta
student_t_cdf = kernels.student_t_cdf
student_t_pdf = kernels.student_t_pdf
clamp_rho = kernels.clamp_rho
exponent_parts = kernels.exponent_parts
exponent_v = kernels.exponent_v
pair_logdensity = kernels.pair_logdensity
theta_from_rho = kernels.theta_from_rho
loglik_terms = kernels.loglik_terms
maxmix_parts = kernels.maxmix_parts
maxmix_logdensity = kernels.maxmix_logdensity
maxmix_loglik_terms = kernels.maxmix_loglik_terms
RHO_EPS = kernels.RHO_EPS
