"""Scalar kernels: Student-t distribution and extremal-t bivariate calculus.

Pure-Python reference backend. ``_fastcore.pyx`` implements the same
routines in Cython; ``core`` selects whichever is available at import
time. Keep the two in algorithmic lockstep -- the test suite compares
them value-for-value on a shared grid.
"""

import math

_MACHEPS = 2.220446049250313e-16
_FPMIN = 1e-300
_MAX_CF_ITER = 400

# correlations are clamped away from +-1 before entering the exponent
# measure; coincident stations otherwise produce 0/0
RHO_EPS = 1e-12


def _betacf(a, b, x):
    # Continued fraction for the incomplete beta integral, modified
    # Lentz recurrence (Numerical Recipes form).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3.0 * _MACHEPS:
            break
    return h


def _incbeta_ln(a, b, x, ln_beta):
    # ln_beta = lgamma(a) + lgamma(b) - lgamma(a+b), precomputable when
    # (a, b) is constant across a batch.
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - ln_beta)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def incbeta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("incbeta requires a > 0 and b > 0")
    if x < 0.0 or x > 1.0:
        raise ValueError("incbeta requires 0 <= x <= 1")
    ln_beta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    return _incbeta_ln(a, b, x, ln_beta)


def _t_tail(x, df, ln_beta):
    # lower tail T(-|x|); the x*x < df branch uses the complementary
    # incomplete beta so 1 - df/(df + x^2) never cancels
    xsq = x * x
    if xsq < df:
        return 0.5 - 0.5 * _incbeta_ln(0.5, 0.5 * df, xsq / (df + xsq),
                                       ln_beta)
    return 0.5 * _incbeta_ln(0.5 * df, 0.5, df / (df + xsq), ln_beta)


def student_t_cdf(x, df):
    """CDF of the Student t distribution with ``df`` degrees of freedom."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(x):
        return math.nan
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0.0 else 0.0
    ln_beta = math.lgamma(0.5 * df) + math.lgamma(0.5) \
        - math.lgamma(0.5 * (df + 1.0))
    p = _t_tail(x, df, ln_beta)
    return 1.0 - p if x > 0.0 else p


def student_t_pdf(x, df):
    """Density of the Student t distribution with ``df`` degrees of freedom."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(x):
        return math.nan
    ln = (math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df)
          - 0.5 * math.log(df * math.pi)
          - 0.5 * (df + 1.0) * math.log1p(x * x / df))
    return math.exp(ln)


def clamp_rho(rho):
    hi = 1.0 - RHO_EPS
    if rho > hi:
        return hi
    if rho < -hi:
        return -hi
    return rho


def _parts(z1, z2, rho, df, ln_beta_cdf, lc_pdf):
    # Exponent measure of the bivariate extremal-t law and its partials.
    # ln_beta_cdf feeds the t CDF with nu = df + 1 degrees of freedom;
    # lc_pdf is the log normalizing constant of the matching t density.
    nu = df + 1.0
    b = math.sqrt((1.0 - rho * rho) / nu)
    # u and v each from their own pow so V1(z1,z2) == V2(z2,z1) exactly
    u = (z2 / z1) ** (1.0 / df)
    v = (z1 / z2) ** (1.0 / df)
    A = (u - rho) / b
    B = (v - rho) / b

    if A == 0.0:
        TA = 0.5
    elif math.isinf(A):
        TA = 1.0 if A > 0.0 else 0.0
    else:
        p = _t_tail(A, nu, ln_beta_cdf)
        TA = 1.0 - p if A > 0.0 else p
    if B == 0.0:
        TB = 0.5
    elif math.isinf(B):
        TB = 1.0 if B > 0.0 else 0.0
    else:
        p = _t_tail(B, nu, ln_beta_cdf)
        TB = 1.0 - p if B > 0.0 else p

    ta = math.exp(lc_pdf - 0.5 * (nu + 1.0) * math.log1p(A * A / nu)) \
        if not math.isinf(A) else 0.0
    tb = math.exp(lc_pdf - 0.5 * (nu + 1.0) * math.log1p(B * B / nu)) \
        if not math.isinf(B) else 0.0

    V = TA / z1 + TB / z2
    c = 1.0 / (df * b)
    # guard squared-z underflow so division yields inf as in the C core
    z1sq = z1 * z1 or 5e-324
    z2sq = z2 * z2 or 5e-324
    z1z2 = z1 * z2 or 5e-324
    V1 = -TA / z1sq - c * u * ta / z1sq + c * v * tb / z1z2
    V2 = -TB / z2sq - c * v * tb / z2sq + c * u * ta / z1z2

    dta = 0.0 if ta == 0.0 else -ta * (nu + 1.0) * A / (nu + A * A)
    dtb = 0.0 if tb == 0.0 else -tb * (nu + 1.0) * B / (nu + B * B)
    r = 1.0 + 1.0 / df
    z1sq_z2 = z1sq * z2 or 5e-324
    z1_z2sq = z1 * z2sq or 5e-324
    V12 = (-(c * u / z1sq_z2) * (r * ta + c * u * dta)
           - (c * v / z1_z2sq) * (r * tb + c * v * dtb))
    return V, V1, V2, V12


def _cdf_ln_beta(df):
    nu = df + 1.0
    return math.lgamma(0.5 * nu) + math.lgamma(0.5) - math.lgamma(0.5 * (nu + 1.0))


def _pdf_ln_const(df):
    nu = df + 1.0
    return (math.lgamma(0.5 * (nu + 1.0)) - math.lgamma(0.5 * nu)
            - 0.5 * math.log(nu * math.pi))


def exponent_parts(z1, z2, rho, df):
    """Return (V, V1, V2, V12) for the bivariate extremal-t exponent measure."""
    if z1 <= 0.0 or z2 <= 0.0:
        raise ValueError("exponent measure requires z1 > 0 and z2 > 0")
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    rho = clamp_rho(rho)
    return _parts(z1, z2, rho, df, _cdf_ln_beta(df), _pdf_ln_const(df))


def exponent_v(z1, z2, rho, df):
    """Bivariate exponent measure V(z1, z2) of the extremal-t model."""
    return exponent_parts(z1, z2, rho, df)[0]


def pair_logdensity(z1, z2, rho, df):
    """log density of the bivariate extremal-t max-stable law.

    Returns -inf when the density numerator V1*V2 - V12 is numerically
    nonpositive; callers count those occurrences instead of raising.
    """
    V, V1, V2, V12 = exponent_parts(z1, z2, rho, df)
    num = V1 * V2 - V12
    if not num > 0.0 or math.isinf(num):
        return -math.inf
    out = math.log(num) - V
    if math.isnan(out):
        return -math.inf
    return out


def theta_from_rho(rho, df):
    """Pairwise extremal coefficient V(1,1) of the extremal-t model."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    rho = clamp_rho(rho)
    arg = math.sqrt((df + 1.0) * (1.0 - rho) / (1.0 + rho))
    return 2.0 * student_t_cdf(arg, df + 1.0)


def loglik_terms(z1, z2, rho, df, out):
    """Fill ``out`` with per-term pairwise log densities; count -inf terms."""
    n = len(out)
    ln_beta = _cdf_ln_beta(df)
    lc = _pdf_ln_const(df)
    bad = 0
    for i in range(n):
        V, V1, V2, V12 = _parts(z1[i], z2[i], clamp_rho(rho[i]), df, ln_beta, lc)
        num = V1 * V2 - V12
        if not num > 0.0 or math.isinf(num):
            out[i] = -math.inf
            bad += 1
            continue
        t = math.log(num) - V
        if math.isnan(t):
            out[i] = -math.inf
            bad += 1
        else:
            out[i] = t
    return bad


def maxmix_parts(z1, z2, rho1, rho2, df1, df2, a1, a2):
    """Exponent measure partials for a two-component max-mixture.

    Component fields are rescaled by the site weights a(s) and 1 - a(s):
    V(z1, z2) = V^1(z1/a1, z2/a2) + V^2(z1/(1-a1), z2/(1-a2)).
    """
    if not (0.0 < a1 < 1.0 and 0.0 < a2 < 1.0):
        raise ValueError("max-mixture weights must lie strictly in (0, 1)")
    Va, Va1, Va2, Va12 = exponent_parts(z1 / a1, z2 / a2, rho1, df1)
    b1 = 1.0 - a1
    b2 = 1.0 - a2
    Vb, Vb1, Vb2, Vb12 = exponent_parts(z1 / b1, z2 / b2, rho2, df2)
    V = Va + Vb
    V1 = Va1 / a1 + Vb1 / b1
    V2 = Va2 / a2 + Vb2 / b2
    V12 = Va12 / (a1 * a2) + Vb12 / (b1 * b2)
    return V, V1, V2, V12


def maxmix_logdensity(z1, z2, rho1, rho2, df1, df2, a1, a2):
    V, V1, V2, V12 = maxmix_parts(z1, z2, rho1, rho2, df1, df2, a1, a2)
    num = V1 * V2 - V12
    if not num > 0.0 or math.isinf(num):
        return -math.inf
    out = math.log(num) - V
    if math.isnan(out):
        return -math.inf
    return out


def maxmix_loglik_terms(z1, z2, rho1, rho2, a1, a2, df1, df2, out):
    """Max-mixture analogue of :func:`loglik_terms`."""
    n = len(out)
    bad = 0
    for i in range(n):
        t = maxmix_logdensity(z1[i], z2[i], rho1[i], rho2[i], df1, df2,
                              a1[i], a2[i])
        if t == -math.inf:
            bad += 1
        out[i] = t
    return bad
