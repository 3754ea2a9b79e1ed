# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: Student-t distribution and extremal-t bivariate calculus.

Mirror of ``_purecore`` (same algorithms, same branch structure); the
likelihood loops below are the hot path of model fitting.
"""

from libc.math cimport (exp, fabs, isinf, isnan, lgamma, log, log1p, pow,
                        sqrt, INFINITY, NAN, M_PI)

cdef double _MACHEPS = 2.220446049250313e-16
cdef double _FPMIN = 1e-300
cdef int _MAX_CF_ITER = 400

RHO_EPS = 1e-12
cdef double _RHO_EPS = 1e-12


cdef double _betacf(double a, double b, double x) nogil:
    cdef double qab = a + b
    cdef double qap = a + 1.0
    cdef double qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef int m, m2
    if fabs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if fabs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if fabs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < 3.0 * _MACHEPS:
            break
    return h


cdef double _incbeta_ln(double a, double b, double x, double ln_beta) nogil:
    cdef double front
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = exp(a * log(x) + b * log1p(-x) - ln_beta)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def incbeta(double a, double b, double x):
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("incbeta requires a > 0 and b > 0")
    if x < 0.0 or x > 1.0:
        raise ValueError("incbeta requires 0 <= x <= 1")
    cdef double ln_beta = lgamma(a) + lgamma(b) - lgamma(a + b)
    return _incbeta_ln(a, b, x, ln_beta)


cdef double _t_tail(double x, double df, double ln_beta) nogil:
    # lower tail T(-|x|); the x*x < df branch uses the complementary
    # incomplete beta so 1 - df/(df + x^2) never cancels
    cdef double xsq = x * x
    if xsq < df:
        return 0.5 - 0.5 * _incbeta_ln(0.5, 0.5 * df, xsq / (df + xsq),
                                       ln_beta)
    return 0.5 * _incbeta_ln(0.5 * df, 0.5, df / (df + xsq), ln_beta)


cdef double _t_cdf(double x, double df, double ln_beta) nogil:
    cdef double p
    if isnan(x):
        return NAN
    if x == 0.0:
        return 0.5
    if isinf(x):
        return 1.0 if x > 0.0 else 0.0
    p = _t_tail(x, df, ln_beta)
    return 1.0 - p if x > 0.0 else p


def student_t_cdf(double x, double df):
    """CDF of the Student t distribution with ``df`` degrees of freedom."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    cdef double ln_beta = lgamma(0.5 * df) + lgamma(0.5) - lgamma(0.5 * (df + 1.0))
    return _t_cdf(x, df, ln_beta)


def student_t_pdf(double x, double df):
    """Density of the Student t distribution with ``df`` degrees of freedom."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if isnan(x):
        return NAN
    cdef double ln = (lgamma(0.5 * (df + 1.0)) - lgamma(0.5 * df)
                      - 0.5 * log(df * M_PI)
                      - 0.5 * (df + 1.0) * log1p(x * x / df))
    return exp(ln)


cdef inline double _clamp_rho(double rho) nogil:
    cdef double hi = 1.0 - _RHO_EPS
    if rho > hi:
        return hi
    if rho < -hi:
        return -hi
    return rho


def clamp_rho(double rho):
    return _clamp_rho(rho)


cdef void _parts(double z1, double z2, double rho, double df,
                 double ln_beta_cdf, double lc_pdf, double* res) nogil:
    cdef double nu = df + 1.0
    cdef double b = sqrt((1.0 - rho * rho) / nu)
    # u and v each from their own pow so V1(z1,z2) == V2(z2,z1) exactly
    cdef double u = pow(z2 / z1, 1.0 / df)
    cdef double v = pow(z1 / z2, 1.0 / df)
    cdef double A = (u - rho) / b
    cdef double B = (v - rho) / b
    cdef double TA, TB, ta, tb, V, c, V1, V2, dta, dtb, r, V12, p

    if A == 0.0:
        TA = 0.5
    elif isinf(A):
        TA = 1.0 if A > 0.0 else 0.0
    else:
        p = _t_tail(A, nu, ln_beta_cdf)
        TA = 1.0 - p if A > 0.0 else p
    if B == 0.0:
        TB = 0.5
    elif isinf(B):
        TB = 1.0 if B > 0.0 else 0.0
    else:
        p = _t_tail(B, nu, ln_beta_cdf)
        TB = 1.0 - p if B > 0.0 else p

    ta = exp(lc_pdf - 0.5 * (nu + 1.0) * log1p(A * A / nu)) if not isinf(A) else 0.0
    tb = exp(lc_pdf - 0.5 * (nu + 1.0) * log1p(B * B / nu)) if not isinf(B) else 0.0

    V = TA / z1 + TB / z2
    c = 1.0 / (df * b)
    V1 = -TA / (z1 * z1) - c * u * ta / (z1 * z1) + c * v * tb / (z1 * z2)
    V2 = -TB / (z2 * z2) - c * v * tb / (z2 * z2) + c * u * ta / (z1 * z2)

    dta = 0.0 if ta == 0.0 else -ta * (nu + 1.0) * A / (nu + A * A)
    dtb = 0.0 if tb == 0.0 else -tb * (nu + 1.0) * B / (nu + B * B)
    r = 1.0 + 1.0 / df
    V12 = (-(c * u / (z1 * z1 * z2)) * (r * ta + c * u * dta)
           - (c * v / (z1 * z2 * z2)) * (r * tb + c * v * dtb))
    res[0] = V
    res[1] = V1
    res[2] = V2
    res[3] = V12


cdef inline double _cdf_ln_beta(double df) nogil:
    cdef double nu = df + 1.0
    return lgamma(0.5 * nu) + lgamma(0.5) - lgamma(0.5 * (nu + 1.0))


cdef inline double _pdf_ln_const(double df) nogil:
    cdef double nu = df + 1.0
    return lgamma(0.5 * (nu + 1.0)) - lgamma(0.5 * nu) - 0.5 * log(nu * M_PI)


def exponent_parts(double z1, double z2, double rho, double df):
    """Return (V, V1, V2, V12) for the bivariate extremal-t exponent measure."""
    if z1 <= 0.0 or z2 <= 0.0:
        raise ValueError("exponent measure requires z1 > 0 and z2 > 0")
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    cdef double res[4]
    _parts(z1, z2, _clamp_rho(rho), df, _cdf_ln_beta(df), _pdf_ln_const(df), res)
    return res[0], res[1], res[2], res[3]


def exponent_v(double z1, double z2, double rho, double df):
    """Bivariate exponent measure V(z1, z2) of the extremal-t model."""
    return exponent_parts(z1, z2, rho, df)[0]


def pair_logdensity(double z1, double z2, double rho, double df):
    """log density of the bivariate extremal-t max-stable law (-inf sentinel)."""
    cdef double V, V1, V2, V12, num, out
    V, V1, V2, V12 = exponent_parts(z1, z2, rho, df)
    num = V1 * V2 - V12
    if not num > 0.0 or isinf(num):
        return -INFINITY
    out = log(num) - V
    if isnan(out):
        return -INFINITY
    return out


def theta_from_rho(double rho, double df):
    """Pairwise extremal coefficient V(1,1) of the extremal-t model."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    cdef double r = _clamp_rho(rho)
    cdef double arg = sqrt((df + 1.0) * (1.0 - r) / (1.0 + r))
    return 2.0 * _t_cdf(arg, df + 1.0, _cdf_ln_beta(df))


def loglik_terms(double[::1] z1, double[::1] z2, double[::1] rho, double df,
                 double[::1] out):
    """Fill ``out`` with per-term pairwise log densities; count -inf terms."""
    cdef Py_ssize_t n = out.shape[0]
    cdef double ln_beta = _cdf_ln_beta(df)
    cdef double lc = _pdf_ln_const(df)
    cdef double res[4]
    cdef double num, t
    cdef Py_ssize_t i
    cdef int bad = 0
    with nogil:
        for i in range(n):
            _parts(z1[i], z2[i], _clamp_rho(rho[i]), df, ln_beta, lc, res)
            num = res[1] * res[2] - res[3]
            if not num > 0.0 or isinf(num):
                out[i] = -INFINITY
                bad += 1
                continue
            t = log(num) - res[0]
            if isnan(t):
                out[i] = -INFINITY
                bad += 1
            else:
                out[i] = t
    return bad


def maxmix_parts(double z1, double z2, double rho1, double rho2,
                 double df1, double df2, double a1, double a2):
    """Exponent measure partials for a two-component max-mixture."""
    if not (0.0 < a1 < 1.0 and 0.0 < a2 < 1.0):
        raise ValueError("max-mixture weights must lie strictly in (0, 1)")
    cdef double Va, Va1, Va2, Va12, Vb, Vb1, Vb2, Vb12, b1, b2
    Va, Va1, Va2, Va12 = exponent_parts(z1 / a1, z2 / a2, rho1, df1)
    b1 = 1.0 - a1
    b2 = 1.0 - a2
    Vb, Vb1, Vb2, Vb12 = exponent_parts(z1 / b1, z2 / b2, rho2, df2)
    return (Va + Vb,
            Va1 / a1 + Vb1 / b1,
            Va2 / a2 + Vb2 / b2,
            Va12 / (a1 * a2) + Vb12 / (b1 * b2))


def maxmix_logdensity(double z1, double z2, double rho1, double rho2,
                      double df1, double df2, double a1, double a2):
    cdef double V, V1, V2, V12, num, out
    V, V1, V2, V12 = maxmix_parts(z1, z2, rho1, rho2, df1, df2, a1, a2)
    num = V1 * V2 - V12
    if not num > 0.0 or isinf(num):
        return -INFINITY
    out = log(num) - V
    if isnan(out):
        return -INFINITY
    return out


def maxmix_loglik_terms(double[::1] z1, double[::1] z2,
                        double[::1] rho1, double[::1] rho2,
                        double[::1] a1, double[::1] a2,
                        double df1, double df2, double[::1] out):
    """Max-mixture analogue of :func:`loglik_terms`."""
    cdef Py_ssize_t n = out.shape[0]
    cdef double lb1 = _cdf_ln_beta(df1)
    cdef double lc1 = _pdf_ln_const(df1)
    cdef double lb2 = _cdf_ln_beta(df2)
    cdef double lc2 = _pdf_ln_const(df2)
    cdef double ra[4]
    cdef double rb[4]
    cdef double w1, w2, V, V1, V2, V12, num, t
    cdef Py_ssize_t i
    cdef int bad = 0
    for i in range(n):
        if not (0.0 < a1[i] < 1.0 and 0.0 < a2[i] < 1.0):
            raise ValueError("max-mixture weights must lie strictly in (0, 1)")
    with nogil:
        for i in range(n):
            w1 = 1.0 - a1[i]
            w2 = 1.0 - a2[i]
            _parts(z1[i] / a1[i], z2[i] / a2[i], _clamp_rho(rho1[i]), df1,
                   lb1, lc1, ra)
            _parts(z1[i] / w1, z2[i] / w2, _clamp_rho(rho2[i]), df2,
                   lb2, lc2, rb)
            V = ra[0] + rb[0]
            V1 = ra[1] / a1[i] + rb[1] / w1
            V2 = ra[2] / a2[i] + rb[2] / w2
            V12 = ra[3] / (a1[i] * a2[i]) + rb[3] / (w1 * w2)
            num = V1 * V2 - V12
            if not num > 0.0 or isinf(num):
                out[i] = -INFINITY
                bad += 1
                continue
            t = log(num) - V
            if isnan(t):
                out[i] = -INFINITY
                bad += 1
            else:
                out[i] = t
    return bad
