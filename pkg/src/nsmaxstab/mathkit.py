"""Numerical utilities: random streams, small dense linear algebra,
derivative-free optimization and finite differences.

Everything here is pure given its inputs; :class:`RngStream` instances
are the only stateful objects and must not be shared between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core


class NotPositiveDefiniteError(ValueError):
    """Raised by :func:`cholesky` with the index of the failing pivot."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot} is {value:.3e}"
        )


class RngStream:
    """Counter-based random stream keyed by (seed, stream id).

    Identical (seed, stream id) pairs reproduce the same draw sequence;
    distinct stream ids give independent streams, so replicate r can
    always consume stream r regardless of evaluation order.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def exponential(self, size=None) -> np.ndarray:
        return self.generator.standard_exponential(size)

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def integers(self, low, high, size=None) -> np.ndarray:
        return self.generator.integers(low, high, size=size)


def check_symmetric(a: np.ndarray, rtol: float = 1e-12) -> None:
    a = np.asarray(a, dtype=float)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return
    if np.max(np.abs(a - a.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric")


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric matrix.

    Raises :class:`NotPositiveDefiniteError` carrying the failing pivot
    index when the matrix is not positive definite.
    """
    a = np.asarray(a, dtype=float)
    check_symmetric(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d <= 0.0 or not math.isfinite(d):
            raise NotPositiveDefiniteError(j, d)
        L[j, j] = math.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def chol_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b given the lower Cholesky factor L of A."""
    n = L.shape[0]
    b = np.asarray(b, dtype=float)
    y = np.zeros_like(b)
    for i in range(n):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B for symmetric positive definite A (B may be a matrix)."""
    L = cholesky(a)
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        return chol_solve(L, b)
    return np.column_stack([chol_solve(L, b[:, k]) for k in range(b.shape[1])])


def spd_logdet(a: np.ndarray) -> float:
    L = cholesky(a)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def student_t_cdf(x: float, df: float) -> float:
    return core.student_t_cdf(float(x), float(df))


def student_t_pdf(x: float, df: float) -> float:
    return core.student_t_pdf(float(x), float(df))


def student_t_quantile(p: float, df: float) -> float:
    """Quantile of the Student t distribution, by bisection on the CDF."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly in (0, 1)")
    if p == 0.5:
        return 0.0
    lo, hi = -1.0, 1.0
    while core.student_t_cdf(lo, df) > p:
        lo *= 2.0
    while core.student_t_cdf(hi, df) < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if core.student_t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, abs(lo)):
            break
    return 0.5 * (lo + hi)


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    nfev: int


def nelder_mead(objective, x0, *, xatol: float = 1e-6, fatol: float = 1e-10,
                max_iter: int | None = None, initial_step=None) -> OptimResult:
    """Minimize ``objective`` with the Nelder-Mead simplex algorithm.

    Deterministic given identical inputs. ``converged`` is set when both
    the simplex diameter and the function spread fall below the
    tolerances; hitting the iteration cap leaves it False.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if n == 0:
        raise ValueError("x0 must have at least one coordinate")
    f0 = float(objective(x0))
    if math.isnan(f0):
        raise ValueError(f"objective is NaN at the starting point {x0.tolist()}")
    if max_iter is None:
        max_iter = 400 * n

    if initial_step is None:
        initial_step = np.where(np.abs(x0) > 1e-8, 0.05 * np.abs(x0), 0.1)
    else:
        initial_step = np.broadcast_to(np.asarray(initial_step, float), (n,))

    sim = np.repeat(x0[None, :], n + 1, axis=0)
    for k in range(n):
        sim[k + 1, k] += initial_step[k]
    fsim = np.array([f0] + [float(objective(sim[k + 1])) for k in range(n)])
    nfev = n + 1

    alpha, gamma, beta, sigma = 1.0, 2.0, 0.5, 0.5
    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(fsim, kind="stable")
        sim = sim[order]
        fsim = fsim[order]
        diam = np.max(np.abs(sim[1:] - sim[0]))
        fspread = np.max(np.abs(fsim[1:] - fsim[0])) if math.isfinite(fsim[0]) \
            else math.inf
        if diam <= xatol and fspread <= fatol:
            converged = True
            break
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        xr = centroid + alpha * (centroid - sim[-1])
        fr = float(objective(xr))
        nfev += 1
        if fr < fsim[0]:
            xe = centroid + gamma * (centroid - sim[-1])
            fe = float(objective(xe))
            nfev += 1
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            if fr < fsim[-1]:
                xc = centroid + beta * (xr - centroid)
            else:
                xc = centroid + beta * (sim[-1] - centroid)
            fc = float(objective(xc))
            nfev += 1
            if fc < min(fr, fsim[-1]):
                sim[-1], fsim[-1] = xc, fc
            else:
                for k in range(1, n + 1):
                    sim[k] = sim[0] + sigma * (sim[k] - sim[0])
                    fsim[k] = float(objective(sim[k]))
                nfev += n

    order = np.argsort(fsim, kind="stable")
    sim = sim[order]
    fsim = fsim[order]
    return OptimResult(x=sim[0].copy(), fun=float(fsim[0]),
                       iterations=iterations, converged=converged, nfev=nfev)


def _fd_steps(x: np.ndarray, step) -> np.ndarray:
    if step is None:
        return 1e-5 * np.maximum(1.0, np.abs(x))
    return np.broadcast_to(np.asarray(step, float), x.shape).copy()


def _checked(objective, x) -> float:
    v = float(objective(x))
    if not math.isfinite(v):
        raise ValueError(
            f"objective is not finite at evaluation point {np.asarray(x).tolist()}"
        )
    return v


def finite_diff_gradient(objective, x, step=None) -> np.ndarray:
    """Central-difference gradient; default step 1e-5 * max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    h = _fd_steps(x, step)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (_checked(objective, x + e) - _checked(objective, x - e)) / (2 * h[i])
    return g


def finite_diff_hessian(objective, x, step=None) -> np.ndarray:
    """Central-difference Hessian, symmetrized as (H + H^T) / 2."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _fd_steps(x, step)
    H = np.zeros((n, n))
    f0 = _checked(objective, x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (_checked(objective, x + ei) - 2 * f0
                   + _checked(objective, x - ei)) / (h[i] * h[i])
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = (_checked(objective, x + ei + ej)
                       - _checked(objective, x + ei - ej)
                       - _checked(objective, x - ei + ej)
                       + _checked(objective, x - ei - ej)) / (4 * h[i] * h[j])
            H[j, i] = H[i, j]
    return 0.5 * (H + H.T)
