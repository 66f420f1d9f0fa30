"""Maximum-likelihood estimation for vMF and Watson distributions.

The mean direction / axis comes from the resultant vector (vMF) or from the
extreme eigenvectors of the scatter matrix (Watson).  The concentration
requires inverting a special-function ratio; this module implements the fast
closed-form approximations, two-step Newton refinement, the rigorous
lower/middle/upper root bounds for the Watson case, and bracketed
high-precision inverses used as the reference ("exact") method.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import VmfParams, WatsonParams, as_unit_rows, watson_log_norm_const
from .errors import ConvergenceError
from .specfun import bessel_ratio, g_ratio

# Concentration estimates are capped at the value matching a mean resultant
# length of 1 - 1e-8; beyond that the inverse problem diverges.
MAX_RBAR = 1.0 - 1e-8


@dataclass
class VmfSuffStats:
    """Sufficient statistics of a (weighted) vMF sample."""

    resultant: np.ndarray
    weight: float
    dim: int

    @property
    def r_bar(self) -> float:
        return float(np.linalg.norm(self.resultant) / self.weight)


@dataclass
class ScatterMatrix:
    """Weighted second-moment matrix S = sum_i w_i x_i x_i^T / sum_i w_i."""

    matrix: np.ndarray
    weight: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class BoundTriple:
    """Lower / middle / upper bounds for the Watson concentration root."""

    lower: float
    mid: float
    upper: float


def vmf_suff_stats(data, weights=None) -> VmfSuffStats:
    """Resultant vector and total weight of a dataset (unit weights by default)."""
    x = as_unit_rows(data)
    if weights is None:
        return VmfSuffStats(resultant=x.sum(axis=0), weight=float(x.shape[0]), dim=x.shape[1])
    w = np.asarray(weights, dtype=float)
    if w.shape != (x.shape[0],):
        raise ValueError(f"weights must have shape ({x.shape[0]},), got {w.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = float(w.sum())
    if total <= 0:
        raise ValueError("total weight must be positive")
    return VmfSuffStats(resultant=w @ x, weight=total, dim=x.shape[1])


def scatter_matrix(data, weights=None) -> ScatterMatrix:
    """Weighted scatter matrix of unit rows; trace is 1 by construction."""
    x = as_unit_rows(data)
    if weights is None:
        s = x.T @ x
        total = float(x.shape[0])
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(w.sum())
        if total <= 0:
            raise ValueError("total weight must be positive")
        s = x.T @ (w[:, None] * x)
    s /= total
    return ScatterMatrix(matrix=0.5 * (s + s.T), weight=total)


def symmetric_eigs(scatter: ScatterMatrix | np.ndarray):
    """Full spectral decomposition of a symmetric matrix, eigenvalues descending.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns, ordered
    to match.  Backed by LAPACK's symmetric solver; the residual and
    orthonormality contracts are enforced by the test suite.
    """
    s = scatter.matrix if isinstance(scatter, ScatterMatrix) else np.asarray(scatter, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if not np.allclose(s, s.T, atol=1e-10):
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(s)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def kappa_banerjee(r_bar: float, p: int) -> float:
    """Closed-form concentration estimate r(p - r^2)/(1 - r^2).

    Needs no special-function evaluation, which is what makes it usable in
    very high dimension.
    """
    if not 0.0 <= r_bar < 1.0:
        raise ValueError(f"mean resultant length must lie in [0, 1), got {r_bar}")
    if p < 2:
        raise ValueError(f"dimension p must be >= 2, got {p}")
    return r_bar * (p - r_bar * r_bar) / (1.0 - r_bar * r_bar)


def kappa_newton(r_bar: float, p: int, steps: int = 2) -> float:
    """Concentration estimate: closed-form start plus Newton steps (default 2).

    Each step uses A_p'(k) = 1 - A_p(k)^2 - (p-1) A_p(k) / k.  The result is
    clamped to be nonnegative.
    """
    if not 0.0 < r_bar < 1.0:
        raise ValueError(f"mean resultant length must lie in (0, 1), got {r_bar}")
    kappa = kappa_banerjee(r_bar, p)
    for _ in range(steps):
        if kappa <= 0.0:
            break
        a = bessel_ratio(p, kappa)
        deriv = 1.0 - a * a - (p - 1.0) / kappa * a
        kappa -= (a - r_bar) / deriv
    return max(kappa, 0.0)


def ap_inverse(r_bar: float, p: int, tol: float = 1e-10) -> float:
    """Solve A_p(kappa) = r_bar to |A_p(kappa) - r_bar| <= tol.

    Safeguarded bisection on a bracket grown geometrically from the
    closed-form estimate, polished by Newton steps once inside.
    """
    if not 0.0 <= r_bar < 1.0:
        raise ValueError(f"mean resultant length must lie in [0, 1), got {r_bar}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if r_bar == 0.0:
        return 0.0
    lo, hi = 0.0, kappa_banerjee(r_bar, p) + 1.0
    for _ in range(200):
        if bessel_ratio(p, hi) >= r_bar:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"could not bracket A_p inverse at r={r_bar}, p={p}")
    return _polished_root(lambda k: bessel_ratio(p, k) - r_bar, lo, hi, tol)


def _polished_root(fn, lo, hi, tol, max_iters=300):
    """Find fn = 0 on [lo, hi] (fn increasing) to |fn| <= tol.

    Plain bisection with a Newton polish from central finite differences; the
    Newton iterate is kept only while it stays inside the shrinking bracket.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo > 0 or f_hi < 0:
        raise ConvergenceError(f"root bracket invalid: f({lo})={f_lo}, f({hi})={f_hi}")
    x = 0.5 * (lo + hi)
    for _ in range(max_iters):
        fx = fn(x)
        if abs(fx) <= tol:
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        h = max(1e-6, 1e-6 * abs(x))
        deriv = (fn(x + h) - fn(x - h)) / (2.0 * h)
        x_newton = x - fx / deriv if deriv > 0 else math.inf
        x = x_newton if lo < x_newton < hi else 0.5 * (lo + hi)
    raise ConvergenceError("root refinement did not reach its tolerance")


def vmf_mle(data, method: str = "newton2") -> VmfParams:
    """Fit a single vMF distribution by maximum likelihood.

    method is one of 'banerjee' (closed form), 'newton2' (two Newton steps)
    or 'exact' (bracketed inverse of A_p).  Raises for r_bar = 0 (the mean
    direction is undefined) and for r_bar = 1 (the concentration diverges).
    """
    stats = vmf_suff_stats(data)
    norm = np.linalg.norm(stats.resultant)
    if norm <= stats.weight * 1e-12:
        raise ValueError("mean direction undefined: the resultant vector is zero")
    r_bar = stats.r_bar
    if r_bar >= 1.0 - 1e-12:
        raise ValueError("concentration unbounded: all points coincide (r_bar = 1)")
    return VmfParams(mu=stats.resultant / norm, kappa=estimate_kappa_vmf(r_bar, stats.dim, method))


def estimate_kappa_vmf(r_bar: float, p: int, method: str = "newton2") -> float:
    """Dispatch a vMF concentration estimate by method name."""
    r_bar = min(r_bar, MAX_RBAR)
    if method == "banerjee":
        return kappa_banerjee(r_bar, p)
    if method == "newton2":
        return kappa_newton(r_bar, p, steps=2)
    if method == "exact":
        return ap_inverse(r_bar, p, tol=1e-10)
    raise ValueError(f"unknown kappa method {method!r}")


def watson_bounds(a: float, c: float, r: float) -> BoundTriple:
    """Lower/middle/upper bounds for the root of g(a, c; kappa) = r.

    With rho = (rc - a) / (r(1 - r)):

        L(r) = rho (1 + (1-r)/(c-a))
        B(r) = rho/2 (1 + sqrt(1 + 4(c+1) r (1-r) / (a (c-a))))
        U(r) = rho (1 + r/a)

    All three share the sign of rc - a and vanish at r = a/c.  The true root
    satisfies L < root < B < U for r > a/c and L < B < root < U for r < a/c.
    """
    if not 0.0 < a < c:
        raise ValueError(f"bounds need c > a > 0, got a={a}, c={c}")
    if not 0.0 < r < 1.0:
        raise ValueError(f"bounds need 0 < r < 1, got r={r}")
    rho = (r * c - a) / (r * (1.0 - r))
    lower = rho * (1.0 + (1.0 - r) / (c - a))
    mid = 0.5 * rho * (1.0 + math.sqrt(1.0 + 4.0 * (c + 1.0) * r * (1.0 - r) / (a * (c - a))))
    upper = rho * (1.0 + r / a)
    return BoundTriple(lower=lower, mid=mid, upper=upper)


def kappa_bbg(a: float, c: float, r: float) -> float:
    """Heuristic concentration approximation (cr - a)/(r(1 - r)) + r/(2c(1 - r)).

    Kept for benchmarking against the bound-based estimates.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"approximation needs 0 < r < 1, got r={r}")
    return (c * r - a) / (r * (1.0 - r)) + r / (2.0 * c * (1.0 - r))


def g_inverse(a: float, c: float, r: float, tol: float = 1e-10) -> float:
    """Solve g(a, c; kappa) = r to |g - r| <= tol.

    The bound triple provides a guaranteed starting bracket [L(r), U(r)]; a
    bracket violation would falsify the bounds and raises ConvergenceError.
    Exactly zero at r = a/c.
    """
    if not 0.0 < a < c:
        raise ValueError(f"g_inverse needs c > a > 0, got a={a}, c={c}")
    if not 0.0 < r < 1.0:
        raise ValueError(f"g_inverse needs 0 < r < 1, got r={r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if r == a / c:
        return 0.0
    b = watson_bounds(a, c, r)
    lo, hi = b.lower, b.upper
    f_lo = g_ratio(a, c, lo) - r
    f_hi = g_ratio(a, c, hi) - r
    # Tiny numerical slack at the bracket ends; the root bounds are strict in
    # exact arithmetic.
    if f_lo > 0 and f_lo < 1e-13:
        return lo
    if f_hi < 0 and f_hi > -1e-13:
        return hi
    if f_lo > 0 or f_hi < 0:
        raise ConvergenceError(
            f"g-root bracket violated at a={a}, c={c}, r={r}: g(L)-r={f_lo:.3e}, g(U)-r={f_hi:.3e}"
        )
    return _polished_root(lambda k: g_ratio(a, c, k) - r, lo, hi, tol)


def watson_mle(data) -> WatsonParams:
    """Fit a single Watson distribution by maximum likelihood.

    Builds the scatter matrix, solves the concentration root once with the
    largest and once with the smallest eigenvalue, and keeps the candidate
    with the higher log-likelihood.  A tied extreme eigenvalue (no unique
    axis) sets ``degenerate`` on the result.
    """
    x = as_unit_rows(data)
    return watson_mle_from_scatter(scatter_matrix(x))


def watson_mle_from_scatter(scatter: ScatterMatrix) -> WatsonParams:
    """Watson MLE given a (possibly weighted) scatter matrix."""
    p = scatter.dim
    vals, vecs = symmetric_eigs(scatter)
    a, c = 0.5, 0.5 * p
    best = None
    for idx in (0, p - 1):
        r = float(min(max(vals[idx], 1e-12), MAX_RBAR))
        kappa = g_inverse(a, c, r, tol=1e-10)
        loglik = kappa * vals[idx] + watson_log_norm_const(p, kappa)
        if best is None or loglik > best[0]:
            best = (loglik, vecs[:, idx] / np.linalg.norm(vecs[:, idx]), kappa, idx)
    _, mu, kappa, idx = best
    gap = vals[0] - vals[1] if idx == 0 else vals[p - 2] - vals[p - 1]
    return WatsonParams(mu=mu, kappa=kappa, degenerate=bool(gap <= 1e-12))
