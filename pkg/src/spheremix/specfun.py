"""Stable special functions for spherical densities and estimators.

Everything here is evaluated in the log domain (or as a ratio) so that the
quantities used by the densities and concentration estimators never overflow
or underflow in double precision:

- ``log_bessel_i``: log of the modified Bessel function of the first kind,
  combining an ascending series, the large-order (Debye) expansion and the
  large-argument expansion.
- ``bessel_ratio``: the ratio I_{p/2}(x) / I_{p/2-1}(x) via a Gauss
  continued fraction.
- ``log_kummer_m``: log of Kummer's confluent hypergeometric M(a, c, x),
  with the Kummer transformation for negative arguments and an asymptotic
  branch for large positive arguments.
- ``g_ratio``: the logarithmic derivative M'(a, c, x) / M(a, c, x).

All functions are pure and scalar; they hold no shared state and are safe to
call from multiple threads.
"""

import math
from fractions import Fraction

from .errors import ConvergenceError

# Iteration cap shared by the series and continued-fraction loops.  All
# arguments inside the documented accuracy domains converge well before it.
SERIES_CAP = 20000

_LOG_TINY_RATIO = 1e-18  # stop once a term no longer moves the sum
_RESCALE_LIMIT = 1e280
_RESCALE_LOG = 280.0 * math.log(10.0)


def _debye_polynomials(count):
    """Coefficients of the Debye polynomials u_k(t), exact rationals.

    u_0 = 1 and
    u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) \\int_0^t (1 - 5 s^2) u_k(s) ds.
    Returned as a list of (power, float coefficient) pairs per polynomial.
    """
    polys = [{0: Fraction(1)}]
    for _ in range(count):
        u = polys[-1]
        nxt = {}
        for pw, co in u.items():
            if pw:
                nxt[pw + 1] = nxt.get(pw + 1, Fraction(0)) + Fraction(pw, 2) * co
                nxt[pw + 3] = nxt.get(pw + 3, Fraction(0)) - Fraction(pw, 2) * co
        for pw, co in u.items():
            nxt[pw + 1] = nxt.get(pw + 1, Fraction(0)) + co / (8 * (pw + 1))
            nxt[pw + 3] = nxt.get(pw + 3, Fraction(0)) - 5 * co / (8 * (pw + 3))
        polys.append({pw: co for pw, co in nxt.items() if co})
    return [sorted((pw, float(co)) for pw, co in poly.items()) for poly in polys]


# Twelve correction terms keep the Debye branch below 1e-12 relative error
# for every order >= 30 (validated against a 50-digit series oracle).
_DEBYE_POLYS = _debye_polynomials(12)
_DEBYE_MIN_ORDER = 30.0
_LARGE_ARG_MIN = 700.0


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def _log_bessel_series(s, x):
    """Ascending series for ln I_s(x); positive terms, rescaled to avoid overflow."""
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    shift = 0.0
    j = 0
    while j < SERIES_CAP:
        j += 1
        term *= q / (j * (s + j))
        total += term
        if total > _RESCALE_LIMIT:
            total *= 1e-280
            term *= 1e-280
            shift += _RESCALE_LOG
        if term < total * _LOG_TINY_RATIO and j > 3:
            return s * math.log(0.5 * x) - math.lgamma(s + 1.0) + math.log(total) + shift
    raise ConvergenceError(f"Bessel series did not converge for s={s}, x={x}")


def _hankel_sum(s, x):
    """Correction series of the large-argument expansion, optimally truncated."""
    mu = 4.0 * s * s
    term = 1.0
    total = 1.0
    prev = 1.0
    for k in range(1, 200):
        term *= -(mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) > prev:
            break
        prev = abs(term)
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def _log_bessel_large_arg(s, x):
    """Large-argument expansion of ln I_s(x)."""
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(_hankel_sum(s, x))


def _log_bessel_large_order(s, x):
    """Uniform large-order (Debye) expansion of ln I_s(x)."""
    z = x / s
    w = math.hypot(1.0, z)
    t = 1.0 / w
    eta = w + math.log(z / (1.0 + w))
    total = 0.0
    scale = 1.0
    for poly in _DEBYE_POLYS:
        pk = 0.0
        for pw, co in poly:
            pk += co * t**pw
        total += pk * scale
        scale /= s
    return s * eta - 0.5 * math.log(2.0 * math.pi * s) - 0.5 * math.log(w) + math.log(total)


def log_bessel_i(s: float, kappa: float) -> float:
    """ln I_s(kappa), the log modified Bessel function of the first kind.

    Combines three regimes so the result stays accurate (relative error well
    below 1e-10 for 0 <= kappa <= 1e6 and s <= 5000) without ever leaving the
    log domain:

    - ascending series for small arguments,
    - Debye (uniform large-order) expansion for s >= 30,
    - large-argument expansion for small orders with kappa > 700.

    The switch-over points were calibrated against a 50-digit series oracle.

    Parameters
    ----------
    s : float
        Order, s >= 0.
    kappa : float
        Argument, kappa >= 0.

    Returns
    -------
    float
        ln I_s(kappa).  For s > 0, kappa = 0 the limit -inf is returned.
    """
    _check_finite("s", s)
    _check_finite("kappa", kappa)
    if s < 0:
        raise ValueError(f"Bessel order must be nonnegative, got {s}")
    if kappa < 0:
        raise ValueError(f"Bessel argument must be nonnegative, got {kappa}")
    if kappa == 0.0:
        return 0.0 if s == 0 else -math.inf
    if s >= _DEBYE_MIN_ORDER:
        if kappa * kappa <= 4.0 * (s + 1.0):
            return _log_bessel_series(s, kappa)
        return _log_bessel_large_order(s, kappa)
    if kappa <= _LARGE_ARG_MIN:
        return _log_bessel_series(s, kappa)
    return _log_bessel_large_arg(s, kappa)


def bessel_ratio(p: int, kappa: float) -> float:
    """A_p(kappa) = I_{p/2}(kappa) / I_{p/2-1}(kappa), in [0, 1).

    Evaluated with the Gauss continued fraction

        I_{nu+1}(x) / I_nu(x) = 1 / (2(nu+1)/x + 1 / (2(nu+2)/x + ...)),

    run with the modified Lentz scheme and truncated once successive
    convergents agree to 1e-14.  This is the mean resultant length of a
    von Mises-Fisher distribution with dimension p and concentration kappa.
    """
    if p < 2 or int(p) != p:
        raise ValueError(f"dimension p must be an integer >= 2, got {p}")
    _check_finite("kappa", kappa)
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    if kappa == 0.0:
        return 0.0
    nu = 0.5 * p - 1.0
    # The fraction needs ~6 sqrt(kappa) convergents once kappa dominates the
    # order; far beyond the documented 1e6 domain, switch to the ratio of
    # large-argument expansions instead of iterating millions of times.
    if kappa > 1e6 and kappa >= 20.0 * max(nu, 1.0) ** 2:
        return _hankel_sum(nu + 1.0, kappa) / _hankel_sum(nu, kappa)
    cap = max(SERIES_CAP, int(8.0 * math.sqrt(kappa)) + 100)
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for k in range(1, cap + 1):
        b = 2.0 * (nu + k) / kappa
        d = b + d
        if d == 0.0:
            d = tiny
        c = b + 1.0 / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-14:
            return f
    raise ConvergenceError(f"Bessel-ratio continued fraction stalled for p={p}, kappa={kappa}")


def _log_kummer_series(a, c, x):
    """Ascending Kummer series for x >= 0; returns None when the cap is hit."""
    term = 1.0
    total = 1.0
    shift = 0.0
    j = 0
    while j < SERIES_CAP:
        ratio = (a + j) * x / ((c + j) * (j + 1.0))
        term *= ratio
        total += term
        j += 1
        if total > _RESCALE_LIMIT:
            total *= 1e-280
            term *= 1e-280
            shift += _RESCALE_LOG
        if term < total * _LOG_TINY_RATIO and ratio < 1.0:
            return math.log(total) + shift
    return None


def _log_kummer_asymptotic(a, c, x):
    """Large-x expansion ln[G(c)/G(a) e^x x^{a-c} sum_j ...]; None if it diverges."""
    term = 1.0
    total = 1.0
    prev = 1.0
    for j in range(400):
        term *= (c - a + j) * (1.0 - a + j) / ((j + 1.0) * x)
        if abs(term) > prev:
            if abs(term) > 1e-15 * abs(total):
                return None
            break
        prev = abs(term)
        total += term
        if abs(term) < _LOG_TINY_RATIO * abs(total):
            break
    if total <= 0.0:
        return None
    return math.lgamma(c) - math.lgamma(a) + x + (a - c) * math.log(x) + math.log(total)


def _asymptotic_applicable(a, c, x):
    # Leading term of the expansion must shrink immediately, and the
    # subdominant x^{-a} exponential piece must be negligible.
    if x < 30.0:
        return False
    if (c - a) * abs(1.0 - a) / x > 0.05:
        return False
    sub = -x + (c - 2.0 * a) * math.log(x) + math.lgamma(a) - math.lgamma(c - a)
    return sub < -37.0


def log_kummer_m(a: float, c: float, kappa: float) -> float:
    """ln M(a, c, kappa) for Kummer's confluent hypergeometric function.

    M(a, c, x) = sum_j [(a)_j / (c)_j] x^j / j!  with rising factorials
    (a)_j.  Negative arguments are routed through the Kummer transformation
    M(a, c, x) = e^x M(c - a, c, -x), whose series has positive terms and no
    cancellation; large positive arguments switch to the standard asymptotic
    expansion.  Accurate to better than 1e-9 relative for |kappa| <= 1e4 and
    c <= 2500.

    Requires c >= a > 0 (c == a is allowed and gives M = e^kappa exactly).
    """
    _check_finite("a", a)
    _check_finite("c", c)
    _check_finite("kappa", kappa)
    if not 0.0 < a <= c:
        raise ValueError(f"Kummer parameters need c >= a > 0, got a={a}, c={c}")
    if c == a:
        return kappa
    if kappa < 0.0:
        return kappa + log_kummer_m(c - a, c, -kappa)
    if kappa == 0.0:
        return 0.0
    if _asymptotic_applicable(a, c, kappa):
        value = _log_kummer_asymptotic(a, c, kappa)
        if value is not None:
            return value
    value = _log_kummer_series(a, c, kappa)
    if value is not None:
        return value
    value = _log_kummer_asymptotic(a, c, kappa)
    if value is not None:
        return value
    raise ConvergenceError(f"Kummer evaluation failed to converge for a={a}, c={c}, kappa={kappa}")


def g_ratio(a: float, c: float, kappa: float) -> float:
    """M'(a, c, kappa) / M(a, c, kappa), strictly increasing in kappa, in (0, 1).

    Uses M'(a, c, x) = (a/c) M(a+1, c+1, x); at kappa = 0 the value is a/c.
    """
    if not 0.0 < a < c:
        raise ValueError(f"g_ratio needs c > a > 0, got a={a}, c={c}")
    _check_finite("kappa", kappa)
    return (a / c) * math.exp(log_kummer_m(a + 1.0, c + 1.0, kappa) - log_kummer_m(a, c, kappa))
