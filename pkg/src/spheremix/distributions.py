"""Densities and samplers for the uniform, von Mises-Fisher and Watson laws.

Points live on the unit hypersphere S^{p-1} (rows of norm 1).  The Watson
distribution is axial: (mu, kappa) and (-mu, kappa) describe the same law and
every density below depends on x only through (mu^T x)^2.

Random sampling uses numpy's seedable PCG64 generator.  Each sampler owns a
generator created from its ``seed`` argument, so calls are reproducible and
independent; mixture-level code splits one seed into per-component streams
with ``split_seeds`` (children of ``SeedSequence(seed)`` in component order).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .specfun import log_bessel_i, log_kummer_m

UNIT_NORM_TOL = 1e-9
_REJECTION_ROUNDS_CAP = 10000


def as_unit_rows(data, name: str = "data") -> np.ndarray:
    """Validate and return an (n, p) float array of unit-norm rows."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError(f"{name} must be an (n, p) array with p >= 2, got shape {x.shape}")
    norms = np.linalg.norm(x, axis=1)
    bad = np.abs(norms - 1.0) > UNIT_NORM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"{name} row {i} has norm {norms[i]:.12g}, expected 1")
    return x


def unit_vector(v) -> np.ndarray:
    """Scale a vector to unit length (rejecting zero vectors)."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


def split_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Deterministic per-component seed streams: children of SeedSequence(seed)."""
    return np.random.SeedSequence(seed).spawn(count)


@dataclass
class VmfParams:
    """von Mises-Fisher parameters: unit mean direction and concentration >= 0."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if abs(np.linalg.norm(self.mu) - 1.0) > UNIT_NORM_TOL:
            raise ValueError("vMF mean direction must have unit norm")
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError(f"vMF concentration must be finite and >= 0, got {self.kappa}")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


@dataclass
class WatsonParams:
    """Watson parameters: unit axis (identified with its negation) and real kappa.

    ``degenerate`` marks an axis estimated from a scatter matrix with a tied
    extreme eigenvalue, where the maximum-likelihood axis is not unique.
    """

    mu: np.ndarray
    kappa: float
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if abs(np.linalg.norm(self.mu) - 1.0) > UNIT_NORM_TOL:
            raise ValueError("Watson axis must have unit norm")
        if not math.isfinite(self.kappa):
            raise ValueError(f"Watson concentration must be finite, got {self.kappa}")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def log_uniform_density(p: int) -> float:
    """ln of the uniform density on S^{p-1}: ln Gamma(p/2) - ln 2 - (p/2) ln pi."""
    if p < 2 or int(p) != p:
        raise ValueError(f"dimension p must be an integer >= 2, got {p}")
    return math.lgamma(0.5 * p) - math.log(2.0) - 0.5 * p * math.log(math.pi)


def vmf_log_norm_const(p: int, kappa: float) -> float:
    """ln c_p(kappa) for the vMF density c_p(kappa) exp(kappa mu^T x).

    The kappa -> 0 limit equals the uniform density constant and is handled
    by an explicit branch ((p/2 - 1) ln kappa is singular there).
    """
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0.0:
        return log_uniform_density(p)
    half = 0.5 * p
    return (half - 1.0) * math.log(kappa) - half * math.log(2.0 * math.pi) - log_bessel_i(half - 1.0, kappa)


def watson_log_norm_const(p: int, kappa: float) -> float:
    """ln d_p(kappa) for the Watson density d_p(kappa) exp(kappa (mu^T x)^2)."""
    if p < 2 or int(p) != p:
        raise ValueError(f"dimension p must be an integer >= 2, got {p}")
    return log_uniform_density(p) - log_kummer_m(0.5, 0.5 * p, kappa)


def _check_dims(mu, x):
    if x.shape[-1] != mu.shape[0]:
        raise ValueError(f"dimension mismatch: parameters have p={mu.shape[0]}, data has p={x.shape[-1]}")


def vmf_log_pdf(params: VmfParams, x) -> np.ndarray | float:
    """Log-density of the vMF law at x; x may be a vector or an (n, p) array."""
    x = np.asarray(x, dtype=float)
    _check_dims(params.mu, x)
    out = vmf_log_norm_const(params.dim, params.kappa) + params.kappa * (x @ params.mu)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def watson_log_pdf(params: WatsonParams, x) -> np.ndarray | float:
    """Log-density of the Watson law at x; depends on x only via (mu^T x)^2."""
    x = np.asarray(x, dtype=float)
    _check_dims(params.mu, x)
    out = watson_log_norm_const(params.dim, params.kappa) + params.kappa * (x @ params.mu) ** 2
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def sample_uniform(p: int, n: int, seed: int) -> np.ndarray:
    """n i.i.d. uniform points on S^{p-1} (normalized standard normals)."""
    if p < 2:
        raise ValueError(f"dimension p must be >= 2, got {p}")
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return _uniform_rows(rng, n, p)


def _uniform_rows(rng, n, p):
    x = rng.standard_normal((n, p))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _householder_to(mu):
    """Orthogonal map sending e_1 to mu (reflection; identity if mu == e_1)."""
    p = mu.shape[0]
    u = -mu.copy()
    u[0] += 1.0  # e_1 - mu
    nu = np.linalg.norm(u)
    if nu < 1e-12:
        return np.eye(p)
    u /= nu
    return np.eye(p) - 2.0 * np.outer(u, u)


def _sample_vmf_cosines(rng, kappa, p, n):
    """Rejection-sample n cosines w with density prop. to e^{kappa w}(1-w^2)^{(p-3)/2}."""
    dim = p - 1.0
    b = dim / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + dim * dim))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dim * math.log(1.0 - x0 * x0)
    out = np.empty(n)
    filled = 0
    for _ in range(_REJECTION_ROUNDS_CAP):
        m = n - filled
        if m == 0:
            return out
        z = rng.beta(0.5 * dim, 0.5 * dim, size=m)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=m)
        keep = kappa * w + dim * np.log1p(-x0 * w) - c >= np.log(u)
        k = int(np.count_nonzero(keep))
        out[filled : filled + k] = w[keep]
        filled += k
    raise ConvergenceError("vMF rejection sampler exceeded its round cap (implementation bug)")


def sample_vmf(params: VmfParams, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from a vMF distribution (Wood/Ulrich rejection sampler).

    The cosine along mu is drawn by rejection with the standard envelope
    b = (p-1) / (2 kappa + sqrt(4 kappa^2 + (p-1)^2)); the tangent direction
    is uniform on the orthogonal subsphere; a Householder reflection carries
    the north pole onto mu.  Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    p = params.dim
    rng = np.random.default_rng(seed)
    if params.kappa == 0.0:
        return _uniform_rows(rng, n, p)
    w = _sample_vmf_cosines(rng, params.kappa, p, n)
    v = _uniform_rows(rng, n, p - 1)
    x = np.empty((n, p))
    x[:, 0] = w
    x[:, 1:] = np.sqrt(np.maximum(0.0, 1.0 - w * w))[:, None] * v
    x = x @ _householder_to(params.mu).T
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _watson_log_envelope_const(kappa):
    """sup_t of kappa t^2 over [-1, 1], located by a dense grid (it sits at 0 or +-1)."""
    t = np.linspace(-1.0, 1.0, 4001)
    return float(np.max(kappa * t * t))


def _sample_watson_cosines(rng, kappa, p, n):
    """Rejection-sample n cosines t with density prop. to e^{kappa t^2}(1-t^2)^{(p-3)/2}.

    The proposal is t = 2z - 1 with z ~ Beta((p-1)/2, (p-1)/2), which matches
    the (1 - t^2)^{(p-3)/2} factor exactly; the acceptance ratio is then
    exp(kappa t^2 - sup kappa t^2).
    """
    log_c = _watson_log_envelope_const(kappa)
    alpha = 0.5 * (p - 1.0)
    out = np.empty(n)
    filled = 0
    for _ in range(_REJECTION_ROUNDS_CAP):
        m = n - filled
        if m == 0:
            return out
        t = 2.0 * rng.beta(alpha, alpha, size=m) - 1.0
        u = rng.uniform(size=m)
        keep = kappa * t * t - log_c >= np.log(u)
        k = int(np.count_nonzero(keep))
        out[filled : filled + k] = t[keep]
        filled += k
    raise ConvergenceError("Watson rejection sampler exceeded its round cap")


def sample_watson(params: WatsonParams, n: int, seed: int) -> np.ndarray:
    """n i.i.d. draws from a Watson distribution.

    The cosine t = mu^T x is drawn by rejection against a symmetric Beta
    envelope; the remaining component is uniform on the subsphere orthogonal
    to mu.  Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    p = params.dim
    rng = np.random.default_rng(seed)
    if params.kappa == 0.0:
        return _uniform_rows(rng, n, p)
    t = _sample_watson_cosines(rng, params.kappa, p, n)
    y = rng.standard_normal((n, p))
    y -= np.outer(y @ params.mu, params.mu)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    x = t[:, None] * params.mu[None, :] + np.sqrt(np.maximum(0.0, 1.0 - t * t))[:, None] * y
    return x / np.linalg.norm(x, axis=1, keepdims=True)
