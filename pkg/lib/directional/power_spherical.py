"""
Power Spherical distribution on S^{d-1}

    q(u; mu, kappa) = N(kappa, d)^{-1} (1 + mu^T u)^kappa

With alpha = (d-1)/2 + kappa and beta = (d-1)/2, the cosine marginal is
C = (1 + mu^T u)/2 ~ Beta(alpha, beta) and the tangent part is uniform on the
(d-2)-sphere. Integrating the density in those coordinates gives

    log N = (alpha + beta) log 2 + beta log pi + lgamma(alpha) - lgamma(alpha + beta)

Sampling inverts the Beta CDF (no rejection step), composes with a uniform
tangent direction in the e1 frame, then reflects e1 onto mu.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..tensor import DiffTensor, concat
from .exceptions import InvalidConcentrationError, InvalidDimensionError
from .special import beta_icdf, beta_icdf_grad_a, log_surface_area
from .sphere import UnitDirection, reflect_from_axis, sample_uniform_sphere_batch

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-15
_SQRT_FLOOR = 1e-30


@dataclass(frozen=True, eq=False)
class PowerSphericalParams:
    mu: UnitDirection
    kappa: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise InvalidConcentrationError(self.kappa)

    @property
    def d(self) -> int:
        return self.mu.d

    @property
    def alpha(self) -> float:
        return 0.5 * (self.d - 1) + self.kappa

    @property
    def beta(self) -> float:
        return 0.5 * (self.d - 1)

    def to_triple(self) -> tuple[int, list[float], float]:
        """(d, mu, kappa) as stored in checkpoint metadata"""
        return self.d, self.mu.components.tolist(), float(self.kappa)


@dataclass(frozen=True, eq=False)
class PSNoise:
    """Base randomness of a pathwise sample: Beta quantile level and tangent direction"""

    uniform: np.ndarray  # (n, 1)
    tangent: np.ndarray  # (n, d - 1), rows on S^{d-2}


@dataclass(frozen=True, eq=False)
class PathwiseGradient:
    d_kappa: np.ndarray  # du/dkappa, shape (d,)
    d_mu: np.ndarray  # du_i/dmu_j, shape (d, d)


def ps_log_normalizer(d: int, kappa: float) -> float:
    if kappa < 0:
        raise InvalidConcentrationError(kappa)
    if kappa == 0:
        return log_surface_area(d)
    alpha = 0.5 * (d - 1) + kappa
    beta = 0.5 * (d - 1)
    return float(
        (alpha + beta) * np.log(2.0)
        + beta * np.log(np.pi)
        + special.gammaln(alpha)
        - special.gammaln(alpha + beta)
    )


def ps_log_density_batch(
    u: np.ndarray, p: PowerSphericalParams, floor: float = DENSITY_FLOOR
) -> np.ndarray:
    """Log-density at the rows of u; (1 + mu^T u) is clamped below at floor"""
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if u.shape[-1] != p.d:
        raise InvalidDimensionError(u.shape[-1], f"Point dimension does not match mu (d={p.d})")
    if p.kappa == 0:
        return np.full(u.shape[0], -log_surface_area(p.d))
    base = np.maximum(1.0 + u @ p.mu.components, floor)
    with np.errstate(divide="ignore"):
        return p.kappa * np.log(base) - ps_log_normalizer(p.d, p.kappa)


def ps_log_density(
    u: UnitDirection | np.ndarray, p: PowerSphericalParams, floor: float = DENSITY_FLOOR
) -> float:
    return float(ps_log_density_batch(np.asarray(u), p, floor)[0])


def draw_ps_noise(n: int, d: int, rng: np.random.Generator) -> PSNoise:
    if d < 2:
        raise InvalidDimensionError(d, "Sphere dimension needs d >= 2")
    uniform = rng.uniform(size=(n, 1))
    if d == 2:
        tangent = np.where(rng.uniform(size=(n, 1)) < 0.5, -1.0, 1.0)
    else:
        tangent = sample_uniform_sphere_batch(d - 1, n, rng)
    return PSNoise(uniform=uniform, tangent=tangent)


def compose_in_axis_frame(cos_marginal: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """u = c e1 + sqrt(1 - c^2) v with c = 2C - 1 and sqrt(1 - c^2) = 2 sqrt(C(1 - C))"""
    c = 2.0 * cos_marginal - 1.0
    s = 2.0 * np.sqrt(np.maximum(cos_marginal * (1.0 - cos_marginal), 0.0))
    return np.concatenate([c, s * tangent], axis=-1)


def ps_sample_batch(
    p: PowerSphericalParams, n: int, rng: np.random.Generator
) -> np.ndarray:
    noise = draw_ps_noise(n, p.d, rng)
    cos_marginal = beta_icdf(np.full((n, 1), p.alpha), p.beta, noise.uniform)
    return reflect_from_axis(p.mu.components, compose_in_axis_frame(cos_marginal, noise.tangent))


def ps_sample(p: PowerSphericalParams, rng: np.random.Generator) -> UnitDirection:
    return UnitDirection(ps_sample_batch(p, 1, rng)[0])


def ps_rsample(mu: DiffTensor, kappa: DiffTensor, noise: PSNoise) -> DiffTensor:
    """
    Reparameterized Power Spherical sample on the tape

    Args:
        mu: (n, d) unit mean directions (may be tracked)
        kappa: (n, 1) concentrations (may be tracked)
        noise: fixed base randomness

    Returns:
        (n, d) samples; gradients reach kappa through implicit differentiation
        of the Beta quantile and mu through the Householder reflection
    """
    d = mu.shape[-1]
    beta = 0.5 * (d - 1)
    alpha = beta + kappa.value
    cos_value = beta_icdf(alpha, beta, noise.uniform)
    dcos_dalpha = beta_icdf_grad_a(alpha, beta, cos_value)
    cos_marginal = DiffTensor.record(
        cos_value, (kappa,), lambda g: (g * dcos_dalpha,), "beta_icdf"
    )

    c = cos_marginal * 2.0 - 1.0
    s = (cos_marginal * (1.0 - cos_marginal)).clamp_min(_SQRT_FLOOR).sqrt() * 2.0
    y = concat([c, s * noise.tangent], axis=-1)

    axis = np.zeros(d)
    axis[0] = 1.0
    w = axis - mu
    w_norm = w.norm(axis=-1, keepdims=True)
    # mu == e1 rows reflect by the identity
    active = (w_norm.value > 1e-12).astype(np.float64)
    w_unit = w / w_norm.clamp_min(1e-12) * active
    return y - (w_unit * y).sum(axis=-1, keepdims=True) * w_unit * 2.0


def ps_sample_pathwise_grad(
    p: PowerSphericalParams, rng: np.random.Generator
) -> tuple[UnitDirection, PathwiseGradient]:
    """
    One sample plus its Jacobians with respect to kappa and mu at fixed base noise

    At kappa = 0 the kappa-derivative is the one-sided limit kappa -> 0+, which
    the smooth Beta-quantile map evaluates directly.
    """
    d = p.d
    noise = draw_ps_noise(1, d, rng)
    mu = DiffTensor(p.mu.components.reshape(1, d), requires_grad=True)
    kappa = DiffTensor([[p.kappa]], requires_grad=True)
    sample = ps_rsample(mu, kappa, noise)

    d_kappa = np.zeros(d)
    d_mu = np.zeros((d, d))
    for i in range(d):
        mu.zero_grad()
        kappa.zero_grad()
        sample[0, i].backward()
        d_kappa[i] = kappa.grad[0, 0]
        d_mu[i] = mu.grad[0]
    return UnitDirection(sample.value[0]), PathwiseGradient(d_kappa=d_kappa, d_mu=d_mu)


def ps_mean(p: PowerSphericalParams) -> np.ndarray:
    return p.mu.components * (p.alpha - p.beta) / (p.alpha + p.beta)


def ps_covariance(p: PowerSphericalParams) -> np.ndarray:
    a, b, d = p.alpha, p.beta, p.d
    mu = p.mu.components
    return (
        2.0 * a / ((a + b) ** 2 * (a + b + 1.0))
        * ((b - a) * np.outer(mu, mu) + (a + b) * np.eye(d))
    )


def mean_cosine(d: int, kappa: float) -> float:
    """E[mu^T u] = kappa / (d - 1 + kappa)"""
    return kappa / (d - 1.0 + kappa)


def mean_cosine_grad(d: int, kappa: float) -> float:
    return (d - 1.0) / (d - 1.0 + kappa) ** 2


def kl_ps_uniform(
    d: int, kappa: float, n_mc: int, rng: np.random.Generator
) -> tuple[float, float]:
    """
    Monte-Carlo KL(PS || Unif(S^{d-1})) with its standard error

    The integrand log q(u) + log A_{d-1} is identically zero at kappa = 0.
    """
    if kappa < 0:
        raise InvalidConcentrationError(kappa)
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    p = PowerSphericalParams(UnitDirection.axis(d), kappa)
    integrand = ps_log_density_batch(ps_sample_batch(p, n_mc, rng), p) + log_surface_area(d)
    stderr = float(np.std(integrand, ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else float("nan")
    estimate = float(np.mean(integrand))
    logger.debug("KL(PS||Unif) d=%d kappa=%g: %.6g +- %.2g", d, kappa, estimate, stderr)
    return estimate, stderr


def kl_ps_uniform_closed_form(d: int, kappa: float) -> float:
    """kappa (log 2 + psi(alpha) - psi(alpha + beta)) - log N + log A_{d-1}"""
    if kappa == 0:
        return 0.0
    alpha = 0.5 * (d - 1) + kappa
    beta = 0.5 * (d - 1)
    return float(
        kappa * (np.log(2.0) + special.digamma(alpha) - special.digamma(alpha + beta))
        - ps_log_normalizer(d, kappa)
        + log_surface_area(d)
    )


def kl_ps_uniform_tensor(d: int, kappa: DiffTensor) -> DiffTensor:
    """Closed-form KL(PS || Unif) per row of kappa, differentiable in kappa"""
    beta = 0.5 * (d - 1)
    alpha = kappa + beta
    log_normalizer = (
        (alpha + beta) * np.log(2.0)
        + beta * np.log(np.pi)
        + alpha.lgamma()
        - (alpha + beta).lgamma()
    )
    cross = kappa * (alpha.digamma() - (alpha + beta).digamma() + np.log(2.0))
    return cross - log_normalizer + log_surface_area(d)
