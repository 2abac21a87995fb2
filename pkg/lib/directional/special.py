"""
Special functions for directional statistics

Surface area of S^{d-1}, log modified Bessel functions, and the Beta
quantile with its derivative in the first shape parameter (the piece the
Power Spherical pathwise gradient needs).
"""

import numpy as np
from scipy import integrate, special, stats

from .exceptions import InvalidDimensionError, SeriesConvergenceError

# Newton polish target on |I_x(a, b) - u|
CDF_TOLERANCE = 1e-12
SERIES_TOLERANCE = 1e-16
MAX_SERIES_TERMS = 100_000


def log_surface_area(d: int) -> float:
    """log A_{d-1} = log(2 pi^{d/2} / Gamma(d/2)); the uniform log-density is its negative"""
    if d < 2:
        raise InvalidDimensionError(d, "Sphere dimension needs d >= 2")
    return float(np.log(2.0) + 0.5 * d * np.log(np.pi) - special.gammaln(0.5 * d))


def log_bessel_iv(nu: float, kappa: np.ndarray | float) -> np.ndarray:
    """
    log I_nu(kappa) for kappa > 0

    Uses the exponentially scaled Bessel function so large kappa does not
    overflow; where ive underflows (tiny kappa, large nu) falls back to the
    leading series term nu*log(kappa/2) - log Gamma(nu + 1).
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    scaled = special.ive(nu, kappa)
    with np.errstate(divide="ignore"):
        out = np.log(scaled) + kappa
    series = nu * np.log(kappa / 2.0) - special.gammaln(nu + 1.0)
    return np.where(scaled > 0, out, series)


def log_bessel_iv_quadrature(nu: float, kappa: float) -> float:
    """
    Independent oracle for log I_nu(kappa) via the Poisson integral

        I_nu(k) = (k/2)^nu / (sqrt(pi) Gamma(nu + 1/2)) * int_{-1}^{1} e^{k t} (1 - t^2)^{nu - 1/2} dt
    """
    value, _ = integrate.quad(
        lambda t: np.exp(kappa * (t - 1.0)) * (1.0 - t * t) ** (nu - 0.5),
        -1.0,
        1.0,
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return float(
        nu * np.log(kappa / 2.0)
        - 0.5 * np.log(np.pi)
        - special.gammaln(nu + 0.5)
        + np.log(value)
        + kappa
    )


def beta_icdf(a: np.ndarray, b: float, u: np.ndarray) -> np.ndarray:
    """
    Beta(a, b) quantile at probability u

    scipy's betaincinv gives the root; one safeguarded Newton step polishes
    entries whose CDF residual exceeds CDF_TOLERANCE.
    """
    a = np.asarray(a, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    x = special.betaincinv(a, b, u)
    residual = special.betainc(a, b, x) - u
    needs_polish = np.abs(residual) > CDF_TOLERANCE
    if np.any(needs_polish):
        pdf = np.exp(stats.beta.logpdf(x, a, b))
        with np.errstate(divide="ignore", invalid="ignore"):
            candidate = np.clip(x - residual / pdf, 0.0, 1.0)
        improved = np.abs(special.betainc(a, b, candidate) - u) < np.abs(residual)
        x = np.where(needs_polish & improved & np.isfinite(candidate), candidate, x)
    return x


def _hypergeometric_sums(p: np.ndarray, q: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, ...]:
    """
    F = sum_n t_n with t_n = (p)_n / (q)_n z^n, plus the weighted sums
    sum_n t_n sum_{k<n} 1/(p+k) and sum_n t_n sum_{k<n} 1/(q+k)

    Every ratio t_{n+1}/t_n must stay below 1; the loop stops once the
    geometric bound on the tail is under SERIES_TOLERANCE relative to F.
    """
    term = np.ones_like(z)
    total = np.ones_like(z)
    weighted_p, weighted_q = np.zeros_like(z), np.zeros_like(z)
    harmonic_p, harmonic_q = np.zeros_like(z), np.zeros_like(z)
    for n in range(MAX_SERIES_TERMS):
        ratio = z * (p + n) / (q + n)
        term = term * ratio
        harmonic_p = harmonic_p + 1.0 / (p + n)
        harmonic_q = harmonic_q + 1.0 / (q + n)
        total = total + term
        weighted_p = weighted_p + term * harmonic_p
        weighted_q = weighted_q + term * harmonic_q
        # later ratios stay below max(ratio, z)
        tail = term * (1.0 + np.maximum(harmonic_p, harmonic_q)) / (1.0 - np.maximum(ratio, z))
        if np.all(tail <= SERIES_TOLERANCE * total):
            break
    else:
        raise SeriesConvergenceError(MAX_SERIES_TERMS)
    return total, weighted_p, weighted_q


def betainc_grad_a(a: np.ndarray, b: float, x: np.ndarray) -> np.ndarray:
    """
    d/da of the regularized incomplete beta I_x(a, b)

    Uses the positive-term expansion

        I_x(a, b) = x^a (1-x)^b / (a B(a, b)) * sum_n (a+b)_n / (a+1)_n x^n

    differentiated term by term, or the same expansion of 1 - I_{1-x}(b, a)
    when its terms shrink faster. Both series have no cancellation.
    """
    a, b, x = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (a, b, x)))
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    ys = 1.0 - xs
    # largest term ratio of each expansion
    rho_x = np.maximum(xs, xs * (a + b) / (a + 1.0))
    rho_y = np.maximum(ys, ys * (a + b) / (b + 1.0))
    use_x = rho_x <= rho_y
    shift = special.digamma(a + b) - special.digamma(a)
    log_x = np.log(xs)
    log_y = np.log1p(-xs)
    log_beta = special.betaln(a, b)

    total, weighted_p, weighted_q = _hypergeometric_sums(a + b, a + 1.0, np.where(use_x, xs, 0.0))
    prefactor = np.exp(a * log_x + b * log_y - np.log(a) - log_beta)
    from_x = prefactor * (total * (log_x - 1.0 / a + shift) + weighted_p - weighted_q)

    total, weighted_p, _ = _hypergeometric_sums(a + b, b + 1.0, np.where(use_x, 0.0, ys))
    prefactor = np.exp(b * log_y + a * log_x - np.log(b) - log_beta)
    from_y = -prefactor * (total * (log_x + shift) + weighted_p)

    return np.where(inside, np.where(use_x, from_x, from_y), 0.0)


def betainc_grad_a_quadrature(a: float, b: float, x: float) -> float:
    """
    Quadrature oracle for d/da I_x(a, b):

        int_0^x t^{a-1} (1-t)^{b-1} (log t - psi(a) + psi(a+b)) dt / B(a, b)
    """
    shift = special.digamma(a + b) - special.digamma(a)
    log_b = special.betaln(a, b)
    value, _ = integrate.quad(
        lambda t: np.exp((a - 1.0) * np.log(t) + (b - 1.0) * np.log1p(-t) - log_b)
        * (np.log(t) + shift),
        0.0,
        x,
        epsabs=1e-14,
        epsrel=1e-12,
        limit=200,
    )
    return float(value)


def beta_icdf_grad_a(a: np.ndarray, b: float, x: np.ndarray) -> np.ndarray:
    """
    dx/da for x = I^{-1}(a, b, u) at fixed u (implicit differentiation):

        dx/da = -(dI_x/da) / pdf(x; a, b)

    Entries where the density underflows (x pinned at 0 or 1) get 0.
    """
    log_pdf = stats.beta.logpdf(x, a, b)
    with np.errstate(over="ignore", invalid="ignore"):
        grad = -betainc_grad_a(a, b, x) * np.exp(-log_pdf)
    return np.where(np.isfinite(grad), grad, 0.0)
