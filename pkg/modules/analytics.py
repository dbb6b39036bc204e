"""Closed-form stochastic-geometry quantities: coverage probability and spectral efficiency.

The nearest-RRH Rayleigh model used throughout: RRHs form a PPP, the typical user
is served by the closest active RRH and every other active RRH interferes with
path loss ``d ** -alpha``.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma as _scipy_gamma

from src.utils.exceptions import ElasticNetDomainError

logger = logging.getLogger(__name__)

# Requested accuracy for every improper integral; results are accepted only when
# QUADPACK reports an absolute error estimate below QUAD_ABS_TOL.
_EPSABS = 1e-11
_EPSREL = 1e-10
_LIMIT = 400
QUAD_ABS_TOL = 1e-9


class KernelVariant(Enum):
    """Lower integration limit used for the interference kernel."""

    AS_WRITTEN = "aswritten"  # integrate from 0
    REFERENCE = "reference"  # integrate from gamma ** (-2 / alpha)

    @classmethod
    def parse(cls, value: str) -> "KernelVariant":
        """Parse a user supplied variant name (case and underscore insensitive)."""
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        for variant in cls:
            if variant.value == key:
                return variant
        raise ElasticNetDomainError(
            f"kernel variant must be one of {[v.value for v in cls]}, got {value!r}"
        )


@dataclass(frozen=True)
class RadioEnv:
    """Stochastic-geometry radio environment."""

    alpha: float  # path-loss exponent
    gamma: float  # SINR threshold, linear
    sigma2: float  # noise power in watts
    bandwidth: float  # system bandwidth B in hertz

    def __post_init__(self):
        """Validate the environment after initialization."""
        if not self.alpha > 2:
            raise ElasticNetDomainError(
                f"alpha must be greater than 2 for the improper integrals to converge, "
                f"got {self.alpha}"
            )
        if not self.gamma >= 0:
            raise ElasticNetDomainError(f"gamma must be non-negative, got {self.gamma}")
        if not self.sigma2 >= 0:
            raise ElasticNetDomainError(f"sigma2 must be non-negative, got {self.sigma2}")
        if not self.bandwidth > 0:
            raise ElasticNetDomainError(f"bandwidth must be positive, got {self.bandwidth}")

    @classmethod
    def from_db(cls, alpha: float, gamma_db: float, sigma2: float, bandwidth: float):
        """Build an environment with the SINR threshold given in dB."""
        return cls(alpha=alpha, gamma=10.0 ** (gamma_db / 10.0), sigma2=sigma2, bandwidth=bandwidth)


def _require_convergent(alpha: float) -> None:
    if not alpha > 2:
        raise ElasticNetDomainError(f"integral diverges for alpha <= 2, got alpha={alpha}")


def _quad(func: Callable[[float], float], lower: float, upper: float, what: str) -> float:
    """Adaptive quadrature; an error estimate above QUAD_ABS_TOL is a domain error."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        try:
            value, abserr = quad(func, lower, upper, epsabs=_EPSABS, epsrel=_EPSREL, limit=_LIMIT)
        except (ZeroDivisionError, OverflowError) as e:
            raise ElasticNetDomainError(f"{what}: quadrature did not converge ({e})") from e

    if not math.isfinite(value) or abserr > QUAD_ABS_TOL:
        detail = f" ({caught[-1].message})" if caught else ""
        raise ElasticNetDomainError(
            f"{what}: quadrature error estimate {abserr:.3g} exceeds {QUAD_ABS_TOL:g}{detail}"
        )
    if caught:
        logger.debug(f"{what}: {caught[-1].message} (accepted, error estimate {abserr:.3g})")
    return value


def _tail_integral(func: Callable[[float], float], lower: float, what: str) -> float:
    """
    Integrate ``func`` over ``[lower, inf)``.

    The finite part up to 1 goes to QAGS (integrable endpoint singularities) and
    the tail goes to QAGI, which maps ``[a, inf)`` onto ``(0, 1]``.
    """
    if math.isinf(lower):
        return 0.0
    split = max(lower, 1.0)
    head = _quad(func, lower, split, what) if split > lower else 0.0
    return head + _quad(func, split, math.inf, what)


def gamma_function(x: float) -> float:
    """Standard gamma function (Gamma(3) == 2 to machine precision)."""
    if x <= 0 and float(x).is_integer():
        raise ElasticNetDomainError(f"gamma function has a pole at {x}")
    return float(_scipy_gamma(x))


def rate_integral(env: RadioEnv) -> float:
    """
    A(alpha, gamma) = integral from gamma to inf of x^(-2/alpha) / (1 + x) dx.

    Args:
        env: Radio environment

    Returns:
        Strictly positive value of the integral
    """
    _require_convergent(env.alpha)
    exponent = -2.0 / env.alpha

    def integrand(x: float) -> float:
        return x**exponent / (1.0 + x)

    return _tail_integral(integrand, env.gamma, "rate integral")


def interference_factor(env: RadioEnv, variant: KernelVariant = KernelVariant.REFERENCE) -> float:
    """
    Interference kernel Upsilon(gamma, alpha).

    ``AS_WRITTEN`` integrates 1 / (1 + z^(alpha/2)) from 0, ``REFERENCE`` from
    gamma^(-2/alpha); both are scaled by gamma^(2/alpha).
    """
    _require_convergent(env.alpha)
    if env.gamma == 0:
        return 0.0

    half_alpha = env.alpha / 2.0
    if variant is KernelVariant.AS_WRITTEN:
        lower = 0.0
    else:
        lower = env.gamma ** (-2.0 / env.alpha)

    def kernel(z: float) -> float:
        return 1.0 / (1.0 + z**half_alpha)

    integral = _tail_integral(kernel, lower, f"interference factor ({variant.value})")
    return env.gamma ** (2.0 / env.alpha) * integral


def spectral_efficiency(env: RadioEnv) -> float:
    """tau(alpha, gamma) = log2(1 + gamma) + gamma^(2/alpha) * A(alpha, gamma), in bit/s/Hz."""
    return math.log2(1.0 + env.gamma) + env.gamma ** (2.0 / env.alpha) * rate_integral(env)


def coverage_no_noise(env: RadioEnv, variant: KernelVariant = KernelVariant.REFERENCE) -> float:
    """Interference-limited coverage probability 1 / (1 + Upsilon)."""
    return 1.0 / (1.0 + interference_factor(env, variant))


def _check_density_and_power(lambda_active: float, tx_power: float) -> None:
    if not lambda_active > 0:
        raise ElasticNetDomainError(f"lambda_active must be positive, got {lambda_active}")
    if not tx_power > 0:
        raise ElasticNetDomainError(f"tx_power must be positive, got {tx_power}")


def noise_penalty(
    env: RadioEnv,
    lambda_active: float,
    tx_power: float,
    variant: KernelVariant = KernelVariant.REFERENCE,
) -> float:
    """
    Relative coverage loss caused by noise in the low-noise approximation.

    gamma * sigma2 * Gamma(alpha/2 + 1) / (P * [pi * lambda * (1 + Upsilon)]^(alpha/2))
    """
    _check_density_and_power(lambda_active, tx_power)
    upsilon = interference_factor(env, variant)
    half_alpha = env.alpha / 2.0
    return (
        env.gamma
        * env.sigma2
        * gamma_function(half_alpha + 1.0)
        / (tx_power * (math.pi * lambda_active * (1.0 + upsilon)) ** half_alpha)
    )


def coverage_approx(
    env: RadioEnv,
    lambda_active: float,
    tx_power: float,
    variant: KernelVariant = KernelVariant.REFERENCE,
) -> float:
    """
    Low-noise coverage approximation P_inf * (1 - noise_penalty), clamped to [0, 1].

    Args:
        env: Radio environment
        lambda_active: Density of active RRHs per m^2
        tx_power: Transmit power in watts
        variant: Interference kernel variant

    Returns:
        Coverage probability
    """
    penalty = noise_penalty(env, lambda_active, tx_power, variant)
    value = coverage_no_noise(env, variant) * (1.0 - penalty)
    if value < 0.0:
        logger.debug(
            f"Approximate coverage clamped to 0 (noise penalty {penalty:.3g}, "
            f"lambda={lambda_active:.3g}/m2, P={tx_power:.3g} W)"
        )
    return min(1.0, max(0.0, value))


def coverage_exact_integral(
    env: RadioEnv,
    lambda_active: float,
    tx_power: float,
    variant: KernelVariant = KernelVariant.REFERENCE,
) -> float:
    """
    Coverage probability without the low-noise approximation.

    pi*lambda * int_0^inf exp(-pi*lambda*v*(1+Upsilon) - gamma*sigma2*v^(alpha/2)/P) dv,
    evaluated after the substitution w = pi*lambda*(1+Upsilon)*v, which leaves
    P_inf * int_0^inf exp(-w - s*w^(alpha/2)) dw.
    """
    _check_density_and_power(lambda_active, tx_power)
    upsilon = interference_factor(env, variant)
    p_inf = 1.0 / (1.0 + upsilon)
    half_alpha = env.alpha / 2.0
    s = env.gamma * env.sigma2 / (
        tx_power * (math.pi * lambda_active * (1.0 + upsilon)) ** half_alpha
    )
    if s == 0.0:
        return p_inf

    def integrand(w: float) -> float:
        return math.exp(-w - s * w**half_alpha)

    return p_inf * _quad(integrand, 0.0, math.inf, "exact coverage integral")
