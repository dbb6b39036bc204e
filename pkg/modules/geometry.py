"""Monte Carlo stochastic-geometry oracle for the closed forms in ``modules.analytics``.

RRHs are dropped as a Poisson point process on a disk centred on a typical user
at the origin. The user is served by the nearest RRH and every other RRH in the
window interferes under Rayleigh fading and ``d ** -alpha`` path loss.

Trials are simulated in blocks of ``BLOCK_TRIALS``. Block ``b`` draws from
``block_rng(seed, b)`` in a fixed order (per-trial counts, squared radii, fading),
so trial ``k`` depends only on ``(seed, k)`` and never on the worker count or
on the total number of trials.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

from src.utils.exceptions import ElasticNetDomainError, ElasticNetEstimationError

from .analytics import RadioEnv

logger = logging.getLogger(__name__)

# Two-sided 95% normal quantile
Z_95 = 1.96

BLOCK_TRIALS = 256


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings."""

    trials: int
    window_radius_factor: float = 30.0  # disk radius = factor / sqrt(density)
    seed: int = 42
    fading_mean: float = 1.0
    workers: int = 1

    def __post_init__(self):
        """Validate settings after initialization."""
        if self.trials < 1:
            raise ElasticNetDomainError(f"trials must be at least 1, got {self.trials}")
        if self.window_radius_factor < 10:
            raise ElasticNetDomainError(
                f"window_radius_factor must be at least 10, got {self.window_radius_factor}"
            )
        if not 0 <= self.seed < 2**64:
            raise ElasticNetDomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.fading_mean > 0:
            raise ElasticNetDomainError(f"fading_mean must be positive, got {self.fading_mean}")
        if self.workers < 1:
            raise ElasticNetDomainError(f"workers must be at least 1, got {self.workers}")


@dataclass(frozen=True)
class NetworkRealization:
    """One PPP draw: RRH positions (meters, user at the origin) and channel power gains."""

    points: np.ndarray  # shape (n, 2)
    fading: np.ndarray  # shape (n,)

    @property
    def empty(self) -> bool:
        return self.points.shape[0] == 0

    @property
    def distances(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])


class McEstimate(NamedTuple):
    """Monte Carlo estimate with the half-width of its 95% confidence interval."""

    estimate: float
    half_width: float
    samples: int


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent stream for one block of trials; depends only on (seed, block)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_ppp(
    density: float,
    window_radius: float,
    rng: np.random.Generator,
    fading_mean: float = 1.0,
) -> NetworkRealization:
    """
    Draw a homogeneous PPP on a disk of the given radius around the origin.

    Args:
        density: Points per m^2
        window_radius: Disk radius in meters
        rng: Random generator (consumed in a fixed order: count, radii, angles, fading)
        fading_mean: Mean of the exponential power gains

    Returns:
        NetworkRealization, possibly empty
    """
    if not density > 0:
        raise ElasticNetDomainError(f"density must be positive, got {density}")
    if not window_radius > 0:
        raise ElasticNetDomainError(f"window_radius must be positive, got {window_radius}")

    count = int(rng.poisson(density * math.pi * window_radius**2))
    radii = window_radius * np.sqrt(rng.random(count))
    angles = rng.uniform(0.0, 2.0 * math.pi, count)
    fading = rng.exponential(fading_mean, count)
    points = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    return NetworkRealization(points=points, fading=fading)


def sinr_at_origin(r: NetworkRealization, tx_power: float, env: RadioEnv) -> float:
    """
    SINR of the typical user served by the nearest point of ``r``.

    An empty realization is an outage (SINR 0). With no noise and no interferer
    the SINR is infinite.
    """
    if r.empty:
        return 0.0
    distances = r.distances
    serving = int(np.argmin(distances))
    received = tx_power * r.fading * distances ** (-env.alpha)
    others = np.ones(received.size, dtype=bool)
    others[serving] = False
    denominator = env.sigma2 + float(received[others].sum())
    if denominator == 0.0:
        return math.inf
    return float(received[serving] / denominator)


def sinr_from_draws(
    counts: np.ndarray,
    dist2: np.ndarray,
    fading: np.ndarray,
    tx_power: float,
    env: RadioEnv,
) -> np.ndarray:
    """
    SINR of many realizations stored back to back.

    Realization ``i`` owns the next ``counts[i]`` entries of ``dist2`` (squared
    distances to the user) and ``fading``. Same rules as ``sinr_at_origin``:
    empty realizations give 0, the first nearest point serves, and a zero
    denominator gives infinity.
    """
    sinr = np.zeros(counts.size)
    occupied = counts > 0
    if not occupied.any():
        return sinr

    sizes = counts[occupied]
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    received = tx_power * fading * dist2 ** (-env.alpha / 2.0)

    nearest = np.minimum.reduceat(dist2, starts)
    serving = dist2 == np.repeat(nearest, sizes)
    ties = np.flatnonzero(np.add.reduceat(serving, starts, dtype=np.int64) > 1)
    for i in ties:
        segment = serving[starts[i] : starts[i] + sizes[i]]
        segment[np.argmax(segment) + 1 :] = False

    signal = received[serving]
    interference = np.add.reduceat(np.where(serving, 0.0, received), starts)
    denominator = env.sigma2 + interference
    values = np.full(signal.size, math.inf)
    positive = denominator > 0.0
    values[positive] = signal[positive] / denominator[positive]
    sinr[occupied] = values
    return sinr


def _simulate_blocks(args: Tuple[RadioEnv, float, float, McConfig, int, int]) -> np.ndarray:
    env, lambda_active, tx_power, cfg, first, last = args
    radius2 = cfg.window_radius_factor**2 / lambda_active
    mean_count = cfg.window_radius_factor**2 * math.pi
    parts = []
    for block in range(first, last):
        rng = block_rng(cfg.seed, block)
        counts = rng.poisson(mean_count, BLOCK_TRIALS)
        total = int(counts.sum())
        # (0, 1] keeps every point off the origin
        dist2 = radius2 * (1.0 - rng.random(total))
        fading = rng.exponential(cfg.fading_mean, total)
        parts.append(sinr_from_draws(counts, dist2, fading, tx_power, env))
    return np.concatenate(parts)


def _block_ranges(blocks: int, workers: int) -> List[Tuple[int, int]]:
    size = math.ceil(blocks / workers)
    return [(start, min(start + size, blocks)) for start in range(0, blocks, size)]


def simulate_sinr(env: RadioEnv, lambda_active: float, tx_power: float, cfg: McConfig) -> np.ndarray:
    """
    Per-trial SINR samples at the typical user.

    Whole blocks are simulated and the vector is cut to ``cfg.trials``, so
    splitting the blocks over ``cfg.workers`` processes yields the same vector
    as a sequential run. The samples do not depend on ``env.gamma``.
    """
    if not lambda_active > 0:
        raise ElasticNetDomainError(f"lambda_active must be positive, got {lambda_active}")
    if tx_power < 0:
        raise ElasticNetDomainError(f"tx_power must be non-negative, got {tx_power}")

    started = time.monotonic()
    blocks = math.ceil(cfg.trials / BLOCK_TRIALS)
    jobs = [
        (env, lambda_active, tx_power, cfg, first, last)
        for first, last in _block_ranges(blocks, cfg.workers)
    ]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_simulate_blocks, jobs))
    else:
        parts = [_simulate_blocks(job) for job in jobs]
    sinr = np.concatenate(parts)[: cfg.trials]

    logger.debug(
        f"Simulated {cfg.trials} trials (alpha={env.alpha}, "
        f"lambda={lambda_active:.4g}/m2, workers={cfg.workers}) "
        f"in {time.monotonic() - started:.2f}s"
    )
    return sinr


def coverage_from_sinr(sinr: np.ndarray, gamma: float) -> McEstimate:
    """Fraction of samples with SINR strictly above ``gamma`` and its 95% half-width."""
    n = int(sinr.size)
    if n == 0:
        raise ElasticNetEstimationError("no SINR samples", samples=0)
    p_hat = float(np.count_nonzero(sinr > gamma)) / n
    half_width = Z_95 * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return McEstimate(p_hat, half_width, n)


def spectral_efficiency_from_sinr(sinr: np.ndarray, gamma: float) -> McEstimate:
    """Mean log2(1 + SINR) over the covered samples (SINR > gamma)."""
    covered = sinr[sinr > gamma]
    n = int(covered.size)
    if n == 0:
        raise ElasticNetEstimationError(
            f"no covered trial out of {sinr.size} at gamma={gamma:.4g}", samples=0
        )
    rates = np.log2(1.0 + covered)
    if n < 2:
        logger.warning("Spectral efficiency estimated from a single covered trial")
        return McEstimate(float(rates[0]), math.inf, n)
    half_width = Z_95 * float(np.std(rates, ddof=1)) / math.sqrt(n)
    return McEstimate(float(np.mean(rates)), half_width, n)


def mc_coverage(env: RadioEnv, lambda_active: float, tx_power: float, cfg: McConfig) -> McEstimate:
    """
    Monte Carlo coverage probability P(SINR > gamma).

    Args:
        env: Radio environment
        lambda_active: Density of active RRHs per m^2
        tx_power: Transmit power in watts
        cfg: Monte Carlo settings

    Returns:
        McEstimate(probability, half-width, trials)
    """
    return coverage_from_sinr(simulate_sinr(env, lambda_active, tx_power, cfg), env.gamma)


def mc_spectral_efficiency(
    env: RadioEnv, lambda_active: float, tx_power: float, cfg: McConfig
) -> McEstimate:
    """Monte Carlo spectral efficiency of a covered user in bit/s/Hz."""
    return spectral_efficiency_from_sinr(simulate_sinr(env, lambda_active, tx_power, cfg), env.gamma)
