"""Per-cluster provisioning: activity factor, transmit power and VBS cores.

Three strategies share one objective (total cluster power) and one feasibility
check (``evaluate_decision``):

- ``closed_form_provision`` minimizes each variable independently at its
  constraint boundary.
- ``coordinate_descent_provision`` alternates activity and power steps and
  line-searches the activity factor when the power trade-off favours it.
- ``brute_force_provision`` scans a grid and serves as the reference oracle.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.utils.exceptions import ElasticNetDomainError

from .analytics import (
    KernelVariant,
    RadioEnv,
    gamma_function,
    interference_factor,
    spectral_efficiency,
)
from .power import (
    FRAME_BUDGET_US,
    PowerBreakdown,
    PowerParams,
    VmPowerParams,
    area_power,
    frame_processing_time,
    power_breakdown,
    q1,
    q2,
    vm_power,
    vm_utilization,
)

logger = logging.getLogger(__name__)

RATE_SLACK = 1e-3  # relative
COVERAGE_SLACK = 1e-9  # absolute
DEADLINE_SLACK = 1e-9  # relative
DEFAULT_GRID = 64
MIN_GRID = 32


@dataclass(frozen=True)
class Constraints:
    """Service constraints of one cluster."""

    epsilon: float  # fraction of the interference-limited coverage to keep
    r_min: float  # bits/s per user
    deadline_us: float  # frame processing deadline
    n_prb: int  # PRBs per frame at the daily peak

    def __post_init__(self):
        """Validate constraints after initialization."""
        if not 0 < self.epsilon < 1:
            raise ElasticNetDomainError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not self.r_min > 0:
            raise ElasticNetDomainError(f"r_min must be positive, got {self.r_min}")
        if not self.deadline_us > 0:
            raise ElasticNetDomainError(f"deadline_us must be positive, got {self.deadline_us}")
        if self.n_prb < 1:
            raise ElasticNetDomainError(f"n_prb must be at least 1, got {self.n_prb}")
        if self.deadline_us > FRAME_BUDGET_US:
            logger.warning(
                f"Deadline {self.deadline_us:g} us exceeds the {FRAME_BUDGET_US:g} us "
                f"signal processing budget"
            )


@dataclass(frozen=True)
class ClusterState:
    """Snapshot of one cluster at one instant (densities per m^2)."""

    lambda_r: float
    lambda_u: float
    area_m2: float
    olt_share: float = 1.0
    prb_load: float = 1.0  # scheduled PRBs as a fraction of the peak frame

    def __post_init__(self):
        """Validate the snapshot after initialization."""
        if not self.lambda_r > 0:
            raise ElasticNetDomainError(f"lambda_r must be positive, got {self.lambda_r}")
        if not self.lambda_u >= 0:
            raise ElasticNetDomainError(f"lambda_u must be non-negative, got {self.lambda_u}")
        if not self.area_m2 > 0:
            raise ElasticNetDomainError(f"area_m2 must be positive, got {self.area_m2}")
        if not 0 < self.olt_share <= 1:
            raise ElasticNetDomainError(f"olt_share must be in (0, 1], got {self.olt_share}")
        if not 0 <= self.prb_load <= 1:
            raise ElasticNetDomainError(f"prb_load must be in [0, 1], got {self.prb_load}")


@dataclass(frozen=True)
class ProvisioningDecision:
    """Provisioning of one cluster and the power it costs."""

    mu_a: float
    tx_power: float
    n_cores: int
    feasible: bool
    objective: float  # total cluster power in watts
    breakdown: PowerBreakdown
    utilization: float
    converged: bool = True
    iterations: int = 0
    violations: Tuple[str, ...] = field(default_factory=tuple)

    def active_density(self, lambda_r: float) -> float:
        """Active RRH density per m^2 for the deployed density ``lambda_r``."""
        return self.mu_a * lambda_r


# Both terms cost several quadratures and are reused for every timestep
@lru_cache(maxsize=128)
def _tau(env: RadioEnv) -> float:
    return spectral_efficiency(env)


@lru_cache(maxsize=128)
def _upsilon(env: RadioEnv, variant: KernelVariant) -> float:
    return interference_factor(env, variant)


def per_user_bandwidth(lambda_active: float, lambda_u: float, bandwidth: float) -> float:
    """Bandwidth share of one user, B * lambda_active / lambda_u, in Hz."""
    if not lambda_u > 0:
        raise ElasticNetDomainError(f"lambda_u must be positive, got {lambda_u}")
    if lambda_active < 0:
        raise ElasticNetDomainError(f"lambda_active must be non-negative, got {lambda_active}")
    return bandwidth * lambda_active / lambda_u


def per_user_rate(env: RadioEnv, lambda_r: float, mu_a: float, lambda_u: float) -> float:
    """Per-user rate (B * mu_a * lambda_r / lambda_u) * tau in bits/s."""
    tau = _tau(env)
    return per_user_bandwidth(mu_a * lambda_r, lambda_u, env.bandwidth) * tau


def min_activity_factor(
    env: RadioEnv, lambda_r: float, lambda_u: float, c: Constraints
) -> Optional[float]:
    """
    Smallest activity factor meeting the per-user rate.

    Args:
        env: Radio environment
        lambda_r: Deployed RRH density per m^2
        lambda_u: User density per m^2
        c: Service constraints

    Returns:
        mu_a* = R_0 * lambda_u / (B * lambda_r * tau), or None when it exceeds 1

    Raises:
        ElasticNetDomainError: When tau is not positive (a zero SINR threshold)
    """
    if not lambda_r > 0:
        raise ElasticNetDomainError(f"lambda_r must be positive, got {lambda_r}")
    if lambda_u < 0:
        raise ElasticNetDomainError(f"lambda_u must be non-negative, got {lambda_u}")
    if lambda_u == 0:
        return 0.0
    tau = _tau(env)
    if not tau > 0:
        raise ElasticNetDomainError(
            f"spectral efficiency must be positive to size the activity factor, got {tau:.6g} "
            f"(alpha={env.alpha:g}, gamma={env.gamma:g})"
        )
    mu = c.r_min * lambda_u / (env.bandwidth * lambda_r * tau)
    if mu > 1.0:
        return None
    return mu


def transmit_power_constant(
    env: RadioEnv, c: Constraints, variant: KernelVariant = KernelVariant.REFERENCE
) -> float:
    """
    L1 = gamma*sigma2*Gamma(alpha/2 + 1) / (pi^(alpha/2) * (1 + Upsilon)^(alpha/2) * (1 - eps)).

    Minimum transmit power is L1 / (mu_a * lambda_r)^(alpha/2).
    """
    if c.epsilon >= 1:
        raise ElasticNetDomainError(f"epsilon must be below 1, got {c.epsilon}")
    upsilon = _upsilon(env, variant)
    half_alpha = env.alpha / 2.0
    return (
        env.gamma
        * env.sigma2
        * gamma_function(half_alpha + 1.0)
        / (math.pi**half_alpha * (1.0 + upsilon) ** half_alpha * (1.0 - c.epsilon))
    )


def min_tx_power(
    env: RadioEnv,
    lambda_r: float,
    mu_a: float,
    c: Constraints,
    variant: KernelVariant = KernelVariant.REFERENCE,
) -> float:
    """
    Smallest transmit power keeping approximate coverage at epsilon * P_inf.

    Args:
        env: Radio environment
        lambda_r: Deployed RRH density per m^2
        mu_a: Activity factor
        c: Service constraints
        variant: Interference kernel variant

    Returns:
        Transmit power in watts (0 for a noiseless network)
    """
    lambda_active = mu_a * lambda_r
    if not lambda_active > 0:
        raise ElasticNetDomainError(
            f"active density must be positive, got mu_a={mu_a}, lambda_r={lambda_r}"
        )
    l1 = transmit_power_constant(env, c, variant)
    return l1 / lambda_active ** (env.alpha / 2.0)


def coverage_activity_bound(
    env: RadioEnv,
    lambda_r: float,
    tx_power: float,
    c: Constraints,
    variant: KernelVariant = KernelVariant.REFERENCE,
) -> float:
    """Smallest activity factor meeting the coverage constraint at a fixed power (may exceed 1)."""
    l1 = transmit_power_constant(env, c, variant)
    if l1 == 0.0:
        return 0.0
    if not tx_power > 0:
        return math.inf
    return (l1 / tx_power) ** (2.0 / env.alpha) / lambda_r


def scheduled_prbs(c: Constraints, prb_load: float = 1.0) -> int:
    """PRBs in a frame carrying ``prb_load`` of the peak traffic; at least one."""
    if not 0 <= prb_load <= 1:
        raise ElasticNetDomainError(f"prb_load must be in [0, 1], got {prb_load}")
    return max(1, math.ceil(c.n_prb * prb_load * (1.0 - 1e-12)))


def min_cores(c: Constraints, p: VmPowerParams, n_prb: Optional[int] = None) -> int:
    """
    Fewest cores finishing a frame before the deadline, ceil(M * upsilon / (T_dl * omega)).

    ``n_prb`` defaults to the peak frame ``c.n_prb``. Never below one core.
    """
    n_prb = c.n_prb if n_prb is None else n_prb
    ratio = n_prb * p.msc_constant / (c.deadline_us * p.cpu_speed)
    # a ratio that is an integer up to rounding must not round up
    cores = max(1, math.ceil(ratio * (1.0 - 1e-12)))
    if frame_processing_time(n_prb, cores, p) > c.deadline_us * (1.0 + DEADLINE_SLACK):
        cores += 1
    return cores


def evaluate_decision(
    env: RadioEnv,
    state: ClusterState,
    c: Constraints,
    power: PowerParams,
    mu_a: float,
    tx_power: float,
    n_cores: int,
    variant: KernelVariant = KernelVariant.REFERENCE,
    converged: bool = True,
    iterations: int = 0,
) -> ProvisioningDecision:
    """
    Objective and constraint re-check of an arbitrary (mu_a, P, N_c) triple.

    Constraints: per-user rate at least R_0 (0.1% slack), approximate coverage at
    least epsilon * P_inf, processing time of the scheduled frame within the
    deadline. With no demand and every RRH asleep the coverage constraint is
    vacuous.
    """
    violations = []
    if state.lambda_u > 0:
        rate = per_user_rate(env, state.lambda_r, mu_a, state.lambda_u)
        if rate < c.r_min * (1.0 - RATE_SLACK):
            violations.append(f"rate {rate:.6g} < {c.r_min:.6g} bit/s")

    if mu_a > 0 or state.lambda_u > 0:
        upsilon = _upsilon(env, variant)
        p_inf = 1.0 / (1.0 + upsilon)
        if mu_a <= 0:
            coverage = 0.0
        elif env.sigma2 == 0:
            coverage = p_inf
        elif tx_power <= 0:
            coverage = 0.0
        else:
            half_alpha = env.alpha / 2.0
            penalty = (
                env.gamma
                * env.sigma2
                * gamma_function(half_alpha + 1.0)
                / (tx_power * (math.pi * mu_a * state.lambda_r * (1.0 + upsilon)) ** half_alpha)
            )
            coverage = min(1.0, max(0.0, p_inf * (1.0 - penalty)))
        if coverage < c.epsilon * p_inf - COVERAGE_SLACK:
            violations.append(f"coverage {coverage:.6g} < {c.epsilon * p_inf:.6g}")

    n_prb = scheduled_prbs(c, state.prb_load)
    t_fr = frame_processing_time(n_prb, n_cores, power.vm)
    if t_fr > c.deadline_us * (1.0 + DEADLINE_SLACK):
        violations.append(f"frame time {t_fr:.6g} us > {c.deadline_us:g} us")

    utilization = vm_utilization(n_prb, c.deadline_us, n_cores, power.vm)
    density = area_power(state.lambda_r, mu_a, tx_power, power.rrh, power.transport)
    vm = vm_power(n_cores, utilization, power.vm, power.transport, state.olt_share)
    breakdown = power_breakdown(density, state.area_m2, vm)

    return ProvisioningDecision(
        mu_a=mu_a,
        tx_power=tx_power,
        n_cores=n_cores,
        feasible=not violations,
        objective=breakdown.total_power,
        breakdown=breakdown,
        utilization=utilization,
        converged=converged,
        iterations=iterations,
        violations=tuple(violations),
    )


def _boundary_decision(
    env: RadioEnv,
    state: ClusterState,
    c: Constraints,
    power: PowerParams,
    variant: KernelVariant,
) -> Tuple[Optional[float], ProvisioningDecision]:
    """Boundary point (mu_a*, P*(mu_a*), N_c*), or the all-active fallback when mu_a* > 1."""
    n_cores = min_cores(c, power.vm, scheduled_prbs(c, state.prb_load))
    mu = min_activity_factor(env, state.lambda_r, state.lambda_u, c)
    if mu is None:
        tx = min_tx_power(env, state.lambda_r, 1.0, c, variant)
        decision = evaluate_decision(env, state, c, power, 1.0, tx, n_cores, variant)
        logger.debug(
            f"Demand {state.lambda_u:.4g}/m2 exceeds deployed capacity; "
            f"all RRHs active and infeasible"
        )
        return None, decision
    if mu == 0.0:
        return mu, evaluate_decision(env, state, c, power, 0.0, 0.0, n_cores, variant)
    tx = min_tx_power(env, state.lambda_r, mu, c, variant)
    return mu, evaluate_decision(env, state, c, power, mu, tx, n_cores, variant)


def closed_form_provision(
    env: RadioEnv,
    state: ClusterState,
    c: Constraints,
    power: PowerParams,
    variant: KernelVariant = KernelVariant.REFERENCE,
) -> ProvisioningDecision:
    """
    Minimize each variable at its own constraint boundary.

    Args:
        env: Radio environment
        state: Cluster snapshot
        c: Service constraints
        power: Power model constants
        variant: Interference kernel variant

    Returns:
        Decision with the feasibility flag re-checked
    """
    _, decision = _boundary_decision(env, state, c, power, variant)
    return decision


def _reduced_slope(
    env: RadioEnv, state: ClusterState, power: PowerParams, l1: float, mu: float
) -> float:
    """d/dmu of the per-RRH area power along P = P*(mu), up to the positive factor lambda_r."""
    q1_base = q1(0.0, power.rrh, power.transport)
    half_alpha = env.alpha / 2.0
    return q1_base + (1.0 - half_alpha) * l1 * mu ** (-half_alpha) / (
        power.rrh.amp_efficiency * state.lambda_r**half_alpha
    )


def coordinate_descent_provision(
    env: RadioEnv,
    state: ClusterState,
    c: Constraints,
    power: PowerParams,
    variant: KernelVariant = KernelVariant.REFERENCE,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> ProvisioningDecision:
    """
    Joint minimization of activity factor and transmit power by coordinate descent.

    Each iteration takes an activity step (smallest activity meeting the rate and
    the coverage at the current power, then a bounded line search over
    mu_a -> objective(mu_a, P*(mu_a)) when that curve still descends) followed by
    a power step (P = P*(mu_a)). Stops when the objective improves by less than
    ``tol`` watts.

    Returns:
        Best decision found; ``converged`` is False when ``max_iters`` ran out
    """
    if max_iters < 1:
        raise ElasticNetDomainError(f"max_iters must be at least 1, got {max_iters}")

    mu_floor, start = _boundary_decision(env, state, c, power, variant)
    if mu_floor is None or mu_floor == 0.0:
        return start

    l1 = transmit_power_constant(env, c, variant)
    n_cores = start.n_cores

    def reduced(mu: float) -> float:
        tx = l1 / (mu * state.lambda_r) ** (env.alpha / 2.0)
        return evaluate_decision(env, state, c, power, mu, tx, n_cores, variant).objective

    best = start
    mu, tx = start.mu_a, start.tx_power
    converged = False
    iteration = 0
    for iteration in range(1, max_iters + 1):
        # activity step
        mu = min(1.0, max(mu_floor, coverage_activity_bound(env, state.lambda_r, tx, c, variant)))
        if mu < 1.0 and l1 > 0 and _reduced_slope(env, state, power, l1, mu) < 0:
            current = reduced(mu)
            result = minimize_scalar(
                reduced, bounds=(mu, 1.0), method="bounded", options={"xatol": 1e-10}
            )
            for candidate in (float(result.x), 1.0):
                value = reduced(candidate)
                if value < current:
                    mu, current = candidate, value

        # power step
        tx = min_tx_power(env, state.lambda_r, mu, c, variant)
        decision = evaluate_decision(env, state, c, power, mu, tx, n_cores, variant)

        improvement = best.objective - decision.objective
        if decision.feasible and improvement > 0:
            best = decision
        if improvement < tol:
            converged = True
            break

    if not converged:
        logger.warning(f"Coordinate descent stopped after {max_iters} iterations without converging")
    else:
        logger.debug(
            f"Coordinate descent converged in {iteration} iterations "
            f"(mu_a={best.mu_a:.6g}, P={best.tx_power:.4g} W, {best.objective:.6g} W)"
        )

    return evaluate_decision(
        env,
        state,
        c,
        power,
        best.mu_a,
        best.tx_power,
        n_cores,
        variant,
        converged=converged,
        iterations=iteration,
    )


def brute_force_provision(
    env: RadioEnv,
    state: ClusterState,
    c: Constraints,
    power: PowerParams,
    variant: KernelVariant = KernelVariant.REFERENCE,
    grid: int = DEFAULT_GRID,
) -> ProvisioningDecision:
    """
    Exhaustive search over an activity x power grid.

    Activity: ``grid`` points spaced linearly on [mu_a*, 1]. Power: ``grid``
    points spaced logarithmically on [P*(1), 10 * P*(mu_a*)] plus the exact
    boundary power of each activity row. Ties go to the lowest activity, then the
    lowest power.
    """
    if grid < MIN_GRID:
        raise ElasticNetDomainError(f"grid must have at least {MIN_GRID} points, got {grid}")

    mu_floor, start = _boundary_decision(env, state, c, power, variant)
    if mu_floor is None or mu_floor == 0.0:
        return start

    n_cores = start.n_cores
    l1 = transmit_power_constant(env, c, variant)
    half_alpha = env.alpha / 2.0
    mus = np.linspace(mu_floor, 1.0, grid)
    row_power = l1 / (mus * state.lambda_r) ** half_alpha

    if l1 > 0:
        p_low = l1 / state.lambda_r**half_alpha
        p_high = 10.0 * l1 / (mu_floor * state.lambda_r) ** half_alpha
        shared = np.logspace(math.log10(p_low), math.log10(p_high), grid)
        powers = np.sort(
            np.concatenate((np.broadcast_to(shared, (grid, grid)), row_power[:, None]), axis=1),
            axis=1,
        )
    else:
        powers = np.zeros((grid, 1))
    mu_grid = np.broadcast_to(mus[:, None], powers.shape)

    # objective
    rrh, tn = power.rrh, power.transport
    density = state.lambda_r * (mu_grid * q1(0.0, rrh, tn) + mu_grid * powers / rrh.amp_efficiency + q2(rrh, tn))
    total = density * state.area_m2 + start.breakdown.vm_power

    # constraints
    tau, upsilon = _tau(env), _upsilon(env, variant)
    p_inf = 1.0 / (1.0 + upsilon)
    rate = env.bandwidth * mu_grid * state.lambda_r / state.lambda_u * tau
    if env.sigma2 > 0:
        with np.errstate(divide="ignore"):
            penalty = (
                env.gamma
                * env.sigma2
                * gamma_function(half_alpha + 1.0)
                / (powers * (math.pi * mu_grid * state.lambda_r * (1.0 + upsilon)) ** half_alpha)
            )
        coverage = np.clip(p_inf * (1.0 - penalty), 0.0, 1.0)
    else:
        coverage = np.full(powers.shape, p_inf)
    feasible = (rate >= c.r_min * (1.0 - RATE_SLACK)) & (
        coverage >= c.epsilon * p_inf - COVERAGE_SLACK
    )

    if not feasible.any():
        logger.debug("Brute force grid has no feasible point")
        return start

    masked = np.where(feasible, total, np.inf)
    row, col = np.unravel_index(int(np.argmin(masked)), masked.shape)
    return evaluate_decision(
        env, state, c, power, float(mus[row]), float(powers[row, col]), n_cores, variant
    )
