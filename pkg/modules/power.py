"""Power consumption models for RRHs, the PON transport network and the VBS pool."""

from dataclasses import dataclass

from src.utils.exceptions import ElasticNetDomainError

# Signal-processing budget left after the RRH <-> pool round trip (3 ms - 400 us)
FRAME_BUDGET_US = 2600.0


@dataclass(frozen=True)
class RrhPowerParams:
    """Per-RRH linear power model."""

    p_active_circuit: float  # watts
    p_sleep: float  # watts
    amp_efficiency: float  # power amplifier efficiency eta

    def __post_init__(self):
        """Validate parameters after initialization."""
        if not self.p_sleep >= 0:
            raise ElasticNetDomainError(f"p_sleep must be non-negative, got {self.p_sleep}")
        if not self.p_active_circuit > self.p_sleep:
            raise ElasticNetDomainError(
                f"p_active_circuit ({self.p_active_circuit}) must exceed p_sleep ({self.p_sleep})"
            )
        if not 0 < self.amp_efficiency <= 1:
            raise ElasticNetDomainError(
                f"amp_efficiency must be in (0, 1], got {self.amp_efficiency}"
            )


@dataclass(frozen=True)
class TransportPowerParams:
    """PON transport power: one OLT in the pool, one ONU per RRH."""

    p_olt: float
    p_onu_active: float
    p_onu_sleep: float

    def __post_init__(self):
        """Validate parameters after initialization."""
        if not self.p_olt >= 0:
            raise ElasticNetDomainError(f"p_olt must be non-negative, got {self.p_olt}")
        if not self.p_onu_sleep >= 0:
            raise ElasticNetDomainError(
                f"p_onu_sleep must be non-negative, got {self.p_onu_sleep}"
            )
        if not self.p_onu_active > self.p_onu_sleep:
            raise ElasticNetDomainError(
                f"p_onu_active ({self.p_onu_active}) must exceed p_onu_sleep ({self.p_onu_sleep})"
            )


@dataclass(frozen=True)
class VmPowerParams:
    """VBS pool CPU power and frame-processing constants."""

    p_max_per_core: float  # watts per fully loaded core
    beta_idle: float  # fraction of p_max drawn when idle
    cpu_speed: float  # GHz
    msc_constant: float  # upsilon, MCS-dependent processing cost

    def __post_init__(self):
        """Validate parameters after initialization."""
        if not self.p_max_per_core > 0:
            raise ElasticNetDomainError(
                f"p_max_per_core must be positive, got {self.p_max_per_core}"
            )
        if not 0 <= self.beta_idle <= 1:
            raise ElasticNetDomainError(f"beta_idle must be in [0, 1], got {self.beta_idle}")
        if not self.cpu_speed > 0:
            raise ElasticNetDomainError(f"cpu_speed must be positive, got {self.cpu_speed}")
        if not self.msc_constant > 0:
            raise ElasticNetDomainError(
                f"msc_constant must be positive, got {self.msc_constant}"
            )


@dataclass(frozen=True)
class PowerParams:
    """Every power constant of the network, grouped by subsystem."""

    rrh: RrhPowerParams
    transport: TransportPowerParams
    vm: VmPowerParams

    @classmethod
    def defaults(cls) -> "PowerParams":
        """Reference constants of a 3.3 GHz pool."""
        return cls(
            rrh=RrhPowerParams(p_active_circuit=12.4, p_sleep=3.5, amp_efficiency=0.32),
            transport=TransportPowerParams(p_olt=20.0, p_onu_active=4.0, p_onu_sleep=0.5),
            vm=VmPowerParams(p_max_per_core=72.0, beta_idle=0.7, cpu_speed=3.3, msc_constant=117.4),
        )


@dataclass(frozen=True)
class PowerBreakdown:
    """Power accounting of one cluster at one instant."""

    area_power_density: float  # W/m^2
    area_m2: float
    vm_power: float  # W
    total_power: float  # W

    @property
    def area_power(self) -> float:
        """RRH plus ONU power of the whole cluster area in watts."""
        return self.area_power_density * self.area_m2


def rrh_power(tx_power: float, p: RrhPowerParams) -> float:
    """
    Power drawn by one RRH.

    Args:
        tx_power: Radiated power in watts (0 means the RRH sleeps)
        p: RRH power parameters

    Returns:
        Consumed power in watts
    """
    if tx_power < 0:
        raise ElasticNetDomainError(f"tx_power must be non-negative, got {tx_power}")
    if tx_power == 0:
        return p.p_sleep
    return p.p_active_circuit + tx_power / p.amp_efficiency


def q1(tx_power: float, rrh: RrhPowerParams, tn: TransportPowerParams) -> float:
    """Extra power per RRH of switching it (and its ONU) from sleep to active."""
    return (
        rrh.p_active_circuit
        + tx_power / rrh.amp_efficiency
        + tn.p_onu_active
        - rrh.p_sleep
        - tn.p_onu_sleep
    )


def q2(rrh: RrhPowerParams, tn: TransportPowerParams) -> float:
    """Power per sleeping RRH including its ONU."""
    return rrh.p_sleep + tn.p_onu_sleep


def area_power(
    lambda_r: float,
    mu_a: float,
    tx_power: float,
    rrh: RrhPowerParams,
    tn: TransportPowerParams,
) -> float:
    """
    Area power density of RRHs and ONUs, lambda_r * (mu_a * Q1 + Q2), in W/m^2.

    Args:
        lambda_r: Deployed RRH density per m^2
        mu_a: Activity factor in [0, 1]
        tx_power: Transmit power of active RRHs in watts
        rrh: RRH power parameters
        tn: Transport power parameters
    """
    if not 0 <= mu_a <= 1:
        raise ElasticNetDomainError(f"mu_a must be in [0, 1], got {mu_a}")
    if lambda_r < 0:
        raise ElasticNetDomainError(f"lambda_r must be non-negative, got {lambda_r}")
    if tx_power < 0:
        raise ElasticNetDomainError(f"tx_power must be non-negative, got {tx_power}")
    return lambda_r * (mu_a * q1(tx_power, rrh, tn) + q2(rrh, tn))


def area_power_by_state(
    lambda_active: float,
    lambda_sleep: float,
    tx_power: float,
    rrh: RrhPowerParams,
    tn: TransportPowerParams,
) -> float:
    """Area power density written per RRH state (active and sleeping densities)."""
    active = rrh.p_active_circuit + tx_power / rrh.amp_efficiency + tn.p_onu_active
    sleeping = rrh.p_sleep + tn.p_onu_sleep
    return lambda_active * active + lambda_sleep * sleeping


def frame_processing_time(n_prb: int, n_cores: int, p: VmPowerParams) -> float:
    """
    Frame processing time in microseconds, M * upsilon / (N_c * omega).

    omega is in GHz; the microsecond result follows the model's unit convention.
    """
    if n_cores < 1:
        raise ElasticNetDomainError(f"n_cores must be at least 1, got {n_cores}")
    if n_prb < 1:
        raise ElasticNetDomainError(f"n_prb must be at least 1, got {n_prb}")
    return n_prb * p.msc_constant / (n_cores * p.cpu_speed)


def vm_utilization(n_prb: int, deadline_us: float, n_cores: int, p: VmPowerParams) -> float:
    """VM utilization T_fr / T_dl clamped to [0, 1]."""
    if not deadline_us > 0:
        raise ElasticNetDomainError(f"deadline_us must be positive, got {deadline_us}")
    return min(1.0, max(0.0, frame_processing_time(n_prb, n_cores, p) / deadline_us))


def vm_power(
    n_cores: int,
    utilization: float,
    p: VmPowerParams,
    tn: TransportPowerParams,
    olt_share: float = 1.0,
) -> float:
    """
    VBS-Cluster power: N_c*P_max*u*(1 - beta) + beta*N_c*P_max + olt_share*P_olt.

    Args:
        n_cores: CPU cores dedicated to the VBS-Cluster
        utilization: VM utilization in [0, 1]
        p: VM power parameters
        tn: Transport parameters (the OLT sits in the pool)
        olt_share: Fraction of the OLT attributed to this cluster

    Returns:
        Power in watts
    """
    if n_cores < 1:
        raise ElasticNetDomainError(f"n_cores must be at least 1, got {n_cores}")
    if not 0 <= utilization <= 1:
        raise ElasticNetDomainError(f"utilization must be in [0, 1], got {utilization}")
    if not 0 <= olt_share <= 1:
        raise ElasticNetDomainError(f"olt_share must be in [0, 1], got {olt_share}")
    size = n_cores * p.p_max_per_core
    return size * utilization * (1 - p.beta_idle) + p.beta_idle * size + olt_share * tn.p_olt


def vm_power_load_split(
    n_cores: int,
    utilization: float,
    p: VmPowerParams,
    tn: TransportPowerParams,
    olt_share: float = 1.0,
) -> float:
    """VBS-Cluster power written as busy share plus idle share of the cores."""
    size = n_cores * p.p_max_per_core
    return (
        size * utilization
        + p.beta_idle * size * (1 - utilization)
        + olt_share * tn.p_olt
    )


def power_breakdown(area_power_density: float, area_m2: float, vm_power_w: float) -> PowerBreakdown:
    """Combine area and pool power into the total cluster power."""
    if area_power_density < 0 or vm_power_w < 0 or area_m2 <= 0:
        raise ElasticNetDomainError(
            f"invalid power breakdown inputs: density={area_power_density}, "
            f"area={area_m2}, vm={vm_power_w}"
        )
    return PowerBreakdown(
        area_power_density=area_power_density,
        area_m2=area_m2,
        vm_power=vm_power_w,
        total_power=area_power_density * area_m2 + vm_power_w,
    )
