"""Scenario execution: replay a day per cluster, summarize energy and validate the analytics."""

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.config.configuration import ConfigManager, Scenario
from src.utils.exceptions import ElasticNetDomainError, ElasticNetEstimationError
from src.utils.logging import get_logger

from .analytics import (
    KernelVariant,
    RadioEnv,
    coverage_approx,
    coverage_exact_integral,
    coverage_no_noise,
    spectral_efficiency,
)
from .geometry import McConfig, coverage_from_sinr, simulate_sinr, spectral_efficiency_from_sinr
from .provision import ProvisioningDecision, closed_form_provision, evaluate_decision
from .traffic import HOURS_PER_DAY, in_window

logger = logging.getLogger(__name__)

PER_M2_TO_PER_KM2 = 1e6
MINUTES_PER_DAY = 1440
DEFAULT_PEAK_WINDOW = (8.0, 19.0)
SCHEMES = ("elastic", "static")


@dataclass(frozen=True)
class TimeSeriesRow:
    """One cluster under one scheme at one timestep."""

    time_hours: float
    cluster_id: str
    scheme: str
    lambda_u_per_km2: float
    mu_a: float
    lambda_active_per_km2: float
    tx_power_w: float
    n_cores: int
    area_power_w: float
    vm_power_w: float
    total_power_w: float
    feasible: bool

    @classmethod
    def from_decision(
        cls,
        time_hours: float,
        cluster_id: str,
        scheme: str,
        lambda_u: float,
        lambda_r: float,
        decision: ProvisioningDecision,
    ) -> "TimeSeriesRow":
        return cls(
            time_hours=time_hours,
            cluster_id=cluster_id,
            scheme=scheme,
            lambda_u_per_km2=lambda_u * PER_M2_TO_PER_KM2,
            mu_a=decision.mu_a,
            lambda_active_per_km2=decision.active_density(lambda_r) * PER_M2_TO_PER_KM2,
            tx_power_w=decision.tx_power,
            n_cores=decision.n_cores,
            area_power_w=decision.breakdown.area_power,
            vm_power_w=decision.breakdown.vm_power,
            total_power_w=decision.objective,
            feasible=decision.feasible,
        )


def row_sort_key(row: TimeSeriesRow) -> Tuple[float, str, str]:
    return row.time_hours, row.cluster_id, row.scheme


def expand_scheme(scheme: str) -> List[str]:
    """Schemes replayed for a ``scheme`` option; ``both`` expands to elastic then static."""
    if scheme == "both":
        return list(SCHEMES)
    if scheme not in SCHEMES:
        raise ElasticNetDomainError(f"scheme must be elastic, static or both, got {scheme!r}")
    return [scheme]


def timesteps(timestep_minutes: int) -> List[float]:
    """Sample times in hours covering one day; the step must divide 24 h."""
    if timestep_minutes <= 0 or MINUTES_PER_DAY % timestep_minutes:
        raise ElasticNetDomainError(
            f"timestep must divide {MINUTES_PER_DAY} minutes, got {timestep_minutes}"
        )
    return [i * timestep_minutes / 60.0 for i in range(MINUTES_PER_DAY // timestep_minutes)]


def run_day(
    scenario: Scenario,
    scheme: str = "both",
    timestep_minutes: Optional[int] = None,
    variant: Optional[KernelVariant] = None,
) -> List[TimeSeriesRow]:
    """
    Replay one day for every cluster.

    The elastic scheme provisions each timestep for the current demand, sizing
    the cores for the scheduled PRBs when ``run.prb_load`` is ``demand``. The
    static scheme provisions once for the daily peak and holds that decision,
    re-checking it against the current demand.

    Args:
        scenario: Validated scenario
        scheme: ``elastic``, ``static`` or ``both``
        timestep_minutes: Step size (defaults to the scenario's)
        variant: Interference kernel variant (defaults to the scenario's)

    Returns:
        Rows ordered by (time, cluster, scheme)
    """
    schemes = expand_scheme(scheme)
    step = timestep_minutes or scenario.run.timestep_minutes
    variant = variant or scenario.run.kernel_variant
    times = timesteps(step)
    scale_prbs = scenario.run.prb_load == "demand"
    env, c, power, share = scenario.env, scenario.constraints, scenario.power, scenario.olt_share

    started = time.monotonic()
    rows: List[TimeSeriesRow] = []
    for cluster in scenario.clusters:
        log = get_logger(__name__, {"cluster": cluster.id})
        static = None
        if "static" in schemes:
            static = closed_form_provision(env, cluster.peak_state(share), c, power, variant)
            log.info(
                f"Static provisioning at peak {cluster.profile.peak() * PER_M2_TO_PER_KM2:.1f}/km2: "
                f"mu_a={static.mu_a:.4f}, P={static.tx_power:.4g} W, N_c={static.n_cores}"
            )

        for t in times:
            state = cluster.state_at(t, share, scale_prbs)
            for name in schemes:
                if name == "elastic":
                    decision = closed_form_provision(env, state, c, power, variant)
                else:
                    # the static pool keeps processing full peak frames
                    decision = evaluate_decision(
                        env,
                        replace(state, prb_load=1.0),
                        c,
                        power,
                        static.mu_a,
                        static.tx_power,
                        static.n_cores,
                        variant,
                    )
                if not decision.feasible:
                    log.warning(
                        f"{name} infeasible at {t:05.2f} h: {'; '.join(decision.violations)}"
                    )
                rows.append(
                    TimeSeriesRow.from_decision(
                        t, cluster.id, name, state.lambda_u, cluster.lambda_r, decision
                    )
                )

    rows.sort(key=row_sort_key)
    logger.info(
        f"Replayed {len(times)} timesteps x {len(scenario.clusters)} clusters "
        f"({', '.join(schemes)}) in {time.monotonic() - started:.2f}s"
    )
    return rows


@dataclass(frozen=True)
class SchemeSummary:
    """Energy and mean power of one cluster under one scheme."""

    cluster_id: str
    scheme: str
    energy_wh: float
    peak_energy_wh: float
    off_peak_energy_wh: float
    peak_mean_w: Optional[float]
    off_peak_mean_w: Optional[float]
    infeasible_steps: int


@dataclass(frozen=True)
class ClusterReduction:
    """Elastic saving against static, in percent of the static value."""

    cluster_id: str
    peak_window: Tuple[float, float]
    daily_pct: Optional[float]
    peak_pct: Optional[float]
    off_peak_pct: Optional[float]


@dataclass
class DaySummary:
    """Per-cluster, per-scheme energy accounting of a replayed day."""

    schemes: List[SchemeSummary] = field(default_factory=list)
    reductions: List[ClusterReduction] = field(default_factory=list)

    def get(self, cluster_id: str, scheme: str) -> SchemeSummary:
        for entry in self.schemes:
            if entry.cluster_id == cluster_id and entry.scheme == scheme:
                return entry
        raise KeyError((cluster_id, scheme))

    def reduction(self, cluster_id: str) -> ClusterReduction:
        for entry in self.reductions:
            if entry.cluster_id == cluster_id:
                return entry
        raise KeyError(cluster_id)

    def total_energy_wh(self, scheme: str) -> float:
        return sum(e.energy_wh for e in self.schemes if e.scheme == scheme)

    @property
    def network_reduction_pct(self) -> Optional[float]:
        return percent_reduction(self.total_energy_wh("static"), self.total_energy_wh("elastic"))


def percent_reduction(static: Optional[float], elastic: Optional[float]) -> Optional[float]:
    """(static - elastic) / static in percent; undefined unless static > 0."""
    if static is None or elastic is None or not static > 0:
        return None
    return 100.0 * (static - elastic) / static


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def _summarize_series(
    series: List[TimeSeriesRow], window: Tuple[float, float]
) -> Tuple[float, float, float, Optional[float], Optional[float]]:
    """Periodic trapezoid energies (daily, peak, off-peak) and window mean powers."""
    times = [r.time_hours for r in series]
    power = [r.total_power_w for r in series]
    peak_energy = off_energy = 0.0
    for i, t in enumerate(times):
        nxt = i + 1 if i + 1 < len(times) else 0
        t_next = times[nxt] if nxt else times[0] + HOURS_PER_DAY
        energy = (power[i] + power[nxt]) / 2.0 * (t_next - t)
        # each interval belongs to the window containing its start
        if in_window(t, window):
            peak_energy += energy
        else:
            off_energy += energy
    peak_mean = _mean([p for t, p in zip(times, power) if in_window(t, window)])
    off_mean = _mean([p for t, p in zip(times, power) if not in_window(t, window)])
    return peak_energy + off_energy, peak_energy, off_energy, peak_mean, off_mean


def summarize(
    rows: Iterable[TimeSeriesRow],
    peak_window: Tuple[float, float] = DEFAULT_PEAK_WINDOW,
    cluster_windows: Optional[Dict[str, Tuple[float, float]]] = None,
) -> DaySummary:
    """
    Daily energy, window energies and window mean powers per cluster and scheme.

    Args:
        rows: Time series of one day (any order)
        peak_window: Busy hours [start, end); wraps midnight when start > end
        cluster_windows: Per-cluster busy hours overriding ``peak_window``

    Returns:
        DaySummary with elastic-vs-static reductions for clusters carrying both
    """
    grouped: Dict[Tuple[str, str], List[TimeSeriesRow]] = defaultdict(list)
    for row in rows:
        grouped[(row.cluster_id, row.scheme)].append(row)
    if not grouped:
        raise ElasticNetDomainError("cannot summarize an empty time series")

    windows = cluster_windows or {}
    summary = DaySummary()
    for (cluster_id, scheme), series in sorted(grouped.items()):
        series.sort(key=lambda r: r.time_hours)
        window = windows.get(cluster_id) or peak_window
        energy, peak_e, off_e, peak_mean, off_mean = _summarize_series(series, window)
        summary.schemes.append(
            SchemeSummary(
                cluster_id=cluster_id,
                scheme=scheme,
                energy_wh=energy,
                peak_energy_wh=peak_e,
                off_peak_energy_wh=off_e,
                peak_mean_w=peak_mean,
                off_peak_mean_w=off_mean,
                infeasible_steps=sum(1 for r in series if not r.feasible),
            )
        )

    for cluster_id in sorted({cid for cid, _ in grouped}):
        if (cluster_id, "elastic") not in grouped or (cluster_id, "static") not in grouped:
            continue
        elastic, static = summary.get(cluster_id, "elastic"), summary.get(cluster_id, "static")
        summary.reductions.append(
            ClusterReduction(
                cluster_id=cluster_id,
                peak_window=windows.get(cluster_id) or peak_window,
                daily_pct=percent_reduction(static.energy_wh, elastic.energy_wh),
                peak_pct=percent_reduction(static.peak_mean_w, elastic.peak_mean_w),
                off_peak_pct=percent_reduction(static.off_peak_mean_w, elastic.off_peak_mean_w),
            )
        )
    return summary


def summarize_scenario(scenario: Scenario, rows: Iterable[TimeSeriesRow]) -> DaySummary:
    """``summarize`` with the scenario's run window and per-cluster windows."""
    windows = {c.id: c.peak_window for c in scenario.clusters if c.peak_window}
    return summarize(rows, scenario.run.peak_window, windows)


@dataclass(frozen=True)
class ValidationCell:
    """Analytic value against its Monte Carlo estimate."""

    quantity: str  # coverage, spectral_efficiency or noisy_coverage
    alpha: float
    gamma: float
    variant: str
    analytic: float
    estimate: float
    half_width: float
    samples: int
    tolerance: float
    gated: bool

    @property
    def delta(self) -> float:
        return abs(self.analytic - self.estimate)

    @property
    def passed(self) -> bool:
        return self.delta <= self.tolerance


@dataclass
class ValidationReport:
    """All validation cells; only gated cells decide the verdict."""

    cells: List[ValidationCell] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def failures(self) -> List[ValidationCell]:
        return [c for c in self.cells if c.gated and not c.passed]

    @property
    def flagged(self) -> List[ValidationCell]:
        """Reported cells outside tolerance that do not gate the verdict."""
        return [c for c in self.cells if not c.gated and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures


def coverage_tolerance(half_width: float) -> float:
    return max(0.01, 2.0 * half_width)


def validate(
    scenario: Scenario, trials: Optional[int] = None, seed: Optional[int] = None
) -> ValidationReport:
    """
    Compare closed forms with Monte Carlo over the (alpha, gamma) grid.

    Noise-free SINR does not depend on the threshold, so one simulation per alpha
    serves every gamma of the grid. Coverage is checked for both kernel variants;
    only the reference variant gates. Spectral efficiency and noisy coverage at
    the first cluster's peak decision are reported only.

    Args:
        scenario: Validated scenario
        trials: Override of the Monte Carlo trial count
        seed: Override of the Monte Carlo seed

    Returns:
        ValidationReport (always produced)
    """
    base = scenario.mc
    cfg = McConfig(
        trials=trials if trials is not None else base.trials,
        window_radius_factor=base.window_radius_factor,
        seed=seed if seed is not None else base.seed,
        fading_mean=base.fading_mean,
        workers=base.workers,
    )
    grid = scenario.validation
    report = ValidationReport()
    started = time.monotonic()

    for alpha in grid.alphas:
        sinr = simulate_sinr(
            RadioEnv(alpha=alpha, gamma=grid.gammas[0], sigma2=0.0, bandwidth=scenario.env.bandwidth),
            grid.lambda_per_m2,
            grid.tx_power_w,
            cfg,
        )
        for gamma in grid.gammas:
            env = RadioEnv(alpha=alpha, gamma=gamma, sigma2=0.0, bandwidth=scenario.env.bandwidth)
            coverage = coverage_from_sinr(sinr, gamma)
            for variant in KernelVariant:
                cell = ValidationCell(
                    quantity="coverage",
                    alpha=alpha,
                    gamma=gamma,
                    variant=variant.value,
                    analytic=coverage_no_noise(env, variant),
                    estimate=coverage.estimate,
                    half_width=coverage.half_width,
                    samples=coverage.samples,
                    tolerance=coverage_tolerance(coverage.half_width),
                    gated=variant is KernelVariant.REFERENCE,
                )
                report.cells.append(cell)
                logger.info(
                    f"coverage alpha={alpha:g} gamma={gamma:g} {variant.value}: "
                    f"analytic {cell.analytic:.4f} vs MC {cell.estimate:.4f} +/- {cell.half_width:.4f} "
                    f"(delta {cell.delta:.4f}{'' if cell.passed else ', OUTSIDE tolerance'})"
                )

            try:
                rate = spectral_efficiency_from_sinr(sinr, gamma)
            except ElasticNetEstimationError as e:
                report.notes.append(f"spectral efficiency alpha={alpha:g} gamma={gamma:g}: {e}")
                logger.warning(f"Spectral efficiency not estimated: {e}")
                continue
            cell = ValidationCell(
                quantity="spectral_efficiency",
                alpha=alpha,
                gamma=gamma,
                variant="",
                analytic=spectral_efficiency(env),
                estimate=rate.estimate,
                half_width=rate.half_width,
                samples=rate.samples,
                tolerance=coverage_tolerance(rate.half_width),
                gated=False,
            )
            report.cells.append(cell)
            logger.info(
                f"spectral efficiency alpha={alpha:g} gamma={gamma:g}: analytic {cell.analytic:.4f} "
                f"vs MC {cell.estimate:.4f} (delta {cell.delta:.4f}, reported only)"
            )

    _validate_noisy_cell(scenario, cfg, report)
    logger.info(
        f"Validation finished in {time.monotonic() - started:.1f}s: "
        f"{len(report.failures)} failure(s), {len(report.flagged)} flagged"
    )
    return report


def _validate_noisy_cell(scenario: Scenario, cfg: McConfig, report: ValidationReport) -> None:
    """Report MC coverage with noise at the first cluster's peak decision."""
    cluster = scenario.clusters[0]
    variant = scenario.run.kernel_variant
    env = scenario.env
    decision = closed_form_provision(
        env, cluster.peak_state(scenario.olt_share), scenario.constraints, scenario.power, variant
    )
    lambda_active = decision.active_density(cluster.lambda_r)
    if not (lambda_active > 0 and decision.tx_power > 0):
        report.notes.append(f"noisy coverage skipped for cluster {cluster.id}: no transmit power")
        return

    coverage = coverage_from_sinr(
        simulate_sinr(env, lambda_active, decision.tx_power, cfg), env.gamma
    )
    for name, analytic in (
        ("exact", coverage_exact_integral(env, lambda_active, decision.tx_power, variant)),
        ("approx", coverage_approx(env, lambda_active, decision.tx_power, variant)),
    ):
        report.cells.append(
            ValidationCell(
                quantity="noisy_coverage",
                alpha=env.alpha,
                gamma=env.gamma,
                variant=f"{variant.value}/{name}",
                analytic=analytic,
                estimate=coverage.estimate,
                half_width=coverage.half_width,
                samples=coverage.samples,
                tolerance=coverage_tolerance(coverage.half_width),
                gated=False,
            )
        )
    logger.info(
        f"noisy coverage at {cluster.id} peak (mu_a={decision.mu_a:.4f}, "
        f"P={decision.tx_power:.4g} W): MC {coverage.estimate:.4f}"
    )


@dataclass(frozen=True)
class SweepPoint:
    """Daily energy of both schemes at one value of the swept parameter."""

    param: str
    value: float
    elastic_wh: float
    static_wh: float
    reduction_pct: Optional[float]
    cluster_reductions: Dict[str, Optional[float]]
    infeasible_steps: int


def _format_override(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def sweep(
    param: str,
    start: float,
    stop: float,
    steps: int,
    config_path: Optional[str] = None,
    text: Optional[str] = None,
) -> List[SweepPoint]:
    """
    Replay the day for linearly spaced values of one ``section.key`` parameter.

    Args:
        param: Dotted config key, e.g. ``constraints.r_min_bps``
        start: First value
        stop: Last value
        steps: Number of values (at least 1)
        config_path: Scenario file
        text: Scenario document used instead of ``config_path``

    Returns:
        One SweepPoint per value
    """
    if steps < 1:
        raise ElasticNetDomainError(f"steps must be at least 1, got {steps}")
    values = np.linspace(start, stop, steps) if steps > 1 else np.array([start])

    points = []
    for value in values:
        overrides = {param: _format_override(value)}
        scenario = ConfigManager(config_path, overrides=overrides, text=text).scenario
        rows = run_day(scenario, "both")
        summary = summarize_scenario(scenario, rows)
        point = SweepPoint(
            param=param,
            value=float(value),
            elastic_wh=summary.total_energy_wh("elastic"),
            static_wh=summary.total_energy_wh("static"),
            reduction_pct=summary.network_reduction_pct,
            cluster_reductions={r.cluster_id: r.daily_pct for r in summary.reductions},
            infeasible_steps=sum(s.infeasible_steps for s in summary.schemes),
        )
        points.append(point)
        reduction = "n/a" if point.reduction_pct is None else f"{point.reduction_pct:.2f}%"
        logger.info(
            f"{param}={_format_override(value)}: elastic {point.elastic_wh:.1f} Wh, "
            f"static {point.static_wh:.1f} Wh, reduction {reduction}"
        )
    return points
