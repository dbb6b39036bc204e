"""Diurnal user density per cluster (the tidal effect) and cluster definitions."""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.utils.exceptions import ElasticNetDomainError

from .provision import ClusterState

HOURS_PER_DAY = 24.0
KM2_TO_M2 = 1e6
PER_KM2_TO_PER_M2 = 1e-6

Knot = Tuple[float, float]  # (hour, density per m^2)


def _check_hour(t_hours: float) -> None:
    if not 0.0 <= t_hours < HOURS_PER_DAY:
        raise ElasticNetDomainError(f"time must be in [0, 24) hours, got {t_hours}")


class DiurnalProfile(ABC):
    """24-hour periodic user density (per m^2)."""

    kind: str = ""

    @abstractmethod
    def density_at(self, t_hours: float) -> float:
        """
        User density at a time of day.

        Args:
            t_hours: Hour of the day in [0, 24)

        Returns:
            Density per m^2
        """
        pass

    @abstractmethod
    def peak(self) -> float:
        """Exact maximum density over the day."""
        pass


@dataclass(frozen=True)
class SinusoidProfile(DiurnalProfile):
    """Raised cosine between a trough and a peak, one cycle per day."""

    lambda_peak: float
    lambda_trough: float
    peak_hour: float

    kind = "sinusoid"

    def __post_init__(self):
        """Validate the profile after initialization."""
        if not self.lambda_trough >= 0:
            raise ElasticNetDomainError(
                f"lambda_trough must be non-negative, got {self.lambda_trough}"
            )
        if not self.lambda_peak >= self.lambda_trough:
            raise ElasticNetDomainError(
                f"lambda_peak ({self.lambda_peak}) must not be below "
                f"lambda_trough ({self.lambda_trough})"
            )
        _check_hour(self.peak_hour)

    def density_at(self, t_hours: float) -> float:
        _check_hour(t_hours)
        swing = self.lambda_peak - self.lambda_trough
        phase = 2.0 * math.pi * (t_hours - self.peak_hour) / HOURS_PER_DAY
        return self.lambda_trough + swing * (1.0 + math.cos(phase)) / 2.0

    def peak(self) -> float:
        return self.lambda_peak


class _KnotProfile(DiurnalProfile):
    """Shared validation for profiles defined by (hour, density) knots."""

    def __init__(self, knots: Sequence[Knot]):
        if not knots:
            raise ElasticNetDomainError(f"{self.kind} profile needs at least one knot")
        hours = [float(h) for h, _ in knots]
        densities = [float(d) for _, d in knots]
        for h in hours:
            _check_hour(h)
        if any(b <= a for a, b in zip(hours, hours[1:])):
            raise ElasticNetDomainError(f"knot hours must be strictly increasing, got {hours}")
        if any(d < 0 for d in densities):
            raise ElasticNetDomainError(f"knot densities must be non-negative, got {densities}")
        self._hours = np.asarray(hours)
        self._densities = np.asarray(densities)

    @property
    def knots(self) -> Tuple[Knot, ...]:
        return tuple(zip(self._hours.tolist(), self._densities.tolist()))

    def peak(self) -> float:
        # linear segments and steps both attain their maximum at a knot
        return float(self._densities.max())

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.knots == other.knots

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.knots))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(knots={list(self.knots)})"


class PiecewiseLinearProfile(_KnotProfile):
    """Linear interpolation between knots, wrapping from the last knot to the first."""

    kind = "piecewise_linear"

    def density_at(self, t_hours: float) -> float:
        _check_hour(t_hours)
        return float(np.interp(t_hours, self._hours, self._densities, period=HOURS_PER_DAY))


class TableProfile(_KnotProfile):
    """Step function holding each knot's density until the next knot."""

    kind = "table"

    def density_at(self, t_hours: float) -> float:
        _check_hour(t_hours)
        index = int(np.searchsorted(self._hours, t_hours, side="right")) - 1
        # before the first knot the previous day's last knot still applies
        return float(self._densities[index])


def user_density(p: DiurnalProfile, t_hours: float) -> float:
    """User density per m^2 of a profile at hour ``t_hours``."""
    return p.density_at(t_hours)


def peak_density(p: DiurnalProfile) -> float:
    """Maximum user density per m^2 of a profile over the day."""
    return p.peak()


def in_window(t_hours: float, window: Tuple[float, float]) -> bool:
    """Whether ``t_hours`` lies in [start, end); windows with start > end wrap midnight."""
    start, end = window
    if start <= end:
        return start <= t_hours < end
    return t_hours >= start or t_hours < end


@dataclass(frozen=True)
class ClusterSpec:
    """One VBS-Cluster: its area, RRH deployment and demand profile."""

    id: str
    area_km2: float
    lambda_r: float  # deployed RRHs per m^2
    profile: DiurnalProfile
    peak_window: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        """Validate the cluster after initialization."""
        if not self.id:
            raise ElasticNetDomainError("cluster id must not be empty")
        if not self.area_km2 > 0:
            raise ElasticNetDomainError(f"area_km2 must be positive, got {self.area_km2}")
        if not self.lambda_r > 0:
            raise ElasticNetDomainError(f"lambda_r must be positive, got {self.lambda_r}")
        if self.peak_window is not None:
            start, end = self.peak_window
            if not (0 <= start < HOURS_PER_DAY and 0 <= end <= HOURS_PER_DAY and start != end):
                raise ElasticNetDomainError(f"invalid peak window {self.peak_window}")

    @property
    def area_m2(self) -> float:
        return self.area_km2 * KM2_TO_M2

    def state_at(
        self, t_hours: float, olt_share: float = 1.0, scale_prbs: bool = True
    ) -> ClusterState:
        """
        Cluster snapshot with the user density at ``t_hours``.

        With ``scale_prbs`` the scheduled PRB load follows demand relative to the
        daily peak; otherwise every frame carries the peak load.
        """
        density = self.profile.density_at(t_hours)
        peak = self.profile.peak()
        load = min(1.0, density / peak) if scale_prbs and peak > 0 else 1.0
        return ClusterState(
            lambda_r=self.lambda_r,
            lambda_u=density,
            area_m2=self.area_m2,
            olt_share=olt_share,
            prb_load=load,
        )

    def peak_state(self, olt_share: float = 1.0) -> ClusterState:
        """Cluster snapshot at the daily peak density."""
        return ClusterState(
            lambda_r=self.lambda_r,
            lambda_u=self.profile.peak(),
            area_m2=self.area_m2,
            olt_share=olt_share,
        )


def load_scenario(config_text: str):
    """
    Parse and validate a scenario from INI text.

    Args:
        config_text: Scenario document (see ``defaults/elastic-net-default.ini``)

    Returns:
        Scenario with radio environment, power parameters, constraints, clusters,
        Monte Carlo settings and run options

    Raises:
        ElasticNetConfigError: On syntax errors or invalid values, naming the field
    """
    from src.config.configuration import ConfigManager

    return ConfigManager.from_text(config_text).scenario
