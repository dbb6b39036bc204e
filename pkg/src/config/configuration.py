"""Configuration management for the Elastic-Net provisioning simulator."""

import os
from configparser import ConfigParser, Error as ConfigParserError, SectionProxy
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from modules.analytics import KernelVariant, RadioEnv
from modules.geometry import McConfig
from modules.power import PowerParams, RrhPowerParams, TransportPowerParams, VmPowerParams
from modules.provision import Constraints
from modules.traffic import (
    PER_KM2_TO_PER_M2,
    ClusterSpec,
    DiurnalProfile,
    PiecewiseLinearProfile,
    SinusoidProfile,
    TableProfile,
)

from ..utils.exceptions import ElasticNetConfigError, ElasticNetDomainError

CLUSTER_PREFIX = "cluster."
SCHEMES = ("elastic", "static", "both")
PRB_LOADS = ("demand", "peak")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

_DEFAULT_POWER = PowerParams.defaults()

# Allowed keys per section; None marks a required key
SCHEMA: Dict[str, Dict[str, Any]] = {
    "radio": {"alpha": None, "gamma_db": None, "noise_w": None, "bandwidth_hz": None},
    "power.rrh": {
        "active_w": _DEFAULT_POWER.rrh.p_active_circuit,
        "sleep_w": _DEFAULT_POWER.rrh.p_sleep,
        "eta": _DEFAULT_POWER.rrh.amp_efficiency,
    },
    "power.transport": {
        "olt_w": _DEFAULT_POWER.transport.p_olt,
        "onu_active_w": _DEFAULT_POWER.transport.p_onu_active,
        "onu_sleep_w": _DEFAULT_POWER.transport.p_onu_sleep,
    },
    "power.vm": {
        "pmax_w": _DEFAULT_POWER.vm.p_max_per_core,
        "beta": _DEFAULT_POWER.vm.beta_idle,
        "cpu_ghz": _DEFAULT_POWER.vm.cpu_speed,
        "upsilon": _DEFAULT_POWER.vm.msc_constant,
    },
    "constraints": {"epsilon": None, "r_min_bps": None, "deadline_us": None, "n_prb": None},
    "mc": {"trials": 200000, "window_factor": 30.0, "seed": 42, "workers": 1},
    "run": {
        "timestep_minutes": 15,
        "kernel_variant": "reference",
        "scheme": "both",
        "shared_olt": False,
        "peak_window": "8-19",
        "prb_load": "demand",
    },
    "validation": {
        "alphas": "3, 3.5, 4",
        "gammas": "0.1, 1, 10",
        "lambda_per_km2": 10.0,
        "tx_power_w": 1.0,
    },
    "logging": {"level": "INFO"},
}

CLUSTER_KEYS = {
    "area_km2",
    "lambda_r_per_km2",
    "profile",
    "lambda_peak_per_km2",
    "lambda_trough_per_km2",
    "peak_hour",
    "knots",
    "peak_window",
}

REQUIRED_SECTIONS = ("radio", "constraints")


def parse_window(value: str, path: str) -> Tuple[float, float]:
    """Parse an ``S-E`` hour window; ``20-7`` wraps midnight."""
    try:
        start_raw, end_raw = value.split("-")
        start, end = float(start_raw), float(end_raw)
    except ValueError:
        raise ElasticNetConfigError(f"{path} must look like START-END in hours, got {value!r}")
    if not (0 <= start < 24 and 0 <= end <= 24) or start == end:
        raise ElasticNetConfigError(f"{path} must hold two distinct hours in [0, 24], got {value!r}")
    return start, end


@dataclass
class RunOptions:
    """Day replay settings."""

    timestep_minutes: int = 15
    kernel_variant: KernelVariant = KernelVariant.REFERENCE
    scheme: str = "both"
    shared_olt: bool = False
    peak_window: Tuple[float, float] = (8.0, 19.0)
    prb_load: str = "demand"

    def __post_init__(self):
        """Validate configuration after initialization."""
        if self.timestep_minutes <= 0 or 1440 % self.timestep_minutes:
            raise ElasticNetConfigError(
                f"run.timestep_minutes must divide 1440, got {self.timestep_minutes}"
            )
        if self.scheme not in SCHEMES:
            raise ElasticNetConfigError(
                f"run.scheme must be one of {', '.join(SCHEMES)}, got {self.scheme!r}"
            )
        if self.prb_load not in PRB_LOADS:
            raise ElasticNetConfigError(
                f"run.prb_load must be one of {', '.join(PRB_LOADS)}, got {self.prb_load!r}"
            )


@dataclass
class ValidationOptions:
    """Monte Carlo validation grid."""

    alphas: List[float] = field(default_factory=lambda: [3.0, 3.5, 4.0])
    gammas: List[float] = field(default_factory=lambda: [0.1, 1.0, 10.0])
    lambda_per_km2: float = 10.0
    tx_power_w: float = 1.0

    def __post_init__(self):
        """Validate configuration after initialization."""
        if not self.alphas or any(a <= 2 for a in self.alphas):
            raise ElasticNetConfigError(f"validation.alphas must all exceed 2, got {self.alphas}")
        if not self.gammas or any(g <= 0 for g in self.gammas):
            raise ElasticNetConfigError(f"validation.gammas must all be positive, got {self.gammas}")
        if self.lambda_per_km2 <= 0:
            raise ElasticNetConfigError(
                f"validation.lambda_per_km2 must be positive, got {self.lambda_per_km2}"
            )
        if self.tx_power_w <= 0:
            raise ElasticNetConfigError(
                f"validation.tx_power_w must be positive, got {self.tx_power_w}"
            )

    @property
    def lambda_per_m2(self) -> float:
        return self.lambda_per_km2 * PER_KM2_TO_PER_M2


@dataclass
class Scenario:
    """Fully validated scenario."""

    env: RadioEnv
    power: PowerParams
    constraints: Constraints
    clusters: List[ClusterSpec]
    mc: McConfig
    run: RunOptions
    validation: ValidationOptions
    log_level: str = "INFO"
    source: str = "<text>"

    @property
    def olt_share(self) -> float:
        """Fraction of the OLT charged to each cluster."""
        return 1.0 / len(self.clusters) if self.run.shared_olt else 1.0


class ConfigManager:
    """Configuration manager for scenario files."""

    def __init__(
        self,
        config_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
        text: Optional[str] = None,
    ):
        """
        Initialize configuration manager.

        Args:
            config_path: Path to the scenario INI file
            overrides: Values replacing file entries, keyed ``section.key``
            text: Scenario document used instead of a file
        """
        self.config_path = config_path or "<text>"
        self.config = ConfigParser(interpolation=None)
        self._load_config(config_path, text)
        self._apply_overrides(overrides or {})
        self._validate_sections()

    @classmethod
    def from_text(cls, text: str, overrides: Optional[Dict[str, Any]] = None) -> "ConfigManager":
        """Load a scenario from an INI string."""
        return cls(overrides=overrides, text=text)

    def _load_config(self, config_path: Optional[str], text: Optional[str]) -> None:
        """Load the INI document, keeping configparser's line diagnostics."""
        try:
            if text is not None:
                self.config.read_string(text, source=self.config_path)
            else:
                if not config_path or not os.path.exists(config_path):
                    raise ElasticNetConfigError(f"Config file not found: {config_path}")
                with open(config_path, encoding="utf-8") as f:
                    self.config.read_file(f, source=config_path)
        except ConfigParserError as e:
            raise ElasticNetConfigError(f"Cannot parse {self.config_path}: {e}") from e

    def _apply_overrides(self, overrides: Dict[str, Any]) -> None:
        for dotted, value in overrides.items():
            section, _, key = dotted.rpartition(".")
            if not section or not key:
                raise ElasticNetConfigError(f"override key must be section.key, got {dotted!r}")
            if not self.config.has_section(section):
                self.config.add_section(section)
            self.config.set(section, key, str(value))

    def _validate_sections(self) -> None:
        """Reject DEFAULT keys, unknown sections, unknown keys and missing required ones."""
        if self.config.defaults():
            keys = ", ".join(sorted(self.config.defaults()))
            raise ElasticNetConfigError(f"DEFAULT section is not supported (keys: {keys})")

        for name in self.config.sections():
            if name.startswith(CLUSTER_PREFIX):
                allowed = CLUSTER_KEYS
            elif name in SCHEMA:
                allowed = set(SCHEMA[name])
            else:
                raise ElasticNetConfigError(f"Unknown config section: [{name}]")
            unknown = set(self.config[name]) - allowed
            if unknown:
                raise ElasticNetConfigError(
                    f"Unknown key(s) in [{name}]: {', '.join(sorted(unknown))}"
                )

        missing = [s for s in REQUIRED_SECTIONS if s not in self.config]
        if missing:
            raise ElasticNetConfigError(f"Missing required config sections: {', '.join(missing)}")
        if not self.cluster_ids:
            raise ElasticNetConfigError("At least one [cluster.<id>] section is required")

    def _raw(self, section: str, key: str) -> str:
        if section in self.config and key in self.config[section]:
            return self.config[section][key].strip()
        default = SCHEMA.get(section, {}).get(key)
        if default is None:
            raise ElasticNetConfigError(f"{section}.{key} is required")
        return str(default)

    def _get_float(self, section: str, key: str, check: Optional[Callable[[float], bool]] = None,
                   rule: str = "") -> float:
        raw = self._raw(section, key)
        try:
            value = float(raw)
        except ValueError:
            raise ElasticNetConfigError(f"{section}.{key} must be a number, got {raw!r}")
        if check is not None and not check(value):
            raise ElasticNetConfigError(f"{section}.{key} must be {rule}, got {value}")
        return value

    def _get_int(self, section: str, key: str, minimum: int = 0) -> int:
        raw = self._raw(section, key)
        try:
            value = int(raw)
        except ValueError:
            raise ElasticNetConfigError(f"{section}.{key} must be an integer, got {raw!r}")
        if value < minimum:
            raise ElasticNetConfigError(f"{section}.{key} must be at least {minimum}, got {value}")
        return value

    def _get_bool(self, section: str, key: str) -> bool:
        raw = self._raw(section, key).lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ElasticNetConfigError(f"{section}.{key} must be a boolean, got {raw!r}")

    def _get_list(self, section: str, key: str) -> List[float]:
        raw = self._raw(section, key)
        try:
            return [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise ElasticNetConfigError(
                f"{section}.{key} must be a comma separated list of numbers, got {raw!r}"
            )

    @staticmethod
    def _build(path: str, factory: Callable[..., Any], **kwargs) -> Any:
        """Construct a domain object, attributing its validation errors to ``path``."""
        try:
            return factory(**kwargs)
        except ElasticNetDomainError as e:
            raise ElasticNetConfigError(f"{path}: {e}") from e

    @property
    def cluster_ids(self) -> List[str]:
        """Cluster ids in file order."""
        return [s[len(CLUSTER_PREFIX):] for s in self.config.sections() if s.startswith(CLUSTER_PREFIX)]

    @property
    def radio(self) -> RadioEnv:
        """Get validated radio environment."""
        alpha = self._get_float("radio", "alpha", lambda v: v > 2, "greater than 2")
        gamma_db = self._get_float("radio", "gamma_db")
        noise = self._get_float("radio", "noise_w", lambda v: v >= 0, "non-negative")
        bandwidth = self._get_float("radio", "bandwidth_hz", lambda v: v > 0, "positive")
        return self._build(
            "radio", RadioEnv.from_db, alpha=alpha, gamma_db=gamma_db, sigma2=noise, bandwidth=bandwidth
        )

    @property
    def power(self) -> PowerParams:
        """Get validated power model constants (reference values for missing keys)."""
        non_negative = (lambda v: v >= 0, "non-negative")
        rrh = self._build(
            "power.rrh",
            RrhPowerParams,
            p_active_circuit=self._get_float("power.rrh", "active_w", *non_negative),
            p_sleep=self._get_float("power.rrh", "sleep_w", *non_negative),
            amp_efficiency=self._get_float("power.rrh", "eta", lambda v: 0 < v <= 1, "in (0, 1]"),
        )
        transport = self._build(
            "power.transport",
            TransportPowerParams,
            p_olt=self._get_float("power.transport", "olt_w", *non_negative),
            p_onu_active=self._get_float("power.transport", "onu_active_w", *non_negative),
            p_onu_sleep=self._get_float("power.transport", "onu_sleep_w", *non_negative),
        )
        vm = self._build(
            "power.vm",
            VmPowerParams,
            p_max_per_core=self._get_float("power.vm", "pmax_w", lambda v: v > 0, "positive"),
            beta_idle=self._get_float("power.vm", "beta", lambda v: 0 <= v <= 1, "in [0, 1]"),
            cpu_speed=self._get_float("power.vm", "cpu_ghz", lambda v: v > 0, "positive"),
            msc_constant=self._get_float("power.vm", "upsilon", lambda v: v > 0, "positive"),
        )
        return PowerParams(rrh=rrh, transport=transport, vm=vm)

    @property
    def constraints(self) -> Constraints:
        """Get validated service constraints."""
        return self._build(
            "constraints",
            Constraints,
            epsilon=self._get_float("constraints", "epsilon", lambda v: 0 < v < 1, "in (0, 1)"),
            r_min=self._get_float("constraints", "r_min_bps", lambda v: v > 0, "positive"),
            deadline_us=self._get_float("constraints", "deadline_us", lambda v: v > 0, "positive"),
            n_prb=self._get_int("constraints", "n_prb", minimum=1),
        )

    @property
    def mc(self) -> McConfig:
        """Get validated Monte Carlo settings (seed defaults to 42)."""
        return self._build(
            "mc",
            McConfig,
            trials=self._get_int("mc", "trials", minimum=1),
            window_radius_factor=self._get_float(
                "mc", "window_factor", lambda v: v >= 10, "at least 10"
            ),
            seed=self._get_int("mc", "seed", minimum=0),
            workers=self._get_int("mc", "workers", minimum=1),
        )

    @property
    def run(self) -> RunOptions:
        """Get validated run options."""
        try:
            variant = KernelVariant.parse(self._raw("run", "kernel_variant"))
        except ElasticNetDomainError as e:
            raise ElasticNetConfigError(f"run.kernel_variant: {e}") from e
        return RunOptions(
            timestep_minutes=self._get_int("run", "timestep_minutes", minimum=1),
            kernel_variant=variant,
            scheme=self._raw("run", "scheme").lower(),
            shared_olt=self._get_bool("run", "shared_olt"),
            peak_window=parse_window(self._raw("run", "peak_window"), "run.peak_window"),
            prb_load=self._raw("run", "prb_load").lower(),
        )

    @property
    def validation(self) -> ValidationOptions:
        """Get validated Monte Carlo validation grid."""
        return ValidationOptions(
            alphas=self._get_list("validation", "alphas"),
            gammas=self._get_list("validation", "gammas"),
            lambda_per_km2=self._get_float("validation", "lambda_per_km2"),
            tx_power_w=self._get_float("validation", "tx_power_w"),
        )

    @property
    def log_level(self) -> str:
        level = self._raw("logging", "level").upper()
        if level not in LOG_LEVELS:
            raise ElasticNetConfigError(
                f"logging.level must be one of {', '.join(LOG_LEVELS)}, got {level!r}"
            )
        return level

    def _parse_knots(self, section: SectionProxy, path: str) -> List[Tuple[float, float]]:
        """
        Parse ``hour:density_per_km2`` knots.

        Format: 0:300; 6:500; 13.5:2200
        """
        raw = section.get("knots", "").strip()
        if not raw:
            raise ElasticNetConfigError(f"{path}.knots is required for this profile")
        knots = []
        for spec in raw.split(";"):
            spec = spec.strip()
            if not spec:
                continue
            try:
                hour, density = (float(p) for p in spec.split(":"))
            except ValueError:
                raise ElasticNetConfigError(
                    f"{path}.knots entry must be hour:density_per_km2, got {spec!r}"
                )
            if density < 0:
                raise ElasticNetConfigError(
                    f"{path}.knots density must be non-negative, got {density}"
                )
            knots.append((hour, density * PER_KM2_TO_PER_M2))
        return knots

    def _profile(self, cluster_id: str) -> DiurnalProfile:
        name = f"{CLUSTER_PREFIX}{cluster_id}"
        section = self.config[name]
        kind = section.get("profile", "").strip().lower()

        if kind == "sinusoid":
            non_negative = (lambda v: v >= 0, "non-negative")
            return self._build(
                name,
                SinusoidProfile,
                lambda_peak=self._cluster_float(name, "lambda_peak_per_km2", *non_negative)
                * PER_KM2_TO_PER_M2,
                lambda_trough=self._cluster_float(name, "lambda_trough_per_km2", *non_negative)
                * PER_KM2_TO_PER_M2,
                peak_hour=self._cluster_float(name, "peak_hour", lambda v: 0 <= v < 24, "in [0, 24)"),
            )
        if kind == "piecewise_linear":
            return self._build(name, PiecewiseLinearProfile, knots=self._parse_knots(section, name))
        if kind == "table":
            return self._build(name, TableProfile, knots=self._parse_knots(section, name))
        raise ElasticNetConfigError(
            f"{name}.profile must be sinusoid, piecewise_linear or table, got {kind!r}"
        )

    def _cluster_float(self, name: str, key: str, check=None, rule: str = "") -> float:
        if key not in self.config[name]:
            raise ElasticNetConfigError(f"{name}.{key} is required")
        raw = self.config[name][key].strip()
        try:
            value = float(raw)
        except ValueError:
            raise ElasticNetConfigError(f"{name}.{key} must be a number, got {raw!r}")
        if check is not None and not check(value):
            raise ElasticNetConfigError(f"{name}.{key} must be {rule}, got {value}")
        return value

    @property
    def clusters(self) -> List[ClusterSpec]:
        """Get validated clusters in file order."""
        clusters = []
        for cluster_id in self.cluster_ids:
            name = f"{CLUSTER_PREFIX}{cluster_id}"
            window_raw = self.config[name].get("peak_window", "").strip()
            clusters.append(
                self._build(
                    name,
                    ClusterSpec,
                    id=cluster_id,
                    area_km2=self._cluster_float(name, "area_km2", lambda v: v > 0, "positive"),
                    lambda_r=self._cluster_float(
                        name, "lambda_r_per_km2", lambda v: v > 0, "positive"
                    )
                    * PER_KM2_TO_PER_M2,
                    profile=self._profile(cluster_id),
                    peak_window=parse_window(window_raw, f"{name}.peak_window") if window_raw else None,
                )
            )
        return clusters

    @property
    def scenario(self) -> Scenario:
        """Get the fully validated scenario."""
        return Scenario(
            env=self.radio,
            power=self.power,
            constraints=self.constraints,
            clusters=self.clusters,
            mc=self.mc,
            run=self.run,
            validation=self.validation,
            log_level=self.log_level,
            source=self.config_path,
        )
