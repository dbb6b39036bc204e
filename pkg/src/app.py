"""Main application module for the Elastic-Net provisioning simulator."""

import argparse
import os
import sys
from typing import List, Optional

from modules.analytics import KernelVariant
from modules.report import ReportWriter
from modules.runner import expand_scheme, run_day, summarize_scenario, sweep, validate

from .config import ConfigManager
from .utils import (
    ElasticNetConfigError,
    ElasticNetDomainError,
    ElasticNetError,
    ElasticNetOutputError,
    setup_logging,
)

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG = os.path.join(PROJECT_ROOT, "conf", "elastic-net.ini")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_VALIDATION = 4


class ElasticNetApp:
    """Main application class: loads a scenario and runs one command on it."""

    def __init__(self, config_path: str, log_dir: Optional[str] = None, console: bool = True):
        """
        Initialize the application.

        Args:
            config_path: Path to the scenario INI file
            log_dir: Directory for the rotating log file
            console: Whether to also log to stderr
        """
        self.config_path = config_path
        self.logger = setup_logging(
            log_dir=log_dir or os.path.join(PROJECT_ROOT, "logs"),
            log_file="elastic-net.log",
            add_console_handler=console,
            additional_fields={"app": "elastic-net"},
            config_path=config_path,
        )

        try:
            self.config = ConfigManager(config_path)
            self.scenario = self.config.scenario
        except ElasticNetError as e:
            self.logger.error(f"Failed to load scenario: {e}")
            raise

        s = self.scenario
        self.logger.info(
            f"Loaded {config_path}: {len(s.clusters)} cluster(s) "
            f"[{', '.join(c.id for c in s.clusters)}], alpha={s.env.alpha:g}, "
            f"gamma={s.env.gamma:.4g}, noise={s.env.sigma2:g} W, epsilon={s.constraints.epsilon:g}, "
            f"kernel={s.run.kernel_variant.value}"
        )

    def run(
        self,
        out_dir: str,
        scheme: Optional[str] = None,
        timestep_minutes: Optional[int] = None,
        kernel: Optional[str] = None,
        emit_gnuplot: bool = False,
    ) -> int:
        """
        Replay the day and write the time series and summary.

        Returns:
            EXIT_OK, or EXIT_INFEASIBLE when any timestep was infeasible
        """
        scheme = scheme or self.scenario.run.scheme
        variant = KernelVariant.parse(kernel) if kernel else None
        rows = run_day(self.scenario, scheme, timestep_minutes, variant)
        summary = summarize_scenario(self.scenario, rows)

        writer = ReportWriter(out_dir)
        writer.write_timeseries(rows)
        writer.write_summary(summary)
        if emit_gnuplot:
            writer.write_gnuplot([c.id for c in self.scenario.clusters], expand_scheme(scheme))

        for r in summary.reductions:
            self.logger.info(
                f"{r.cluster_id}: daily {_pct(r.daily_pct)}, peak window {_pct(r.peak_pct)}, "
                f"off-peak {_pct(r.off_peak_pct)} below static"
            )
        if summary.reductions:
            self.logger.info(f"Network daily energy reduction: {_pct(summary.network_reduction_pct)}")

        infeasible = sum(1 for row in rows if not row.feasible)
        if infeasible:
            self.logger.warning(f"{infeasible} of {len(rows)} rows are infeasible")
            return EXIT_INFEASIBLE
        return EXIT_OK

    def validate(self, out_dir: str, trials: Optional[int] = None, seed: Optional[int] = None) -> int:
        """
        Run the Monte Carlo validation and write ``validation.csv``.

        Returns:
            EXIT_OK, or EXIT_VALIDATION when a gated cell is outside tolerance
        """
        report = validate(self.scenario, trials=trials, seed=seed)
        ReportWriter(out_dir).write_validation(report)
        for cell in report.flagged:
            self.logger.info(
                f"Flagged ({cell.quantity}, {cell.variant or '-'}) at alpha={cell.alpha:g}, "
                f"gamma={cell.gamma:g}: delta {cell.delta:.4f}"
            )
        if report.failures:
            for cell in report.failures:
                self.logger.error(
                    f"Validation failed at alpha={cell.alpha:g}, gamma={cell.gamma:g}: "
                    f"analytic {cell.analytic:.4f} vs MC {cell.estimate:.4f} "
                    f"(delta {cell.delta:.4f} > {cell.tolerance:.4f})"
                )
            return EXIT_VALIDATION
        return EXIT_OK

    def sweep(self, out_dir: str, param: str, start: float, stop: float, steps: int) -> int:
        """Replay the day across a parameter range and write ``sweep.csv``."""
        points = sweep(param, start, stop, steps, config_path=self.config_path)
        ReportWriter(out_dir).write_sweep(points)
        if any(p.infeasible_steps for p in points):
            return EXIT_INFEASIBLE
        return EXIT_OK


def _pct(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.1f}%"


def build_parser() -> argparse.ArgumentParser:
    """Command-line interface with the run, validate and sweep subcommands."""
    parser = argparse.ArgumentParser(
        prog="elastic-net", description="Elastic-Net C-RAN provisioning simulator"
    )
    parser.add_argument("--log-dir", default=None, help="Directory for the log file")
    parser.add_argument("--quiet", action="store_true", help="Do not log to the console")

    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--config",
            default=None,
            help="Scenario INI file (default: $ELASTIC_NET_CONFIG or conf/elastic-net.ini)",
        )
        p.add_argument("--out", default="output", help="Output directory (default: output)")

    run_p = sub.add_parser("run", help="Replay one day under Elastic-Net and the static baseline")
    add_common(run_p)
    run_p.add_argument("--scheme", choices=["elastic", "static", "both"], default=None)
    run_p.add_argument("--timestep-min", type=int, default=None, help="Step in minutes dividing 1440")
    run_p.add_argument("--kernel", choices=[v.value for v in KernelVariant], default=None)
    run_p.add_argument("--emit-gnuplot", action="store_true", help="Also write timeseries.gp")

    val_p = sub.add_parser("validate", help="Compare closed forms with Monte Carlo")
    add_common(val_p)
    val_p.add_argument("--trials", type=int, default=None)
    val_p.add_argument("--seed", type=int, default=None)

    sweep_p = sub.add_parser("sweep", help="Replay the day across a range of one parameter")
    add_common(sweep_p)
    sweep_p.add_argument("--param", required=True, help="Dotted key, e.g. constraints.r_min_bps")
    sweep_p.add_argument("--from", dest="start", type=float, required=True)
    sweep_p.add_argument("--to", dest="stop", type=float, required=True)
    sweep_p.add_argument("--steps", type=int, default=5)

    return parser


def resolve_config_path(cli_value: Optional[str]) -> str:
    """--config, then $ELASTIC_NET_CONFIG, then the shipped scenario."""
    return cli_value or os.getenv("ELASTIC_NET_CONFIG") or DEFAULT_CONFIG


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)
    config_path = resolve_config_path(args.config)

    try:
        app = ElasticNetApp(config_path, log_dir=args.log_dir, console=not args.quiet)
        if args.command == "run":
            return app.run(
                args.out,
                scheme=args.scheme,
                timestep_minutes=args.timestep_min,
                kernel=args.kernel,
                emit_gnuplot=args.emit_gnuplot,
            )
        if args.command == "validate":
            if args.trials is not None and args.trials < 1:
                raise ElasticNetConfigError(f"--trials must be at least 1, got {args.trials}")
            return app.validate(args.out, trials=args.trials, seed=args.seed)
        return app.sweep(args.out, args.param, args.start, args.stop, args.steps)

    except (ElasticNetConfigError, ElasticNetDomainError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ElasticNetOutputError as e:
        print(f"Output error: {e}", file=sys.stderr)
        return EXIT_IO
    except ElasticNetError as e:
        print(f"Application failed: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"Application failed: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
