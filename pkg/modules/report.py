"""CSV and plot-script reports of replayed days, validation runs and sweeps."""

import csv
import logging
import os
from typing import Iterable, List, Optional, Sequence

from src.utils.exceptions import ElasticNetOutputError

from .runner import DaySummary, SweepPoint, TimeSeriesRow, ValidationReport, row_sort_key

logger = logging.getLogger(__name__)

TIMESERIES_HEADER = [
    "time_hours",
    "cluster_id",
    "scheme",
    "lambda_u_per_km2",
    "mu_a",
    "lambda_active_per_km2",
    "tx_power_w",
    "n_cores",
    "area_power_w",
    "vm_power_w",
    "total_power_w",
    "feasible",
]

SUMMARY_HEADER = [
    "cluster_id",
    "scheme",
    "energy_wh",
    "peak_energy_wh",
    "off_peak_energy_wh",
    "peak_mean_w",
    "off_peak_mean_w",
    "infeasible_steps",
    "peak_window",
    "daily_reduction_pct",
    "peak_reduction_pct",
    "off_peak_reduction_pct",
]

VALIDATION_HEADER = [
    "quantity",
    "alpha",
    "gamma",
    "variant",
    "analytic",
    "mc_estimate",
    "ci_half_width",
    "samples",
    "delta",
    "tolerance",
    "gated",
    "status",
]

SWEEP_HEADER = [
    "param",
    "value",
    "elastic_wh",
    "static_wh",
    "reduction_pct",
    "infeasible_steps",
]


def fmt(value) -> str:
    """Render one CSV cell: 6 significant digits for floats, true/false for booleans."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write(path: str, header: Sequence[str], records: Iterable[Sequence]) -> None:
    """Write one CSV file with LF line endings."""
    try:
        with open(path, mode="w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for record in records:
                writer.writerow([fmt(v) for v in record])
    except OSError as e:
        raise ElasticNetOutputError(f"Cannot write report: {e.strerror or e}", path=path) from e


def write_csv(rows: Iterable[TimeSeriesRow], path: str) -> None:
    """
    Write the time series with its fixed header, ordered by (time, cluster, scheme).

    Args:
        rows: Time series rows (any order)
        path: Output file
    """
    ordered = sorted(rows, key=row_sort_key)
    _write(
        path,
        TIMESERIES_HEADER,
        (
            [
                r.time_hours,
                r.cluster_id,
                r.scheme,
                r.lambda_u_per_km2,
                r.mu_a,
                r.lambda_active_per_km2,
                r.tx_power_w,
                r.n_cores,
                r.area_power_w,
                r.vm_power_w,
                r.total_power_w,
                r.feasible,
            ]
            for r in ordered
        ),
    )
    logger.info(f"Wrote {len(ordered)} rows to {path}")


class ReportWriter:
    """Writes every report of a run into one output directory."""

    def __init__(self, output_dir: str = "output"):
        """
        Initialize the report writer.

        Args:
            output_dir: Directory to store report files
        """
        self.output_dir = output_dir
        try:
            os.makedirs(output_dir, exist_ok=True)
        except OSError as e:
            raise ElasticNetOutputError(f"Cannot create output directory: {e}", path=output_dir) from e

        self.timeseries_file = os.path.join(output_dir, "timeseries.csv")
        self.summary_file = os.path.join(output_dir, "summary.csv")
        self.validation_file = os.path.join(output_dir, "validation.csv")
        self.sweep_file = os.path.join(output_dir, "sweep.csv")
        self.gnuplot_file = os.path.join(output_dir, "timeseries.gp")

    def write_timeseries(self, rows: List[TimeSeriesRow]) -> str:
        write_csv(rows, self.timeseries_file)
        return self.timeseries_file

    def write_summary(self, summary: DaySummary) -> str:
        """
        Write per-cluster, per-scheme energies with the elastic reductions.

        Reduction columns are filled on the elastic row of each cluster.
        """
        reductions = {r.cluster_id: r for r in summary.reductions}
        records = []
        for s in summary.schemes:
            reduction = reductions.get(s.cluster_id) if s.scheme == "elastic" else None
            records.append(
                [
                    s.cluster_id,
                    s.scheme,
                    s.energy_wh,
                    s.peak_energy_wh,
                    s.off_peak_energy_wh,
                    s.peak_mean_w,
                    s.off_peak_mean_w,
                    s.infeasible_steps,
                    f"{reduction.peak_window[0]:g}-{reduction.peak_window[1]:g}" if reduction else "",
                    reduction.daily_pct if reduction else None,
                    reduction.peak_pct if reduction else None,
                    reduction.off_peak_pct if reduction else None,
                ]
            )
        _write(self.summary_file, SUMMARY_HEADER, records)
        logger.info(f"Wrote summary to {self.summary_file}")
        return self.summary_file

    def write_validation(self, report: ValidationReport) -> str:
        records = []
        for cell in report.cells:
            if cell.passed:
                status = "pass"
            else:
                status = "fail" if cell.gated else "flagged"
            records.append(
                [
                    cell.quantity,
                    float(cell.alpha),
                    float(cell.gamma),
                    cell.variant,
                    cell.analytic,
                    cell.estimate,
                    cell.half_width,
                    cell.samples,
                    cell.delta,
                    cell.tolerance,
                    cell.gated,
                    status,
                ]
            )
        _write(self.validation_file, VALIDATION_HEADER, records)
        logger.info(f"Wrote {len(records)} validation cells to {self.validation_file}")
        return self.validation_file

    def write_sweep(self, points: List[SweepPoint]) -> str:
        cluster_ids = sorted({cid for p in points for cid in p.cluster_reductions})
        header = SWEEP_HEADER + [f"reduction_pct_{cid}" for cid in cluster_ids]
        records = [
            [p.param, p.value, p.elastic_wh, p.static_wh, p.reduction_pct, p.infeasible_steps]
            + [p.cluster_reductions.get(cid) for cid in cluster_ids]
            for p in points
        ]
        _write(self.sweep_file, header, records)
        logger.info(f"Wrote {len(records)} sweep points to {self.sweep_file}")
        return self.sweep_file

    def write_gnuplot(self, cluster_ids: List[str], schemes: Optional[List[str]] = None) -> str:
        """
        Write a gnuplot script plotting total power per cluster and scheme.

        Args:
            cluster_ids: Clusters to plot
            schemes: Schemes present in the time series
        """
        schemes = schemes or ["elastic", "static"]
        csv_name = os.path.basename(self.timeseries_file)
        plots = []
        for cid in cluster_ids:
            for scheme in schemes:
                plots.append(
                    f"'{csv_name}' using "
                    f"(strcol(2) eq '{cid}' && strcol(3) eq '{scheme}' ? $1 : 1/0):11 "
                    f"with lines title '{cid} {scheme}'"
                )
        lines = [
            "# Total cluster power over the day",
            "set datafile separator ','",
            "set key autotitle columnhead outside",
            "set xlabel 'time (h)'",
            "set ylabel 'total power (W)'",
            "set xrange [0:24]",
            "set xtics 0,2,24",
            "set terminal pngcairo size 1200,700",
            "set output 'timeseries.png'",
            "plot " + ", \\\n     ".join(plots),
            "",
        ]
        try:
            with open(self.gnuplot_file, mode="w", encoding="utf-8", newline="\n") as f:
                f.write("\n".join(lines))
        except OSError as e:
            raise ElasticNetOutputError(f"Cannot write plot script: {e}", path=self.gnuplot_file) from e
        logger.info(f"Wrote plot script to {self.gnuplot_file}")
        return self.gnuplot_file
