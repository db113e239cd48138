"""CSV, JSON and SVG output of the experiments

CSV files are the authoritative results; figures are written next to them. Every file
is written the same way on every run for a given configuration, so reruns with the same
seed are byte-identical.

"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from fiberbell.analyzer import AnalyzerSetting
from fiberbell.bell import ScanResult
from fiberbell.calibration import FitResult
from fiberbell.measurement import CoincidenceRecord
from fiberbell.utils import MM, format_float
from fiberbell.verification import ConfigError

logger = logging.getLogger(__name__)

FRINGE_COLUMNS = ["beta_deg", "alpha_deg", "prob", "counts", "singles_a", "singles_b"]
SCAN_COLUMNS = ["beta1_deg", "beta2_deg", "S", "delta_S", "violated"]
DIP_COLUMNS = ["delta_pp_mm", "delta_smf_mm", "prob", "counts_norm", "theory"]
DISPERSION_COLUMNS = [
    "delay_ps_per_m",
    "length_m",
    "total_delay_ps",
    "coherence_time_ps",
    "gamma",
    "paraxial_ratio",
]
SVG_METADATA = {"Date": None}

matplotlib.rcParams["svg.hashsalt"] = "fiberbell"


def _cell(value: object) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def write_csv(
    path: Path, columns: Sequence[str], rows: Iterable[Sequence[object]]
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    logger.info("Wrote %s", path)
    return path


def fringe_rows(
    beta_deg: float, records: Sequence[CoincidenceRecord]
) -> List[Sequence[object]]:
    rows: List[Sequence[object]] = []
    for record in records:
        assert record.setting_a is not None
        rows.append(
            (
                beta_deg,
                float(np.degrees(record.setting_a.phi)),
                record.expected_rate,
                record.counts,
                record.singles_a,
                record.singles_b,
            )
        )
    return rows


def scan_rows(scan: ScanResult) -> Iterable[Sequence[object]]:
    beta1 = np.degrees(scan.beta1)
    beta2 = np.degrees(scan.beta2)
    for i, j in np.ndindex(scan.s.shape):
        yield beta1[i], beta2[j], scan.s[i, j], scan.delta_s[i, j], scan.violated[i, j]


def write_json(path: Path, content: Mapping[str, object]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(content, indent=2, sort_keys=True) + "\n"
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def write_fit_result(path: Path, result: FitResult) -> Path:
    return write_json(path, result.as_dict())


def read_observations(
    path: Path, setting_a: AnalyzerSetting, setting_b: AnalyzerSetting
) -> List[CoincidenceRecord]:
    """Parse a fringe CSV back into coincidence records

    The plate angles of each row replace the angles of the ``setting_a`` and
    ``setting_b`` templates, which supply beam geometry and offsets.

    """
    records = []
    with path.open(newline="", encoding="utf-8") as csv_file:
        reader = csv.DictReader(csv_file)
        missing = set(FRINGE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            columns = ", ".join(sorted(missing))
            raise ConfigError(f"Observations file {path} lacks the columns {columns}")
        for line, row in enumerate(reader, start=2):
            try:
                alpha = float(np.radians(float(row["alpha_deg"])))
                beta = float(np.radians(float(row["beta_deg"])))
                records.append(
                    CoincidenceRecord(
                        setting_a.rotated(alpha - setting_a.phi),
                        setting_b.rotated(beta - setting_b.phi),
                        float(row["prob"]),
                        int(row["counts"]),
                        int(row["singles_a"]),
                        int(row["singles_b"]),
                    )
                )
            except ValueError as exc:
                raise ConfigError(f"{path}:{line}: {exc}") from exc
    logger.debug("Read %s observations from %s", len(records), path)
    return records


def _save(figure: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata=SVG_METADATA)
    logger.info("Wrote %s", path)
    return path


def plot_fringes(
    path: Path, curves: Mapping[float, Sequence[CoincidenceRecord]]
) -> Path:
    figure = Figure(figsize=(6, 4))
    axes = figure.subplots()
    for beta_deg, records in curves.items():
        rows = fringe_rows(beta_deg, records)
        alphas = [row[1] for row in rows]
        counts = [row[3] for row in rows]
        axes.plot(alphas, counts, "o-", label=f"β = {beta_deg:g}°")
    axes.set_xlabel("α (deg)")
    axes.set_ylabel("coincidences")
    axes.legend()
    return _save(figure, path)


def plot_scan(path: Path, scan: ScanResult, alphas_deg: Sequence[float]) -> Path:
    """Draw the S map in gray levels with the violating pixels in white"""
    figure = Figure(figsize=(5, 4.5))
    axes = figure.subplots()
    beta1, beta2 = np.degrees(scan.beta1), np.degrees(scan.beta2)
    shown = np.where(scan.violated, np.nan, scan.s)
    cmap = matplotlib.colormaps["gray"].copy()
    cmap.set_bad("white")
    image = axes.pcolormesh(
        beta2, beta1, shown, cmap=cmap, vmin=-2.0, vmax=2.0, shading="nearest"
    )
    figure.colorbar(image, ax=axes, label="S")
    axes.set_xlabel("β2 (deg)")
    axes.set_ylabel("β1 (deg)")
    axes.set_title(f"S(α1 = {alphas_deg[0]:g}°, α2 = {alphas_deg[1]:g}°, β1, β2)")
    return _save(figure, path)


def plot_dip(path: Path, curves: Mapping[float, Dict[str, np.ndarray]]) -> Path:
    """Draw the dip curves, keyed by plate offset in meters"""
    figure = Figure(figsize=(6, 4))
    axes = figure.subplots()
    for delta_pp, curve in curves.items():
        positions = curve["delta_smf"] / MM
        label = f"ΔPP = {delta_pp / MM:g} mm"
        (line,) = axes.plot(positions, curve["theory"], label=label)
        axes.plot(positions, curve["counts_norm"], ".", color=line.get_color())
    axes.set_xlabel("ΔSMF,B (mm)")
    axes.set_ylabel("coincidences / singles B")
    axes.legend()
    return _save(figure, path)
