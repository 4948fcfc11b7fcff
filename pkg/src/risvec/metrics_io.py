"""Experiment records, CSV serialization and run summaries.

Output files are plain CSV with a decimal point regardless of locale; values
carry 6 significant digits. Plotting is left to external tools.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

SCHEMES = ("OP", "HC", "GAP", "GOP", "SUMRATE")


@dataclass(frozen=True)
class SurfacePoint:
    altitude_m: float
    tilt_deg: float
    avg_throughput: float


@dataclass(frozen=True)
class ExperimentRecord:
    scheme: str
    param: str
    value: float
    avg_throughput: float
    altitude_m: float
    tilt_deg: float
    wall_time_s: float
    seed: int

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def write_surface(points: list[SurfacePoint], path: str) -> None:
    """Write surface points in altitude-major scan order."""
    if not points:
        raise ValueError("surface must contain at least one point")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h_m", "theta_deg", "avg_throughput"])
        for p in points:
            writer.writerow([_fmt(p.altitude_m), _fmt(p.tilt_deg), _fmt(p.avg_throughput)])


def read_surface(path: str) -> list[SurfacePoint]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(SurfacePoint(float(row["h_m"]), float(row["theta_deg"]),
                                    float(row["avg_throughput"])))
    return out


def write_records(records: list[ExperimentRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "param", "value", "throughput",
                         "h_m", "theta_deg", "wall_s", "seed"])
        for r in records:
            writer.writerow([r.scheme, r.param, _fmt(r.value), _fmt(r.avg_throughput),
                             _fmt(r.altitude_m), _fmt(r.tilt_deg), _fmt(r.wall_time_s),
                             r.seed])


def read_records(path: str) -> list[ExperimentRecord]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(ExperimentRecord(
                scheme=row["scheme"], param=row["param"], value=float(row["value"]),
                avg_throughput=float(row["throughput"]), altitude_m=float(row["h_m"]),
                tilt_deg=float(row["theta_deg"]), wall_time_s=float(row["wall_s"]),
                seed=int(row["seed"])))
    return out


def write_run_summary(path: str, config_hash: str, seed: int,
                      lines: list[str]) -> None:
    """Structured-text run summary: config hash, seed, then per-scheme lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"config_hash: {config_hash}\n")
        fh.write(f"seed: {seed}\n")
        for line in lines:
            fh.write(line.rstrip("\n") + "\n")
