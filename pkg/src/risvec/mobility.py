"""Trajectory discretization: the grid cells a vehicle crosses while uploading."""

from __future__ import annotations

from dataclasses import dataclass

from .scenario import Vehicle


@dataclass(frozen=True)
class GridPath:
    """Cell centers along the travel direction plus the per-cell sojourn time."""

    cells: tuple[tuple[float, float], ...]
    sojourn_time_s: float


def grid_path(vehicle: Vehicle, delta_d: float, max_cells: int) -> GridPath:
    """Cells a vehicle occupies, starting at its current position.

    Cell ``l`` (1-based) is centered ``(l - 1) * delta_d`` along the travel
    direction from the initial position; the lane y is fixed. Cells beyond the
    road end are still generated (straight-line extrapolation) so a requested
    budget is always honored.
    """
    if max_cells < 0:
        raise ValueError("max_cells must be >= 0")
    if delta_d <= 0:
        raise ValueError("delta_d must be strictly positive")
    x0, y0, _ = vehicle.position
    cells = tuple(
        (x0 + vehicle.direction * l * delta_d, y0) for l in range(max_cells)
    )
    return GridPath(cells=cells, sojourn_time_s=delta_d / vehicle.speed_mps)
