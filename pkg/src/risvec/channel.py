"""Cascaded vehicle-RIS-server channel model.

Pure functions of geometry and placement; every function broadcasts over
numpy arrays so the same formulas serve both scalar use and the vectorized
evaluation pipeline. All powers are linear watts.

Two printed-formula conventions are kept on purpose (see README):

* the receive-side pattern angle normalizes by the vehicle-RIS distance;
  ``SystemParams.theta_r_denominator = "ds"`` selects the dimensionally
  uniform variant instead;
* the rotated azimuth intermediates mix an altitude term into one of the
  y-axis components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Placement, SystemParams

_DIST_FLOOR = 1e-9


@dataclass(frozen=True)
class LinkState:
    """Binary visibility state of the two legs (1 = line of sight)."""

    a_vehicle_ris: int
    c_ris_server: int

    def __post_init__(self):
        if self.a_vehicle_ris not in (0, 1) or self.c_ris_server not in (0, 1):
            raise ValueError("link states must be 0 or 1")


@dataclass(frozen=True)
class LinkGeometry:
    """Distances and pattern angles of one vehicle-RIS-server hop.

    Fields may be scalars or broadcast-compatible arrays.
    """

    d_k: np.ndarray | float       # vehicle-RIS 3-D distance
    d_s: np.ndarray | float       # RIS-server 3-D distance
    theta_t: np.ndarray | float   # transmit elevation from the tilted broadside
    theta_r: np.ndarray | float   # receive elevation from the tilted broadside
    phi_t: np.ndarray | float     # transmit azimuth in the tilted frame
    phi_r: np.ndarray | float     # receive azimuth in the tilted frame
    aux_d1: np.ndarray | float
    aux_d2: np.ndarray | float
    aux_d3: np.ndarray | float
    aux_d4: np.ndarray | float


def elevation_angle_deg(placement: Placement, point) -> np.ndarray | float:
    """Elevation angle (degrees) from a ground point up to the RIS.

    ``point`` is an (x, y, z) triple of scalars or arrays. Raises for a point
    coinciding with the RIS position.
    """
    px, py, pz = point
    dx = placement.ris_xy[0] - np.asarray(px, dtype=float)
    dy = placement.ris_xy[1] - np.asarray(py, dtype=float)
    dz = placement.altitude_m - np.asarray(pz, dtype=float)
    horiz = np.hypot(dx, dy)
    if np.any((horiz < _DIST_FLOOR) & (np.abs(dz) < _DIST_FLOOR)):
        raise ValueError("degenerate geometry: point coincides with the RIS position")
    out = np.degrees(np.arctan(dz / np.maximum(horiz, _DIST_FLOOR)))
    return float(out) if np.ndim(out) == 0 else out


def los_probability(elevation_deg, a1: float, a2: float) -> np.ndarray | float:
    """Line-of-sight probability as a logistic function of the elevation angle."""
    elevation_deg = np.asarray(elevation_deg, dtype=float)
    out = 1.0 / (1.0 + a1 * np.exp(-a2 * (elevation_deg - a1)))
    return float(out) if np.ndim(out) == 0 else out


def radiation_pattern(theta) -> np.ndarray | float:
    """Normalized element power pattern: cos^3 in the front half-space, 0 behind."""
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < -1e-12) | (theta > math.pi + 1e-12)):
        raise ValueError("pattern angle must lie in [0, pi]")
    front = theta <= math.pi / 2
    out = np.where(front, np.cos(np.where(front, theta, 0.0)) ** 3, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def array_factor_ratio(m: int, x) -> np.ndarray | float:
    """Per-axis array factor sin(m*x)/sin(x), bounded by m in magnitude.

    The 0/0 point at specular alignment is replaced by its analytic limit m
    whenever |sin(x) * x| falls below 1e-12.
    """
    x = np.asarray(x, dtype=float)
    den = np.sin(x)
    singular = np.abs(den * x) < 1e-12
    out = np.where(singular, float(m),
                   np.sin(m * x) / np.where(singular, 1.0, den))
    return float(out) if np.ndim(out) == 0 else out


def _clamped_arccos(value) -> np.ndarray:
    return np.arccos(np.clip(value, -1.0, 1.0))


def link_geometry(placement: Placement, vehicle_pos, server_pos,
                  theta_r_denominator: str = "dk") -> LinkGeometry:
    """Distances, pattern angles and rotated-frame azimuths for one hop.

    Positions are (x, y, z) triples of scalars or broadcastable arrays.
    arccos arguments are clamped to [-1, 1] before evaluation; distances are
    floored at 1e-9 m. Raises for positions coinciding with the RIS.
    """
    if theta_r_denominator not in ("dk", "ds"):
        raise ValueError("theta_r_denominator must be 'dk' or 'ds'")
    x_r, y_r = placement.ris_xy
    h_r = placement.altitude_m
    tilt = placement.tilt_rad
    cos_t, sin_t = math.cos(tilt), math.sin(tilt)

    kx = np.asarray(vehicle_pos[0], dtype=float)
    ky = np.asarray(vehicle_pos[1], dtype=float)
    kz = np.asarray(vehicle_pos[2], dtype=float)
    sx = np.asarray(server_pos[0], dtype=float)
    sy = np.asarray(server_pos[1], dtype=float)
    sz = np.asarray(server_pos[2], dtype=float)

    d_k = np.sqrt((x_r - kx) ** 2 + (y_r - ky) ** 2 + (h_r - kz) ** 2)
    d_s = np.sqrt((x_r - sx) ** 2 + (y_r - sy) ** 2 + (h_r - sz) ** 2)
    if np.any(d_k < _DIST_FLOOR) or np.any(d_s < _DIST_FLOOR):
        raise ValueError("degenerate geometry: endpoint coincides with the RIS position")
    d_k = np.maximum(d_k, _DIST_FLOOR)
    d_s = np.maximum(d_s, _DIST_FLOOR)

    theta_t = _clamped_arccos((cos_t * np.abs(y_r - ky) + sin_t * np.abs(h_r - kz)) / d_k)
    r_den = d_k if theta_r_denominator == "dk" else d_s
    theta_r = _clamped_arccos((cos_t * np.abs(y_r - sy) + sin_t * np.abs(h_r - sz)) / r_den)

    aux_d1 = (ky - y_r) - (ky - y_r) * cos_t ** 2 - (kz - h_r) * cos_t * sin_t
    aux_d2 = (kz - h_r) - (ky - h_r) * cos_t * sin_t - (kz - h_r) * sin_t ** 2
    aux_d3 = (sy - y_r) - (sy - y_r) * cos_t ** 2 - (sz - h_r) * cos_t * sin_t
    aux_d4 = (sz - h_r) - (sy - h_r) * cos_t * sin_t - (sz - h_r) * sin_t ** 2

    norm_t = np.sqrt((kx - x_r) ** 2 + aux_d1 ** 2 + aux_d2 ** 2)
    norm_r = np.sqrt((sx - x_r) ** 2 + aux_d3 ** 2 + aux_d4 ** 2)
    phi_t = _clamped_arccos((kx - x_r) / np.maximum(norm_t, _DIST_FLOOR))
    phi_r = _clamped_arccos((sx - x_r) / np.maximum(norm_r, _DIST_FLOOR))

    def _v(a):
        return float(a) if np.ndim(a) == 0 else a

    return LinkGeometry(
        d_k=_v(d_k), d_s=_v(d_s),
        theta_t=_v(theta_t), theta_r=_v(theta_r),
        phi_t=_v(phi_t), phi_r=_v(phi_r),
        aux_d1=_v(aux_d1), aux_d2=_v(aux_d2), aux_d3=_v(aux_d3), aux_d4=_v(aux_d4),
    )


def cascaded_rx_power_los(params: SystemParams, geom: LinkGeometry) -> np.ndarray | float:
    """Received power (W) through the RIS when both legs are line of sight."""
    lam = params.wavelength_m
    pref = (params.tx_power_w * params.antenna_gain_product * params.element_gain
            * params.elements_rows ** 2 * params.elements_cols ** 2
            * params.element_len_m * params.element_wid_m * lam ** 2
            / (64.0 * math.pi ** 3))

    st, sr = np.sin(geom.theta_t), np.sin(geom.theta_r)
    u = st * np.cos(geom.phi_t) + sr * np.cos(geom.phi_r)
    v = st * np.sin(geom.phi_t) + sr * np.sin(geom.phi_r)
    ratio_rows = array_factor_ratio(params.elements_rows,
                                    math.pi * params.element_len_m / lam * u)
    ratio_cols = array_factor_ratio(params.elements_cols,
                                    math.pi * params.element_wid_m / lam * v)

    out = (pref
           * radiation_pattern(geom.theta_t) * radiation_pattern(geom.theta_r)
           * (ratio_rows * ratio_cols) ** 2
           / (np.asarray(geom.d_k, dtype=float) ** params.path_loss_alpha
              * np.asarray(geom.d_s, dtype=float) ** params.path_loss_alpha))
    return float(out) if np.ndim(out) == 0 else out


def state_weight(a, c, xi_k: float, xi_s: float) -> np.ndarray | float:
    """Combined visibility weight applied to the both-LoS received power."""
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    out = (a * c
           + xi_k * xi_s * (1.0 - a) * (1.0 - c)
           + xi_k * (1.0 - a) * c
           + xi_s * a * (1.0 - c))
    return float(out) if np.ndim(out) == 0 else out


def link_rate(rx_power_w, params: SystemParams) -> np.ndarray | float:
    """Shannon rate (bits/s) of a channel with the given received power."""
    rx_power_w = np.asarray(rx_power_w, dtype=float)
    if np.any(rx_power_w < 0):
        raise ValueError("received power must be >= 0")
    out = params.bandwidth_hz * np.log2(1.0 + rx_power_w / params.noise_power_w)
    return float(out) if np.ndim(out) == 0 else out
