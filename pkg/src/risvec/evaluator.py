"""Vectorized per-placement evaluation pipeline.

Placement search evaluates thousands of (altitude, tilt) candidates, each of
which needs a feasibility mask for every instance. This module precomputes
all placement-independent state once (trajectory cells, grid budgets, greedy
server orderings) and evaluates each candidate with array operations over all
vehicles of all instances at once, reusing the scalar channel formulas via
numpy broadcasting. Results are bit-identical to the per-pair reference path
in :mod:`risvec.feasibility` up to floating point summation order.
"""

from __future__ import annotations

import numpy as np

from . import channel, feasibility
from .assignment import max_matching
from .scenario import Instance, Placement, Server, SystemParams, mc_pair_rng

_VECTOR_STATE_BUDGET = 2_000_000  # max floats per enumeration chunk


class PlacementEvaluator:
    """Reusable evaluator of task throughput for one scenario."""

    def __init__(self, instances: list[Instance], servers: list[Server],
                 params: SystemParams, ris_xy: tuple[float, float],
                 master_seed: int = 0):
        self.params = params
        self.ris_xy = (float(ris_xy[0]), float(ris_xy[1]))
        self.num_instances = len(instances)
        self.servers = list(servers)
        self.master_seed = master_seed
        if self.num_instances == 0:
            raise ValueError("evaluator requires at least one instance")

        flat = [(inst, v) for inst in instances for v in inst.vehicles]
        self._vehicles = [v for _, v in flat]
        self._inst_index = np.array([inst.index for inst, _ in flat], dtype=int)
        counts = [len(inst.vehicles) for inst in instances]
        ends = np.cumsum([0] + counts)
        self._slices = [(int(ends[i]), int(ends[i + 1])) for i in range(len(counts))]

        V = len(flat)
        self._x0 = np.array([v.position[0] for v in self._vehicles], dtype=float)
        self._y0 = np.array([v.position[1] for v in self._vehicles], dtype=float)
        self._z = np.array([v.position[2] for v in self._vehicles], dtype=float)
        self._dir = np.array([v.direction for v in self._vehicles], dtype=float)
        self._data_bits = np.array([v.task.data_bits for v in self._vehicles], dtype=float)
        speeds = np.array([v.speed_mps for v in self._vehicles], dtype=float)

        t_comp = np.array([v.task.flops_total for v in self._vehicles], dtype=float)
        t_comp = t_comp / params.flops_per_task
        deadlines = np.array([v.task.deadline_s for v in self._vehicles], dtype=float)
        window = deadlines - t_comp
        self._t_k = params.grid_len_m / speeds if V else np.zeros(0)
        budgets = np.zeros(V, dtype=int)
        if V:
            pos = window > 0
            budgets[pos] = np.floor(window[pos] / self._t_k[pos]).astype(int)
        self._L = budgets
        self._L_max = int(budgets.max()) if V else 0

        # trajectory cells, laid along the travel direction from the start cell
        steps = np.arange(self._L_max, dtype=float)
        self._cell_x = self._x0[:, None] + self._dir[:, None] * params.grid_len_m * steps[None, :]
        self._cell_y = np.broadcast_to(self._y0[:, None], self._cell_x.shape).copy()

        self._sx = np.array([s.position[0] for s in self.servers], dtype=float)
        self._sy = np.array([s.position[1] for s in self.servers], dtype=float)
        self._sz = np.array([s.position[2] for s in self.servers], dtype=float)
        self._caps = [s.capacity for s in self.servers]

        vp = np.stack([self._x0, self._y0, self._z], axis=1) if V else np.zeros((0, 3))
        sp = np.stack([self._sx, self._sy, self._sz], axis=1)
        dist = np.linalg.norm(vp[:, None, :] - sp[None, :, :], axis=2)
        self._greedy_order = np.argsort(dist, axis=1, kind="stable").tolist()

        limit = min(params.enum_limit, 30)
        self._groups = {}
        for length in np.unique(budgets):
            length = int(length)
            if 0 < length <= limit:
                self._groups[length] = np.flatnonzero(budgets == length)
        self._mc_rows = np.flatnonzero(budgets > limit)
        self._bit_cache = {L: feasibility._bit_matrix(L) for L in self._groups}

    # -- feasibility -------------------------------------------------------

    def feasibility(self, altitude_m: float, tilt_rad: float) -> np.ndarray:
        """Boolean V x S pair feasibility at one placement."""
        params = self.params
        placement = Placement(self.ris_xy, altitude_m, tilt_rad)
        V, S = len(self._vehicles), len(self.servers)
        q = np.zeros((V, S), dtype=bool)
        if V == 0 or self._L_max == 0:
            return q

        geom = channel.link_geometry(
            placement,
            (self._cell_x[:, :, None], self._cell_y[:, :, None], self._z[:, None, None]),
            (self._sx[None, None, :], self._sy[None, None, :], self._sz[None, None, :]),
            params.theta_r_denominator,
        )
        p_bar = np.broadcast_to(channel.cascaded_rx_power_los(params, geom),
                                (V, self._L_max, S))

        elev = channel.elevation_angle_deg(placement,
                                           (self._cell_x, self._cell_y, self._z[:, None]))
        p_a = channel.los_probability(elev, params.env_a1, params.env_a2)
        p_a = np.broadcast_to(np.asarray(p_a, dtype=float), (V, self._L_max))
        elev_s = channel.elevation_angle_deg(placement, (self._sx, self._sy, self._sz))
        p_c = np.asarray(channel.los_probability(elev_s, params.env_a1, params.env_a2))

        # uploadable bits per cell for the four joint states, indexed [a, c]
        snr = p_bar / params.noise_power_w
        xi_k, xi_s = params.nlos_atten_vehicle, params.nlos_atten_server
        t_scale = self._t_k[:, None, None] * params.bandwidth_hz
        bits = np.empty((V, self._L_max, S, 2, 2))
        bits[..., 1, 1] = t_scale * np.log2(1.0 + snr)
        bits[..., 1, 0] = t_scale * np.log2(1.0 + xi_s * snr)
        bits[..., 0, 1] = t_scale * np.log2(1.0 + xi_k * snr)
        bits[..., 0, 0] = t_scale * np.log2(1.0 + xi_k * xi_s * snr)

        for L, rows in self._groups.items():
            A = self._bit_cache[L]
            M = A.shape[0]
            chunk = max(1, _VECTOR_STATE_BUDGET // (M * S * 2))
            for lo in range(0, len(rows), chunk):
                idx = rows[lo:lo + chunk]
                b = bits[idx, :L]                       # (n, L, S, 2, 2)
                d_states = (np.einsum("ml,vlsc->vmsc", A, b[:, :, :, 1, :])
                            + np.einsum("ml,vlsc->vmsc", 1.0 - A, b[:, :, :, 0, :]))
                ok = d_states >= self._data_bits[idx, None, None, None]
                pa = p_a[idx, :L]
                log_states = (np.einsum("ml,vl->vm", A, np.log(pa))
                              + np.einsum("ml,vl->vm", 1.0 - A, np.log1p(-pa)))
                prob_a = np.exp(log_states)
                comp = (np.einsum("vm,vms->vs", prob_a, ok[..., 1].astype(float)) * p_c
                        + np.einsum("vm,vms->vs", prob_a, ok[..., 0].astype(float)) * (1.0 - p_c))
                q[idx] = comp >= params.completion_eta

        # budgets beyond the enumeration limit: per-pair Monte Carlo reference path
        for v in self._mc_rows:
            vehicle = self._vehicles[v]
            n = int(self._inst_index[v])
            for s, server in enumerate(self.servers):
                budget = feasibility.link_budget(vehicle, server, placement, params)
                rng = mc_pair_rng(self.master_seed, n, vehicle.id, server.id)
                p = feasibility.completion_probability_mc(
                    budget, vehicle.task.data_bits, params, params.mc_samples, rng)
                q[v, s] = p >= params.completion_eta
        return q

    def masks(self, altitude_m: float, tilt_rad: float) -> list[np.ndarray]:
        """Per-instance feasibility masks (K_n x S int matrices)."""
        q = self.feasibility(altitude_m, tilt_rad)
        return [q[a:b].astype(np.int8) for a, b in self._slices]

    # -- metrics -----------------------------------------------------------

    def throughput(self, altitude_m: float, tilt_rad: float) -> float:
        """Average optimally-assigned task count per instance."""
        q = self.feasibility(altitude_m, tilt_rad)
        rows = q.tolist()
        total = 0
        for a, b in self._slices:
            if a == b:
                continue
            adjacency = [[s for s, f in enumerate(rows[v]) if f] for v in range(a, b)]
            assign = max_matching(adjacency, self._caps)
            total += sum(1 for s in assign if s >= 0)
        return total / self.num_instances

    def greedy_throughput(self, altitude_m: float, tilt_rad: float) -> float:
        """Average task count under the nearest-server greedy assignment."""
        q = self.feasibility(altitude_m, tilt_rad)
        rows = q.tolist()
        total = 0
        for a, b in self._slices:
            load = [0] * len(self.servers)
            for v in range(a, b):
                row = rows[v]
                for s in self._greedy_order[v]:
                    if row[s] and load[s] < self._caps[s]:
                        load[s] += 1
                        total += 1
                        break
        return total / self.num_instances

    def sumrate(self, altitude_m: float, tilt_rad: float) -> float:
        """Average expected uploadable bits summed over all pairs and cells."""
        params = self.params
        placement = Placement(self.ris_xy, altitude_m, tilt_rad)
        V, S = len(self._vehicles), len(self.servers)
        if V == 0 or self._L_max == 0:
            return 0.0

        geom = channel.link_geometry(
            placement,
            (self._cell_x[:, :, None], self._cell_y[:, :, None], self._z[:, None, None]),
            (self._sx[None, None, :], self._sy[None, None, :], self._sz[None, None, :]),
            params.theta_r_denominator,
        )
        p_bar = np.broadcast_to(channel.cascaded_rx_power_los(params, geom),
                                (V, self._L_max, S))
        elev = channel.elevation_angle_deg(placement,
                                           (self._cell_x, self._cell_y, self._z[:, None]))
        p_a = np.broadcast_to(np.asarray(
            channel.los_probability(elev, params.env_a1, params.env_a2), dtype=float),
            (V, self._L_max))
        elev_s = channel.elevation_angle_deg(placement, (self._sx, self._sy, self._sz))
        p_c = np.asarray(channel.los_probability(elev_s, params.env_a1, params.env_a2))

        xi_k, xi_s = params.nlos_atten_vehicle, params.nlos_atten_server
        pa = p_a[:, :, None]
        mean_w = (pa * p_c
                  + xi_k * xi_s * (1.0 - pa) * (1.0 - p_c)
                  + xi_k * (1.0 - pa) * p_c
                  + xi_s * pa * (1.0 - p_c))
        bits = (self._t_k[:, None, None] * params.bandwidth_hz
                * np.log2(1.0 + mean_w * p_bar / params.noise_power_w))
        valid = np.arange(self._L_max)[None, :] < self._L[:, None]
        bits = bits * valid[:, :, None]
        return float(bits.sum() / self.num_instances)
