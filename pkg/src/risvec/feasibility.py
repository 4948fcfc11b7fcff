"""Latency budgets and the probabilistic task-completion indicator.

The uploadable data of a pair is a random variable over the joint visibility
states of the two hops: one Bernoulli draw per trajectory cell on the vehicle
side, one draw per transmission on the server side. Completion probabilities
are computed by exact enumeration of all joint states while the grid budget
stays at or below ``SystemParams.enum_limit``, and by seeded Monte Carlo
beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .mobility import grid_path
from .scenario import Instance, Placement, Server, SystemParams, TaskSpec, Vehicle, mc_pair_rng


@dataclass(frozen=True)
class LinkBudget:
    """Everything needed to evaluate the upload success of one (vehicle, server) pair."""

    compute_latency_s: float
    max_comm_time_s: float
    grid_budget: int
    sojourn_time_s: float
    per_grid_los_power_w: tuple[float, ...]   # both-LoS received power per cell
    per_grid_los_prob: tuple[float, ...]      # vehicle-side LoS probability per cell
    server_los_prob: float

    def __post_init__(self):
        if self.grid_budget < 0:
            raise ValueError("grid budget must be >= 0")
        if (len(self.per_grid_los_power_w) != self.grid_budget
                or len(self.per_grid_los_prob) != self.grid_budget):
            raise ValueError("per-grid lists must have exactly grid_budget entries")


def compute_latency(task: TaskSpec, flops_f: float) -> float:
    """Server-side execution time of a task."""
    if flops_f <= 0:
        raise ValueError("flops_f must be strictly positive")
    return task.flops_total / flops_f


def grid_budget(task: TaskSpec, vehicle: Vehicle, params: SystemParams) -> int:
    """Number of whole grid cells available for uploading before the deadline."""
    window = task.deadline_s - compute_latency(task, params.flops_per_task)
    if window <= 0:
        return 0
    sojourn = params.grid_len_m / vehicle.speed_mps
    return int(np.floor(window / sojourn))


def link_budget(vehicle: Vehicle, server: Server, placement: Placement,
                params: SystemParams) -> LinkBudget:
    """Assemble the per-pair budget: latencies, cells, powers and LoS probabilities."""
    t_comp = compute_latency(vehicle.task, params.flops_per_task)
    budget_cells = grid_budget(vehicle.task, vehicle, params)
    path = grid_path(vehicle, params.grid_len_m, budget_cells)
    z_k = vehicle.position[2]

    powers = []
    probs = []
    for cx, cy in path.cells:
        geom = channel.link_geometry(placement, (cx, cy, z_k), server.position,
                                     params.theta_r_denominator)
        powers.append(channel.cascaded_rx_power_los(params, geom))
        elev = channel.elevation_angle_deg(placement, (cx, cy, z_k))
        probs.append(channel.los_probability(elev, params.env_a1, params.env_a2))

    server_elev = channel.elevation_angle_deg(placement, server.position)
    p_c = channel.los_probability(server_elev, params.env_a1, params.env_a2)

    return LinkBudget(
        compute_latency_s=t_comp,
        max_comm_time_s=max(vehicle.task.deadline_s - t_comp, 0.0),
        grid_budget=budget_cells,
        sojourn_time_s=path.sojourn_time_s,
        per_grid_los_power_w=tuple(powers),
        per_grid_los_prob=tuple(probs),
        server_los_prob=float(p_c),
    )


def uploadable_data(state_c: int, states_a, budget: LinkBudget,
                    params: SystemParams) -> float:
    """Bits uploadable across the budgeted cells under a given joint state."""
    states_a = np.asarray(states_a, dtype=float)
    if states_a.shape != (budget.grid_budget,):
        raise ValueError("states_a length must equal the grid budget")
    if budget.grid_budget == 0:
        return 0.0
    omega = channel.state_weight(states_a, float(state_c),
                                 params.nlos_atten_vehicle, params.nlos_atten_server)
    power = omega * np.asarray(budget.per_grid_los_power_w)
    rates = channel.link_rate(power, params)
    return float(budget.sojourn_time_s * np.sum(rates))


def _bit_matrix(length: int) -> np.ndarray:
    """All binary vectors of the given length, one per row (float matrix)."""
    if length == 0:
        return np.zeros((1, 0))
    codes = np.arange(2 ** length)[:, None]
    return ((codes >> np.arange(length)[None, :]) & 1).astype(float)


def _state_bits(budget: LinkBudget, params: SystemParams) -> np.ndarray:
    """Uploadable bits for every joint state: shape (2^L, 2) indexed by (a-code, c)."""
    L = budget.grid_budget
    p_bar = np.asarray(budget.per_grid_los_power_w)
    A = _bit_matrix(L)
    out = np.zeros((A.shape[0], 2))
    for c in (0, 1):
        omega = channel.state_weight(A, float(c),
                                     params.nlos_atten_vehicle, params.nlos_atten_server)
        rates = channel.link_rate(omega * p_bar[None, :], params)
        out[:, c] = budget.sojourn_time_s * np.sum(rates, axis=1)
    return out


def completion_probability_exact(budget: LinkBudget, data_bits: float,
                                 params: SystemParams) -> float:
    """Exact P[uploadable >= data_bits] over all 2^(L+1) joint states."""
    L = budget.grid_budget
    if L > params.enum_limit:
        raise ValueError(
            f"grid budget {L} exceeds enum_limit {params.enum_limit}; "
            "use the Monte Carlo estimator")
    if L == 0:
        return 1.0 if data_bits <= 0 else 0.0

    A = _bit_matrix(L)
    p_a = np.asarray(budget.per_grid_los_prob)
    prob_a = np.exp(A @ np.log(p_a) + (1.0 - A) @ np.log1p(-p_a))
    bits = _state_bits(budget, params)
    ok = bits >= data_bits
    p_c = budget.server_los_prob
    return float(prob_a @ (p_c * ok[:, 1] + (1.0 - p_c) * ok[:, 0]))


def completion_probability_mc(budget: LinkBudget, data_bits: float,
                              params: SystemParams, samples: int,
                              rng: np.random.Generator) -> float:
    """Unbiased Monte Carlo estimate of the completion probability."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    L = budget.grid_budget
    if L == 0:
        return 1.0 if data_bits <= 0 else 0.0
    draws = rng.random((samples, L + 1))
    a = (draws[:, :L] < np.asarray(budget.per_grid_los_prob)[None, :]).astype(float)
    c = (draws[:, L] < budget.server_los_prob).astype(float)
    omega = channel.state_weight(a, c[:, None],
                                 params.nlos_atten_vehicle, params.nlos_atten_server)
    rates = channel.link_rate(omega * np.asarray(budget.per_grid_los_power_w)[None, :], params)
    bits = budget.sojourn_time_s * np.sum(rates, axis=1)
    return float(np.mean(bits >= data_bits))


def feasibility_mask(instance: Instance, servers: list[Server], placement: Placement,
                     params: SystemParams, master_seed: int = 0) -> np.ndarray:
    """Binary K x S matrix: pair (k, s) is usable iff its completion probability
    meets the threshold. Exact enumeration when the grid budget allows, seeded
    Monte Carlo otherwise."""
    K = len(instance.vehicles)
    S = len(servers)
    mask = np.zeros((K, S), dtype=np.int8)
    for k, vehicle in enumerate(instance.vehicles):
        for s, server in enumerate(servers):
            budget = link_budget(vehicle, server, placement, params)
            if budget.grid_budget <= params.enum_limit:
                p = completion_probability_exact(budget, vehicle.task.data_bits, params)
            else:
                rng = mc_pair_rng(master_seed, instance.index, vehicle.id, server.id)
                p = completion_probability_mc(budget, vehicle.task.data_bits, params,
                                              params.mc_samples, rng)
            mask[k, s] = 1 if p >= params.completion_eta else 0
    return mask
