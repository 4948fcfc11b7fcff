"""Per-instance task offloading: exact solver, brute-force oracle, greedy baseline.

The task assignment problem is a maximum-cardinality bipartite matching with
server capacities. It is solved exactly with augmenting paths; the returned
matching is therefore integral by construction and maximal by the augmenting
path theorem. Tie-breaking is deterministic: vehicles are processed in
ascending id and servers explored in ascending id, so among optima the
lowest-id vehicles keep their tasks and prefer low-id servers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Instance, Server

_BRUTE_FORCE_LIMIT = 10 ** 7


@dataclass(frozen=True)
class AssignmentProblem:
    """Feasible pairs plus server capacities for one instance."""

    feasibility: np.ndarray     # K x S binary mask
    capacities: tuple[int, ...]

    def __post_init__(self):
        q = np.asarray(self.feasibility)
        if q.ndim != 2:
            raise ValueError("feasibility mask must be a K x S matrix")
        if q.shape[1] != len(self.capacities):
            raise ValueError("capacity vector length must match the server axis")
        if not np.isin(q, (0, 1)).all():
            raise ValueError("feasibility mask entries must be binary")
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be >= 0")

    @property
    def num_vehicles(self) -> int:
        return int(np.asarray(self.feasibility).shape[0])

    @property
    def num_servers(self) -> int:
        return len(self.capacities)


@dataclass(frozen=True)
class Assignment:
    matrix: np.ndarray   # K x S binary
    objective: int


def _feasible_rows(mask: np.ndarray) -> list[list[int]]:
    return [[s for s, flag in enumerate(row) if flag] for row in np.asarray(mask).tolist()]


def max_matching(adjacency: list[list[int]], capacities) -> list[int]:
    """Maximum-cardinality capacitated matching via augmenting paths.

    ``adjacency[k]`` lists the feasible servers of vehicle ``k`` in the order
    they should be preferred. Returns the server index per vehicle (-1 for
    unassigned).
    """
    num_servers = len(capacities)
    assign = [-1] * len(adjacency)
    load = [0] * num_servers
    occupants: list[list[int]] = [[] for _ in range(num_servers)]

    def try_place(k: int, visited: list[bool]) -> bool:
        for s in adjacency[k]:
            if visited[s]:
                continue
            visited[s] = True
            if load[s] < capacities[s]:
                load[s] += 1
                occupants[s].append(k)
                assign[k] = s
                return True
            for k2 in occupants[s]:
                if try_place(k2, visited):
                    occupants[s].remove(k2)
                    occupants[s].append(k)
                    assign[k] = s
                    return True
        return False

    for k in range(len(adjacency)):
        try_place(k, [False] * num_servers)
    return assign


def solve_optimal(problem: AssignmentProblem) -> Assignment:
    """Exact maximum task throughput assignment for one instance."""
    K, S = problem.num_vehicles, problem.num_servers
    assign = max_matching(_feasible_rows(problem.feasibility), problem.capacities)
    matrix = np.zeros((K, S), dtype=np.int8)
    for k, s in enumerate(assign):
        if s >= 0:
            matrix[k, s] = 1
    return Assignment(matrix=matrix, objective=int(matrix.sum()))


def brute_force_oracle(problem: AssignmentProblem) -> int:
    """Maximum feasible objective by exhaustive enumeration (test oracle).

    Enumerates all (S+1)^K assignments (the extra choice is "dropped") in
    chunks, so memory stays bounded under the 10^7 state limit.
    """
    K, S = problem.num_vehicles, problem.num_servers
    if K == 0:
        return 0
    total = (S + 1) ** K
    if total > _BRUTE_FORCE_LIMIT:
        raise ValueError(f"state space {total} exceeds the enumeration limit")

    q = np.asarray(problem.feasibility, dtype=bool)
    q_ext = np.concatenate([q, np.ones((K, 1), dtype=bool)], axis=1)
    caps = np.asarray(problem.capacities)
    radix = (S + 1) ** np.arange(K)

    best = 0
    chunk = 1 << 16
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        digits = (codes[:, None] // radix[None, :]) % (S + 1)
        feasible = q_ext[np.arange(K)[None, :], digits].all(axis=1)
        for s in range(S):
            feasible &= (digits == s).sum(axis=1) <= caps[s]
        if feasible.any():
            objectives = (digits < S).sum(axis=1)
            best = max(best, int(objectives[feasible].max()))
    return best


def solve_greedy_nearest(instance: Instance, servers: list[Server], mask: np.ndarray,
                         distances: np.ndarray | None = None) -> Assignment:
    """Nearest-server greedy baseline.

    Vehicles are processed in id order; each takes its nearest feasible server
    that still has capacity, falling through to the next-nearest when a server
    is full. Distances default to the 3-D Euclidean distance from each
    vehicle's initial position.
    """
    K, S = len(instance.vehicles), len(servers)
    mask = np.asarray(mask)
    if distances is None:
        vp = np.array([v.position for v in instance.vehicles], dtype=float).reshape(K, 3)
        sp = np.array([s.position for s in servers], dtype=float).reshape(S, 3)
        distances = np.linalg.norm(vp[:, None, :] - sp[None, :, :], axis=2)
    order = np.argsort(distances, axis=1, kind="stable")

    load = [0] * S
    matrix = np.zeros((K, S), dtype=np.int8)
    for k in range(K):
        for s in order[k]:
            s = int(s)
            if mask[k, s] and load[s] < servers[s].capacity:
                matrix[k, s] = 1
                load[s] += 1
                break
    return Assignment(matrix=matrix, objective=int(matrix.sum()))


def average_throughput(assignments: list[Assignment]) -> float:
    """Mean number of offloaded tasks per instance."""
    if not assignments:
        raise ValueError("average_throughput requires at least one instance")
    return sum(a.objective for a in assignments) / len(assignments)
