"""Placement search over the (altitude, tilt) box.

Five schemes share one fitness pipeline:

* ``grid_search``             exact sweep of the discretized feasible set
* ``hill_climb``              population hill climbing with self-adaptive step
* ``genetic_search``          real-coded GA baseline
* ``greedy_offload_placement``  grid sweep scored by the greedy assignment
* ``sumrate_placement``       grid sweep scored by the expected sum rate

Every scheme is deterministic given its seed. Grid-style sweeps may evaluate
candidates in a thread pool; candidates are scored independently and reduced
in scan order, so results are schedule-invariant.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluator import PlacementEvaluator
from .scenario import Instance, Placement, PlacementBounds, Server, SystemParams


@dataclass(frozen=True)
class FeasibleSet(PlacementBounds):
    """Discretized search box for the placement pair."""

    @staticmethod
    def from_bounds(bounds: PlacementBounds) -> "FeasibleSet":
        return FeasibleSet(bounds.h_min_m, bounds.h_max_m,
                           bounds.theta_min_rad, bounds.theta_max_rad,
                           bounds.step_h_m, bounds.step_theta_rad)

    def altitudes(self) -> np.ndarray:
        n = int(math.floor((self.h_max_m - self.h_min_m) / self.step_h_m + 1e-9)) + 1
        return self.h_min_m + self.step_h_m * np.arange(n)

    def tilts(self) -> np.ndarray:
        n = int(math.floor((self.theta_max_rad - self.theta_min_rad)
                           / self.step_theta_rad + 1e-9)) + 1
        return self.theta_min_rad + self.step_theta_rad * np.arange(n)

    def grid_points(self) -> list[tuple[float, float]]:
        """All (altitude, tilt) pairs in altitude-major scan order."""
        return [(float(h), float(t)) for h in self.altitudes() for t in self.tilts()]

    def clip(self, altitude_m: float, tilt_rad: float) -> tuple[float, float]:
        return (min(max(altitude_m, self.h_min_m), self.h_max_m),
                min(max(tilt_rad, self.theta_min_rad), self.theta_max_rad))


@dataclass(frozen=True)
class HcParams:
    population: int = 20
    stop_delta: float = 1e-3
    max_iters: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("hill climbing needs at least 2 particles")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class GaParams:
    population: int = 20
    generations: int = 30
    crossover_rate: float = 0.9
    mutation_sigma: tuple[float, float] | None = None  # None -> 5% of each range
    tournament_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("genetic search needs a population of at least 2")


@dataclass(frozen=True)
class PlacementResult:
    placement: Placement
    avg_throughput: float
    evaluations: int
    wall_time_s: float


def build_evaluator(instances: list[Instance], servers: list[Server],
                    params: SystemParams, ris_xy: tuple[float, float],
                    master_seed: int = 0) -> PlacementEvaluator:
    return PlacementEvaluator(instances, servers, params, ris_xy, master_seed)


def evaluate_placement(placement: Placement, instances: list[Instance],
                       servers: list[Server], params: SystemParams,
                       master_seed: int = 0) -> float:
    """Average optimally-assigned task throughput of one placement."""
    ev = PlacementEvaluator(instances, servers, params, placement.ris_xy, master_seed)
    return ev.throughput(placement.altitude_m, placement.tilt_rad)


def _metric_fn(evaluator: PlacementEvaluator, metric: str):
    if metric == "optimal":
        return evaluator.throughput
    if metric == "greedy":
        return evaluator.greedy_throughput
    if metric == "sumrate":
        return evaluator.sumrate
    raise ValueError(f"unknown metric '{metric}'")


def sweep_grid(fset: FeasibleSet, evaluator: PlacementEvaluator,
               metric: str = "optimal", threads: int = 1) -> list[tuple[float, float, float]]:
    """Score every grid point; returns (altitude, tilt, value) in scan order."""
    fn = _metric_fn(evaluator, metric)
    points = fset.grid_points()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda p: fn(p[0], p[1]), points))
    else:
        values = [fn(h, t) for h, t in points]
    return [(h, t, v) for (h, t), v in zip(points, values)]


def grid_search(fset: FeasibleSet, instances: list[Instance], servers: list[Server],
                params: SystemParams, ris_xy: tuple[float, float] = (0.0, -12.0),
                *, metric: str = "optimal", threads: int = 1,
                evaluator: PlacementEvaluator | None = None,
                master_seed: int = 0) -> PlacementResult:
    """Exhaustive placement sweep; ties keep the first point in scan order."""
    ev = evaluator or build_evaluator(instances, servers, params, ris_xy, master_seed)
    start = time.perf_counter()
    scores = sweep_grid(fset, ev, metric, threads)
    best_h, best_t, best_v = scores[0]
    for h, t, v in scores[1:]:
        if v > best_v:
            best_h, best_t, best_v = h, t, v
    return PlacementResult(
        placement=Placement(ev.ris_xy, best_h, best_t),
        avg_throughput=best_v,
        evaluations=len(scores),
        wall_time_s=time.perf_counter() - start,
    )


def hill_climb(fset: FeasibleSet, hc: HcParams, instances: list[Instance],
               servers: list[Server], params: SystemParams,
               ris_xy: tuple[float, float] = (0.0, -12.0), *,
               evaluator: PlacementEvaluator | None = None,
               master_seed: int = 0) -> PlacementResult:
    """Population hill climbing with a self-adaptive step.

    Each particle proposes one move per sweep: the per-coordinate step is
    drawn uniformly within the distance to a randomly chosen other particle,
    clamped to the box, and accepted only on strict improvement. The sweep
    loop stops when the step bound left by the last coordinate update falls
    to ``stop_delta`` or after ``max_iters`` sweeps. Particle fitness values
    are cached, and the best particle ever evaluated is returned, so the
    early-stopping rule can never discard the incumbent.
    """
    ev = evaluator or build_evaluator(instances, servers, params, ris_xy, master_seed)
    fn = ev.throughput
    rng = np.random.default_rng(hc.seed)
    start = time.perf_counter()

    J = hc.population
    pop = np.column_stack([
        rng.uniform(fset.h_min_m, fset.h_max_m, J),
        rng.uniform(fset.theta_min_rad, fset.theta_max_rad, J),
    ])
    fitness = np.full(J, np.nan)
    evaluations = 0
    best_point = (float(pop[0, 0]), float(pop[0, 1]))
    best_value = -math.inf

    def score(h: float, t: float) -> float:
        nonlocal evaluations, best_point, best_value
        value = fn(h, t)
        evaluations += 1
        if value > best_value:
            best_value = value
            best_point = (h, t)
        return value

    eps_max = math.inf
    i = 1
    while eps_max > hc.stop_delta and i <= hc.max_iters:
        i += 1
        for j in range(J):
            if math.isnan(fitness[j]):
                fitness[j] = score(float(pop[j, 0]), float(pop[j, 1]))
            other = int(rng.integers(0, J - 1))
            if other >= j:
                other += 1
            proposal = [0.0, 0.0]
            for axis in range(2):
                eps_max = float(abs(pop[j, axis] - pop[other, axis]))
                r = float(rng.uniform(-eps_max, eps_max))
                proposal[axis] = float(pop[j, axis]) + r
            h, t = fset.clip(proposal[0], proposal[1])
            value = score(h, t)
            if value > fitness[j]:
                pop[j, 0], pop[j, 1] = h, t
                fitness[j] = value

    return PlacementResult(
        placement=Placement(ev.ris_xy, best_point[0], best_point[1]),
        avg_throughput=best_value,
        evaluations=evaluations,
        wall_time_s=time.perf_counter() - start,
    )


def genetic_search(fset: FeasibleSet, ga: GaParams, instances: list[Instance],
                   servers: list[Server], params: SystemParams,
                   ris_xy: tuple[float, float] = (0.0, -12.0), *,
                   evaluator: PlacementEvaluator | None = None,
                   master_seed: int = 0) -> PlacementResult:
    """Real-coded GA: tournament selection, blend crossover, Gaussian mutation,
    elitism of one."""
    ev = evaluator or build_evaluator(instances, servers, params, ris_xy, master_seed)
    fn = ev.throughput
    rng = np.random.default_rng(ga.seed)
    start = time.perf_counter()

    if ga.mutation_sigma is None:
        sigma = (0.05 * (fset.h_max_m - fset.h_min_m),
                 0.05 * (fset.theta_max_rad - fset.theta_min_rad))
    else:
        sigma = ga.mutation_sigma

    P = ga.population
    pop = np.column_stack([
        rng.uniform(fset.h_min_m, fset.h_max_m, P),
        rng.uniform(fset.theta_min_rad, fset.theta_max_rad, P),
    ])
    fitness = np.array([fn(float(p[0]), float(p[1])) for p in pop])
    evaluations = P

    def tournament() -> int:
        idx = rng.integers(0, P, size=ga.tournament_size)
        return int(idx[np.argmax(fitness[idx])])

    for _ in range(ga.generations):
        elite = int(np.argmax(fitness))
        children = [pop[elite].copy()]
        child_fit = [float(fitness[elite])]
        while len(children) < P:
            p1, p2 = pop[tournament()], pop[tournament()]
            if rng.random() < ga.crossover_rate:
                blend = rng.uniform(size=2)
                child = blend * p1 + (1.0 - blend) * p2
            else:
                child = p1.copy()
            child = child + rng.normal(0.0, 1.0, size=2) * np.asarray(sigma)
            h, t = fset.clip(float(child[0]), float(child[1]))
            children.append(np.array([h, t]))
            child_fit.append(fn(h, t))
            evaluations += 1
        pop = np.vstack(children)
        fitness = np.array(child_fit)

    best = int(np.argmax(fitness))
    return PlacementResult(
        placement=Placement(ev.ris_xy, float(pop[best, 0]), float(pop[best, 1])),
        avg_throughput=float(fitness[best]),
        evaluations=evaluations,
        wall_time_s=time.perf_counter() - start,
    )


def greedy_offload_placement(fset: FeasibleSet, instances: list[Instance],
                             servers: list[Server], params: SystemParams,
                             ris_xy: tuple[float, float] = (0.0, -12.0), *,
                             threads: int = 1,
                             evaluator: PlacementEvaluator | None = None,
                             master_seed: int = 0) -> PlacementResult:
    """Grid sweep scored by the nearest-server greedy assignment."""
    return grid_search(fset, instances, servers, params, ris_xy,
                       metric="greedy", threads=threads, evaluator=evaluator,
                       master_seed=master_seed)


def sumrate_placement(fset: FeasibleSet, instances: list[Instance],
                      servers: list[Server], params: SystemParams,
                      ris_xy: tuple[float, float] = (0.0, -12.0), *,
                      threads: int = 1,
                      evaluator: PlacementEvaluator | None = None,
                      master_seed: int = 0) -> PlacementResult:
    """Grid sweep maximizing expected sum rate; reports the optimal-assignment
    throughput achieved at the chosen placement."""
    ev = evaluator or build_evaluator(instances, servers, params, ris_xy, master_seed)
    start = time.perf_counter()
    scores = sweep_grid(fset, ev, "sumrate", threads)
    best_h, best_t, best_v = scores[0]
    for h, t, v in scores[1:]:
        if v > best_v:
            best_h, best_t, best_v = h, t, v
    throughput = ev.throughput(best_h, best_t)
    return PlacementResult(
        placement=Placement(ev.ris_xy, best_h, best_t),
        avg_throughput=throughput,
        evaluations=len(scores) + 1,
        wall_time_s=time.perf_counter() - start,
    )
