import time

import numpy as np
import pytest

from risvec.assignment import (Assignment, AssignmentProblem, average_throughput,
                               brute_force_oracle, solve_greedy_nearest, solve_optimal)
from risvec.scenario import Instance, Server, TaskSpec, Vehicle

import reference as ref

TASK = TaskSpec(1e6, 1e9, 0.1)


def problem(mask, caps):
    return AssignmentProblem(np.asarray(mask, dtype=np.int8), tuple(caps))


def check_constraints(p: AssignmentProblem, a: Assignment):
    lam = a.matrix
    q = np.asarray(p.feasibility)
    assert lam.shape == q.shape
    assert np.isin(lam, (0, 1)).all()
    assert (lam.sum(axis=1) <= 1).all()
    assert (lam.sum(axis=0) <= np.asarray(p.capacities)).all()
    assert (lam <= q).all()
    assert a.objective == lam.sum()


class TestSolveOptimal:
    def test_all_infeasible(self):
        p = problem([[0, 0], [0, 0]], [1, 1])
        a = solve_optimal(p)
        assert a.objective == 0
        assert not a.matrix.any()

    def test_singleton(self):
        p = problem([[1]], [1])
        assert solve_optimal(p).objective == 1

    def test_contention_resolved_by_augmenting(self):
        # first vehicle reaches only server 0; an exact solver places the
        # flexible vehicle on server 1 (a straight greedy pass can return 1)
        p = problem([[1, 0], [1, 1]], [1, 1])
        a = solve_optimal(p)
        assert a.objective == 2
        assert a.matrix[0, 0] == 1
        assert a.matrix[1, 1] == 1
        assert ref.ref_best_assignment([[1, 0], [1, 1]], [1, 1]) == 2

    def test_empty_problem(self):
        p = problem(np.zeros((0, 3), dtype=np.int8), [1, 1, 1])
        assert solve_optimal(p).objective == 0

    def test_matches_bruteforce_on_random_instances(self):
        rng = np.random.default_rng(77)
        start = time.perf_counter()
        for _ in range(200):
            K = int(rng.integers(1, 7))
            S = int(rng.integers(1, 4))
            mask = (rng.random((K, S)) < rng.uniform(0.2, 0.9)).astype(np.int8)
            caps = rng.integers(0, 4, S).tolist()
            p = problem(mask, caps)
            a = solve_optimal(p)
            check_constraints(p, a)
            assert a.objective == brute_force_oracle(p)
        assert time.perf_counter() - start < 5.0

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        mask = (rng.random((8, 4)) < 0.6).astype(np.int8)
        p = problem(mask, [2, 1, 2, 1])
        a = solve_optimal(p)
        b = solve_optimal(p)
        assert np.array_equal(a.matrix, b.matrix)

    def test_capacity_zero_server_unused(self):
        p = problem([[1, 1], [1, 1]], [0, 1])
        a = solve_optimal(p)
        assert a.objective == 1
        assert a.matrix[:, 0].sum() == 0


class TestBruteForce:
    def test_capacity_bound(self):
        p = problem(np.ones((5, 2), dtype=np.int8), [2, 2])
        assert brute_force_oracle(p) == 4

    def test_empty(self):
        p = problem(np.zeros((0, 2), dtype=np.int8), [1, 1])
        assert brute_force_oracle(p) == 0

    def test_size_limit(self):
        p = problem(np.ones((30, 3), dtype=np.int8), [1, 1, 1])
        with pytest.raises(ValueError):
            brute_force_oracle(p)


def build_instance(xs, task=TASK):
    vehicles = tuple(Vehicle(i, (x, -2.0, 1.5), 15.0, 1, task)
                     for i, x in enumerate(xs))
    return Instance(0, vehicles)


class TestGreedy:
    def servers(self, caps):
        return [Server(i, (x, 12.0, 6.0), c)
                for i, (x, c) in enumerate(zip((-25.0, 25.0), caps))]

    def test_contention_loses_a_task(self):
        # vehicle 0 sits next to server 0 and is flexible; vehicle 1 can only
        # use server 0 but arrives second in id order
        inst = build_instance([-25.0, -10.0])
        servers = self.servers([1, 1])
        mask = np.array([[1, 1], [1, 0]], dtype=np.int8)
        greedy = solve_greedy_nearest(inst, servers, mask)
        assert greedy.objective == 1
        optimal = solve_optimal(AssignmentProblem(mask, (1, 1)))
        assert optimal.objective == 2

    def test_never_beats_optimal(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            K = int(rng.integers(1, 8))
            xs = rng.uniform(-90, 90, K)
            caps = rng.integers(1, 3, 2).tolist()
            mask = (rng.random((K, 2)) < 0.7).astype(np.int8)
            inst = build_instance(list(xs))
            servers = self.servers(caps)
            greedy = solve_greedy_nearest(inst, servers, mask)
            optimal = solve_optimal(AssignmentProblem(mask, tuple(caps)))
            assert greedy.objective <= optimal.objective
            check_constraints(AssignmentProblem(mask, tuple(caps)), greedy)

    def test_unlimited_capacity_assigns_every_feasible_vehicle(self):
        inst = build_instance([-60.0, -20.0, 20.0, 60.0])
        servers = self.servers([10, 10])
        mask = np.array([[1, 0], [1, 1], [0, 1], [1, 1]], dtype=np.int8)
        greedy = solve_greedy_nearest(inst, servers, mask)
        assert greedy.objective == 4

    def test_prefers_nearest_feasible(self):
        inst = build_instance([20.0])
        servers = self.servers([1, 1])
        mask = np.array([[1, 1]], dtype=np.int8)
        greedy = solve_greedy_nearest(inst, servers, mask)
        assert greedy.matrix[0, 1] == 1


class TestAverageThroughput:
    def test_mean(self):
        a = Assignment(np.ones((3, 1), dtype=np.int8), 3)
        b = Assignment(np.ones((5, 1), dtype=np.int8), 5)
        assert average_throughput([a, b]) == 4.0

    def test_single_instance(self):
        a = Assignment(np.zeros((2, 2), dtype=np.int8), 0)
        assert average_throughput([a]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            average_throughput([])


class TestProblemValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            AssignmentProblem(np.ones((2, 3), dtype=np.int8), (1, 1))

    def test_nonbinary_mask(self):
        with pytest.raises(ValueError):
            AssignmentProblem(np.full((2, 2), 2, dtype=np.int8), (1, 1))

    def test_negative_capacity(self):
        with pytest.raises(ValueError):
            AssignmentProblem(np.ones((1, 1), dtype=np.int8), (-1,))
