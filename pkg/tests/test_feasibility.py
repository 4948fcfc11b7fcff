import math
from types import SimpleNamespace

import numpy as np
import pytest

from risvec.evaluator import PlacementEvaluator
from risvec.feasibility import (LinkBudget, completion_probability_exact,
                                completion_probability_mc, compute_latency,
                                feasibility_mask, grid_budget, link_budget,
                                uploadable_data)
from risvec.scenario import (Instance, Placement, Server, SystemParams, TaskSpec,
                             Vehicle)

import reference as ref

PARAMS = SystemParams()
RIS = (0.0, -12.0)


def make_budget(powers, probs, p_c, sojourn=0.05):
    return LinkBudget(
        compute_latency_s=0.009,
        max_comm_time_s=sojourn * len(powers),
        grid_budget=len(powers),
        sojourn_time_s=sojourn,
        per_grid_los_power_w=tuple(powers),
        per_grid_los_prob=tuple(probs),
        server_los_prob=p_c,
    )


class TestComputeLatency:
    def test_published_workload(self):
        # 2 x 89.7 GFLOP at 20 TFLOPS
        task = TaskSpec(1e6, 179.4e9, 0.1)
        assert compute_latency(task, 20e12) == pytest.approx(8.97e-3, rel=1e-12)

    def test_zero_workload(self):
        task = SimpleNamespace(flops_total=0.0)
        assert compute_latency(task, 20e12) == 0.0

    def test_doubling_rate_halves_latency(self):
        task = TaskSpec(1e6, 5e9, 0.1)
        assert compute_latency(task, 2e12) == pytest.approx(
            compute_latency(task, 1e12) / 2)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError):
            compute_latency(TaskSpec(1e6, 1e9, 0.1), 0.0)


class TestGridBudget:
    def vehicle(self, speed):
        return Vehicle(0, (0.0, -2.0, 1.5), speed, 1, TaskSpec(1e6, 179.4e9, 0.1))

    def test_published_case(self):
        # window 0.1 - 0.00897 s at 0.05 s per cell
        assert grid_budget(self.vehicle(20.0).task, self.vehicle(20.0), PARAMS) == 1

    def test_exhausted_deadline(self):
        task = TaskSpec(1e6, 179.4e9, 0.005)
        vehicle = Vehicle(0, (0.0, -2.0, 1.5), 20.0, 1, task)
        assert grid_budget(task, vehicle, PARAMS) == 0

    def test_exact_multiple(self):
        task = SimpleNamespace(flops_total=0.0, deadline_s=0.1)
        vehicle = self.vehicle(20.0)  # sojourn 0.05 s
        assert grid_budget(task, vehicle, PARAMS) == 2


class TestUploadableData:
    def test_empty_budget(self):
        budget = make_budget([], [], 0.5)
        assert uploadable_data(1, [], budget, PARAMS) == 0.0

    def test_single_cell_snr_one(self):
        budget = make_budget([PARAMS.noise_power_w], [0.5], 0.5, sojourn=0.05)
        assert uploadable_data(1, [1], budget, PARAMS) == pytest.approx(1e6)

    def test_all_los_dominates(self):
        rng = np.random.default_rng(11)
        powers = rng.uniform(0.1, 10, 4) * PARAMS.noise_power_w
        budget = make_budget(powers, [0.5] * 4, 0.5)
        best = uploadable_data(1, [1, 1, 1, 1], budget, PARAMS)
        for code in range(16):
            states = [(code >> i) & 1 for i in range(4)]
            for c in (0, 1):
                assert uploadable_data(c, states, budget, PARAMS) <= best + 1e-9

    def test_length_mismatch_rejected(self):
        budget = make_budget([1e-13, 1e-13], [0.5, 0.5], 0.5)
        with pytest.raises(ValueError):
            uploadable_data(1, [1], budget, PARAMS)


class TestCompletionExact:
    def test_two_state_product(self):
        # only the double-LoS state can carry the payload
        budget = make_budget([PARAMS.noise_power_w], [0.9], 0.8, sojourn=0.05)
        p = completion_probability_exact(budget, 5e5, PARAMS)
        assert p == pytest.approx(0.9 * 0.8, rel=1e-12)

    def test_zero_payload(self):
        budget = make_budget([1e-13], [0.5], 0.5)
        assert completion_probability_exact(budget, 0.0, PARAMS) == 1.0

    def test_unreachable_payload(self):
        budget = make_budget([1e-13], [0.5], 0.5, sojourn=0.05)
        assert completion_probability_exact(budget, 1e9, PARAMS) == 0.0

    def test_zero_cells_fails_positive_payload(self):
        budget = make_budget([], [], 0.5)
        assert completion_probability_exact(budget, 1.0, PARAMS) == 0.0
        assert completion_probability_exact(budget, 0.0, PARAMS) == 1.0

    def test_enum_limit_enforced(self):
        budget = make_budget([1e-13] * 17, [0.5] * 17, 0.5)
        with pytest.raises(ValueError):
            completion_probability_exact(budget, 1.0, PARAMS)

    def test_monotone_in_payload_and_probabilities(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            L = int(rng.integers(1, 4))
            powers = rng.uniform(0.5, 50, L) * PARAMS.noise_power_w
            probs = rng.uniform(0.1, 0.9, L)
            p_c = float(rng.uniform(0.1, 0.9))
            budget = make_budget(powers, probs, p_c)
            cap = uploadable_data(1, [1] * L, budget, PARAMS)
            d1, d2 = sorted(rng.uniform(0.1, 1.0, 2) * cap)
            assert (completion_probability_exact(budget, d1, PARAMS)
                    >= completion_probability_exact(budget, d2, PARAMS))
            bumped = make_budget(powers, np.minimum(probs + 0.05, 0.99), min(p_c + 0.05, 0.99))
            assert (completion_probability_exact(bumped, d1, PARAMS)
                    >= completion_probability_exact(budget, d1, PARAMS) - 1e-12)

    def test_matches_bruteforce_reference(self):
        rng = np.random.default_rng(17)
        veh = Vehicle(0, (3.0, -2.0, 1.5), 15.0, 1, TaskSpec(2e6, 179.4e9, 0.1))
        srv = Server(0, (25.0, 12.0, 6.0), 4)
        for h, tilt in [(20.0, 0.4), (50.0, 1.0), (75.0, 1.3)]:
            placement = Placement(RIS, h, tilt)
            budget = link_budget(veh, srv, placement, PARAMS)
            got = completion_probability_exact(budget, veh.task.data_bits, PARAMS)
            want = ref.ref_pair_completion(PARAMS, RIS[0], RIS[1], h, tilt, veh, srv)
            assert got == pytest.approx(want, abs=1e-12)


class TestCompletionMonteCarlo:
    def test_single_sample_is_binary(self):
        budget = make_budget([1e-12], [0.5], 0.5)
        rng = np.random.default_rng(0)
        assert completion_probability_mc(budget, 1e5, PARAMS, 1, rng) in (0.0, 1.0)

    def test_deterministic_for_fixed_seed(self):
        budget = make_budget([1e-12, 1e-12], [0.4, 0.6], 0.7)
        a = completion_probability_mc(budget, 1e6, PARAMS, 500, np.random.default_rng(5))
        b = completion_probability_mc(budget, 1e6, PARAMS, 500, np.random.default_rng(5))
        assert a == b

    def test_certain_completion_estimates_one(self):
        budget = make_budget([1e-9], [0.5], 0.5)
        p = completion_probability_mc(budget, 1.0, PARAMS, 200, np.random.default_rng(1))
        assert p == 1.0

    def test_within_three_standard_errors_of_exact(self):
        rng = np.random.default_rng(2024)
        samples = 10_000
        for trial in range(100):
            L = int(rng.integers(1, 5))
            powers = 10 ** rng.uniform(-1.5, 3.0, L) * PARAMS.noise_power_w
            probs = rng.uniform(0.05, 0.95, L)
            p_c = float(rng.uniform(0.05, 0.95))
            budget = make_budget(powers, probs, p_c)
            cap = uploadable_data(1, [1] * L, budget, PARAMS)
            payload = float(rng.uniform(0.2, 1.1)) * cap
            exact = completion_probability_exact(budget, payload, PARAMS)
            est = completion_probability_mc(budget, payload, PARAMS, samples,
                                            np.random.default_rng(9000 + trial))
            bound = 3 * math.sqrt(exact * (1 - exact) / samples)
            assert abs(est - exact) <= bound


def small_instance():
    task = TaskSpec(3e6, 179.4e9, 0.1)
    vehicles = (
        Vehicle(0, (-10.0, -2.0, 1.5), 12.0, 1, task),
        Vehicle(1, (5.0, 2.0, 1.5), 18.0, -1, task),
        Vehicle(2, (60.0, 6.0, 1.5), 15.0, -1, task),
    )
    return Instance(0, vehicles)


SERVERS = [Server(0, (-25.0, 12.0, 6.0), 4), Server(1, (25.0, 12.0, 6.0), 4)]


class TestFeasibilityMask:
    def test_matches_independent_enumeration(self):
        inst = small_instance()
        for h, tilt in [(25.0, 0.5), (55.0, 1.1)]:
            placement = Placement(RIS, h, tilt)
            got = feasibility_mask(inst, SERVERS, placement, PARAMS)
            want = ref.ref_mask(PARAMS, RIS[0], RIS[1], h, tilt, inst, SERVERS)
            assert got.tolist() == want

    def test_deterministic(self):
        inst = small_instance()
        placement = Placement(RIS, 40.0, 0.9)
        a = feasibility_mask(inst, SERVERS, placement, PARAMS, master_seed=3)
        b = feasibility_mask(inst, SERVERS, placement, PARAMS, master_seed=3)
        assert np.array_equal(a, b)

    def test_zero_budget_rows_are_infeasible(self):
        task = TaskSpec(1e6, 179.4e9, 0.009)  # deadline below compute latency
        veh = Vehicle(0, (0.0, -2.0, 1.5), 15.0, 1, task)
        inst = Instance(0, (veh,))
        placement = Placement(RIS, 40.0, 0.9)
        mask = feasibility_mask(inst, SERVERS, placement, PARAMS)
        assert not mask.any()

    def test_evaluator_agrees_with_reference_path(self):
        instances = [small_instance(),
                     Instance(1, small_instance().vehicles[:2])]
        ev = PlacementEvaluator(instances, SERVERS, PARAMS, RIS)
        for h, tilt in [(20.0, 0.3), (45.0, 0.8), (70.0, 1.2)]:
            masks = ev.masks(h, tilt)
            for inst, got in zip(instances, masks):
                want = feasibility_mask(inst, SERVERS, Placement(RIS, h, tilt), PARAMS)
                assert np.array_equal(got, want)


class TestLinkBudgetAssembly:
    def test_budget_fields_consistent(self):
        veh = Vehicle(0, (3.0, -2.0, 1.5), 15.0, 1, TaskSpec(2e6, 179.4e9, 0.1))
        srv = SERVERS[1]
        budget = link_budget(veh, srv, Placement(RIS, 50.0, 1.0), PARAMS)
        assert budget.grid_budget == len(budget.per_grid_los_power_w)
        assert budget.grid_budget == len(budget.per_grid_los_prob)
        assert budget.sojourn_time_s == pytest.approx(PARAMS.grid_len_m / veh.speed_mps)
        assert budget.compute_latency_s == pytest.approx(8.97e-3)
        expected_cells = math.floor(budget.max_comm_time_s / budget.sojourn_time_s)
        assert budget.grid_budget == expected_cells
        assert all(p > 0 for p in budget.per_grid_los_power_w)
        assert all(0 < p < 1 for p in budget.per_grid_los_prob)
        assert 0 < budget.server_los_prob < 1
