import numpy as np
import pytest

from swarmdnn import _kernels
from swarmdnn.pathplan import (exhaustive_best_route, leg_fitness, leg_time,
                               plan_route, plan_route_pure_greedy,
                               processing_time, route_from_order,
                               route_to_csv, select_first_target,
                               ROUTE_CSV_HEADER)
from swarmdnn.scenario import (Position3, Scenario, TargetArea, Weights,
                               generate_random_scenario)

from conftest import make_demo_scenario


def _line_scenario(demo_model, sizes_xs, base_x=0.0):
    """Targets on the x axis at ground level, base at the origin aloft."""
    targets = tuple(TargetArea(i + 1, Position3(x, 0.0, 0.0), s, 1)
                    for i, (s, x) in enumerate(sizes_xs))
    sc = make_demo_scenario(demo_model)
    from dataclasses import replace
    return replace(sc, targets=targets, base=Position3(base_x, 0.0, 0.0))


def test_leg_time_zero_and_hand_values():
    a = Position3(0, 0, 0)
    assert leg_time(a, a, 20.0) == 0.0
    assert leg_time(a, Position3(6000, 0, 0), 20.0) == pytest.approx(300.0)
    assert leg_time(a, Position3(1000, 1000, 0), 20.0) == pytest.approx(
        70.71067811865476, rel=1e-12)


def test_processing_time():
    assert processing_time(0.0, 10.0) == 0.0
    assert processing_time(30.0, 10.0) == pytest.approx(180.0)
    assert processing_time(80.0, 10.0) == pytest.approx(480.0)
    with pytest.raises(ValueError):
        processing_time(1.0, 0.0)


def test_leg_fitness_single_term():
    w = Weights(vartheta_dist=1.0, rho_task=0.0)
    cand = TargetArea(2, Position3(500, 0, 0), 5.0, 1)
    assert leg_fitness(Position3(0, 0, 0), cand, 20.0, 10.0, w) == pytest.approx(500.0)


def test_leg_fitness_hand_value():
    w = Weights(vartheta_dist=0.5, rho_task=0.5)
    current = TargetArea(1, Position3(0, 0, 0), 30.0, 1)  # t_q = 180 s
    cand = TargetArea(2, Position3(6000, 0, 0), 5.0, 1)   # t_next = 300 s
    assert leg_fitness(current, cand, 20.0, 10.0, w) == pytest.approx(3060.0)


def test_leg_fitness_infeasible_sentinel():
    w = Weights(vartheta_dist=0.5, rho_task=0.5)
    current = TargetArea(1, Position3(0, 0, 0), 80.0, 1)  # t_q = 480 s
    cand = TargetArea(2, Position3(6000, 0, 0), 5.0, 1)   # t_next = 300 s
    assert leg_fitness(current, cand, 20.0, 10.0, w) >= _kernels.C8_SENTINEL


def test_select_first_target(demo_model):
    sc = _line_scenario(demo_model, [(10.0, 1000.0)])
    assert select_first_target(sc) == 1
    sc = _line_scenario(demo_model, [(10.0, 1000.0), (40.0, 2000.0)])
    assert select_first_target(sc) == 2  # ratios 0.01 vs 0.02
    sc = _line_scenario(demo_model, [(10.0, 1000.0), (20.0, 2000.0)])
    assert select_first_target(sc) == 1  # equal ratios -> lower id


def test_single_target_route(demo_scenario):
    r = plan_route(demo_scenario, k=5, restarts=3, seed=0)
    assert r.order == (1,)
    assert r.num_legs == 2
    d = demo_scenario.base.distance_to(demo_scenario.targets[0].center)
    assert r.total_distance_m == pytest.approx(2 * d)


def test_k_covering_all_collapses_to_greedy():
    for seed in (0, 3, 11):
        sc = generate_random_scenario(8, 9, seed=seed)
        g = plan_route_pure_greedy(sc)
        r = plan_route(sc, k=8, restarts=1, seed=seed + 99)
        assert r.order == g.order
        assert r.total_fitness == g.total_fitness


def test_collinear_targets_visited_in_spatial_order(demo_model):
    # equal sizes, small enough that every leg is feasible
    sc = _line_scenario(demo_model, [(0.1, 1000.0), (0.1, 2000.0),
                                     (0.1, 3000.0)])
    g = plan_route_pure_greedy(sc)
    assert g.order == (1, 2, 3)
    # exhaustive enumeration of 3! orders agrees
    best = exhaustive_best_route(sc)
    assert best.total_fitness <= g.total_fitness + 1e-9


def test_plan_route_determinism():
    sc = generate_random_scenario(12, 9, seed=4)
    a = plan_route(sc, k=5, restarts=10, seed=21)
    b = plan_route(sc, k=5, restarts=10, seed=21)
    assert a == b


def test_seven_target_instance_sandwich(demo_model):
    """Frozen seeded instance: optimum <= randomized <= pure greedy."""
    sc = generate_random_scenario(7, 9, seed=701)
    opt = exhaustive_best_route(sc)
    rand = plan_route(sc, k=5, restarts=20, seed=701)
    greedy = plan_route_pure_greedy(sc)
    assert opt.total_fitness <= rand.total_fitness + 1e-9
    assert rand.total_fitness <= greedy.total_fitness + 1e-9


def test_restart_monotonicity():
    sc = generate_random_scenario(12, 9, seed=9)
    fits = [plan_route(sc, k=5, restarts=r, seed=5).total_fitness
            for r in range(1, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(fits, fits[1:]))


def test_small_instance_median_sandwich():
    opts, rands, greeds = [], [], []
    for i in range(20):
        sc = generate_random_scenario(7, 9, seed=7000 + i)
        opts.append(exhaustive_best_route(sc).total_fitness)
        rands.append(plan_route(sc, k=5, restarts=20, seed=7000 + i).total_fitness)
        greeds.append(plan_route_pure_greedy(sc).total_fitness)
    assert np.median(opts) <= np.median(rands) + 1e-9
    assert np.median(rands) <= np.median(greeds) + 1e-9


def test_route_is_permutation_fuzz():
    for seed in range(25):
        sc = generate_random_scenario(9, 9, seed=seed)
        r = plan_route(sc, k=5, restarts=4, seed=seed)
        assert sorted(r.order) == sorted(t.id for t in sc.targets)
        assert len(r.leg_distances_m) == len(sc.targets) + 1


def test_route_csv_shape():
    sc = generate_random_scenario(10, 9, seed=3)
    r = plan_route(sc, k=5, restarts=5, seed=3)
    text = route_to_csv(r)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(ROUTE_CSV_HEADER)
    assert len(lines) == 1 + 11  # 10 target legs + return leg
    assert lines[-1].split(",")[1] == "0"  # return leg marker


def test_route_from_order_validates():
    sc = generate_random_scenario(4, 9, seed=0)
    with pytest.raises(ValueError):
        route_from_order(sc, [1, 2, 3])  # misses a target
    r = route_from_order(sc, [4, 3, 2, 1])
    assert r.order == (4, 3, 2, 1)


def test_exhaustive_guard():
    sc = generate_random_scenario(11, 9, seed=0)
    with pytest.raises(ValueError):
        exhaustive_best_route(sc)


def test_route_total_consistency():
    sc = generate_random_scenario(6, 9, seed=2)
    r = plan_route(sc, k=5, restarts=5, seed=2)
    again = route_from_order(sc, r.order)
    assert again.total_fitness == pytest.approx(r.total_fitness, rel=1e-12)
    assert again.total_distance_m == pytest.approx(r.total_distance_m, rel=1e-12)
    assert again.c8_violations == r.c8_violations
