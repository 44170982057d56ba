import numpy as np
import pytest

from swarmdnn.scenario import (DnnModelProfile, LayerProfile, Position3,
                               Scenario, TargetArea, TaskSpec, UavSpec,
                               Weights, default_flight, default_radio)


def demo_layers():
    # deliberately non-uniform compute / shrinking activations
    spec = [(3e9, 2e8, 16e6), (6e9, 1.5e8, 8e6), (4.5e9, 1e8, 8e6),
            (3e9, 1e8, 4e6), (1.5e9, 5e7, 2e6), (0.75e9, 5e7, 1e5)]
    return tuple(LayerProfile(i + 1, c, m, o)
                 for i, (c, m, o) in enumerate(spec))


@pytest.fixture(scope="session")
def demo_model():
    return DnnModelProfile(kind=1, layers=demo_layers())


def make_uav(uid, role, x, y, *, compute=15e9, memory=1e9, energy=5e5,
             tx=0.1, bw=1e6):
    return UavSpec(uid, role, Position3(x, y, 3000.0), compute, memory,
                   energy, tx, bw)


def make_demo_scenario(model, *, task_size_gb=10.0, weights=None,
                       num_followers=3, energy_cap=5e5, memory_cap=1e9):
    fleet = [make_uav(0, "leader", 6000, 6000, energy=energy_cap,
                      memory=memory_cap)]
    ring = [(6050, 6000), (5950, 6000), (6000, 6050), (6000, 5950)]
    for j in range(num_followers):
        x, y = ring[j]
        fleet.append(make_uav(j + 1, "follower", x, y, energy=energy_cap,
                              memory=memory_cap))
    return Scenario(
        targets=(TargetArea(1, Position3(7000, 6000, 0.0), task_size_gb, 1),),
        fleet=tuple(fleet),
        models=(model,),
        radio=default_radio(),
        flight=default_flight(),
        weights=weights or Weights(),
        base=Position3(6000, 6000, 3000.0),
        seed=1)


@pytest.fixture(scope="session")
def demo_scenario(demo_model):
    return make_demo_scenario(demo_model)


@pytest.fixture(scope="session")
def demo_task(demo_model):
    return TaskSpec(id=1, model=demo_model, origin_target=1, created_at=0.0,
                    max_latency=60.0)


def finite_difference_check(loss_fn, params, analytic_grads, *, eps=1e-5,
                            probes=12, rng=None):
    """Worst relative error of analytic vs central-difference gradients over
    a sample of coordinates from every tensor."""
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for li, (w, b) in enumerate(params):
        for arr, garr in ((w, analytic_grads[li][0]),
                          (b, analytic_grads[li][1])):
            flat = arr.reshape(-1)
            gflat = np.asarray(garr).reshape(-1)
            picks = rng.choice(flat.size, size=min(probes, flat.size),
                               replace=False)
            for j in picks:
                old = flat[j]
                flat[j] = old + eps
                lp = loss_fn(params)
                flat[j] = old - eps
                lm = loss_fn(params)
                flat[j] = old
                fd = (lp - lm) / (2.0 * eps)
                worst = max(worst, abs(fd - gflat[j]) / max(1.0, abs(fd)))
    return worst
