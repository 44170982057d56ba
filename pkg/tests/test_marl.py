import numpy as np
import pytest

from swarmdnn import diffusion as D
from swarmdnn import marl
from swarmdnn.assignment import FleetState
from swarmdnn.env import EnvConfig
from swarmdnn.marl import (ReplayBuffer, TrainConfig, build_agents,
                           critic_forward, greedy_assignment_baseline,
                           one_hot, soft_update, td_target, train)
from swarmdnn.pathplan import route_from_order
from swarmdnn.scenario import (DnnModelProfile, LayerProfile, TaskSpec,
                               Weights)

from conftest import finite_difference_check, make_demo_scenario


# --- replay buffer ----------------------------------------------------------

def test_buffer_fifo_eviction_fuzz():
    rng = np.random.default_rng(0)
    buf = ReplayBuffer(capacity=16, num_agents=2, obs_dim=3)
    for i in range(50):
        obs = np.full((2, 3), float(i))
        buf.add(obs, [0, 1], np.zeros(2), obs, False)
        assert buf.size <= 16
    # the oldest retained transition is i = 50 - 16
    stored = sorted(buf.obs[:, 0, 0].tolist())
    assert stored == [float(v) for v in range(34, 50)]


def test_buffer_sample_without_replacement():
    rng = np.random.default_rng(1)
    buf = ReplayBuffer(capacity=8, num_agents=1, obs_dim=1)
    for i in range(8):
        buf.add(np.full((1, 1), float(i)), [0], np.zeros(1),
                np.zeros((1, 1)), False)
    batch = buf.sample(8, rng)
    assert sorted(batch["obs"][:, 0, 0].tolist()) == [float(i) for i in range(8)]


# --- target nets and updates -------------------------------------------------

def test_soft_update_endpoints_and_decay():
    online = [(np.full((2, 2), 2.0), np.full(2, 2.0))]
    target = [(np.zeros((2, 2)), np.zeros(2))]
    soft_update(online, target, tau=0.5)
    assert np.allclose(target[0][0], 1.0)
    soft_update(online, target, tau=1.0)
    assert np.allclose(target[0][0], 2.0)
    # geometric decay: the gap halves every update at tau = 0.5
    target = [(np.zeros((2, 2)), np.zeros(2))]
    gaps = []
    for _ in range(5):
        soft_update(online, target, 0.5)
        gaps.append(np.abs(target[0][0] - 2.0).max())
    assert all(b == pytest.approx(a / 2.0) for a, b in zip(gaps, gaps[1:]))
    with pytest.raises(ValueError):
        soft_update(online, target, 0.0)


def test_td_target_cases():
    assert td_target(1.0, 5.0, True, 0.9) == 1.0
    assert td_target(1.0, 5.0, False, 0.0) == 1.0
    assert td_target(1.0, 2.0, False, 0.9) == pytest.approx(2.8)


def _setup(num_agents=2, obs_dim=3, action_dim=4, algo="gdm-maddpg", seed=0,
           **kw):
    cfg = TrainConfig(algo=algo, actor_hidden=(16,), critic_hidden=(16,),
                      diffusion_T=4, seed=seed, **kw)
    rng = np.random.default_rng(seed)
    agents = build_agents(num_agents, obs_dim, action_dim, cfg, rng)
    sched = D.make_schedule(cfg.diffusion_T)
    return cfg, agents, sched


def _random_batch(rng, n, num_agents, obs_dim, action_dim):
    return {"obs": rng.standard_normal((n, num_agents, obs_dim)),
            "act": rng.integers(0, action_dim, size=(n, num_agents)),
            "rew": rng.standard_normal((n, num_agents)),
            "obs2": rng.standard_normal((n, num_agents, obs_dim)),
            "done": rng.random(n) < 0.2}


def test_critic_zero_weights_zero_q():
    cfg, agents, _ = _setup()
    for w, b in agents[0].critic:
        w[...] = 0.0
        b[...] = 0.0
    rng = np.random.default_rng(0)
    q, _ = critic_forward(agents[0].critic,
                          rng.standard_normal((5, 2, 3)),
                          one_hot(rng.integers(0, 4, (5, 2)), 4))
    assert np.array_equal(q, np.zeros(5))


def test_critic_sensitive_to_other_agents_blocks():
    cfg, agents, _ = _setup()
    rng = np.random.default_rng(3)
    obs = rng.standard_normal((1, 2, 3))
    a1 = one_hot(np.array([[0, 1]]), 4)
    a2 = one_hot(np.array([[0, 2]]), 4)  # other agent's action changed
    q1, _ = critic_forward(agents[0].critic, obs, a1)
    q2, _ = critic_forward(agents[0].critic, obs, a2)
    assert q1[0] != q2[0]


def test_critic_gradient_matches_finite_differences():
    cfg, agents, _ = _setup()
    rng = np.random.default_rng(1)
    obs = rng.standard_normal((4, 2, 3))
    act = one_hot(rng.integers(0, 4, (4, 2)), 4)

    def loss_fn(params):
        q, _ = critic_forward(params, obs, act)
        return float((q ** 2).sum())

    q, cache = critic_forward(agents[0].critic, obs, act)
    grads, _ = D.mlp_backward(agents[0].critic, cache, (2.0 * q)[:, None])
    assert finite_difference_check(loss_fn, agents[0].critic, grads) < 1e-4


def test_update_critic_zero_error_keeps_params():
    cfg, agents, sched = _setup()
    for agent in agents:
        for net in (agent.critic, agent.critic_target):
            for w, b in net:
                w[...] = 0.0
                b[...] = 0.0
    rng = np.random.default_rng(0)
    batch = _random_batch(rng, 8, 2, 3, 4)
    batch["rew"] = np.zeros((8, 2))
    before = [w.copy() for w, _ in agents[0].critic]
    loss = marl.update_critic(agents, 0, batch, sched, 4, cfg,
                              np.random.default_rng(1))
    assert loss == 0.0
    for (w, _), w0 in zip(agents[0].critic, before):
        assert np.array_equal(w, w0)


def test_update_critic_mean_invariance():
    rng = np.random.default_rng(5)
    sample = _random_batch(rng, 1, 2, 3, 4)
    dup = {k: np.repeat(v, 4, axis=0) for k, v in sample.items()}

    results = []
    for batch in (sample, dup):
        cfg, agents, sched = _setup(seed=7, target_noise=0.0)
        marl.update_critic(agents, 0, batch, sched, 4, cfg,
                           np.random.default_rng(2))
        results.append([w.copy() for w, _ in agents[0].critic])
    for w1, w2 in zip(*results):
        assert np.allclose(w1, w2, atol=1e-12)


def test_update_critic_loss_decreases_on_frozen_batch():
    cfg, agents, sched = _setup(seed=2, critic_lr=1e-2)
    rng = np.random.default_rng(2)
    batch = _random_batch(rng, 32, 2, 3, 4)
    batch["done"] = np.ones(32, dtype=bool)  # y = r, a fixed target
    losses = [marl.update_critic(agents, 0, batch, sched, 4, cfg,
                                 np.random.default_rng(3))
              for _ in range(100)]
    assert losses[-1] < losses[0] / 2.0


def test_update_actor_constant_critic_no_movement():
    cfg, agents, sched = _setup()
    for w, b in agents[0].critic:
        w[...] = 0.0
        b[...] = 0.0
    rng = np.random.default_rng(0)
    batch = _random_batch(rng, 8, 2, 3, 4)
    before = [w.copy() for w, _ in agents[0].actor_params()]
    loss = marl.update_actor(agents, 0, batch, sched, 4, cfg,
                             np.random.default_rng(1))
    assert loss == pytest.approx(0.0)
    for (w, _), w0 in zip(agents[0].actor_params(), before):
        assert np.allclose(w, w0, atol=1e-15)


def test_update_actor_moves_toward_higher_q():
    cfg, agents, sched = _setup(actor_lr=1e-2)
    rng = np.random.default_rng(4)
    batch = _random_batch(rng, 16, 2, 3, 4)
    losses = [marl.update_actor(agents, 0, batch, sched, 4, cfg,
                                np.random.default_rng(9))
              for _ in range(60)]
    assert losses[-1] < losses[0]  # -mean Q decreases


def test_shared_critic_flag():
    cfg, agents, sched = _setup(shared_critic=True)
    assert agents[0].critic is agents[1].critic
    assert agents[0].critic_target is agents[1].critic_target
    rng = np.random.default_rng(0)
    batch = _random_batch(rng, 8, 2, 3, 4)
    marl.update_critic(agents, 0, batch, sched, 4, cfg,
                       np.random.default_rng(1))
    # the update through agent 0 is visible through agent 1's handle
    q0, _ = critic_forward(agents[1].critic, batch["obs"],
                           one_hot(batch["act"], 4))
    assert np.all(np.isfinite(q0))
    cfg2, separate, _ = _setup(shared_critic=False)
    assert separate[0].critic is not separate[1].critic


def test_adam_option_runs_and_differs():
    rng = np.random.default_rng(5)
    batch = _random_batch(rng, 16, 2, 3, 4)
    weights = []
    for use_adam in (False, True):
        cfg, agents, sched = _setup(seed=3, use_adam=use_adam)
        for _ in range(5):
            marl.update_critic(agents, 0, batch, sched, 4, cfg,
                               np.random.default_rng(0))
        weights.append(agents[0].critic[0][0].copy())
        for w, b in agents[0].critic:
            assert np.all(np.isfinite(w))
    assert not np.allclose(weights[0], weights[1])


def test_aux_bc_weight_changes_actor_update():
    rng = np.random.default_rng(6)
    batch = _random_batch(rng, 16, 2, 3, 4)
    weights = []
    for bc in (0.0, 1.0):
        cfg, agents, sched = _setup(seed=4, aux_bc_weight=bc)
        marl.update_actor(agents, 0, batch, sched, 4, cfg,
                          np.random.default_rng(0))
        w = agents[0].actor_params()[0][0]
        assert np.all(np.isfinite(w))
        weights.append(w.copy())
    assert not np.allclose(weights[0], weights[1])


def test_after_updates_parameters_finite():
    cfg, agents, sched = _setup()
    rng = np.random.default_rng(8)
    batch = _random_batch(rng, 16, 2, 3, 4)
    for _ in range(20):
        marl.update_critic(agents, 0, batch, sched, 4, cfg,
                           np.random.default_rng(0))
        marl.update_actor(agents, 0, batch, sched, 4, cfg,
                          np.random.default_rng(0))
    for w, b in agents[0].actor_params() + agents[0].critic:
        assert np.all(np.isfinite(w)) and np.all(np.isfinite(b))


# --- training loop ----------------------------------------------------------

def _tiny_setup(demo_model, algo="gdm-maddpg", episodes=3, seed=0):
    sc = make_demo_scenario(demo_model)
    route = route_from_order(sc, [1])
    env_conf = EnvConfig(b_max=4, obs_task_slots=1, task_max_latency_s=20.0,
                         leader_executes=False, rounds_per_leg=4)
    cfg = TrainConfig(algo=algo, episodes=episodes, batch=16, update_every=2,
                      eval_every=2, eval_episodes=1, seed=seed,
                      actor_hidden=(32,), critic_hidden=(32,), diffusion_T=4)
    return sc, route, env_conf, cfg


def test_train_zero_episodes(demo_model):
    sc, route, env_conf, cfg = _tiny_setup(demo_model, episodes=0)
    log = train(sc, route, cfg, env_conf)
    assert log.rows == []
    assert log.to_csv().strip() == ",".join(log.HEADER)


def test_train_deterministic_and_seed_sensitive(demo_model):
    sc, route, env_conf, cfg = _tiny_setup(demo_model, episodes=3, seed=5)
    a = train(sc, route, cfg, env_conf)
    b = train(sc, route, cfg, env_conf)
    assert a.rows == b.rows
    c = train(sc, route, cfg.replace(seed=6), env_conf)
    assert a.rows != c.rows


def test_train_algos_differ(demo_model):
    sc, route, env_conf, cfg = _tiny_setup(demo_model, episodes=3)
    g = train(sc, route, cfg, env_conf)
    m = train(sc, route, cfg.replace(algo="maddpg"), env_conf)
    assert g.rows != m.rows


def test_checkpoint_agents_roundtrip(tmp_path, demo_model):
    sc, route, env_conf, cfg = _tiny_setup(demo_model, episodes=2)
    log = train(sc, route, cfg, env_conf)
    path = tmp_path / "agents.ckpt"
    marl.checkpoint_agents(log.agents, path)
    from swarmdnn.env import SwarmEnv
    env = SwarmEnv(sc, route, env_conf, seed=0)
    agents = marl.load_agent_actors(path, env.obs_dim, env.action_dim, cfg)
    assert len(agents) == env.num_agents
    for a, b in zip(agents, log.agents):
        for (w1, b1), (w2, b2) in zip(a.actor_params(), b.actor_params()):
            assert np.array_equal(w1, w2)


# --- myopic baseline ---------------------------------------------------------

def test_baseline_single_follower_binary(demo_model, demo_task):
    sc = make_demo_scenario(demo_model, num_followers=1)
    state = FleetState.initial(sc)
    state.visited_targets.add(1)
    d = greedy_assignment_baseline(demo_task, sc, state, b_max=6)
    assert d.executors == (1,)
    assert d.split_points == ()


def test_baseline_alternates_under_balance_pressure():
    """Two identical followers, free transfers, pure load-balance objective:
    the myopic trace alternates single-layer blocks between them.  Any
    nonzero hop cost would (correctly) favor merging into the last stage."""
    model = DnnModelProfile(kind=1, layers=tuple(
        LayerProfile(i + 1, 1e9, 1e6, 0.0) for i in range(6)))
    task = TaskSpec(1, model, 1, 0.0, 60.0)
    sc = make_demo_scenario(model, num_followers=2,
                            weights=Weights(delta=0.0, epsilon=0.0, theta=1.0))
    state = FleetState.initial(sc)
    state.visited_targets.add(1)
    d = greedy_assignment_baseline(task, sc, state, b_max=4)
    assert d.executors == (1, 2, 1, 2, 1, 2)
    assert d.split_points == (1, 2, 3, 4, 5)


def test_baseline_structural_safety_fuzz(demo_model):
    from swarmdnn.assignment import simulate_pipeline
    rng = np.random.default_rng(0)
    for trial in range(10):
        n_followers = int(rng.integers(1, 4))
        sc = make_demo_scenario(demo_model, num_followers=n_followers)
        state = FleetState.initial(sc)
        state.visited_targets.add(1)
        task = TaskSpec(1, demo_model, 1, 0.0, 60.0)
        d = greedy_assignment_baseline(task, sc, state,
                                       b_max=int(rng.integers(1, 7)))
        result = simulate_pipeline(d, task, sc, state)
        assert "C1" not in result.violated
        assert "C2" not in result.violated
        assert "C3" not in result.violated
        assert result.completed_layers == 6
