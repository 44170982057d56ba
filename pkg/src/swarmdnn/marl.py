"""Diffusion-actor multi-agent actor-critic trainer with baselines.

Per agent: an actor (reverse-denoising generator, or a plain MLP head for
the baseline), a centralized critic over all observations and one-hot
actions, target copies of both, and plain SGD (optional adaptive moments
behind a flag).  The training loop is bit-deterministic given the config
seed: every random draw comes from streams spawned off one seed sequence.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, fields

import numpy as np

from . import assignment, diffusion
from .assignment import AssignmentDecision, FleetState
from .diffusion import DenoiserNet, NoiseSchedule
from .env import EnvConfig, SwarmEnv
from .scenario import Scenario, TaskSpec


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 100
    batch: int = 512
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    discount: float = 0.9
    tau_soft: float = 0.01
    eps0: float = 0.9
    eps_decay: float = 1e-4
    eps_min: float = 0.05
    buffer_capacity: int = 100_000
    update_every: int = 1
    aux_bc_weight: float = 0.0
    target_noise: float = 0.0
    use_adam: bool = False
    shared_critic: bool = False
    algo: str = "gdm-maddpg"  # "gdm-maddpg" | "maddpg"
    diffusion_T: int = diffusion.DEFAULT_T
    softmax_temp: float = 1.0
    eval_every: int = 10
    eval_episodes: int = 3
    critic_hidden: tuple = (256, 256, 256)
    actor_hidden: tuple = diffusion.HIDDEN_WIDTHS
    seed: int = 0

    def replace(self, **kw) -> "TrainConfig":
        cur = {f.name: getattr(self, f.name) for f in fields(self)}
        cur.update(kw)
        return TrainConfig(**cur)


class ReplayBuffer:
    """FIFO ring over joint transitions, uniform no-replacement sampling."""

    def __init__(self, capacity: int, num_agents: int, obs_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, num_agents, obs_dim))
        self.act = np.zeros((capacity, num_agents), dtype=np.int64)
        self.rew = np.zeros((capacity, num_agents))
        self.obs2 = np.zeros((capacity, num_agents, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def add(self, obs, act, rew, obs2, done: bool) -> None:
        i = self._next
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.obs2[i] = obs2
        self.done[i] = done
        self._next = (self._next + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> dict:
        idx = rng.choice(self.size, size=batch, replace=False)
        return {"obs": self.obs[idx], "act": self.act[idx],
                "rew": self.rew[idx], "obs2": self.obs2[idx],
                "done": self.done[idx]}


@dataclass
class AgentLearner:
    kind: str  # "diffusion" | "mlp"
    actor: object
    critic: list
    actor_target: object
    critic_target: list
    opt_state: dict = field(default_factory=dict)

    def actor_params(self) -> list:
        return self.actor.params if self.kind == "diffusion" else self.actor

    def actor_target_params(self) -> list:
        return (self.actor_target.params if self.kind == "diffusion"
                else self.actor_target)


def build_agents(num_agents: int, obs_dim: int, action_dim: int,
                 config: TrainConfig, rng: np.random.Generator):
    """Per-agent actors and critics; with `shared_critic` every agent holds
    the same critic (and target) object."""
    critic_in = num_agents * (obs_dim + action_dim)
    shared = shared_target = None
    if config.shared_critic:
        shared = diffusion.init_mlp(rng, (critic_in, *config.critic_hidden, 1))
        shared_target = diffusion.clone_params(shared)
    agents = []
    for _ in range(num_agents):
        if config.algo == "gdm-maddpg":
            actor = DenoiserNet.create(rng, obs_dim, action_dim,
                                       T=config.diffusion_T,
                                       hidden=config.actor_hidden)
            target = DenoiserNet(params=diffusion.clone_params(actor.params),
                                 obs_dim=obs_dim, action_dim=action_dim,
                                 T=actor.T)
            kind = "diffusion"
        elif config.algo == "maddpg":
            actor = diffusion.init_mlp(rng, (obs_dim, *config.actor_hidden,
                                             action_dim))
            target = diffusion.clone_params(actor)
            kind = "mlp"
        else:
            raise ValueError(f"unknown algo {config.algo!r}")
        if config.shared_critic:
            critic, critic_target = shared, shared_target
        else:
            critic = diffusion.init_mlp(rng, (critic_in,
                                              *config.critic_hidden, 1))
            critic_target = diffusion.clone_params(critic)
        agents.append(AgentLearner(kind=kind, actor=actor, critic=critic,
                                   actor_target=target,
                                   critic_target=critic_target))
    return agents


def critic_forward(critic: list, obs_all, act_onehot_all):
    """Scalar Q per batch row from flattened joint observations/actions."""
    batch = obs_all.shape[0]
    inp = np.concatenate([obs_all.reshape(batch, -1),
                          act_onehot_all.reshape(batch, -1)], axis=1)
    out, cache = diffusion.mlp_forward(critic, inp)
    return out[:, 0], cache


def one_hot(actions, action_dim: int) -> np.ndarray:
    actions = np.asarray(actions, dtype=np.int64)
    out = np.zeros(actions.shape + (action_dim,))
    np.put_along_axis(out, actions[..., None], 1.0, axis=-1)
    return out


def soft_update(online: list, target: list, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, elementwise in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    for (w, b), (tw, tb) in zip(online, target):
        tw *= 1.0 - tau
        tw += tau * w
        tb *= 1.0 - tau
        tb += tau * b


def td_target(reward, q_next, done, discount: float):
    """y = r + gamma * Q' on non-terminal steps, y = r on terminal ones."""
    return reward + discount * np.where(done, 0.0, q_next)


def _sgd_step(params: list, grads: list, lr: float, learner: AgentLearner,
              key: str, config: TrainConfig) -> None:
    if not config.use_adam:
        diffusion.add_scaled(params, grads, -lr)
        return
    state = learner.opt_state.setdefault(
        key, {"m": diffusion.zeros_like_params(params),
              "v": diffusion.zeros_like_params(params), "t": 0})
    state["t"] += 1
    b1, b2, eps = 0.9, 0.999, 1e-8
    t = state["t"]
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(params, grads,
                                                    state["m"], state["v"]):
        for arr, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** t)
            vhat = v / (1 - b2 ** t)
            arr -= lr * mhat / (np.sqrt(vhat) + eps)


def _target_actions(agents, obs2, schedule: NoiseSchedule, action_dim: int,
                    rng: np.random.Generator, config: TrainConfig):
    """Greedy one-hot actions from target actors on next observations.

    Chains run deterministically (x_T = 0, no fresh noise) so the TD target
    is a pure per-sample function; `target_noise` re-enables scaled noise.
    """
    batch, num_agents = obs2.shape[:2]
    acts = np.zeros((batch, num_agents), dtype=np.int64)
    for j, agent in enumerate(agents):
        if agent.kind == "diffusion":
            if config.target_noise > 0.0:
                x = config.target_noise * rng.standard_normal((batch, action_dim))
                fresh = config.target_noise * rng.standard_normal(
                    (schedule.T - 1, batch, action_dim))
            else:
                x = np.zeros((batch, action_dim))
                fresh = None
            x0, _ = diffusion.generate_chain_batch(obs2[:, j],
                                                   agent.actor_target,
                                                   schedule, x, fresh)
            acts[:, j] = np.argmax(x0, axis=1)
        else:
            logits, _ = diffusion.mlp_forward(agent.actor_target, obs2[:, j])
            acts[:, j] = np.argmax(logits, axis=1)
    return one_hot(acts, action_dim)


def update_critic(agents, i: int, batch: dict, schedule: NoiseSchedule,
                  action_dim: int, config: TrainConfig,
                  rng: np.random.Generator) -> float:
    """One TD step on agent i's critic; returns the pre-step loss."""
    agent = agents[i]
    n = batch["obs"].shape[0]
    act_oh = one_hot(batch["act"], action_dim)
    a_next = _target_actions(agents, batch["obs2"], schedule, action_dim,
                             rng, config)
    q_next, _ = critic_forward(agent.critic_target, batch["obs2"], a_next)
    y = td_target(batch["rew"][:, i], q_next, batch["done"], config.discount)
    q, cache = critic_forward(agent.critic, batch["obs"], act_oh)
    err = q - y
    loss = float((err ** 2).mean())
    grad_q = (2.0 * err / n)[:, None]
    grads, _ = diffusion.mlp_backward(agent.critic, cache, grad_q)
    _sgd_step(agent.critic, grads, config.critic_lr, agents[i], "critic", config)
    return loss


def _softmax(x, temp: float):
    z = x / temp
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def update_actor(agents, i: int, batch: dict, schedule: NoiseSchedule,
                 action_dim: int, config: TrainConfig,
                 rng: np.random.Generator) -> float:
    """Ascend agent i's expected Q through the full reverse chain.

    The agent's buffer action is replaced by the softmax-relaxed decode of a
    freshly generated x0; other agents keep their buffer actions.  Returns
    the pre-step loss (-mean Q).
    """
    agent = agents[i]
    n = batch["obs"].shape[0]
    obs_i = batch["obs"][:, i]

    if agent.kind == "diffusion":
        x_T = rng.standard_normal((n, action_dim))
        fresh = rng.standard_normal((schedule.T - 1, n, action_dim))
        x0, chain = diffusion.generate_chain_batch(obs_i, agent.actor,
                                                   schedule, x_T, fresh)
    else:
        x0, mlp_cache = diffusion.mlp_forward(agent.actor, obs_i)

    p = _softmax(x0, config.softmax_temp)
    act_oh = one_hot(batch["act"], action_dim)
    act_oh[:, i, :] = p
    q, cache = critic_forward(agent.critic, batch["obs"], act_oh)
    loss = float(-q.mean())

    grad_q = np.full((n, 1), -1.0 / n)
    _, grad_in = diffusion.mlp_backward(agent.critic, cache, grad_q)
    obs_flat = batch["obs"].shape[1] * batch["obs"].shape[2]
    grad_p = grad_in[:, obs_flat + i * action_dim:
                     obs_flat + (i + 1) * action_dim]
    # softmax jacobian, rowwise
    grad_x0 = (p * (grad_p - (grad_p * p).sum(axis=1, keepdims=True))
               / config.softmax_temp)

    if agent.kind == "diffusion":
        grads = diffusion.chain_backward(grad_x0, agent.actor, schedule, chain)
        if config.aux_bc_weight > 0.0:
            good = batch["rew"][:, i] >= np.median(batch["rew"][:, i])
            if good.any():
                bc_targets = one_hot(batch["act"][good, i], action_dim)
                _, bc_grads = diffusion.denoising_loss(
                    agent.actor, bc_targets, batch["obs"][good, i],
                    schedule, rng, with_grads=True)
                for (gw, gb), (bw, bb) in zip(grads, bc_grads):
                    gw += config.aux_bc_weight * bw
                    gb += config.aux_bc_weight * bb
        _sgd_step(agent.actor.params, grads, config.actor_lr, agent,
                  "actor", config)
    else:
        grads, _ = diffusion.mlp_backward(agent.actor, mlp_cache, grad_x0)
        _sgd_step(agent.actor, grads, config.actor_lr, agent, "actor", config)
    return loss


# ---------------------------------------------------------------------------
# action selection
# ---------------------------------------------------------------------------

def select_action(agent: AgentLearner, obs, mask, schedule: NoiseSchedule,
                  rng: np.random.Generator, epsilon: float) -> int:
    """Epsilon-greedy over feasible actions; greedy decode is the
    feasibility-masked argmax of the generated logits.  At epsilon 0 the
    diffusion chain runs in its deterministic evaluation mode."""
    feasible = np.flatnonzero(mask)
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.choice(feasible))
    if agent.kind == "diffusion":
        logits = diffusion.generate_action_logits(
            obs, agent.actor, schedule, rng if epsilon > 0.0 else None)
    else:
        logits, _ = diffusion.mlp_forward(agent.actor, obs)
        logits = np.asarray(logits).ravel()
    masked = np.where(mask, logits, -np.inf)
    return int(np.argmax(masked))


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainLog:
    rows: list = field(default_factory=list)

    HEADER = ("episode", "total_reward", "actor_loss", "critic_loss",
              "eval_utility", "oracle_ratio")

    def add(self, episode, total_reward, actor_loss, critic_loss,
            eval_utility, oracle_ratio) -> None:
        self.rows.append([episode, repr(float(total_reward)),
                          repr(float(actor_loss)), repr(float(critic_loss)),
                          repr(float(eval_utility)), repr(float(oracle_ratio))])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for row in self.rows:
            w.writerow(row)
        return buf.getvalue()

    def column(self, name: str) -> list:
        j = self.HEADER.index(name)
        return [float(r[j]) for r in self.rows]


def evaluate_policy(env: SwarmEnv, agents, schedule: NoiseSchedule,
                    rng: np.random.Generator, episodes: int) -> dict:
    """Greedy-decode rollouts; returns mean metrics over episodes."""
    utils, aois, etas = [], [], []
    for _ in range(episodes):
        obs = env.reset(seed=int(rng.integers(2 ** 31)))
        while not env.done:
            actions = [select_action(agents[i], obs[i], env.feasible_mask(i),
                                     schedule, rng, epsilon=0.0)
                       for i in range(env.num_agents)]
            res = env.step(actions)
            obs = res.observations
        m = env.episode_metrics()
        utils.append(m["utility"])
        aois.append(m["aoi_s"])
        etas.append(m["eta"])
    return {"utility": float(np.mean(utils)),
            "aoi_s": float(np.nanmean(aois)),
            "eta": float(np.mean(etas))}


def train(scenario: Scenario, route, config: TrainConfig,
          env_config: EnvConfig | None = None,
          oracle_utility: float | None = None) -> TrainLog:
    """Full training loop; bit-deterministic given config.seed."""
    env_config = env_config or EnvConfig()
    env = SwarmEnv(scenario, route, env_config, seed=config.seed)
    schedule = diffusion.make_schedule(config.diffusion_T)
    ss = np.random.SeedSequence(config.seed)
    init_rng, act_rng, upd_rng, eval_rng, reset_rng = (
        np.random.default_rng(s) for s in ss.spawn(5))
    agents = build_agents(env.num_agents, env.obs_dim, env.action_dim,
                          config, init_rng)
    buffer = ReplayBuffer(config.buffer_capacity, env.num_agents, env.obs_dim)
    eval_env = SwarmEnv(scenario, route, env_config, seed=config.seed)

    log = TrainLog()
    epsilon = config.eps0
    global_step = 0
    last_eval = float("nan")
    for episode in range(config.episodes):
        obs = env.reset(seed=int(reset_rng.integers(2 ** 31)))
        ep_reward = 0.0
        actor_losses, critic_losses = [], []
        while not env.done:
            actions = [select_action(agents[i], obs[i], env.feasible_mask(i),
                                     schedule, act_rng, epsilon)
                       for i in range(env.num_agents)]
            res = env.step(actions)
            buffer.add(np.stack(obs), actions, res.rewards,
                       np.stack(res.observations), res.done)
            obs = res.observations
            ep_reward += float(res.rewards.sum())
            global_step += 1
            epsilon = max(config.eps_min,
                          config.eps0 * (1.0 - config.eps_decay) ** global_step)
            if (buffer.size >= config.batch
                    and global_step % config.update_every == 0):
                batch = buffer.sample(config.batch, upd_rng)
                for i in range(env.num_agents):
                    critic_losses.append(update_critic(
                        agents, i, batch, schedule, env.action_dim, config,
                        upd_rng))
                for i in range(env.num_agents):
                    actor_losses.append(update_actor(
                        agents, i, batch, schedule, env.action_dim, config,
                        upd_rng))
                seen_critics = set()
                for agent in agents:
                    soft_update(agent.actor_params(),
                                agent.actor_target_params(), config.tau_soft)
                    if id(agent.critic) not in seen_critics:
                        soft_update(agent.critic, agent.critic_target,
                                    config.tau_soft)
                        seen_critics.add(id(agent.critic))
        if (episode + 1) % config.eval_every == 0 or episode == config.episodes - 1:
            last_eval = evaluate_policy(eval_env, agents, schedule, eval_rng,
                                        config.eval_episodes)["utility"]
        ratio = (last_eval / oracle_utility
                 if oracle_utility not in (None, 0.0) else float("nan"))
        log.add(episode, ep_reward,
                float(np.mean(actor_losses)) if actor_losses else float("nan"),
                float(np.mean(critic_losses)) if critic_losses else float("nan"),
                last_eval, ratio)
    log.agents = agents
    return log


def checkpoint_agents(agents, path) -> None:
    named = {}
    for i, agent in enumerate(agents):
        named[f"agent{i}/actor"] = agent.actor_params()
        named[f"agent{i}/critic"] = agent.critic
    diffusion.save_params(path, named)


def load_agent_actors(path, obs_dim: int, action_dim: int,
                      config: TrainConfig):
    """Rebuild rollout-ready agents (actors only) from a checkpoint."""
    named = diffusion.load_params(path)
    agents = []
    i = 0
    while f"agent{i}/actor" in named:
        params = [(w.copy(), b.copy()) for w, b in named[f"agent{i}/actor"]]
        critic = [(w.copy(), b.copy()) for w, b in named[f"agent{i}/critic"]]
        if config.algo == "gdm-maddpg":
            actor = DenoiserNet(params=params, obs_dim=obs_dim,
                                action_dim=action_dim, T=config.diffusion_T)
            kind = "diffusion"
        else:
            actor = params
            kind = "mlp"
        agents.append(AgentLearner(kind=kind, actor=actor, critic=critic,
                                   actor_target=actor, critic_target=critic))
        i += 1
    return agents


# ---------------------------------------------------------------------------
# myopic assignment baseline
# ---------------------------------------------------------------------------

def greedy_assignment_baseline(task: TaskSpec, scenario: Scenario,
                               state: FleetState,
                               b_max: int = 4) -> AssignmentDecision:
    """Assign frontier blocks one at a time to the follower (and block size)
    with the best marginal utility until the task is fully assigned or no
    feasible extension remains.  Consecutive blocks on the same follower
    merge into one stage; a follower may reappear later in the pipeline.
    """
    num_layers = len(task.model.layers)
    followers = [u.id for u in scenario.followers]
    stages: list[tuple[int, int, int]] = []
    frontier = 0
    prev_total = None
    while frontier < num_layers:
        best = None
        for fid in followers:
            for b in range(1, min(b_max, num_layers - frontier) + 1):
                if stages and stages[-1][0] == fid:
                    cand = stages[:-1] + [(fid, stages[-1][1], frontier + b)]
                else:
                    cand = stages + [(fid, frontier + 1, frontier + b)]
                report = assignment.evaluate_stages_utility(cand, task,
                                                            scenario, state)
                if set(report.violated) & {"C1", "C2", "C3", "C4", "C5"}:
                    continue
                marginal = (report.total if prev_total is None
                            else report.total - prev_total)
                key = (-marginal, fid, b)
                if best is None or key < best[0]:
                    best = (key, cand, frontier + b, report.total)
        if best is None:
            break
        _, stages, frontier, prev_total = best
    return AssignmentDecision(
        task_id=task.id,
        executors=tuple(s[0] for s in stages),
        split_points=tuple(s[2] for s in stages[:-1]))
