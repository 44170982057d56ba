"""Multi-agent decision environment: synchronous assignment rounds over a
planned inspection route.

One ``step`` is one assignment round.  Agents claim contiguous layer blocks
from task frontiers; claims execute in parallel within the round, the clock
advances by the slowest stage (or an idle tick), and inter-stage transfers
are priced whenever a frontier changes hands.  Flight is charged per route
leg on arrival, every UAV paying the same propulsion energy.  Episodes end
when the route (including the return leg) is exhausted and every task is
resolved, or when any UAV's remaining energy falls below its return reserve.

Observation vector layout, in order (all entries min-max normalized to [0,1]):

  for each of ``obs_task_slots`` open tasks (oldest first, zero padding):
      task size / 80 GB, model-kind one-hot (one entry per scenario model),
      completed-layer fraction, remaining-deadline fraction
  per UAV (id order):  remaining energy / cap
  per UAV (id order):  remaining memory / cap
  per UAV (id order):  x / arena, y / arena, z / (2 * base altitude)
  per route target (visit order): x / arena, y / arena
  legs flown / total legs
  agent one-hot

Action index 0 is Idle; index 1 + slot * b_max + (b - 1) claims the next
``b`` frontier layers (clipped to the remaining layers) of the slot-th open
task.  Claims that are structurally impossible or locally violate memory or
energy limits decode to Idle with a penalty flag.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import assignment, physics
from .pathplan import Route
from .scenario import Position3, Scenario, TaskSpec

TASK_SIZE_NORM_GB = 80.0


@dataclass(frozen=True)
class EnvConfig:
    b_max: int = 4
    rounds_per_leg: int = 8
    obs_task_slots: int = 2
    task_max_latency_s: float = 60.0
    gb_per_task: float = 20.0
    leader_executes: bool = True
    idle_slot_s: float = 1.0
    invalid_penalty: float = 0.0


@dataclass
class TaskRuntime:
    spec: TaskSpec
    frontier: int = 0
    resolved: str | None = None      # None | "completed" | "expired"
    last_executor: int | None = None
    ready_at: float = 0.0
    waiting_s: float = 0.0
    transmit_s: float = 0.0
    compute_s: float = 0.0
    energy_by_uav: dict[int, float] = field(default_factory=dict)
    stages: list[tuple[int, int, int]] = field(default_factory=list)
    utility: float | None = None

    @property
    def aoi_s(self) -> float:
        return self.waiting_s + self.transmit_s + self.compute_s

    @property
    def num_layers(self) -> int:
        return len(self.spec.model.layers)


@dataclass
class StepResult:
    observations: list[np.ndarray]
    rewards: np.ndarray
    done: bool
    info: dict


@dataclass(frozen=True)
class EpisodeTrace:
    """Episode summary: per-task latency/AoI, per-UAV energy, completions."""

    task_latency: dict[int, physics.LatencyBreakdown]
    task_aoi_s: dict[int, float]
    task_completed: dict[int, bool]
    uav_energy: dict[int, physics.EnergyBreakdown]
    route_order: tuple[int, ...]


@dataclass
class Intent:
    idle: bool
    task: TaskRuntime | None = None
    block: int = 0
    penalty: bool = False


TRACE_HEADER = ("t", "agent", "action", "task", "layers_done", "aoi_s",
                "e_comp_J", "e_trans_J", "e_fly_J", "reward")


class SwarmEnv:
    """Deterministic given (scenario, route, seed, action sequence)."""

    def __init__(self, scenario: Scenario, route: Route, config: EnvConfig,
                 seed: int = 0):
        self.scenario = scenario
        self.route = route
        self.config = config
        self._seed = seed
        self.agent_ids = sorted(
            u.id for u in scenario.fleet
            if not u.is_leader or config.leader_executes)
        self.num_agents = len(self.agent_ids)
        self.action_dim = 1 + config.obs_task_slots * config.b_max
        self._kinds = sorted(m.kind for m in scenario.models)
        self._arena = max(
            [abs(t.center.x) for t in scenario.targets]
            + [abs(t.center.y) for t in scenario.targets]
            + [abs(scenario.base.x), abs(scenario.base.y), 1.0])
        self._alt_norm = 2.0 * max(scenario.base.z, 1.0)
        self.obs_dim = (config.obs_task_slots * (3 + len(self._kinds))
                        + 5 * len(scenario.fleet)
                        + 2 * len(route.order) + 1 + self.num_agents)
        self._offsets = {u.id: (u.position.x - scenario.leader.position.x,
                                u.position.y - scenario.leader.position.y,
                                u.position.z - scenario.leader.position.z)
                         for u in scenario.fleet}
        self._done = True

    # -- lifecycle -----------------------------------------------------------

    def reset(self, seed: int | None = None) -> list[np.ndarray]:
        if seed is not None:
            self._seed = seed
        rng = np.random.default_rng(self._seed)
        sc = self.scenario
        self.state = assignment.FleetState.initial(sc)
        self.energy = {u.id: physics.EnergyBreakdown() for u in sc.fleet}
        self.tasks: list[TaskRuntime] = []
        self._legs_flown = 0
        self._rounds_on_leg = 0
        self._steps = 0
        self._next_task_id = 1
        self._hard_stop = False
        self._done = False
        self._trace_rows: list[list] = []
        # one shadow-fading draw per (leg, ordered UAV pair), zero when the
        # scenario's sigma is zero
        n = len(sc.fleet)
        sigma = sc.radio.shadow_sigma_db
        self._shadow = (rng.normal(0.0, sigma, size=(self.route.num_legs, n, n))
                        if sigma > 0.0 else np.zeros((self.route.num_legs, n, n)))
        self._uav_index = {u.id: i for i, u in
                           enumerate(sorted(sc.fleet, key=lambda u: u.id))}
        # tasks of the first target are visible from the start; they are
        # created (data collected) at the arrival time of leg 1
        self._spawn_tasks(self.route.order[0],
                          created_at=self._leg_arrival_time(0))
        return [self._observe(i) for i in range(self.num_agents)]

    def _leg_arrival_time(self, leg_idx: int) -> float:
        total = self.state.clock_s
        total += self.route.leg_distances_m[leg_idx] / self.scenario.flight.speed_m_s
        return total

    def _spawn_tasks(self, target_id: int, created_at: float) -> None:
        target = self.scenario.target(target_id)
        model = self.scenario.model_for(target.dnn_type)
        count = max(1, math.ceil(target.task_size_gb / self.config.gb_per_task))
        for _ in range(count):
            spec = TaskSpec(id=self._next_task_id, model=model,
                            origin_target=target_id, created_at=created_at,
                            max_latency=self.config.task_max_latency_s)
            task = TaskRuntime(spec=spec, ready_at=created_at)
            self.tasks.append(task)
            self._next_task_id += 1

    def _fly_leg(self) -> None:
        leg = self._legs_flown
        sc = self.scenario
        t_leg = self.route.leg_distances_m[leg] / sc.flight.speed_m_s
        p_fly = physics.propulsion_power(sc.flight.speed_m_s, sc.flight)
        e_leg = p_fly * t_leg
        for u in sc.fleet:
            self.state.remaining_energy_j[u.id] -= e_leg
            self.energy[u.id].flight_j += e_leg
        self.state.clock_s += t_leg
        self._legs_flown += 1
        self._rounds_on_leg = 0
        if leg < len(self.route.order):
            tid = self.route.order[leg]
            self.state.visited_targets.add(tid)
            # leader (and formation) now hover over this target
            tgt = sc.target(tid)
            for uid, (dx, dy, dz) in self._offsets.items():
                self.state.uav_positions[uid] = Position3(
                    tgt.center.x + dx, tgt.center.y + dy, sc.base.z + dz)
            if leg > 0:
                self._spawn_tasks(tid, created_at=self.state.clock_s)

    # -- decoding ------------------------------------------------------------

    def open_tasks(self) -> list[TaskRuntime]:
        pending = [t for t in self.tasks if t.resolved is None]
        pending.sort(key=lambda t: (t.spec.created_at, t.spec.id))
        return pending[:self.config.obs_task_slots]

    def _block_layers(self, task: TaskRuntime, b: int):
        lo = task.frontier + 1
        hi = min(task.frontier + b, task.num_layers)
        return task.spec.model.layers[lo - 1:hi], lo, hi

    def _claim_feasible(self, agent_id: int, task: TaskRuntime, b: int) -> bool:
        if task.resolved is not None:
            return False
        if self.state.clock_s - task.spec.created_at > task.spec.max_latency:
            return False
        layers, lo, hi = self._block_layers(task, b)
        uav = self.scenario.uav(agent_id)
        if sum(l.memory_bytes for l in layers) > self.state.remaining_memory_b[agent_id]:
            return False
        e_cmp = physics.compute_energy(layers, uav.compute_cycles_per_s,
                                       self.scenario.weights.k0)
        if self.state.remaining_energy_j[agent_id] - e_cmp < 0.0:
            return False
        return True

    def encode_action(self, slot: int, block: int) -> int:
        """Index of 'claim `block` layers of open-task `slot`'; inverse of
        the (slot, block) part of decode_action."""
        if not (0 <= slot < self.config.obs_task_slots
                and 1 <= block <= self.config.b_max):
            raise ValueError(f"slot {slot} / block {block} out of range")
        return 1 + slot * self.config.b_max + (block - 1)

    def decode_action(self, action: int, agent_idx: int) -> Intent:
        if action == 0:
            return Intent(idle=True)
        if not 0 < action < self.action_dim:
            raise ValueError(f"action {action} outside [0, {self.action_dim})")
        slot, b = divmod(action - 1, self.config.b_max)
        b += 1
        open_tasks = self.open_tasks()
        if slot >= len(open_tasks):
            return Intent(idle=True, penalty=True)
        task = open_tasks[slot]
        agent_id = self.agent_ids[agent_idx]
        if not self._claim_feasible(agent_id, task, b):
            return Intent(idle=True, penalty=True)
        return Intent(idle=False, task=task, block=b)

    def feasible_mask(self, agent_idx: int) -> np.ndarray:
        """Local feasibility of each action index for this agent now."""
        mask = np.zeros(self.action_dim, dtype=bool)
        mask[0] = True
        open_tasks = self.open_tasks()
        agent_id = self.agent_ids[agent_idx]
        for slot, task in enumerate(open_tasks):
            for b in range(1, self.config.b_max + 1):
                if self._claim_feasible(agent_id, task, b):
                    mask[1 + slot * self.config.b_max + (b - 1)] = True
        return mask

    # -- stepping ------------------------------------------------------------

    def step(self, actions) -> StepResult:
        if self._done:
            raise RuntimeError("step() called on a finished episode")
        if len(actions) != self.num_agents:
            raise ValueError(f"expected {self.num_agents} actions")
        sc = self.scenario
        cfg = self.config

        if self._legs_flown == 0:
            self._fly_leg()

        round_start = self.state.clock_s
        intents = [self.decode_action(int(a), i) for i, a in enumerate(actions)]

        # contention: one claimant per task, lowest agent id wins
        claimed: dict[int, int] = {}
        for idx in range(self.num_agents):
            it = intents[idx]
            if it.idle:
                continue
            tid = it.task.spec.id
            if tid in claimed:
                intents[idx] = Intent(idle=True, penalty=True)
            else:
                claimed[tid] = idx

        spend = {uid: 0.0 for uid in self.state.remaining_energy_j}
        resolved_now: list[TaskRuntime] = []
        durations = []
        for idx in range(self.num_agents):
            it = intents[idx]
            if it.idle:
                continue
            agent_id = self.agent_ids[idx]
            task = it.task
            layers, lo, hi = self._block_layers(task, it.block)
            uav = sc.uav(agent_id)

            t_in = 0.0
            if task.last_executor is not None and task.last_executor != agent_id:
                bits = task.spec.model.layers[task.frontier - 1].output_bits
                sender = sc.uav(task.last_executor)
                shadow = self._shadow[self._legs_flown - 1,
                                      self._uav_index[sender.id],
                                      self._uav_index[agent_id]]
                link = physics.link_between(
                    replace(sender,
                            position=self.state.uav_positions[sender.id]),
                    self.state.uav_positions[agent_id], sc.radio, float(shadow))
                t_in, e_tr = physics.transmit_time_energy(
                    bits, link.rate_bps, sender.tx_power_w)
                spend[sender.id] += e_tr
                self.energy[sender.id].transmit_j += e_tr
                task.energy_by_uav[sender.id] = (
                    task.energy_by_uav.get(sender.id, 0.0) + e_tr)
                task.transmit_s += t_in
            e_cmp = physics.compute_energy(layers, uav.compute_cycles_per_s,
                                           sc.weights.k0)
            t_cmp = physics.compute_time(layers, uav.compute_cycles_per_s)
            spend[agent_id] += e_cmp
            self.energy[agent_id].compute_j += e_cmp
            task.energy_by_uav[agent_id] = (
                task.energy_by_uav.get(agent_id, 0.0) + e_cmp)

            task.waiting_s += round_start - task.ready_at
            task.compute_s += t_cmp
            task.ready_at = round_start + t_in + t_cmp
            task.frontier = hi
            task.last_executor = agent_id
            task.stages.append((agent_id, lo, hi))
            durations.append(t_in + t_cmp)

            if task.frontier == task.num_layers:
                late = task.aoi_s > task.spec.max_latency
                task.resolved = "expired" if late else "completed"
                resolved_now.append(task)

        for uid, e in spend.items():
            self.state.remaining_energy_j[uid] -= e

        has_pending = any(t.resolved is None for t in self.tasks)
        if durations:
            delta = max(durations)
        else:
            delta = cfg.idle_slot_s if has_pending else 0.0
        self.state.clock_s = round_start + delta

        # deadline expiry sweep
        for task in self.tasks:
            if task.resolved is None and (self.state.clock_s
                                          - task.spec.created_at
                                          > task.spec.max_latency):
                task.resolved = "expired"
                task.waiting_s = ((self.state.clock_s - task.spec.created_at)
                                  - task.transmit_s - task.compute_s)
                resolved_now.append(task)

        for task in resolved_now:
            task.utility = self._task_utility(task)

        rewards = self._rewards(intents, spend, resolved_now)

        # leg advance / termination
        self._rounds_on_leg += 1
        self._steps += 1
        current_target = (self.route.order[self._legs_flown - 1]
                          if self._legs_flown <= len(self.route.order) else None)
        target_open = any(t.resolved is None
                          and t.spec.origin_target == current_target
                          for t in self.tasks)
        if (not target_open or self._rounds_on_leg >= cfg.rounds_per_leg):
            if self._legs_flown < self.route.num_legs:
                self._fly_leg()

        reserve_breached = any(
            self.state.remaining_energy_j[uid]
            < assignment.rendezvous_energy(uid, sc, self.state)
            for uid in self.state.remaining_energy_j)
        if reserve_breached:
            self._hard_stop = True
        all_resolved = all(t.resolved is not None for t in self.tasks)
        route_done = self._legs_flown >= self.route.num_legs
        self._done = (self._hard_stop
                      or (route_done and (all_resolved or self._rounds_on_leg
                                          >= cfg.rounds_per_leg)))

        info = {
            "clock_s": self.state.clock_s,
            "resolved": [t.spec.id for t in resolved_now],
            "task_utilities": {t.spec.id: t.utility for t in resolved_now},
            "hard_stop": self._hard_stop,
            "penalties": [it.penalty for it in intents],
        }
        for idx in range(self.num_agents):
            it = intents[idx]
            agent_id = self.agent_ids[idx]
            bd = self.energy[agent_id]
            task_id = it.task.spec.id if it.task is not None else -1
            layers_done = it.task.frontier if it.task is not None else 0
            aoi = it.task.aoi_s if it.task is not None else 0.0
            self._trace_rows.append(
                [self._steps, agent_id, int(actions[idx]), task_id,
                 layers_done, repr(aoi), repr(bd.compute_j),
                 repr(bd.transmit_j), repr(bd.flight_j), repr(float(rewards[idx]))])

        obs = [self._observe(i) for i in range(self.num_agents)]
        return StepResult(observations=obs, rewards=rewards,
                          done=self._done, info=info)

    def _task_utility(self, task: TaskRuntime) -> float:
        """Achieved utility of a resolved task, composed exactly like the
        oracle's static report so ratios are comparable."""
        sc = self.scenario
        u1, _ = assignment.u1_terms(task.energy_by_uav, sc)
        eta = task.frontier / task.num_layers
        u2 = assignment.u2_term(task.resolved == "completed", eta,
                                task.aoi_s, task.spec, sc)
        u3, _ = assignment.u3_terms(self.state, sc)
        w = sc.weights
        return w.delta * u1 + w.epsilon * u2 + w.theta * u3

    def _rewards(self, intents, spend, resolved_now) -> np.ndarray:
        sc = self.scenario
        w = sc.weights
        u2_sum = 0.0
        for task in resolved_now:
            eta = task.frontier / task.num_layers
            u2_sum += assignment.u2_term(task.resolved == "completed", eta,
                                         task.aoi_s, task.spec, sc)
        u3, _ = assignment.u3_terms(self.state, sc)
        r_group = w.epsilon * u2_sum + w.theta * u3

        rewards = np.zeros(self.num_agents)
        for idx, agent_id in enumerate(self.agent_ids):
            uav = sc.uav(agent_id)
            remaining = self.state.remaining_energy_j[agent_id]
            if remaining >= assignment.rendezvous_energy(agent_id, sc, self.state):
                r_indiv = w.delta * (-spend[agent_id] / uav.energy_cap_j)
            else:
                r_indiv = -w.sigma * remaining
            r = (w.vartheta_reward * r_indiv
                 + (1.0 - w.vartheta_reward) * r_group)
            if intents[idx].penalty:
                r -= self.config.invalid_penalty
            rewards[idx] = r
        return rewards

    # -- observation ---------------------------------------------------------

    def _observe(self, agent_idx: int) -> np.ndarray:
        sc = self.scenario
        cfg = self.config
        parts = []
        open_tasks = self.open_tasks()
        for slot in range(cfg.obs_task_slots):
            if slot < len(open_tasks):
                t = open_tasks[slot]
                target = sc.target(t.spec.origin_target)
                onehot = [1.0 if k == t.spec.model.kind else 0.0
                          for k in self._kinds]
                age = self.state.clock_s - t.spec.created_at
                parts.extend([
                    min(1.0, target.task_size_gb / TASK_SIZE_NORM_GB),
                    *onehot,
                    t.frontier / t.num_layers,
                    max(0.0, 1.0 - age / t.spec.max_latency),
                ])
            else:
                parts.extend([0.0] * (3 + len(self._kinds)))
        fleet = sorted(sc.fleet, key=lambda u: u.id)
        parts.extend(self.state.remaining_energy_j[u.id] / u.energy_cap_j
                     for u in fleet)
        parts.extend(self.state.remaining_memory_b[u.id] / u.memory_cap_bytes
                     for u in fleet)
        for u in fleet:
            p = self.state.uav_positions[u.id]
            parts.extend([p.x / self._arena, p.y / self._arena,
                          p.z / self._alt_norm])
        for tid in self.route.order:
            t = sc.target(tid)
            parts.extend([t.center.x / self._arena, t.center.y / self._arena])
        parts.append(self._legs_flown / self.route.num_legs)
        onehot_agent = [0.0] * self.num_agents
        onehot_agent[agent_idx] = 1.0
        parts.extend(onehot_agent)
        obs = np.asarray(parts, dtype=np.float64)
        assert obs.shape == (self.obs_dim,)
        return obs

    # -- reporting -----------------------------------------------------------

    @property
    def done(self) -> bool:
        return self._done

    def episode_utility(self) -> float:
        return sum(t.utility for t in self.tasks if t.utility is not None)

    def episode_trace(self) -> EpisodeTrace:
        return EpisodeTrace(
            task_latency={t.spec.id: physics.LatencyBreakdown(
                t.waiting_s, t.transmit_s, t.compute_s) for t in self.tasks},
            task_aoi_s={t.spec.id: t.aoi_s for t in self.tasks},
            task_completed={t.spec.id: t.resolved == "completed"
                            for t in self.tasks},
            uav_energy={uid: physics.EnergyBreakdown(bd.compute_j,
                                                     bd.transmit_j,
                                                     bd.flight_j)
                        for uid, bd in self.energy.items()},
            route_order=tuple(self.route.order))

    def episode_metrics(self) -> dict:
        """Aggregate AoI (over completed tasks), completion rate, utility."""
        completed = [t for t in self.tasks if t.resolved == "completed"]
        etas = [t.frontier / t.num_layers for t in self.tasks]
        return {
            "aoi_s": (sum(t.aoi_s for t in completed) / len(completed)
                      if completed else float("nan")),
            "eta": sum(etas) / len(etas) if etas else 0.0,
            "utility": self.episode_utility(),
            "completed": len(completed),
            "tasks": len(self.tasks),
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in self._trace_rows:
            w.writerow(row)
        return buf.getvalue()
