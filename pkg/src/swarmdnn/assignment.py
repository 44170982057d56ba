"""Split-point decisions, constraint checking, utility scoring, and the
exhaustive small-instance oracle.

A decision assigns contiguous layer slices of one task to an ordered pipeline
of executors.  Scoring walks the pipeline once: each stage receives the
boundary activation from its predecessor (no hop when consecutive slices run
on the same UAV, and no hop into the first stage - raw data is collected on
the leader and collection is not priced), computes its slice, and hands off.
A stage that would breach its memory cap, drain its battery, or eat into the
return reserve stops the pipeline there; whatever executed is what the task
completed.

Utility terms (weights delta/epsilon/theta):
  u1  negated compute+transmit energy, each UAV's spend over its own cap
  u2  completed:  alpha*eta - beta*(AoI/tau_max)
      otherwise:  gamma*(completedـfraction) - beta
  u3  negated variance of remaining energy across the fleet over cap^2
Raw (unnormalized, sign-literal) u1/u3 are reported alongside.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field, replace

from . import physics
from .scenario import Position3, Scenario, TaskSpec

ORACLE_ENUMERATION_GUARD = 10 ** 6

CONSTRAINT_IDS = ("C1", "C2", "C3", "C4", "C5", "C6", "C7")


@dataclass(frozen=True)
class AssignmentDecision:
    """Ordered executor pipeline plus strictly increasing split points.

    Stage j runs layers split[j-1]+1 .. split[j] (1-based, inclusive) with an
    implicit leading 0 and trailing L; len(split_points) = len(executors)-1.
    """

    task_id: int
    executors: tuple[int, ...]
    split_points: tuple[int, ...]

    def stages(self, num_layers: int):
        """Yield (uav_id, first_layer, last_layer) per stage, 1-based."""
        bounds = (0,) + self.split_points + (num_layers,)
        for j, uav_id in enumerate(self.executors):
            yield uav_id, bounds[j] + 1, bounds[j + 1]


class AssignmentMode:
    SWARM = "swarm"
    PARTIAL = "partial"
    BINARY = "binary"


@dataclass
class FleetState:
    """Mutable per-episode resource ledger shared by scorer and environment."""

    clock_s: float
    remaining_energy_j: dict[int, float]
    remaining_memory_b: dict[int, float]
    uav_positions: dict[int, Position3]
    visited_targets: set[int] = field(default_factory=set)

    @classmethod
    def initial(cls, scenario: Scenario) -> "FleetState":
        return cls(
            clock_s=0.0,
            remaining_energy_j={u.id: u.energy_cap_j for u in scenario.fleet},
            remaining_memory_b={u.id: u.memory_cap_bytes for u in scenario.fleet},
            uav_positions={u.id: u.position for u in scenario.fleet},
        )

    def copy(self) -> "FleetState":
        return FleetState(self.clock_s, dict(self.remaining_energy_j),
                          dict(self.remaining_memory_b),
                          dict(self.uav_positions), set(self.visited_targets))


@dataclass(frozen=True)
class StageResult:
    uav_id: int
    first_layer: int
    last_layer: int
    transfer_bits: float
    transfer_s: float
    compute_s: float
    compute_j: float
    transmit_j_sender: float  # charged to the previous stage's executor
    executed: bool


@dataclass(frozen=True)
class PipelineResult:
    stages: tuple[StageResult, ...]
    waiting_s: float
    transmit_s: float
    compute_s: float
    aoi_s: float
    completed_layers: int
    completed: bool
    violated: tuple[str, ...]

    @property
    def latency(self) -> physics.LatencyBreakdown:
        return physics.LatencyBreakdown(self.waiting_s, self.transmit_s,
                                        self.compute_s)


@dataclass(frozen=True)
class UtilityReport:
    u1: float
    u2: float
    u3: float
    total: float
    eta: float
    aoi_s: float
    feasible: bool
    violated: tuple[str, ...]
    u1_raw_j: float
    u3_raw_j2: float
    completed: bool


def rendezvous_energy(uav_id: int, scenario: Scenario,
                      state: FleetState) -> float:
    """Joules needed to fly home from the UAV's current position."""
    d = state.uav_positions[uav_id].distance_to(scenario.base)
    p = physics.propulsion_power(scenario.flight.speed_m_s, scenario.flight)
    return p * (d / scenario.flight.speed_m_s)


def classify_mode(decision: AssignmentDecision, follower_ids) -> str:
    """Binary: one follower runs the whole task; swarm: every follower is a
    stage; partial: anything else (binary wins when both apply)."""
    follower_ids = set(follower_ids)
    if len(decision.executors) == 1 and decision.executors[0] in follower_ids:
        return AssignmentMode.BINARY
    if follower_ids and follower_ids <= set(decision.executors):
        return AssignmentMode.SWARM
    return AssignmentMode.PARTIAL


def validate_structure(decision: AssignmentDecision, num_layers: int,
                       fleet_ids) -> list[str]:
    """Structural constraints only: split hierarchy (C1) and fleet bounds (C2).

    Executors may revisit a UAV non-consecutively (realized executions built
    from per-round frontier claims do); the oracle's enumeration space is the
    stricter distinct-executor pipeline.
    """
    violated = []
    n_stages = len(decision.executors)
    splits = decision.split_points
    ok_c1 = len(splits) == n_stages - 1
    if ok_c1 and splits:
        ok_c1 = (all(1 <= p <= num_layers - 1 for p in splits)
                 and all(a < b for a, b in zip(splits, splits[1:])))
    if not ok_c1 or n_stages > num_layers:
        violated.append("C1")
    fleet_ids = set(fleet_ids)
    if (n_stages < 1 or len(set(decision.executors)) > len(fleet_ids)
            or not set(decision.executors) <= fleet_ids
            or any(a == b for a, b in zip(decision.executors,
                                          decision.executors[1:]))):
        violated.append("C2")
    return violated


def simulate_stages(stage_list, task: TaskSpec, scenario: Scenario,
                    state: FleetState, shadow_db: float = 0.0,
                    pre_violated=()) -> PipelineResult:
    """Walk an explicit stage list (uav_id, first_layer, last_layer) once.

    Stops at the first stage violating memory (C3), energy (C4), or the
    return reserve (C5); flags C7 when the end-to-end latency misses the
    task's deadline.  Waiting is the queue age at decision time.  The list
    may cover only a prefix of the layers (partial assignments score the
    incomplete utility branch).
    """
    layers = task.model.layers
    num_layers = len(layers)
    violated = set(pre_violated)
    waiting = max(0.0, state.clock_s - task.created_at)

    stage_results = []
    transmit_s = 0.0
    compute_s = 0.0
    completed = 0
    prev_uav = None
    stopped = bool({"C1", "C2"} & violated)

    for uav_id, lo, hi in stage_list:
        if stopped:
            stage_results.append(StageResult(uav_id, lo, hi, 0.0, 0.0, 0.0,
                                             0.0, 0.0, executed=False))
            continue
        uav = scenario.uav(uav_id)
        sl = layers[lo - 1:hi]

        t_tr = 0.0
        bits = 0.0
        e_tr = 0.0
        if prev_uav is not None and prev_uav != uav_id:
            bits = layers[lo - 2].output_bits
            sender = scenario.uav(prev_uav)
            link = physics.link_between(
                replace(sender, position=state.uav_positions[prev_uav]),
                state.uav_positions[uav_id], scenario.radio, shadow_db)
            t_tr, e_tr = physics.transmit_time_energy(bits, link.rate_bps,
                                                      sender.tx_power_w)

        mem_need = sum(l.memory_bytes for l in sl)
        if mem_need > state.remaining_memory_b[uav_id]:
            violated.add("C3")
            stopped = True
            stage_results.append(StageResult(uav_id, lo, hi, bits, 0.0, 0.0,
                                             0.0, 0.0, executed=False))
            continue

        e_cmp = physics.compute_energy(sl, uav.compute_cycles_per_s,
                                       scenario.weights.k0)
        rem_after = state.remaining_energy_j[uav_id] - e_cmp
        sender_after = (state.remaining_energy_j[prev_uav] - e_tr
                        if prev_uav is not None and prev_uav != uav_id else None)
        if rem_after < 0.0 or (sender_after is not None and sender_after < 0.0):
            violated.add("C4")
            stopped = True
            stage_results.append(StageResult(uav_id, lo, hi, bits, 0.0, 0.0,
                                             0.0, 0.0, executed=False))
            continue
        if rem_after < rendezvous_energy(uav_id, scenario, state):
            violated.add("C5")
            stopped = True
            stage_results.append(StageResult(uav_id, lo, hi, bits, 0.0, 0.0,
                                             0.0, 0.0, executed=False))
            continue

        t_cmp = physics.compute_time(sl, uav.compute_cycles_per_s)
        transmit_s += t_tr
        compute_s += t_cmp
        completed += len(sl)
        stage_results.append(StageResult(uav_id, lo, hi, bits, t_tr, t_cmp,
                                         e_cmp, e_tr, executed=True))
        prev_uav = uav_id

    aoi = waiting + transmit_s + compute_s
    task_done = completed == num_layers and not stopped
    if aoi > task.max_latency:
        violated.add("C7")
        task_done = False
    if task.origin_target not in state.visited_targets:
        violated.add("C6")

    return PipelineResult(stages=tuple(stage_results), waiting_s=waiting,
                          transmit_s=transmit_s, compute_s=compute_s,
                          aoi_s=aoi, completed_layers=completed,
                          completed=task_done,
                          violated=tuple(sorted(violated)))


def simulate_pipeline(decision: AssignmentDecision, task: TaskSpec,
                      scenario: Scenario, state: FleetState,
                      shadow_db: float = 0.0) -> PipelineResult:
    """Structural checks plus a full pipeline walk for one decision."""
    num_layers = len(task.model.layers)
    structural = validate_structure(decision, num_layers,
                                    [u.id for u in scenario.fleet])
    return simulate_stages(decision.stages(num_layers), task, scenario,
                           state, shadow_db, pre_violated=structural)


def check_constraints(decision: AssignmentDecision, task: TaskSpec,
                      scenario: Scenario, state: FleetState) -> list[str]:
    """Violated constraint ids among C1..C7 for this decision."""
    return list(simulate_pipeline(decision, task, scenario, state).violated)


# --- utility terms, shared with the environment's reward composition -------

def u1_terms(energy_by_uav: dict[int, float], scenario: Scenario):
    """(normalized u1, raw joules) for compute+transmit spend per UAV."""
    raw = sum(energy_by_uav.values())
    norm = -sum(e / scenario.uav(uid).energy_cap_j
                for uid, e in energy_by_uav.items())
    return norm, raw


def u2_term(completed: bool, eta: float, aoi_s: float, task: TaskSpec,
            scenario: Scenario) -> float:
    w = scenario.weights
    if completed:
        return w.alpha * eta - w.beta * (aoi_s / task.max_latency)
    return w.gamma * eta - w.beta


def u3_terms(state: FleetState, scenario: Scenario):
    """(normalized u3, raw sum of squared joule deviations) across the fleet.

    fsum keeps the result invariant under permutations of equal spends, so
    symmetric assignments tie exactly instead of by rounding dust.
    """
    rem = [state.remaining_energy_j[u.id] for u in scenario.fleet]
    mean = math.fsum(rem) / len(rem)
    raw = math.fsum((r - mean) ** 2 for r in rem)
    mean_cap = math.fsum(u.energy_cap_j for u in scenario.fleet) / len(scenario.fleet)
    norm = -(raw / len(rem)) / (mean_cap * mean_cap)
    return norm, raw


def apply_stage_energy(result: PipelineResult,
                       state: FleetState) -> dict[int, float]:
    """Debit the executed stages' compute/transmit energy from `state`;
    returns the joules per UAV (memory is transient, not debited)."""
    spend: dict[int, float] = {}
    prev = None
    for st in result.stages:
        if not st.executed:
            break
        spend[st.uav_id] = spend.get(st.uav_id, 0.0) + st.compute_j
        if st.transmit_j_sender > 0.0 and prev is not None:
            spend[prev] = spend.get(prev, 0.0) + st.transmit_j_sender
        prev = st.uav_id
    for uid, e in spend.items():
        state.remaining_energy_j[uid] -= e
    return spend


def _report_from_result(result: PipelineResult, task: TaskSpec,
                        scenario: Scenario, state: FleetState) -> UtilityReport:
    scratch = state.copy()
    energy_by_uav = apply_stage_energy(result, scratch)
    u1, u1_raw = u1_terms(energy_by_uav, scenario)
    eta = result.completed_layers / len(task.model.layers)
    u2 = u2_term(result.completed, eta, result.aoi_s, task, scenario)
    u3, u3_raw = u3_terms(scratch, scenario)
    w = scenario.weights
    total = w.delta * u1 + w.epsilon * u2 + w.theta * u3
    return UtilityReport(u1=u1, u2=u2, u3=u3, total=total, eta=eta,
                         aoi_s=result.aoi_s,
                         feasible=not result.violated,
                         violated=result.violated,
                         u1_raw_j=u1_raw, u3_raw_j2=u3_raw,
                         completed=result.completed)


def evaluate_utility(decision: AssignmentDecision, task: TaskSpec,
                     scenario: Scenario, state: FleetState,
                     shadow_db: float = 0.0) -> UtilityReport:
    """Score a decision against a (copied) state; the input state is not
    mutated."""
    result = simulate_pipeline(decision, task, scenario, state, shadow_db)
    return _report_from_result(result, task, scenario, state)


def evaluate_stages_utility(stage_list, task: TaskSpec, scenario: Scenario,
                            state: FleetState,
                            shadow_db: float = 0.0) -> UtilityReport:
    """Score an explicit (possibly partial) stage list; state not mutated."""
    result = simulate_stages(stage_list, task, scenario, state, shadow_db)
    return _report_from_result(result, task, scenario, state)


# --- enumeration and the exhaustive oracle ---------------------------------

def enumerate_decisions(num_layers: int, executor_ids, task_id: int = 0):
    """Every (ordered executor subset, strictly increasing split vector)
    satisfying the split hierarchy; executor order matters (transfers hop
    between consecutive stages)."""
    if num_layers < 1:
        raise ValueError("num_layers must be >= 1")
    executor_ids = list(executor_ids)
    for s in range(1, min(len(executor_ids), num_layers) + 1):
        for execs in itertools.permutations(executor_ids, s):
            for splits in itertools.combinations(range(1, num_layers), s - 1):
                yield AssignmentDecision(task_id=task_id, executors=execs,
                                         split_points=splits)


def decision_count(num_layers: int, num_executors: int) -> int:
    """Closed form: sum over stage counts of Perm(N,s) * C(L-1, s-1)."""
    total = 0
    for s in range(1, min(num_executors, num_layers) + 1):
        total += (math.perm(num_executors, s)
                  * math.comb(num_layers - 1, s - 1))
    return total


def _tiebreak_key(decision: AssignmentDecision):
    return (len(decision.executors), decision.split_points, decision.executors)


def solve_oracle(task: TaskSpec, scenario: Scenario, state: FleetState,
                 include_leader: bool = False,
                 guard: int = ORACLE_ENUMERATION_GUARD):
    """Exhaustive argmax-utility decision for one task.

    Returns (decision, report).  With no feasible decision, returns the
    least-violating one (fewest violated constraints, then highest utility)
    with its report flagged infeasible.
    """
    executor_ids = [u.id for u in scenario.followers]
    if include_leader:
        executor_ids = [scenario.leader.id] + executor_ids
    num_layers = len(task.model.layers)
    count = decision_count(num_layers, len(executor_ids))
    if count > guard:
        raise ValueError(f"enumeration of {count} decisions exceeds the "
                         f"{guard} guard")

    best = None          # (report, decision) among feasible
    best_fallback = None  # (num violations, -total, decision, report)
    for decision in enumerate_decisions(num_layers, executor_ids, task.id):
        report = evaluate_utility(decision, task, scenario, state)
        if report.feasible:
            if (best is None or report.total > best[0].total
                    or (report.total == best[0].total
                        and _tiebreak_key(decision) < _tiebreak_key(best[1]))):
                best = (report, decision)
        elif best is None:
            key = (len(report.violated), -report.total, _tiebreak_key(decision))
            if best_fallback is None or key < best_fallback[0]:
                best_fallback = (key, decision, report)
    if best is not None:
        return best[1], best[0]
    return best_fallback[1], best_fallback[2]


ORACLE_CSV_HEADER = ("task_id", "executors", "splits", "mode",
                     "u1", "u2", "u3", "U", "aoi_s", "feasible")


def oracle_row(decision: AssignmentDecision, report: UtilityReport,
               scenario: Scenario) -> list:
    mode = classify_mode(decision, [u.id for u in scenario.followers])
    return [decision.task_id,
            "|".join(str(e) for e in decision.executors),
            "|".join(str(p) for p in decision.split_points),
            mode, repr(report.u1), repr(report.u2), repr(report.u3),
            repr(report.total), repr(report.aoi_s),
            int(report.feasible)]


def oracle_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ORACLE_CSV_HEADER)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
