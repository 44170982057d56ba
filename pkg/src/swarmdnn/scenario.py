"""Domain types, scenario files, layer profiles, and random instance generation.

Everything downstream (planner, physics, environment, trainer) consumes a
single immutable :class:`Scenario`.  Units are SI throughout: meters, seconds,
joules, watts, Hz, CPU cycles, bits.  The only non-SI field is the per-target
``task_size_gb`` (gigabytes of collected data), which mirrors how operators
quote payload sizes; it is converted wherever seconds are needed.

Scenario file format
--------------------
A scenario is one JSON document.  The canonical form is ``json.dumps`` with
``indent=2, sort_keys=True`` plus a trailing newline, so saving a loaded
scenario is byte-stable.  Unknown keys anywhere in the document are errors.

Top-level keys::

    seed                 int     generator seed recorded with the instance
    base                 {x,y,z} start/return coordinate of the route, meters
    proc_rate_gb_min     float   average swarm task-processing rate, GB/minute
    targets              list    [{id, center:{x,y,z}, task_size_gb, dnn_type}]
    fleet                list    [{id, role, position:{x,y,z},
                                   compute_cycles_per_s, memory_cap_bytes,
                                   energy_cap_j, tx_power_w, bandwidth_hz}]
    models               list    [{kind, layers:[{layer_index, compute_cycles,
                                   memory_bytes, output_bits}]}]
                                 or [{kind, builtin: "alexnet"|"vgg16"|"yolov5"}]
    radio                {frequency_hz, pathloss_exponent, shadow_sigma_db,
                          interference_w, noise_w}
    flight               {speed_m_s, blade_power_w, induced_power_w,
                          tip_speed_m_s, hover_induced_m_s, drag_ratio,
                          air_density, rotor_solidity, disk_area_m2}
    weights              {alpha, beta, gamma, delta, epsilon, theta, sigma,
                          vartheta_reward, vartheta_dist, rho_task, k0}

Layer-profile CSV format: header ``layer_index,compute_cycles,memory_bytes,
output_bits`` followed by one row per layer, indices contiguous from 1.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import numpy as np

GB_BYTES = 1e9
FLOAT_BITS = 32  # activation element width used by the synthetic profiles


class ScenarioError(ValueError):
    """Raised when a scenario or profile file violates the schema."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Position3:
    """A point in meters; z is altitude and must be non-negative."""

    x: float
    y: float
    z: float

    def distance_to(self, other: "Position3") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2
                         + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class TargetArea:
    id: int
    center: Position3
    task_size_gb: float
    dnn_type: int


@dataclass(frozen=True)
class LayerProfile:
    layer_index: int
    compute_cycles: float
    memory_bytes: float
    output_bits: float


@dataclass(frozen=True)
class DnnModelProfile:
    kind: int
    layers: tuple[LayerProfile, ...]

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def total_cycles(self) -> float:
        return sum(l.compute_cycles for l in self.layers)


@dataclass(frozen=True)
class TaskSpec:
    """One inference job: a model instance originating at a target."""

    id: int
    model: DnnModelProfile
    origin_target: int
    created_at: float
    max_latency: float


@dataclass(frozen=True)
class UavSpec:
    id: int
    role: str  # "leader" or "follower"
    position: Position3
    compute_cycles_per_s: float
    memory_cap_bytes: float
    energy_cap_j: float
    tx_power_w: float
    bandwidth_hz: float

    @property
    def is_leader(self) -> bool:
        return self.role == "leader"


@dataclass(frozen=True)
class RadioConstants:
    frequency_hz: float
    pathloss_exponent: float
    shadow_sigma_db: float
    interference_w: float
    noise_w: float


@dataclass(frozen=True)
class FlightConstants:
    speed_m_s: float
    blade_power_w: float
    induced_power_w: float
    tip_speed_m_s: float
    hover_induced_m_s: float
    drag_ratio: float
    air_density: float
    rotor_solidity: float
    disk_area_m2: float


@dataclass(frozen=True)
class Weights:
    """Objective and fitness weight coefficients plus the energy coefficient.

    ``vartheta_dist + rho_task`` must equal 1 (the route fitness trade-off),
    ``vartheta_reward`` blends individual and group rewards and lies in [0,1].
    ``k0`` is the compute-energy coefficient in J*s^2/cycle^3.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0 / 3.0
    epsilon: float = 1.0 / 3.0
    theta: float = 1.0 / 3.0
    sigma: float = 1.0
    vartheta_reward: float = 0.5
    vartheta_dist: float = 0.5
    rho_task: float = 0.5
    k0: float = 1e-28


@dataclass(frozen=True)
class Scenario:
    targets: tuple[TargetArea, ...]
    fleet: tuple[UavSpec, ...]
    models: tuple[DnnModelProfile, ...]
    radio: RadioConstants
    flight: FlightConstants
    weights: Weights
    base: Position3
    seed: int
    proc_rate_gb_min: float = 10.0

    @property
    def leader(self) -> UavSpec:
        return next(u for u in self.fleet if u.is_leader)

    @property
    def followers(self) -> tuple[UavSpec, ...]:
        return tuple(u for u in self.fleet if not u.is_leader)

    def uav(self, uav_id: int) -> UavSpec:
        for u in self.fleet:
            if u.id == uav_id:
                return u
        raise KeyError(f"no UAV with id {uav_id}")

    def target(self, target_id: int) -> TargetArea:
        for t in self.targets:
            if t.id == target_id:
                return t
        raise KeyError(f"no target with id {target_id}")

    def model_for(self, dnn_type: int) -> DnnModelProfile:
        for m in self.models:
            if m.kind == dnn_type:
                return m
        raise KeyError(f"no model of kind {dnn_type}")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def _check_position(p: Position3, where: str) -> None:
    for name in ("x", "y", "z"):
        v = getattr(p, name)
        _require(math.isfinite(v), f"{where}.{name} must be finite")
    _require(p.z >= 0.0, f"{where}.z must be >= 0")


def validate_scenario(sc: Scenario) -> Scenario:
    """Check every type invariant; raises ScenarioError naming the field."""
    _require(len(sc.targets) > 0, "targets non-empty")
    _check_position(sc.base, "base")

    seen_ids: set[int] = set()
    kinds = {m.kind for m in sc.models}
    for t in sc.targets:
        _require(t.id not in seen_ids, f"targets.id {t.id} duplicated")
        seen_ids.add(t.id)
        _check_position(t.center, f"targets[{t.id}].center")
        _require(math.isfinite(t.task_size_gb) and t.task_size_gb >= 0.0,
                 f"targets[{t.id}].task_size_gb must be >= 0")
        _require(t.dnn_type in kinds,
                 f"targets[{t.id}].dnn_type {t.dnn_type} not in models")

    leaders = [u for u in sc.fleet if u.is_leader]
    _require(len(leaders) == 1, "exactly one leader in fleet")
    fleet_ids: set[int] = set()
    for u in sc.fleet:
        _require(u.role in ("leader", "follower"),
                 f"fleet[{u.id}].role must be leader or follower")
        _require(u.id not in fleet_ids, f"fleet.id {u.id} duplicated")
        fleet_ids.add(u.id)
        _check_position(u.position, f"fleet[{u.id}].position")
        for name in ("compute_cycles_per_s", "memory_cap_bytes",
                     "energy_cap_j", "tx_power_w", "bandwidth_hz"):
            _require(getattr(u, name) > 0.0, f"fleet[{u.id}].{name} must be > 0")

    for m in sc.models:
        _require(len(m.layers) > 0, f"models[{m.kind}].layers non-empty")
        for i, l in enumerate(m.layers, start=1):
            _require(l.layer_index == i,
                     f"models[{m.kind}] layer_index must be contiguous from 1")
            _require(l.compute_cycles > 0,
                     f"models[{m.kind}] layer {i} compute_cycles must be > 0")
            _require(l.memory_bytes > 0,
                     f"models[{m.kind}] layer {i} memory_bytes must be > 0")
            _require(l.output_bits >= 0,
                     f"models[{m.kind}] layer {i} output_bits must be >= 0")

    _require(sc.radio.frequency_hz > 0, "radio.frequency_hz must be > 0")
    _require(sc.radio.noise_w > 0, "radio.noise_w must be > 0")
    _require(sc.radio.shadow_sigma_db >= 0, "radio.shadow_sigma_db must be >= 0")
    _require(sc.radio.interference_w >= 0, "radio.interference_w must be >= 0")

    _require(sc.flight.speed_m_s > 0, "flight.speed_m_s must be > 0")
    for name in ("blade_power_w", "induced_power_w", "tip_speed_m_s",
                 "hover_induced_m_s", "drag_ratio", "air_density",
                 "rotor_solidity", "disk_area_m2"):
        _require(getattr(sc.flight, name) > 0, f"flight.{name} must be > 0")

    w = sc.weights
    _require(abs(w.vartheta_dist + w.rho_task - 1.0) < 1e-12,
             "weights.vartheta_dist + weights.rho_task must equal 1")
    _require(0.0 <= w.vartheta_reward <= 1.0,
             "weights.vartheta_reward must be in [0, 1]")
    _require(w.k0 > 0, "weights.k0 must be > 0")

    _require(sc.proc_rate_gb_min > 0, "proc_rate_gb_min must be > 0")
    return sc


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

_POS_KEYS = {"x", "y", "z"}
_TOP_KEYS = {"seed", "base", "proc_rate_gb_min", "targets", "fleet",
             "models", "radio", "flight", "weights"}
_TARGET_KEYS = {"id", "center", "task_size_gb", "dnn_type"}
_UAV_KEYS = {"id", "role", "position", "compute_cycles_per_s",
             "memory_cap_bytes", "energy_cap_j", "tx_power_w", "bandwidth_hz"}
_MODEL_KEYS = {"kind", "layers"}
_LAYER_KEYS = {"layer_index", "compute_cycles", "memory_bytes", "output_bits"}
_RADIO_KEYS = {"frequency_hz", "pathloss_exponent", "shadow_sigma_db",
               "interference_w", "noise_w"}
_FLIGHT_KEYS = {"speed_m_s", "blade_power_w", "induced_power_w",
                "tip_speed_m_s", "hover_induced_m_s", "drag_ratio",
                "air_density", "rotor_solidity", "disk_area_m2"}
_WEIGHT_KEYS = {"alpha", "beta", "gamma", "delta", "epsilon", "theta",
                "sigma", "vartheta_reward", "vartheta_dist", "rho_task", "k0"}


def _check_keys(obj: dict, allowed: set[str], where: str,
                required: set[str] | None = None) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = (required if required is not None else allowed) - set(obj)
    if missing:
        raise ScenarioError(f"{where}: missing key(s) {sorted(missing)}")


def _pos_from(obj: dict, where: str) -> Position3:
    _check_keys(obj, _POS_KEYS, where)
    return Position3(float(obj["x"]), float(obj["y"]), float(obj["z"]))


def _model_from(obj: dict, idx: int) -> DnnModelProfile:
    where = f"models[{idx}]"
    if "builtin" in obj:
        _check_keys(obj, {"kind", "builtin"}, where, required={"kind", "builtin"})
        prof = build_model_profile(str(obj["builtin"]))
        return DnnModelProfile(kind=int(obj["kind"]), layers=prof.layers)
    _check_keys(obj, _MODEL_KEYS, where)
    layers = []
    for j, lr in enumerate(obj["layers"]):
        _check_keys(lr, _LAYER_KEYS, f"{where}.layers[{j}]")
        layers.append(LayerProfile(int(lr["layer_index"]),
                                   float(lr["compute_cycles"]),
                                   float(lr["memory_bytes"]),
                                   float(lr["output_bits"])))
    return DnnModelProfile(kind=int(obj["kind"]), layers=tuple(layers))


def scenario_from_dict(doc: dict) -> Scenario:
    _check_keys(doc, _TOP_KEYS, "scenario")
    targets = []
    for j, t in enumerate(doc["targets"]):
        _check_keys(t, _TARGET_KEYS, f"targets[{j}]")
        targets.append(TargetArea(int(t["id"]), _pos_from(t["center"],
                                  f"targets[{j}].center"),
                                  float(t["task_size_gb"]), int(t["dnn_type"])))
    fleet = []
    for j, u in enumerate(doc["fleet"]):
        _check_keys(u, _UAV_KEYS, f"fleet[{j}]")
        fleet.append(UavSpec(int(u["id"]), str(u["role"]),
                             _pos_from(u["position"], f"fleet[{j}].position"),
                             float(u["compute_cycles_per_s"]),
                             float(u["memory_cap_bytes"]),
                             float(u["energy_cap_j"]),
                             float(u["tx_power_w"]),
                             float(u["bandwidth_hz"])))
    models = tuple(_model_from(m, j) for j, m in enumerate(doc["models"]))
    _check_keys(doc["radio"], _RADIO_KEYS, "radio")
    radio = RadioConstants(**{k: float(doc["radio"][k]) for k in _RADIO_KEYS})
    _check_keys(doc["flight"], _FLIGHT_KEYS, "flight")
    flight = FlightConstants(**{k: float(doc["flight"][k]) for k in _FLIGHT_KEYS})
    _check_keys(doc["weights"], _WEIGHT_KEYS, "weights")
    weights = Weights(**{k: float(doc["weights"][k]) for k in _WEIGHT_KEYS})
    sc = Scenario(targets=tuple(targets), fleet=tuple(fleet), models=models,
                  radio=radio, flight=flight, weights=weights,
                  base=_pos_from(doc["base"], "base"),
                  seed=int(doc["seed"]),
                  proc_rate_gb_min=float(doc["proc_rate_gb_min"]))
    return validate_scenario(sc)


def _pos_dict(p: Position3) -> dict:
    return {"x": float(p.x), "y": float(p.y), "z": float(p.z)}


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-dict form with numeric fields normalized to float, so the
    canonical dump is identical before and after a load round trip."""
    return {
        "seed": int(sc.seed),
        "base": _pos_dict(sc.base),
        "proc_rate_gb_min": float(sc.proc_rate_gb_min),
        "targets": [{"id": int(t.id),
                     "center": _pos_dict(t.center),
                     "task_size_gb": float(t.task_size_gb),
                     "dnn_type": int(t.dnn_type)} for t in sc.targets],
        "fleet": [{"id": int(u.id), "role": u.role,
                   "position": _pos_dict(u.position),
                   "compute_cycles_per_s": float(u.compute_cycles_per_s),
                   "memory_cap_bytes": float(u.memory_cap_bytes),
                   "energy_cap_j": float(u.energy_cap_j),
                   "tx_power_w": float(u.tx_power_w),
                   "bandwidth_hz": float(u.bandwidth_hz)} for u in sc.fleet],
        "models": [{"kind": int(m.kind),
                    "layers": [{"layer_index": int(l.layer_index),
                                "compute_cycles": float(l.compute_cycles),
                                "memory_bytes": float(l.memory_bytes),
                                "output_bits": float(l.output_bits)}
                               for l in m.layers]} for m in sc.models],
        "radio": {k: float(v) for k, v in asdict(sc.radio).items()},
        "flight": {k: float(v) for k, v in asdict(sc.flight).items()},
        "weights": {k: float(v) for k, v in asdict(sc.weights).items()},
    }


def scenario_to_canonical(sc: Scenario) -> str:
    """Canonical textual form; stable under load/save round trips."""
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n"


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed scenario file {path}: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(scenario_to_canonical(sc), encoding="utf-8")


# ---------------------------------------------------------------------------
# layer-profile CSV ingestion
# ---------------------------------------------------------------------------

PROFILE_COLUMNS = ("layer_index", "compute_cycles", "memory_bytes", "output_bits")


def load_layer_profiles(path, kind: int = 1) -> DnnModelProfile:
    """Load one model profile from CSV (columns per PROFILE_COLUMNS)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return _parse_profile_csv(fh, kind, str(path))


def _parse_profile_csv(fh, kind: int, where: str) -> DnnModelProfile:
    reader = csv.DictReader(fh)
    got = tuple(reader.fieldnames or ())
    if got != PROFILE_COLUMNS:
        missing = set(PROFILE_COLUMNS) - set(got)
        raise ScenarioError(f"{where}: bad profile header {got}, "
                            f"missing {sorted(missing)}")
    layers = []
    for rownum, row in enumerate(reader, start=2):
        idx = int(row["layer_index"])
        compute = float(row["compute_cycles"])
        memory = float(row["memory_bytes"])
        out_bits = float(row["output_bits"])
        if compute <= 0:
            raise ScenarioError(f"{where} row {rownum}: compute_cycles must be > 0")
        if memory <= 0:
            raise ScenarioError(f"{where} row {rownum}: memory_bytes must be > 0")
        if out_bits < 0:
            raise ScenarioError(f"{where} row {rownum}: output_bits must be >= 0")
        layers.append(LayerProfile(idx, compute, memory, out_bits))
    layers.sort(key=lambda l: l.layer_index)
    prof = DnnModelProfile(kind=kind, layers=tuple(layers))
    if not prof.layers:
        raise ScenarioError(f"{where}: no layer rows")
    for i, l in enumerate(prof.layers, start=1):
        if l.layer_index != i:
            raise ScenarioError(f"{where}: layer_index not contiguous at {l.layer_index}")
    return prof


def profile_to_csv(prof: DnnModelProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_COLUMNS)
    for l in prof.layers:
        w.writerow([l.layer_index, repr(float(l.compute_cycles)),
                    repr(float(l.memory_bytes)), repr(float(l.output_bits))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# analytic layer-shape calculator and built-in synthetic profiles
# ---------------------------------------------------------------------------
#
# Each built-in network is described as a table of coarse layers.  Conv rows
# are (kernel, in_ch, out_ch, conv_h, conv_w, out_c, out_h, out_w): FLOPs are
# counted at the convolution resolution, the emitted activation is the
# post-pool tensor.  FC rows are (in_features, out_features).  One FLOP is one
# cycle; memory is 4 bytes per weight plus 4 bytes per output element;
# output_bits is 32 bits per output element.

def _conv_layer(kernel, c_in, c_out, conv_h, conv_w, out_c, out_h, out_w):
    flops = 2.0 * kernel * kernel * c_in * c_out * conv_h * conv_w
    params = kernel * kernel * c_in * c_out + c_out
    out_elems = out_c * out_h * out_w
    return flops, params, out_elems


def _fc_layer(n_in, n_out):
    flops = 2.0 * n_in * n_out
    params = n_in * n_out + n_out
    return flops, params, n_out


# (name, rows); each row: ("conv", k, cin, cout, convh, convw, outc, outh, outw)
# or ("fc", nin, nout)
_ARCHITECTURES = {
    # 8 coarse layers: 5 conv blocks (pooling folded into the emitted shape)
    # and 3 fully connected layers, 227x227 input.
    "alexnet": [
        ("conv", 11, 3, 96, 55, 55, 96, 27, 27),
        ("conv", 5, 96, 256, 27, 27, 256, 13, 13),
        ("conv", 3, 256, 384, 13, 13, 384, 13, 13),
        ("conv", 3, 384, 384, 13, 13, 384, 13, 13),
        ("conv", 3, 384, 256, 13, 13, 256, 6, 6),
        ("fc", 9216, 4096),
        ("fc", 4096, 4096),
        ("fc", 4096, 1000),
    ],
    # 13 conv + 3 fc, 224x224 input; emitted shapes are post-pool.
    "vgg16": [
        ("conv", 3, 3, 64, 224, 224, 64, 224, 224),
        ("conv", 3, 64, 64, 224, 224, 64, 112, 112),
        ("conv", 3, 64, 128, 112, 112, 128, 112, 112),
        ("conv", 3, 128, 128, 112, 112, 128, 56, 56),
        ("conv", 3, 128, 256, 56, 56, 256, 56, 56),
        ("conv", 3, 256, 256, 56, 56, 256, 56, 56),
        ("conv", 3, 256, 256, 56, 56, 256, 28, 28),
        ("conv", 3, 256, 512, 28, 28, 512, 28, 28),
        ("conv", 3, 512, 512, 28, 28, 512, 28, 28),
        ("conv", 3, 512, 512, 28, 28, 512, 14, 14),
        ("conv", 3, 512, 512, 14, 14, 512, 14, 14),
        ("conv", 3, 512, 512, 14, 14, 512, 14, 14),
        ("conv", 3, 512, 512, 14, 14, 512, 7, 7),
        ("fc", 25088, 4096),
        ("fc", 4096, 4096),
        ("fc", 4096, 1000),
    ],
    # 12-stage single-path pyramid standing in for a compact detector,
    # 320x320 input, detection head at 10x10.
    "yolov5": [
        ("conv", 6, 3, 32, 160, 160, 32, 160, 160),
        ("conv", 3, 32, 64, 80, 80, 64, 80, 80),
        ("conv", 3, 64, 64, 80, 80, 64, 80, 80),
        ("conv", 3, 64, 128, 40, 40, 128, 40, 40),
        ("conv", 3, 128, 128, 40, 40, 128, 40, 40),
        ("conv", 3, 128, 256, 20, 20, 256, 20, 20),
        ("conv", 3, 256, 256, 20, 20, 256, 20, 20),
        ("conv", 3, 256, 512, 10, 10, 512, 10, 10),
        ("conv", 3, 512, 512, 10, 10, 512, 10, 10),
        ("conv", 3, 512, 256, 10, 10, 256, 10, 10),
        ("conv", 3, 256, 128, 10, 10, 128, 10, 10),
        ("conv", 1, 128, 255, 10, 10, 255, 10, 10),
    ],
}

BUILTIN_PROFILES = tuple(sorted(_ARCHITECTURES))


def build_model_profile(name: str, kind: int = 1) -> DnnModelProfile:
    """Compute a layer profile from the analytic layer-shape tables."""
    if name not in _ARCHITECTURES:
        raise ScenarioError(f"unknown builtin profile {name!r}; "
                            f"choose from {BUILTIN_PROFILES}")
    layers = []
    for i, row in enumerate(_ARCHITECTURES[name], start=1):
        if row[0] == "conv":
            flops, params, out_elems = _conv_layer(*row[1:])
        else:
            flops, params, out_elems = _fc_layer(*row[1:])
        layers.append(LayerProfile(
            layer_index=i,
            compute_cycles=float(flops),
            memory_bytes=float(4 * (params + out_elems)),
            output_bits=float(FLOAT_BITS * out_elems),
        ))
    return DnnModelProfile(kind=kind, layers=tuple(layers))


def load_builtin_profile(name: str, kind: int = 1) -> DnnModelProfile:
    """Load one of the shipped profile CSVs (data/<name>.csv)."""
    ref = resources.files("swarmdnn").joinpath(f"data/{name}.csv")
    with ref.open("r", encoding="utf-8") as fh:
        return _parse_profile_csv(fh, kind, f"builtin:{name}")


# ---------------------------------------------------------------------------
# random instance generation
# ---------------------------------------------------------------------------

AREA_SIDE_M = 12_000.0      # inspection square
UAV_ALTITUDE_M = 3_000.0
TASK_SIZE_RANGE_GB = (0.0, 80.0)

_DEFAULT_RADIO = RadioConstants(frequency_hz=2.4e9, pathloss_exponent=2.0,
                                shadow_sigma_db=0.0, interference_w=0.0,
                                noise_w=1e-3 * 10 ** (-115.0 / 10.0))
_DEFAULT_FLIGHT = FlightConstants(speed_m_s=20.0, blade_power_w=80.0,
                                  induced_power_w=88.0, tip_speed_m_s=120.0,
                                  hover_induced_m_s=4.03, drag_ratio=0.6,
                                  air_density=1.225, rotor_solidity=0.05,
                                  disk_area_m2=0.503)


def default_radio() -> RadioConstants:
    return _DEFAULT_RADIO


def default_flight() -> FlightConstants:
    return _DEFAULT_FLIGHT


def generate_random_scenario(num_targets: int, num_uavs: int, seed: int,
                             *,
                             models: tuple[DnnModelProfile, ...] | None = None,
                             area_side_m: float = AREA_SIDE_M,
                             uav_altitude_m: float = UAV_ALTITUDE_M,
                             task_size_range_gb=TASK_SIZE_RANGE_GB,
                             formation_radius_m: float = 50.0,
                             compute_cycles_per_s: float = 15e9,
                             memory_cap_bytes: float = 250 * GB_BYTES,
                             energy_cap_j: float = 5e5,
                             tx_power_w: float = 0.1,
                             bandwidth_hz: float = 1e6,
                             radio: RadioConstants | None = None,
                             flight: FlightConstants | None = None,
                             weights: Weights | None = None,
                             proc_rate_gb_min: float = 10.0) -> Scenario:
    """Seeded instance: targets uniform in the square at ground level, a
    homogeneous fleet in ring formation around the leader at altitude."""
    if num_targets < 1:
        raise ScenarioError("num_targets must be >= 1")
    if num_uavs < 2:
        raise ScenarioError("num_uavs must be >= 2")
    rng = np.random.default_rng(seed)

    lo, hi = task_size_range_gb
    coords = rng.uniform(0.0, area_side_m, size=(num_targets, 2))
    sizes = rng.uniform(lo, hi, size=num_targets)
    if models is None:
        models = (build_model_profile("yolov5", kind=1),)
    kinds = sorted(m.kind for m in models)
    kind_pick = rng.integers(0, len(kinds), size=num_targets)

    targets = tuple(
        TargetArea(id=i + 1,
                   center=Position3(float(coords[i, 0]), float(coords[i, 1]), 0.0),
                   task_size_gb=float(sizes[i]),
                   dnn_type=kinds[int(kind_pick[i])])
        for i in range(num_targets))

    cx = cy = area_side_m / 2.0
    base = Position3(cx, cy, uav_altitude_m)
    fleet = [UavSpec(id=0, role="leader", position=base,
                     compute_cycles_per_s=compute_cycles_per_s,
                     memory_cap_bytes=memory_cap_bytes,
                     energy_cap_j=energy_cap_j, tx_power_w=tx_power_w,
                     bandwidth_hz=bandwidth_hz)]
    n_follow = num_uavs - 1
    for j in range(n_follow):
        ang = 2.0 * math.pi * j / n_follow
        fleet.append(UavSpec(
            id=j + 1, role="follower",
            position=Position3(cx + formation_radius_m * math.cos(ang),
                               cy + formation_radius_m * math.sin(ang),
                               uav_altitude_m),
            compute_cycles_per_s=compute_cycles_per_s,
            memory_cap_bytes=memory_cap_bytes,
            energy_cap_j=energy_cap_j, tx_power_w=tx_power_w,
            bandwidth_hz=bandwidth_hz))

    sc = Scenario(targets=targets, fleet=tuple(fleet), models=tuple(models),
                  radio=radio or _DEFAULT_RADIO,
                  flight=flight or _DEFAULT_FLIGHT,
                  weights=weights or Weights(),
                  base=base, seed=seed, proc_rate_gb_min=proc_rate_gb_min)
    return validate_scenario(sc)
