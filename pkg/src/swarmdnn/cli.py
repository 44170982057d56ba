"""Experiment runner: plan / oracle / train / evaluate / rerun subcommands.

Every run writes ``manifest.json`` into the output directory before any
result, capturing the resolved arguments, tool version, and seeds; result
CSVs are pure functions of the manifest (wall-clock lives only in the
manifest), so ``swarmdnn rerun manifest.json`` reproduces them byte for
byte.  Exit codes: 0 success, 2 validation error, 3 enumeration guard, 4 IO
error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, assignment, marl
from .env import EnvConfig, SwarmEnv
from .pathplan import (plan_route, plan_route_pure_greedy, route_to_csv)
from .scenario import (Scenario, ScenarioError, TaskSpec,
                       generate_random_scenario, load_scenario)

EXIT_VALIDATION = 2
EXIT_GUARD = 3
EXIT_IO = 4

PLAN_CSV_HEADER = ("w", "seed", "fitness_randomized", "fitness_greedy",
                   "improvement")
EVAL_CSV_HEADER = ("method", "task_size_gb", "aoi_s", "eta", "utility")


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _out_dir(out: str | None) -> Path:
    root = out or os.environ.get("SWARMDNN_OUT_ROOT", "runs")
    p = Path(root)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot create output dir {p}: {exc}")
    return p


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {path}: {exc}")


def _parse_overrides(pairs) -> dict:
    conf = {}
    for pair in pairs:
        if "=" not in pair:
            _fail(EXIT_VALIDATION, f"--config expects KEY=VALUE, got {pair!r}")
        key, val = pair.split("=", 1)
        try:
            conf[key] = json.loads(val)
        except json.JSONDecodeError:
            conf[key] = val
    return conf


def _manifest(outdir: Path, command: str, args: dict) -> dict:
    doc = {
        "command": command,
        "args": args,
        "tool_version": __version__,
        "wall_clock": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _write(outdir / "manifest.json", payload)
    doc["sha256"] = hashlib.sha256(
        json.dumps({"command": command, "args": args},
                   sort_keys=True).encode()).hexdigest()
    return doc


def _load_or_generate(scenario_path, num_targets, num_uavs, seed) -> Scenario:
    if scenario_path:
        try:
            return load_scenario(scenario_path)
        except ScenarioError as exc:
            _fail(EXIT_VALIDATION, str(exc))
    return generate_random_scenario(num_targets, num_uavs, seed)


def _env_config(conf: dict) -> EnvConfig:
    fields = {f for f in EnvConfig.__dataclass_fields__}
    return EnvConfig(**{k: v for k, v in conf.items() if k in fields})


def _train_config(conf: dict, **fixed) -> marl.TrainConfig:
    fields = {f for f in marl.TrainConfig.__dataclass_fields__}
    kw = {k: v for k, v in conf.items() if k in fields}
    kw.update(fixed)
    return marl.TrainConfig(**kw)


@click.group()
@click.version_option(__version__)
def main():
    """UAV-swarm DNN task assignment experiments."""


# ---------------------------------------------------------------------------
@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Plan a single scenario file instead of a generated sweep.")
@click.option("--w", "w_grid", multiple=True, type=int,
              default=(10, 20, 30, 40, 50), show_default=True,
              help="Target counts for the generated sweep.")
@click.option("--seeds", default=30, show_default=True,
              help="Instances per target count.")
@click.option("--seed", default=0, show_default=True)
@click.option("--k", default=5, show_default=True)
@click.option("--restarts", default=20, show_default=True)
@click.option("--out", default=None)
def plan(scenario_path, w_grid, seeds, seed, k, restarts, out):
    """Randomized vs pure-greedy route costs; emits route.csv and plan.csv."""
    outdir = _out_dir(out)
    _manifest(outdir, "plan", {
        "scenario": scenario_path, "w_grid": list(w_grid), "seeds": seeds,
        "seed": seed, "k": k, "restarts": restarts})
    rows = []
    route_csv = None
    if scenario_path:
        sc = _load_or_generate(scenario_path, 0, 0, seed)
        r = plan_route(sc, k=k, restarts=restarts, seed=seed)
        g = plan_route_pure_greedy(sc)
        rows.append([len(sc.targets), seed, repr(r.total_fitness),
                     repr(g.total_fitness),
                     repr((g.total_fitness - r.total_fitness) / g.total_fitness)])
        route_csv = route_to_csv(r)
    else:
        for w in w_grid:
            for i in range(seeds):
                sc = generate_random_scenario(w, 9, seed=seed + i)
                r = plan_route(sc, k=k, restarts=restarts, seed=seed + i)
                g = plan_route_pure_greedy(sc)
                rows.append([w, seed + i, repr(r.total_fitness),
                             repr(g.total_fitness),
                             repr((g.total_fitness - r.total_fitness)
                                  / g.total_fitness)])
                if route_csv is None:
                    route_csv = route_to_csv(r)
    buf = io.StringIO()
    wtr = csv.writer(buf, lineterminator="\n")
    wtr.writerow(PLAN_CSV_HEADER)
    wtr.writerows(rows)
    _write(outdir / "plan.csv", buf.getvalue())
    _write(outdir / "route.csv", route_csv)
    click.echo(f"wrote {outdir / 'plan.csv'} ({len(rows)} rows)")


# ---------------------------------------------------------------------------
@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(), required=True)
@click.option("--target", "target_id", default=None, type=int,
              help="Target whose task to solve (default: first target).")
@click.option("--config", "config_pairs", multiple=True)
@click.option("--out", default=None)
def oracle(scenario_path, target_id, config_pairs, out):
    """Exhaustive best assignment for one task; emits oracle.csv."""
    outdir = _out_dir(out)
    conf = _parse_overrides(config_pairs)
    _manifest(outdir, "oracle", {"scenario": scenario_path,
                                 "target": target_id, "config": conf})
    sc = _load_or_generate(scenario_path, 0, 0, 0)
    tid = target_id if target_id is not None else sc.targets[0].id
    try:
        target = sc.target(tid)
    except KeyError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    task = TaskSpec(id=1, model=sc.model_for(target.dnn_type),
                    origin_target=tid, created_at=0.0,
                    max_latency=float(conf.get("task_max_latency_s", 60.0)))
    state = assignment.FleetState.initial(sc)
    state.visited_targets.add(tid)
    try:
        decision, report = assignment.solve_oracle(task, sc, state)
    except ValueError as exc:
        _fail(EXIT_GUARD, str(exc))
    count = assignment.decision_count(len(task.model.layers),
                                      len(sc.followers))
    _write(outdir / "oracle.csv",
           assignment.oracle_csv([assignment.oracle_row(decision, report, sc)]))
    click.echo(f"enumerated {count} decisions; best U = {report.total!r} "
               f"(feasible={report.feasible})")


# ---------------------------------------------------------------------------
@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(), default=None)
@click.option("--targets", "num_targets", default=1, show_default=True)
@click.option("--uavs", "num_uavs", default=4, show_default=True)
@click.option("--algo", type=click.Choice(["gdm-maddpg", "maddpg",
                                           "maddpg+plan"]),
              default="gdm-maddpg", show_default=True)
@click.option("--episodes", default=100, show_default=True)
@click.option("--seeds", default=1, show_default=True,
              help="Independent training runs (seed, seed+1, ...).")
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_pairs", multiple=True,
              help="KEY=VALUE overrides for TrainConfig/EnvConfig fields.")
@click.option("--out", default=None)
def train(scenario_path, num_targets, num_uavs, algo, episodes, seeds, seed,
          config_pairs, out):
    """Train one algorithm; emits train_seed<k>.csv and checkpoints."""
    outdir = _out_dir(out)
    conf = _parse_overrides(config_pairs)
    _manifest(outdir, "train", {
        "scenario": scenario_path, "targets": num_targets, "uavs": num_uavs,
        "algo": algo, "episodes": episodes, "seeds": seeds, "seed": seed,
        "config": conf})
    sc = _load_or_generate(scenario_path, num_targets, num_uavs, seed)
    env_conf = _env_config(conf)
    base_algo = "maddpg" if algo == "maddpg+plan" else algo
    try:
        oracle_utility = _oracle_metrics(sc, env_conf)["utility"]
    except ValueError:
        oracle_utility = None  # instance beyond the enumeration guard
    for run in range(seeds):
        run_seed = seed + run
        if algo == "maddpg":
            # plain baseline inspects targets in id order, no planning
            route = _identity_route(sc)
        else:
            route = plan_route(sc, k=int(conf.get("k", 5)),
                               restarts=int(conf.get("restarts", 20)),
                               seed=run_seed)
        cfg = _train_config(conf, algo=base_algo, episodes=episodes,
                            seed=run_seed)
        log = marl.train(sc, route, cfg, env_conf,
                         oracle_utility=oracle_utility)
        _write(outdir / f"train_seed{run_seed}.csv", log.to_csv())
        marl.checkpoint_agents(log.agents,
                               outdir / f"checkpoint_seed{run_seed}.ckpt")
    click.echo(f"wrote {seeds} training log(s) to {outdir}")


def _identity_route(sc: Scenario):
    from .pathplan import route_from_order
    return route_from_order(sc, sorted(t.id for t in sc.targets))


# ---------------------------------------------------------------------------
@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(), default=None)
@click.option("--targets", "num_targets", default=1, show_default=True)
@click.option("--uavs", "num_uavs", default=4, show_default=True)
@click.option("--checkpoint", "checkpoints", multiple=True,
              type=(str, click.Path()),
              help="METHOD PATH pairs, e.g. --checkpoint gdm-maddpg c.ckpt")
@click.option("--sizes", multiple=True, type=float,
              default=(10.0, 20.0, 40.0, 60.0, 80.0), show_default=True)
@click.option("--episodes", default=20, show_default=True,
              help="Evaluation episodes per grid point.")
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_pairs", multiple=True)
@click.option("--with-oracle/--no-oracle", default=False,
              help="Include the exhaustive oracle as a reference method.")
@click.option("--with-greedy/--no-greedy", default=False,
              help="Include the myopic claim-the-frontier baseline.")
@click.option("--out", default=None)
def evaluate(scenario_path, num_targets, num_uavs, checkpoints, sizes,
             episodes, seed, config_pairs, with_oracle, with_greedy, out):
    """Sweep task sizes; emits metrics.csv with AoI / eta / utility."""
    outdir = _out_dir(out)
    conf = _parse_overrides(config_pairs)
    _manifest(outdir, "evaluate", {
        "scenario": scenario_path, "targets": num_targets, "uavs": num_uavs,
        "checkpoints": [list(c) for c in checkpoints], "sizes": list(sizes),
        "episodes": episodes, "seed": seed, "config": conf,
        "with_oracle": with_oracle, "with_greedy": with_greedy})
    base = _load_or_generate(scenario_path, num_targets, num_uavs, seed)
    env_conf = _env_config(conf)
    extra = ([("oracle", None)] if with_oracle else [])
    extra += ([("greedy", None)] if with_greedy else [])
    rows = []
    for method, ckpt in list(checkpoints) + extra:
        if ckpt is not None and not Path(ckpt).exists():
            _fail(EXIT_IO, f"missing checkpoint {ckpt}")
        for size in sizes:
            sc = _with_task_size(base, size)
            route = plan_route(sc, seed=seed)
            env = SwarmEnv(sc, route, env_conf, seed=seed)
            if method == "oracle":
                try:
                    m = _oracle_metrics(sc, env_conf)
                except ValueError as exc:
                    _fail(EXIT_GUARD, str(exc))
            elif method == "greedy":
                m = _greedy_metrics(env, episodes, seed)
            else:
                cfg = _train_config(conf, algo=("maddpg" if method.startswith(
                    "maddpg") else "gdm-maddpg"))
                agents = marl.load_agent_actors(ckpt, env.obs_dim,
                                                env.action_dim, cfg)
                schedule = marl.diffusion.make_schedule(cfg.diffusion_T)
                rng = np.random.default_rng(seed)
                m = marl.evaluate_policy(env, agents, schedule, rng, episodes)
            rows.append([method, repr(float(size)), repr(m["aoi_s"]),
                         repr(m["eta"]), repr(m["utility"])])
    buf = io.StringIO()
    wtr = csv.writer(buf, lineterminator="\n")
    wtr.writerow(EVAL_CSV_HEADER)
    wtr.writerows(rows)
    _write(outdir / "metrics.csv", buf.getvalue())
    click.echo(f"wrote {outdir / 'metrics.csv'} ({len(rows)} rows)")


def _with_task_size(sc: Scenario, size_gb: float) -> Scenario:
    from dataclasses import replace as dc_replace
    targets = tuple(dc_replace(t, task_size_gb=float(size_gb))
                    for t in sc.targets)
    return dc_replace(sc, targets=targets)


def _greedy_metrics(env: SwarmEnv, episodes: int, seed: int) -> dict:
    """Myopic rollout: every agent claims the largest feasible block of the
    oldest open task each round; the contention rule serializes execution."""
    rng = np.random.default_rng(seed)
    utils, aois, etas = [], [], []
    for _ in range(episodes):
        env.reset(seed=int(rng.integers(2 ** 31)))
        while not env.done:
            actions = []
            for i in range(env.num_agents):
                mask = env.feasible_mask(i)
                claims = np.flatnonzero(mask[1:])
                actions.append(int(claims[-1]) + 1 if claims.size else 0)
            env.step(actions)
        m = env.episode_metrics()
        utils.append(m["utility"])
        aois.append(m["aoi_s"])
        etas.append(m["eta"])
    return {"utility": float(np.mean(utils)),
            "aoi_s": float(np.nanmean(aois)),
            "eta": float(np.mean(etas))}


def _oracle_metrics(sc: Scenario, env_conf: EnvConfig) -> dict:
    """Static oracle reference on the first target's task.

    Raises ValueError when the instance exceeds the enumeration guard.
    """
    tid = sc.targets[0].id
    task = TaskSpec(id=1, model=sc.model_for(sc.targets[0].dnn_type),
                    origin_target=tid, created_at=0.0,
                    max_latency=env_conf.task_max_latency_s)
    state = assignment.FleetState.initial(sc)
    state.visited_targets.add(tid)
    _, report = assignment.solve_oracle(task, sc, state)
    return {"aoi_s": report.aoi_s, "eta": report.eta,
            "utility": report.total}


# ---------------------------------------------------------------------------
@main.command()
@click.argument("manifest_path", type=click.Path(exists=True))
@click.option("--out", default=None,
              help="Replay into a different directory (default: in place).")
def rerun(manifest_path, out):
    """Re-execute a recorded run; outputs are byte-identical."""
    try:
        doc = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_IO, f"cannot read manifest: {exc}")
    args = doc["args"]
    outdir = out or str(Path(manifest_path).parent)
    cmd = doc["command"]
    runner = main.commands[{"plan": "plan", "oracle": "oracle",
                            "train": "train", "evaluate": "evaluate"}[cmd]]
    argv = _manifest_to_argv(cmd, args, outdir)
    runner.main(argv, standalone_mode=False)
    click.echo(f"reran {cmd} into {outdir}")


def _manifest_to_argv(cmd: str, args: dict, outdir: str) -> list:
    argv = ["--out", outdir]
    conf = args.get("config", {})
    for key, val in conf.items():
        argv += ["--config", f"{key}={json.dumps(val)}"]
    if cmd == "plan":
        for w in args["w_grid"]:
            argv += ["--w", str(w)]
        argv += ["--seeds", str(args["seeds"]), "--seed", str(args["seed"]),
                 "--k", str(args["k"]), "--restarts", str(args["restarts"])]
        if args.get("scenario"):
            argv += ["--scenario", args["scenario"]]
    elif cmd == "oracle":
        argv += ["--scenario", args["scenario"]]
        if args.get("target") is not None:
            argv += ["--target", str(args["target"])]
    elif cmd == "train":
        if args.get("scenario"):
            argv += ["--scenario", args["scenario"]]
        argv += ["--targets", str(args["targets"]), "--uavs",
                 str(args["uavs"]), "--algo", args["algo"], "--episodes",
                 str(args["episodes"]), "--seeds", str(args["seeds"]),
                 "--seed", str(args["seed"])]
    elif cmd == "evaluate":
        if args.get("scenario"):
            argv += ["--scenario", args["scenario"]]
        argv += ["--targets", str(args["targets"]), "--uavs",
                 str(args["uavs"]), "--episodes", str(args["episodes"]),
                 "--seed", str(args["seed"])]
        for size in args["sizes"]:
            argv += ["--sizes", str(size)]
        for method, path in args.get("checkpoints", []):
            argv += ["--checkpoint", method, path]
        if args.get("with_oracle"):
            argv += ["--with-oracle"]
        if args.get("with_greedy"):
            argv += ["--with-greedy"]
    return argv


if __name__ == "__main__":
    main()
