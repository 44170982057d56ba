"""Render swarmdnn result CSVs into figures.

Strictly read-only over the documented CSV/scenario-file contracts: nothing
is recomputed beyond medians for the cost bars, inputs are never modified,
and reruns overwrite outputs idempotently.  Each renderer returns the
matplotlib figure so tests can count its elements; ``save`` writes it out.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

FIGURE_KINDS = ("route-map", "cost-bars", "train-curves", "metric-vs-size")

ROUTE_COLUMNS = ("step", "target_id", "leg_distance_m", "leg_slack_s",
                 "cumulative_fitness")
PLAN_COLUMNS = ("w", "seed", "fitness_randomized", "fitness_greedy",
                "improvement")
TRAIN_COLUMNS = ("episode", "total_reward", "actor_loss", "critic_loss",
                 "eval_utility", "oracle_ratio")
METRIC_COLUMNS = ("method", "task_size_gb", "aoi_s", "eta", "utility")


class SchemaError(ValueError):
    """An input CSV is missing expected columns."""


def _read_rows(path, expected):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        missing = [c for c in expected if c not in got]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        return list(reader)


def save(fig, out_path) -> None:
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_route_map(route_csv, scenario_json):
    """Route edges over the target layout; one line segment per leg."""
    rows = _read_rows(route_csv, ROUTE_COLUMNS)
    doc = json.loads(Path(scenario_json).read_text(encoding="utf-8"))
    centers = {t["id"]: (t["center"]["x"], t["center"]["y"])
               for t in doc["targets"]}
    base = (doc["base"]["x"], doc["base"]["y"])

    fig, ax = plt.subplots(figsize=(6, 6))
    xs = [c[0] for c in centers.values()]
    ys = [c[1] for c in centers.values()]
    ax.scatter(xs, ys, marker="o", s=30, label="targets")
    ax.scatter([base[0]], [base[1]], marker="*", s=160, label="base")
    pos = base
    for row in rows:
        tid = int(row["target_id"])
        if tid != 0 and tid not in centers:
            raise SchemaError(
                f"{route_csv}: route references target {tid} which is not in "
                f"{scenario_json}; pass the scenario that produced the route")
        nxt = base if tid == 0 else centers[tid]
        ax.plot([pos[0], nxt[0]], [pos[1], nxt[1]], "-", color="tab:blue")
        pos = nxt
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("inspection route")
    ax.legend(loc="best")
    return fig


def render_cost_bars(plan_csv):
    """Median randomized vs pure-greedy fitness, one bar group per W."""
    rows = _read_rows(plan_csv, PLAN_COLUMNS)
    groups: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        groups.setdefault(int(row["w"]), []).append(
            (float(row["fitness_randomized"]), float(row["fitness_greedy"])))

    def median(vals):
        vals = sorted(vals)
        n = len(vals)
        mid = n // 2
        return vals[mid] if n % 2 else 0.5 * (vals[mid - 1] + vals[mid])

    ws = sorted(groups)
    rand = [median([a for a, _ in groups[w]]) for w in ws]
    greedy = [median([b for _, b in groups[w]]) for w in ws]
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.38
    xpos = range(len(ws))
    ax.bar([x - width / 2 for x in xpos], rand, width, label="randomized")
    ax.bar([x + width / 2 for x in xpos], greedy, width, label="pure greedy")
    ax.set_xticks(list(xpos), [str(w) for w in ws])
    ax.set_xlabel("number of targets")
    ax.set_ylabel("median route fitness")
    ax.legend()
    return fig


def render_train_curves(train_csvs):
    """Total reward and evaluation utility per episode, one line per log;
    header-only logs yield an axes-only figure."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for path in train_csvs:
        rows = _read_rows(path, TRAIN_COLUMNS)
        if not rows:
            continue
        eps = [int(r["episode"]) for r in rows]
        label = Path(path).stem
        ax1.plot(eps, [float(r["total_reward"]) for r in rows], label=label)
        ax2.plot(eps, [float(r["eval_utility"]) for r in rows], label=label)
    ax1.set_xlabel("episode")
    ax1.set_ylabel("total reward")
    ax2.set_xlabel("episode")
    ax2.set_ylabel("evaluation utility")
    if ax1.lines:
        ax1.legend()
    return fig


def render_metric_vs_size(metrics_csv):
    """AoI, completion rate, utility against task size, one line per method."""
    rows = _read_rows(metrics_csv, METRIC_COLUMNS)
    methods: dict[str, list] = {}
    for row in rows:
        methods.setdefault(row["method"], []).append(
            (float(row["task_size_gb"]), float(row["aoi_s"]),
             float(row["eta"]), float(row["utility"])))
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    titles = ("AoI [s]", "completion rate", "utility")
    for method, pts in sorted(methods.items()):
        pts.sort()
        sizes = [p[0] for p in pts]
        for ax, col in zip(axes, (1, 2, 3)):
            ax.plot(sizes, [p[col] for p in pts], marker="o", label=method)
    for ax, title in zip(axes, titles):
        ax.set_xlabel("task size [GB]")
        ax.set_ylabel(title)
        if methods:
            ax.legend()
    return fig
