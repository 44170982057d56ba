"""Golden-fixture render tests: every figure kind draws without error and
passes its element-count checks; inputs stay untouched; reruns overwrite."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from swarmdnn_analysis import figures
from swarmdnn_analysis.cli import main

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def runner():
    return CliRunner()


def test_route_map_edge_count(tmp_path):
    fig = figures.render_route_map(GOLDEN / "route.csv",
                                   GOLDEN / "scenario.json")
    ax = fig.axes[0]
    assert len(ax.lines) == 11  # ten targets plus the return leg
    figures.save(fig, tmp_path / "route.png")
    assert (tmp_path / "route.png").exists()


def test_cost_bars_group_count(tmp_path):
    fig = figures.render_cost_bars(GOLDEN / "plan.csv")
    ax = fig.axes[0]
    assert len(ax.containers) == 2        # randomized + greedy series
    assert len(ax.containers[0]) == 5     # five W groups
    figures.save(fig, tmp_path / "cost.png")
    assert (tmp_path / "cost.png").exists()


def test_train_curves_lines(tmp_path):
    fig = figures.render_train_curves([GOLDEN / "train_seed0.csv"])
    assert len(fig.axes[0].lines) == 1
    assert len(fig.axes[1].lines) == 1
    figures.save(fig, tmp_path / "train.png")


def test_train_curves_empty_log_axes_only(tmp_path, runner):
    fig = figures.render_train_curves([GOLDEN / "train_empty.csv"])
    assert len(fig.axes[0].lines) == 0
    figures.save(fig, tmp_path / "train.png")
    result = runner.invoke(main, ["train-curves", "--in",
                                  str(GOLDEN / "train_empty.csv"),
                                  "--out", str(tmp_path / "cli.png")])
    assert result.exit_code == 0
    assert (tmp_path / "cli.png").exists()


def test_metric_vs_size_lines(tmp_path):
    fig = figures.render_metric_vs_size(GOLDEN / "metrics.csv")
    for ax in fig.axes:
        assert len(ax.lines) == 2  # one line per method
    figures.save(fig, tmp_path / "metrics.png")


def test_schema_mismatch_names_missing_column(tmp_path, runner):
    bad = tmp_path / "bad.csv"
    bad.write_text("w,seed,fitness_randomized\n10,0,1.0\n", encoding="utf-8")
    with pytest.raises(figures.SchemaError, match="fitness_greedy"):
        figures.render_cost_bars(bad)
    result = runner.invoke(main, ["cost-bars", "--in", str(bad),
                                  "--out", str(tmp_path / "x.png")])
    assert result.exit_code == 2


def test_inputs_untouched_and_rerun_idempotent(tmp_path, runner):
    before = (GOLDEN / "plan.csv").read_bytes()
    out = tmp_path / "cost.png"
    for _ in range(2):
        result = runner.invoke(main, ["cost-bars", "--in",
                                      str(GOLDEN / "plan.csv"),
                                      "--out", str(out)])
        assert result.exit_code == 0
    assert (GOLDEN / "plan.csv").read_bytes() == before
    assert out.exists()


def test_cli_all_kinds(tmp_path, runner):
    cases = [
        (["route-map", "--in", str(GOLDEN / "route.csv"), "--scenario",
          str(GOLDEN / "scenario.json")], "r.png"),
        (["cost-bars", "--in", str(GOLDEN / "plan.csv")], "c.png"),
        (["train-curves", "--in", str(GOLDEN / "train_seed0.csv")], "t.png"),
        (["metric-vs-size", "--in", str(GOLDEN / "metrics.csv")], "m.png"),
    ]
    for args, name in cases:
        out = tmp_path / name
        result = runner.invoke(main, args + ["--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()
