import pathlib

import numpy as np
import pytest

import lorafp

PLANS = pathlib.Path(__file__).parents[2] / "plans"


@pytest.mark.parametrize("name", ["desk", "full"])
def test_shipped_plans_load(name: str, tmp_path: pathlib.Path) -> None:
    plan = lorafp.experiment.plan.load_plan(PLANS / f"{name}.json", output_dir=tmp_path)
    assert set(plan.axes) == set(lorafp.experiment.plan.AXES)
    assert plan.oob_scenarios == ("day1", "outdoor")
    assert [s.spreading_factor for s in plan.axis_scenarios("config")] == [7, 8, 11, 12]
    samples = int(plan.transmission.duration_s * plan.sample_rate_hz)
    windows = samples // plan.capture.window_len
    assert windows == {"desk": 244, "full": 2441}[name]


def desk_plan(
    tmp_path: pathlib.Path, seed: int, *overrides: str
) -> lorafp.experiment.plan.ExperimentPlan:
    return lorafp.experiment.plan.load_plan(
        PLANS / "desk.json",
        overrides=[f"seed={seed}", "representations=[\"FFT\"]", *overrides],
        output_dir=tmp_path / str(seed),
    )


def generate(plan: lorafp.experiment.plan.ExperimentPlan, *scenario_ids: str) -> None:
    devices, receivers = lorafp.experiment.runner.population(plan)
    for scenario_id in scenario_ids:
        lorafp.experiment.runner.generate_scenario_dataset(
            plan,
            plan.scenario(scenario_id),
            devices=devices,
            receivers=receivers,
            progress=False,
        )


@pytest.mark.slow
def test_oob_capture_beats_in_band(tmp_path: pathlib.Path) -> None:
    gaps = []
    for seed in range(3):
        plan = desk_plan(tmp_path, seed, "oob_scenarios=[\"day1\"]")
        generate(plan, "day1")
        report, _ = lorafp.experiment.runner.run_oob_comparison(plan, progress=False)
        assert report["num_parameters"].nunique() == 1
        acc = report.set_index("band_mode")["accuracy"]
        gaps.append(acc["in_band_plus_oob"] - acc["in_band_only"])
    assert np.mean(gaps) > 0


@pytest.mark.slow
def test_cross_config_near_chance(tmp_path: pathlib.Path) -> None:
    plan = desk_plan(tmp_path, 0, "axes.config=[\"day1\", \"sf12\"]")
    generate(plan, "day1", "sf12")
    (matrix,), _ = lorafp.experiment.runner.run_matrix(plan, "config", progress=False)
    chance = 1 / plan.num_devices
    assert abs(matrix.accuracy.loc["day1", "sf12"] - chance) <= 0.1
    assert matrix.accuracy.loc["day1", "day1"] > matrix.accuracy.loc["day1", "sf12"]
