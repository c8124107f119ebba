import json
import pathlib
from typing import Any

import pytest

import lorafp


def write_plan(tmp_path: pathlib.Path, doc: dict[str, Any]) -> pathlib.Path:
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(doc))
    return path


def test_tiny_plan(tmp_path: pathlib.Path) -> None:
    plan = lorafp.testing.tiny_plan(tmp_path)
    assert plan.output_dir == tmp_path
    assert plan.num_devices == 3
    assert plan.num_receivers == 2
    assert [s.scenario_id for s in plan.scenarios] == ["d1", "d2", "out"]
    assert [s.scenario_id for s in plan.axis_scenarios("day")] == ["d1", "d2"]
    assert plan.oob_scenarios == ("d1", "out")
    assert plan.representations == ("FFT",)
    assert plan.schedule.rng_seed == 7
    assert plan.capture.window_len == 1024
    assert plan.dataset_dir("d2") == tmp_path / "datasets" / "d2"
    assert plan.lora_config(plan.scenario("d1")).spreading_factor == 7
    assert set(plan.seeds) == {"plan", "population", "receivers", "schedule", "split"}


def test_defaults(tmp_path: pathlib.Path) -> None:
    plan = lorafp.experiment.plan.ExperimentPlan.from_dict(
        {"scenarios": [{"scenario_id": "a"}]}, output_dir=tmp_path
    )
    assert plan.num_devices == 10
    assert plan.capture.window_len == 8192
    assert plan.schedule.max_epochs == 40
    assert plan.representations == ("IQ", "FFT")
    assert plan.lora.preamble_symbols == 8
    assert plan.oob_scenarios == ("a",)


def test_load_plan_overrides(tmp_path: pathlib.Path) -> None:
    path = write_plan(tmp_path, lorafp.testing.TINY_PLAN)
    plan = lorafp.experiment.plan.load_plan(
        path,
        overrides=["seed=11", "scenarios.1.snr_db=3", "capture.representation=IQ"],
        output_dir=tmp_path / "out",
    )
    assert plan.seed == 11
    assert plan.scenario("d2").snr_db == 3
    assert plan.capture.representation == "IQ"
    assert plan.output_dir == tmp_path / "out"
    assert plan.document["seed"] == 11
    base = lorafp.experiment.plan.load_plan(path)
    assert base.sha256 != plan.sha256
    assert base.sha256 == lorafp.experiment.plan.load_plan(path).sha256


def test_scenario_seeds_follow_plan_seed(tmp_path: pathlib.Path) -> None:
    a = lorafp.testing.tiny_plan(tmp_path)
    b = lorafp.testing.tiny_plan(tmp_path, seed=8)
    again = lorafp.testing.tiny_plan(tmp_path)
    assert a.scenario("d1").rng_seed == again.scenario("d1").rng_seed
    assert a.scenario("d1").rng_seed != b.scenario("d1").rng_seed


@pytest.mark.parametrize(
    "changes",
    [
        {"bogus": 1},
        {"scenarios": []},
        {"scenarios": [{"day": 1}]},
        {"scenarios": [{"scenario_id": "a"}, {"scenario_id": "a", "day": 2}]},
        {"scenarios": [{"scenario_id": "a"}, {"scenario_id": "b"}]},
        {"scenarios": [{"scenario_id": "a", "receiver_id": 3}]},
        {"scenarios": [{"scenario_id": "a", "location": "moon"}]},
        {"axes": {"weather": ["d1"]}},
        {"axes": {"day": ["d1", "d9"]}},
        {"oob_scenarios": ["d9"]},
        {"representations": ["spectrogram"]},
        {"representations": []},
        {"population": {"num_devices": 1}},
        {"capture": {"window_len": 1000}},
        {"schedule": {"lr_drop_factor": 2.0}},
        {"lora": {"unknown_field": 1}},
    ],
)
def test_invalid_plans(tmp_path: pathlib.Path, changes: dict[str, Any]) -> None:
    with pytest.raises(lorafp.errors.PlanError) as e:
        lorafp.testing.tiny_plan(tmp_path, **changes)
    assert e.value.code == "experiment.plan"


def test_unknown_scenario_and_axis(tmp_path: pathlib.Path) -> None:
    plan = lorafp.testing.tiny_plan(tmp_path)
    with pytest.raises(lorafp.errors.PlanError):
        plan.scenario("d9")
    with pytest.raises(lorafp.errors.PlanError):
        plan.axis_scenarios("receiver")


def test_load_plan_bad_json(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "plan.json"
    path.write_text("{not json")
    with pytest.raises(lorafp.errors.PlanError):
        lorafp.experiment.plan.load_plan(path)
    path.write_text("[1, 2]")
    with pytest.raises(lorafp.errors.PlanError):
        lorafp.experiment.plan.load_plan(path)


@pytest.mark.parametrize("override", ["seed", "scenarios.9.day=2", "scenarios.x.day=2"])
def test_bad_overrides(override: str) -> None:
    with pytest.raises(lorafp.errors.PlanError):
        lorafp.experiment.plan.apply_overrides(lorafp.testing.TINY_PLAN, [override])


def test_apply_overrides_copies() -> None:
    doc = {"schedule": {"max_epochs": 40}}
    out = lorafp.experiment.plan.apply_overrides(doc, ["schedule.batch_size=8"])
    assert out == {"schedule": {"max_epochs": 40, "batch_size": 8}}
    assert doc == {"schedule": {"max_epochs": 40}}
