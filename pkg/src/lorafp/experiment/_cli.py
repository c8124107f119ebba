"""Experiment CLI."""

import logging
import pathlib
from typing import Any, Callable

import click

from .. import utils
from ..capture import BAND_MODES, REPRESENTATIONS
from ..classifier import train as _train
from ..sigmf import api as _sigmf_api
from . import runner as _runner
from .plan import AXES, ExperimentPlan, load_plan

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


def plan_options(f: Callable[..., Any]) -> Callable[..., Any]:
    """Arguments and options shared by every experiment command."""
    f = click.option(
        "--verbose",
        "-v",
        is_flag=True,
        default=False,
        help="Sets the log level to DEBUG to show per-recording and per-cell details.",
    )(f)
    f = click.option(
        "--output-dir",
        "-o",
        type=click.Path(file_okay=False, path_type=pathlib.Path),
        default=None,
        help=(
            "Directory all outputs are written under. Replaces the plan's "
            "`output_dir` (which defaults to `lorafp_data/<plan name>`)."
        ),
    )(f)
    f = click.option(
        "--set",
        "-s",
        "overrides",
        multiple=True,
        help=(
            "Plan override of the form `dotted.key=value` (e.g., "
            "`schedule.max_epochs=2` or `scenarios.0.snr_db=10`). Values are "
            "parsed as JSON, falling back to strings. Can be given multiple times."
        ),
    )(f)
    return click.argument(
        "plan_path",
        metavar="PLAN",
        type=click.Path(exists=True, dir_okay=False, path_type=pathlib.Path),
    )(f)


def _load(
    plan_path: pathlib.Path,
    overrides: tuple[str, ...],
    output_dir: None | pathlib.Path,
    verbose: bool,
) -> ExperimentPlan:
    if verbose:
        logging.getLogger(__name__.split(".")[0]).setLevel(logging.DEBUG)
    plan = load_plan(plan_path, overrides=overrides, output_dir=output_dir)
    logger.info(f"Loaded plan `{plan.name}` (outputs in {plan.output_dir})")
    return plan


def _scenario_ids(plan: ExperimentPlan, scenario: tuple[str, ...]) -> list[str]:
    ids = utils.expand_csv(list(scenario))
    if not ids:
        return [s.scenario_id for s in plan.scenarios]
    for i in ids:
        plan.scenario(i)
    return ids


@click.group(help="Simulated LoRa fingerprinting experiments.")
def entry_point() -> None:
    ...


@entry_point.command(
    help=(
        "Create the device and receiver populations and write a SigMF "
        "dataset for each scenario of the plan."
    ),
)
@plan_options
@click.option(
    "--scenario",
    "-sc",
    multiple=True,
    help=(
        "Scenario to generate. Multiple scenarios can be specified by providing "
        "multiple `scenario` options or by separating IDs with a comma. "
        "Defaults to every scenario of the plan."
    ),
)
def generate(
    plan_path: pathlib.Path,
    overrides: tuple[str, ...] = (),
    output_dir: None | pathlib.Path = None,
    verbose: bool = False,
    scenario: tuple[str, ...] = (),
) -> None:
    plan = _load(plan_path, overrides, output_dir, verbose)
    ids = _scenario_ids(plan, scenario)
    devices, receivers = _runner.population(plan)
    artifacts = [plan.output_dir / "population.json"]
    for scenario_id in ids:
        for base in _runner.generate_scenario_dataset(
            plan,
            plan.scenario(scenario_id),
            devices=devices,
            receivers=receivers,
            progress=not verbose,
        ):
            artifacts += _sigmf_api.recording_paths(base)
    total = _runner.install_index(plan)
    logger.info(f"Indexed {total} recordings")
    _runner.write_manifest(plan, "generate", artifacts)


@entry_point.command(help="Train one classifier per scenario and representation.")
@plan_options
@click.option(
    "--scenario",
    "-sc",
    multiple=True,
    help=(
        "Scenario to train on. Multiple scenarios can be specified by providing "
        "multiple `scenario` options or by separating IDs with a comma. "
        "Defaults to every scenario of the plan."
    ),
)
@click.option(
    "--representation",
    "-r",
    type=click.Choice(REPRESENTATIONS),
    multiple=True,
    help="Frame representations to train on. Defaults to the plan's.",
)
@click.option(
    "--band-mode",
    "-b",
    type=click.Choice(BAND_MODES),
    default=None,
    help="Band selection mode. Defaults to the plan's capture band mode.",
)
def train(
    plan_path: pathlib.Path,
    overrides: tuple[str, ...] = (),
    output_dir: None | pathlib.Path = None,
    verbose: bool = False,
    scenario: tuple[str, ...] = (),
    representation: tuple[str, ...] = (),
    band_mode: None | str = None,
) -> None:
    plan = _load(plan_path, overrides, output_dir, verbose)
    artifacts = []
    for scenario_id in _scenario_ids(plan, scenario):
        for r in representation or plan.representations:
            trained, paths = _runner.train_scenario(
                plan,
                scenario_id,
                representation=r,
                band_mode=band_mode,
                progress=not verbose,
            )
            assert trained.splits is not None
            result = _train.evaluate(trained.model, trained.splits.test)
            logger.info(
                f"Test accuracy on `{scenario_id}` ({r}): {result.accuracy:.4f} "
                f"over {result.num_frames} frames"
            )
            artifacts += paths
    _runner.write_manifest(plan, "train", artifacts)


@entry_point.command(help="Evaluate a saved classifier on every frame of scenarios.")
@plan_options
@click.option(
    "--checkpoint",
    "-c",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=pathlib.Path),
    help="Checkpoint written by the `train` command.",
)
@click.option(
    "--scenario",
    "-sc",
    multiple=True,
    help=(
        "Scenario to evaluate on. Multiple scenarios can be specified by "
        "providing multiple `scenario` options or by separating IDs with a "
        "comma. Defaults to every scenario of the plan."
    ),
)
@click.option(
    "--representation",
    "-r",
    type=click.Choice(REPRESENTATIONS),
    default=None,
    help=(
        "Frame representation the checkpoint was trained on. Defaults to the "
        "plan's first representation."
    ),
)
@click.option(
    "--band-mode",
    "-b",
    type=click.Choice(BAND_MODES),
    default=None,
    help="Band selection mode. Defaults to the plan's capture band mode.",
)
def evaluate(
    plan_path: pathlib.Path,
    checkpoint: pathlib.Path,
    overrides: tuple[str, ...] = (),
    output_dir: None | pathlib.Path = None,
    verbose: bool = False,
    scenario: tuple[str, ...] = (),
    representation: None | str = None,
    band_mode: None | str = None,
) -> None:
    plan = _load(plan_path, overrides, output_dir, verbose)
    artifacts = [checkpoint]
    for scenario_id in _scenario_ids(plan, scenario):
        _, paths = _runner.evaluate_checkpoint(
            plan,
            checkpoint,
            scenario_id,
            representation=representation or plan.representations[0],
            band_mode=band_mode,
        )
        artifacts += paths
    _runner.write_manifest(plan, "evaluate", artifacts)


@entry_point.command(
    "cross-eval",
    help=(
        "Train on each scenario of an axis and test on every scenario of the "
        "same axis, writing accuracy, frame count and confusion matrices."
    ),
)
@plan_options
@click.option(
    "--axis",
    "-a",
    type=click.Choice(AXES),
    multiple=True,
    help="Axes to compute matrices for. Defaults to every axis the plan defines.",
)
@click.option(
    "--representation",
    "-r",
    type=click.Choice(REPRESENTATIONS),
    multiple=True,
    help="Frame representations to compute matrices for. Defaults to the plan's.",
)
def cross_eval(
    plan_path: pathlib.Path,
    overrides: tuple[str, ...] = (),
    output_dir: None | pathlib.Path = None,
    verbose: bool = False,
    axis: tuple[str, ...] = (),
    representation: tuple[str, ...] = (),
) -> None:
    plan = _load(plan_path, overrides, output_dir, verbose)
    artifacts = []
    axes = axis or tuple(a for a in AXES if a in plan.axes)
    if not axes:
        raise click.UsageError(f"Plan `{plan.name}` doesn't define any axes")
    for a in axes:
        _, paths = _runner.run_matrix(
            plan,
            a,  # type: ignore[arg-type]
            representations=representation or None,
            progress=not verbose,
        )
        artifacts += paths
    _runner.write_manifest(plan, "cross-eval", artifacts)


@entry_point.command(
    "oob-compare",
    help=(
        "Compare classifiers trained on in-band-only and in-band plus "
        "out-of-band captures of the plan's `oob_scenarios`."
    ),
)
@plan_options
def oob_compare(
    plan_path: pathlib.Path,
    overrides: tuple[str, ...] = (),
    output_dir: None | pathlib.Path = None,
    verbose: bool = False,
) -> None:
    plan = _load(plan_path, overrides, output_dir, verbose)
    _, artifacts = _runner.run_oob_comparison(plan, progress=not verbose)
    _runner.write_manifest(plan, "oob-compare", artifacts)


@entry_point.command(
    help=(
        "Export peak-normalized spectra of LoRa configurations, phase-noise "
        "magnitudes and devices, plus each subject's out-of-band power."
    ),
)
@plan_options
@click.option(
    "--subject",
    type=click.Choice(["configs", "phase_noise", "devices"]),
    multiple=True,
    help="Subject families to export. Defaults to all of them.",
)
def spectra(
    plan_path: pathlib.Path,
    overrides: tuple[str, ...] = (),
    output_dir: None | pathlib.Path = None,
    verbose: bool = False,
    subject: tuple[str, ...] = (),
) -> None:
    plan = _load(plan_path, overrides, output_dir, verbose)
    artifacts = _runner.export_spectra(
        plan, subjects=subject or ("configs", "phase_noise", "devices")
    )
    _runner.write_manifest(plan, "spectra", artifacts)
