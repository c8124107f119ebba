"""Dataset generation and experiments driven by a plan."""

import json
import logging
import pathlib
from dataclasses import dataclass
from typing import Any, Iterable, Literal

import numpy as np
import pandas as pd
import sqlalchemy as sa
import torch
from tqdm import tqdm

from .. import utils
from ..capture import FrameSet, capture_frames, measure_oob_power, normalized_spectrum
from ..channel import SF_BY_CONFIG, ScenarioSpec, apply_channel, realize_channel
from ..classifier.model import CnnArchitecture, load_checkpoint, save_checkpoint
from ..classifier.train import Evaluation, TrainedModel, evaluate, train, write_history
from ..errors import DatasetMissingError
from ..impairments import (
    DeviceProfile,
    ReceiverProfile,
    apply_device,
    apply_receiver,
    generate_population,
    generate_receivers,
    read_population,
    write_population,
)
from ..sigmf import api as sigmf_api
from ..sigmf import feat as sigmf_feat
from ..waveform import LoRaConfig, SymbolStream, synthesize_transmission
from .plan import AXES, ExperimentPlan

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

WALL_CLOCK_TOLERANCE = 0.1
"""Allowed relative training-time difference between band modes.

:meta hide-value:
"""

INDEX_DATABASE = "lorafp.sqlite"
"""Name of the dataset index database written into a plan's output directory.

:meta hide-value:
"""


@dataclass(frozen=True, eq=False)
class AccuracyMatrix:
    """Accuracies of models trained on one scenario and tested on another."""

    #: Axis the scenarios vary along.
    axis: str

    #: Frame representation.
    representation: str

    #: Band selection mode.
    band_mode: str

    #: Accuracies with train scenarios along rows and test scenarios along
    #: columns. Diagonal entries use the held-out test split of the training
    #: scenario.
    accuracy: pd.DataFrame

    #: Number of test frames behind each accuracy.
    frame_counts: pd.DataFrame

    #: Confusion matrices keyed by ``(train_scenario, test_scenario)``.
    confusion: dict[tuple[str, str], np.ndarray]

    @property
    def stem(self) -> str:
        """File name stem of this matrix's CSV exports."""
        return f"{self.axis}_{self.representation}_{self.band_mode}"

    def write(self, directory: str | pathlib.Path, /) -> list[pathlib.Path]:
        """Write the accuracy, count and confusion CSVs.

        Returns:
            The written paths.

        """
        directory = pathlib.Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = [
            directory / f"{self.stem}_accuracy.csv",
            directory / f"{self.stem}_counts.csv",
        ]
        self.accuracy.to_csv(paths[0], float_format="%.6f")
        self.frame_counts.to_csv(paths[1])
        for (train_id, test_id), confusion in sorted(self.confusion.items()):
            path = directory / f"{self.stem}_confusion_{train_id}_{test_id}.csv"
            Evaluation(0.0, confusion).confusion_frame().to_csv(path)
            paths.append(path)
        return paths


def population(
    plan: ExperimentPlan, /, *, write: bool = True
) -> tuple[list[DeviceProfile], list[ReceiverProfile]]:
    """Create (or reload) the plan's device and receiver populations.

    The populations are written to ``population.json`` in the output
    directory. An existing file is reused so every command of a plan sees the
    same physical devices.

    """
    path = plan.output_dir / "population.json"
    if path.exists():
        devices, receivers = read_population(path)
        if len(devices) == plan.num_devices and len(receivers) == plan.num_receivers:
            return devices, receivers
        logger.warning(f"Population file {path} doesn't match the plan; regenerating")
    devices = generate_population(plan.num_devices, plan.population_seed, plan.spread)
    receivers = generate_receivers(
        plan.num_receivers, plan.receiver_seed, plan.receiver_spread
    )
    if write:
        write_population(path, devices, receivers)
    return devices, receivers


def payload(
    plan: ExperimentPlan, config: LoRaConfig, transmission: int, /
) -> SymbolStream:
    """Payload of a transmission. Every device sends the same payload so
    payload content can't identify a device."""
    return SymbolStream.random(
        config.spreading_factor,
        plan.lora.payload_symbols,
        seed=utils.derive_seed(plan.seed, 3, transmission),
    )


def generate_scenario_dataset(
    plan: ExperimentPlan,
    scenario: ScenarioSpec,
    /,
    *,
    devices: None | list[DeviceProfile] = None,
    receivers: None | list[ReceiverProfile] = None,
    progress: bool = True,
) -> list[pathlib.Path]:
    """Simulate and record every device's transmissions in a scenario.

    Each transmission is synthesized, impaired by its device, passed through a
    channel realization of the scenario, impaired by the scenario's receiver,
    and written as a recording pair. Everything is a pure function of the
    plan, so regenerating gives bit-identical files.

    Args:
        plan: Experiment plan.
        scenario: Scenario to record.
        devices: Device population. Defaults to :func:`population`.
        receivers: Receiver population. Defaults to :func:`population`.
        progress: Whether to show a progress bar.

    Returns:
        Base paths of the written recordings.

    Raises:
        `OSError`: If any recording couldn't be written. Every failure is
            logged before raising.

    """
    if devices is None or receivers is None:
        devices, receivers = population(plan)
    receiver = receivers[scenario.receiver_id - 1]
    config = plan.lora_config(scenario)
    fs = plan.sample_rate_hz
    out_dir = plan.dataset_dir(scenario)
    written = []
    failures = []
    num_tx = plan.transmission.transmissions_per_device
    jobs = [(d, t) for d in devices for t in range(num_tx)]
    for device, t in tqdm(
        jobs,
        desc=f"Generating scenario `{scenario.scenario_id}`",
        position=0,
        leave=False,
        disable=not progress,
    ):
        ideal = synthesize_transmission(
            config,
            payload(plan, config, t),
            fs,
            plan.transmission.duration_s,
            guard_s=plan.transmission.guard_s,
        )
        tx = apply_device(ideal, device, key=utils.derive_seed(scenario.rng_seed, t))
        channel = realize_channel(
            scenario, utils.derive_seed(device.device_id, t), sample_rate_hz=fs
        )
        rx = apply_receiver(
            apply_channel(tx, channel),
            receiver,
            key=utils.derive_seed(scenario.rng_seed, device.device_id, t),
        )
        meta = sigmf_api.RecordingMeta(
            sample_rate_hz=fs,
            carrier_hz=rx.carrier_hz,
            datetime=utils.capture_datetime(scenario.day, transmission=t),
            device_id=device.device_id,
            scenario_id=scenario.scenario_id,
            day=scenario.day,
            location=scenario.location,
            config_id=scenario.config_id,
            receiver_id=scenario.receiver_id,
            transmission=t,
            description=(
                f"Simulated LoRa SF{config.spreading_factor} transmission of device "
                f"{device.device_id}"
            ),
        )
        base = out_dir / f"dev{device.device_id:02d}_tx{t:02d}"
        try:
            sigmf_api.write_recording(rx, meta, base)
        except OSError as e:
            logger.error(f"Failed to write recording {base}: {e}")
            failures.append(base)
            continue
        written.append(base)
    if failures:
        raise OSError(
            f"{len(failures)} recordings of scenario `{scenario.scenario_id}` "
            "couldn't be written"
        )
    logger.info(
        f"Wrote {len(written)} recordings for scenario `{scenario.scenario_id}` "
        f"to {out_dir}"
    )
    return written


def install_index(plan: ExperimentPlan, /) -> int:
    """Index the plan's recordings into a database in its output directory.

    Returns:
        Number of indexed recordings.

    """
    engine = sa.create_engine(f"sqlite:///{plan.output_dir / INDEX_DATABASE}")
    try:
        return sigmf_feat.recordings.install(
            plan.output_dir / "datasets", engine=engine, recreate_tables=True
        )
    finally:
        engine.dispose()


def load_frames(
    plan: ExperimentPlan,
    scenario: ScenarioSpec | str,
    /,
    *,
    band_mode: None | str = None,
    representation: None | str = None,
) -> FrameSet:
    """Frame every recording of a scenario.

    Args:
        plan: Experiment plan.
        scenario: Scenario (or its ID).
        band_mode: Replaces the plan's band mode.
        representation: Replaces the plan's representation.

    Returns:
        Frames of every device, in recording path order.

    Raises:
        `DatasetMissingError`: If the scenario's dataset hasn't been generated.

    """
    spec = plan.scenario(scenario) if isinstance(scenario, str) else scenario
    changes: dict[str, Any] = {}
    if band_mode is not None:
        changes["band_mode"] = band_mode
    if representation is not None:
        changes["representation"] = representation
    config = plan.capture_config(**changes)
    directory = plan.dataset_dir(spec)
    index = (
        sigmf_feat.recordings.build_dataset_index(
            directory, expected_devices=set(range(plan.num_devices))
        )
        if directory.exists()
        else None
    )
    if index is None or not len(index):
        raise DatasetMissingError(
            f"No dataset for scenario `{spec.scenario_id}` in {directory}; "
            "run `lorafp generate` first"
        )
    frames = []
    for row in index.recordings.itertuples():
        buffer, _ = sigmf_api.read_recording(row.path)
        frames += capture_frames(
            buffer,
            config,
            plan.lora.bandwidth_hz,
            label=int(row.device_id),
            scenario_id=spec.scenario_id,
            transmission=int(row.transmission),
        )
    logger.debug(
        f"Loaded {len(frames)} {config.representation} frames for scenario "
        f"`{spec.scenario_id}` ({config.band_mode})"
    )
    return FrameSet.from_frames(frames, window_len=config.window_len)


def build_model(plan: ExperimentPlan, /) -> CnnArchitecture:
    """A freshly initialized classifier for the plan (seeded)."""
    torch.manual_seed(plan.schedule.rng_seed)
    return CnnArchitecture(plan.capture.window_len, plan.num_devices)


def train_scenario(
    plan: ExperimentPlan,
    scenario: ScenarioSpec | str,
    /,
    *,
    representation: str,
    band_mode: None | str = None,
    frames: None | FrameSet = None,
    progress: bool = True,
) -> tuple[TrainedModel, list[pathlib.Path]]:
    """Train one model on a scenario and save its checkpoint and history.

    Returns:
        The trained model and the written artifact paths.

    """
    spec = plan.scenario(scenario) if isinstance(scenario, str) else scenario
    band_mode = band_mode or plan.capture.band_mode
    if frames is None:
        frames = load_frames(
            plan, spec, band_mode=band_mode, representation=representation
        )
    model = build_model(plan)
    trained = train(model, frames, plan.split, plan.schedule, progress=progress)
    name = f"{spec.scenario_id}_{representation}_{band_mode}"
    stem = plan.output_dir / "models" / name
    paths = [
        save_checkpoint(stem.with_suffix(".pt"), trained.model, schedule=plan.schedule),
        write_history(trained.history, stem.with_name(stem.name + "_history.csv")),
    ]
    return trained, paths


def evaluate_checkpoint(
    plan: ExperimentPlan,
    checkpoint: str | pathlib.Path,
    scenario: ScenarioSpec | str,
    /,
    *,
    representation: str,
    band_mode: None | str = None,
) -> tuple[Evaluation, list[pathlib.Path]]:
    """Evaluate a saved model on every frame of a scenario.

    Returns:
        The evaluation and the written confusion matrix path.

    """
    spec = plan.scenario(scenario) if isinstance(scenario, str) else scenario
    band_mode = band_mode or plan.capture.band_mode
    model, _ = load_checkpoint(checkpoint)
    frames = load_frames(plan, spec, band_mode=band_mode, representation=representation)
    result = evaluate(model, frames)
    path = (
        plan.output_dir
        / "evaluations"
        / f"{pathlib.Path(checkpoint).stem}_on_{spec.scenario_id}_confusion.csv"
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    result.confusion_frame().to_csv(path)
    logger.info(
        f"Accuracy of {pathlib.Path(checkpoint).name} on `{spec.scenario_id}`: "
        f"{result.accuracy:.4f} over {result.num_frames} frames"
    )
    return result, [path]


def run_matrix(
    plan: ExperimentPlan,
    axis: Literal["day", "location", "config", "receiver"],
    /,
    *,
    representations: None | Iterable[str] = None,
    progress: bool = True,
) -> tuple[list[AccuracyMatrix], list[pathlib.Path]]:
    """Train on each scenario of an axis and test on every scenario of it.

    One model is trained per train scenario and representation. Diagonal
    cells use the training scenario's held-out test split. Off-diagonal cells
    use every frame of the foreign scenario.

    Args:
        plan: Experiment plan.
        axis: Axis to compare along.
        representations: Representations to compute matrices for. Defaults
            to the plan's.
        progress: Whether to show progress bars.

    Returns:
        One matrix per representation and every written artifact path.

    Raises:
        `DatasetMissingError`: If a scenario's dataset doesn't exist.
        `SingleClassError`: If a training scenario holds a single device.

    """
    if axis not in AXES:
        raise ValueError(f"Axis must be one of {AXES} but got `{axis}`")
    scenarios = plan.axis_scenarios(axis)
    ids = [s.scenario_id for s in scenarios]
    band_mode = plan.capture.band_mode
    matrices = []
    paths: list[pathlib.Path] = []
    for representation in representations or plan.representations:
        frames = {
            s.scenario_id: load_frames(
                plan, s, band_mode=band_mode, representation=representation
            )
            for s in scenarios
        }
        accuracy = pd.DataFrame(np.nan, index=pd.Index(ids, name="train"), columns=ids)
        counts = pd.DataFrame(0, index=pd.Index(ids, name="train"), columns=ids)
        confusion = {}
        for train_id in tqdm(
            ids,
            desc=f"{axis} matrix ({representation})",
            position=0,
            leave=True,
            disable=not progress,
        ):
            trained, artifacts = train_scenario(
                plan,
                train_id,
                representation=representation,
                band_mode=band_mode,
                frames=frames[train_id],
                progress=False,
            )
            paths += artifacts
            assert trained.splits is not None
            for test_id in ids:
                test = trained.splits.test if test_id == train_id else frames[test_id]
                result = evaluate(trained.model, test)
                accuracy.loc[train_id, test_id] = result.accuracy
                counts.loc[train_id, test_id] = result.num_frames
                confusion[(train_id, test_id)] = result.confusion
                logger.debug(
                    f"{axis}/{representation}: train `{train_id}` test `{test_id}` "
                    f"accuracy {result.accuracy:.4f}"
                )
        accuracy.columns.name = "test"
        counts.columns.name = "test"
        matrix = AccuracyMatrix(
            axis, representation, band_mode, accuracy, counts, confusion
        )
        paths += matrix.write(plan.output_dir / "matrices")
        matrices.append(matrix)
        logger.info(f"{axis} accuracy matrix ({representation}):\n{accuracy.round(3)}")
    return matrices, paths


def run_oob_comparison(
    plan: ExperimentPlan, /, *, progress: bool = True
) -> tuple[pd.DataFrame, list[pathlib.Path]]:
    """Compare in-band-only and in-band-plus-OOB captures.

    Every scenario in the plan's ``oob_scenarios`` is trained and tested
    (same scenario) under each band mode and representation.

    Returns:
        A report with one row per ``(scenario, representation, band_mode)``
        and the written artifact paths.

    Raises:
        `RuntimeError`: If the band modes produce models of different sizes.

    """
    rows = []
    paths: list[pathlib.Path] = []
    combos = [
        (s, r, b)
        for s in plan.oob_scenarios
        for r in plan.representations
        for b in ("in_band_only", "in_band_plus_oob")
    ]
    for scenario_id, representation, band_mode in tqdm(
        combos,
        desc="Band-mode comparison",
        position=0,
        leave=True,
        disable=not progress,
    ):
        trained, artifacts = train_scenario(
            plan,
            scenario_id,
            representation=representation,
            band_mode=band_mode,
            progress=False,
        )
        paths += artifacts
        assert trained.splits is not None
        result = evaluate(trained.model, trained.splits.test)
        rows.append(
            {
                "scenario_id": scenario_id,
                "location": plan.scenario(scenario_id).location,
                "representation": representation,
                "band_mode": band_mode,
                "accuracy": result.accuracy,
                "test_frames": result.num_frames,
                "num_parameters": trained.model.num_parameters,
                "wall_clock_s": trained.wall_clock_s,
            }
        )
    report = pd.DataFrame(rows)
    for (scenario_id, representation), g in report.groupby(
        ["scenario_id", "representation"], sort=False
    ):
        if g["num_parameters"].nunique() != 1:
            raise RuntimeError(
                f"Band modes produced models of different sizes for "
                f"`{scenario_id}`/{representation}: {g['num_parameters'].tolist()}"
            )
        times = g["wall_clock_s"]
        if times.max() > (1 + WALL_CLOCK_TOLERANCE) * times.min():
            logger.warning(
                f"Training time differs by more than {WALL_CLOCK_TOLERANCE:.0%} "
                f"across band modes for `{scenario_id}`/{representation}: "
                f"{times.round(2).tolist()} s"
            )
    out = plan.output_dir / "oob_comparison.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    # Wall-clock times vary between runs and stay out of the CSV.
    report.drop(columns="wall_clock_s").to_csv(out, index=False, float_format="%.6f")
    paths.append(out)
    logger.info(
        "Band-mode comparison:\n"
        + report.pivot_table(
            index=["scenario_id", "representation"],
            columns="band_mode",
            values="accuracy",
        ).round(3).to_string()
    )
    return report, paths


def export_spectra(
    plan: ExperimentPlan,
    /,
    *,
    subjects: Iterable[str] = ("configs", "phase_noise", "devices"),
) -> list[pathlib.Path]:
    """Write peak-normalized spectra over the capture span.

    Subjects are ideal transmissions of each LoRa configuration, an SF7
    transmission under each phase-noise magnitude, and an SF7 transmission
    of every device of the population. Each spectrum is a two-column CSV
    (``frequency_hz``, ``normalized_power_db``). A summary CSV lists every
    subject's OOB power ratio.

    Returns:
        The written paths.

    """
    fs = plan.sample_rate_hz
    duration = plan.spectra.duration_s
    out_dir = plan.output_dir / "spectra"
    out_dir.mkdir(parents=True, exist_ok=True)
    base_config = LoRaConfig(
        spreading_factor=SF_BY_CONFIG[1],
        bandwidth_hz=plan.lora.bandwidth_hz,
        preamble_symbols=plan.lora.preamble_symbols,
        coding_rate=plan.lora.coding_rate,
    )
    waveforms = {}
    subjects = set(subjects)
    if "configs" in subjects:
        for config_id in plan.spectra.configs:
            sf = SF_BY_CONFIG[config_id]
            config = LoRaConfig(
                spreading_factor=sf,
                bandwidth_hz=plan.lora.bandwidth_hz,
                preamble_symbols=plan.lora.preamble_symbols,
                coding_rate=plan.lora.coding_rate,
            )
            waveforms[f"config_{config_id}_sf{sf}"] = synthesize_transmission(
                config, payload(plan, config, 0), fs, duration
            )
    ideal = synthesize_transmission(
        base_config, payload(plan, base_config, 0), fs, duration
    )
    if "phase_noise" in subjects:
        for m in plan.spectra.phase_noise:
            profile = DeviceProfile(
                device_id=0,
                phase_noise_magnitude=m,
                rng_seed=utils.derive_seed(plan.seed, 4),
            )
            waveforms[f"phase_noise_{m:g}"] = apply_device(ideal, profile)
    if "devices" in subjects and plan.spectra.devices:
        devices, _ = population(plan)
        for device in devices:
            waveforms[f"device_{device.device_id:02d}"] = apply_device(ideal, device)

    paths = []
    summary = []
    for subject, buffer in waveforms.items():
        path = out_dir / f"{subject}.csv"
        normalized_spectrum(buffer).to_csv(path, index=False, float_format="%.6f")
        paths.append(path)
        summary.append(
            {
                "subject": subject,
                "oob_power_db": measure_oob_power(buffer, plan.lora.bandwidth_hz),
            }
        )
    summary_path = out_dir / "oob_power.csv"
    pd.DataFrame(summary, columns=["subject", "oob_power_db"]).to_csv(
        summary_path, index=False, float_format="%.6f"
    )
    paths.append(summary_path)
    logger.info(f"Wrote {len(waveforms)} spectra to {out_dir}")
    return paths


def write_manifest(
    plan: ExperimentPlan,
    command: str,
    artifacts: Iterable[pathlib.Path],
    /,
) -> pathlib.Path:
    """Append a run entry to the output directory's ``manifest.json``.

    Each entry records the command, the plan hash, the plan's seeds and every
    artifact with its SHA-256 hash. Artifact paths are relative to the output
    directory.

    Returns:
        The manifest path.

    """
    path = plan.output_dir / "manifest.json"
    runs = json.loads(path.read_text())["runs"] if path.exists() else []
    entries = []
    for artifact in sorted(set(pathlib.Path(a) for a in artifacts)):
        try:
            rel = artifact.relative_to(plan.output_dir)
        except ValueError:
            rel = artifact
        entries.append({"path": rel.as_posix(), "sha256": utils.sha256_file(artifact)})
    runs.append(
        {
            "command": command,
            "plan": plan.name,
            "plan_sha256": plan.sha256,
            "seeds": plan.seeds,
            "artifacts": entries,
        }
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"runs": runs}, indent=2) + "\n")
    return path
