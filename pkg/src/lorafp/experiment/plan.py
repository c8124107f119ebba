"""Experiment plan files.

A plan is a JSON document describing one experiment end to end: the device
and receiver populations, the LoRa transmission recipe, the scenarios and the
axes they're compared along, the capture settings, and the training
schedule. See ``docs/conventions.rst`` for the schema. Every key has a
default, so the smallest valid plan only lists its scenarios.

"""

import copy
import hashlib
import json
import logging
import pathlib
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

from .. import backend, utils
from ..capture import REPRESENTATIONS, CaptureConfig
from ..channel import ScenarioSpec
from ..classifier.train import SplitSpec, TrainSchedule
from ..errors import PlanError
from ..impairments import PopulationSpread
from ..waveform import LoRaConfig

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

AXES = ("day", "location", "config", "receiver")
"""Scenario axes accuracy matrices can be computed along.

:meta hide-value:
"""

_SECTIONS = {
    "name",
    "seed",
    "output_dir",
    "population",
    "receivers",
    "lora",
    "transmission",
    "capture",
    "schedule",
    "split",
    "scenarios",
    "axes",
    "oob_scenarios",
    "representations",
    "spectra",
}


@dataclass(frozen=True)
class LoRaRecipe:
    """What every device transmits, apart from the spreading factor."""

    #: Signal bandwidth (in Hz).
    bandwidth_hz: float = 125_000.0

    #: Preamble up-chirps per packet.
    preamble_symbols: int = 8

    #: Payload symbols per packet.
    payload_symbols: int = 16

    #: Coding rate tag.
    coding_rate: str = "4/5"

    #: Transmit power (in dBm).
    tx_power_dbm: float = 20.0


@dataclass(frozen=True)
class TransmissionRecipe:
    """How long and how often each device transmits per scenario."""

    #: Duration of one transmission (in seconds).
    duration_s: float = 2.0

    #: Transmissions per device per scenario.
    transmissions_per_device: int = 1

    #: Silence between packet repetitions (in seconds).
    guard_s: float = 0.01


@dataclass(frozen=True)
class SpectraRecipe:
    """Subjects of the spectrum exports."""

    #: LoRa configuration IDs to export ideal spectra for.
    configs: tuple[int, ...] = (1, 2, 3, 4)

    #: Phase-noise magnitudes to export spectra for.
    phase_noise: tuple[float, ...] = (0.0, 0.2, 0.4)

    #: Whether to export one spectrum per device of the population.
    devices: bool = True

    #: Duration of each exported waveform (in seconds).
    duration_s: float = 0.5


@dataclass(frozen=True, eq=False)
class ExperimentPlan:
    """A validated experiment plan."""

    #: Plan name.
    name: str

    #: Root seed every other seed is derived from by default.
    seed: int

    #: Directory all outputs are written under.
    output_dir: pathlib.Path

    #: Number of transmitting devices (classes).
    num_devices: int

    #: Device population seed.
    population_seed: int

    #: Device impairment ranges.
    spread: PopulationSpread

    #: Number of receivers.
    num_receivers: int

    #: Receiver population seed.
    receiver_seed: int

    #: Receiver impairment ranges.
    receiver_spread: PopulationSpread

    #: Transmitted waveform recipe.
    lora: LoRaRecipe

    #: Transmission timing.
    transmission: TransmissionRecipe

    #: Capture settings.
    capture: CaptureConfig

    #: Training schedule.
    schedule: TrainSchedule

    #: Train/validation/test split.
    split: SplitSpec

    #: Scenarios in plan order.
    scenarios: tuple[ScenarioSpec, ...]

    #: Axis name to the scenario IDs compared along it.
    axes: dict[str, tuple[str, ...]]

    #: Scenarios the band-mode comparison runs on.
    oob_scenarios: tuple[str, ...]

    #: Representations matrices and comparisons are computed for.
    representations: tuple[str, ...]

    #: Spectrum export subjects.
    spectra: SpectraRecipe

    #: The effective plan document (after overrides).
    document: dict[str, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        """Cross-field validation."""
        ids = [s.scenario_id for s in self.scenarios]
        if not ids:
            raise PlanError("A plan needs at least one scenario")
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise PlanError(f"Duplicate scenario IDs {dupes}")
        keys = [s.axes for s in self.scenarios]
        if len(set(keys)) != len(keys):
            raise PlanError(
                "Scenarios must differ in (day, location, config_id, receiver_id)"
            )
        for s in self.scenarios:
            if not 1 <= s.receiver_id <= self.num_receivers:
                raise PlanError(
                    f"Scenario `{s.scenario_id}` uses receiver {s.receiver_id} but "
                    f"the plan has {self.num_receivers} receivers"
                )
        for axis, members in self.axes.items():
            if axis not in AXES:
                raise PlanError(f"Axis must be one of {AXES} but got `{axis}`")
            unknown = sorted(set(members) - set(ids))
            if unknown:
                raise PlanError(f"Axis `{axis}` references unknown scenarios {unknown}")
        unknown = sorted(set(self.oob_scenarios) - set(ids))
        if unknown:
            raise PlanError(f"`oob_scenarios` references unknown scenarios {unknown}")
        bad = sorted(set(self.representations) - set(REPRESENTATIONS))
        if bad or not self.representations:
            raise PlanError(
                f"Representations must be a nonempty subset of {REPRESENTATIONS} "
                f"but got {list(self.representations)}"
            )
        if self.num_devices < 2:
            raise PlanError(
                f"A plan needs at least 2 devices but got {self.num_devices}"
            )

    @classmethod
    def from_dict(
        cls, doc: dict[str, Any], /, *, output_dir: None | str | pathlib.Path = None
    ) -> "ExperimentPlan":
        """Build a plan from a plan document.

        Args:
            doc: Plan document.
            output_dir: Replaces the document's output directory.

        Returns:
            The validated plan.

        Raises:
            `PlanError`: If the document is malformed or inconsistent.

        """
        unknown = sorted(set(doc) - _SECTIONS)
        if unknown:
            raise PlanError(f"Unknown plan sections {unknown}")
        try:
            return cls._from_dict(doc, output_dir=output_dir)
        except PlanError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise PlanError(f"Invalid plan: {e}") from e

    @classmethod
    def _from_dict(
        cls, doc: dict[str, Any], /, *, output_dir: None | str | pathlib.Path
    ) -> "ExperimentPlan":
        name = str(doc.get("name", "experiment"))
        seed = int(doc.get("seed", 0))
        population = dict(doc.get("population", {}))
        receivers = dict(doc.get("receivers", {}))
        spread = PopulationSpread.from_dict(population.pop("spread", {}))
        receiver_spread = (
            PopulationSpread.from_dict(receivers["spread"])
            if "spread" in receivers
            else PopulationSpread.receivers()
        )
        scenario_docs = doc.get("scenarios", [])
        scenarios = []
        for s in scenario_docs:
            s = dict(s)
            if "scenario_id" not in s:
                raise PlanError(f"Scenario {s} is missing `scenario_id`")
            scenario_id = str(s.pop("scenario_id"))
            scenarios.append(
                ScenarioSpec.from_preset(
                    scenario_id,
                    day=int(s.pop("day", 1)),
                    location=str(s.pop("location", "room")),
                    config_id=int(s.pop("config_id", 1)),
                    receiver_id=int(s.pop("receiver_id", 1)),
                    plan_seed=seed,
                    **s,
                )
            )
        oob_default = _default_oob_scenarios(scenarios) if scenarios else []
        spectra = dict(doc.get("spectra", {}))
        out = output_dir or doc.get("output_dir") or backend.data_path / name
        return cls(
            name=name,
            seed=seed,
            output_dir=pathlib.Path(out),
            num_devices=int(population.pop("num_devices", 10)),
            population_seed=int(population.pop("seed", seed)),
            spread=spread,
            num_receivers=int(receivers.get("count", 2)),
            receiver_seed=int(receivers.get("seed", utils.derive_seed(seed, 5))),
            receiver_spread=receiver_spread,
            lora=LoRaRecipe(**doc.get("lora", {})),
            transmission=TransmissionRecipe(**doc.get("transmission", {})),
            capture=CaptureConfig(**doc.get("capture", {})),
            schedule=TrainSchedule(**{"rng_seed": seed, **doc.get("schedule", {})}),
            split=SplitSpec(**{"rng_seed": seed, **doc.get("split", {})}),
            scenarios=tuple(scenarios),
            axes={
                k: tuple(str(i) for i in v) for k, v in doc.get("axes", {}).items()
            },
            oob_scenarios=tuple(doc.get("oob_scenarios", oob_default)),
            representations=tuple(doc.get("representations", REPRESENTATIONS)),
            spectra=SpectraRecipe(
                configs=tuple(int(c) for c in spectra.pop("configs", (1, 2, 3, 4))),
                phase_noise=tuple(
                    float(m) for m in spectra.pop("phase_noise", (0.0, 0.2, 0.4))
                ),
                **spectra,
            ),
            document=copy.deepcopy(doc),
        )

    @property
    def sample_rate_hz(self) -> float:
        """Capture sample rate."""
        return self.capture.sample_rate_hz

    @property
    def sha256(self) -> str:
        """Hash of the effective plan document."""
        canonical = json.dumps(self.document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @property
    def seeds(self) -> dict[str, int]:
        """Every root seed of the plan."""
        return {
            "plan": self.seed,
            "population": self.population_seed,
            "receivers": self.receiver_seed,
            "schedule": self.schedule.rng_seed,
            "split": self.split.rng_seed,
        }

    def scenario(self, scenario_id: str, /) -> ScenarioSpec:
        """Look up a scenario by ID.

        Raises:
            `PlanError`: If the plan has no such scenario.

        """
        for s in self.scenarios:
            if s.scenario_id == scenario_id:
                return s
        raise PlanError(f"Unknown scenario `{scenario_id}`")

    def axis_scenarios(self, axis: str, /) -> list[ScenarioSpec]:
        """Scenarios compared along an axis.

        Raises:
            `PlanError`: If the plan doesn't define the axis.

        """
        if axis not in self.axes:
            raise PlanError(
                f"Plan `{self.name}` doesn't define the `{axis}` axis "
                f"(defined: {sorted(self.axes)})"
            )
        return [self.scenario(i) for i in self.axes[axis]]

    def lora_config(self, scenario: ScenarioSpec, /) -> LoRaConfig:
        """LoRa configuration transmitted in a scenario."""
        return LoRaConfig(
            spreading_factor=scenario.spreading_factor,
            bandwidth_hz=self.lora.bandwidth_hz,
            preamble_symbols=self.lora.preamble_symbols,
            coding_rate=self.lora.coding_rate,
            tx_power_dbm=self.lora.tx_power_dbm,
        )

    def capture_config(self, **changes: Any) -> CaptureConfig:
        """The plan's capture config with some fields replaced."""
        return CaptureConfig(**{**asdict(self.capture), **changes})

    def dataset_dir(self, scenario: ScenarioSpec | str, /) -> pathlib.Path:
        """Directory holding a scenario's recordings."""
        scenario_id = scenario if isinstance(scenario, str) else scenario.scenario_id
        return self.output_dir / "datasets" / scenario_id


def _default_oob_scenarios(scenarios: list[ScenarioSpec], /) -> list[str]:
    """The first indoor scenario and the first outdoor scenario."""
    out = []
    indoor = [s for s in scenarios if s.location in ("room", "office")]
    outdoor = [s for s in scenarios if s.location == "outdoor"]
    for group in (indoor, outdoor):
        if group:
            out.append(group[0].scenario_id)
    return out or [scenarios[0].scenario_id]


def apply_overrides(doc: dict[str, Any], overrides: Iterable[str], /) -> dict[str, Any]:
    """Apply ``dotted.key=value`` overrides to a plan document.

    Numeric path components index into lists (e.g., ``scenarios.0.snr_db=10``).

    Args:
        doc: Plan document. It isn't modified.
        overrides: Override strings.

    Returns:
        A new document with the overrides applied.

    Raises:
        `PlanError`: If an override is malformed or indexes past a list.

    Examples:
        >>> from lorafp.experiment.plan import apply_overrides
        >>> apply_overrides({"schedule": {"max_epochs": 40}}, ["schedule.max_epochs=2"])
        {'schedule': {'max_epochs': 2}}

    """
    doc = copy.deepcopy(doc)
    for override in overrides:
        try:
            keys, value = utils.parse_override(override)
        except ValueError as e:
            raise PlanError(str(e)) from e
        node: Any = doc
        for key in keys[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(key)]
                except (ValueError, IndexError) as e:
                    raise PlanError(f"Bad list index `{key}` in `{override}`") from e
            else:
                node = node.setdefault(key, {})
        last = keys[-1]
        if isinstance(node, list):
            try:
                node[int(last)] = value
            except (ValueError, IndexError) as e:
                raise PlanError(f"Bad list index `{last}` in `{override}`") from e
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise PlanError(f"Can't set `{override}` on a non-mapping value")
        logger.debug(f"Plan override {'.'.join(keys)}={value!r}")
    return doc


def load_plan(
    path: str | pathlib.Path,
    /,
    *,
    overrides: Iterable[str] = (),
    output_dir: None | str | pathlib.Path = None,
) -> ExperimentPlan:
    """Read, override and validate a plan file.

    Args:
        path: JSON plan file.
        overrides: ``dotted.key=value`` overrides.
        output_dir: Replaces the plan's output directory.

    Returns:
        The validated plan.

    Raises:
        `PlanError`: If the file isn't valid JSON or the plan is invalid.

    """
    path = pathlib.Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise PlanError(f"Plan file {path} isn't valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise PlanError(f"Plan file {path} must hold a JSON object")
    doc = apply_overrides(doc, overrides)
    return ExperimentPlan.from_dict(doc, output_dir=output_dir)

