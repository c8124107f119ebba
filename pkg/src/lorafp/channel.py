"""Block-static Rayleigh multipath channels with additive white Gaussian noise.

A scenario is a point on the deployment axes (day, location, LoRa
configuration, receiver). Locations set the channel statistics through
:data:`LOCATION_PRESETS`; days only change the random seed, so channels from
different days share statistics but not realizations.

"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import utils
from .waveform import DEFAULT_SAMPLE_RATE_HZ, ComplexSampleBuffer

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

LOCATIONS = ("room", "office", "outdoor")
"""Supported scenario locations.

:meta hide-value:
"""

SF_BY_CONFIG = {1: 7, 2: 8, 3: 11, 4: 12}
"""Spreading factor of each LoRa configuration ID.

:meta hide-value:
"""

ACTIVE_THRESHOLD = 0.1
"""Samples with magnitude below this fraction of the peak don't count towards
the measured signal power (packet gaps and channel ramps).

:meta hide-value:
"""


@dataclass(frozen=True)
class LocationPreset:
    """Channel statistics of one location."""

    #: Number of multipath taps.
    num_taps: int

    #: RMS delay spread of the exponential power-delay profile (in seconds).
    delay_spread_s: float

    #: Received signal-to-noise ratio (in dB).
    snr_db: float


LOCATION_PRESETS = {
    "room": LocationPreset(num_taps=3, delay_spread_s=100e-9, snr_db=25.0),
    "office": LocationPreset(num_taps=5, delay_spread_s=300e-9, snr_db=20.0),
    "outdoor": LocationPreset(num_taps=2, delay_spread_s=50e-9, snr_db=15.0),
}
"""Default channel statistics per location. Plans may override any field.

:meta hide-value:
"""


@dataclass(frozen=True)
class ScenarioSpec:
    """One point on the deployment axes and its channel statistics.

    Examples:
        >>> from lorafp.channel import ScenarioSpec
        >>> spec = ScenarioSpec.from_preset("d1", day=1, location="room", plan_seed=7)
        >>> spec.num_taps, spec.snr_db, spec.spreading_factor
        (3, 25.0, 7)

    """

    #: Unique scenario label within a plan.
    scenario_id: str

    #: Capture day (1-based).
    day: int = 1

    #: Capture location, one of :data:`LOCATIONS`.
    location: str = "room"

    #: LoRa configuration ID (see :data:`SF_BY_CONFIG`).
    config_id: int = 1

    #: Receiver ID.
    receiver_id: int = 1

    #: Received SNR (in dB).
    snr_db: float = 25.0

    #: Delay spread (in seconds).
    delay_spread_s: float = 100e-9

    #: Number of multipath taps.
    num_taps: int = 3

    #: Seed of the scenario's channel realizations.
    rng_seed: int = 0

    def __post_init__(self) -> None:
        """Argument validation."""
        if self.location not in LOCATIONS:
            raise ValueError(
                f"Location must be one of {LOCATIONS} but got `{self.location}`"
            )
        if self.config_id not in SF_BY_CONFIG:
            raise ValueError(
                f"Config ID must be one of {tuple(SF_BY_CONFIG)} but got "
                f"{self.config_id}"
            )
        if self.day < 1:
            raise ValueError(f"Day must be at least 1 but got {self.day}")
        if not math.isfinite(self.snr_db):
            raise ValueError(f"Scenario SNR must be finite but got {self.snr_db}")
        if self.num_taps < 1:
            raise ValueError(f"Need at least 1 tap but got {self.num_taps}")
        if self.delay_spread_s < 0:
            raise ValueError(
                f"Delay spread must be nonnegative but got {self.delay_spread_s}"
            )

    @classmethod
    def from_preset(
        cls,
        scenario_id: str,
        /,
        *,
        day: int = 1,
        location: str = "room",
        config_id: int = 1,
        receiver_id: int = 1,
        plan_seed: int = 0,
        **overrides: float,
    ) -> "ScenarioSpec":
        """Create a scenario from its axis tags and the location presets.

        The seed is derived from the plan seed and the axis tags, so a
        scenario's channels are a pure function of where it sits on the
        axes.

        Args:
            scenario_id: Scenario label.
            day: Capture day.
            location: Capture location.
            config_id: LoRa configuration ID.
            receiver_id: Receiver ID.
            plan_seed: Experiment plan seed.
            **overrides: Replacements for ``snr_db``, ``delay_spread_s`` or
                ``num_taps``.

        Returns:
            A new scenario spec.

        """
        if location not in LOCATION_PRESETS:
            raise ValueError(
                f"Location must be one of {LOCATIONS} but got `{location}`"
            )
        preset = LOCATION_PRESETS[location]
        params = {
            "num_taps": preset.num_taps,
            "delay_spread_s": preset.delay_spread_s,
            "snr_db": preset.snr_db,
        }
        unknown = set(overrides) - set(params)
        if unknown:
            raise ValueError(f"Unknown scenario overrides {sorted(unknown)}")
        params.update(overrides)
        seed = utils.derive_seed(
            plan_seed, day, LOCATIONS.index(location), config_id, receiver_id
        )
        return cls(
            scenario_id,
            day=day,
            location=location,
            config_id=config_id,
            receiver_id=receiver_id,
            snr_db=float(params["snr_db"]),
            delay_spread_s=float(params["delay_spread_s"]),
            num_taps=int(params["num_taps"]),
            rng_seed=seed,
        )

    @property
    def axes(self) -> tuple[int, str, int, int]:
        """``(day, location, config_id, receiver_id)``."""
        return self.day, self.location, self.config_id, self.receiver_id

    @property
    def spreading_factor(self) -> int:
        """Spreading factor of the scenario's LoRa configuration."""
        return SF_BY_CONFIG[self.config_id]


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Tap gains, tap delays and SNR of one link."""

    #: Complex tap gains.
    taps: np.ndarray

    #: Integer sample delay of each tap. Tap 0 has delay 0.
    delays: np.ndarray

    #: Target SNR (in dB). ``math.inf`` disables noise.
    snr_db: float = math.inf

    #: Seed of the additive noise.
    noise_seed: int = 0

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=np.complex128)
        delays = np.asarray(self.delays, dtype=np.int64)
        if taps.shape != delays.shape or taps.ndim != 1 or not len(taps):
            raise ValueError("Channel needs matching 1D tap and delay arrays")
        if delays[0] != 0 or np.any(delays < 0):
            raise ValueError(f"Tap 0 must have delay 0 but got delays {delays}")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "delays", delays)

    @classmethod
    def identity(cls) -> "ChannelRealization":
        """A distortionless, noiseless channel."""
        return cls(np.array([1.0 + 0j]), np.array([0]))

    @property
    def memory(self) -> int:
        """Largest tap delay (in samples)."""
        return int(self.delays.max())

    def frequency_response(
        self, frequency_hz: float | np.ndarray, sample_rate_hz: float, /
    ) -> np.ndarray:
        """Return ``H(f) = sum_k g_k * exp(-j * 2 * pi * f * d_k / fs)``."""
        f = np.atleast_1d(np.asarray(frequency_hz, dtype=np.float64))
        phase = -2j * np.pi * np.outer(f, self.delays) / sample_rate_hz
        return np.exp(phase) @ self.taps


def realize_channel(
    spec: ScenarioSpec,
    link_seed: int,
    /,
    *,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
) -> ChannelRealization:
    """Draw one block-static channel for a link in a scenario.

    Taps are placed one sample apart. Their average powers follow an
    exponential power-delay profile ``exp(-k / (delay_spread * fs))`` and
    their gains are complex Gaussian (Rayleigh magnitude, uniform phase).
    The drawn taps are normalized to unit total power.

    Args:
        spec: Scenario the link belongs to.
        link_seed: Link key (e.g., derived from device and transmission).
        sample_rate_hz: Sample rate the taps are spaced at.

    Returns:
        The channel realization. The same ``(spec, link_seed)`` always gives
        the same realization.

    """
    rng = np.random.default_rng(utils.derive_seed(spec.rng_seed, link_seed))
    k = np.arange(spec.num_taps)
    if spec.delay_spread_s > 0:
        pdp = np.exp(-k / (spec.delay_spread_s * sample_rate_hz))
    else:
        pdp = (k == 0).astype(np.float64)
    gains = np.sqrt(pdp / 2) * (
        rng.standard_normal(spec.num_taps) + 1j * rng.standard_normal(spec.num_taps)
    )
    gains /= np.sqrt(np.sum(np.abs(gains) ** 2))
    return ChannelRealization(
        gains,
        k,
        snr_db=spec.snr_db,
        noise_seed=utils.derive_seed(spec.rng_seed, link_seed, 1),
    )


def apply_channel(
    buffer: ComplexSampleBuffer, channel: ChannelRealization, /
) -> ComplexSampleBuffer:
    """Pass a waveform through a channel.

    The waveform is linearly convolved with the taps (output trimmed to the
    input length), then complex AWGN is added at the channel's SNR. Signal
    power is measured over active samples only, i.e., samples at least
    :data:`ACTIVE_THRESHOLD` times the peak magnitude, so packet gaps don't
    dilute it.

    Args:
        buffer: Transmitted waveform.
        channel: Channel realization.

    Returns:
        The received waveform.

    Raises:
        `ValueError`: If the buffer is shorter than the channel memory.

    """
    n = len(buffer)
    if n <= channel.memory:
        raise ValueError(
            f"Buffer of {n} samples is shorter than the channel memory "
            f"({channel.memory} samples)"
        )
    impulse = np.zeros(channel.memory + 1, dtype=np.complex128)
    np.add.at(impulse, channel.delays, channel.taps)
    if len(impulse) == 1:
        y = buffer.samples * impulse[0]
    else:
        y = np.convolve(buffer.samples, impulse)[:n]
    if math.isinf(channel.snr_db):
        return buffer.with_samples(y)
    magnitude = np.abs(y)
    peak = magnitude.max()
    if peak == 0:
        logger.warning("Silent buffer passed through a noisy channel; no noise added")
        return buffer.with_samples(y)
    active = magnitude >= ACTIVE_THRESHOLD * peak
    signal_power = float(np.mean(magnitude[active] ** 2))
    noise_power = signal_power / 10 ** (channel.snr_db / 10)
    rng = np.random.default_rng(channel.noise_seed)
    noise = np.sqrt(noise_power / 2) * (
        rng.standard_normal(n) + 1j * rng.standard_normal(n)
    )
    return buffer.with_samples(y + noise)
