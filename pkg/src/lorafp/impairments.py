"""Transmitter and receiver hardware impairments.

Each device (and each receiver) gets a profile of impairment parameters that
stays fixed for its lifetime. Applying a profile to an ideal waveform stamps
that unit's distortions onto it. The device chain is applied in a fixed,
documented order:

    IQ imbalance -> phase noise -> CFO -> DC offset [-> PA compression]

Receivers apply a scalar gain first and then the same chain (PA excluded).

Phase-noise magnitudes ``m`` are unitless in the literature this workbench
reproduces. They're mapped to the per-sample standard deviation of a Wiener
phase increment as ``m * sqrt(bandwidth_hz / sample_rate_hz)`` so that the
same magnitude gives the same spectral regrowth at any capture rate.

"""

import json
import logging
import math
import pathlib
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from . import utils
from .waveform import ComplexSampleBuffer

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

REFERENCE_BANDWIDTH_HZ = 125_000.0
"""Bandwidth that phase-noise magnitudes are referenced to (in Hz).

:meta hide-value:
"""


@dataclass(frozen=True)
class DeviceProfile:
    """Hardware impairments of one LoRa transmitter."""

    #: Device label (class index) within a population.
    device_id: int

    #: Unitless phase-noise magnitude (0 = ideal oscillator).
    phase_noise_magnitude: float = 0.0

    #: Carrier frequency offset (in Hz).
    cfo_hz: float = 0.0

    #: I/Q amplitude imbalance (in dB).
    iq_gain_imbalance_db: float = 0.0

    #: Quadrature phase error (in radians).
    iq_phase_imbalance_rad: float = 0.0

    #: Baseband DC offset (LO leakage).
    dc_offset: complex = 0j

    #: Seed of the device's phase-noise realizations.
    rng_seed: int = 0

    #: Rapp smoothness factor of the power amplifier. ``None`` disables
    #: PA compression.
    pa_smoothness: None | float = None

    def __post_init__(self) -> None:
        """Argument validation."""
        if self.phase_noise_magnitude < 0:
            raise ValueError(
                "Phase-noise magnitude must be nonnegative but got "
                f"{self.phase_noise_magnitude}"
            )
        if self.pa_smoothness is not None and self.pa_smoothness <= 0:
            raise ValueError(
                f"PA smoothness must be positive but got {self.pa_smoothness}"
            )
        object.__setattr__(self, "dc_offset", complex(self.dc_offset))


@dataclass(frozen=True)
class ReceiverProfile:
    """Hardware impairments of one receiver."""

    #: Receiver ID referenced by scenarios.
    receiver_id: int

    #: Unitless phase-noise magnitude of the receiver's LO.
    phase_noise_magnitude: float = 0.0

    #: Front-end gain (in dB).
    gain_db: float = 0.0

    #: I/Q amplitude imbalance (in dB).
    iq_gain_imbalance_db: float = 0.0

    #: Quadrature phase error (in radians).
    iq_phase_imbalance_rad: float = 0.0

    #: Baseband DC offset.
    dc_offset: complex = 0j

    #: Seed of the receiver's phase-noise realizations.
    rng_seed: int = 0

    #: Receiver LO frequency error (in Hz).
    cfo_hz: float = 0.0

    def __post_init__(self) -> None:
        """Argument validation."""
        if self.phase_noise_magnitude < 0:
            raise ValueError(
                "Phase-noise magnitude must be nonnegative but got "
                f"{self.phase_noise_magnitude}"
            )
        object.__setattr__(self, "dc_offset", complex(self.dc_offset))


@dataclass(frozen=True)
class PopulationSpread:
    """Ranges impairment parameters are drawn from.

    Every range is a ``(low, high)`` pair. Setting ``low == high`` for every
    range (see :meth:`zero`) makes all units identical apart from their IDs
    and seeds.

    """

    #: Phase-noise magnitudes, evenly spaced over this range and shuffled.
    phase_noise_magnitude: tuple[float, float] = (0.05, 0.4)

    #: Carrier frequency offsets (in Hz).
    cfo_hz: tuple[float, float] = (-2000.0, 2000.0)

    #: I/Q amplitude imbalances (in dB).
    iq_gain_imbalance_db: tuple[float, float] = (-0.5, 0.5)

    #: Quadrature phase errors (in radians).
    iq_phase_imbalance_rad: tuple[float, float] = (-0.05, 0.05)

    #: DC offset magnitudes (uniform phase).
    dc_offset_magnitude: tuple[float, float] = (0.0, 0.01)

    #: Receiver front-end gains (in dB). Unused for transmitters.
    gain_db: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def zero(cls) -> "PopulationSpread":
        """A spread that yields impairment-free, indistinguishable units."""
        return cls(
            phase_noise_magnitude=(0.0, 0.0),
            cfo_hz=(0.0, 0.0),
            iq_gain_imbalance_db=(0.0, 0.0),
            iq_phase_imbalance_rad=(0.0, 0.0),
            dc_offset_magnitude=(0.0, 0.0),
            gain_db=(0.0, 0.0),
        )

    @classmethod
    def receivers(cls) -> "PopulationSpread":
        """Default spread for receivers (nominally identical USRP-class units)."""
        return cls(
            phase_noise_magnitude=(0.02, 0.1),
            cfo_hz=(-1000.0, 1000.0),
            iq_gain_imbalance_db=(-0.3, 0.3),
            iq_phase_imbalance_rad=(-0.03, 0.03),
            dc_offset_magnitude=(0.0, 0.005),
            gain_db=(-3.0, 3.0),
        )

    @classmethod
    def from_dict(cls, d: dict[str, Any], /) -> "PopulationSpread":
        """Build a spread from a plan-file mapping of ``name -> [low, high]``."""
        return cls(**{k: (float(v[0]), float(v[1])) for k, v in d.items()})


class PhaseNoiseProcess:
    """Wiener (random-walk) oscillator phase.

    Each call to :meth:`generate` continues the walk from where the previous
    call stopped. A process belongs to a single waveform and isn't shared.

    Args:
        sigma_per_sample: Standard deviation of the per-sample phase increment
            (in radians).
        seed: Random seed of the increments.

    Examples:
        >>> from lorafp.impairments import PhaseNoiseProcess
        >>> PhaseNoiseProcess(0.0, seed=1).generate(4)
        array([0., 0., 0., 0.])

    """

    #: Current accumulated phase (in radians).
    state: float

    #: Standard deviation of the per-sample phase increment (in radians).
    sigma_per_sample: float

    def __init__(self, sigma_per_sample: float, /, *, seed: int) -> None:
        if sigma_per_sample < 0:
            raise ValueError(
                f"Phase-noise sigma must be nonnegative but got {sigma_per_sample}"
            )
        self.sigma_per_sample = sigma_per_sample
        self.state = 0.0
        self._rng = np.random.default_rng(seed)

    @classmethod
    def from_magnitude(
        cls,
        magnitude: float,
        sample_rate_hz: float,
        /,
        *,
        seed: int,
        bandwidth_hz: float = REFERENCE_BANDWIDTH_HZ,
    ) -> "PhaseNoiseProcess":
        """Create a process from a unitless phase-noise magnitude.

        Args:
            magnitude: Phase-noise magnitude (e.g., 0.2 or 0.4).
            sample_rate_hz: Sample rate of the waveform it'll be applied to.
            seed: Random seed of the increments.
            bandwidth_hz: Reference bandwidth of the magnitude convention.

        Returns:
            A new phase-noise process.

        """
        return cls(magnitude * math.sqrt(bandwidth_hz / sample_rate_hz), seed=seed)

    def generate(self, n: int, /) -> np.ndarray:
        """Generate the next ``n`` phase samples (in radians)."""
        if self.sigma_per_sample == 0:
            return np.full(n, self.state)
        steps = self._rng.normal(0.0, self.sigma_per_sample, size=n)
        theta = self.state + np.cumsum(steps)
        if n:
            self.state = float(theta[-1])
        return theta


def generate_population(
    count: int, rng_seed: int, spread: None | PopulationSpread = None, /
) -> list[DeviceProfile]:
    """Draw a population of transmitter profiles.

    Phase-noise magnitudes are evenly spaced over the spread's range and
    shuffled so every population covers the whole range. All other parameters
    are drawn uniformly.

    Args:
        count: Number of devices (at least 2).
        rng_seed: Population seed. The population is a pure function of
            ``(count, rng_seed, spread)``.
        spread: Parameter ranges. Defaults to :class:`PopulationSpread`.

    Returns:
        Profiles with device IDs ``0, 1, ..., count - 1``.

    Raises:
        `ValueError`: If ``count`` is less than 2.

    Examples:
        >>> from lorafp.impairments import generate_population
        >>> devices = generate_population(25, 7)
        >>> len(devices), devices[-1].device_id
        (25, 24)
        >>> devices == generate_population(25, 7)
        True

    """
    if count < 2:
        raise ValueError(f"A population needs at least 2 devices but got {count}")
    spread = spread or PopulationSpread()
    rng = np.random.default_rng(rng_seed)
    draws = _draw(rng, count, spread)
    return [
        DeviceProfile(
            device_id=i,
            phase_noise_magnitude=draws["phase_noise_magnitude"][i],
            cfo_hz=draws["cfo_hz"][i],
            iq_gain_imbalance_db=draws["iq_gain_imbalance_db"][i],
            iq_phase_imbalance_rad=draws["iq_phase_imbalance_rad"][i],
            dc_offset=draws["dc_offset"][i],
            rng_seed=utils.derive_seed(rng_seed, 1, i),
        )
        for i in range(count)
    ]


def generate_receivers(
    count: int, rng_seed: int, spread: None | PopulationSpread = None, /
) -> list[ReceiverProfile]:
    """Draw a population of receiver profiles.

    Args:
        count: Number of receivers (at least 1).
        rng_seed: Receiver population seed.
        spread: Parameter ranges. Defaults to
            :meth:`PopulationSpread.receivers`.

    Returns:
        Profiles with receiver IDs ``1, 2, ..., count``.

    Raises:
        `ValueError`: If ``count`` is less than 1.

    """
    if count < 1:
        raise ValueError(f"Need at least 1 receiver but got {count}")
    spread = spread or PopulationSpread.receivers()
    rng = np.random.default_rng(rng_seed)
    draws = _draw(rng, count, spread)
    return [
        ReceiverProfile(
            receiver_id=i + 1,
            phase_noise_magnitude=draws["phase_noise_magnitude"][i],
            gain_db=draws["gain_db"][i],
            iq_gain_imbalance_db=draws["iq_gain_imbalance_db"][i],
            iq_phase_imbalance_rad=draws["iq_phase_imbalance_rad"][i],
            dc_offset=draws["dc_offset"][i],
            rng_seed=utils.derive_seed(rng_seed, 2, i),
            cfo_hz=draws["cfo_hz"][i],
        )
        for i in range(count)
    ]


def _draw(
    rng: np.random.Generator, count: int, spread: PopulationSpread, /
) -> dict[str, list[Any]]:
    """Draw ``count`` values for every parameter of ``spread``."""
    lo, hi = spread.phase_noise_magnitude
    pn = rng.permutation(np.linspace(lo, hi, count))

    def uniform(bounds: tuple[float, float]) -> np.ndarray:
        return rng.uniform(bounds[0], bounds[1], size=count)

    cfo = uniform(spread.cfo_hz)
    gain = uniform(spread.iq_gain_imbalance_db)
    phase = uniform(spread.iq_phase_imbalance_rad)
    dc_mag = uniform(spread.dc_offset_magnitude)
    dc_angle = rng.uniform(0.0, 2 * np.pi, size=count)
    rx_gain = uniform(spread.gain_db)
    return {
        "phase_noise_magnitude": [float(v) for v in pn],
        "cfo_hz": [float(v) for v in cfo],
        "iq_gain_imbalance_db": [float(v) for v in gain],
        "iq_phase_imbalance_rad": [float(v) for v in phase],
        "dc_offset": [complex(m * np.exp(1j * a)) for m, a in zip(dc_mag, dc_angle)],
        "gain_db": [float(v) for v in rx_gain],
    }


def apply_phase_noise(
    buffer: ComplexSampleBuffer, process: PhaseNoiseProcess, /
) -> ComplexSampleBuffer:
    """Rotate every sample by the oscillator phase ``exp(j * theta[n])``.

    Args:
        buffer: Input waveform.
        process: Phase-noise process consumed by this call.

    Returns:
        The rotated waveform. Per-sample magnitudes are unchanged.

    """
    if process.sigma_per_sample == 0:
        return buffer.with_samples(buffer.samples.copy())
    theta = process.generate(len(buffer))
    return buffer.with_samples(buffer.samples * np.exp(1j * theta))


def apply_cfo(buffer: ComplexSampleBuffer, cfo_hz: float, /) -> ComplexSampleBuffer:
    """Shift a waveform by a carrier frequency offset.

    Args:
        buffer: Input waveform.
        cfo_hz: Frequency offset (in Hz).

    Returns:
        ``s[n] * exp(j * 2 * pi * cfo_hz * n / sample_rate)``.

    Raises:
        `ValueError`: If the offset would alias (``|cfo_hz| >= sample_rate / 2``).

    """
    if abs(cfo_hz) >= buffer.sample_rate_hz / 2:
        raise ValueError(
            f"CFO {cfo_hz} Hz aliases at sample rate {buffer.sample_rate_hz} Hz"
        )
    if cfo_hz == 0:
        return buffer.with_samples(buffer.samples.copy())
    n = np.arange(len(buffer))
    rotation = np.exp(2j * np.pi * cfo_hz * n / buffer.sample_rate_hz)
    return buffer.with_samples(buffer.samples * rotation)


def iq_imbalance_coefficients(
    gain_db: float, phase_rad: float, /
) -> tuple[complex, complex]:
    """Return the ``(alpha, beta)`` image model coefficients of an IQ imbalance.

    The imbalanced output is ``alpha * s + beta * conj(s)``. The I branch is
    scaled by ``10**(gain_db / 40)``, the Q branch by ``10**(-gain_db / 40)``
    and rotated by ``phase_rad``.

    Examples:
        >>> from lorafp.impairments import iq_imbalance_coefficients
        >>> iq_imbalance_coefficients(0.0, 0.0)
        ((1+0j), 0j)

    """
    g_i = 10 ** (gain_db / 40)
    g_q = 10 ** (-gain_db / 40) * complex(math.cos(phase_rad), math.sin(phase_rad))
    return complex((g_i + g_q) / 2), complex((g_i - g_q) / 2)


def apply_iq_imbalance(
    buffer: ComplexSampleBuffer, gain_db: float, phase_rad: float, /
) -> ComplexSampleBuffer:
    """Apply quadrature-mixer gain and phase imbalance.

    Args:
        buffer: Input waveform.
        gain_db: I/Q amplitude imbalance (in dB).
        phase_rad: Quadrature phase error (in radians).

    Returns:
        ``alpha * s + beta * conj(s)`` (see :func:`iq_imbalance_coefficients`).

    """
    if gain_db == 0 and phase_rad == 0:
        return buffer.with_samples(buffer.samples.copy())
    alpha, beta = iq_imbalance_coefficients(gain_db, phase_rad)
    s = buffer.samples
    return buffer.with_samples(alpha * s + beta * np.conj(s))


def apply_dc_offset(
    buffer: ComplexSampleBuffer, dc_offset: complex, /
) -> ComplexSampleBuffer:
    """Add a constant DC offset."""
    if dc_offset == 0:
        return buffer.with_samples(buffer.samples.copy())
    return buffer.with_samples(buffer.samples + dc_offset)


def apply_pa_nonlinearity(
    buffer: ComplexSampleBuffer, smoothness: float, /, *, saturation: float = 1.0
) -> ComplexSampleBuffer:
    """Apply Rapp AM/AM compression (phase is untouched).

    Args:
        buffer: Input waveform.
        smoothness: Rapp smoothness factor ``p`` (larger is closer to an
            ideal limiter).
        saturation: Output saturation amplitude.

    Returns:
        The compressed waveform.

    """
    r = np.abs(buffer.samples)
    p2 = 2 * smoothness
    gain = 1.0 / (1.0 + (r / saturation) ** p2) ** (1.0 / p2)
    return buffer.with_samples(buffer.samples * gain)


def apply_device(
    buffer: ComplexSampleBuffer, profile: DeviceProfile, /, *, key: int = 0
) -> ComplexSampleBuffer:
    """Stamp a transmitter's impairments onto an ideal waveform.

    The chain is IQ imbalance, phase noise, CFO, DC offset and, if the
    profile enables it, PA compression.

    Args:
        buffer: Ideal waveform.
        profile: Transmitter profile.
        key: Selects the phase-noise realization (e.g., the transmission
            index). The same profile and key always give the same output.

    Returns:
        The impaired waveform.

    """
    out = apply_iq_imbalance(
        buffer, profile.iq_gain_imbalance_db, profile.iq_phase_imbalance_rad
    )
    process = PhaseNoiseProcess.from_magnitude(
        profile.phase_noise_magnitude,
        buffer.sample_rate_hz,
        seed=utils.derive_seed(profile.rng_seed, key),
    )
    out = apply_phase_noise(out, process)
    out = apply_cfo(out, profile.cfo_hz)
    out = apply_dc_offset(out, profile.dc_offset)
    if profile.pa_smoothness is not None:
        out = apply_pa_nonlinearity(out, profile.pa_smoothness)
    return out


def apply_receiver(
    buffer: ComplexSampleBuffer, profile: ReceiverProfile, /, *, key: int = 0
) -> ComplexSampleBuffer:
    """Stamp a receiver's impairments onto a received waveform.

    The chain is front-end gain followed by the same IQ imbalance, phase
    noise, CFO and DC offset chain as :func:`apply_device`.

    Args:
        buffer: Received waveform.
        profile: Receiver profile.
        key: Selects the phase-noise realization.

    Returns:
        The captured waveform.

    """
    out = buffer
    if profile.gain_db != 0:
        out = out.with_samples(out.samples * 10 ** (profile.gain_db / 20))
    out = apply_iq_imbalance(
        out, profile.iq_gain_imbalance_db, profile.iq_phase_imbalance_rad
    )
    process = PhaseNoiseProcess.from_magnitude(
        profile.phase_noise_magnitude,
        buffer.sample_rate_hz,
        seed=utils.derive_seed(profile.rng_seed, key),
    )
    out = apply_phase_noise(out, process)
    out = apply_cfo(out, profile.cfo_hz)
    return apply_dc_offset(out, profile.dc_offset)


def _profile_to_dict(profile: DeviceProfile | ReceiverProfile, /) -> dict[str, Any]:
    d = asdict(profile)
    d["dc_offset"] = [profile.dc_offset.real, profile.dc_offset.imag]
    return d


def _dict_to_kwargs(d: dict[str, Any], /) -> dict[str, Any]:
    d = dict(d)
    re, im = d.pop("dc_offset", (0.0, 0.0))
    d["dc_offset"] = complex(re, im)
    return d


def write_population(
    path: str | pathlib.Path,
    devices: list[DeviceProfile],
    receivers: None | list[ReceiverProfile] = None,
    /,
) -> pathlib.Path:
    """Write device and receiver profiles to a JSON population file.

    Field names match the :class:`DeviceProfile` and :class:`ReceiverProfile`
    attributes. DC offsets are written as ``[real, imag]`` pairs.

    Args:
        path: Output file path.
        devices: Transmitter profiles.
        receivers: Receiver profiles.

    Returns:
        The written path.

    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "devices": [_profile_to_dict(p) for p in devices],
        "receivers": [_profile_to_dict(p) for p in receivers or []],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    logger.debug(f"Wrote {len(devices)} devices to {path}")
    return path


def read_population(
    path: str | pathlib.Path, /
) -> tuple[list[DeviceProfile], list[ReceiverProfile]]:
    """Read profiles written by :func:`write_population`.

    Raises:
        `ValueError`: If device IDs aren't unique.

    """
    doc = json.loads(pathlib.Path(path).read_text())
    devices = [DeviceProfile(**_dict_to_kwargs(d)) for d in doc.get("devices", [])]
    receivers = [
        ReceiverProfile(**_dict_to_kwargs(d)) for d in doc.get("receivers", [])
    ]
    ids = [d.device_id for d in devices]
    if len(set(ids)) != len(ids):
        raise ValueError(f"Duplicate device IDs in population file {path}")
    return devices, receivers


__all__ = [
    "DeviceProfile",
    "PhaseNoiseProcess",
    "PopulationSpread",
    "ReceiverProfile",
    "apply_cfo",
    "apply_dc_offset",
    "apply_device",
    "apply_iq_imbalance",
    "apply_pa_nonlinearity",
    "apply_phase_noise",
    "apply_receiver",
    "generate_population",
    "generate_receivers",
    "iq_imbalance_coefficients",
    "read_population",
    "write_population",
]
