"""Ideal (impairment-free) LoRa chirp-spread-spectrum baseband synthesis.

Symbols are cyclic shifts of a linear up-chirp spanning the LoRa bandwidth.
A symbol ``s`` starts sweeping at ``-BW/2 + s * BW / 2**SF``, rises at
``BW**2 / 2**SF`` Hz/s, and wraps from ``+BW/2`` back to ``-BW/2``. Phase is
continuous across the wrap and starts at zero on the first sample.

Transmissions are packets (preamble up-chirps followed by payload symbols)
repeated with :data:`GUARD_S` of silence between them until the requested
duration is filled. Sync words, headers and coding aren't modeled; the
coding rate only enters :func:`bit_rate`.

"""

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

CODING_RATES = ("4/5", "4/6", "4/7", "4/8")
"""Valid LoRa coding-rate tags.

:meta hide-value:
"""

GUARD_S = 0.01
"""Silence between packet repetitions (in seconds).

:meta hide-value:
"""

DEFAULT_CARRIER_HZ = 915e6
"""Default carrier annotation (in Hz). Processing always stays at baseband.

:meta hide-value:
"""

DEFAULT_SAMPLE_RATE_HZ = 1e6
"""Default capture sample rate (in samples per second).

:meta hide-value:
"""


@dataclass(frozen=True)
class LoRaConfig:
    """LoRa physical-layer parameters of one transmitter configuration.

    Examples:
        >>> from lorafp.waveform import LoRaConfig
        >>> cfg = LoRaConfig(spreading_factor=8)
        >>> cfg.num_chips
        256
        >>> cfg.symbol_duration_s
        0.002048

    """

    #: Spreading factor in ``[7, 12]``.
    spreading_factor: int = 7

    #: Signal bandwidth (in Hz).
    bandwidth_hz: float = 125_000.0

    #: Number of base up-chirps that start each packet.
    preamble_symbols: int = 8

    #: Coding rate tag. Only used for bit-rate computations and metadata.
    coding_rate: str = "4/5"

    #: Transmit power (in dBm). Metadata only.
    tx_power_dbm: float = 20.0

    def __post_init__(self) -> None:
        """Argument validation."""
        if not 7 <= self.spreading_factor <= 12:
            raise ValueError(
                f"Spreading factor must be in [7, 12] but got {self.spreading_factor}"
            )
        if not self.bandwidth_hz > 0 or not math.isfinite(self.bandwidth_hz):
            raise ValueError(f"Bandwidth must be positive but got {self.bandwidth_hz}")
        if self.preamble_symbols < 0:
            raise ValueError(
                f"Preamble length must be nonnegative but got {self.preamble_symbols}"
            )
        if self.coding_rate not in CODING_RATES:
            raise ValueError(
                f"Coding rate must be one of {CODING_RATES} but got "
                f"`{self.coding_rate}`"
            )

    @property
    def coding_rate_fraction(self) -> Fraction:
        """Coding rate as an exact fraction (e.g., ``Fraction(4, 5)``)."""
        return Fraction(self.coding_rate)

    @property
    def num_chips(self) -> int:
        """Number of chips (and symbol values) per symbol, ``2**SF``."""
        return int(2**self.spreading_factor)

    @property
    def symbol_duration_s(self) -> float:
        """Symbol duration ``2**SF / BW`` (in seconds)."""
        return self.num_chips / self.bandwidth_hz

    def samples_per_symbol(self, sample_rate_hz: float, /) -> int:
        """Number of samples in one symbol at ``sample_rate_hz``."""
        return int(round(self.symbol_duration_s * sample_rate_hz))


@dataclass(frozen=True, eq=False)
class ComplexSampleBuffer:
    """Complex baseband samples and the rate they were sampled at.

    This is the signal currency passed between the waveform, impairment,
    channel, capture and storage modules. Operations never modify a buffer
    in place; they return new buffers.

    """

    #: 1D complex baseband samples.
    samples: np.ndarray

    #: Sample rate (in samples per second).
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    #: Carrier frequency annotation (in Hz).
    carrier_hz: float = DEFAULT_CARRIER_HZ

    def __post_init__(self) -> None:
        """Cast samples to a 1D complex array and validate the sample rate."""
        samples = np.asarray(self.samples)
        if samples.ndim != 1:
            raise ValueError(f"Samples must be 1D but got shape {samples.shape}")
        if not np.iscomplexobj(samples):
            samples = samples.astype(np.complex128)
        object.__setattr__(self, "samples", samples)
        if not self.sample_rate_hz > 0:
            raise ValueError(
                f"Sample rate must be positive but got {self.sample_rate_hz}"
            )

    def __len__(self) -> int:
        """Number of samples."""
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        """Buffer duration (in seconds)."""
        return len(self.samples) / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray, /) -> "ComplexSampleBuffer":
        """Return a buffer with the same rate/carrier but new samples."""
        return replace(self, samples=samples)


@dataclass(frozen=True)
class SymbolStream:
    """Payload symbols of one packet.

    Examples:
        >>> from lorafp.waveform import SymbolStream
        >>> stream = SymbolStream.random(7, 4, seed=1)
        >>> len(stream.symbols)
        4
        >>> stream == SymbolStream.random(7, 4, seed=1)
        True

    """

    #: Symbol values, each in ``[0, 2**SF)``.
    symbols: tuple[int, ...] = field(default_factory=tuple)

    #: Seed the symbols were drawn with (``0`` for hand-written streams).
    rng_seed: int = 0

    @classmethod
    def random(
        cls, spreading_factor: int, length: int, /, *, seed: int
    ) -> "SymbolStream":
        """Draw ``length`` uniformly distributed symbols.

        Args:
            spreading_factor: Spreading factor bounding the symbol values.
            length: Number of symbols.
            seed: Random seed.

        Returns:
            A new symbol stream.

        """
        rng = np.random.default_rng(seed)
        symbols = rng.integers(0, 2**spreading_factor, size=length)
        return cls(tuple(int(s) for s in symbols), rng_seed=seed)

    def validate(self, spreading_factor: int, /) -> None:
        """Check every symbol fits within ``2**spreading_factor`` values.

        Raises:
            `ValueError`: If a symbol is out of range.

        """
        m = 2**spreading_factor
        bad = [s for s in self.symbols if not 0 <= s < m]
        if bad:
            raise ValueError(
                f"Symbols {bad[:5]} are out of range for SF {spreading_factor} "
                f"(must be in [0, {m}))"
            )


def bit_rate(config: LoRaConfig, /) -> float:
    """Return the LoRa bit rate ``SF * BW / 2**SF * CR`` (in bits per second).

    Args:
        config: LoRa configuration.

    Returns:
        Bit rate in bits per second.

    Examples:
        >>> from lorafp.waveform import LoRaConfig, bit_rate
        >>> bit_rate(LoRaConfig(spreading_factor=7))
        5468.75
        >>> bit_rate(LoRaConfig(spreading_factor=8))
        3125.0

    """
    return float(
        config.spreading_factor
        * config.bandwidth_hz
        / config.num_chips
        * config.coding_rate_fraction
    )


def synthesize_chirp(
    config: LoRaConfig, symbol: int, sample_rate_hz: float, /
) -> ComplexSampleBuffer:
    """Synthesize one LoRa symbol.

    Args:
        config: LoRa configuration.
        symbol: Symbol value in ``[0, 2**SF)``.
        sample_rate_hz: Output sample rate. Must be at least the bandwidth.

    Returns:
        A unit-magnitude buffer of ``2**SF / BW`` seconds.

    Raises:
        `ValueError`: If the symbol is out of range or the sample rate is below
            the bandwidth.

    Examples:
        >>> from lorafp.waveform import LoRaConfig, synthesize_chirp
        >>> len(synthesize_chirp(LoRaConfig(), 0, 1e6))
        1024

    """
    if not 0 <= symbol < config.num_chips:
        raise ValueError(
            f"Symbol must be in [0, {config.num_chips}) but got {symbol}"
        )
    if sample_rate_hz < config.bandwidth_hz:
        raise ValueError(
            f"Sample rate {sample_rate_hz} is below the bandwidth "
            f"{config.bandwidth_hz}"
        )
    bw = config.bandwidth_hz
    n = config.samples_per_symbol(sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    slope = bw**2 / config.num_chips
    f0 = -bw / 2 + symbol * bw / config.num_chips
    t_wrap = (bw / 2 - f0) / slope
    phase = 2 * np.pi * (f0 * t + 0.5 * slope * t**2 - bw * np.maximum(t - t_wrap, 0.0))
    return ComplexSampleBuffer(np.exp(1j * phase), sample_rate_hz=sample_rate_hz)


def synthesize_packet(
    config: LoRaConfig, payload: SymbolStream, sample_rate_hz: float, /
) -> np.ndarray:
    """Synthesize one packet (preamble followed by payload) without gaps.

    Args:
        config: LoRa configuration.
        payload: Payload symbols.
        sample_rate_hz: Output sample rate.

    Returns:
        Complex samples of the packet.

    Raises:
        `ValueError`: If there's nothing to transmit or a symbol is out of range.

    """
    payload.validate(config.spreading_factor)
    symbols = (0,) * config.preamble_symbols + payload.symbols
    if not symbols:
        raise ValueError("Empty payload with no preamble leaves nothing to transmit")
    chirps = {
        s: synthesize_chirp(config, s, sample_rate_hz).samples for s in set(symbols)
    }
    return np.concatenate([chirps[s] for s in symbols])


def synthesize_transmission(
    config: LoRaConfig,
    payload: SymbolStream,
    sample_rate_hz: float,
    duration_s: float,
    /,
    *,
    guard_s: float = GUARD_S,
) -> ComplexSampleBuffer:
    """Synthesize a transmission of repeated packets.

    Packets are separated by ``guard_s`` seconds of zeros and repeated until
    ``duration_s`` is filled. The output is truncated to exactly
    ``round(duration_s * sample_rate_hz)`` samples.

    Args:
        config: LoRa configuration.
        payload: Payload symbols carried by every packet.
        sample_rate_hz: Output sample rate.
        duration_s: Transmission duration (in seconds).
        guard_s: Silence between packets (in seconds).

    Returns:
        The ideal baseband transmission.

    Raises:
        `ValueError`: If ``duration_s`` isn't positive or is shorter than one
            sample, or if the payload and preamble are both empty.

    Examples:
        >>> from lorafp.waveform import LoRaConfig, SymbolStream, synthesize_transmission
        >>> payload = SymbolStream.random(7, 8, seed=0)
        >>> len(synthesize_transmission(LoRaConfig(), payload, 1e6, 0.1))
        100000

    """
    if not duration_s > 0:
        raise ValueError(f"Duration must be positive but got {duration_s}")
    total = int(round(duration_s * sample_rate_hz))
    if not total:
        raise ValueError(
            f"Duration {duration_s} s rounds to zero samples at {sample_rate_hz} Hz"
        )
    packet = synthesize_packet(config, payload, sample_rate_hz)
    gap = np.zeros(int(round(guard_s * sample_rate_hz)), dtype=np.complex128)
    period = np.concatenate([packet, gap])
    reps = -(-total // len(period))
    samples = np.tile(period, reps)[:total]
    logger.debug(
        f"Synthesized {total} samples ({reps} packet repetitions) at "
        f"SF {config.spreading_factor}"
    )
    return ComplexSampleBuffer(samples, sample_rate_hz=sample_rate_hz)
