"""Turn received sample streams into classifier-ready frames.

The pipeline is:

1. :func:`band_select` either keeps the full capture (in-band plus
   out-of-band) or low-pass filters it to the LoRa channel (in-band only).
   Both modes keep the capture sample rate so downstream frame shapes and
   model sizes don't depend on the mode.
2. :func:`slice_frames` cuts the stream into non-overlapping windows, drops
   windows that are mostly packet gaps, and converts the rest into IQ or FFT
   :class:`Frame` objects.

Frames are stacked into a :class:`FrameSet` for training and evaluation.

"""

import logging
from dataclasses import dataclass
from functools import cache
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd
from scipy import signal

from .waveform import DEFAULT_SAMPLE_RATE_HZ, ComplexSampleBuffer

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

BAND_MODES = ("in_band_only", "in_band_plus_oob")
"""Band selection modes.

:meta hide-value:
"""

REPRESENTATIONS = ("IQ", "FFT")
"""Frame representations.

:meta hide-value:
"""

NORMALIZATIONS = ("per_frame_rms",)
"""Frame normalizations.

:meta hide-value:
"""

GAP_ENERGY_FRACTION = 0.1
"""Windows with less than this fraction of the median window energy are
treated as packet gaps and discarded.

:meta hide-value:
"""

STOPBAND_ATTENUATION_DB = 80.0
"""Design stopband attenuation of the in-band selection filter (in dB).

:meta hide-value:
"""

TRANSITION_WIDTH_HZ = 15_000.0
"""Transition width of the in-band selection filter (in Hz). The transition
sits just above the LoRa band so the whole band is in the passband.

:meta hide-value:
"""

WELCH_SEGMENT = 4096
"""Welch segment length used for spectra and OOB power measurements.

:meta hide-value:
"""


@dataclass(frozen=True)
class CaptureConfig:
    """How a received stream is framed.

    Examples:
        >>> from lorafp.capture import CaptureConfig
        >>> cfg = CaptureConfig(window_len=1024)
        >>> cfg.stride
        1024

    """

    #: Capture sample rate (in samples per second).
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    #: Capture bandwidth (in Hz). Covers the LoRa band plus adjacent OOB
    #: spectrum.
    capture_bandwidth_hz: float = DEFAULT_SAMPLE_RATE_HZ

    #: Samples per frame. Must be a power of two.
    window_len: int = 8192

    #: Samples between frame starts. Defaults to ``window_len``.
    stride: int = 0

    #: One of :data:`BAND_MODES`.
    band_mode: str = "in_band_plus_oob"

    #: One of :data:`REPRESENTATIONS`.
    representation: str = "FFT"

    #: One of :data:`NORMALIZATIONS`.
    normalization: str = "per_frame_rms"

    def __post_init__(self) -> None:
        """Argument validation."""
        if not self.stride:
            object.__setattr__(self, "stride", self.window_len)
        if self.window_len < 2 or self.window_len & (self.window_len - 1):
            raise ValueError(
                f"Window length must be a power of two but got {self.window_len}"
            )
        if self.stride < 1:
            raise ValueError(f"Stride must be at least 1 but got {self.stride}")
        if self.capture_bandwidth_hz > self.sample_rate_hz:
            raise ValueError(
                f"Capture bandwidth {self.capture_bandwidth_hz} exceeds the "
                f"sample rate {self.sample_rate_hz}"
            )
        if self.band_mode not in BAND_MODES:
            raise ValueError(
                f"Band mode must be one of {BAND_MODES} but got `{self.band_mode}`"
            )
        if self.representation not in REPRESENTATIONS:
            raise ValueError(
                f"Representation must be one of {REPRESENTATIONS} but got "
                f"`{self.representation}`"
            )
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(
                f"Normalization must be one of {NORMALIZATIONS} but got "
                f"`{self.normalization}`"
            )


class Provenance(NamedTuple):
    """Where a frame came from."""

    #: Scenario label.
    scenario_id: str

    #: Transmission index within the scenario.
    transmission: int

    #: Window index within the transmission.
    window: int


@dataclass(frozen=True, eq=False)
class Frame:
    """One classifier input: a ``2 x window_len`` real matrix and its label."""

    #: Row 0 holds I (or FFT real parts), row 1 holds Q (or FFT imaginary parts).
    data: np.ndarray

    #: Device ID.
    label: int = -1

    #: Source of the frame.
    provenance: Provenance = Provenance("", 0, 0)

    #: One of :data:`REPRESENTATIONS`.
    representation: str = "IQ"

    def __post_init__(self) -> None:
        if self.data.ndim != 2 or self.data.shape[0] != 2:
            raise ValueError(f"Frame data must be 2 x W but got {self.data.shape}")

    @property
    def window_len(self) -> int:
        """Frame width."""
        return int(self.data.shape[1])


@dataclass(frozen=True, eq=False)
class FrameSet:
    """Frames stacked for batch processing."""

    #: Frame data with shape ``(N, 2, window_len)``.
    data: np.ndarray

    #: Device IDs with shape ``(N,)``.
    labels: np.ndarray

    #: One row per frame with columns ``scenario_id``, ``transmission``,
    #: ``window`` and ``label``.
    provenance: pd.DataFrame

    #: One of :data:`REPRESENTATIONS`.
    representation: str = "IQ"

    def __post_init__(self) -> None:
        if self.data.ndim != 3 or self.data.shape[1] != 2:
            raise ValueError(
                f"Frame set data must be N x 2 x W but got {self.data.shape}"
            )
        if not len(self.data) == len(self.labels) == len(self.provenance):
            raise ValueError(
                "Frame set data, labels and provenance lengths don't match "
                f"({len(self.data)}, {len(self.labels)}, {len(self.provenance)})"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_frames(
        cls, frames: Sequence[Frame], /, *, window_len: None | int = None
    ) -> "FrameSet":
        """Stack frames into a frame set.

        Args:
            frames: Frames sharing one representation.
            window_len: Width of an empty frame set. Ignored when frames are
                given.

        Returns:
            A new frame set.

        """
        if not frames:
            w = window_len or 0
            return cls(
                np.zeros((0, 2, w), dtype=np.float32),
                np.zeros(0, dtype=np.int64),
                pd.DataFrame(
                    columns=["scenario_id", "transmission", "window", "label"]
                ),
            )
        reps = {f.representation for f in frames}
        if len(reps) > 1:
            raise ValueError(f"Can't stack frames of mixed representations {reps}")
        provenance = pd.DataFrame(
            [f.provenance for f in frames], columns=list(Provenance._fields)
        )
        provenance["label"] = [f.label for f in frames]
        return cls(
            np.stack([f.data for f in frames]).astype(np.float32),
            np.array([f.label for f in frames], dtype=np.int64),
            provenance,
            representation=reps.pop(),
        )

    @classmethod
    def concat(cls, sets: Sequence["FrameSet"], /) -> "FrameSet":
        """Concatenate frame sets of the same representation."""
        sets = [s for s in sets if len(s)]
        if not sets:
            raise ValueError("Nothing to concatenate")
        return cls(
            np.concatenate([s.data for s in sets]),
            np.concatenate([s.labels for s in sets]),
            pd.concat([s.provenance for s in sets], ignore_index=True),
            representation=sets[0].representation,
        )

    def subset(self, index: np.ndarray, /) -> "FrameSet":
        """Select frames by integer index."""
        index = np.asarray(index, dtype=np.int64)
        return FrameSet(
            self.data[index],
            self.labels[index],
            self.provenance.iloc[index].reset_index(drop=True),
            representation=self.representation,
        )

    @property
    def window_len(self) -> int:
        """Frame width."""
        return int(self.data.shape[2])


@cache
def design_band_filter(sample_rate_hz: float, signal_bw_hz: float, /) -> np.ndarray:
    """Design the linear-phase low-pass FIR used for in-band selection.

    A Kaiser-window design for :data:`STOPBAND_ATTENUATION_DB` of stopband
    attenuation. The passband ends at ``signal_bw_hz / 2`` and the stopband
    starts :data:`TRANSITION_WIDTH_HZ` above it. The tap count is odd so the
    group delay is a whole number of samples.

    Args:
        sample_rate_hz: Sample rate.
        signal_bw_hz: LoRa signal bandwidth.

    Returns:
        Real filter taps.

    """
    nyquist = sample_rate_hz / 2
    numtaps, beta = signal.kaiserord(
        STOPBAND_ATTENUATION_DB, TRANSITION_WIDTH_HZ / nyquist
    )
    numtaps |= 1
    cutoff = signal_bw_hz / 2 + TRANSITION_WIDTH_HZ / 2
    taps = signal.firwin(numtaps, cutoff, window=("kaiser", beta), fs=sample_rate_hz)
    logger.debug(f"Designed a {numtaps}-tap band-select filter (cutoff {cutoff} Hz)")
    return taps


def band_select(
    buffer: ComplexSampleBuffer, mode: str, signal_bw_hz: float, /
) -> ComplexSampleBuffer:
    """Select the part of the capture the classifier sees.

    Args:
        buffer: Received waveform.
        mode: ``"in_band_plus_oob"`` keeps the full capture untouched.
            ``"in_band_only"`` low-pass filters with a passband edge at
            ``signal_bw_hz / 2`` and at least 60 dB of stopband attenuation
            past the transition band, compensating the filter's group delay
            and keeping the sample rate.
        signal_bw_hz: LoRa signal bandwidth.

    Returns:
        A buffer with the same length and sample rate as the input.

    Raises:
        `ValueError`: If the mode is unknown or the filter cutoff isn't
            below Nyquist.

    """
    if mode not in BAND_MODES:
        raise ValueError(f"Band mode must be one of {BAND_MODES} but got `{mode}`")
    if not 0 < signal_bw_hz < buffer.sample_rate_hz - TRANSITION_WIDTH_HZ:
        raise ValueError(
            f"Signal bandwidth {signal_bw_hz} must be positive and leave room for "
            f"the {TRANSITION_WIDTH_HZ} Hz filter transition below the sample "
            f"rate {buffer.sample_rate_hz}"
        )
    if mode == "in_band_plus_oob":
        return buffer.with_samples(buffer.samples.copy())
    taps = design_band_filter(buffer.sample_rate_hz, signal_bw_hz)
    filtered = signal.fftconvolve(buffer.samples, taps, mode="same")
    return buffer.with_samples(filtered)


def _normalize(data: np.ndarray, /) -> np.ndarray:
    rms = np.sqrt(np.mean(data**2))
    if rms == 0:
        return data
    return data / rms


def to_iq_frame(
    window: np.ndarray,
    /,
    *,
    label: int = -1,
    provenance: Provenance = Provenance("", 0, 0),
    normalize: bool = True,
) -> Frame:
    """Split a complex window into I and Q rows.

    Args:
        window: Complex samples.
        label: Device ID.
        provenance: Frame source.
        normalize: Whether to scale the frame to unit RMS.

    Returns:
        An IQ frame.

    Examples:
        >>> import numpy as np
        >>> from lorafp.capture import to_iq_frame
        >>> to_iq_frame(np.array([1 + 1j, 1 - 1j])).data
        array([[ 1.,  1.],
               [ 1., -1.]])

    """
    window = np.asarray(window, dtype=np.complex128)
    data = np.stack([window.real, window.imag])
    if normalize:
        data = _normalize(data)
    return Frame(data, label=label, provenance=provenance, representation="IQ")


def to_fft_frame(
    window: np.ndarray,
    /,
    *,
    label: int = -1,
    provenance: Provenance = Provenance("", 0, 0),
    normalize: bool = True,
) -> Frame:
    """Transform a complex window and split the spectrum into real and
    imaginary rows.

    No taper or zero padding is applied and bins are in natural order (DC at
    index 0).

    Args:
        window: Complex samples.
        label: Device ID.
        provenance: Frame source.
        normalize: Whether to scale the frame to unit RMS.

    Returns:
        An FFT frame.

    """
    spectrum = np.fft.fft(np.asarray(window, dtype=np.complex128))
    data = np.stack([spectrum.real, spectrum.imag])
    if normalize:
        data = _normalize(data)
    return Frame(data, label=label, provenance=provenance, representation="FFT")


def slice_frames(
    buffer: ComplexSampleBuffer,
    config: CaptureConfig,
    /,
    *,
    label: int = -1,
    scenario_id: str = "",
    transmission: int = 0,
) -> list[Frame]:
    """Cut a stream into frames.

    Windows whose energy is below :data:`GAP_ENERGY_FRACTION` of the median
    window energy (packet gaps) are discarded. The decision is made on the
    time-domain samples, so IQ and FFT framings of the same stream keep the
    same windows.

    Args:
        buffer: Band-selected waveform.
        config: Capture configuration.
        label: Device ID assigned to every frame.
        scenario_id: Scenario label recorded in the provenance.
        transmission: Transmission index recorded in the provenance.

    Returns:
        Frames in stream order. Empty (with a warning) if the buffer is
        shorter than one window.

    """
    w = config.window_len
    if len(buffer) < w:
        logger.warning(
            f"Buffer of {len(buffer)} samples is shorter than one {w}-sample "
            "window; no frames produced"
        )
        return []
    starts = np.arange(0, len(buffer) - w + 1, config.stride)
    windows = np.stack([buffer.samples[s : s + w] for s in starts])
    energy = np.sum(np.abs(windows) ** 2, axis=1)
    keep = (energy > 0) & (energy >= GAP_ENERGY_FRACTION * np.median(energy))
    convert = to_iq_frame if config.representation == "IQ" else to_fft_frame
    frames = [
        convert(
            windows[i],
            label=label,
            provenance=Provenance(scenario_id, transmission, int(i)),
        )
        for i in np.flatnonzero(keep)
    ]
    logger.debug(
        f"Kept {len(frames)} of {len(windows)} windows "
        f"(scenario `{scenario_id}`, transmission {transmission})"
    )
    return frames


def capture_frames(
    buffer: ComplexSampleBuffer,
    config: CaptureConfig,
    signal_bw_hz: float,
    /,
    *,
    label: int = -1,
    scenario_id: str = "",
    transmission: int = 0,
) -> list[Frame]:
    """Band-select a received stream and slice it into frames."""
    selected = band_select(buffer, config.band_mode, signal_bw_hz)
    return slice_frames(
        selected,
        config,
        label=label,
        scenario_id=scenario_id,
        transmission=transmission,
    )


def power_spectrum(
    buffer: ComplexSampleBuffer, /, *, nperseg: int = WELCH_SEGMENT
) -> tuple[np.ndarray, np.ndarray]:
    """Welch-averaged two-sided power spectral density.

    Args:
        buffer: Input waveform.
        nperseg: Welch segment length.

    Returns:
        Frequencies (in Hz, ascending from ``-fs / 2``) and the PSD.

    Raises:
        `ValueError`: If the buffer is shorter than one segment or all zero.

    """
    if len(buffer) < nperseg:
        raise ValueError(
            f"Need at least {nperseg} samples for a spectrum but got {len(buffer)}"
        )
    if not np.any(buffer.samples):
        raise ValueError("Can't measure the spectrum of an all-zero buffer")
    f, psd = signal.welch(
        buffer.samples,
        fs=buffer.sample_rate_hz,
        window="hann",
        nperseg=nperseg,
        detrend=False,
        return_onesided=False,
    )
    return np.fft.fftshift(f), np.fft.fftshift(psd)


def measure_oob_power(buffer: ComplexSampleBuffer, signal_bw_hz: float, /) -> float:
    """Return the out-of-band to in-band power ratio (in dB).

    In-band is ``|f| <= signal_bw_hz / 2``. Everything else in the capture
    is out-of-band.

    Args:
        buffer: At least :data:`WELCH_SEGMENT` samples.
        signal_bw_hz: LoRa signal bandwidth.

    Returns:
        ``10 * log10(P_oob / P_in)``.

    Raises:
        `ValueError`: If the buffer is too short or all zero.

    Examples:
        >>> import numpy as np
        >>> from lorafp.capture import measure_oob_power
        >>> from lorafp.waveform import ComplexSampleBuffer
        >>> rng = np.random.default_rng(0)
        >>> noise = rng.standard_normal(2**18) + 1j * rng.standard_normal(2**18)
        >>> round(measure_oob_power(ComplexSampleBuffer(noise), 125e3))
        8

    """
    f, psd = power_spectrum(buffer)
    in_band = np.abs(f) <= signal_bw_hz / 2
    p_in = float(np.sum(psd[in_band]))
    p_oob = float(np.sum(psd[~in_band]))
    if p_in == 0:
        return float("inf")
    return float(10 * np.log10(p_oob / p_in))


def normalized_spectrum(
    buffer: ComplexSampleBuffer, /, *, floor_db: float = -300.0
) -> pd.DataFrame:
    """Peak-normalized power spectrum over the capture span.

    Args:
        buffer: Input waveform.
        floor_db: Lowest reported level, keeping every value finite.

    Returns:
        A dataframe with columns ``frequency_hz`` and ``normalized_power_db``.
        The peak is at 0 dB.

    """
    f, psd = power_spectrum(buffer)
    db = 10 * np.log10(np.maximum(psd / psd.max(), 10 ** (floor_db / 10)))
    return pd.DataFrame({"frequency_hz": f, "normalized_power_db": db})
