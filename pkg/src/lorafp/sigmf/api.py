"""Read and write SigMF recording pairs.

A recording is two files sharing a base name:

- ``<name>.sigmf-data``: interleaved little-endian float32 I/Q pairs
  (datatype ``cf32_le``), 8 bytes per sample.
- ``<name>.sigmf-meta``: SigMF metadata with ``global``, ``captures`` and
  ``annotations`` blocks. Core SigMF keys carry the datatype, sample rate,
  carrier frequency, capture time and the SHA-512 of the data file. Scenario
  fields that core SigMF has no vocabulary for live in the first annotation
  under the ``lorafp:`` namespace.

Both files are produced and parsed by :mod:`sigmf`. :class:`RecordingMeta`
is a typed view over the metadata. Keys it doesn't recognize are kept in
:attr:`RecordingMeta.extra` and written back out unchanged.

"""

import copy
import json
import logging
import math
import pathlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from sigmf import SigMFFile, sigmffile
from sigmf.error import SigMFFileError

from ..errors import (
    NonFiniteSamplesError,
    RecordingCorruptError,
    RecordingMissingError,
    RecordingTruncatedError,
    UnknownDatatypeError,
)
from ..waveform import DEFAULT_CARRIER_HZ, DEFAULT_SAMPLE_RATE_HZ, ComplexSampleBuffer

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

DATA_EXT = ".sigmf-data"
"""Sample file extension.

:meta hide-value:
"""

META_EXT = ".sigmf-meta"
"""Metadata file extension.

:meta hide-value:
"""

DATATYPE = "cf32_le"
"""Datatype tag of every written recording.

:meta hide-value:
"""

SIGMF_VERSION = "1.0.0"
"""SigMF core version written to metadata files.

:meta hide-value:
"""

NAMESPACE = "lorafp"
"""Annotation namespace for scenario fields.

:meta hide-value:
"""

READABLE_DATATYPES = {
    "cf32_le": np.dtype("<c8"),
    "cf64_le": np.dtype("<c16"),
    "ci16_le": np.dtype("<i2"),
}
"""Datatypes :func:`read_recording` understands and their on-disk item types.
``ci16_le`` is read as interleaved int16 pairs scaled to ``[-1, 1)``.

:meta hide-value:
"""

_BLOCK_KEYS = (SigMFFile.GLOBAL_KEY, SigMFFile.CAPTURE_KEY, SigMFFile.ANNOTATION_KEY)

_MANAGED_GLOBAL_KEYS = (SigMFFile.VERSION_KEY, SigMFFile.HASH_KEY)


def sample_size(datatype: str, /) -> int:
    """Return the number of bytes one complex sample of ``datatype`` takes."""
    dtype = READABLE_DATATYPES[datatype]
    return dtype.itemsize * (2 if dtype.kind == "i" else 1)


_SCENARIO_FIELDS = (
    "device_id",
    "scenario_id",
    "day",
    "location",
    "config_id",
    "receiver_id",
    "transmission",
)


@dataclass
class RecordingMeta:
    """Metadata of one recording.

    Examples:
        >>> from lorafp.sigmf.api import RecordingMeta
        >>> meta = RecordingMeta(device_id=3, day=2, location="office")
        >>> RecordingMeta.from_sigmf(meta.to_sigmf(sample_count=100)) == meta
        True

    """

    #: Sample rate (in samples per second).
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    #: Carrier frequency (in Hz).
    carrier_hz: float = DEFAULT_CARRIER_HZ

    #: Sample datatype tag.
    datatype: str = DATATYPE

    #: ISO-8601 capture timestamp.
    datetime: str = ""

    #: Transmitting device ID (``-1`` if unknown).
    device_id: int = -1

    #: Scenario label.
    scenario_id: str = ""

    #: Capture day.
    day: int = 1

    #: Capture location.
    location: str = "room"

    #: LoRa configuration ID.
    config_id: int = 1

    #: Receiver ID.
    receiver_id: int = 1

    #: Transmission index within the scenario.
    transmission: int = 0

    #: Free-form description.
    description: str = ""

    #: Unrecognized keys, per block (``"root"``, ``"global"``, ``"capture"``
    #: and ``"annotation"``), kept so they survive a rewrite.
    extra: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Argument validation."""
        if not self.sample_rate_hz > 0:
            raise ValueError(
                f"Sample rate must be positive but got {self.sample_rate_hz}"
            )

    def to_sigmf(
        self,
        *,
        sample_count: int,
        data_file: None | str | pathlib.Path = None,
    ) -> SigMFFile:
        """Build a SigMF handle holding this metadata.

        Args:
            sample_count: Number of samples covered by the scenario annotation.
            data_file: Optional data file to bind. The handle records its
                SHA-512 when given.

        Returns:
            A handle ready to be dumped next to its data file.

        """
        extra = copy.deepcopy(self.extra)
        global_info = {
            **extra.get("global", {}),
            SigMFFile.DATATYPE_KEY: self.datatype,
            SigMFFile.SAMPLE_RATE_KEY: self.sample_rate_hz,
        }
        if self.description:
            global_info[SigMFFile.DESCRIPTION_KEY] = self.description
        metadata = {
            **extra.get("root", {}),
            SigMFFile.GLOBAL_KEY: {
                SigMFFile.VERSION_KEY: SIGMF_VERSION,
                SigMFFile.NUM_CHANNELS_KEY: 1,
            },
            SigMFFile.CAPTURE_KEY: [],
            SigMFFile.ANNOTATION_KEY: [],
        }
        handle = SigMFFile(
            metadata=metadata,
            data_file=None if data_file is None else str(data_file),
            global_info=global_info,
        )
        capture = {
            **extra.get("capture", {}),
            SigMFFile.FREQUENCY_KEY: self.carrier_hz,
        }
        if self.datetime:
            capture[SigMFFile.DATETIME_KEY] = self.datetime
        handle.add_capture(0, metadata=capture)
        annotation = extra.get("annotation", {})
        for name in _SCENARIO_FIELDS:
            annotation[f"{NAMESPACE}:{name}"] = getattr(self, name)
        handle.add_annotation(0, sample_count, metadata=annotation)
        return handle

    @classmethod
    def from_sigmf(
        cls, handle: SigMFFile, /, *, root: None | dict[str, Any] = None
    ) -> "RecordingMeta":
        """Read the metadata held by a SigMF handle.

        Only the first capture and first annotation are interpreted. Unknown
        keys are preserved in :attr:`extra`.

        Args:
            handle: SigMF handle to read.
            root: Top-level keys of the metadata document outside the
                ``global``, ``captures`` and ``annotations`` blocks.

        Raises:
            `ValueError`: If the recording has more than one channel.

        """
        glob = copy.deepcopy(handle.get_global_info())
        captures = copy.deepcopy(handle.get_captures()) or [{}]
        annotations = copy.deepcopy(handle.get_annotations()) or [{}]
        if len(captures) > 1 or len(annotations) > 1:
            logger.debug("Ignoring captures and annotations after the first")
        capture, annotation = captures[0], annotations[0]

        num_channels = glob.pop(SigMFFile.NUM_CHANNELS_KEY, 1)
        if num_channels != 1:
            raise ValueError(
                "Only single-channel recordings are supported but got "
                f"{num_channels} channels"
            )
        for key in _MANAGED_GLOBAL_KEYS:
            glob.pop(key, None)
        kwargs: dict[str, Any] = {}
        kwargs["datatype"] = glob.pop(SigMFFile.DATATYPE_KEY, DATATYPE)
        if SigMFFile.SAMPLE_RATE_KEY in glob:
            kwargs["sample_rate_hz"] = float(glob.pop(SigMFFile.SAMPLE_RATE_KEY))
        kwargs["description"] = glob.pop(SigMFFile.DESCRIPTION_KEY, "")
        capture.pop(SigMFFile.START_INDEX_KEY, None)
        if SigMFFile.FREQUENCY_KEY in capture:
            kwargs["carrier_hz"] = float(capture.pop(SigMFFile.FREQUENCY_KEY))
        kwargs["datetime"] = capture.pop(SigMFFile.DATETIME_KEY, "")
        annotation.pop(SigMFFile.START_INDEX_KEY, None)
        annotation.pop(SigMFFile.LENGTH_INDEX_KEY, None)
        for name in _SCENARIO_FIELDS:
            key = f"{NAMESPACE}:{name}"
            if key in annotation:
                kwargs[name] = annotation.pop(key)

        extra = {
            block: values
            for block, values in (
                ("root", copy.deepcopy(root or {})),
                ("global", glob),
                ("capture", capture),
                ("annotation", annotation),
            )
            if values
        }
        return cls(**kwargs, extra=extra)


def recording_paths(path: str | pathlib.Path, /) -> tuple[pathlib.Path, pathlib.Path]:
    """Return the ``(data, meta)`` paths of a recording.

    ``path`` may be the base name or either member of the pair.

    Examples:
        >>> from lorafp.sigmf.api import recording_paths
        >>> [p.name for p in recording_paths("d1/dev03.sigmf-meta")]
        ['dev03.sigmf-data', 'dev03.sigmf-meta']

    """
    path = pathlib.Path(path)
    if path.suffix in (DATA_EXT, META_EXT):
        path = path.with_suffix("")
    return path.with_name(path.name + DATA_EXT), path.with_name(path.name + META_EXT)


def write_recording(
    buffer: ComplexSampleBuffer, meta: RecordingMeta, path: str | pathlib.Path, /
) -> tuple[pathlib.Path, pathlib.Path]:
    """Write a recording pair.

    Args:
        buffer: Samples to write. They're stored as complex float32.
        meta: Recording metadata. Its sample rate must match the buffer's.
        path: Base name (or either member) of the pair.

    Returns:
        The data and metadata paths.

    Raises:
        `ValueError`: If the buffer is empty or its sample rate doesn't match.
        `NonFiniteSamplesError`: If the buffer holds NaN or Inf samples.

    """
    if not len(buffer):
        raise ValueError("Can't write an empty recording")
    if not math.isclose(buffer.sample_rate_hz, meta.sample_rate_hz):
        raise ValueError(
            f"Buffer sample rate {buffer.sample_rate_hz} doesn't match metadata "
            f"sample rate {meta.sample_rate_hz}"
        )
    if meta.datatype != DATATYPE:
        raise UnknownDatatypeError(
            f"Recordings are written as `{DATATYPE}` but metadata declares "
            f"`{meta.datatype}`"
        )
    samples = buffer.samples.astype(READABLE_DATATYPES[DATATYPE])
    if not np.all(np.isfinite(samples)):
        raise NonFiniteSamplesError(f"Refusing to write non-finite samples to {path}")
    data_path, meta_path = recording_paths(path)
    data_path.parent.mkdir(parents=True, exist_ok=True)
    samples.tofile(data_path)
    handle = meta.to_sigmf(sample_count=len(samples), data_file=data_path)
    with open(meta_path, "w") as f:
        handle.dump(f, pretty=True)
    logger.debug(f"Wrote {len(samples)} samples to {data_path}")
    return data_path, meta_path


def read_meta(path: str | pathlib.Path, /) -> RecordingMeta:
    """Read only the metadata of a recording.

    The data file isn't opened, so this works on metadata-only copies.

    Raises:
        `RecordingMissingError`: If the metadata file doesn't exist.

    """
    _, meta_path = recording_paths(path)
    if not meta_path.exists():
        raise RecordingMissingError(f"Missing metadata file {meta_path}")
    doc = json.loads(meta_path.read_text())
    root = {k: v for k, v in doc.items() if k not in _BLOCK_KEYS}
    return RecordingMeta.from_sigmf(SigMFFile(metadata=doc), root=root)


def read_recording(
    path: str | pathlib.Path, /
) -> tuple[ComplexSampleBuffer, RecordingMeta]:
    """Read a recording pair.

    Args:
        path: Base name (or either member) of the pair.

    Returns:
        The samples and their metadata.

    Raises:
        `RecordingMissingError`: If either member of the pair is missing.
        `UnknownDatatypeError`: If the datatype isn't in
            :data:`READABLE_DATATYPES`.
        `RecordingTruncatedError`: If the data file size isn't a whole number
            of samples.
        `RecordingCorruptError`: If the data file doesn't match the SHA-512
            recorded in its metadata.

    """
    data_path, meta_path = recording_paths(path)
    for p in (data_path, meta_path):
        if not p.exists():
            raise RecordingMissingError(f"Missing recording file {p}")
    meta = read_meta(meta_path)
    if meta.datatype not in READABLE_DATATYPES:
        raise UnknownDatatypeError(
            f"Unknown datatype `{meta.datatype}` in {meta_path} (expected one of "
            f"{sorted(READABLE_DATATYPES)})"
        )
    size = data_path.stat().st_size
    if size % sample_size(meta.datatype):
        raise RecordingTruncatedError(
            f"{data_path} has {size} bytes, not a multiple of the "
            f"{sample_size(meta.datatype)}-byte "
            f"`{meta.datatype}` sample size"
        )
    try:
        handle = sigmffile.fromfile(str(meta_path))
    except SigMFFileError as e:
        raise RecordingCorruptError(f"{data_path}: {e}") from e
    samples = np.asarray(handle.read_samples(), dtype=np.complex64)
    buffer = ComplexSampleBuffer(
        samples, sample_rate_hz=meta.sample_rate_hz, carrier_hz=meta.carrier_hz
    )
    return buffer, meta
