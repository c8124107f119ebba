"""Testing utils used for ``lorafp``'s own unit tests."""

import copy
import pathlib
from typing import Any, Generator

import numpy as np
import sqlalchemy as sa
from sqlalchemy.engine import Engine

from .experiment.plan import ExperimentPlan
from .waveform import DEFAULT_CARRIER_HZ, DEFAULT_SAMPLE_RATE_HZ, ComplexSampleBuffer

TINY_PLAN: dict[str, Any] = {
    "name": "tiny",
    "seed": 7,
    "population": {"num_devices": 3},
    "receivers": {"count": 2},
    "transmission": {"duration_s": 0.05, "transmissions_per_device": 1},
    "lora": {"payload_symbols": 4},
    "capture": {"window_len": 1024},
    "schedule": {"max_epochs": 2, "batch_size": 16, "lr_drop_period_epochs": 1},
    "scenarios": [
        {"scenario_id": "d1", "day": 1, "location": "room"},
        {"scenario_id": "d2", "day": 2, "location": "room"},
        {"scenario_id": "out", "day": 1, "location": "outdoor"},
    ],
    "axes": {"day": ["d1", "d2"], "location": ["d1", "out"]},
    "representations": ["FFT"],
    "spectra": {"configs": [1, 2], "phase_noise": [0.0, 0.4], "duration_s": 0.05},
}
"""Plan document of :func:`tiny_plan`.

:meta hide-value:
"""


def sqlite_engine(
    path: str,
    /,
    *,
    metadata: None | sa.MetaData = None,
    table: None | sa.Table = None,
) -> Generator[Engine, None, None]:
    """Yield a test database engine that's cleaned-up after
    usage.

    Args:
        path: Path to SQLite database file.
        metadata: Optional metadata for creating and dropping
            tables before and after yielding the engine,
            respectively.
        table: Optional table for creating and dropping before
            and after yielding the engine, respectively.

    Returns:
        A database engine that's subsequently disposed of
        and whose respective database file is deleted
        after use.

    Raises:
        `ValueError`: If both ``metadata`` and ``table`` are provided.

    Examples:
        Using the testing util as a pytest fixture.

        >>> import pytest
        >>> from sqlalchemy.engine import Engine
        >>> @pytest.fixture
        ... def engine() -> Engine:
        ...     yield from lorafp.testing.sqlite_engine("/path/to/db.sqlite")

    """
    if metadata and table:
        raise ValueError("`metadata` and `table` are mutally exclusive")

    path_obj = pathlib.Path(path)
    path_obj = path_obj.with_stem(f"{path_obj.stem}_test")
    path_obj.parent.mkdir(parents=True, exist_ok=True)
    url = f"sqlite:///{path_obj}"
    engine = sa.create_engine(url)
    if metadata is not None:
        metadata.create_all(engine)
    if table is not None:
        table.create(engine)
    yield engine
    if metadata is not None:
        metadata.drop_all(engine)
    if table is not None:
        table.drop(engine)
    engine.dispose()
    path_obj.unlink(missing_ok=True)


def tone(
    frequency_hz: float,
    num_samples: int,
    /,
    *,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    amplitude: float = 1.0,
) -> ComplexSampleBuffer:
    """A complex exponential at ``frequency_hz`` starting at zero phase.

    Examples:
        >>> lorafp.testing.tone(1e3, 16).samples.dtype
        dtype('complex128')

    """
    t = np.arange(num_samples) / sample_rate_hz
    return ComplexSampleBuffer(
        amplitude * np.exp(2j * np.pi * frequency_hz * t),
        sample_rate_hz=sample_rate_hz,
        carrier_hz=DEFAULT_CARRIER_HZ,
    )


def tiny_plan(
    output_dir: str | pathlib.Path, /, **sections: Any
) -> ExperimentPlan:
    """A plan that generates, trains and evaluates in seconds.

    Three devices transmit 50 ms of SF7 in three scenarios, framed into
    1024-sample windows, and models train for two epochs.

    Args:
        output_dir: Directory the plan writes under.
        sections: Plan sections replacing those of :data:`TINY_PLAN`.

    """
    doc = copy.deepcopy(TINY_PLAN)
    doc.update(copy.deepcopy(sections))
    return ExperimentPlan.from_dict(doc, output_dir=output_dir)
