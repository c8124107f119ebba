"""Generic utils used by subpackages."""

import csv
import hashlib
import json
import os
import pathlib
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import set_key

base_capture_date = datetime(2021, 6, 1, 9, 0, 0)
"""Capture timestamp of day 1. Later days are offset from this date so
regenerated metadata is identical from run to run.

:meta hide-value:
"""


def capture_datetime(day: int, /, *, transmission: int = 0) -> str:
    """Return the ISO-8601 capture timestamp for a scenario day.

    Transmissions within a day are one minute apart.

    Args:
        day: Scenario day (1-based).
        transmission: Transmission index within the day.

    Returns:
        An ISO-8601 UTC timestamp string.

    Examples:
        >>> lorafp.utils.capture_datetime(2, transmission=3)
        '2021-06-02T09:03:00Z'

    """
    ts = base_capture_date + timedelta(days=day - 1, minutes=transmission)
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def derive_seed(*keys: int) -> int:
    """Derive a 64-bit seed from a sequence of integer keys.

    The same keys always give the same seed, and different keys give
    statistically independent seeds. This is how every component gets its
    own random stream from a single plan seed.

    Args:
        *keys: Nonnegative integers (e.g., plan seed, device ID,
            transmission index).

    Returns:
        A seed in ``[0, 2**64)``.

    Examples:
        >>> lorafp.utils.derive_seed(7, 1) == lorafp.utils.derive_seed(7, 1)
        True
        >>> lorafp.utils.derive_seed(7, 1) == lorafp.utils.derive_seed(7, 2)
        False

    """
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def expand_csv(values: str | list[str] | tuple[str, ...], /) -> list[str]:
    """Expand the given list of strings into a sorted list of unique strings,
    where each value in the list of strings could be:

        1. Comma-separated values
        2. A path that points to a CSV file containing values
        3. A regular ol' string

    Args:
        values: List of strings denoting comma-separated values,
            or CSV files containing comma-separated values.

    Returns:
        A sorted list of all unique strings found within the given list.

    Examples:
        >>> lorafp.utils.expand_csv(["day2,day1"])
        ['day1', 'day2']

    """
    if isinstance(values, str):
        values = [values]

    out = set()
    for vstring in values:
        vlist = vstring.split(",")
        for v in vlist:
            v = v.strip()
            if not v:
                continue
            csv_path = Path(v)
            if csv_path.suffix == ".csv" and csv_path.exists():
                with open(csv_path, "r") as f:
                    reader = csv.reader(f)
                    for row in reader:
                        out.update(r.strip() for r in row if r.strip())
            else:
                out.add(v)
    return sorted(out)


def parse_override(s: str, /) -> tuple[list[str], Any]:
    """Parse a ``dotted.key=value`` override string.

    Values are parsed as JSON when possible so numbers, booleans and lists
    keep their types. Anything else is kept as a string.

    Args:
        s: Override string.

    Returns:
        The key path split on dots and the parsed value.

    Raises:
        `ValueError`: If the string doesn't contain ``=``.

    Examples:
        >>> lorafp.utils.parse_override("schedule.max_epochs=5")
        (['schedule', 'max_epochs'], 5)
        >>> lorafp.utils.parse_override("capture.representation=IQ")
        (['capture', 'representation'], 'IQ')

    """
    if "=" not in s:
        raise ValueError(f"Override `{s}` must have the form `dotted.key=value`")
    key, raw = s.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def setenv(name: str, value: str, /, *, exist_ok: bool = False) -> pathlib.Path:
    """Set the value of the environment variable ``name`` to ``value``.

    The environment variable is permanently set in the environment
    and in the current process.

    Args:
        name: Environment variable name.
        value: Environment variable value.
        exist_ok: Whether it's okay if an environment variable of the
            same name already exists. If ``True``, it will be overwritten.

    Returns:
        Path to the file the environment variable was written to.

    Raises:
        `RuntimeError`: If ``exist_ok`` is ``False`` and an environment variable
            of the same name already exists.

    """
    if not exist_ok and name in os.environ:
        raise RuntimeError(
            f"The env variable `{name}` already exists. "
            "Set `exist_ok` to `True` to overwrite it."
        )

    os.environ[name] = value
    dotenv = pathlib.Path.cwd() / ".env"
    set_key(str(dotenv), name, value)
    return dotenv


def sha256_file(path: str | pathlib.Path, /) -> str:
    """Return the hex SHA-256 digest of a file's contents."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
