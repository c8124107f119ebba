"""Dataset indexes built from recording pairs on disk."""

import logging
import pathlib
from dataclasses import dataclass, field
from typing import Callable

import pandas as pd
import sqlalchemy as sa
from sqlalchemy.engine import Engine
from sqlalchemy.exc import NoResultFound
from tqdm import tqdm

from .. import backend
from ..errors import LorafpError, RecordingMissingError
from . import api, sql

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

INDEX_COLUMNS = [c.name for c in sql.recordings.columns]
"""Columns of a dataset index dataframe.

:meta hide-value:
"""


@dataclass(frozen=True, eq=False)
class DatasetIndex:
    """Recordings found under a directory plus a label coverage report."""

    #: One row per recording, sorted by path. Columns are :data:`INDEX_COLUMNS`.
    recordings: pd.DataFrame

    #: One row per scenario with columns ``num_recordings``, ``num_devices``
    #: and ``missing_devices`` (a sorted list of device IDs that have no
    #: recording in that scenario).
    coverage: pd.DataFrame

    #: ``(path, reason)`` pairs for recordings that couldn't be indexed.
    problems: list[tuple[str, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.recordings.index)

    @property
    def complete(self) -> bool:
        """Whether every device is present in every scenario."""
        return not any(len(m) for m in self.coverage["missing_devices"])

    @property
    def devices(self) -> list[int]:
        """Sorted device IDs found in the index."""
        return sorted(int(d) for d in self.recordings["device_id"].unique())

    @property
    def scenarios(self) -> list[str]:
        """Sorted scenario labels found in the index."""
        return sorted(str(s) for s in self.recordings["scenario_id"].unique())

    def groups(self) -> dict[tuple[int, str], pd.DataFrame]:
        """Recordings grouped by ``(device_id, scenario_id)``."""
        return {
            (int(k[0]), str(k[1])): g
            for k, g in self.recordings.groupby(["device_id", "scenario_id"])
        }

    def for_scenario(self, scenario_id: str, /) -> pd.DataFrame:
        """Recordings of a single scenario."""
        df = self.recordings
        return df[df["scenario_id"] == scenario_id].reset_index(drop=True)


class Recordings:
    """Index recording pairs and query the index.

    The module variable :data:`lorafp.sigmf.feat.recordings` is an instance
    of this class and is the most popular interface for calling its methods.

    """

    @classmethod
    def scan(
        cls,
        root_dir: str | pathlib.Path,
        /,
        *,
        predicate: None | Callable[[api.RecordingMeta], bool] = None,
    ) -> tuple[pd.DataFrame, list[tuple[str, str]]]:
        """Scan a directory tree for recording pairs.

        Args:
            root_dir: Directory to scan recursively.
            predicate: Optional filter on each recording's metadata.

        Returns:
            Index rows sorted by path and the recordings that couldn't be
            indexed with the reason why.

        """
        rows = []
        problems = []
        for meta_path in sorted(pathlib.Path(root_dir).rglob(f"*{api.META_EXT}")):
            data_path, _ = api.recording_paths(meta_path)
            base = str(meta_path.with_suffix(""))
            try:
                if not data_path.exists():
                    raise RecordingMissingError(f"Missing data file {data_path}")
                meta = api.read_meta(meta_path)
            except (LorafpError, ValueError) as e:
                logger.warning(f"Skipping {base}: {e}")
                problems.append((base, str(e)))
                continue
            if predicate is not None and not predicate(meta):
                continue
            if meta.datatype not in api.READABLE_DATATYPES:
                problems.append((base, f"unknown datatype `{meta.datatype}`"))
                continue
            rows.append(
                {
                    "path": base,
                    "device_id": int(meta.device_id),
                    "scenario_id": meta.scenario_id,
                    "day": int(meta.day),
                    "location": meta.location,
                    "config_id": int(meta.config_id),
                    "receiver_id": int(meta.receiver_id),
                    "transmission": int(meta.transmission),
                    "sample_rate_hz": float(meta.sample_rate_hz),
                    "carrier_hz": float(meta.carrier_hz),
                    "sample_count": (
                        data_path.stat().st_size // api.sample_size(meta.datatype)
                    ),
                }
            )
        df = pd.DataFrame(rows, columns=INDEX_COLUMNS)
        return df.sort_values("path", ignore_index=True), problems

    @classmethod
    def build_dataset_index(
        cls,
        root_dir: str | pathlib.Path,
        /,
        *,
        predicate: None | Callable[[api.RecordingMeta], bool] = None,
        expected_devices: None | set[int] = None,
    ) -> DatasetIndex:
        """Build a dataset index and check label coverage.

        A device that's missing from a scenario is reported (and logged) but
        doesn't stop the index from being built.

        Args:
            root_dir: Directory to scan recursively.
            predicate: Optional scenario filter on each recording's metadata
                (e.g., ``lambda m: m.day == 1``).
            expected_devices: Devices every scenario should contain. Defaults
                to every device found in the index.

        Returns:
            The dataset index.

        Examples:
            >>> index = lorafp.sigmf.feat.recordings.build_dataset_index(  # doctest: +SKIP
            ...     "lorafp_data/desk/datasets"
            ... )
            >>> index.complete  # doctest: +SKIP
            True

        """
        df, problems = cls.scan(root_dir, predicate=predicate)
        expected = (
            set(expected_devices)
            if expected_devices is not None
            else set(int(d) for d in df["device_id"].unique())
        )
        coverage_rows = []
        for scenario_id, g in df.groupby("scenario_id", sort=True):
            present = set(int(d) for d in g["device_id"].unique())
            missing = sorted(expected - present)
            if missing:
                logger.warning(
                    f"Scenario `{scenario_id}` is missing devices {missing}"
                )
            coverage_rows.append(
                {
                    "scenario_id": scenario_id,
                    "num_recordings": len(g.index),
                    "num_devices": len(present),
                    "missing_devices": missing,
                }
            )
        coverage = pd.DataFrame(
            coverage_rows,
            columns=["scenario_id", "num_recordings", "num_devices", "missing_devices"],
        ).set_index("scenario_id")
        return DatasetIndex(df, coverage, problems)

    @classmethod
    def install(
        cls,
        root_dir: str | pathlib.Path,
        /,
        *,
        engine: None | Engine = None,
        recreate_tables: bool = False,
    ) -> int:
        """Index every recording under ``root_dir`` into the recordings SQL table.

        Tables associated with this method are created if they don't already
        exist. Rows for already-indexed paths are replaced.

        Args:
            root_dir: Directory to scan recursively.
            engine: Dataset index database engine. Defaults to the engine at
                :data:`lorafp.backend.engine`.
            recreate_tables: Whether to drop and recreate tables, wiping all
                previously indexed recordings.

        Returns:
            Number of rows written to the SQL table.

        """
        engine = engine or backend.engine
        if engine.url.get_backend_name() == "sqlite" and engine.url.database:
            pathlib.Path(engine.url.database).parent.mkdir(parents=True, exist_ok=True)
        if recreate_tables or not sa.inspect(engine).has_table(sql.recordings.name):
            sql.recordings.drop(engine, checkfirst=True)
            sql.recordings.create(engine)

        df, _ = cls.scan(root_dir)
        total_rows = 0
        with engine.begin() as conn:
            for row in tqdm(
                df.to_dict(orient="records"),
                desc="Indexing recordings",
                position=0,
                leave=True,
                disable=not len(df.index),
            ):
                conn.execute(
                    sql.recordings.delete().where(sql.recordings.c.path == row["path"])
                )
                conn.execute(sql.recordings.insert(), row)
                total_rows += 1
                logger.debug(f"Indexed {row['path']}")
        return total_rows

    @classmethod
    def from_raw(
        cls,
        *,
        scenario_id: None | str = None,
        device_id: None | int = None,
        engine: None | Engine = None,
    ) -> pd.DataFrame:
        """Get indexed recordings from the SQL table.

        Args:
            scenario_id: Only return recordings of this scenario.
            device_id: Only return recordings of this device.
            engine: Dataset index database engine. Defaults to the engine at
                :data:`lorafp.backend.engine`.

        Returns:
            A dataframe with :data:`INDEX_COLUMNS`, sorted by path.

        Raises:
            `NoResultFound`: If no rows match.

        """
        engine = engine or backend.engine
        if not sa.inspect(engine).has_table(sql.recordings.name):
            sql.recordings.create(engine)
        stmt = sa.select(sql.recordings)
        if scenario_id is not None:
            stmt = stmt.where(sql.recordings.c.scenario_id == scenario_id)
        if device_id is not None:
            stmt = stmt.where(sql.recordings.c.device_id == device_id)
        with engine.begin() as conn:
            df = pd.DataFrame(conn.execute(stmt.order_by(sql.recordings.c.path)))
        if not len(df.index):
            raise NoResultFound(
                f"No recordings found for scenario {scenario_id} and device {device_id}."
            )
        return df

    @classmethod
    def get_device_set(
        cls, scenario_id: None | str = None, /, *, engine: None | Engine = None
    ) -> set[int]:
        """Get all device IDs in the index, optionally within one scenario.

        Examples:
            >>> 0 in lorafp.sigmf.feat.recordings.get_device_set()  # doctest: +SKIP
            True

        """
        engine = engine or backend.engine
        if not sa.inspect(engine).has_table(sql.recordings.name):
            sql.recordings.create(engine)
        stmt = sa.select(sql.recordings.c.device_id).distinct()
        if scenario_id is not None:
            stmt = stmt.where(sql.recordings.c.scenario_id == scenario_id)
        with engine.begin() as conn:
            return set(conn.execute(stmt).scalars().all())

    @classmethod
    def get_scenario_set(cls, *, engine: None | Engine = None) -> set[str]:
        """Get all scenario labels in the index."""
        engine = engine or backend.engine
        if not sa.inspect(engine).has_table(sql.recordings.name):
            sql.recordings.create(engine)
        with engine.begin() as conn:
            return set(
                conn.execute(sa.select(sql.recordings.c.scenario_id).distinct())
                .scalars()
                .all()
            )


recordings = Recordings()
"""The most popular way for accessing :class:`Recordings`.

:meta hide-value:
"""
