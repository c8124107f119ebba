""":mod:`lorafp` configuration and global SQLAlchemy setup. Data paths and the
dataset-index database URL are configured in this module at runtime according
to environment variables.

Environment variables should ideally be configured using an ``.env`` file
in the desired working directory. Environment variables assigned in the
``.env`` file are loaded on the :mod:`lorafp` module's first instantiation.

"""

import os
import pathlib

from sqlalchemy import create_engine

root_path = pathlib.Path(os.environ.get("LORAFP_ROOT_PATH", pathlib.Path.cwd()))
"""Parent directory of the ``lorafp_data`` directory where the default dataset
index database is stored. This can be set with the ``LORAFP_ROOT_PATH``
environment variable and defaults to the current working directory.

:meta hide-value:
"""

data_path = root_path / "lorafp_data"
"""Default directory for generated datasets and experiment outputs when a
plan doesn't name its own output directory.

:meta hide-value:
"""

database_path = data_path / "lorafp.sqlite"
"""Default path to the dataset index database file. The ``LORAFP_DATABASE_URL``
environment variable takes precedence over this value.

:meta hide-value:
"""

database_url = os.environ.get("LORAFP_DATABASE_URL", f"sqlite:///{database_path}")
"""SQLAlchemy URL to the dataset index database. This can be set with the
``LORAFP_DATABASE_URL`` environment variable. This defaults to
``f"sqlite:///{lorafp.backend.database_path}"``.

:meta hide-value:
"""

engine = create_engine(database_url)
"""The default SQLAlchemy engine for the dataset index database. The
:mod:`lorafp.sigmf` submodules use this engine by default, while experiments
use a database inside their own output directory.

:meta hide-value:
"""
