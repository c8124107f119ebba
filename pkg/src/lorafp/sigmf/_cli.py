"""SigMF dataset CLI."""

import logging
import pathlib

import click

from . import feat as _feat

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


@click.group(help="SigMF recording and dataset index tools.")
def entry_point() -> None:
    ...


@entry_point.command(
    help=(
        "Index every recording pair under a directory into the dataset index "
        "database (`LORAFP_DATABASE_URL`)."
    ),
)
@click.argument(
    "root_dir",
    type=click.Path(exists=True, file_okay=False, path_type=pathlib.Path),
)
@click.option(
    "--recreate-tables",
    "-r",
    is_flag=True,
    default=False,
    help=(
        "Whether to reset the recordings table by dropping and recreating it, "
        "forgetting every previously indexed recording."
    ),
)
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    default=False,
    help="Sets the log level to DEBUG to show each indexed recording.",
)
def install(
    root_dir: pathlib.Path, recreate_tables: bool = False, verbose: bool = False
) -> int:
    if verbose:
        logging.getLogger(__package__).setLevel(logging.DEBUG)

    total_rows = _feat.recordings.install(root_dir, recreate_tables=recreate_tables)
    if total_rows:
        logger.info(f"{total_rows} total rows inserted for {__package__}")
    else:
        logger.warning(
            f"No rows were inserted for {__package__}. Check that {root_dir} "
            "holds `.sigmf-meta`/`.sigmf-data` pairs."
        )
    return total_rows


@entry_point.command(
    help="Report which devices each scenario under a directory has recordings for.",
)
@click.argument(
    "root_dir",
    type=click.Path(exists=True, file_okay=False, path_type=pathlib.Path),
)
@click.option(
    "--num-devices",
    "-n",
    type=int,
    default=None,
    help=(
        "Number of devices every scenario should contain (IDs 0 to n - 1). "
        "Defaults to every device found under the directory."
    ),
)
def coverage(root_dir: pathlib.Path, num_devices: None | int = None) -> None:
    expected = set(range(num_devices)) if num_devices is not None else None
    index = _feat.recordings.build_dataset_index(root_dir, expected_devices=expected)
    click.echo(index.coverage.to_string())
    for path, reason in index.problems:
        click.echo(f"unreadable {path}: {reason}", err=True)
    if not index.complete:
        raise click.ClickException("Some scenarios are missing devices")
