"""Main CLI entry points."""

import logging
import os
import pathlib
import sys

import click

from . import experiment, sigmf, utils
from .errors import LorafpError

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)


@click.group()
def cli() -> None:
    ...


@cli.command(help="Persist the lorafp root directory to the local .env file.")
@click.option(
    "--root-path",
    default=None,
    type=click.Path(file_okay=False, path_type=pathlib.Path),
    help=(
        "Parent directory of `lorafp_data/`. Prompts when omitted and "
        "`LORAFP_ROOT_PATH` isn't set."
    ),
)
def init(root_path: None | pathlib.Path = None) -> None:
    if root_path is None:
        if "LORAFP_ROOT_PATH" in os.environ:
            logger.info("LORAFP_ROOT_PATH found in the environment")
            return
        entered = click.prompt(
            "Root path (lorafp data is written to /path/to/root/lorafp_data/)",
            default=str(pathlib.Path.cwd()),
        ).strip()
        root_path = pathlib.Path(entered)
    root_path = root_path.expanduser().resolve()
    p = utils.setenv("LORAFP_ROOT_PATH", str(root_path), exist_ok=True)
    logger.info(f"LORAFP_ROOT_PATH written to {p}")


for _name, _command in experiment._cli.entry_point.commands.items():
    cli.add_command(_command, _name)
cli.add_command(sigmf._cli.entry_point, "sigmf")


def format_error(code: str, e: BaseException, /) -> str:
    """The single stderr line printed for a failed command.

    Examples:
        >>> from lorafp.__main__ import format_error
        >>> format_error("experiment.plan", ValueError("bad seed"))
        'error code=experiment.plan type=ValueError message="bad seed"'

    """
    message = " ".join(str(e).split()).replace("\\", "\\\\").replace('"', '\\"')
    return f'error code={code} type={type(e).__name__} message="{message}"'


def main(args: None | list[str] = None) -> int:
    """Run the CLI and convert failures to an error line and exit status.

    Returns:
        ``0`` on success, ``2`` for usage errors, ``1`` for everything else.

    """
    try:
        cli.main(args=args, prog_name="lorafp", standalone_mode=False)
    except click.exceptions.Abort as e:
        click.echo(format_error("cli.aborted", e), err=True)
        return 1
    except click.ClickException as e:
        click.echo(format_error("cli.usage", e), err=True)
        return e.exit_code or 1
    except LorafpError as e:
        logger.debug("Command failed", exc_info=True)
        click.echo(format_error(e.code, e), err=True)
        return 1
    except Exception as e:
        logger.debug("Command failed", exc_info=True)
        click.echo(format_error("lorafp.internal", e), err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
