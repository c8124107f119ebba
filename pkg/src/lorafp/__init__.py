"""Main package interface."""

from importlib.metadata import PackageNotFoundError, version

from dotenv import load_dotenv

load_dotenv()

from . import (
    backend,
    capture,
    channel,
    classifier,
    errors,
    experiment,
    impairments,
    sigmf,
    testing,
    utils,
    waveform,
)

try:
    __version__ = version("lorafp")
except PackageNotFoundError:
    pass
