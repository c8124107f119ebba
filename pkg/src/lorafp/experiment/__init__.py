"""Experiment plans, dataset generation and the experiments run on them."""

from . import _cli, plan, runner
