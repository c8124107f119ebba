"""Convolutional device classifier: architecture, training and evaluation."""

from . import model, train
