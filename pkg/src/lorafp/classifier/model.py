"""Convolutional device classifier over ``2 x W`` frames.

The network is a stack of identical blocks, each a bank of ``1 x 4``
convolutions with same-padding along the frame width, batch normalization,
a leaky rectifier and a ``1 x 2`` max pool. A final ``2 x 4`` convolution
collapses the two frame rows, an average pool collapses what's left of the
width, and a fully connected layer maps the filters to class scores. With the
default five blocks an 8192-sample frame is pooled down to 256 samples before
the average pool.

"""

import logging
import pathlib
from dataclasses import asdict
from typing import Any

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..capture import Frame

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
"""Version of the checkpoint container written by :func:`save_checkpoint`.

:meta hide-value:
"""


class CnnArchitecture(nn.Module):
    """The device classifier.

    :meth:`forward` returns class logits. Use :func:`forward` (the module
    function) or :func:`predict_proba` for probabilities.

    Args:
        window_len: Frame width ``W``. Must be divisible by
            ``2**num_blocks``.
        num_classes: Number of devices.
        num_blocks: Number of convolution/pooling blocks.
        num_filters: Filters per convolution.
        leaky_slope: Negative slope of the leaky rectifiers.
        dropout: Dropout rate applied after the fully connected activation
            while training.

    Examples:
        >>> from lorafp.classifier.model import CnnArchitecture
        >>> model = CnnArchitecture(8192)
        >>> model.pooled_width
        256

    """

    def __init__(
        self,
        window_len: int = 8192,
        num_classes: int = 25,
        /,
        *,
        num_blocks: int = 5,
        num_filters: int = 16,
        leaky_slope: float = 0.01,
        dropout: float = 0.5,
    ) -> None:
        super().__init__()
        if num_blocks < 1:
            raise ValueError(f"Need at least 1 block but got {num_blocks}")
        if window_len % 2**num_blocks or window_len < 2**num_blocks:
            raise ValueError(
                f"Window length {window_len} isn't divisible by 2**{num_blocks}"
            )
        if num_classes < 2:
            raise ValueError(f"Need at least 2 classes but got {num_classes}")
        if not 0 <= dropout < 1:
            raise ValueError(f"Dropout must be in [0, 1) but got {dropout}")
        self.window_len = window_len
        self.num_classes = num_classes
        self.num_blocks = num_blocks
        self.num_filters = num_filters
        self.leaky_slope = leaky_slope
        self.dropout_rate = dropout

        blocks: list[nn.Module] = []
        in_channels = 1
        for _ in range(num_blocks):
            blocks += [
                nn.Conv2d(in_channels, num_filters, (1, 4), padding="same"),
                nn.BatchNorm2d(num_filters),
                nn.LeakyReLU(leaky_slope),
                nn.MaxPool2d((1, 2), stride=(1, 2)),
            ]
            in_channels = num_filters
        self.blocks = nn.Sequential(*blocks)
        self.collapse = nn.Sequential(
            nn.ZeroPad2d((1, 2, 0, 0)),
            nn.Conv2d(num_filters, num_filters, (2, 4)),
            nn.LeakyReLU(leaky_slope),
        )
        self.pool = nn.AvgPool2d((1, self.pooled_width))
        self.fc = nn.Linear(num_filters, num_classes)
        self.fc_activation = nn.LeakyReLU(leaky_slope)
        self.dropout = nn.Dropout(dropout)

    @property
    def pooled_width(self) -> int:
        """Frame width after the max pools (the average pool length)."""
        return self.window_len // 2**self.num_blocks

    @property
    def num_parameters(self) -> int:
        """Number of trainable parameters."""
        return sum(p.numel() for p in self.parameters() if p.requires_grad)

    @property
    def hparams(self) -> dict[str, Any]:
        """Constructor arguments, as stored in checkpoints."""
        return {
            "window_len": self.window_len,
            "num_classes": self.num_classes,
            "num_blocks": self.num_blocks,
            "num_filters": self.num_filters,
            "leaky_slope": self.leaky_slope,
            "dropout": self.dropout_rate,
        }

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Return class logits for a batch of frames.

        Args:
            x: Frames with shape ``(N, 2, W)`` or ``(N, 1, 2, W)``.

        Returns:
            Logits with shape ``(N, num_classes)``.

        Raises:
            `ValueError`: If the frame shape doesn't match the model.

        """
        if x.ndim == 3:
            x = x.unsqueeze(1)
        if x.ndim != 4 or tuple(x.shape[1:]) != (1, 2, self.window_len):
            raise ValueError(
                f"Expected frames of shape (N, 2, {self.window_len}) but got "
                f"{tuple(x.shape)}"
            )
        x = self.blocks(x)
        x = self.collapse(x)
        x = self.pool(x).flatten(1)
        x = self.fc_activation(self.fc(x))
        return self.dropout(x)


def forward(
    model: CnnArchitecture, frame: Frame, /, *, training: bool = False
) -> np.ndarray:
    """Classify a single frame.

    Args:
        model: Classifier.
        frame: Frame matching the model's window length.
        training: Whether dropout and batch statistics are active. The
            model's mode is restored afterwards.

    Returns:
        Class probabilities (computed in float64) summing to 1.

    """
    was_training = model.training
    model.train(training)
    try:
        dtype = next(model.parameters()).dtype
        x = torch.as_tensor(frame.data, dtype=dtype).unsqueeze(0)
        with torch.set_grad_enabled(training):
            logits = model(x)
        return torch.softmax(logits.detach().double(), dim=1)[0].numpy()
    finally:
        model.train(was_training)


@torch.no_grad()
def predict_proba(
    model: CnnArchitecture, data: np.ndarray, /, *, batch_size: int = 256
) -> np.ndarray:
    """Class probabilities for a stack of frames in inference mode.

    Args:
        model: Classifier. It's switched to inference mode.
        data: Frames with shape ``(N, 2, W)``.
        batch_size: Frames per forward pass.

    Returns:
        Probabilities with shape ``(N, num_classes)``.

    """
    model.eval()
    dtype = next(model.parameters()).dtype
    out = []
    for start in range(0, len(data), batch_size):
        x = torch.as_tensor(data[start : start + batch_size], dtype=dtype)
        out.append(torch.softmax(model(x).double(), dim=1))
    if not out:
        return np.zeros((0, model.num_classes))
    return torch.cat(out).numpy()


def weight_penalty(model: nn.Module, /) -> torch.Tensor:
    """Sum of squared convolution and fully connected weights.

    Biases and batch-norm parameters aren't penalized.

    """
    terms = [
        m.weight.pow(2).sum()
        for m in model.modules()
        if isinstance(m, (nn.Conv2d, nn.Linear))
    ]
    return torch.stack(terms).sum()


def loss_fn(
    model: CnnArchitecture,
    x: torch.Tensor,
    y: torch.Tensor,
    /,
    *,
    l2_regularization: float = 1e-4,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Regularized mean cross-entropy and the logits it was computed from."""
    if y.numel() and (int(y.min()) < 0 or int(y.max()) >= model.num_classes):
        raise ValueError(
            f"Labels must be in [0, {model.num_classes}) but got "
            f"[{int(y.min())}, {int(y.max())}]"
        )
    logits = model(x)
    loss = F.cross_entropy(logits, y)
    if l2_regularization:
        loss = loss + l2_regularization * weight_penalty(model)
    return loss, logits


def loss_and_gradients(
    model: CnnArchitecture,
    data: np.ndarray | torch.Tensor,
    labels: np.ndarray | torch.Tensor,
    /,
    *,
    l2_regularization: float = 1e-4,
) -> tuple[float, dict[str, torch.Tensor]]:
    """Compute the training loss of a batch and its parameter gradients.

    The loss is the mean categorical cross-entropy plus ``l2_regularization``
    times the sum of squared weights. The model's current mode decides
    whether dropout and batch statistics are used.

    Args:
        model: Classifier.
        data: Frames with shape ``(N, 2, W)``.
        labels: Device IDs with shape ``(N,)``.
        l2_regularization: Weight penalty coefficient.

    Returns:
        The loss and a gradient for every trainable parameter, keyed by
        parameter name.

    Raises:
        `ValueError`: If a label is out of range.

    """
    dtype = next(model.parameters()).dtype
    x = torch.as_tensor(data, dtype=dtype)
    y = torch.as_tensor(labels, dtype=torch.int64)
    model.zero_grad()
    loss, _ = loss_fn(model, x, y, l2_regularization=l2_regularization)
    loss.backward()
    grads = {
        name: p.grad.detach().clone()
        for name, p in model.named_parameters()
        if p.requires_grad and p.grad is not None
    }
    return float(loss.detach()), grads


def save_checkpoint(
    path: str | pathlib.Path,
    model: CnnArchitecture,
    /,
    *,
    schedule: Any = None,
) -> pathlib.Path:
    """Save a versioned checkpoint.

    The container holds the format version, the model's constructor
    arguments, the training schedule (if given) and the named parameter and
    buffer tensors.

    Args:
        path: Output path.
        model: Classifier.
        schedule: Training schedule dataclass.

    Returns:
        The written path.

    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    container = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "architecture": model.hparams,
        "schedule": asdict(schedule) if schedule is not None else None,
        "state_dict": model.state_dict(),
    }
    torch.save(container, path)
    logger.debug(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(
    path: str | pathlib.Path, /
) -> tuple[CnnArchitecture, None | dict[str, Any]]:
    """Load a checkpoint written by :func:`save_checkpoint`.

    Returns:
        The restored model (in inference mode) and the schedule mapping.

    Raises:
        `ValueError`: If the checkpoint format version isn't supported.

    """
    container = torch.load(path, map_location="cpu", weights_only=True)
    version = container.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(
            f"Unsupported checkpoint format version {version} in {path} "
            f"(expected {CHECKPOINT_FORMAT_VERSION})"
        )
    arch = dict(container["architecture"])
    model = CnnArchitecture(
        arch.pop("window_len"), arch.pop("num_classes"), **arch
    )
    model.load_state_dict(container["state_dict"])
    model.eval()
    return model, container["schedule"]
