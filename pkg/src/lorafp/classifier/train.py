"""Splitting, training and evaluating the device classifier."""

import copy
import logging
import math
import pathlib
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import torch
from torch.utils.data import DataLoader, TensorDataset
from tqdm import tqdm

from ..capture import FrameSet
from ..errors import DivergenceError, SingleClassError
from .model import CnnArchitecture, loss_fn, predict_proba

logging.basicConfig(
    format="%(asctime)s | %(levelname)s | %(message)s", level=logging.INFO
)
logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "lr", "train_loss", "train_acc", "val_loss", "val_acc"]
"""Columns of a training history.

:meta hide-value:
"""

MIN_TRANSMISSIONS_FOR_WHOLE_SPLITS = 3
"""Devices with at least this many transmissions are split by whole
transmission. Devices with fewer are split by contiguous runs of windows.

:meta hide-value:
"""


@dataclass(frozen=True)
class TrainSchedule:
    """Optimizer and learning-rate schedule.

    The learning rate starts at :attr:`initial_learning_rate` and is
    multiplied by :attr:`lr_drop_factor` every :attr:`lr_drop_period_epochs`
    epochs.

    """

    #: Learning rate of the first epoch.
    initial_learning_rate: float = 0.07

    #: Learning-rate multiplier applied at every drop.
    lr_drop_factor: float = 0.1

    #: Epochs between learning-rate drops.
    lr_drop_period_epochs: int = 19

    #: Coefficient of the squared-weight penalty.
    l2_regularization: float = 1e-4

    #: SGD momentum.
    momentum: float = 0.9

    #: Frames per minibatch.
    batch_size: int = 64

    #: Number of epochs.
    max_epochs: int = 40

    #: Seed of initialization, shuffling and dropout.
    rng_seed: int = 0

    def __post_init__(self) -> None:
        """Argument validation."""
        for name in (
            "initial_learning_rate",
            "l2_regularization",
            "momentum",
            "lr_drop_period_epochs",
            "batch_size",
            "max_epochs",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(
                    f"`{name}` must be positive but got {getattr(self, name)}"
                )
        if not 0 < self.lr_drop_factor < 1:
            raise ValueError(
                f"`lr_drop_factor` must be in (0, 1) but got {self.lr_drop_factor}"
            )

    def learning_rate(self, epoch: int, /) -> float:
        """Learning rate of a 1-based epoch.

        Examples:
            >>> from lorafp.classifier.train import TrainSchedule
            >>> s = TrainSchedule()
            >>> s.learning_rate(19), round(s.learning_rate(20), 10)
            (0.07, 0.007)

        """
        drops = (epoch - 1) // self.lr_drop_period_epochs
        return self.initial_learning_rate * self.lr_drop_factor**drops


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test split of one scenario's frames."""

    #: Fraction of frames used for training.
    train: float = 0.8

    #: Fraction of frames used for validation and model selection.
    validation: float = 0.1

    #: Fraction of frames held out for testing.
    test: float = 0.1

    #: Seed of the split.
    rng_seed: int = 0

    #: Whether every device is split separately so each split holds every
    #: device.
    stratified: bool = True

    def __post_init__(self) -> None:
        """Argument validation."""
        fractions = (self.train, self.validation, self.test)
        if any(f <= 0 for f in fractions):
            raise ValueError(f"Split fractions must be positive but got {fractions}")
        if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
            raise ValueError(f"Split fractions must sum to 1 but got {fractions}")


@dataclass(frozen=True, eq=False)
class Splits:
    """Frames of each split."""

    train: FrameSet
    validation: FrameSet
    test: FrameSet


@dataclass(frozen=True, eq=False)
class Evaluation:
    """Classification accuracy and confusion matrix."""

    #: ``trace(confusion) / sum(confusion)``.
    accuracy: float

    #: Counts with true labels along rows and predictions along columns.
    confusion: np.ndarray

    @property
    def num_frames(self) -> int:
        """Number of evaluated frames."""
        return int(self.confusion.sum())

    def confusion_frame(self) -> pd.DataFrame:
        """The confusion matrix as a labeled dataframe."""
        labels = range(self.confusion.shape[0])
        return pd.DataFrame(
            self.confusion,
            index=pd.Index(labels, name="true"),
            columns=pd.Index(labels, name="predicted"),
        )


@dataclass(eq=False)
class TrainedModel:
    """A trained classifier and how it got there."""

    #: The classifier restored to its best-validation epoch.
    model: CnnArchitecture

    #: One row per epoch with :data:`HISTORY_COLUMNS`.
    history: pd.DataFrame

    #: 1-based epoch the parameters were taken from.
    best_epoch: int

    #: Training wall-clock time (in seconds).
    wall_clock_s: float

    #: The split the model was trained on, if :func:`train` made one.
    splits: None | Splits = field(default=None)


def _split_counts(n: int, spec: SplitSpec, /) -> tuple[int, int, int]:
    n_test = max(1, round(n * spec.test))
    n_val = max(1, round(n * spec.validation))
    n_train = n - n_test - n_val
    if n_train < 1:
        raise ValueError(f"Can't split {n} items into nonempty train/val/test splits")
    return n_train, n_val, n_test


def split_frames(frames: FrameSet, spec: SplitSpec, /) -> Splits:
    """Split a scenario's frames into train, validation and test frames.

    Devices with at least :data:`MIN_TRANSMISSIONS_FOR_WHOLE_SPLITS`
    transmissions are split by whole transmission so no transmission spans
    two splits. Other devices are split into contiguous runs of windows
    (train first, then validation, then test).

    Args:
        frames: Frames of one scenario.
        spec: Split fractions and seed.

    Returns:
        The splits.

    Raises:
        `SingleClassError`: If the frames hold fewer than two devices.
        `ValueError`: If a device has too few frames to appear in every split.

    """
    labels = np.unique(frames.labels)
    if len(labels) < 2:
        raise SingleClassError(
            f"Need frames of at least 2 devices to train but got {labels.tolist()}"
        )
    rng = np.random.default_rng(spec.rng_seed)
    parts: tuple[list[np.ndarray], list[np.ndarray], list[np.ndarray]] = ([], [], [])
    groups = (
        [np.flatnonzero(frames.labels == label) for label in labels]
        if spec.stratified
        else [np.arange(len(frames))]
    )
    transmissions = frames.provenance["transmission"].to_numpy()
    for idx in groups:
        tx = np.unique(transmissions[idx])
        if len(tx) >= MIN_TRANSMISSIONS_FOR_WHOLE_SPLITS:
            order = rng.permutation(tx)
            n_train, n_val, _ = _split_counts(len(tx), spec)
            chosen = (
                order[:n_train],
                order[n_train : n_train + n_val],
                order[n_train + n_val :],
            )
            for part, keep in zip(parts, chosen):
                part.append(idx[np.isin(transmissions[idx], keep)])
        else:
            n_train, n_val, _ = _split_counts(len(idx), spec)
            part_idx = (
                idx[:n_train],
                idx[n_train : n_train + n_val],
                idx[n_train + n_val :],
            )
            for part, keep in zip(parts, part_idx):
                part.append(keep)
    train, val, test = (frames.subset(np.sort(np.concatenate(p))) for p in parts)
    for name, s in (("train", train), ("validation", val), ("test", test)):
        missing = sorted(set(labels.tolist()) - set(np.unique(s.labels).tolist()))
        if missing:
            logger.warning(f"Devices {missing} are missing from the {name} split")
    return Splits(train, val, test)


def _loader(
    frames: FrameSet, batch_size: int, generator: torch.Generator, /
) -> DataLoader:
    dataset = TensorDataset(
        torch.from_numpy(np.ascontiguousarray(frames.data)),
        torch.from_numpy(frames.labels),
    )
    return DataLoader(dataset, batch_size=batch_size, shuffle=True, generator=generator)


@torch.no_grad()
def _loss_and_accuracy(
    model: CnnArchitecture, frames: FrameSet, /
) -> tuple[float, float]:
    model.eval()
    total_loss = 0.0
    correct = 0
    for start in range(0, len(frames), 256):
        x = torch.from_numpy(frames.data[start : start + 256])
        y = torch.from_numpy(frames.labels[start : start + 256])
        loss, logits = loss_fn(model, x, y, l2_regularization=0.0)
        total_loss += float(loss) * len(y)
        correct += int((logits.argmax(dim=1) == y).sum())
    return total_loss / len(frames), correct / len(frames)


def fit(
    model: CnnArchitecture,
    train_frames: FrameSet,
    val_frames: None | FrameSet,
    schedule: TrainSchedule,
    /,
    *,
    progress: bool = True,
) -> TrainedModel:
    """Train a classifier with momentum SGD and a step learning-rate schedule.

    Minibatches are reshuffled every epoch from a generator seeded with the
    schedule's seed. After training, the parameters of the epoch with the
    best validation accuracy are restored (the last epoch if there are no
    validation frames).

    Args:
        model: Classifier to train in place.
        train_frames: Training frames.
        val_frames: Validation frames used for model selection.
        schedule: Training schedule.
        progress: Whether to show a progress bar.

    Returns:
        The trained model and its history.

    Raises:
        `DivergenceError`: If the training loss becomes non-finite.

    """
    torch.manual_seed(schedule.rng_seed)
    generator = torch.Generator().manual_seed(schedule.rng_seed)
    loader = _loader(train_frames, schedule.batch_size, generator)
    optimizer = torch.optim.SGD(
        model.parameters(),
        lr=schedule.initial_learning_rate,
        momentum=schedule.momentum,
    )
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer,
        step_size=schedule.lr_drop_period_epochs,
        gamma=schedule.lr_drop_factor,
    )

    rows = []
    best_epoch, best_acc = schedule.max_epochs, -1.0
    best_state = None
    start = time.perf_counter()
    for epoch in tqdm(
        range(1, schedule.max_epochs + 1),
        desc="Training",
        position=0,
        leave=False,
        disable=not progress,
    ):
        lr = optimizer.param_groups[0]["lr"]
        model.train()
        total_loss = 0.0
        correct = 0
        for x, y in loader:
            optimizer.zero_grad()
            loss, logits = loss_fn(
                model, x, y, l2_regularization=schedule.l2_regularization
            )
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"Non-finite training loss {float(loss)} at epoch {epoch} "
                    f"(learning rate {lr})"
                )
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * len(y)
            correct += int((logits.detach().argmax(dim=1) == y).sum())
        scheduler.step()
        row = {
            "epoch": epoch,
            "lr": lr,
            "train_loss": total_loss / len(train_frames),
            "train_acc": correct / len(train_frames),
            "val_loss": float("nan"),
            "val_acc": float("nan"),
        }
        if val_frames is not None and len(val_frames):
            row["val_loss"], row["val_acc"] = _loss_and_accuracy(model, val_frames)
            if row["val_acc"] > best_acc:
                best_epoch, best_acc = epoch, row["val_acc"]
                best_state = copy.deepcopy(model.state_dict())
        rows.append(row)
        logger.debug(
            f"Epoch {epoch}: lr={lr:.3g} train_loss={row['train_loss']:.4f} "
            f"train_acc={row['train_acc']:.3f} val_acc={row['val_acc']:.3f}"
        )
    wall_clock_s = time.perf_counter() - start
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS)
    logger.info(
        f"Trained for {schedule.max_epochs} epochs in {wall_clock_s:.1f} s "
        f"(best epoch {best_epoch}, val_acc={best_acc:.3f})"
    )
    return TrainedModel(model, history, best_epoch, wall_clock_s)


def train(
    model: CnnArchitecture,
    frames: FrameSet,
    split: SplitSpec,
    schedule: TrainSchedule,
    /,
    *,
    progress: bool = True,
) -> TrainedModel:
    """Split a scenario's frames and train a classifier on them.

    Args:
        model: Classifier to train in place.
        frames: Frames of one scenario.
        split: Split specification.
        schedule: Training schedule.
        progress: Whether to show a progress bar.

    Returns:
        The trained model with its history and splits.

    """
    splits = split_frames(frames, split)
    logger.info(
        f"Training on {len(splits.train)} frames "
        f"({len(splits.validation)} validation, {len(splits.test)} test)"
    )
    result = fit(model, splits.train, splits.validation, schedule, progress=progress)
    result.splits = splits
    return result


def evaluate(
    model: CnnArchitecture, frames: FrameSet, /, *, batch_size: int = 256
) -> Evaluation:
    """Classify frames by their most probable device and score the decisions.

    Args:
        model: Classifier. It's switched to inference mode.
        frames: Labeled frames.
        batch_size: Frames per forward pass.

    Returns:
        The accuracy and the ``C x C`` confusion matrix.

    Raises:
        `ValueError`: If a frame label isn't a class of the model.

    """
    c = model.num_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    if not len(frames):
        return Evaluation(float("nan"), confusion)
    labels = frames.labels
    if int(labels.min()) < 0 or int(labels.max()) >= c:
        raise ValueError(
            f"Labels must be in [0, {c}) but got "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    predicted = predict_proba(model, frames.data, batch_size=batch_size).argmax(axis=1)
    np.add.at(confusion, (labels, predicted), 1)
    accuracy = float(np.trace(confusion) / confusion.sum())
    return Evaluation(accuracy, confusion)


def write_history(history: pd.DataFrame, path: str | pathlib.Path, /) -> pathlib.Path:
    """Write a training history to CSV."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    history.to_csv(path, index=False)
    return path
