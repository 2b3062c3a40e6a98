"""Loss, optimiser, training loop and transfer learning."""

from regenn.training.loss import mae_loss
from regenn.training.optim import (
    AdamState,
    PlateauScheduler,
    adam_step,
    clip_gradients,
    global_norm,
    plateau_scheduler,
)
from regenn.training.trainer import TrainConfig, TrainReport, train, validation_mae
from regenn.training.transfer import (
    InvalidScheduleError,
    TransferSlice,
    mask_count,
    perturb_weights,
    transfer_train,
)

__all__ = [
    "AdamState", "InvalidScheduleError", "PlateauScheduler", "TrainConfig", "TrainReport",
    "TransferSlice", "adam_step", "clip_gradients", "global_norm", "mae_loss", "mask_count",
    "perturb_weights", "plateau_scheduler", "train", "transfer_train", "validation_mae",
]
