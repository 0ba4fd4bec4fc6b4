"""Adam training of the reconstruction autoencoders."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from meterguard.errors import DivergedLoss, EmptyTrainSet
from meterguard.nn.adam import Adam
from meterguard.nn.autoencoder import AutoencoderModel, Variant, init_model, loss_and_grads, reconstruction_mse

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 200
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    hidden: int = 16
    gcn_features: int = 2
    dropout: float = 0.0  # on the latent vector, training only
    threshold_percentile: float = 99.5

    def __post_init__(self):
        for name in ("learning_rate", "epochs", "batch_size", "beta1", "beta2", "eps", "hidden"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 < self.threshold_percentile <= 100.0:
            raise ValueError("threshold_percentile must be in (0, 100]")


@dataclass
class LossHistory:
    initial_train: float
    initial_validation: float
    train: list[float] = field(default_factory=list)
    validation: list[float] = field(default_factory=list)
    best_epoch: int = -1

    def as_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.train, self.validation))


def train_autoencoder(
    variant: Variant | str, partition, config: TrainConfig | None = None
) -> tuple[AutoencoderModel, LossHistory]:
    """Minimize window MSE with Adam; return the best-validation snapshot and the history."""
    config = config or TrainConfig()
    train = np.asarray(partition.train, dtype=float)
    val = np.asarray(partition.validation, dtype=float)
    if len(train) == 0:
        raise EmptyTrainSet("no training windows")
    monitor = val if len(val) else train

    model = init_model(
        variant, config.hidden, partition.window_len, config.seed, gcn_features=config.gcn_features
    )
    model.train_config = config
    rng = np.random.default_rng([config.seed, 1])
    opt = Adam(model.params, config.learning_rate, config.beta1, config.beta2, config.eps)
    history = LossHistory(reconstruction_mse(model, train), reconstruction_mse(model, monitor))
    best_loss, best_params = history.initial_validation, {k: v.copy() for k, v in model.params.items()}

    n = len(train)
    keep = 1.0 - config.dropout
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            batch = train[order[s : s + config.batch_size]]
            mask = None
            if config.dropout > 0:
                mask = (rng.random((len(batch), model.latent_size)) < keep) / keep
            loss, grads = loss_and_grads(model, batch, mask)
            if not np.isfinite(loss):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            opt.step(grads)
            total += loss * len(batch)
        history.train.append(total / n)
        v = reconstruction_mse(model, monitor)
        if not np.isfinite(v):
            raise DivergedLoss(f"non-finite validation loss at epoch {epoch}")
        history.validation.append(v)
        if v < best_loss:
            best_loss, history.best_epoch = v, epoch
            best_params = {k: p.copy() for k, p in model.params.items()}
        if epoch % 20 == 0 or epoch == config.epochs - 1:
            log.info("%s epoch %d train %.5f val %.5f", model.variant.value, epoch, history.train[-1], v)
    model.params = best_params
    return model, history
