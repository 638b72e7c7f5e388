"""Training loop: full-sequence regression of normalized power.

Flights are fed as whole sequences, so the zero history at a flight's
first timesteps matches what inference sees at a window start. The
model with the best validation loss is exported in the portable weight
schema together with the normalization statistics and a record of
every training choice.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from uavrisk.power import TcnWeights, save_weights

from .ingest import load_corpus
from .model import Normalization, PowerTcn, export_weights


@dataclass(frozen=True)
class TrainConfig:
    channels: int = 64
    kernel: int = 2
    layers: int = 5
    stacks: int = 1
    dropout: float = 0.05
    learning_rate: float = 0.002
    epochs: int = 25
    seed: int = 31412
    batch_flights: int = 4


class TrainingError(Exception):
    pass


def _tensorize(flights, norm, device):
    """Per-flight normalized (features, context, power) tensors."""
    out = []
    for fl in flights:
        feats = (fl.feature_matrix() - norm.feature_means) / norm.feature_stds
        ctx = (np.array([fl.context.air_density, fl.context.payload_mass])
               - norm.context_means) / norm.context_stds
        target = (np.asarray(fl.measured_power) - norm.target_mean) \
            / norm.target_std
        out.append((torch.tensor(feats.T, dtype=torch.float32, device=device),
                    torch.tensor(ctx, dtype=torch.float32, device=device),
                    torch.tensor(target, dtype=torch.float32, device=device)))
    return out


def _epoch_loss(model, data, loss_fn, optimizer=None):
    total, frames = 0.0, 0
    for feats, ctx, target in data:
        pred = model(feats[None, :, :], ctx[None, :])[0]
        loss = loss_fn(pred, target)
        if optimizer is not None:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        total += float(loss.detach()) * target.numel()
        frames += target.numel()
    return total / max(frames, 1)


def train_tcn(corpus_dir, out_path, cfg: TrainConfig = TrainConfig(),
              quiet=False) -> TcnWeights:
    groups, manifest = load_corpus(corpus_dir)
    train_flights = [fl for _, fl in groups["train"]]
    val_flights = [fl for _, fl in groups["val"]] or train_flights
    if not train_flights:
        raise TrainingError("corpus has no training flights")
    periods = {round(fl.sample_period, 6) for fl in train_flights}
    if len(periods) != 1:
        raise TrainingError(f"mixed sample periods in corpus: {periods}")
    sample_period = train_flights[0].sample_period

    torch.manual_seed(cfg.seed)
    norm = Normalization.from_flights(train_flights)
    model = PowerTcn(channels=cfg.channels, kernel=cfg.kernel,
                     layers=cfg.layers, stacks=cfg.stacks,
                     dropout=cfg.dropout)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.MSELoss()
    device = "cpu"
    train_data = _tensorize(train_flights, norm, device)
    val_data = _tensorize(val_flights, norm, device)

    rng = np.random.default_rng(cfg.seed)
    best_val = math.inf
    best_state = None
    t0 = time.monotonic()
    for epoch in range(cfg.epochs):
        model.train()
        order = rng.permutation(len(train_data))
        _epoch_loss(model, [train_data[i] for i in order], loss_fn, optimizer)
        model.eval()
        with torch.no_grad():
            val = _epoch_loss(model, val_data, loss_fn)
        if math.isnan(val):
            raise TrainingError(f"validation loss became NaN at epoch {epoch}")
        if val < best_val:
            best_val = val
            best_state = {k: v.detach().clone()
                          for k, v in model.state_dict().items()}
        if not quiet:
            print(f"epoch {epoch + 1:3d}/{cfg.epochs}  val MSE {val:.5f}"
                  f"  best {best_val:.5f}", flush=True)
    model.load_state_dict(best_state)
    model.eval()

    weights = export_weights(model, norm, sample_period, metadata={
        "trained_on": f"{len(train_flights)} flights "
                      f"({sum(len(f) for f in train_flights)} frames)",
        "optimizer": "adam",
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "dropout": cfg.dropout,
        "loss": "mse on normalized power, all timesteps",
        "window_policy": "full sequences; missing history is zero in "
                         "normalized space at every layer (causal padding)",
        "weight_norm": "not used",
        "best_val_mse_normalized": best_val,
        "train_seed": cfg.seed,
        "train_time_s": round(time.monotonic() - t0, 1),
        "split_seed": manifest.get("split_seed"),
    })
    if out_path is not None:
        save_weights(weights, out_path)
    return weights
