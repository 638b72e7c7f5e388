"""Torch realization of the power TCN, mirroring the core's inference
semantics exactly: causal convolutions with per-layer left zero
padding, ReLU after each convolution, residual add (1x1 projection
when widths differ) and a final ReLU; the invariant context joins the
final channel vector in front of a dense head. Training runs on
normalized features and normalized power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from uavrisk.flight import FRAME_CONVENTION
from uavrisk.power import ConvLayer, ResidualBlock, TcnWeights

N_FEATURES = 5
N_CONTEXT = 2


@dataclass(frozen=True)
class Normalization:
    feature_means: np.ndarray
    feature_stds: np.ndarray
    context_means: np.ndarray
    context_stds: np.ndarray
    target_mean: float
    target_std: float

    @classmethod
    def from_flights(cls, flights) -> "Normalization":
        feats = np.vstack([fl.feature_matrix() for fl in flights])
        ctx = np.array([[fl.context.air_density, fl.context.payload_mass]
                        for fl in flights])
        power = np.concatenate([np.asarray(fl.measured_power)
                                for fl in flights])
        def guard(x):
            return np.where(x > 1e-8, x, 1.0)
        return cls(feature_means=feats.mean(axis=0),
                   feature_stds=guard(feats.std(axis=0)),
                   context_means=ctx.mean(axis=0),
                   context_stds=guard(ctx.std(axis=0)),
                   target_mean=float(power.mean()),
                   target_std=float(max(power.std(), 1e-8)))


class CausalConv(nn.Module):
    def __init__(self, cin, cout, kernel, dilation, dtype=torch.float32):
        super().__init__()
        self.pad = (kernel - 1) * dilation
        self.conv = nn.Conv1d(cin, cout, kernel, dilation=dilation,
                              dtype=dtype)

    def forward(self, x):
        return self.conv(F.pad(x, (self.pad, 0)))


class Block(nn.Module):
    def __init__(self, cin, cout, kernel, dilation, dropout=0.0,
                 dtype=torch.float32):
        super().__init__()
        self.conv1 = CausalConv(cin, cout, kernel, dilation, dtype)
        self.conv2 = CausalConv(cout, cout, kernel, dilation, dtype)
        self.proj = (nn.Conv1d(cin, cout, 1, dtype=dtype)
                     if cin != cout else None)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        h = self.drop(torch.relu(self.conv1(x)))
        h = self.drop(torch.relu(self.conv2(h)))
        res = self.proj(x) if self.proj is not None else x
        return torch.relu(h + res)


class PowerTcn(nn.Module):
    """Per-timestep normalized power from (B, 5, T) features and (B, 2)
    context."""

    def __init__(self, channels=64, kernel=2, layers=5, stacks=1,
                 dropout=0.0, dtype=torch.float32):
        super().__init__()
        self.channels = channels
        self.kernel = kernel
        self.layers_per_stack = layers
        self.stacks = stacks
        blocks = []
        cin = N_FEATURES
        for s in range(stacks):
            for l in range(layers):
                blocks.append(Block(cin, channels, kernel, 2 ** l, dropout,
                                    dtype))
                cin = channels
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Linear(channels + N_CONTEXT, 1, dtype=dtype)

    def forward(self, x, ctx):
        for block in self.blocks:
            x = block(x)
        t_len = x.shape[2]
        ctx_series = ctx.unsqueeze(2).expand(-1, -1, t_len)
        phi = torch.cat([x, ctx_series], dim=1)          # (B, ch+2, T)
        return self.head(phi.transpose(1, 2)).squeeze(-1)  # (B, T)


def export_weights(model: PowerTcn, norm: Normalization,
                   sample_period_s: float, metadata: dict) -> TcnWeights:
    """Inference export; dropout is inactive by construction at eval."""
    blocks = []
    cin = N_FEATURES
    for block in model.blocks:
        convs = []
        for torch_conv, c_in in ((block.conv1, cin),
                                 (block.conv2, model.channels)):
            conv = torch_conv.conv
            convs.append(ConvLayer(
                kernel_size=conv.kernel_size[0],
                dilation=conv.dilation[0],
                in_channels=c_in,
                out_channels=conv.out_channels,
                weights=conv.weight.detach().cpu().double().numpy(),
                bias=conv.bias.detach().cpu().double().numpy()))
        if block.proj is not None:
            pw = block.proj.weight.detach().cpu().double().numpy()[:, :, 0]
            pb = block.proj.bias.detach().cpu().double().numpy()
        else:
            pw = pb = None
        blocks.append(ResidualBlock(convs[0], convs[1], pw, pb))
        cin = model.channels
    return TcnWeights(
        feature_means=np.asarray(norm.feature_means, dtype=float),
        feature_stds=np.asarray(norm.feature_stds, dtype=float),
        context_means=np.asarray(norm.context_means, dtype=float),
        context_stds=np.asarray(norm.context_stds, dtype=float),
        target_mean=norm.target_mean,
        target_std=norm.target_std,
        blocks=tuple(blocks),
        head_weights=model.head.weight.detach().cpu().double().numpy()[0],
        head_bias=float(model.head.bias.detach().cpu().double()),
        sample_period_s=sample_period_s,
        convention=FRAME_CONVENTION,
        metadata=dict(metadata),
    )


def rebuild_torch(weights: TcnWeights, dtype=torch.float64) -> PowerTcn:
    """Torch model loaded from a portable export (for boundary checks)."""
    stacks = sum(1 for b in weights.blocks if b.dilation == 1)
    layers = len(weights.blocks) // stacks
    model = PowerTcn(channels=weights.blocks[-1].out_channels,
                     kernel=weights.blocks[0].conv1.kernel_size,
                     layers=layers, stacks=stacks, dropout=0.0, dtype=dtype)
    with torch.no_grad():
        for tb, wb in zip(model.blocks, weights.blocks):
            tb.conv1.conv.weight.copy_(torch.as_tensor(wb.conv1.weights,
                                                       dtype=dtype))
            tb.conv1.conv.bias.copy_(torch.as_tensor(wb.conv1.bias,
                                                     dtype=dtype))
            tb.conv2.conv.weight.copy_(torch.as_tensor(wb.conv2.weights,
                                                       dtype=dtype))
            tb.conv2.conv.bias.copy_(torch.as_tensor(wb.conv2.bias,
                                                     dtype=dtype))
            if wb.projection_weights is not None:
                tb.proj.weight.copy_(torch.as_tensor(
                    wb.projection_weights[:, :, None], dtype=dtype))
                tb.proj.bias.copy_(torch.as_tensor(wb.projection_bias,
                                                   dtype=dtype))
        model.head.weight.copy_(torch.as_tensor(weights.head_weights[None, :],
                                                dtype=dtype))
        model.head.bias.copy_(torch.as_tensor([weights.head_bias],
                                              dtype=dtype))
    model.eval()
    return model


def torch_predict(model: PowerTcn, weights: TcnWeights, features: np.ndarray,
                  context: np.ndarray, dtype=torch.float64) -> np.ndarray:
    """De-normalized power series from the torch side, clamped like the
    core."""
    x = (features - weights.feature_means) / weights.feature_stds
    c = (context - weights.context_means) / weights.context_stds
    with torch.no_grad():
        y = model(torch.as_tensor(x.T[None, :, :], dtype=dtype),
                  torch.as_tensor(c[None, :], dtype=dtype))[0].numpy()
    power = weights.target_mean + weights.target_std * y
    return np.maximum(power, weights.clamp_floor_w)
