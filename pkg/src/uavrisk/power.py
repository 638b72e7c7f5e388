"""Instantaneous power prediction from feature windows.

Two interchangeable predictors:
    - a temporal convolutional network evaluated from portable JSON
      weight exports (inference only, plain numpy)
    - a least-squares polynomial baseline over a single frame

The TCN is a chain of residual blocks, each holding two causal dilated
convolutions (ReLU after each, residual add, final ReLU); the channel
vector at the final timestep is concatenated with the normalized
invariant context and mapped to power by a dense head. Output at
timestep t never depends on inputs after t, so evaluating a whole
sequence left-padded with zeros (in normalized space) is identical to
evaluating a sliding window per step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import FitError, InputError, LoadError
from .flight import (CONTEXT_ORDER, FEATURE_ORDER, FRAME_CONVENTION,
                     ContextFeatures, FeatureFrame, ProcessedFlight)

WEIGHT_SCHEMA_VERSION = 1
DEFAULT_CLAMP_FLOOR_W = 1.0

ANALYTICAL_BASIS = ("1", "v", "v^2", "v_z", "v_z^2", "m", "alpha")


@dataclass(frozen=True)
class ConvLayer:
    """One causal dilated convolution: weights (out, in, kernel)."""

    kernel_size: int
    dilation: int
    in_channels: int
    out_channels: int
    weights: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class ResidualBlock:
    """Two convolutions sharing kernel/dilation plus optional 1x1 projection."""

    conv1: ConvLayer
    conv2: ConvLayer
    projection_weights: np.ndarray | None = None   # (out, in)
    projection_bias: np.ndarray | None = None

    @property
    def in_channels(self) -> int:
        return self.conv1.in_channels

    @property
    def out_channels(self) -> int:
        return self.conv2.out_channels

    @property
    def dilation(self) -> int:
        return self.conv1.dilation


@dataclass(frozen=True)
class TcnWeights:
    """Portable TCN parameterization plus normalization statistics."""

    feature_means: np.ndarray   # (5,)
    feature_stds: np.ndarray    # (5,) all > 0
    context_means: np.ndarray   # (2,)
    context_stds: np.ndarray    # (2,) all > 0
    target_mean: float
    target_std: float
    blocks: tuple[ResidualBlock, ...]
    head_weights: np.ndarray    # (channels + 2,)
    head_bias: float
    sample_period_s: float = 0.1
    clamp_floor_w: float = DEFAULT_CLAMP_FLOOR_W
    convention: str = FRAME_CONVENTION
    metadata: dict = field(default_factory=dict)

    @property
    def receptive_field(self) -> int:
        rf = 1
        for b in self.blocks:
            for conv in (b.conv1, b.conv2):
                rf += (conv.kernel_size - 1) * conv.dilation
        return rf


def _check_dilation_schedule(blocks: Sequence[ResidualBlock]) -> str | None:
    """Dilations must follow 2^l within each stack, stacks restarting at 1."""
    expected = 1
    for i, b in enumerate(blocks):
        if b.conv1.dilation != b.conv2.dilation:
            return f"blocks[{i}]: conv dilations differ"
        if b.conv1.kernel_size != b.conv2.kernel_size:
            return f"blocks[{i}]: conv kernel sizes differ"
        d = b.dilation
        if d != expected:
            if d == 1 and i > 0:
                expected = 1   # new stack restarts the schedule
            else:
                return (f"blocks[{i}]: dilation {d}, expected {expected} "
                        f"(powers of two within a stack)")
        expected = 2 * d
    return None


def validate_weights(w: TcnWeights) -> None:
    """Raise InputError on any violated structural invariant."""
    for name, arr, size in (("feature_means", w.feature_means, 5),
                            ("feature_stds", w.feature_stds, 5),
                            ("context_means", w.context_means, 2),
                            ("context_stds", w.context_stds, 2)):
        if arr.shape != (size,):
            raise InputError(f"{name} must have {size} entries")
        if not np.all(np.isfinite(arr)):
            raise InputError(f"{name} must be finite")
    if np.any(w.feature_stds <= 0.0):
        raise InputError("feature_stds must be positive")
    if np.any(w.context_stds <= 0.0):
        raise InputError("context_stds must be positive")
    if not (w.target_std > 0.0 and math.isfinite(w.target_mean)):
        raise InputError("target_std must be positive")
    if not w.blocks:
        raise InputError("at least one residual block required")
    prev = 5
    for i, b in enumerate(w.blocks):
        for tag, conv in (("conv1", b.conv1), ("conv2", b.conv2)):
            expect_in = prev if tag == "conv1" else b.conv1.out_channels
            if conv.in_channels != expect_in:
                raise InputError(f"blocks[{i}].{tag}: in_channels "
                                 f"{conv.in_channels}, expected {expect_in}")
            shape = (conv.out_channels, conv.in_channels, conv.kernel_size)
            if conv.weights.shape != shape:
                raise InputError(f"blocks[{i}].{tag}.weights: shape "
                                 f"{conv.weights.shape}, expected {shape}")
            if conv.bias.shape != (conv.out_channels,):
                raise InputError(f"blocks[{i}].{tag}.bias: wrong length")
            if not (np.all(np.isfinite(conv.weights))
                    and np.all(np.isfinite(conv.bias))):
                raise InputError(f"blocks[{i}].{tag}: non-finite value")
        needs_proj = b.in_channels != b.out_channels
        if needs_proj and b.projection_weights is None:
            raise InputError(f"blocks[{i}]: residual projection required when "
                             f"in_channels != out_channels")
        if not needs_proj and b.projection_weights is not None:
            raise InputError(f"blocks[{i}]: residual projection only allowed "
                             f"when in_channels != out_channels")
        if b.projection_weights is not None:
            if b.projection_weights.shape != (b.out_channels, b.in_channels):
                raise InputError(f"blocks[{i}].residual_projection.weights: "
                                 f"wrong shape")
            if (b.projection_bias is None
                    or b.projection_bias.shape != (b.out_channels,)):
                raise InputError(f"blocks[{i}].residual_projection.bias: "
                                 f"wrong length")
            if not (np.all(np.isfinite(b.projection_weights))
                    and np.all(np.isfinite(b.projection_bias))):
                raise InputError(f"blocks[{i}].residual_projection: "
                                 f"non-finite value")
        prev = b.out_channels
    msg = _check_dilation_schedule(w.blocks)
    if msg:
        raise InputError(msg)
    if w.head_weights.shape != (w.blocks[-1].out_channels + 2,):
        raise InputError("head.weights must have channels + 2 entries")
    if not (np.all(np.isfinite(w.head_weights))
            and math.isfinite(w.head_bias)):
        raise InputError("head: non-finite value")
    if w.sample_period_s <= 0.0:
        raise InputError("sample_period_s must be positive")


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def _causal_conv(x: np.ndarray, conv: ConvLayer) -> np.ndarray:
    """Causal dilated convolution over x of shape (in, T) -> (out, T).

    Output at t sums taps at t - (kernel-1-j)*dilation; indices before
    the sequence start read as zero.
    """
    t_len = x.shape[1]
    y = np.repeat(conv.bias[:, None], t_len, axis=1)
    for j in range(conv.kernel_size):
        shift = (conv.kernel_size - 1 - j) * conv.dilation
        # per-tap matrices are strided views; BLAS needs them contiguous
        w = np.ascontiguousarray(conv.weights[:, :, j])
        if shift == 0:
            y += w @ x
        elif shift < t_len:
            y[:, shift:] += w @ x[:, :t_len - shift]
    return y


def _block_forward(x: np.ndarray, block: ResidualBlock) -> np.ndarray:
    h = np.maximum(_causal_conv(x, block.conv1), 0.0)
    h = np.maximum(_causal_conv(h, block.conv2), 0.0)
    if block.projection_weights is not None:
        res = block.projection_weights @ x + block.projection_bias[:, None]
    else:
        res = x
    return np.maximum(h + res, 0.0)


def predict_power_series(weights: TcnWeights, features: np.ndarray,
                         context: ContextFeatures) -> np.ndarray:
    """Predict power for every timestep of a (T, 5) feature matrix.

    Equivalent to calling tcn_forward on the trailing window ending at
    each timestep (missing history reads as zero in normalized space).
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != 5:
        raise InputError("feature matrix must be (T, 5)")
    if features.shape[0] == 0:
        raise InputError("empty feature window")
    x = ((features - weights.feature_means) / weights.feature_stds).T
    for block in weights.blocks:
        x = _block_forward(x, block)
    ctx = (context.as_array() - weights.context_means) / weights.context_stds
    n_ch = x.shape[0]
    y = (weights.head_weights[:n_ch] @ x
         + weights.head_weights[n_ch:] @ ctx + weights.head_bias)
    power = weights.target_mean + weights.target_std * y
    return np.maximum(power, weights.clamp_floor_w)


def tcn_forward(weights: TcnWeights, window: Sequence[FeatureFrame],
                context: ContextFeatures) -> float:
    """Predicted power (W) at the final timestep of a feature window.

    Windows longer than the receptive field are truncated to the last
    receptive_field frames; shorter windows are implicitly left-padded
    with feature means (zeros after normalization).
    """
    if len(window) == 0:
        raise InputError("empty feature window")
    tau = weights.receptive_field
    window = window[-tau:]
    feats = np.array([f.as_array() for f in window])
    return float(predict_power_series(weights, feats, context)[-1])


# ---------------------------------------------------------------------------
# Weight file I/O (self-describing JSON, schema version 1)
# ---------------------------------------------------------------------------

def _tensor(obj: dict, key: str, shape: tuple[int, ...], where: str) -> np.ndarray:
    if key not in obj:
        raise LoadError(f"{where}.{key}: missing")
    arr = np.asarray(obj[key], dtype=float).reshape(-1)
    want = int(np.prod(shape))
    if arr.size != want:
        raise LoadError(f"{where}.{key}: {arr.size} values, expected {want} "
                        f"for shape {shape}")
    if not np.all(np.isfinite(arr)):
        raise LoadError(f"{where}.{key}: non-finite value")
    return arr.reshape(shape)


def load_weights(path) -> TcnWeights:
    """Load and fully validate a portable TCN weight export."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise LoadError(f"{path}: JSON parse error at byte {e.pos}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise LoadError(f"{path}: top level must be an object")
    version = doc.get("schema_version")
    if version != WEIGHT_SCHEMA_VERSION:
        raise LoadError(f"{path}: schema_version {version!r} unsupported "
                        f"(expected {WEIGHT_SCHEMA_VERSION})")
    try:
        norm = doc["normalization"]
        blocks_doc = doc["blocks"]
        head_doc = doc["head"]
    except KeyError as e:
        raise LoadError(f"{path}: missing section {e.args[0]!r}") from e

    feature_stds = _tensor(norm, "feature_stds", (5,), "normalization")
    context_stds = _tensor(norm, "context_stds", (2,), "normalization")
    if np.any(feature_stds <= 0.0):
        raise LoadError("feature_stds must be positive")
    if np.any(context_stds <= 0.0):
        raise LoadError("context_stds must be positive")

    blocks = []
    prev = 5
    for i, b in enumerate(blocks_doc):
        where = f"blocks[{i}]"
        try:
            k = int(b["kernel_size"])
            d = int(b["dilation"])
            cin = int(b["in_channels"])
            cout = int(b["out_channels"])
        except (KeyError, TypeError, ValueError) as e:
            raise LoadError(f"{where}: bad or missing shape field ({e})") from e
        if cin != prev:
            raise LoadError(f"{where}: in_channels {cin}, expected {prev}")
        convs = []
        for tag in ("conv1", "conv2"):
            cdoc = b.get(tag)
            if cdoc is None:
                raise LoadError(f"{where}.{tag}: missing")
            c_in = cin if tag == "conv1" else cout
            convs.append(ConvLayer(
                kernel_size=k, dilation=d, in_channels=c_in, out_channels=cout,
                weights=_tensor(cdoc, "weights", (cout, c_in, k), f"{where}.{tag}"),
                bias=_tensor(cdoc, "bias", (cout,), f"{where}.{tag}"),
            ))
        proj = b.get("residual_projection")
        pw = pb = None
        if proj is not None:
            pw = _tensor(proj, "weights", (cout, cin), f"{where}.residual_projection")
            pb = _tensor(proj, "bias", (cout,), f"{where}.residual_projection")
        blocks.append(ResidualBlock(convs[0], convs[1], pw, pb))
        prev = cout

    weights = TcnWeights(
        feature_means=_tensor(norm, "feature_means", (5,), "normalization"),
        feature_stds=feature_stds,
        context_means=_tensor(norm, "context_means", (2,), "normalization"),
        context_stds=context_stds,
        target_mean=float(norm["target_mean"]),
        target_std=float(norm["target_std"]),
        blocks=tuple(blocks),
        head_weights=_tensor(head_doc, "weights", (prev + 2,), "head"),
        head_bias=float(head_doc["bias"]),
        sample_period_s=float(doc.get("sample_period_s", 0.1)),
        clamp_floor_w=float(doc.get("clamp_floor_w", DEFAULT_CLAMP_FLOOR_W)),
        convention=str(doc.get("convention", FRAME_CONVENTION)),
        metadata=dict(doc.get("metadata", {})),
    )
    try:
        validate_weights(weights)
    except InputError as e:
        raise LoadError(f"{path}: {e}") from e
    if weights.convention != FRAME_CONVENTION:
        raise LoadError(f"{path}: convention {weights.convention!r} does not "
                        f"match this build ({FRAME_CONVENTION!r})")
    return weights


def save_weights(weights: TcnWeights, path) -> None:
    validate_weights(weights)
    doc = {
        "schema_version": WEIGHT_SCHEMA_VERSION,
        "convention": weights.convention,
        "sample_period_s": weights.sample_period_s,
        "clamp_floor_w": weights.clamp_floor_w,
        "feature_order": list(FEATURE_ORDER),
        "context_order": list(CONTEXT_ORDER),
        "normalization": {
            "feature_means": weights.feature_means.tolist(),
            "feature_stds": weights.feature_stds.tolist(),
            "context_means": weights.context_means.tolist(),
            "context_stds": weights.context_stds.tolist(),
            "target_mean": weights.target_mean,
            "target_std": weights.target_std,
        },
        "blocks": [
            {
                "kernel_size": b.conv1.kernel_size,
                "dilation": b.conv1.dilation,
                "in_channels": b.in_channels,
                "out_channels": b.out_channels,
                "conv1": {"weights": b.conv1.weights.reshape(-1).tolist(),
                          "bias": b.conv1.bias.tolist()},
                "conv2": {"weights": b.conv2.weights.reshape(-1).tolist(),
                          "bias": b.conv2.bias.tolist()},
                "residual_projection": (
                    None if b.projection_weights is None else
                    {"weights": b.projection_weights.reshape(-1).tolist(),
                     "bias": b.projection_bias.tolist()}),
            }
            for b in weights.blocks
        ],
        "head": {"weights": weights.head_weights.tolist(),
                 "bias": weights.head_bias},
        "metadata": weights.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Analytical baseline: least-squares fit over [1, v, v^2, v_z, v_z^2, m, alpha]
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticalCoefficients:
    """Regression coefficients for the polynomial power baseline."""

    beta: np.ndarray   # (7,)
    clamp_floor_w: float = DEFAULT_CLAMP_FLOOR_W

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (7,):
            raise InputError("beta must have 7 entries "
                             f"(basis {ANALYTICAL_BASIS})")
        if not np.all(np.isfinite(beta)):
            raise InputError("beta must be finite")
        object.__setattr__(self, "beta", beta)


def _analytical_basis(v: np.ndarray, vz: np.ndarray, m: float,
                      alpha: np.ndarray) -> np.ndarray:
    ones = np.ones_like(v)
    return np.column_stack([ones, v, v * v, vz, vz * vz, m * ones, alpha])


def analytical_predict(coeffs: AnalyticalCoefficients, frame: FeatureFrame,
                       context: ContextFeatures) -> float:
    basis = np.array([1.0, frame.airspeed, frame.airspeed ** 2,
                      frame.vertical_speed, frame.vertical_speed ** 2,
                      context.payload_mass, frame.angle_of_attack])
    return max(float(coeffs.beta @ basis), coeffs.clamp_floor_w)


def analytical_predict_series(coeffs: AnalyticalCoefficients,
                              features: np.ndarray,
                              context: ContextFeatures) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    basis = _analytical_basis(features[:, 0], features[:, 3],
                              context.payload_mass, features[:, 4])
    return np.maximum(basis @ coeffs.beta, coeffs.clamp_floor_w)


def fit_analytical(flights: Sequence[ProcessedFlight]) -> AnalyticalCoefficients:
    """Ordinary least squares over all frames of all flights."""
    if len(flights) == 0:
        raise InputError("need at least one flight")
    rows, targets = [], []
    for fl in flights:
        feats = fl.feature_matrix()
        rows.append(_analytical_basis(feats[:, 0], feats[:, 3],
                                      fl.context.payload_mass, feats[:, 4]))
        targets.append(np.asarray(fl.measured_power, dtype=float))
    a = np.vstack(rows)
    y = np.concatenate(targets)
    if a.shape[0] < 8:
        raise InputError("need at least 8 frames across all flights")
    if np.linalg.matrix_rank(a) < 7:
        raise FitError("basis matrix is rank-deficient; supply flights with "
                       "more varied speeds, climbs, payloads and attitudes")
    beta, *_ = np.linalg.lstsq(a, y, rcond=None)
    return AnalyticalCoefficients(beta=beta)


def save_coefficients(coeffs: AnalyticalCoefficients, path) -> None:
    doc = {"schema_version": 1, "basis": list(ANALYTICAL_BASIS),
           "beta": coeffs.beta.tolist(), "clamp_floor_w": coeffs.clamp_floor_w}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_coefficients(path) -> AnalyticalCoefficients:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise LoadError(f"{path}: JSON parse error at byte {e.pos}: {e.msg}") from e
    try:
        return AnalyticalCoefficients(
            beta=np.asarray(doc["beta"], dtype=float),
            clamp_floor_w=float(doc.get("clamp_floor_w", DEFAULT_CLAMP_FLOOR_W)))
    except (KeyError, InputError) as e:
        raise LoadError(f"{path}: {e}") from e
