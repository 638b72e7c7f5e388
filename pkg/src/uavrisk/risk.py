"""Energy-to-risk transform and tail statistics.

The risk profile maps consumed energy e to a bounded score

    r = exp(gamma / max(b - e, lambda_floor)) - 1

which grows exponentially as consumption approaches the usable battery
capacity b and saturates at exp(gamma/lambda_floor) - 1 once the
remaining reserve falls below lambda_floor. gamma and lambda_floor
carry the same energy units as b.

VaR is the lower empirical quantile (sorted sample at index
ceil(nu * N) - 1, no interpolation). CVaR uses the discrete
Rockafellar-Uryasev estimator

    CVaR = VaR + sum(max(r_i - VaR, 0)) / ((1 - nu) * N)

computed from the raw samples; the histogram exists for reporting
only, because binning would bias a tail statistic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class RiskProfile:
    gamma: float             # same units as battery_capacity
    lambda_floor: float      # reserve floor, J
    battery_capacity: float  # usable capacity, J

    def __post_init__(self):
        if not (self.gamma > 0.0 and self.lambda_floor > 0.0
                and self.battery_capacity > 0.0):
            raise InputError("gamma, lambda_floor and battery_capacity "
                             "must be positive")

    @property
    def cap(self) -> float:
        """Upper bound of the risk score (same exp kernel as transform,
        so capped samples compare exactly equal to it)."""
        return float(np.exp(self.gamma / self.lambda_floor) - 1.0)

    def transform(self, energy):
        e = np.asarray(energy, dtype=float)
        reserve = np.maximum(self.battery_capacity - e, self.lambda_floor)
        return np.exp(self.gamma / reserve) - 1.0


@dataclass(frozen=True)
class RiskSamples:
    risks: tuple[float, ...]
    profile: RiskProfile
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.risks, dtype=float)
        if arr.size == 0:
            raise InputError("need at least one risk sample")
        if np.any(arr < 0.0) or np.any(arr > self.profile.cap * (1 + 1e-12)):
            raise InputError("risk values must lie in [0, cap]")

    def __len__(self) -> int:
        return len(self.risks)


def risk_transform(energies, profile: RiskProfile) -> RiskSamples:
    """Map energy samples to risk space (order preserving)."""
    values = np.asarray(getattr(energies, "energies", energies), dtype=float)
    metadata = dict(getattr(energies, "metadata", {}) or {})
    metadata["risk_profile"] = {"gamma": profile.gamma,
                                "lambda_floor": profile.lambda_floor,
                                "battery_capacity": profile.battery_capacity,
                                "cap": profile.cap}
    return RiskSamples(risks=tuple(profile.transform(values)),
                       profile=profile, metadata=metadata)


def _values(risks) -> np.ndarray:
    values = np.asarray(getattr(risks, "risks", risks), dtype=float)
    if values.size == 0:
        raise InputError("need at least one sample")
    return values


def _check_nu(nu: float) -> None:
    if not (0.0 < nu < 1.0):
        raise InputError(f"nu must lie strictly in (0, 1), got {nu}")


def var(risks, nu: float) -> float:
    """Empirical value-at-risk: lower nu-quantile, no interpolation."""
    _check_nu(nu)
    values = np.sort(_values(risks))
    idx = min(max(math.ceil(nu * values.size) - 1, 0), values.size - 1)
    return float(values[idx])


def cvar(risks, nu: float) -> float:
    """Discrete Rockafellar-Uryasev tail expectation above VaR."""
    _check_nu(nu)
    values = _values(risks)
    v = var(values, nu)
    excess = np.maximum(values - v, 0.0)
    return v + float(np.sum(excess)) / ((1.0 - nu) * values.size)


def risk_histogram(risks, bins: int) -> dict:
    """Equal-width histogram over [0, cap].

    Returns both the raw scaled counts (bins/N * count, a density only
    for unit-width bins) and the width-normalized density whose
    integral over [0, cap] is exactly 1.
    """
    if not hasattr(risks, "profile"):
        raise InputError("risk_histogram needs RiskSamples (profile required)")
    if bins < 2:
        raise InputError("bins must be >= 2")
    values = _values(risks)
    cap = risks.profile.cap
    edges = np.linspace(0.0, cap, bins + 1)
    width = cap / bins
    idx = np.minimum(np.searchsorted(edges, values, side="right") - 1,
                     bins - 1)
    idx = np.maximum(idx, 0)
    counts = np.bincount(idx, minlength=bins)
    raw_scaled = counts * (bins / values.size)
    density = counts / (values.size * width)
    return {"bin_edges": edges, "counts": counts, "raw_scaled": raw_scaled,
            "density": density, "bin_width": width}


def write_risk_report(risks: RiskSamples, nu: float, path,
                      extra: dict | None = None) -> None:
    """Dump mean/VaR/CVaR plus the histogram and full provenance."""
    values = _values(risks)
    hist = risk_histogram(risks, max(int(risks.metadata.get(
        "histogram_bins", 30)), 2))
    report = {
        "nu": nu,
        "mean_risk": float(values.mean()),
        "var": var(risks, nu),
        "cvar": cvar(risks, nu),
        "cap": risks.profile.cap,
        "n_samples": int(values.size),
        "profile": {"gamma": risks.profile.gamma,
                    "lambda_floor": risks.profile.lambda_floor,
                    "battery_capacity": risks.profile.battery_capacity},
        "quantile_convention": "lower empirical quantile, ceil(nu*N)-1",
        "histogram": {
            "bin_edges": hist["bin_edges"].tolist(),
            "counts": hist["counts"].tolist(),
            "raw_scaled": hist["raw_scaled"].tolist(),
            "density": hist["density"].tolist(),
        },
        "provenance": risks.metadata,
    }
    if extra:
        report.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
