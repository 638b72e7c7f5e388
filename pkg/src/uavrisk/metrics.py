"""Power-model evaluation against recorded flights.

Two scores per flight: mean absolute percentage error of per-timestep
power, and an adjusted relative energy error that first splits the
flight into yaw-delimited sections and averages per-section energy
errors, so that over- and under-prediction in different portions of a
flight cannot cancel.

Yaw segmentation rule: a new section starts where the yaw deviates
from the running section mean by more than `threshold_deg` and keeps
deviating for at least `dwell_s` seconds. Frames inside an ongoing
deviation streak do not feed the running mean until the streak either
dies (they are flushed into the section) or reaches the dwell and
becomes the start of the next section.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ComputationError, InputError
from .flight import ProcessedFlight, wrap_angle

DEFAULT_YAW_THRESHOLD_DEG = 15.0
DEFAULT_DWELL_S = 1.0


@dataclass(frozen=True)
class FlightEvaluation:
    mape_percent: float
    re_percent: float
    section_count: int
    section_energies: tuple[tuple[float, float], ...]   # (true J, predicted J)

    def __post_init__(self):
        if self.section_count != len(self.section_energies):
            raise InputError("section_count must match section_energies")


def mape(true_power: Sequence[float], predicted_power: Sequence[float]) -> float:
    """Mean absolute percentage error of per-timestep power, in percent."""
    y = np.asarray(true_power, dtype=float)
    yhat = np.asarray(predicted_power, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise InputError("power series must be 1D and equal length")
    if y.size == 0:
        raise InputError("power series are empty")
    if np.any(y <= 0.0):
        raise InputError("true power must be positive everywhere")
    return float(np.mean(np.abs(y - yhat) / y)) * 100.0


def segment_by_yaw(flight: ProcessedFlight,
                   threshold_deg: float = DEFAULT_YAW_THRESHOLD_DEG,
                   dwell_s: float = DEFAULT_DWELL_S) -> list[tuple[int, int]]:
    """Split a flight into yaw-stable sections.

    Returns half-open index ranges covering every frame exactly once.
    """
    yaws = flight.yaw_series
    n = len(yaws)
    if n == 0:
        raise InputError("flight has no frames")
    thr = math.radians(threshold_deg)
    dwell = max(1, math.ceil(dwell_s / flight.sample_period))

    sections: list[tuple[int, int]] = []
    start = 0
    # circular running mean of the committed frames of the open section
    sum_cos = math.cos(yaws[0])
    sum_sin = math.sin(yaws[0])
    streak_start: int | None = None

    for i in range(1, n):
        mean = math.atan2(sum_sin, sum_cos)
        if abs(wrap_angle(yaws[i] - mean)) > thr:
            if streak_start is None:
                streak_start = i
            if i - streak_start + 1 >= dwell:
                sections.append((start, streak_start))
                start = streak_start
                sum_cos = sum_sin = 0.0
                for j in range(streak_start, i + 1):
                    sum_cos += math.cos(yaws[j])
                    sum_sin += math.sin(yaws[j])
                streak_start = None
        else:
            if streak_start is not None:
                for j in range(streak_start, i):
                    sum_cos += math.cos(yaws[j])
                    sum_sin += math.sin(yaws[j])
                streak_start = None
            sum_cos += math.cos(yaws[i])
            sum_sin += math.sin(yaws[i])
    sections.append((start, n))
    return sections


def adjusted_re(flight: ProcessedFlight, predicted_power: Sequence[float],
                threshold_deg: float = DEFAULT_YAW_THRESHOLD_DEG,
                dwell_s: float = DEFAULT_DWELL_S) -> FlightEvaluation:
    """Per-section relative energy error averaged over sections."""
    y = np.asarray(flight.measured_power, dtype=float)
    yhat = np.asarray(predicted_power, dtype=float)
    if y.shape != yhat.shape:
        raise InputError("predicted power length must match the flight")
    sections = segment_by_yaw(flight, threshold_deg, dwell_s)
    dt = flight.sample_period
    energies = []
    errors = []
    for a, b in sections:
        e_true = float(np.sum(y[a:b])) * dt
        e_pred = float(np.sum(yhat[a:b])) * dt
        if e_true <= 0.0:
            raise ComputationError("internal: zero-energy section")
        energies.append((e_true, e_pred))
        errors.append(abs(e_true - e_pred) / e_true)
    return FlightEvaluation(
        mape_percent=mape(y, yhat),
        re_percent=float(np.mean(errors)) * 100.0,
        section_count=len(sections),
        section_energies=tuple(energies),
    )
