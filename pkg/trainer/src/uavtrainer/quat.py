"""Minimal quaternion helpers (x, y, z, w order, body to local frame)."""

from __future__ import annotations

import numpy as np


def yaw_pitch_from_quaternion(qx, qy, qz, qw):
    """ZYX Euler yaw and pitch (roll discarded), vectorized."""
    qx, qy, qz, qw = (np.asarray(a, dtype=float) for a in (qx, qy, qz, qw))
    yaw = np.arctan2(2.0 * (qw * qz + qx * qy),
                     1.0 - 2.0 * (qy * qy + qz * qz))
    sin_pitch = np.clip(2.0 * (qw * qy - qz * qx), -1.0, 1.0)
    pitch = np.arcsin(sin_pitch)
    return yaw, pitch


def quaternion_from_yaw_pitch(yaw, pitch):
    """Quaternion (x, y, z, w) for yaw about z then pitch about y."""
    yaw = np.asarray(yaw, dtype=float)
    pitch = np.asarray(pitch, dtype=float)
    cy, sy = np.cos(yaw / 2.0), np.sin(yaw / 2.0)
    cp, sp = np.cos(pitch / 2.0), np.sin(pitch / 2.0)
    return (-sy * sp, cy * sp, cp * sy, cy * cp)
