"""Ground-plane geometry shared by every module.

Conventions (fixed once, everything else derives from them):
  - y is up; the ground plane is spanned by x (lateral) and z (forward).
  - yaw is the rotation about y, measured from +z toward +x, stored in
    radians and normalized to (-pi, pi].
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_yaw(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return -((-float(angle) + math.pi) % TWO_PI - math.pi)


def normalize_yaw_array(angles: np.ndarray) -> np.ndarray:
    """Elementwise wrap into (-pi, pi]."""
    return -((-np.asarray(angles, dtype=np.float64) + math.pi) % TWO_PI - math.pi)


def rot_y(v: np.ndarray, yaw: float) -> np.ndarray:
    """Rotate a 3-vector (or (N,3) array) about the y axis.

    A positive yaw turns +z toward +x: rot_y([0,0,1], pi/2) == [1,0,0].
    """
    c, s = math.cos(yaw), math.sin(yaw)
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    out[..., 0] = v[..., 0] * c + v[..., 2] * s
    out[..., 1] = v[..., 1]
    out[..., 2] = -v[..., 0] * s + v[..., 2] * c
    return out


def plane_distance(a, b) -> float:
    """Euclidean distance on the ground plane (y ignored)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return math.hypot(a[0] - b[0], a[2] - b[2])


def circular_mean(angles, weights=None) -> float:
    """Weighted mean of angles on the circle, in (-pi, pi].

    Linear averaging breaks at the +-pi seam; atan2 of the weighted
    sin/cos sums does not.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if weights is None:
        weights = np.ones_like(angles)
    weights = np.asarray(weights, dtype=np.float64)
    s = float(np.dot(weights, np.sin(angles)))
    c = float(np.dot(weights, np.cos(angles)))
    return normalize_yaw(math.atan2(s, c))


def lerp_yaw(a: float, b: float, t: float) -> float:
    """Interpolate between two yaws along the shorter arc."""
    return normalize_yaw(a + normalize_yaw(b - a) * t)


def smoothstep(t) -> np.ndarray | float:
    """C1 ease 3t^2 - 2t^3, clamped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def raised_cosine(t) -> np.ndarray | float:
    """C1 ease (1 - cos(pi t)) / 2, clamped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * t))
