"""
Forward kinematics and link/obstacle collision tests for serial arms.

Planar arms rotate every joint about z; spatial arms alternate z and y joint
axes (z, y, z, y, ...). Each link extends along the local x axis of its
joint frame, so the all-zero pose stretches the arm along +x.
"""

import numpy as np

from errors import InputError


def _rotation_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rotation_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def joint_axis(index: int) -> str:
    return "z" if index % 2 == 0 else "y"


def forward_kinematics(joint_angles, arm) -> np.ndarray:
    """Return the K+1 joint positions (base first, end effector last).

    The result has shape (K+1, 2) for planar arms and (K+1, 3) otherwise.
    """
    q = np.asarray(joint_angles, dtype=np.float64)
    lengths = np.asarray(arm.link_lengths, dtype=np.float64)
    if q.shape != lengths.shape:
        raise InputError(f"expected {lengths.size} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InputError(f"joint angles must be finite, got {q.tolist()}")

    if arm.planar:
        heading = np.cumsum(q)
        steps = lengths[:, None] * np.stack([np.cos(heading), np.sin(heading)], axis=1)
        return np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])

    points = np.zeros((lengths.size + 1, 3))
    frame = np.eye(3)
    for i, (angle, length) in enumerate(zip(q, lengths)):
        frame = frame @ (_rotation_z(angle) if joint_axis(i) == "z" else _rotation_y(angle))
        points[i + 1] = points[i] + frame[:, 0] * length
    return points


def segment_distances(joint_points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Distance from every link segment to every center, shape (links, centers)."""
    a = joint_points[:-1][:, None, :]
    b = joint_points[1:][:, None, :]
    c = centers[None, :, :]
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.where(denom > 0, np.sum((c - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(closest - c, axis=-1)


def collision_check(joint_points, obstacles) -> bool:
    """True iff any link segment comes within an obstacle's radius of its center."""
    points = np.asarray(joint_points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise InputError("collision_check needs at least two joint points")
    if not obstacles:
        return False
    centers = np.array([o.center for o in obstacles], dtype=np.float64)
    radii = np.array([o.radius for o in obstacles], dtype=np.float64)
    return bool(np.any(segment_distances(points, centers) < radii[None, :]))


def max_end_effector_speed(arm) -> float:
    """Upper bound on end-effector displacement per step."""
    lengths = np.asarray(arm.link_lengths, dtype=np.float64)
    # Joint i moves everything distal to it; lever arm <= remaining link length.
    lever = np.cumsum(lengths[::-1])[::-1]
    return float(np.sum(lever) * arm.max_joint_velocity)
