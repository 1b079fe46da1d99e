"""Quaternion and 3-vector algebra shared by every other module.

Conventions:
    - Quaternions are scalar-first numpy arrays [w, x, y, z], Hamilton product.
    - All functions broadcast over leading axes: a quaternion argument has
      shape (..., 4), a vector argument (..., 3). Single states use plain
      (4,) / (3,) arrays and flow through the exact same code path, so a
      batched call is bit-identical to looping over rows.
    - Orientation error is a rotation vector (axis * angle, rad) with the
      angle canonicalized to [0, pi]. It is logged per body axis; there is
      no standard axis convention for plotting orientation error per axis,
      so the rotation-vector components are the documented choice here.
    - All math is float64.
"""

from __future__ import annotations

import numpy as np

QUAT_NORM_TOL = 1e-6


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=np.float64)


def quat(w: float, x: float, y: float, z: float) -> np.ndarray:
    return np.array([w, x, y, z], dtype=np.float64)


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def vec_norm(v: np.ndarray) -> np.ndarray:
    """Euclidean norm over the last axis, fixed component order.

    Written as an explicit component sum so batched and scalar calls
    produce bit-identical results.
    """
    v = np.asarray(v, dtype=np.float64)
    return np.sqrt(v[..., 0] * v[..., 0] + v[..., 1] * v[..., 1] + v[..., 2] * v[..., 2])


def vec_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    # assembled by assignment instead of np.stack: this sits on the per-tick
    # hot path and stack's shape bookkeeping dominates for small arrays
    c0 = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    c1 = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    c2 = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    out = np.empty(np.shape(c0) + (3,), dtype=np.float64)
    out[..., 0] = c0
    out[..., 1] = c1
    out[..., 2] = c2
    return out


def _require_finite(x: np.ndarray, what: str) -> None:
    # method-call form: the np.all wrapper costs real time on the hot path
    if not np.isfinite(x).all():
        raise ValueError(f"non-finite {what}")


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    _require_finite(q, "quaternion")
    n = np.sqrt(
        q[..., 0] * q[..., 0]
        + q[..., 1] * q[..., 1]
        + q[..., 2] * q[..., 2]
        + q[..., 3] * q[..., 3]
    )
    zero = (n == 0.0) if n.ndim == 0 else np.any(n == 0.0)
    if zero:
        raise ValueError("cannot normalize zero quaternion")
    return q / n[..., None]


def quat_canonicalize(q: np.ndarray) -> np.ndarray:
    """Flip sign so w >= 0, removing the double-cover ambiguity."""
    q = np.asarray(q, dtype=np.float64)
    sign = np.where(q[..., 0] < 0.0, -1.0, 1.0)
    return q * sign[..., None]


def quat_conj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    out = np.empty_like(q)
    out[..., 0] = q[..., 0]
    out[..., 1] = -q[..., 1]
    out[..., 2] = -q[..., 2]
    out[..., 3] = -q[..., 3]
    return out


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b, renormalized."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _require_finite(a, "quaternion")
    _require_finite(b, "quaternion")
    w1, x1, y1, z1 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    w2, x2, y2, z2 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    # terms are paired so that a ⊗ conj(a) cancels exactly in floats,
    # making the relative rotation of identical attitudes a true zero
    c0 = w1 * w2 - ((x1 * x2 + y1 * y2) + z1 * z2)
    c1 = (w1 * x2 + x1 * w2) + (y1 * z2 - z1 * y2)
    c2 = (w1 * y2 + y1 * w2) + (z1 * x2 - x1 * z2)
    c3 = (w1 * z2 + z1 * w2) + (x1 * y2 - y1 * x2)
    out = np.empty(np.shape(c0) + (4,), dtype=np.float64)
    out[..., 0] = c0
    out[..., 1] = c1
    out[..., 2] = c2
    out[..., 3] = c3
    return quat_normalize(out)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Unit quaternion for a rotation of `angle` rad about `axis`."""
    axis = np.asarray(axis, dtype=np.float64)
    n = vec_norm(axis)
    if np.any(n == 0.0):
        raise ValueError("rotation axis must be nonzero")
    angle = np.asarray(angle, dtype=np.float64)
    half = 0.5 * angle
    u = axis / n[..., None]
    s = np.sin(half)
    return quat_normalize(
        np.stack(
            [np.cos(half), u[..., 0] * s, u[..., 1] * s, u[..., 2] * s],
            axis=-1,
        )
    )


def quat_from_rotvec(rv: np.ndarray) -> np.ndarray:
    """Exponential map: rotation vector (axis*angle) to unit quaternion.

    Safe at zero angle (returns identity); the small-angle branch uses the
    series sin(a/2)/a = 1/2 - a^2/48 + ...
    """
    rv = np.asarray(rv, dtype=np.float64)
    angle = vec_norm(rv)
    half = 0.5 * angle
    small = angle < 1e-8
    # np.where evaluates both branches: keep the denominator nonzero.
    safe = np.where(small, 1.0, angle)
    k = np.where(small, 0.5 - angle * angle / 48.0, np.sin(half) / safe)
    out = np.empty(np.shape(k) + (4,), dtype=np.float64)
    out[..., 0] = np.cos(half)
    out[..., 1] = rv[..., 0] * k
    out[..., 2] = rv[..., 1] * k
    out[..., 3] = rv[..., 2] * k
    return quat_normalize(out)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Log map: unit quaternion to rotation vector with angle in [0, pi]."""
    q = quat_canonicalize(np.asarray(q, dtype=np.float64))
    w = np.clip(q[..., 0], -1.0, 1.0)
    vn = np.sqrt(q[..., 1] * q[..., 1] + q[..., 2] * q[..., 2] + q[..., 3] * q[..., 3])
    angle = 2.0 * np.arctan2(vn, w)
    small = vn < 1e-12
    safe = np.where(small, 1.0, vn)
    # angle/vn -> 2/w as vn -> 0; with w >= 0 the limit is 2.
    k = np.where(small, 2.0, angle / safe)
    return q[..., 1:4] * k[..., None]


def quat_error(goal: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Rotation vector of goal ⊗ conj(current), angle in [0, pi].

    World-frame orientation error: rotating `current` by the returned
    vector (applied on the left) reaches `goal`.
    """
    return quat_to_rotvec(quat_mul(goal, quat_conj(current)))


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by quaternion q (body->world for an attitude quat).

    v + w*t + qv x t with t = 2*(qv x v), written out per component; the
    grouping (v + w*t) + cross is fixed so results stay bit-stable.
    """
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    ox = (vx + qw * tx) + (qy * tz - qz * ty)
    oy = (vy + qw * ty) + (qz * tx - qx * tz)
    oz = (vz + qw * tz) + (qx * ty - qy * tx)
    out = np.empty(np.shape(ox) + (3,), dtype=np.float64)
    out[..., 0] = ox
    out[..., 1] = oy
    out[..., 2] = oz
    return out


def quat_rotate_inv(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by conj(q) (world->body for an attitude quat).

    Same expansion as quat_rotate with the vector part negated in place of
    building the conjugate quaternion.
    """
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    qw = q[..., 0]
    qx, qy, qz = -q[..., 1], -q[..., 2], -q[..., 3]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    ox = (vx + qw * tx) + (qy * tz - qz * ty)
    oy = (vy + qw * ty) + (qz * tx - qx * tz)
    oz = (vz + qw * tz) + (qx * ty - qy * tx)
    out = np.empty(np.shape(ox) + (3,), dtype=np.float64)
    out[..., 0] = ox
    out[..., 1] = oy
    out[..., 2] = oz
    return out


def quat_integrate(q: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
    """Advance q by the exponential map of body rate omega over dt."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    omega = np.asarray(omega, dtype=np.float64)
    dq = quat_from_rotvec(omega * dt)
    # Body-frame rate composes on the right: q' = q ⊗ exp(omega*dt).
    return quat_mul(q, dq)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix (body->world) for a unit quaternion."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    row0 = np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1)
    row1 = np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1)
    row2 = np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)
