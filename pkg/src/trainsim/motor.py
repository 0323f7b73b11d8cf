"""Rigid-transform algebra on motors (dual quaternions).

A motor packs a rotation and a translation into 8 scalars: a unit ``real``
quaternion plus a ``dual`` quaternion that encodes translation as
``dual = 0.5 * t_quat * real``.  Motors are the unit of transform transport
everywhere in the engine: the sync codec ships them, interpolation buffers
blend them, the recorder stores them.

Quaternions are (w, x, y, z) throughout.  Internals are float64; the wire
layer quantizes to float32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInterpolationError, InvalidInputError

UNIT_TOL = 1e-6

# Blended real part shorter than this cannot be renormalized (antipodal inputs).
DEGENERATE_NORM = 1e-9


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b of (w, x, y, z) quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    w, x, y, z = q
    u = np.array([x, y, z])
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Shortest-path spherical interpolation between unit quaternions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        out = (1.0 - t) * a + t * b
        return out / np.linalg.norm(out)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - t) * theta) * a + np.sin(t * theta) * b) / s


def quat_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle in degrees between two unit quaternions (double cover aware)."""
    dot = abs(float(np.dot(a, b)))
    return float(np.degrees(2.0 * np.arccos(np.clip(dot, -1.0, 1.0))))


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle_rad
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass
class Pose:
    """Position + unit-quaternion orientation, the interchange form for scene objects."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))


@dataclass
class Motor:
    """Dual-quaternion rigid transform.

    Invariants: ``|real| = 1`` and ``dot(real, dual) = 0``, both within 1e-6.
    """

    real: np.ndarray
    dual: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.real = np.asarray(self.real, dtype=float)
        self.dual = np.asarray(self.dual, dtype=float)

    @classmethod
    def identity(cls) -> "Motor":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(4))

    def coefficients(self) -> np.ndarray:
        """The 8 scalars in wire order (real then dual)."""
        return np.concatenate([self.real, self.dual])

    @classmethod
    def from_coefficients(cls, coeffs) -> "Motor":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(coeffs[:4].copy(), coeffs[4:8].copy())

    def is_valid(self, tol: float = UNIT_TOL) -> bool:
        return (
            abs(float(np.linalg.norm(self.real)) - 1.0) <= tol
            and abs(float(np.dot(self.real, self.dual))) <= tol
        )

    def copy(self) -> "Motor":
        return Motor(self.real.copy(), self.dual.copy())


def motor_from_pose(p: Pose) -> Motor:
    """Lift a pose onto the motor manifold."""
    norm = float(np.linalg.norm(p.orientation))
    if abs(norm - 1.0) > 1e-4:
        raise InvalidInputError(f"orientation norm {norm:.6f} is not unit")
    real = p.orientation / norm
    t_quat = np.concatenate([[0.0], p.position])
    dual = 0.5 * quat_multiply(t_quat, real)
    return Motor(real, dual)


def motor_to_pose(m: Motor) -> Pose:
    """Exact inverse of motor_from_pose up to quaternion sign."""
    t_quat = 2.0 * quat_multiply(m.dual, quat_conjugate(m.real))
    return Pose(t_quat[1:4].copy(), m.real.copy())


def motor_translation(m: Motor) -> np.ndarray:
    return 2.0 * quat_multiply(m.dual, quat_conjugate(m.real))[1:4]


def motor_interpolate(a: Motor, b: Motor, t: float) -> Motor:
    """Blend two motors: coefficient-wise linear, then renormalize onto the manifold.

    The second operand is sign-flipped first when dot(a.real, b.real) < 0 so the
    blend takes the short arc; an exact tie keeps b's sign.  Constant cost, no
    motor logarithms.
    """
    b_real, b_dual = b.real, b.dual
    if float(np.dot(a.real, b.real)) < 0.0:
        b_real = -b_real
        b_dual = -b_dual
    real = (1.0 - t) * a.real + t * b_real
    dual = (1.0 - t) * a.dual + t * b_dual
    norm = float(np.linalg.norm(real))
    if norm < DEGENERATE_NORM:
        raise DegenerateInterpolationError(
            "blended rotation is antipodal-degenerate; cannot renormalize"
        )
    real = real / norm
    dual = dual / norm
    dual = dual - float(np.dot(dual, real)) * real
    return Motor(real, dual)


def motor_apply(m: Motor, point) -> np.ndarray:
    """Rotate-then-translate a point by the motor's pose form."""
    point = np.asarray(point, dtype=float)
    return quat_rotate(m.real, point) + motor_translation(m)


def motor_equal(a: Motor, b: Motor, tol: float = 1e-9) -> bool:
    """Coefficient equality up to the quaternion double cover."""
    ca, cb = a.coefficients(), b.coefficients()
    return bool(np.all(np.abs(ca - cb) <= tol) or np.all(np.abs(ca + cb) <= tol))
