"""3D primitives: vectors, proper rotations, conformal similarities, circles, solid tori.

All types are immutable values and all operations are pure, so everything here
is safe to call from parallel workers. Point arguments are numpy arrays of
shape (3,) and most operations broadcast over leading axes, i.e. an (n, 3)
array of points is transformed in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NoUniqueFixedPoint

Vec3 = np.ndarray

_EYE3 = np.eye(3)


def vec3(x: float, y: float, z: float) -> Vec3:
    """Build a finite 3-vector."""
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector components: {v}")
    return v


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < 1e-14:
        raise ValueError("cannot normalize a near-zero vector")
    return v / n


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Proper rotation of 3-space, stored as an orthonormal matrix.

    The constructor projects its input onto the nearest rotation matrix
    (polar factor via SVD), which keeps long composition chains orthonormal
    to machine precision. Inputs farther than 1e-8 from a rotation are
    rejected rather than silently repaired.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        defect = np.abs(mat.T @ mat - _EYE3).max()
        if defect > 1e-8 or np.linalg.det(mat) < 0.0:
            raise ValueError("matrix is not a proper rotation")
        if defect > 1e-15:
            u, _, vt = np.linalg.svd(mat)
            mat = u @ vt
        object.__setattr__(self, "matrix", _as_readonly(mat))

    @staticmethod
    def identity() -> "Rotation3":
        return Rotation3(_EYE3)

    @staticmethod
    def about_axis(axis: Vec3, angle: float) -> "Rotation3":
        """Rotation by `angle` (radians, right-hand rule) about `axis`."""
        k = _unit(np.asarray(axis, dtype=float))
        kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        c, s = math.cos(angle), math.sin(angle)
        return Rotation3(_EYE3 + s * kx + (1.0 - c) * (kx @ kx))

    @staticmethod
    def aligning(a: Vec3, b: Vec3) -> "Rotation3":
        """Minimal rotation taking unit direction a to unit direction b."""
        a = _unit(np.asarray(a, dtype=float))
        b = _unit(np.asarray(b, dtype=float))
        axis = np.cross(a, b)
        s = np.linalg.norm(axis)
        c = float(a @ b)
        if s < 1e-14:
            if c > 0.0:
                return Rotation3.identity()
            # antiparallel: rotate by pi about any axis orthogonal to a
            e = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            return Rotation3.about_axis(np.cross(a, e), math.pi)
        return Rotation3.about_axis(axis, math.atan2(s, c))

    def apply(self, p: Vec3) -> Vec3:
        return np.asarray(p, dtype=float) @ self.matrix.T

    def compose(self, other: "Rotation3") -> "Rotation3":
        """self after other."""
        return Rotation3(self.matrix @ other.matrix)

    def inverse(self) -> "Rotation3":
        return Rotation3(self.matrix.T)

    def orthonormality_defect(self) -> float:
        """max |R^T R - I|, for invariant checks."""
        return float(np.abs(self.matrix.T @ self.matrix - _EYE3).max())


@dataclass(frozen=True, eq=False)
class Similarity3:
    """Orientation-preserving conformal similarity x -> scale * rot(x) + shift."""

    scale: float
    rot: Rotation3
    shift: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"similarity scale must be positive, got {self.scale}")
        object.__setattr__(self, "shift", _as_readonly(np.asarray(self.shift, dtype=float)))

    @staticmethod
    def identity() -> "Similarity3":
        return Similarity3(1.0, Rotation3.identity(), np.zeros(3))

    @staticmethod
    def translation(t: Vec3) -> "Similarity3":
        return Similarity3(1.0, Rotation3.identity(), t)

    def apply(self, p: Vec3) -> Vec3:
        return self.scale * self.rot.apply(p) + self.shift

    def compose(self, other: "Similarity3") -> "Similarity3":
        """self after other: (self.compose(other)).apply(p) == self.apply(other.apply(p))."""
        return Similarity3(
            self.scale * other.scale,
            self.rot.compose(other.rot),
            self.scale * self.rot.apply(other.shift) + self.shift,
        )

    def invert(self) -> "Similarity3":
        rinv = self.rot.inverse()
        return Similarity3(1.0 / self.scale, rinv, rinv.apply(-self.shift) / self.scale)

    def fixed_point(self) -> Vec3:
        """The unique x with apply(x) = x, by solving (I - scale * R) x = shift."""
        if abs(self.scale - 1.0) < 1e-12:
            raise NoUniqueFixedPoint(f"scale {self.scale} is too close to 1")
        return np.linalg.solve(_EYE3 - self.scale * self.rot.matrix, self.shift)


@dataclass(frozen=True, eq=False)
class Circle3:
    """Round circle: center, radius, unit plane normal.

    Orientation convention: the circle is traversed counterclockwise when
    viewed from the tip of the normal (point_at uses a right-handed in-plane
    frame (u, v, normal)).
    """

    center: np.ndarray
    radius: float
    normal: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"circle radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", _as_readonly(np.asarray(self.center, dtype=float)))
        object.__setattr__(self, "normal", _as_readonly(_unit(np.asarray(self.normal, dtype=float))))

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic orthonormal in-plane frame (u, v) with u x v = normal."""
        n = self.normal
        e = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.75 else np.array([1.0, 0.0, 0.0])
        u = _unit(np.cross(e, n))
        v = np.cross(n, u)
        return u, v

    def point_at(self, angle) -> Vec3:
        """Point(s) on the circle at the given angle(s) in the (u, v) frame."""
        u, v = self.basis()
        a = np.asarray(angle, dtype=float)
        return self.center + self.radius * (np.multiply.outer(np.cos(a), u) + np.multiply.outer(np.sin(a), v))

    def sample(self, n: int) -> np.ndarray:
        """n arc-uniform points, counterclockwise around the normal."""
        return self.point_at(np.linspace(0.0, 2.0 * math.pi, n, endpoint=False))

    def transform(self, s: Similarity3) -> "Circle3":
        return Circle3(s.apply(self.center), s.scale * self.radius, s.rot.apply(self.normal))

    def distance_to(self, p: Vec3) -> float | np.ndarray:
        return point_circle_distance(self, p)


class Membership(Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True, eq=False)
class SolidTorus:
    """Solid torus: all points within `tube` of the core circle. Requires tube < core radius."""

    core: Circle3
    tube: float

    def __post_init__(self):
        if not (np.isfinite(self.tube) and 0.0 < self.tube < self.core.radius):
            raise ValueError(f"tube radius must lie in (0, core radius), got {self.tube}")

    def transform(self, s: Similarity3) -> "SolidTorus":
        return SolidTorus(self.core.transform(s), s.scale * self.tube)

    def contains(self, p: Vec3, tol: float = 1e-12) -> Membership:
        """Classify one point against the torus with a boundary band of width 2*tol."""
        d = point_circle_distance(self.core, p)
        if d < self.tube - tol:
            return Membership.INSIDE
        if d > self.tube + tol:
            return Membership.OUTSIDE
        return Membership.BOUNDARY


def point_circle_distance(c: Circle3, p: Vec3):
    """Euclidean distance from point(s) p to the circle as a point set.

    Analytic: project into the circle plane; for a point on the axis the
    nearest circle points are all at sqrt(radius^2 + height^2), which the
    formula covers with in-plane radius 0.
    """
    w = np.asarray(p, dtype=float) - c.center
    h = w @ c.normal
    w_perp = w - np.multiply.outer(h, c.normal)
    rho = np.linalg.norm(w_perp, axis=-1)
    d = np.hypot(rho - c.radius, h)
    return float(d) if d.ndim == 0 else d


def torus_contains(t: SolidTorus, p: Vec3, tol: float = 1e-12) -> Membership:
    return t.contains(p, tol)


def _golden_min(f, lo: float, hi: float, iters: int = 60) -> float:
    """Golden-section minimum of a unimodal-enough scalar function on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return min(fc, fd)


def circle_circle_distance(a: Circle3, b: Circle3, grid_n: int = 512) -> float:
    """Certified lower bound on the minimum distance between two circles.

    For each circle: sample grid_n arc-uniform points, take the exact
    point-to-circle distance to the other circle, refine the minimum locally,
    then subtract the half-step Lipschitz sampling error (arc-length
    parametrization is 1-Lipschitz into R^3). The best of the two one-sided
    bounds is returned. There is no closed form for the exact minimum;
    a sound lower bound is what disjointness certificates need.
    """
    if grid_n < 8:
        raise ValueError(f"grid_n must be >= 8, got {grid_n}")
    best = -math.inf
    step = 2.0 * math.pi / grid_n
    for src, dst in ((a, b), (b, a)):
        angles = np.arange(grid_n) * step
        d = point_circle_distance(dst, src.point_at(angles))
        i = int(np.argmin(d))
        refined = _golden_min(
            lambda t: float(point_circle_distance(dst, src.point_at(t))),
            angles[i] - step,
            angles[i] + step,
        )
        d_min = min(float(d[i]), refined)
        best = max(best, d_min - 0.5 * step * src.radius)
    return best
