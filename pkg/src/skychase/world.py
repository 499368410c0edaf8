"""Shared geometric vocabulary: 3-D polynomial trajectories, ellipsoidal
obstacles, and Gaussian target observations.

Units are meters and seconds throughout. Obstacle shape matrices carry 1/m^2
so the ellipsoid boundary is the level set where the quadratic form equals 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonSPDCovariance, NonSPDShape
from .polynomial import Polynomial


def _as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    return v


def _check_spd(M, exc, what: str) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.shape != (3, 3):
        raise exc(f"{what} must be 3x3, got {A.shape}")
    if not np.allclose(A, A.T, rtol=1e-9, atol=1e-12):
        raise exc(f"{what} must be symmetric")
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise exc(f"{what} must be positive definite") from None
    return 0.5 * (A + A.T)


@dataclass(frozen=True, eq=False)
class Trajectory3:
    """Three axis polynomials of time sharing one horizon."""

    x: Polynomial
    y: Polynomial
    z: Polynomial
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("trajectory horizon must be positive")

    @classmethod
    def from_coeffs(cls, coeffs, horizon: float) -> "Trajectory3":
        """Build from a (3, L) coefficient matrix (rows: x, y, z ascending)."""
        C = np.asarray(coeffs, dtype=float)
        if C.ndim != 2 or C.shape[0] != 3:
            raise ValueError("expected a (3, L) coefficient matrix")
        return cls(Polynomial(C[0]), Polynomial(C[1]), Polynomial(C[2]), horizon)

    @classmethod
    def constant(cls, point, horizon: float) -> "Trajectory3":
        p = _as_vec3(point)
        return cls(Polynomial([p[0]]), Polynomial([p[1]]), Polynomial([p[2]]), horizon)

    @property
    def axes(self) -> tuple[Polynomial, Polynomial, Polynomial]:
        return (self.x, self.y, self.z)

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.axes)

    def coeffs_matrix(self, width: int | None = None) -> np.ndarray:
        """(3, width) ascending coefficients, zero-padded."""
        w = width if width is not None else self.degree + 1
        C = np.zeros((3, w))
        for i, p in enumerate(self.axes):
            C[i, : p.coeffs.size] = p.coeffs
        return C

    def at(self, t):
        """Position at time t: (3,) for scalar t, (3, len(t)) for arrays."""
        t = np.asarray(t, dtype=float)
        return np.stack([p(t) for p in self.axes])

    def derivative(self, k: int = 1) -> "Trajectory3":
        return Trajectory3(
            self.x.derivative(k), self.y.derivative(k), self.z.derivative(k), self.horizon
        )

    def shift(self, dt: float, horizon: float | None = None) -> "Trajectory3":
        """Re-base the time origin: result(t) = self(t + dt)."""
        h = self.horizon if horizon is None else horizon
        return Trajectory3(self.x.shift(dt), self.y.shift(dt), self.z.shift(dt), h)

    def __sub__(self, other: "Trajectory3") -> "Trajectory3":
        if abs(self.horizon - other.horizon) > 1e-9:
            raise ValueError("trajectories must share a horizon")
        return Trajectory3(
            self.x - other.x, self.y - other.y, self.z - other.z, self.horizon
        )


def eval_trajectory(tr: Trajectory3, t):
    return tr.at(t)


def mahalanobis_sq(x, c, R) -> float:
    """Quadratic-form squared distance (x-c)^T R (x-c)."""
    d = _as_vec3(x) - _as_vec3(c)
    return float(d @ np.asarray(R, dtype=float) @ d)


def pairwise_form_poly(u: Trajectory3, v: Trajectory3, R) -> Polynomial:
    """Scalar polynomial t -> u(t)^T R v(t).

    With u = v = chaser-minus-center this is the chaser clearance form; with
    u = v = target-minus-center the target clearance form; mixed arguments
    give the cross form used by the segment lower bound.
    """
    if abs(u.horizon - v.horizon) > 1e-9:
        raise ValueError("trajectories must share a horizon")
    A = np.asarray(R, dtype=float)
    out = Polynomial([0.0])
    for a in range(3):
        for b in range(3):
            if A[a, b] == 0.0:
                continue
            out = out + A[a, b] * (u.axes[a] * v.axes[b])
    return out


@dataclass(frozen=True, eq=False)
class EllipsoidObstacle:
    """Constant-shape ellipsoid with a polynomial center trajectory.

    A point x is inside at time t iff (x - center(t))^T shape (x - center(t)) <= 1.
    """

    shape: np.ndarray
    center: Trajectory3
    label: str = "obstacle"

    def __post_init__(self):
        object.__setattr__(self, "shape", _check_spd(self.shape, NonSPDShape, "obstacle shape"))

    def contains(self, point, t: float) -> bool:
        return mahalanobis_sq(point, self.center.at(t), self.shape) <= 1.0

    def rebase(self, dt: float, horizon: float) -> "EllipsoidObstacle":
        """Obstacle with its center clock shifted by dt and a new horizon."""
        return EllipsoidObstacle(self.shape, self.center.shift(dt, horizon), self.label)


@dataclass(frozen=True, eq=False)
class TargetObservation:
    """Gaussian position estimate at a timestamp strictly before planning time."""

    time: float
    mean: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.time >= 0:
            raise ValueError("observation timestamps are relative to the planning epoch and must be < 0")
        object.__setattr__(self, "mean", _as_vec3(self.mean))
        object.__setattr__(
            self, "covariance", _check_spd(self.covariance, NonSPDCovariance, "observation covariance")
        )


def pad_coeffs(C: np.ndarray, width: int) -> np.ndarray:
    """Zero-pad ascending coefficients along the last axis to ``width``."""
    C = np.asarray(C, dtype=float)
    if C.shape[-1] >= width:
        return C
    out = np.zeros(C.shape[:-1] + (width,))
    out[..., : C.shape[-1]] = C
    return out


def crossform_coeffs_batch(u: np.ndarray, v: np.ndarray, R) -> np.ndarray:
    """Coefficients of t -> u_i(t)^T R v_i(t) for a batch of vector polynomials.

    ``u`` has shape (B, 3, Lu) and ``v`` (B, 3, Lv) or (3, Lv) (broadcast over
    the batch). Returns (B, Lu+Lv-1). This is the batched counterpart of
    :func:`pairwise_form_poly` used by the candidate-certification hot path.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.ndim == 2:
        v = np.broadcast_to(v, (u.shape[0],) + v.shape)
    w = np.einsum("ab,kbj->kaj", np.asarray(R, dtype=float), v)
    B, _, Lu = u.shape
    Lv = v.shape[2]
    out = np.zeros((B, Lu + Lv - 1))
    for i in range(Lu):
        out[:, i : i + Lv] += np.einsum("ka,kaj->kj", u[:, :, i], w)
    return out


def quadform_coeffs_batch(diff: np.ndarray, R) -> np.ndarray:
    """Coefficients of the self quadratic form diff^T R diff, batched."""
    return crossform_coeffs_batch(diff, diff, R)


def fit_trajectory(times, points, degree: int, horizon: float) -> Trajectory3:
    """Least-squares polynomial fit of waypoint samples, one polynomial per axis."""
    t = np.asarray(times, dtype=float)
    P = np.asarray(points, dtype=float)
    if P.shape != (t.size, 3):
        raise ValueError("points must be (len(times), 3)")
    if t.size < degree + 1:
        raise ValueError("need at least degree+1 waypoints to fit")
    V = np.vander(t, degree + 1, increasing=True)
    C, *_ = np.linalg.lstsq(V, P, rcond=None)
    return Trajectory3.from_coeffs(C.T, horizon)
