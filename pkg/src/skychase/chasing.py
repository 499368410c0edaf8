"""Chaser trajectory generation by sample-and-check.

Candidate chasing primitives are built around a predicted target path: view
skeleton points are sampled on rings (or spheres) centered on the prediction
at a few future instants, every cartesian sequence of skeletons is fitted by
an equality-constrained least-squares polynomial sharing one KKT
factorization, candidates are certified safe and target-visible through
polynomial root counting, and the cheapest certified candidate wins.

Safety and visibility rest on one quadratic bound: for each obstacle the
squared Mahalanobis clearance of the chaser-to-target segment is a quadratic
in the interpolation parameter s, and its minimum over s in [0, 1] is at
least min(d_p, d_q, d_s), the values at the endpoints and the cross form.
Keeping all three above 1 over the horizon therefore keeps the whole segment
outside the obstacle, with no line-of-sight occlusion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    CheckInconclusive,
    DegenerateChain,
    NoFeasibleCandidate,
    SingularKKT,
    ZeroPolynomial,
)
from .polynomial import (
    Polynomial,
    count_distinct_real_roots,
    count_real_roots_batch,
    derivative_coeffs,
    eval_poly_batch,
    gram_matrix,
)
from .prediction import PredictionCandidate
from .world import (
    Trajectory3,
    _as_vec3,
    crossform_coeffs_batch,
    pad_coeffs,
    pairwise_form_poly,
    quadform_coeffs_batch,
)

log = logging.getLogger(__name__)

SEGMENT_EPS = 1e-12       # squared segment length below which s is meaningless
PLANAR_RANGE_EPS = 1e-6   # meters; below this the yaw angle is undefined


def _default_derivative_weights() -> dict[int, float]:
    return {2: 1.0, 3: 0.1}


@dataclass(frozen=True)
class ChaserConfig:
    """Knobs for chasing primitive generation and scoring.

    ``n_steps`` skeleton instants, each offering ``len(radii) *
    azimuth_count`` view skeleton points, give ``n_skeletons ** n_steps``
    candidate primitives per replan.
    """

    n_steps: int = 3
    radii: tuple[float, ...] | None = None   # default rings around l_des
    azimuth_count: int = 4
    degree: int = 5
    horizon: float = 5.0
    skeleton_weight: float = 10.0
    w_smooth: float = 1.0
    w_safety: float = 1.0
    w_distance: float = 1.0
    w_yaw: float = 1.0
    derivative_weights: dict[int, float] = field(
        default_factory=_default_derivative_weights
    )
    c_max: float = 10.0
    c_min: float = 0.01
    l_s: float = 1.5
    l_des: float = 2.5
    n_eval: int = 64
    yaw_rate_cap: float = 10.0
    clearance_margin: float = 0.0
    recheck_dq: bool = False
    planar: bool = True
    candidate_cap: int = 100_000

    def __post_init__(self):
        if self.radii is None:
            object.__setattr__(
                self, "radii",
                (0.7 * self.l_des, self.l_des, 1.3 * self.l_des),
            )
        else:
            object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if self.n_steps < 2:
            raise ValueError("need at least 2 skeleton time steps")
        if self.degree < 1:
            raise ValueError("chaser degree must be >= 1")
        if self.azimuth_count < 1 or not self.radii:
            raise ValueError("need at least one skeleton point per step")
        if any(r <= 0 for r in self.radii):
            raise ValueError("skeleton radii must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.skeleton_weight < 0:
            raise ValueError("skeleton weight must be non-negative")
        if not (self.c_max > self.c_min > 0):
            raise ValueError("shaping requires c_max > c_min > 0")
        if self.l_s <= 0 or self.l_des <= 0:
            raise ValueError("distances l_s and l_des must be positive")
        if self.n_eval < 2:
            raise ValueError("need at least 2 quadrature nodes")
        if any(k < 1 or w < 0 for k, w in self.derivative_weights.items()):
            raise ValueError("derivative weights need order >= 1 and weight >= 0")
        if self.n_skeletons**self.n_steps > self.candidate_cap:
            raise ValueError(
                f"candidate count {self.n_skeletons}^{self.n_steps} exceeds the "
                f"cap {self.candidate_cap}"
            )

    @property
    def n_skeletons(self) -> int:
        return len(self.radii) * self.azimuth_count

    @property
    def step_times(self) -> np.ndarray:
        """Skeleton instants (horizon/n_steps) * n for n = 1..n_steps."""
        n = self.n_steps
        return self.horizon / n * np.arange(1, n + 1)


@dataclass(frozen=True, eq=False)
class InitialState:
    """Chaser state at the planning epoch: derivatives of order 0 through 3."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration", "jerk"):
            object.__setattr__(self, name, _as_vec3(getattr(self, name)))

    @classmethod
    def rest(cls, position) -> "InitialState":
        z = np.zeros(3)
        return cls(position, z, z, z)

    def stack(self) -> np.ndarray:
        """(4, 3) rows ordered by derivative order."""
        return np.stack([self.position, self.velocity, self.acceleration, self.jerk])


class CostBreakdown(tuple):
    """(smoothness, safety, distance, yaw, total) with named access."""

    __slots__ = ()

    def __new__(cls, smoothness, safety, distance, yaw, total):
        return super().__new__(cls, (smoothness, safety, distance, yaw, total))

    smoothness = property(lambda self: self[0])
    safety = property(lambda self: self[1])
    distance = property(lambda self: self[2])
    yaw = property(lambda self: self[3])
    total = property(lambda self: self[4])


@dataclass(frozen=True, eq=False)
class ChasePlan:
    """Selected chasing primitive with its score and safety diagnostics."""

    trajectory: Trajectory3
    cost: CostBreakdown
    index: int
    # per-obstacle minimum of the exact segment clearance sampled over the
    # horizon, and the worst initial-constraint residual
    clearance_floor: dict[str, float]
    constraint_residual: float


@dataclass(frozen=True, eq=False)
class ChasingSystem:
    """Factorized KKT system shared by every candidate of one replan."""

    kkt: np.ndarray
    factor: tuple
    basis: np.ndarray        # (degree+1, n_steps) columns c(t_n)
    constraints: np.ndarray  # (4, degree+1) rows c^(k)(0)^T
    config: ChaserConfig


def _sphere_points(n: int) -> np.ndarray:
    """n unit vectors roughly evenly spread over the sphere (golden spiral)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def sample_view_skeletons(prediction: Trajectory3, cfg: ChaserConfig) -> np.ndarray:
    """(n_steps, n_skeletons, 3) candidate viewpoints around the prediction.

    At each skeleton instant the points sit on rings (planar mode) or spheres
    centered on the predicted target position, one ring per configured radius.
    """
    centers = prediction.at(cfg.step_times).T  # (n_steps, 3)
    ks = cfg.azimuth_count
    if cfg.planar:
        phi = 2.0 * np.pi * np.arange(ks) / ks
        unit = np.stack([np.cos(phi), np.sin(phi), np.zeros(ks)], axis=1)
    else:
        unit = _sphere_points(ks)
    offsets = np.concatenate([r * unit for r in cfg.radii])  # (n_skeletons, 3)
    return centers[:, None, :] + offsets[None, :, :]


def assemble_chasing_kkt(cfg: ChaserConfig, init: InitialState) -> ChasingSystem:
    """Build and factorize the stationarity-plus-constraints system.

    The quadratic part is the curvature Gram matrix plus the weighted sum of
    basis outer products at the skeleton instants; the constraint rows pin
    derivatives of order 0..3 at t=0, which needs degree > 3.
    """
    init.stack()  # validates shape
    if cfg.degree <= 3:
        raise SingularKKT(
            f"degree {cfg.degree} leaves no freedom beyond the 4 initial "
            "constraints; need degree > 3"
        )
    m1 = cfg.degree + 1
    basis = np.vander(cfg.step_times, m1, increasing=True).T  # (m1, n_steps)
    M = gram_matrix(cfg.degree, 2, cfg.horizon)
    M = M + cfg.skeleton_weight * (basis @ basis.T)
    A = np.zeros((4, m1))
    for k in range(4):
        A[k, k] = math.factorial(k)
    n = m1 + 4
    K = np.zeros((n, n))
    K[:m1, :m1] = 2.0 * M
    K[:m1, m1:] = A.T
    K[m1:, :m1] = A
    try:
        factor = scipy.linalg.lu_factor(K)
    except scipy.linalg.LinAlgError as e:
        raise SingularKKT(f"KKT matrix is singular: {e}") from None
    if np.min(np.abs(np.diag(factor[0]))) < 1e-12 * float(np.max(np.abs(K))):
        raise SingularKKT("KKT matrix is numerically singular")
    return ChasingSystem(K, factor, basis, A, cfg)


def _solve_coeffs_chase(
    system: ChasingSystem, sequences: np.ndarray, init: InitialState
) -> np.ndarray:
    """Constrained fits for every skeleton sequence; returns (N_p, 3, degree+1)."""
    seq = np.asarray(sequences, dtype=float)
    if seq.ndim == 2:
        seq = seq[None]
    npl, n_steps, _ = seq.shape
    cfg = system.config
    if n_steps != cfg.n_steps:
        raise ValueError("sequence length does not match the skeleton step count")
    m1 = cfg.degree + 1
    b = init.stack()  # (4, 3)
    # stationarity rhs is -h with h = -2 w_p * sum u_n c(t_n)
    top = 2.0 * cfg.skeleton_weight * np.einsum("mn,pna->mpa", system.basis, seq)
    y = np.empty((m1 + 4, npl, 3))
    y[:m1] = top
    y[m1:] = b[:, None, :]
    sol = scipy.linalg.lu_solve(system.factor, y.reshape(m1 + 4, -1))
    # multipliers in rows m1: are discarded
    return sol[:m1].reshape(m1, npl, 3).transpose(1, 2, 0)


def batch_solve_chasing(
    system: ChasingSystem, sequences, init: InitialState
) -> list[Trajectory3]:
    """One constrained trajectory per skeleton sequence, one factorization."""
    coeffs = _solve_coeffs_chase(system, np.asarray(sequences, dtype=float), init)
    T = system.config.horizon
    return [Trajectory3.from_coeffs(c, T) for c in coeffs]


# ------------------------------------------------------------------ clearance


def _segment_quadratic(p, q, r, R):
    """Coefficients (a0, a1, a2) of the squared clearance of the segment
    p -> q against an ellipsoid at r, as a quadratic in the interpolation
    parameter."""
    u = p - r
    v = q - p
    Ru = R @ u
    a0 = float(u @ Ru)
    a1 = 2.0 * float(v @ Ru)
    a2 = float(v @ (R @ v))
    return a0, a1, a2


def segment_clearance(chaser_point, target_point, center, shape) -> float:
    """Minimum squared Mahalanobis distance from the chaser-to-target segment
    to an ellipsoid, closed form over the interpolation parameter.

    A degenerate segment (chaser meeting the target) collapses to the point
    clearance; a debug diagnostic is logged.
    """
    a0, a1, a2 = _segment_quadratic(
        np.asarray(chaser_point, dtype=float),
        np.asarray(target_point, dtype=float),
        np.asarray(center, dtype=float),
        np.asarray(shape, dtype=float),
    )
    if a2 <= SEGMENT_EPS:
        log.debug("degenerate chaser-target segment; using point clearance")
        return a0
    s = a1 / (-2.0 * a2)
    if s < 0.0:
        return a0
    if s >= 1.0:
        return a0 + a1 + a2
    return a0 - a1 * a1 / (4.0 * a2)


def exact_clearance(chaser: Trajectory3, target: Trajectory3, obstacle, t: float) -> float:
    """segment_clearance of the chaser-target segment against the obstacle,
    all three evaluated at time t."""
    return segment_clearance(
        chaser.at(t), target.at(t), obstacle.center.at(t), obstacle.shape
    )


def exact_clearance_profile(
    chaser: Trajectory3, target: Trajectory3, obstacle, times
) -> np.ndarray:
    """exact_clearance vectorized over a time grid."""
    t = np.asarray(times, dtype=float)
    p = chaser.at(t)
    q = target.at(t)
    r = obstacle.center.at(t)
    R = obstacle.shape
    u = p - r
    v = q - p
    Ru = R @ u
    a0 = np.einsum("at,at->t", u, Ru)
    a1 = 2.0 * np.einsum("at,at->t", v, Ru)
    a2 = np.einsum("at,at->t", v, R @ v)
    safe_a2 = np.where(a2 <= SEGMENT_EPS, 1.0, a2)
    s = a1 / (-2.0 * safe_a2)
    interior = a0 - a1 * a1 / (4.0 * safe_a2)
    out = np.where(s < 0.0, a0, np.where(s >= 1.0, a0 + a1 + a2, interior))
    return np.where(a2 <= SEGMENT_EPS, a0, out)


def clearance_forms(
    chaser: Trajectory3, target: Trajectory3, obstacle
) -> tuple[Polynomial, Polynomial, Polynomial]:
    """The three certification polynomials against one obstacle: squared
    clearance of the chaser, of the target, and their cross form. Their
    pointwise minimum lower-bounds the exact segment clearance."""
    du = chaser - obstacle.center
    dv = target - obstacle.center
    R = obstacle.shape
    d_p = pairwise_form_poly(du, du, R)
    d_q = pairwise_form_poly(dv, dv, R)
    d_s = pairwise_form_poly(du, dv, R)
    return d_p, d_q, d_s


def chasing_feasible(
    chaser: Trajectory3,
    target: Trajectory3,
    obstacles,
    horizon: float,
    *,
    recheck_dq: bool = True,
    margin: float = 0.0,
) -> bool:
    """Certify the chaser safe and the target visible over (0, horizon].

    Sufficient, not necessary: requires min(d_p, d_q, d_s) > 1 at t=0 and no
    roots of d_p-1 or d_s-1 (and d_q-1 when recheck_dq) on the horizon.
    Degenerate root counts are treated as not-certified.
    """
    thr = 1.0 + margin
    for ob in obstacles:
        d_p, d_q, d_s = clearance_forms(chaser, target, ob)
        if min(d_p(0.0), d_q(0.0), d_s(0.0)) <= thr:
            return False
        polys = [d_p, d_s] + ([d_q] if recheck_dq else [])
        for d in polys:
            try:
                if count_distinct_real_roots(d - 1.0, 0.0, horizon) != 0:
                    return False
            except (DegenerateChain, ZeroPolynomial):
                return False
    return True


def _feasible_mask_chase(
    coeffs: np.ndarray,
    target: Trajectory3,
    obstacles,
    cfg: ChaserConfig,
    cleared_labels: frozenset,
) -> np.ndarray:
    """Batched certification of candidate coefficient rows."""
    B = coeffs.shape[0]
    mask = np.ones(B, dtype=bool)
    thr = 1.0 + cfg.clearance_margin
    Cq = target.coeffs_matrix()
    for ob in obstacles:
        Cr = ob.center.coeffs_matrix()
        L = max(coeffs.shape[2], Cq.shape[1], Cr.shape[1])
        diff_p = pad_coeffs(coeffs, L) - pad_coeffs(Cr, L)[None]
        diff_q = pad_coeffs(Cq, L) - pad_coeffs(Cr, L)
        d_q = pairwise_form_poly(target - ob.center, target - ob.center, ob.shape)
        if d_q(0.0) <= thr:
            return np.zeros(B, dtype=bool)
        if cfg.recheck_dq or ob.label not in cleared_labels:
            try:
                if count_distinct_real_roots(d_q - 1.0, 0.0, cfg.horizon) != 0:
                    return np.zeros(B, dtype=bool)
            except (DegenerateChain, ZeroPolynomial):
                return np.zeros(B, dtype=bool)
        d_p = quadform_coeffs_batch(diff_p, ob.shape)
        d_s = crossform_coeffs_batch(diff_p, diff_q, ob.shape)
        mask &= (d_p[:, 0] > thr) & (d_s[:, 0] > thr)
        for rows in (d_p, d_s):
            alive = np.nonzero(mask)[0]
            if alive.size == 0:
                return mask
            poly = rows[alive].copy()
            poly[:, 0] -= 1.0
            counts, degen = count_real_roots_batch(poly, 0.0, cfg.horizon)
            mask[alive] &= (counts == 0) & ~degen
    return mask


# ----------------------------------------------------------------- scoring


def _trapezoid_weights(horizon: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    ts = np.linspace(0.0, horizon, n)
    w = np.full(n, horizon / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return ts, w


def _costs_batch_chase(
    coeffs: np.ndarray, target: Trajectory3, obstacles, cfg: ChaserConfig
):
    """Vectorized cost terms; returns (smooth, safety, distance, yaw) arrays."""
    B = coeffs.shape[0]
    smooth = np.zeros(B)
    for k, w in sorted(cfg.derivative_weights.items()):
        if w == 0.0:
            continue
        G = gram_matrix(cfg.degree, k, cfg.horizon)
        smooth += w * np.einsum("pal,lm,pam->p", coeffs, G, coeffs)

    ts, tw = _trapezoid_weights(cfg.horizon, cfg.n_eval)
    pos = eval_poly_batch(coeffs, ts)                         # (B, 3, n)
    vel = eval_poly_batch(derivative_coeffs(coeffs, 1), ts)
    qpos = target.at(ts)                                      # (3, n)
    qvel = target.derivative().at(ts)

    safety = np.zeros(B)
    span = cfg.c_max - cfg.c_min
    for ob in obstacles:
        rpos = ob.center.at(ts)
        diff = pos - rpos[None]
        e = np.einsum("pan,ab,pbn->pn", diff, ob.shape, diff)
        l = np.sqrt(np.maximum(e, 0.0))
        c = np.where(
            l < cfg.l_s,
            cfg.c_min + span * (l - cfg.l_s) ** 2 / cfg.l_s**2,
            cfg.c_min,
        )
        safety += c @ tw

    rel = qpos[None] - pos
    dist = np.linalg.norm(rel, axis=1)
    distance = ((dist - cfg.l_des) ** 2) @ tw

    dx, dy = rel[:, 0], rel[:, 1]
    dvx = qvel[0][None] - vel[:, 0]
    dvy = qvel[1][None] - vel[:, 1]
    den = dx * dx + dy * dy
    singular = den < PLANAR_RANGE_EPS**2
    n_sing = int(singular.sum())
    if n_sing:
        log.debug("yaw rate undefined at %d quadrature nodes; clamped", n_sing)
    psidot = (dx * dvy - dy * dvx) / np.where(singular, 1.0, den)
    psidot = np.where(singular, cfg.yaw_rate_cap, psidot)
    yaw = (psidot**2) @ tw

    return smooth, safety, distance, yaw


def chasing_cost(
    chaser: Trajectory3, target: Trajectory3, obstacles, cfg: ChaserConfig
) -> CostBreakdown:
    """Score one candidate: exact derivative energy plus quadrature terms for
    obstacle proximity shaping, distance keeping, and yaw-rate effort."""
    C = chaser.coeffs_matrix(cfg.degree + 1)[None]
    smooth, safety, distance, yaw = (
        float(v[0]) for v in _costs_batch_chase(C, target, obstacles, cfg)
    )
    total = (
        cfg.w_smooth * smooth
        + cfg.w_safety * safety
        + cfg.w_distance * distance
        + cfg.w_yaw * yaw
    )
    return CostBreakdown(smooth, safety, distance, yaw, total)


# ----------------------------------------------------------------- planning


def plan(prediction, obstacles, init: InitialState, cfg: ChaserConfig) -> ChasePlan:
    """Best certified chasing primitive against a (certified) prediction.

    ``prediction`` is either a PredictionCandidate, whose certification
    record lets the target-clearance recheck be skipped per obstacle, or a
    bare Trajectory3, which is always rechecked. Ties in total cost break to
    the lowest candidate index (first skeleton step is the most significant
    enumeration digit).
    """
    if isinstance(prediction, PredictionCandidate):
        target = prediction.trajectory
        cleared = prediction.cleared_labels
    else:
        target = prediction
        cleared = frozenset()
    if target.horizon != cfg.horizon:
        raise ValueError("prediction horizon must match the chasing horizon")
    if target.degree > cfg.degree:
        raise ValueError("prediction degree exceeds the chaser degree")
    for ob in obstacles:
        if ob.center.degree > cfg.degree:
            raise ValueError(f"obstacle {ob.label!r} degree exceeds the chaser degree")

    ns, n = cfg.n_skeletons, cfg.n_steps
    skeletons = sample_view_skeletons(target, cfg)
    digits = np.indices((ns,) * n).reshape(n, -1).T          # (N_p, n)
    sequences = np.stack(
        [skeletons[step, digits[:, step]] for step in range(n)], axis=1
    )                                                        # (N_p, n, 3)

    system = assemble_chasing_kkt(cfg, init)
    coeffs = _solve_coeffs_chase(system, sequences, init)

    mask = _feasible_mask_chase(coeffs, target, obstacles, cfg, cleared)
    n_ok = int(mask.sum())
    log.debug("chasing candidates: %d total, %d certified", len(coeffs), n_ok)
    if n_ok == 0:
        raise NoFeasibleCandidate(
            f"none of the {len(coeffs)} chasing candidates could be certified"
        )

    feas = np.nonzero(mask)[0]
    smooth, safety, distance, yaw = _costs_batch_chase(
        coeffs[feas], target, obstacles, cfg
    )
    totals = (
        cfg.w_smooth * smooth
        + cfg.w_safety * safety
        + cfg.w_distance * distance
        + cfg.w_yaw * yaw
    )
    k = int(np.argmin(totals))
    best = int(feas[k])
    trajectory = Trajectory3.from_coeffs(coeffs[best], cfg.horizon)

    residual = float(
        np.max(np.abs(system.constraints @ coeffs[best].T - init.stack()))
    )
    ts = np.linspace(0.0, cfg.horizon, max(cfg.n_eval, 256))
    floor = {
        ob.label: float(np.min(exact_clearance_profile(trajectory, target, ob, ts)))
        for ob in obstacles
    }
    return ChasePlan(
        trajectory=trajectory,
        cost=CostBreakdown(
            float(smooth[k]), float(safety[k]), float(distance[k]),
            float(yaw[k]), float(totals[k]),
        ),
        index=best,
        clearance_floor=floor,
        constraint_residual=residual,
    )
