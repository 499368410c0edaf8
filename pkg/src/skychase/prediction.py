"""Target motion prediction by sample-and-check.

Past Gaussian position estimates are turned into a family of candidate
future trajectories: for each observation, points are sampled on a covariance
contour; every cartesian sequence of sampled points is fitted by a closed-form
regularized least-squares polynomial (all sequences solved against one shared
factorization); candidates that cannot be certified clear of every obstacle
are discarded; the survivor with the lowest smoothness-plus-unlikelihood score
wins.
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
    FactorizationFailure,
    NoFeasiblePrediction,
    ZeroPolynomial,
)
from .polynomial import count_distinct_real_roots, count_real_roots_batch, gram_matrix
from .world import (
    EllipsoidObstacle,
    TargetObservation,
    Trajectory3,
    pad_coeffs,
    pairwise_form_poly,
    quadform_coeffs_batch,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictorConfig:
    """Knobs for target prediction.

    ``n_obs`` past observations each contribute ``n_contour`` sampled points
    (the mean plus points on the ``contour_radius`` Mahalanobis contour), so
    ``n_contour ** n_obs`` candidate fits are evaluated per prediction.
    """

    n_obs: int = 3
    n_contour: int = 5
    contour_radius: float = 1.0
    degree: int = 2                  # fitted polynomial degree
    horizon: float = 5.0
    track_weight: float = 1.0        # data-term weight against smoothness
    likelihood_weight: float = 1e-3  # weight of the inverse-density score term
    candidate_cap: int = 100_000

    def __post_init__(self):
        if self.n_obs < 2:
            raise ValueError("need at least 2 observations")
        if self.degree < 1:
            raise ValueError("prediction degree must be >= 1")
        if self.n_contour < 1:
            raise ValueError("need at least one contour point")
        if self.contour_radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.track_weight < 0:
            raise ValueError("tracking weight must be non-negative")
        if self.n_contour ** self.n_obs > self.candidate_cap:
            raise ValueError(
                f"candidate count {self.n_contour}^{self.n_obs} exceeds the cap "
                f"{self.candidate_cap}; lower n_contour/n_obs or raise candidate_cap"
            )


@dataclass(frozen=True, eq=False)
class PredictionCandidate:
    """A fitted target trajectory with its score and certification record."""

    trajectory: Trajectory3
    index: int
    feasible: bool
    cost: float
    # labels of obstacles this candidate was certified clear of; consumers may
    # skip re-verifying those
    cleared_labels: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True, eq=False)
class PredictionSystem:
    """Normal matrix of the fitting problem with a reusable factorization."""

    matrix: np.ndarray
    factor: tuple
    basis: np.ndarray        # (degree+1, n_obs) columns c(t_n)
    timestamps: np.ndarray
    config: PredictorConfig


def sample_contour_points(obs: TargetObservation, cfg: PredictorConfig) -> np.ndarray:
    """(n_contour, 3) points: the mean, then evenly azimuth-spaced points on
    the contour_radius covariance contour (offsets lie in the x-y plane of the
    whitened frame)."""
    L = np.linalg.cholesky(obs.covariance)  # SPD guaranteed at construction
    pts = np.zeros((cfg.n_contour, 3))
    pts[0] = obs.mean
    k = cfg.n_contour - 1
    if k > 0:
        phi = 2.0 * np.pi * np.arange(k) / k
        u = np.stack([np.cos(phi), np.sin(phi), np.zeros(k)])
        pts[1:] = obs.mean + cfg.contour_radius * (L @ u).T
    return pts


def assemble_prediction_system(cfg: PredictorConfig, timestamps) -> PredictionSystem:
    """Build and factorize M = Gram(degree, 2, horizon) + w * sum c(t_n) c(t_n)^T."""
    t = np.asarray(timestamps, dtype=float)
    if t.size != cfg.n_obs:
        raise ValueError(f"expected {cfg.n_obs} timestamps, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    if np.any(t >= 0):
        raise ValueError("observation timestamps must be strictly before the epoch")
    m = cfg.degree
    basis = np.vander(t, m + 1, increasing=True).T  # (m+1, n_obs)
    M = gram_matrix(m, 2, cfg.horizon) + cfg.track_weight * (basis @ basis.T)
    try:
        factor = scipy.linalg.cho_factor(M)
    except scipy.linalg.LinAlgError as e:
        raise FactorizationFailure(f"prediction normal matrix is singular: {e}") from None
    # Cholesky can succeed on barely-indefinite input rounded to PSD; reject
    # systems without meaningful pivots
    if np.min(np.abs(np.diag(factor[0]))) < 1e-12 * max(1.0, float(np.max(np.abs(M)))):
        raise FactorizationFailure("prediction normal matrix is numerically singular")
    return PredictionSystem(M, factor, basis, t, cfg)


def _solve_coeffs(system: PredictionSystem, sequences: np.ndarray) -> np.ndarray:
    """Closed-form fits for every sequence; returns (N_q, 3, degree+1)."""
    seq = np.asarray(sequences, dtype=float)
    if seq.ndim == 2:
        seq = seq[None]
    nq, n_obs, _ = seq.shape
    if n_obs != system.config.n_obs:
        raise ValueError("sequence length does not match the observation count")
    w = system.config.track_weight
    # stationarity: M q = -h/2 with h = -2w * sum v_n c(t_n)
    h = -2.0 * w * np.einsum("mn,qna->mqa", system.basis, seq)
    m1 = system.basis.shape[0]
    sol = scipy.linalg.cho_solve(system.factor, h.reshape(m1, -1))
    return (-0.5 * sol).reshape(m1, nq, 3).transpose(1, 2, 0)


def batch_solve_predictions(system: PredictionSystem, sequences) -> list[Trajectory3]:
    """One trajectory per point sequence, all solved against one factorization."""
    coeffs = _solve_coeffs(system, np.asarray(sequences, dtype=float))
    T = system.config.horizon
    return [Trajectory3.from_coeffs(c, T) for c in coeffs]


def _clearance_poly_batch(coeffs: np.ndarray, obstacle: EllipsoidObstacle) -> np.ndarray:
    """Coefficients of the obstacle clearance form for a candidate batch."""
    Cc = obstacle.center.coeffs_matrix()
    L = max(coeffs.shape[2], Cc.shape[1])
    diff = pad_coeffs(coeffs, L) - pad_coeffs(Cc, L)[None]
    return quadform_coeffs_batch(diff, obstacle.shape)


def feasible_mask(coeffs: np.ndarray, obstacles, horizon: float) -> np.ndarray:
    """Certify a batch of trajectories clear of every obstacle.

    A row passes for one obstacle iff the clearance form exceeds 1 at t=0 and
    the form minus 1 has no real root on (0, horizon]. Degenerate root counts
    mark the row infeasible (conservative).
    """
    B = coeffs.shape[0]
    mask = np.ones(B, dtype=bool)
    for ob in obstacles:
        dq = _clearance_poly_batch(coeffs, ob)
        ok0 = dq[:, 0] > 1.0
        mask &= ok0
        alive = np.nonzero(mask)[0]
        if alive.size == 0:
            break
        poly = dq[alive].copy()
        poly[:, 0] -= 1.0
        counts, degen = count_real_roots_batch(poly, 0.0, horizon)
        mask[alive] &= (counts == 0) & ~degen
    return mask


def prediction_feasible(candidate: Trajectory3, obstacles, horizon: float) -> bool:
    """True iff the candidate is certified clear of every obstacle on (0, horizon].

    Raises CheckInconclusive when a root count degenerates; callers treat
    that as infeasible.
    """
    for ob in obstacles:
        dq = pairwise_form_poly(candidate - ob.center, candidate - ob.center, ob.shape)
        if dq(0.0) <= 1.0:
            return False
        try:
            if count_distinct_real_roots(dq - 1.0, 0.0, horizon) != 0:
                return False
        except (DegenerateChain, ZeroPolynomial) as e:
            raise CheckInconclusive(
                f"clearance root count degenerated against obstacle {ob.label!r}"
            ) from e
    return True


def _log_unlikelihood(coeffs: np.ndarray, observations) -> np.ndarray:
    """Log of the product of inverse observation densities, batched."""
    B = coeffs.shape[0]
    total = np.zeros(B)
    for obs in observations:
        t = obs.time
        # Horner at a single time
        val = np.zeros((B, 3))
        for i in range(coeffs.shape[2] - 1, -1, -1):
            val = val * t + coeffs[:, :, i]
        r = val - obs.mean
        L = np.linalg.cholesky(obs.covariance)
        z = scipy.linalg.solve_triangular(L, r.T, lower=True)
        maha = np.sum(z * z, axis=0)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        total += 0.5 * maha + 0.5 * (3.0 * math.log(2.0 * math.pi) + logdet)
    return total


_LOG_MAX = math.log(np.finfo(float).max)


def _costs_batch(coeffs: np.ndarray, observations, cfg: PredictorConfig) -> np.ndarray:
    G = gram_matrix(cfg.degree, 2, cfg.horizon)
    smooth = np.einsum("qal,lm,qam->q", coeffs, G, coeffs)
    if cfg.likelihood_weight == 0.0:
        return smooth
    logu = _log_unlikelihood(coeffs, observations)
    # w_q * exp(logu) can overflow for tight covariances; saturate at the
    # largest finite float so ordering among non-saturated costs is kept
    logv = math.log(cfg.likelihood_weight) + logu
    term = np.where(
        logv >= _LOG_MAX,
        np.finfo(float).max,
        np.exp(np.minimum(logv, _LOG_MAX)),
    )
    return np.minimum(smooth + term, np.finfo(float).max)


def prediction_cost(candidate: Trajectory3, observations, cfg: PredictorConfig) -> float:
    """Smoothness energy plus the weighted inverse-likelihood score.

    The likelihood term is evaluated in the log domain and saturates at the
    largest finite float instead of overflowing; ordering among finite values
    is preserved.
    """
    coeffs = candidate.coeffs_matrix(cfg.degree + 1)[None]
    return float(_costs_batch(coeffs, observations, cfg)[0])


def predict(observations, obstacles, cfg: PredictorConfig) -> PredictionCandidate:
    """Best feasible prediction from the most recent ``cfg.n_obs`` observations.

    Enumerates every cartesian sequence of contour points (first observation
    is the most significant index digit), fits all of them in one batched
    solve, drops candidates that cannot be certified clear of the obstacles,
    and returns the cheapest survivor (ties broken by lowest sequence index).
    """
    obs = sorted(observations, key=lambda o: o.time)
    if len(obs) < cfg.n_obs:
        raise ValueError(f"need at least {cfg.n_obs} observations, got {len(obs)}")
    obs = obs[-cfg.n_obs :]

    nq = cfg.n_contour ** cfg.n_obs
    if nq > cfg.candidate_cap:
        raise ValueError(f"candidate count {nq} exceeds cap {cfg.candidate_cap}")
    contours = np.stack([sample_contour_points(o, cfg) for o in obs])  # (n_obs, n_v, 3)
    digits = np.indices((cfg.n_contour,) * cfg.n_obs).reshape(cfg.n_obs, -1).T  # (nq, n_obs)
    sequences = np.stack(
        [contours[n, digits[:, n]] for n in range(cfg.n_obs)], axis=1
    )  # (nq, n_obs, 3)

    system = assemble_prediction_system(cfg, [o.time for o in obs])
    coeffs = _solve_coeffs(system, sequences)  # (nq, 3, degree+1)

    mask = feasible_mask(coeffs, obstacles, cfg.horizon)
    n_ok = int(mask.sum())
    log.debug("prediction candidates: %d total, %d feasible", nq, n_ok)
    if n_ok == 0:
        raise NoFeasiblePrediction(
            f"all {nq} prediction candidates intersect an obstacle within the horizon"
        )

    costs = _costs_batch(coeffs, obs, cfg)
    costs = np.where(mask, costs, np.inf)
    best = int(np.argmin(costs))
    return PredictionCandidate(
        trajectory=Trajectory3.from_coeffs(coeffs[best], cfg.horizon),
        index=best,
        feasible=True,
        cost=float(costs[best]),
        cleared_labels=frozenset(ob.label for ob in obstacles),
    )
