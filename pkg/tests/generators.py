"""Randomized scene generators shared by module and acceptance tests."""

from __future__ import annotations

import numpy as np

from skychase.world import EllipsoidObstacle, Trajectory3


def random_spd(rng: np.random.Generator, lo: float = 0.2, hi: float = 2.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues in [lo, hi]."""
    A = rng.normal(size=(3, 3))
    Q, _ = np.linalg.qr(A)
    lam = rng.uniform(lo, hi, size=3)
    return Q @ np.diag(lam) @ Q.T


def wandering_path(rng: np.random.Generator, base, horizon: float,
                   degree: int = 3, wander: float = 0.8) -> Trajectory3:
    """Gentle polynomial path starting near ``base`` that drifts a few meters
    over the horizon (higher-order coefficients shrink geometrically)."""
    C = np.zeros((3, degree + 1))
    C[:, 0] = np.asarray(base, float) + rng.normal(scale=0.3, size=3)
    for k in range(1, degree + 1):
        C[:, k] = rng.normal(scale=wander / (horizon**k) * 2.0**(1 - k), size=3)
    return Trajectory3.from_coeffs(C, horizon)


def random_chase_triple(rng: np.random.Generator, horizon: float = 5.0,
                        clear: bool | None = None):
    """A (chaser, target, obstacle) triple for certification testing.

    clear=True biases toward configurations whose chaser-target segment stays
    far from the obstacle; clear=False parks the obstacle on the corridor;
    None mixes both.
    """
    if clear is None:
        clear = bool(rng.integers(2))
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    base = direction * rng.uniform(6.0, 10.0)
    target = wandering_path(rng, base, horizon)
    offset = rng.normal(size=3)
    offset *= rng.uniform(1.0, 3.0) / np.linalg.norm(offset)
    chaser = wandering_path(rng, base + offset, horizon)
    if clear:
        center = wandering_path(rng, np.zeros(3), horizon, degree=1, wander=0.5)
    else:
        # obstacle riding the segment midpoint
        mid = 0.5 * (np.asarray(base) + np.asarray(base) + offset)
        center = wandering_path(rng, mid, horizon, degree=1, wander=0.3)
    obstacle = EllipsoidObstacle(random_spd(rng), center, "obstacle")
    return chaser, target, obstacle
