"""What the feasibility certificate checks, shown on two hand-built triples.

For a chaser trajectory p, target q, and ellipsoid (center r, shape R), three
quadratic-form polynomials of time are formed:

    d_p = (p-r)^T R (p-r)    chaser clearance
    d_q = (q-r)^T R (q-r)    target clearance
    d_s = (p-r)^T R (q-r)    cross form

Their pointwise minimum lower-bounds the exact squared clearance of the whole
chaser-target sight segment, so certifying min > 1 on the horizon (value at 0
plus a Sturm root count of each form minus one) proves the segment never
touches the ellipsoid. The converse does not hold: the bound can dip below 1
while the true segment stays clear, which is the price of an exact,
sampling-free test.
"""

import numpy as np

from skychase import (
    EllipsoidObstacle,
    Trajectory3,
    chasing_feasible,
    clearance_forms,
    count_distinct_real_roots,
    exact_clearance_profile,
)

HORIZON = 5.0


def inspect(name: str, chaser, target, obstacle):
    d_p, d_q, d_s = clearance_forms(chaser, target, obstacle)
    print(f"{name}:")
    print(f"  form degrees: d_p {d_p.degree}, d_q {d_q.degree}, d_s {d_s.degree}")
    print(f"  at t=0: d_p {d_p(0.0):.3f}, d_q {d_q(0.0):.3f}, d_s {d_s(0.0):.3f}")
    for label, d in (("d_p", d_p), ("d_q", d_q), ("d_s", d_s)):
        n = count_distinct_real_roots(d - 1.0, 0.0, HORIZON)
        print(f"  roots of {label} - 1 on (0, {HORIZON:g}]: {n}")

    t = np.linspace(0.0, HORIZON, 4096)
    bound = np.minimum(np.minimum(d_p(t), d_q(t)), d_s(t))
    exact = exact_clearance_profile(chaser, target, obstacle, t)
    assert np.all(bound <= exact + 1e-9), "lower bound property violated"
    print(f"  min over 4096 samples: bound {bound.min():.3f}, exact {exact.min():.3f}")

    verdict = chasing_feasible(chaser, target, [obstacle], HORIZON)
    print(f"  certified: {verdict}")


def main():
    # both agents fly +x; chaser trails the target by 2.5 m
    target = Trajectory3.from_coeffs([[0.0, 1.5], [0.0, 0.0], [1.0, 0.0]], HORIZON)
    chaser = Trajectory3.from_coeffs([[-2.5, 1.5], [0.0, 0.0], [1.0, 0.0]], HORIZON)

    aside = EllipsoidObstacle(
        np.eye(3), Trajectory3.constant([4.0, 3.0, 1.0], HORIZON), "offset"
    )
    inspect("obstacle 3 m off the track", chaser, target, aside)
    print()

    # same ellipsoid parked on the sight line: d_p - 1 gains roots
    ahead = EllipsoidObstacle(
        np.eye(3), Trajectory3.constant([4.0, 0.0, 1.0], HORIZON), "in_path"
    )
    inspect("obstacle parked on the track", chaser, target, ahead)


if __name__ == "__main__":
    main()
