"""Polynomial algebra: evaluation, Gram matrices, Sturm root counting."""

from __future__ import annotations

import numpy as np
import pytest

from skychase.errors import DegenerateChain, ZeroPolynomial
from skychase.polynomial import (
    Polynomial,
    count_distinct_real_roots,
    count_real_roots_batch,
    derivative_coeffs,
    eval_poly_batch,
    gram_matrix,
    sturm_chain,
)

from oracles import (
    count_roots_bisection,
    find_roots_bisection,
    legendre_integral,
    poly_from_roots,
    random_separated_roots,
)


# ---------------------------------------------------------------------------
# evaluation and arithmetic
# ---------------------------------------------------------------------------


def test_eval_simple():
    p = Polynomial([1, 0, 1])  # 1 + t^2
    assert p(2.0) == 5.0
    assert Polynomial([0])(3.7) == 0.0
    assert Polynomial([4.5])(-2.0) == 4.5


def test_eval_horner_matches_direct():
    rng = np.random.default_rng(7)
    for _ in range(50):
        c = rng.normal(size=rng.integers(1, 9))
        p = Polynomial(c)
        t = rng.uniform(-3, 3)
        direct = sum(ci * t**i for i, ci in enumerate(p.coeffs))
        assert p(t) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_eval_vectorized():
    p = Polynomial([1, 2, 3])
    ts = np.array([0.0, 1.0, 2.0])
    assert np.allclose(p(ts), [1.0, 6.0, 17.0])


def test_derivative():
    assert Polynomial([0, 0, 1]).derivative(1) == Polynomial([0, 2])
    assert Polynomial([1, 1, 1]).derivative(0) == Polynomial([1, 1, 1])
    assert Polynomial([1, 2, 3]).derivative(3) == Polynomial([0])


def test_derivative_linear():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(1, 9))
        p = Polynomial(rng.normal(size=n))
        q = Polynomial(rng.normal(size=n))
        a, b = rng.normal(size=2)
        k = int(rng.integers(0, 4))
        lhs = (a * p + b * q).derivative(k)
        rhs = a * p.derivative(k) + b * q.derivative(k)
        assert lhs.coeffs == pytest.approx(rhs.coeffs, abs=1e-12)


def test_normalization_strips_trailing():
    p = Polynomial([1.0, 0.5, 1e-20])
    assert p.degree == 1
    assert Polynomial([0.0, 0.0]).degree == 0
    with pytest.raises(ValueError):
        Polynomial([])


def test_shift():
    rng = np.random.default_rng(3)
    p = Polynomial(rng.normal(size=6))
    dt = 1.7
    q = p.shift(dt)
    ts = np.linspace(-2, 2, 17)
    assert np.allclose(q(ts), p(ts + dt), rtol=1e-12, atol=1e-12)


def test_mul_is_pointwise_product():
    p = Polynomial([1, 2])
    q = Polynomial([3, 0, 1])
    r = p * q
    for t in (-1.5, 0.0, 2.25):
        assert r(t) == pytest.approx(p(t) * q(t), rel=1e-12)


# ---------------------------------------------------------------------------
# Gram matrices
# ---------------------------------------------------------------------------


def test_gram_small_hand_values():
    G = gram_matrix(2, 2, 1.0)
    expect = np.zeros((3, 3))
    expect[2, 2] = 4.0
    assert np.allclose(G, expect)

    G = gram_matrix(3, 2, 1.0)
    expect = np.zeros((4, 4))
    expect[2, 2] = 4.0
    expect[2, 3] = expect[3, 2] = 6.0
    expect[3, 3] = 12.0
    assert np.allclose(G, expect)


def test_gram_matches_quadrature_oracle():
    rng = np.random.default_rng(19)
    for k in (2, 3, 4):
        for _ in range(5):
            T = float(rng.uniform(0.5, 4.0))
            m = 5
            G = gram_matrix(m, k, T)
            for i in range(m + 1):
                for j in range(m + 1):
                    pi = Polynomial([0.0] * i + [1.0]).derivative(k)
                    pj = Polynomial([0.0] * j + [1.0]).derivative(k)
                    ref = legendre_integral(lambda t: pi(t) * pj(t), 0.0, T, n=16)
                    assert G[i, j] == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_gram_quadratic_form_is_derivative_energy():
    rng = np.random.default_rng(23)
    for _ in range(20):
        m = int(rng.integers(2, 8))
        k = int(rng.integers(0, 4))
        T = float(rng.uniform(0.5, 5.0))
        c = rng.normal(size=m + 1)
        p = Polynomial(c)
        G = gram_matrix(m, k, T)
        dk = p.derivative(k)
        ref = legendre_integral(lambda t: dk(t) ** 2, 0.0, T, n=32)
        assert c @ G @ c == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_gram_psd_and_symmetric():
    for m in range(11):
        for k in range(5):
            for T in (0.5, 1.0, 5.0):
                G = gram_matrix(m, k, T)
                assert np.allclose(G, G.T)
                w = np.linalg.eigvalsh(G)
                scale = max(1.0, float(np.max(np.abs(G))))
                assert w.min() >= -1e-9 * scale


def test_gram_rejects_bad_horizon():
    with pytest.raises(ValueError):
        gram_matrix(3, 2, 0.0)
    with pytest.raises(ValueError):
        gram_matrix(3, 2, -1.0)


# ---------------------------------------------------------------------------
# Sturm chains and root counting
# ---------------------------------------------------------------------------


def _proportional(p: Polynomial, coeffs) -> bool:
    ref = np.asarray(coeffs, dtype=float)
    if p.coeffs.size != ref.size:
        return False
    scale = ref[np.argmax(np.abs(ref))] / p.coeffs[np.argmax(np.abs(ref))]
    return scale > 0 and np.allclose(scale * p.coeffs, ref, rtol=1e-10, atol=1e-12)


def test_sturm_chain_textbook():
    chain = sturm_chain(Polynomial([-2, 0, 1]))  # t^2 - 2
    assert len(chain) == 3
    assert _proportional(chain[0], [-2, 0, 1])
    assert _proportional(chain[1], [0, 2])
    assert _proportional(chain[2], [2])


def test_sturm_chain_linear():
    chain = sturm_chain(Polynomial([-1, 1]))  # t - 1
    assert len(chain) == 2
    assert _proportional(chain[0], [-1, 1])
    assert _proportional(chain[1], [1])


def test_sturm_chain_zero_poly():
    with pytest.raises(ZeroPolynomial):
        sturm_chain(Polynomial([0.0]))


def test_sturm_variations_at_infinity_match_bisection_oracle():
    # random degree-8 polynomials built from known well-separated root sets
    rng = np.random.default_rng(101)
    for _ in range(60):
        n_real = int(rng.integers(0, 5)) * 2 + (8 % 2)  # even count so degree stays 8
        n_real = min(n_real, 8)
        n_pairs = (8 - n_real) // 2
        reals = random_separated_roots(rng, n_real, -2.5, 2.5, 5e-2)
        pairs = [(rng.uniform(-2, 2), rng.uniform(0.2, 2.0)) for _ in range(n_pairs)]
        c = poly_from_roots(reals, pairs, scale=float(rng.choice([-1, 1]) * rng.uniform(0.5, 2)))
        p = Polynomial(c)
        total = count_distinct_real_roots(p, -np.inf, np.inf)
        oracle = len(find_roots_bisection(p, -3.0, 3.0, grid=8001))
        assert total == oracle == len(reals)


def test_count_examples():
    assert count_distinct_real_roots(Polynomial([-2, 0, 1]), 0.0, 2.0) == 1
    assert count_distinct_real_roots(Polynomial([1, 0, 1]), 0.0, 10.0) == 0
    # (t-1)^2: double root counted once, chain terminates at the common factor
    assert count_distinct_real_roots(Polynomial([1, -2, 1]), 0.0, 2.0) == 1


def test_count_half_open_convention():
    p = Polynomial([-1, 1])  # root at 1
    assert count_distinct_real_roots(p, 0.0, 1.0) == 1  # root at b included
    assert count_distinct_real_roots(p, 1.0, 2.0) == 0  # root at a excluded
    cubic = Polynomial([0, -1, 0, 1])  # t^3 - t: roots -1, 0, 1
    assert count_distinct_real_roots(cubic, -2.0, 1.0) == 3
    assert count_distinct_real_roots(cubic, -1.0, 1.0) == 2
    assert count_distinct_real_roots(cubic, -1.0, 0.5) == 1


def test_count_rejects_bad_interval_and_zero():
    with pytest.raises(ValueError):
        count_distinct_real_roots(Polynomial([1, 1]), 2.0, 2.0)
    with pytest.raises(ZeroPolynomial):
        count_distinct_real_roots(Polynomial([0]), 0.0, 1.0)


def test_degenerate_chain_detected():
    # two roots separated by 1e-5: the remainder cascade lands in the
    # untrusted gray zone between exact-zero and meaningful magnitude
    delta = 1e-5
    p = Polynomial(np.convolve([-1.0, 1.0], [-(1.0 + delta), 1.0]))
    with pytest.raises(DegenerateChain):
        count_distinct_real_roots(p, 0.0, 2.0)


def test_count_matches_known_root_sets():
    rng = np.random.default_rng(211)
    checked = 0
    for _ in range(1000):
        deg = int(rng.integers(1, 11))
        n_real = int(rng.integers(0, deg + 1))
        if (deg - n_real) % 2 == 1:
            n_real += 1 if n_real < deg else -1
        n_pairs = (deg - n_real) // 2
        reals = random_separated_roots(rng, n_real, -3.0, 3.0, 2e-3)
        pairs = [(rng.uniform(-3, 3), rng.uniform(0.05, 2.0)) for _ in range(n_pairs)]
        c = poly_from_roots(list(reals), pairs, scale=float(rng.normal() or 1.0))
        p = Polynomial(c)
        # interval endpoints clear of every root
        while True:
            a, b = np.sort(rng.uniform(-3.5, 3.5, size=2))
            if b - a > 0.1 and all(min(abs(a - r), abs(b - r)) > 1e-6 for r in reals):
                break
        expect = int(sum(1 for r in reals if a < r <= b))
        assert count_distinct_real_roots(p, a, b) == expect
        checked += 1
    assert checked == 1000


def test_count_interval_additivity():
    rng = np.random.default_rng(307)
    for _ in range(200):
        deg = int(rng.integers(2, 9))
        n_real = int(rng.integers(0, deg + 1))
        if (deg - n_real) % 2 == 1:
            n_real += 1 if n_real < deg else -1
        reals = random_separated_roots(rng, n_real, -3.0, 3.0, 1e-2)
        pairs = [(rng.uniform(-3, 3), rng.uniform(0.1, 2.0)) for _ in range((deg - n_real) // 2)]
        p = Polynomial(poly_from_roots(list(reals), pairs))
        while True:
            pts = np.sort(rng.uniform(-4, 4, size=3))
            if np.min(np.diff(pts)) > 0.05 and all(
                min(abs(x - r) for x in pts) > 1e-6 for r in reals
            ):
                break
        a, b, c = pts
        assert (
            count_distinct_real_roots(p, a, b) + count_distinct_real_roots(p, b, c)
            == count_distinct_real_roots(p, a, c)
        )


def test_count_matches_bisection_oracle_random():
    rng = np.random.default_rng(401)
    for _ in range(200):
        deg = int(rng.integers(2, 11))
        n_real = int(rng.integers(0, deg + 1))
        if (deg - n_real) % 2 == 1:
            n_real += 1 if n_real < deg else -1
        reals = random_separated_roots(rng, n_real, -2.8, 2.8, 5e-3)
        pairs = [(rng.uniform(-3, 3), rng.uniform(0.05, 2.0)) for _ in range((deg - n_real) // 2)]
        p = Polynomial(poly_from_roots(list(reals), pairs, scale=float(rng.normal() or 1.0)))
        a, b = -3.0, 3.0
        got = count_distinct_real_roots(p, a, b)
        ref = count_roots_bisection(p, a, b, a - 0.5, b + 0.5, grid=8001)
        assert got == ref


# ---------------------------------------------------------------------------
# batched root counting
# ---------------------------------------------------------------------------


def test_batch_count_matches_scalar():
    rng = np.random.default_rng(509)
    rows = []
    expected = []
    for _ in range(400):
        deg = int(rng.integers(1, 11))
        n_real = int(rng.integers(0, deg + 1))
        if (deg - n_real) % 2 == 1:
            n_real += 1 if n_real < deg else -1
        reals = random_separated_roots(rng, n_real, -3.0, 3.0, 2e-3)
        pairs = [(rng.uniform(-3, 3), rng.uniform(0.05, 2.0)) for _ in range((deg - n_real) // 2)]
        c = poly_from_roots(list(reals), pairs, scale=float(rng.normal() or 1.0))
        rows.append(c)
        expected.append(count_distinct_real_roots(Polynomial(c), 0.25, 2.75))
    L = max(len(r) for r in rows)
    C = np.zeros((len(rows), L))
    for i, r in enumerate(rows):
        C[i, : len(r)] = r
    counts, degen = count_real_roots_batch(C, 0.25, 2.75)
    assert not degen.any()
    assert counts.tolist() == expected


def test_batch_count_flags_zero_and_degenerate_rows():
    C = np.zeros((3, 3))
    C[0] = [-2, 0, 1]                       # sqrt(2) inside (0, 2]
    C[1] = [0, 0, 0]                        # zero row
    C[2] = np.convolve([-1, 1], [-(1 + 1e-5), 1])  # gray-zone cascade
    counts, degen = count_real_roots_batch(C, 0.0, 2.0)
    assert counts[0] == 1
    assert not degen[0]
    assert degen[1]
    assert degen[2]


def test_batch_count_mixed_degrees():
    # rows of different effective degree exercise the grouping path
    C = np.zeros((4, 5))
    C[0, :2] = [-1.0, 1.0]            # t-1
    C[1, :3] = [-4.0, 0.0, 1.0]       # t^2-4
    C[2, :5] = [0.0, -1.0, 0.0, 0.0, 1.0]  # t^4 - t = t(t^3-1)
    C[3, 0] = 5.0                     # constant
    counts, degen = count_real_roots_batch(C, -3.0, 3.0)
    assert counts.tolist() == [1, 2, 2, 0]
    assert not degen.any()


# ---------------------------------------------------------------------------
# batch evaluation helpers
# ---------------------------------------------------------------------------


def test_eval_poly_batch():
    rng = np.random.default_rng(601)
    C = rng.normal(size=(5, 3, 6))
    ts = np.linspace(-1, 2, 9)
    out = eval_poly_batch(C, ts)
    assert out.shape == (5, 3, 9)
    for i in range(5):
        for a in range(3):
            p = Polynomial(C[i, a])
            assert np.allclose(out[i, a], p(ts), rtol=1e-12, atol=1e-12)


def test_derivative_coeffs_batch():
    rng = np.random.default_rng(607)
    C = rng.normal(size=(4, 6))
    D = derivative_coeffs(C, 2)
    ts = np.linspace(-1, 1, 7)
    vals = eval_poly_batch(D, ts)
    for i in range(4):
        assert np.allclose(vals[i], Polynomial(C[i]).derivative(2)(ts), rtol=1e-12, atol=1e-12)
