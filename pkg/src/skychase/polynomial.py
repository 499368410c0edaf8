"""Univariate polynomial algebra: exact evaluation, derivative-energy Gram
matrices, and Sturm-chain root counting.

Coefficients are stored in ascending degree order (``coeffs[i]`` multiplies
``t**i``). Construction normalizes the representation by stripping trailing
(highest-degree) coefficients whose magnitude falls below 1e-12 of the largest
coefficient, always keeping at least the constant term.

Root counting uses Sturm chains with a fixed tolerance ladder:

* trailing-coefficient strip inside chains at 1e-12 relative to the
  unit-scaled chain elements,
* every chain element rescaled to unit max-abs coefficient before the next
  division (positive rescaling preserves sign variations),
* an endpoint value whose magnitude is below 1e-10 times the local evaluation
  scale (sum of |c_i|*|x|^i) is treated as an exact zero and skipped in the
  variation count,
* a remainder whose max-abs coefficient lands in [1e-12, 1e-10) is too small
  to trust and too large to call an exact common-factor termination; the
  cascade is declared degenerate.

With that convention, ``V(a) - V(b)`` counts distinct real roots on the
half-open interval (a, b]: a simple root exactly at ``b`` is included, one
exactly at ``a`` is excluded.

The same division kernel runs two ways: a vectorized lockstep over batches of
polynomials whose chains follow the generic degree-drops-by-one pattern, and
a general single-row path. Batch rows that deviate from the generic pattern
are recomputed individually by the single-row path, so both routes agree by
construction.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateChain, ZeroPolynomial

STRIP_REL = 1e-12    # trailing-coefficient strip, relative to max-abs coefficient
ZERO_EPS = 1e-12     # remainder below this (unit chain scale): exact-zero termination
DEGEN_EPS = 1e-10    # remainder below this but above ZERO_EPS: untrusted cascade
SIGN_EPS = 1e-10     # endpoint sign considered zero below SIGN_EPS * local scale


def _normalize_coeffs(raw) -> np.ndarray:
    a = np.asarray(raw, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("polynomial needs at least one coefficient")
    if not np.all(np.isfinite(a)):
        raise ValueError("polynomial coefficients must be finite")
    m = float(np.max(np.abs(a)))
    if m == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(a) > STRIP_REL * m)[0]
    return a[: keep[-1] + 1].copy()


class Polynomial:
    """Real univariate polynomial with ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = _normalize_coeffs(coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in self.coeffs[::-1]:
            out = out * t + c
        if out.ndim == 0:
            return float(out)
        return out

    def derivative(self, k: int = 1) -> "Polynomial":
        if k < 0:
            raise ValueError("derivative order must be >= 0")
        c = self.coeffs
        for _ in range(k):
            if c.size == 1:
                c = np.zeros(1)
                break
            c = c[1:] * np.arange(1, c.size)
        return Polynomial(c)

    def shift(self, dt: float) -> "Polynomial":
        """Return q with q(t) = p(t + dt)."""
        n = self.coeffs.size
        out = np.zeros(n)
        for i, a in enumerate(self.coeffs):
            if a == 0.0:
                continue
            powers = a * np.array([dt ** (i - j) * math.comb(i, j) for j in range(i + 1)])
            out[: i + 1] += powers
        return Polynomial(out)

    def _binary(self, other, sign: float) -> "Polynomial":
        oc = other.coeffs if isinstance(other, Polynomial) else np.atleast_1d(float(other))
        n = max(self.coeffs.size, oc.size)
        out = np.zeros(n)
        out[: self.coeffs.size] = self.coeffs
        out[: oc.size] += sign * oc
        return Polynomial(out)

    def __add__(self, other):
        return self._binary(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __rsub__(self, other):
        return (-self)._binary(other, 1.0)

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs.size == other.coeffs.size and bool(
            np.all(self.coeffs == other.coeffs)
        )

    __hash__ = None

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def gram_matrix(m: int, k: int, T: float) -> np.ndarray:
    """Energy matrix of the k-th derivative of the monomial basis on [0, T].

    Entry (i, j) is the integral over [0, T] of the product of the k-th
    derivatives of t**i and t**j, so that for coefficients ``p`` the quadratic
    form ``p @ G @ p`` equals the integral of the squared k-th derivative.
    """
    if T <= 0:
        raise ValueError("interval length T must be positive")
    if m < 0 or k < 0:
        raise ValueError("m and k must be non-negative")
    ff = np.array([math.perm(i, k) if i >= k else 0 for i in range(m + 1)], dtype=float)
    G = np.zeros((m + 1, m + 1))
    for i in range(k, m + 1):
        for j in range(k, m + 1):
            e = i + j - 2 * k
            G[i, j] = ff[i] * ff[j] * T ** (e + 1) / (e + 1)
    return G


# ---------------------------------------------------------------------------
# Sturm chains
# ---------------------------------------------------------------------------


def _chain_single(c: np.ndarray) -> tuple[list[np.ndarray], bool]:
    """Build the normalized Sturm chain of one polynomial.

    ``c`` must be stripped (normalized representation) and nonzero. Returns
    the chain (each element unit max-abs) and a degenerate flag: True when a
    remainder fell into the untrusted gray zone.
    """
    c0 = c / np.max(np.abs(c))
    chain = [c0]
    if c0.size <= 1:
        return chain, False
    d = c0[1:] * np.arange(1, c0.size)
    chain.append(d / np.max(np.abs(d)))
    while chain[-1].size > 1:
        F, G = chain[-2], chain[-1]
        dF, dG = F.size - 1, G.size - 1
        R = F.copy()
        glead = G[-1]
        for k in range(dF - dG + 1):
            q = R[dF - k] / glead
            R[dF - k - dG : dF - k] -= q * G[:dG]
            R[dF - k] = 0.0
        nxt = -R[:dG]
        m = float(np.max(np.abs(nxt)))
        if m < ZERO_EPS:
            return chain, False  # exact common-factor termination
        if m < DEGEN_EPS:
            return chain, True  # gray zone: cascade underflowed the trust tolerance
        keep = np.nonzero(np.abs(nxt) > STRIP_REL * m)[0]
        chain.append(nxt[: keep[-1] + 1] / m)
    return chain, False


def sturm_chain(p: Polynomial) -> list[Polynomial]:
    """Normalized Sturm sequence of ``p`` (each element a positive rescale of
    the textbook sequence p0 = p, p1 = p', p_{i+1} = -rem(p_{i-1}, p_i))."""
    if p.is_zero():
        raise ZeroPolynomial("Sturm chain of the zero polynomial is undefined")
    chain, degen = _chain_single(p.coeffs)
    if degen:
        raise DegenerateChain("remainder cascade underflowed the trust tolerance")
    return [Polynomial(c) for c in chain]


def _eval_with_scale(c: np.ndarray, x: float) -> tuple[float, float]:
    v = 0.0
    s = 0.0
    ax = abs(x)
    for coef in c[::-1]:
        v = v * x + coef
        s = s * ax + abs(coef)
    return v, s


def _sign_at(c: np.ndarray, x: float) -> int:
    if math.isinf(x):
        lead = c[-1]
        s = 1 if lead > 0 else (-1 if lead < 0 else 0)
        if x < 0 and (c.size - 1) % 2 == 1:
            s = -s
        return s
    v, scale = _eval_with_scale(c, x)
    if abs(v) <= SIGN_EPS * scale:
        return 0
    return 1 if v > 0 else -1


def _variations(chain: list[np.ndarray], x: float) -> int:
    last = 0
    var = 0
    for c in chain:
        s = _sign_at(c, x)
        if s == 0:
            continue
        if last != 0 and s != last:
            var += 1
        last = s
    return var


def count_distinct_real_roots(p: Polynomial, a: float, b: float) -> int:
    """Number of distinct real roots of ``p`` on the half-open interval (a, b].

    Endpoints may be +-inf. Raises ZeroPolynomial for the zero polynomial and
    DegenerateChain when the remainder cascade cannot be trusted.
    """
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    if p.is_zero():
        raise ZeroPolynomial("root count of the zero polynomial is undefined")
    chain, degen = _chain_single(p.coeffs)
    if degen:
        raise DegenerateChain("remainder cascade underflowed the trust tolerance")
    return _variations(chain, a) - _variations(chain, b)


# ---------------------------------------------------------------------------
# Batched root counting (vectorized lockstep with single-row fallback)
# ---------------------------------------------------------------------------


def _eval_scale_batch(E: np.ndarray, x: float) -> tuple[np.ndarray, np.ndarray]:
    B = E.shape[0]
    v = np.zeros(B)
    s = np.zeros(B)
    ax = abs(x)
    for i in range(E.shape[1] - 1, -1, -1):
        col = E[:, i]
        v = v * x + col
        s = s * ax + np.abs(col)
    return v, s


def _variations_batch(chain: list[np.ndarray], lengths: np.ndarray, x: float) -> np.ndarray:
    B = chain[0].shape[0]
    last = np.zeros(B, dtype=np.int8)
    var = np.zeros(B, dtype=np.int64)
    for idx, E in enumerate(chain):
        if math.isinf(x):
            lead = E[:, -1]
            s = np.sign(lead).astype(np.int8)
            if x < 0 and (E.shape[1] - 1) % 2 == 1:
                s = -s
        else:
            v, sc = _eval_scale_batch(E, x)
            s = np.where(np.abs(v) <= SIGN_EPS * sc, 0, np.sign(v)).astype(np.int8)
        s = np.where(idx < lengths, s, np.int8(0))
        flip = (s != 0) & (last != 0) & (s != last)
        var += flip
        last = np.where(s != 0, s, last)
    return var


def _count_group_lockstep(C: np.ndarray, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Chains for rows sharing one effective degree; returns (counts, exile mask)."""
    B, L = C.shape
    if L == 1:
        return np.zeros(B, dtype=np.int64), np.zeros(B, dtype=bool)
    chain = [C]
    deriv = C[:, 1:] * np.arange(1, L)
    chain.append(deriv / np.max(np.abs(deriv), axis=1, keepdims=True))
    term = np.zeros(B, dtype=np.int64)  # 0 = still running, else chain length
    bad = np.zeros(B, dtype=bool)
    while chain[-1].shape[1] > 1:
        F, G = chain[-2], chain[-1]
        dF, dG = F.shape[1] - 1, G.shape[1] - 1
        R = F.copy()
        inert = (term > 0) | bad
        glead = np.where(inert | (G[:, -1] == 0.0), 1.0, G[:, -1])
        for k in range(dF - dG + 1):
            q = R[:, dF - k] / glead
            R[:, dF - k - dG : dF - k] -= q[:, None] * G[:, :dG]
            R[:, dF - k] = 0.0
        nxt = -R[:, :dG]
        nxt[inert] = 0.0
        m = np.max(np.abs(nxt), axis=1)
        active = ~inert
        zero_rem = active & (m < ZERO_EPS)
        gray = active & ~zero_rem & (m < DEGEN_EPS)
        dev = active & ~zero_rem & ~gray & (np.abs(nxt[:, -1]) <= STRIP_REL * m)
        term[zero_rem] = len(chain)
        bad |= gray | dev
        nxt = nxt / np.where(m > 0.0, m, 1.0)[:, None]
        nxt[(term > 0) | bad] = 0.0
        chain.append(nxt)
    lengths = np.where(term > 0, term, len(chain))
    counts = _variations_batch(chain, lengths, a) - _variations_batch(chain, lengths, b)
    return counts, bad


def count_real_roots_batch(coeffs: np.ndarray, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Distinct-real-root counts on (a, b] for a batch of polynomials.

    ``coeffs`` has shape (B, L), ascending degree per row. Returns an integer
    count per row and a boolean mask marking rows whose cascade degenerated
    (their count is unreliable and reported as 0; callers treat such rows
    conservatively). Rows that normalize to the zero polynomial are also
    flagged degenerate rather than raising, so one bad row cannot poison a
    batch.
    """
    if not a < b:
        raise ValueError("interval must satisfy a < b")
    C = np.asarray(coeffs, dtype=float)
    if C.ndim != 2:
        raise ValueError("expected a 2-D coefficient batch")
    B, L = C.shape
    counts = np.zeros(B, dtype=np.int64)
    degen = np.zeros(B, dtype=bool)

    maxabs = np.max(np.abs(C), axis=1)
    zero_rows = maxabs == 0.0
    degen |= zero_rows

    # effective degree per row after trailing strip
    eff = np.zeros(B, dtype=np.int64)
    live = ~zero_rows
    if np.any(live):
        thr = STRIP_REL * maxabs[live, None]
        sig = np.abs(C[live]) > thr
        eff[live] = L - 1 - np.argmax(sig[:, ::-1], axis=1)

    exiles: list[int] = []
    for d in np.unique(eff[live]):
        idx = np.nonzero(live & (eff == d))[0]
        sub = C[idx, : d + 1] / maxabs[idx, None]
        c, ex = _count_group_lockstep(sub, a, b)
        counts[idx] = c
        exiles.extend(idx[ex].tolist())

    for i in exiles:
        row = _normalize_coeffs(C[i])
        chain, dg = _chain_single(row)
        if dg:
            degen[i] = True
            counts[i] = 0
        else:
            counts[i] = _variations(chain, a) - _variations(chain, b)
    return counts, degen


def eval_poly_batch(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Horner evaluation of a coefficient batch.

    ``coeffs`` has shape (..., L); ``t`` has shape (T,). Returns an array of
    shape (..., T).
    """
    C = np.asarray(coeffs, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(C.shape[:-1] + t.shape)
    for i in range(C.shape[-1] - 1, -1, -1):
        out = out * t + C[..., i, None]
    return out


def derivative_coeffs(coeffs: np.ndarray, k: int = 1) -> np.ndarray:
    """k-th derivative of a coefficient batch along the last axis."""
    C = np.asarray(coeffs, dtype=float)
    for _ in range(k):
        if C.shape[-1] == 1:
            return np.zeros(C.shape[:-1] + (1,))
        C = C[..., 1:] * np.arange(1, C.shape[-1])
    return C
