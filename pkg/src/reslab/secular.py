"""Resonance secular function of a graph in flower form, and Weyl / non-Weyl tests.

On edge j the solution is written as f(x) = A e^{ikx} + B e^{-ikx}; collecting
the vertex conditions for all amplitudes and for the outgoing lead waves gives
a square system whose determinant vanishes exactly at the resonances.

The determinant is divided by (2ik)^N. This removes the trivial zero at k = 0
coming from the degenerate basis there and makes the result equal to

    det[(U - I) C1(k) + ik (U + I) C2(k)] / k^N

for the usual sin/cos basis. Each column is scaled by its exponential growth
before the LU factorization, so values with |Im k| * V far beyond the float
range come back as (phase, log|F|) without overflow.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .graph import (FlowerForm, SingularInnerMatrix, effective_coupling,
                    apply_magnetic, is_permutation_symmetric, vertex_split)

SMALL_K = 0.5
# beyond |Im k| * V = DEEP the determinant loses digits to cancellation when
# the extremal coefficients vanish; the exponential-polynomial form takes over
DEEP = 8.0
EXPANSION_MAX_DETS = 300_000
ZERO_TOL = 1e-9


class ClassificationMismatch(RuntimeError):
    """Sampling test and structural test disagree."""


class SecularFunction:
    """k -> F(k) for a flower-form graph, evaluated as (phase, log|F|)."""

    def __init__(self, flower: FlowerForm):
        self.flower = flower
        U = flower.big_U
        I = np.eye(U.shape[0])
        self._Um = U - I
        self._Up = U + I
        self._N = flower.N
        self._lengths = flower.edge_lengths
        self._g = np.exp(-1j * flower.fluxes)
        self._expansion = None
        self._expansion_tried = False
        self._lock = threading.Lock()

    @property
    def expansion(self) -> "ExpandedSecular | None":
        """Exponential-polynomial form, or None when it would be too costly."""
        with self._lock:
            if not self._expansion_tried:
                try:
                    self._expansion = ExpandedSecular(self.flower)
                except ExpansionTooLarge:
                    self._expansion = None
                self._expansion_tried = True
        return self._expansion

    @property
    def total_length(self) -> float:
        return self.flower.total_length

    @property
    def phase_rate(self) -> float:
        # arg F turns at most at about V per unit k along a line away from zeros
        return max(1.0, self.flower.total_length)

    def phase_logmag(self, k):
        """Return (phase, log|F|) arrays for an array of k."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        phase = np.empty(k.shape, dtype=complex)
        logmag = np.empty(k.shape, dtype=float)
        small = np.abs(k) < SMALL_K
        deep = ~small & (np.abs(k.imag) * self.total_length > DEEP)
        if np.any(deep) and self.expansion is None:
            deep[:] = False
        rest = ~small & ~deep
        for mask, ev in ((small, self._eval_small), (rest, self._eval_exp),
                         (deep, lambda z: self._expansion.phase_logmag(z))):
            if np.any(mask):
                p, m = ev(k[mask])
                phase[mask] = p
                logmag[mask] = m
        return phase, logmag

    def __call__(self, k):
        """Plain complex values; may overflow for large |Im k|."""
        phase, logmag = self.phase_logmag(k)
        with np.errstate(over="ignore"):
            out = phase * np.exp(logmag)
        return out if np.ndim(k) else out[0]

    # exponential basis, scaled columns
    def _eval_exp(self, k):
        N = self._N
        Um, Up = self._Um, self._Up
        kk = k[:, None, None]
        P = Um[None] + kk * Up[None]
        Q = Um[None] - kk * Up[None]
        M = Q.copy()  # lead columns keep Q
        extra = np.zeros(k.shape)
        for j in range(N):
            a, b = 2 * j, 2 * j + 1
            z = k * self._lengths[j]
            sp = np.maximum(0.0, -z.imag)  # log of |e^{ikl}| where it exceeds 1
            sm = np.maximum(0.0, z.imag)
            ep = np.exp(1j * z - sp) * self._g[j]
            em = np.exp(-1j * z - sm) * self._g[j]
            colp = Q[:, :, a] * np.exp(-sp)[:, None] + ep[:, None] * P[:, :, b]
            colm = P[:, :, a] * np.exp(-sm)[:, None] + em[:, None] * Q[:, :, b]
            M[:, :, a] = colp
            M[:, :, b] = colm
            extra += sp + sm
        sign, logabs = np.linalg.slogdet(M)
        if N:
            w = 2j * k
            sign = sign * (np.abs(w) / w) ** N
            logabs = logabs + extra - N * np.log(np.abs(w))
        return sign, logabs

    # sin/cos basis with sin(kx)/k, regular at k = 0
    def _eval_small(self, k):
        N = self._N
        Um, Up = self._Um, self._Up
        kk = k[:, None, None]
        M = np.broadcast_to(Um[None] - kk * Up[None], (k.size,) + Um.shape).copy()
        for j in range(N):
            a, b = 2 * j, 2 * j + 1
            l = self._lengths[j]
            g = self._g[j]
            z = k * l
            sinc = l * np.sinc(z / np.pi)  # sin(kl)/k
            c = np.cos(z)
            s = np.sin(z)
            M[:, :, a] = (g * sinc)[:, None] * Um[None, :, b] + 1j * Up[None, :, a] \
                - 1j * (g * c)[:, None] * Up[None, :, b]
            M[:, :, b] = Um[None, :, a] + (g * c)[:, None] * Um[None, :, b] \
                + (1j * k * g * s)[:, None] * Up[None, :, b]
        return np.linalg.slogdet(M)


def secular_value(s: SecularFunction, k: complex):
    """(phase, log|F|) at a single k."""
    phase, logmag = s.phase_logmag(np.array([k]))
    return complex(phase[0]), float(logmag[0])


def expanded_value(flower: FlowerForm, k: complex) -> complex:
    """F(k) from the expansion in e^{+-ikl_j} (unscaled, moderate k only).

    Same normalization as SecularFunction: divided by k^N.
    """
    U = flower.big_U
    n = U.shape[0]
    N = flower.N
    I = np.eye(n)
    Um, Up = U - I, U + I
    E1 = np.zeros((n, n), dtype=complex)
    E2 = np.zeros((n, n), dtype=complex)
    E3 = np.zeros((n, n), dtype=complex)
    E4 = np.zeros((n, n), dtype=complex)
    for j in range(N):
        a, b = 2 * j, 2 * j + 1
        g = np.exp(-1j * flower.fluxes[j])
        ep = np.exp(1j * k * flower.edge_lengths[j]) * g
        em = np.exp(-1j * k * flower.edge_lengths[j]) * g
        E1[b, a], E1[b, b] = -1j * ep, ep
        E2[b, a], E2[b, b] = 1j * em, em
        E3[a, a] = 1j
        E4[a, b] = 1
    L = np.zeros((n, n))
    L[2 * N:, 2 * N:] = np.eye(n - 2 * N)
    M = 0.5 * (Um + k * Up) @ E1 + 0.5 * (Um - k * Up) @ E2 + k * Up @ E3 + Um @ E4 \
        + (Um - k * Up) @ L
    return complex(np.linalg.det(M) / k ** N)


class ExpansionTooLarge(RuntimeError):
    pass


def _length_groups(lengths, rtol=1e-12):
    """Edge indices grouped by equal length."""
    groups = []
    for j, l in enumerate(lengths):
        for g in groups:
            if abs(lengths[g[0]] - l) <= rtol * l:
                g.append(j)
                break
        else:
            groups.append([j])
    return groups


class ExponentialPolynomial:
    """F(k) = k^{-shift} sum_s e^{iks} Q_s(k) with polynomial Q_s.

    terms holds (s, ascending coefficients of Q_s). Evaluated term by term in
    log form, so the result keeps full relative accuracy wherever one term
    dominates, however large |Im k| is.
    """

    def __init__(self, terms, shift: int = 0):
        self.terms = [(float(s), np.asarray(c, dtype=complex)) for s, c in terms]
        self.shift = shift
        self._deg = [int(np.max(np.nonzero(c)[0])) for _, c in self.terms]

    @property
    def exponents(self):
        return [s for s, _ in self.terms]

    def phase_logmag(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        if not self.terms:
            return np.zeros(k.shape, dtype=complex), np.full(k.shape, -np.inf)
        logk = np.log(k)
        big = np.abs(k) >= 1
        u = np.where(big, 1 / np.where(big, k, 1), 0)
        logs = np.empty((len(self.terms), k.size), dtype=complex)
        for i, ((s, c), d) in enumerate(zip(self.terms, self._deg)):
            q = np.empty(k.shape, dtype=complex)
            # k^d * sum c_j u^{d-j} for |k| >= 1, plain Horner otherwise
            q[big] = np.polyval(c[:d + 1], u[big])
            q[~big] = np.polyval(c[:d + 1][::-1], k[~big])
            with np.errstate(divide="ignore"):
                lq = np.log(q)
            lq[big] += d * logk[big]
            logs[i] = lq + 1j * s * k - self.shift * logk
        m = np.max(logs.real, axis=0)
        tot = np.sum(np.exp(logs - m), axis=0)
        with np.errstate(divide="ignore"):
            return np.exp(1j * np.angle(tot)), m + np.log(np.abs(tot))

    def __call__(self, k):
        p, m = self.phase_logmag(k)
        out = p * np.exp(m)
        return out if np.ndim(k) else out[0]


def ExpandedSecular(flower: FlowerForm, max_dets: int = EXPANSION_MAX_DETS,
                    zero_tol: float = ZERO_TOL) -> ExponentialPolynomial:
    """Secular function as an exponential polynomial in k.

    The phases e^{ikl} of each group of equal-length edges are replaced by one
    free variable x on the unit circle, and k by a point on |k| = 1. The
    determinant is a Laurent polynomial in the x's (degree at most the group
    size) and a polynomial in k (degree at most the matrix size), so a
    multidimensional FFT over those samples gives every coefficient. Terms
    that cancel exactly for structural reasons come out at rounding level and
    are set to zero; they would otherwise dominate deep in the complex plane.
    """
    U = flower.big_U
    n = U.shape[0]
    N = flower.N
    I = np.eye(n)
    Um, Up = U - I, U + I
    groups = _length_groups(flower.edge_lengths)
    sizes = [2 * len(g) + 1 for g in groups]
    K = 1 << int(np.ceil(np.log2(n + 1)))
    total = K * int(np.prod(sizes))
    if total > max_dets:
        raise ExpansionTooLarge(f"{total} determinants needed")
    grids = np.meshgrid(np.arange(K), *[np.arange(m) for m in sizes], indexing="ij")
    kk = np.exp(2j * np.pi * grids[0].ravel() / K)
    xs = [np.exp(2j * np.pi * grids[i + 1].ravel() / m) for i, m in enumerate(sizes)]
    S = kk.size
    M = np.empty((S, n, n), dtype=complex)
    kc = kk[:, None]
    Ap = 0.5 * (Um[None] + kk[:, None, None] * Up[None])
    Am = 0.5 * (Um[None] - kk[:, None, None] * Up[None])
    lead = 2 * N
    M[:, :, lead:] = 2 * Am[:, :, lead:]
    for gi, g in enumerate(groups):
        x = xs[gi][:, None]
        for j in g:
            a, b = 2 * j, 2 * j + 1
            ph = np.exp(-1j * flower.fluxes[j])
            ep, em = x * ph, ph / x
            M[:, :, a] = -1j * ep * Ap[:, :, b] + 1j * em * Am[:, :, b] + 1j * kc * Up[None, :, a]
            M[:, :, b] = ep * Ap[:, :, b] + em * Am[:, :, b] + Um[None, :, a]
    D = np.linalg.det(M).reshape([K] + sizes)
    C = np.fft.fftn(D) / D.size
    amax = np.max(np.abs(C))
    C[np.abs(C) <= zero_tol * amax] = 0
    L = [flower.edge_lengths[g[0]] for g in groups]
    by_s = {}
    for idx in np.ndindex(*sizes):
        col = C[(slice(None),) + idx]
        if not np.any(col):
            continue
        e = [i if i <= len(groups[gi]) else i - sizes[gi] for gi, i in enumerate(idx)]
        s = float(sum(ei * li for ei, li in zip(e, L)))
        key = round(s, 9)
        if key in by_s:
            by_s[key] = (by_s[key][0], by_s[key][1] + col)
        else:
            by_s[key] = (s, col.copy())
    terms = []
    for s, col in sorted(by_s.values(), key=lambda t: t[0]):
        # cancellation between groups with commensurate lengths
        col[np.abs(col) <= zero_tol * amax] = 0
        if np.any(col):
            terms.append((s, col))
    return ExponentialPolynomial(terms, shift=N)


# ---------------------------------------------------------------------------
# extremal coefficients and classification

def extremal_coefficients(s: SecularFunction):
    """Evaluators for the coefficients of e^{ikV} (senior) and e^{-ikV} (junior).

    Both return nan where the inner lead matrix is singular.
    """
    flower = apply_magnetic(s.flower) if np.any(s.flower.fluxes) else s.flower
    N = flower.N
    I = np.eye(2 * N)

    def make(sign):
        def coef(k):
            try:
                Ut = effective_coupling(flower, k)
            except SingularInnerMatrix:
                return complex("nan")
            return complex((0.5j) ** N * np.linalg.det((Ut - I) + sign * k * (Ut + I)))
        return coef

    return make(+1), make(-1)


SAMPLE_K = np.array([0.137, 0.613, 1.091, 1.577, 2.063, 2.741,
                     0.173j, 0.529j, 0.887j, 1.241j, 1.603j, 1.949j])


@dataclass(frozen=True)
class Classification:
    kind: str  # "Weyl" or "NonWeyl"
    vertex: str | None = None
    branch: str | None = None  # "senior" ((1-k)/(1+k)) or "junior" ((1+k)/(1-k))

    @property
    def non_weyl(self) -> bool:
        return self.kind == "NonWeyl"


def _has_eigenvalue(flower, internal, leads, mu_of_k, tol):
    used = 0
    for k in SAMPLE_K:
        try:
            Ut = effective_coupling(flower, k, internal, leads)
        except SingularInnerMatrix:
            continue
        mu = mu_of_k(k)
        smin = np.linalg.svd(Ut - mu * np.eye(len(internal)), compute_uv=False)[-1]
        if smin > tol * max(1.0, abs(mu)):
            return False
        used += 1
    return used > 0


def _structural(flower):
    """Exact test for permutation-symmetric vertex couplings, or None."""
    U = flower.big_U
    verdict = None
    for vid, internal, leads in vertex_split(flower):
        idx = internal + leads
        Uv = U[np.ix_(idx, idx)]
        if not is_permutation_symmetric(Uv):
            return None
        p, q = len(internal), len(leads)
        if p == 0 or p != q:
            continue
        J = np.ones((2 * p, 2 * p)) / p
        if np.max(np.abs(Uv - (J - np.eye(2 * p)))) < 1e-10:
            verdict = verdict or vid
        elif np.max(np.abs(Uv - (-J + np.eye(2 * p)))) < 1e-10:
            verdict = verdict or vid
    return Classification("NonWeyl", verdict) if verdict else Classification("Weyl")


def classify_asymptotics(s: SecularFunction, tol: float = 1e-8) -> Classification:
    flower = apply_magnetic(s.flower) if np.any(s.flower.fluxes) else s.flower
    result = Classification("Weyl")
    for vid, internal, leads in vertex_split(flower):
        if not internal:
            continue
        if _has_eigenvalue(flower, internal, leads, lambda k: (1 - k) / (1 + k), tol):
            result = Classification("NonWeyl", vid, "senior")
            break
        if _has_eigenvalue(flower, internal, leads, lambda k: (1 + k) / (1 - k), tol):
            result = Classification("NonWeyl", vid, "junior")
            break
    exact = _structural(flower)
    if exact is not None and exact.kind != result.kind:
        raise ClassificationMismatch(
            f"sampled test says {result.kind}, structural test says {exact.kind}")
    return result
