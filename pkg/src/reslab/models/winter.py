"""s-wave delta-shell barrier of strength alpha at radius R.

Resonances solve 2k + i alpha (1 - e^{2ikR}) = 0. The propagator inside the
shell is expanded over the resonance states v_n(r) = sqrt 2 Q_n sin(k_n r),
n = +-1, +-2, ..., with k_{-n} = -conj(k_n), which gives the survival
probability of a state supported in [0, R] as a double sum over poles.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..numerics import erfcx_complex
from ..rootfind import ComplexRoot


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WinterModel:
    alpha: float = 500.0
    R: float = 1.0
    N: int = 200

    def __post_init__(self):
        if not (self.alpha > 0 and self.R > 0):
            raise ValueError("alpha and R must be positive")
        if self.N < 1:
            raise ValueError("truncation N must be at least 1")

    @property
    def period(self) -> float:
        return 2 * self.R ** 2 / np.pi

    def with_N(self, N: int) -> "WinterModel":
        return WinterModel(self.alpha, self.R, N)


def winter_condition(m: WinterModel, k):
    k = np.asarray(k, dtype=complex)
    return 2 * k + 1j * m.alpha * (1 - np.exp(2j * k * m.R))


def winter_kernel_denominator(m: WinterModel, k):
    """2k^2 + 2 alpha^2 sin^2 kR + 2 k alpha sin 2kR, the denominator of the
    spectral kernel; vanishes at the same fourth-quadrant points."""
    k = np.asarray(k, dtype=complex)
    a, R = m.alpha, m.R
    return 2 * k * k + 2 * a * a * np.sin(k * R) ** 2 + 2 * k * a * np.sin(2 * k * R)


def _newton(m: WinterModel, k: complex, tol: float = 1e-15, maxit: int = 50):
    a, R = m.alpha, m.R
    step = np.inf
    for _ in range(maxit):
        e = np.exp(2j * k * R)
        F = 2 * k + 1j * a * (1 - e)
        dF = 2 + 2 * a * R * e
        delta = F / dF
        k -= delta
        step = abs(delta)
        if step < tol * max(1.0, abs(k)):
            break
    return k, step


def winter_poles(m: WinterModel, n_range) -> list:
    """Fourth-quadrant zeros k_n for the given n >= 1, by fixed point then Newton."""
    a, R = m.alpha, m.R
    out = []
    for n in n_range:
        if n < 1:
            raise ValueError("pole index starts at 1")
        k = complex(n * np.pi / R)
        for _ in range(60):
            k_new = n * np.pi / R + np.log(1 - 2j * k / a) / (2j * R)
            if abs(k_new - k) < 1e-14 * abs(k):
                k = k_new
                break
            k = k_new
        k, step = _newton(m, k)
        if not (k.real > 0 and k.imag < 0):
            raise ArithmeticError(f"pole {n} left the fourth quadrant: {k}")
        out.append(ComplexRoot(complex(k), 1, float(step), (float(step), float(step))))
    return out


def winter_pole_expansion(m: WinterModel, n) -> complex:
    """Large-alpha expansion around the hard-shell momenta n pi / R."""
    k0 = n * np.pi / m.R
    aR = m.alpha * m.R
    return k0 - k0 / aR + k0 / aR ** 2 - 1j * k0 ** 2 / (m.alpha ** 2 * m.R)


# ---------------------------------------------------------------------------
# resonance expansion

def _Q(m: WinterModel, k):
    a, R = m.alpha, m.R
    s2, c2 = np.sin(2 * k * R), np.cos(2 * k * R)
    den = 2 * k + a * a * R * s2 + a * s2 + 2 * k * a * R * c2
    return np.sqrt(-2j * k * k / den)


def _all_momenta(m: WinterModel):
    kp = np.array([r.location for r in winter_poles(m, range(1, m.N + 1))])
    return np.concatenate([kp, -np.conj(kp)])


def expansion_data(m: WinterModel):
    """(k, C, I) for n = 1..N followed by -1..-N, for the profile sqrt 3 R^{-3/2} r."""
    R = m.R
    k = _all_momenta(m)
    Q = _Q(m, k)
    C = np.sqrt(6) * R ** -1.5 * Q * (np.sin(k * R) / k ** 2 - R * np.cos(k * R) / k)
    a = k[:, None] - np.conj(k)[None, :]
    b = k[:, None] + np.conj(k)[None, :]
    I = Q[:, None] * np.conj(Q)[None, :] * (_sin_over(a, R) - _sin_over(b, R))
    return k, C, I


def _sin_over(x, R):
    """sin(xR)/x with the removable point at x = 0."""
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    return np.where(small, R, np.sin(xs * R) / xs)


def _M(k, t):
    u = -np.exp(-0.25j * np.pi) * k * np.sqrt(t)
    return 0.5 * erfcx_complex(u)


def _survival(k, C, I, times, block: int = 512):
    times = np.asarray(times, dtype=float)
    out = np.empty(times.shape)
    for s in range(0, times.size, block):
        t = times[s:s + block]
        X = C[None, :] * _M(k[None, :], t[:, None])
        out[s:s + block] = np.real(np.einsum("ij,ij->i", X @ I, np.conj(X)))
    return out


def winter_decay_law(m: WinterModel, times, tol: float = 1e-4):
    """P(t) for the initial profile sqrt 3 R^{-3/2} r on [0, R].

    Returns (P, err) with err = |P_N - P_{N/2}|; a TruncationWarning is
    issued where err exceeds tol.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    k, C, I = expansion_data(m)
    P = _survival(k, C, I, times)
    h = max(1, m.N // 2)
    sel = np.r_[0:h, m.N:m.N + h]
    P_half = _survival(k[sel], C[sel], I[np.ix_(sel, sel)], times)
    err = np.abs(P - P_half)
    if np.any(err > tol):
        warnings.warn(f"truncation N={m.N}: |P_N - P_N/2| reaches {err.max():.3g}",
                      TruncationWarning, stacklevel=2)
    return P, err


def winter_current(m: WinterModel, times):
    """dP/dt computed term by term, dM/dt = (-i k^2 M - ... ) in closed form.

    Uses d/dt [1/2 erfcx(u)] with u = -e^{-i pi/4} k sqrt t:
    erfcx'(u) = 2u erfcx(u) - 2/sqrt(pi).
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("the current needs t > 0")
    k, C, I = expansion_data(m)
    out = np.empty(times.shape)
    for i, t in enumerate(times):
        u = -np.exp(-0.25j * np.pi) * k * np.sqrt(t)
        E = erfcx_complex(u)
        M = 0.5 * E
        dM = 0.5 * (2 * u * E - 2 / np.sqrt(np.pi)) * u / (2 * t)
        x, dx = C * M, C * dM
        out[i] = 2 * np.real(dx @ I @ np.conj(x))
    return out
