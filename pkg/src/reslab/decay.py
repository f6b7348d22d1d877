"""Reduced propagators, pole approximation and decay laws.

For a one-dimensional unstable subspace spanned by psi the reduced propagator
is v(t) = int e^{-i lam t} d(psi, E_lam psi), and the decay law is |v(t)|^2.
The Fourier integral is split at the breakpoints of the density and each
piece goes to QUADPACK's cosine/sine-weighted rules, so large t does not
need a fine grid.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .models import friedrichs as fr
from .models import twochannel as tc


class DecayError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralDensity:
    """Absolutely continuous part lam -> density(lam) on support, plus point masses.

    breakpoints mark narrow features (resonance peaks, thresholds) where the
    quadrature should split.
    """
    density: object
    support: tuple = (0.0, np.inf)
    point_masses: tuple = ()
    breakpoints: tuple = ()

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise ValueError("empty support")
        pts = sorted(float(p) for p in self.breakpoints if lo < p < hi)
        object.__setattr__(self, "breakpoints", tuple(pts))
        object.__setattr__(self, "point_masses",
                           tuple((float(x), float(w)) for x, w in self.point_masses))

    def _scalar(self, x):
        return float(np.asarray(self.density(np.array([x])))[0])

    def pieces(self):
        lo, hi = self.support
        edges = [lo, *self.breakpoints, hi]
        return list(zip(edges[:-1], edges[1:]))

    def normalization(self, epsabs: float = 1e-10) -> tuple:
        """(total mass, error estimate)."""
        total, err = 0.0, 0.0
        for a, b in self.pieces():
            v, e = integrate.quad(self._scalar, a, b, epsabs=epsabs, epsrel=1e-10, limit=500)
            total += v
            err += e
        total += sum(w for _, w in self.point_masses)
        return total, err

    def check_normalized(self, tol: float = 1e-6):
        total, err = self.normalization()
        if abs(total - 1) > tol + err:
            raise DecayError(f"spectral measure has total mass {total}, not 1")
        return total


@dataclass(frozen=True)
class DecayLawSamples:
    times: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly ascending")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "errors", np.asarray(self.errors, dtype=float))
        if self.values.shape != t.shape or self.errors.shape != t.shape:
            raise ValueError("times, values and errors must have equal length")


# ---------------------------------------------------------------------------
# Fourier integral of the density

SLOW_T = 0.05  # below this the first QAWF cycle is done by plain quadrature


def _qawf(f, a, b, t, epsabs):
    """Semi-infinite piece by QUADPACK's Fourier-integral rule."""
    if np.isfinite(a):  # [a, inf): substitute lam = a + x
        def g(x):
            return f(a + x)
        c, ec = integrate.quad(g, 0, np.inf, weight="cos", wvar=t, epsabs=epsabs, limlst=100)
        s, es = integrate.quad(g, 0, np.inf, weight="sin", wvar=t, epsabs=epsabs, limlst=100)
        return complex(c, -s) * np.exp(-1j * a * t), ec + es
    # (-inf, b]: lam = b - x
    def h(x):
        return f(b - x)
    c, ec = integrate.quad(h, 0, np.inf, weight="cos", wvar=t, epsabs=epsabs, limlst=100)
    s, es = integrate.quad(h, 0, np.inf, weight="sin", wvar=t, epsabs=epsabs, limlst=100)
    return complex(c, s) * np.exp(-1j * b * t), ec + es


def _fourier_piece(f, a, b, t, epsabs, limit):
    """int_a^b e^{-i lam t} f(lam) d lam for finite a or b (not both infinite)."""
    if t == 0:
        v, e = integrate.quad(f, a, b, epsabs=epsabs, epsrel=1e-10, limit=limit)
        return complex(v), e
    if np.isfinite(a) and np.isfinite(b):
        c, ec = integrate.quad(f, a, b, weight="cos", wvar=t, epsabs=epsabs, limit=limit)
        s, es = integrate.quad(f, a, b, weight="sin", wvar=t, epsabs=epsabs, limit=limit)
        return complex(c, -s), ec + es
    if t >= SLOW_T:
        return _qawf(f, a, b, t, epsabs)
    # QAWF goes wrong when f is concentrated inside its first cycle of length
    # 2 pi / t; do that cycle by plain quadrature and QAWF only the far tail
    L = 2 * np.pi / t
    lo, hi = (a, a + L) if np.isfinite(a) else (b - L, b)
    # geometric breakpoints away from the finite end keep the mass resolved
    steps = np.geomspace(0.1, L, max(2, int(np.log(10 * L) / np.log(4)) + 1))[:-1]
    pts = a + steps if np.isfinite(a) else b - steps
    c, ec = integrate.quad(lambda x: f(x) * np.cos(t * x), lo, hi, points=pts,
                           epsabs=epsabs, epsrel=1e-10, limit=limit)
    s, es = integrate.quad(lambda x: f(x) * np.sin(t * x), lo, hi, points=pts,
                           epsabs=epsabs, epsrel=1e-10, limit=limit)
    tail, et = _qawf(f, hi, b, t, epsabs) if np.isfinite(a) else _qawf(f, a, lo, t, epsabs)
    return complex(c, -s) + tail, ec + es + et


def reduced_propagator(d: SpectralDensity, t, epsabs: float = 1e-11,
                       limit: int = 400):
    """v(t) = int e^{-i lam t} density + sum_j w_j e^{-i lam_j t}; returns (v, err)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    f = d._scalar
    v = np.zeros(t.shape, dtype=complex)
    err = np.zeros(t.shape)
    for i, ti in enumerate(t):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                for a, b in d.pieces():
                    if not np.isfinite(a) and not np.isfinite(b):
                        raise ValueError("split the real line with a breakpoint")
                    val, e = _fourier_piece(f, a, b, ti, epsabs, limit)
                    v[i] += val
                    err[i] += e
            except integrate.IntegrationWarning as w:
                raise DecayError(f"quadrature failed at t = {ti}: {w}") from None
        for x, wgt in d.point_masses:
            v[i] += wgt * np.exp(-1j * x * ti)
    return v, err


def pole_approximation(A: complex, zp: complex, t):
    """A e^{-i z_p t}."""
    if complex(zp).imag >= 0:
        raise ValueError("pole must lie in the lower half-plane")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    return A * np.exp(-1j * complex(zp) * t)


def decay_law(d: SpectralDensity, times, method: str = "spectral") -> DecayLawSamples:
    v, err = reduced_propagator(d, times)
    return DecayLawSamples(np.asarray(times, dtype=float), np.abs(v) ** 2,
                           2 * np.abs(v) * err + err ** 2, method)


# ---------------------------------------------------------------------------
# model densities

def breit_wigner_density(lam0: float, gamma: float) -> SpectralDensity:
    def rho(x):
        x = np.asarray(x, dtype=float)
        return gamma / (2 * np.pi) / ((x - lam0) ** 2 + 0.25 * gamma ** 2)
    pts = [lam0 + s * gamma for s in (-50, -5, -0.5, 0.0, 0.5, 5, 50)]
    return SpectralDensity(rho, (-np.inf, np.inf), (), pts)


def _peak_points(center: float, width: float, lo: float = -np.inf):
    pts = [center + s * width for s in (-200, -20, -3, -0.5, 0, 0.5, 3, 20, 200)]
    return [p for p in pts if p > lo]


def friedrichs_spectral_density(m: fr.FriedrichsModel, g: float | None = None):
    g = m.g if g is None else g
    zp = fr.friedrichs_pole(m, g).location if g != 0 else complex(m.lambda0)
    width = max(-zp.imag, 1e-12)
    pts = _peak_points(zp.real, width, 0.0)
    return SpectralDensity(lambda x: fr.friedrichs_density(m, x, g), (0.0, np.inf),
                           tuple(fr.friedrichs_bound_states(m, g)), tuple(pts))


def twochannel_spectral_density(m: tc.TwoChannelModel) -> SpectralDensity:
    pts = [m.E]
    for p in tc.twochannel_poles(m):
        if p.kind == "resonance" and p.k.real > 0:
            pts += _peak_points(p.energy.real, max(-p.energy.imag, 1e-12), 0.0)
    return SpectralDensity(lambda x: tc.twochannel_density(m, x), (0.0, np.inf),
                           tuple(tc.twochannel_bound_states(m)), tuple(pts))


def twochannel_decay_law(m: tc.TwoChannelModel, times,
                         method: str = "poles") -> DecayLawSamples:
    """Survival probability of the second-channel eigenstate.

    "poles": two pole terms plus the background integral, leading order in
    |c|; "spectral": Fourier transform of the exact spectral density.
    """
    times = np.asarray(times, dtype=float)
    if m.c2 == 0:
        return DecayLawSamples(times, np.ones_like(times), np.zeros_like(times), method)
    if method == "poles":
        v, err = tc.twochannel_amplitude(m, times)
    elif method == "spectral":
        v, err = reduced_propagator(twochannel_spectral_density(m), times)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DecayLawSamples(times, np.abs(v) ** 2, 2 * np.abs(v) * err + err ** 2, method)


# ---------------------------------------------------------------------------
# smoothing

def smoothed_log_derivative(samples: DecayLawSamples, window: float) -> DecayLawSamples:
    """d ln P / dt by central differences, averaged over a boxcar of given width.

    Needs a uniform time grid. Near the ends the average runs over the part of
    the window inside the grid.
    """
    t = samples.times
    if t.size < 3:
        raise ValueError("need at least three samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(1.0, abs(t[-1])):
        raise ValueError("smoothing needs a uniform time grid")
    h = dt[0]
    if window < h:
        raise ValueError("window must exceed the grid step")
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = np.log(samples.values)
    d = np.gradient(lp, h)
    n = max(1, int(round(window / h)))
    kernel = np.ones(n)
    num = np.convolve(d, kernel, mode="same")
    den = np.convolve(np.ones_like(d), kernel, mode="same")
    return DecayLawSamples(t, num / den, np.zeros_like(t), samples.method + "+smoothed-logderiv",
                           {"window": float(window)})
