"""Friedrichs model: a discrete level lambda0 coupled to a continuum on (0, inf).

The form factor is v(z) = p(z) e^{-sigma z} with a real polynomial p, so that
f(z) = v(z)^2 = P(z) e^{-a z} (P = p^2, a = 2 sigma) is entire. The Cauchy
integral of f is then available in closed form through the exponential
integral:

    J(z) = int_0^inf f(xi)/(z - xi) dxi = -P(z) e^{-az} E1(-az) - G(z),

where G is the polynomial int_0^inf (P(xi) - P(z))/(xi - z) e^{-a xi} dxi.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import optimize, special

from ..numerics import QuadratureSpec, integrate_semi_infinite, principal_value
from ..rootfind import ComplexRoot


class FriedrichsDivergence(RuntimeError):
    def __init__(self, msg, last):
        super().__init__(f"{msg} (last iterate {last})")
        self.last = last


@dataclass(frozen=True)
class FriedrichsModel:
    lambda0: float = 1.0
    sigma: float = 1.0
    poly: tuple = (0.0, 1.0)  # ascending coefficients of p
    g: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not any(self.poly):
            raise ValueError("form-factor polynomial vanishes identically")

    @property
    def a(self) -> float:
        return 2.0 * self.sigma

    @property
    def P(self) -> np.ndarray:
        return npoly.polymul(self.poly, self.poly)

    def with_g(self, g: float) -> "FriedrichsModel":
        return FriedrichsModel(self.lambda0, self.sigma, self.poly, g)

    def v(self, z):
        z = np.asarray(z, dtype=complex)
        return npoly.polyval(z, self.poly) * np.exp(-self.sigma * z)

    def f(self, z):
        """v(z)^2, continued as an entire function."""
        z = np.asarray(z, dtype=complex)
        return npoly.polyval(z, self.P) * np.exp(-self.a * z)

    def df(self, z):
        z = np.asarray(z, dtype=complex)
        P = self.P
        return (npoly.polyval(z, npoly.polyder(P)) - self.a * npoly.polyval(z, P)) \
            * np.exp(-self.a * z)

    # polynomial part G(z) of the Cauchy integral
    def _G_coeffs(self) -> np.ndarray:
        P, a = self.P, self.a
        out = np.zeros(max(len(P) - 1, 1))
        for j in range(1, len(P)):
            for i in range(j):
                out[j - 1 - i] += P[j] * factorial(i) / a ** (i + 1)
        return out


# ---------------------------------------------------------------------------
# Cauchy integral

def _expi_scaled(x):
    """e^{-x} Ei(x) for real x > 0, without overflow for large x."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    small = x <= 40.0
    out[small] = np.exp(-x[small]) * special.expi(x[small])
    xb = x[~small]
    if xb.size:
        # asymptotic series sum n!/x^{n+1}, truncated well before its smallest term
        term = 1.0 / xb
        acc = term.copy()
        for n in range(1, 30):
            term = term * n / xb
            acc += term
        out[~small] = acc
    return out


def _e1_scaled(u):
    """e^{u} E1(u) for complex u off the negative real axis."""
    u = np.asarray(u, dtype=complex)
    out = np.empty(u.shape, dtype=complex)
    small = np.abs(u) <= 40.0
    out[small] = np.exp(u[small]) * special.exp1(u[small])
    ub = u[~small]
    if ub.size:
        term = 1.0 / ub
        acc = term.copy()
        for n in range(1, 30):
            term = -term * n / ub
            acc += term
        # Stokes term, exponentially small except near the negative axis
        neg = ub.real < 0
        acc[neg] -= 1j * np.pi * np.sign(ub.imag[neg]) * np.exp(ub[neg])
        out[~small] = acc
    return out


def _J_closed(m: FriedrichsModel, z):
    """J(z) off the cut [0, inf)."""
    z = np.asarray(z, dtype=complex)
    P = npoly.polyval(z, m.P)
    return -P * _e1_scaled(-m.a * z) - npoly.polyval(z, m._G_coeffs())


def _dJ_closed(m: FriedrichsModel, z):
    z = np.asarray(z, dtype=complex)
    P = npoly.polyval(z, m.P)
    dP = npoly.polyval(z, npoly.polyder(m.P))
    E = _e1_scaled(-m.a * z)
    return (m.a * P - dP) * E + P / z - npoly.polyval(z, npoly.polyder(m._G_coeffs()))


def friedrichs_I(m: FriedrichsModel, lam, method: str = "closed",
                 spec: QuadratureSpec = QuadratureSpec()):
    """Principal value of int_0^inf f(xi)/(lam - xi) dxi for lam > 0."""
    if method == "closed":
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("I(lambda) needs lambda > 0")
        P = npoly.polyval(lam, m.P)
        return P * _expi_scaled(m.a * lam) \
            - npoly.polyval(lam, m._G_coeffs())
    if method == "quadrature":
        def fr(x):
            return float(np.real(m.f(x)))
        val, _ = principal_value(fr, float(lam), 0.0, np.inf, spec=spec)
        return -val  # 1/(lam - xi) = -1/(xi - lam)
    raise ValueError(f"unknown method {method!r}")


def friedrichs_J(m: FriedrichsModel, z: complex, method: str = "closed",
                 spec: QuadratureSpec = QuadratureSpec()) -> complex:
    """Cauchy integral J(z) for Im z != 0 or z < 0."""
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise ValueError("J(z) is singular on [0, inf); use friedrichs_I")
    if method == "closed":
        return complex(_J_closed(m, z))
    if method == "quadrature":
        val, _ = integrate_semi_infinite(lambda x: m.f(x) / (z - x), 0.0, spec)
        return complex(val)
    raise ValueError(f"unknown method {method!r}")


def friedrichs_w(m: FriedrichsModel, z, sheet: str = "upper", g: float | None = None):
    """w(z, g) on the physical sheet ("upper") or continued across (0, inf).

    Real z > 0 returns the boundary value from above,
    lambda0 + g^2 (I(lam) - i pi f(lam)), on both sheets. On the continued
    sheet the lower half-plane (and z < 0) carries the extra -2 pi i g^2 f(z).
    """
    if sheet not in ("upper", "continued"):
        raise ValueError(f"unknown sheet {sheet!r}")
    g = m.g if g is None else g
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    cut = (z.imag == 0) & (z.real > 0)
    if np.any(cut):
        lam = z.real[cut]
        out[cut] = friedrichs_I(m, lam) - 1j * np.pi * m.f(lam)
    if np.any(z == 0):
        raise ValueError("w(z) is not defined at the threshold z = 0")
    off = ~cut
    if np.any(off):
        zz = z[off]
        val = _J_closed(m, zz)
        if sheet == "continued":
            val = np.where(zz.imag <= 0, val - 2j * np.pi * m.f(zz), val)
        out[off] = val
    out = m.lambda0 + g ** 2 * out
    return out if out.ndim else complex(out)


def _dw_continued(m: FriedrichsModel, z: complex, g: float) -> complex:
    z = complex(z)
    d = _dJ_closed(m, z)
    if z.imag <= 0:
        d = d - 2j * np.pi * m.df(z)
    return complex(g ** 2 * d)


# ---------------------------------------------------------------------------
# pole, residue, S-matrix

def friedrichs_expansion(m: FriedrichsModel, g: float | None = None) -> complex:
    """Weak-coupling pole lambda0 + g^2 I(lambda0) - i pi g^2 v(lambda0)^2."""
    g = m.g if g is None else g
    l0 = m.lambda0
    return complex(l0 + g ** 2 * friedrichs_I(m, l0) - 1j * np.pi * g ** 2 * m.f(l0).real)


def friedrichs_pole(m: FriedrichsModel, g: float | None = None, tol: float = 1e-14,
                    maxit: int = 60) -> ComplexRoot:
    """Zero of w(z, g) - z on the continued sheet, continued from z = lambda0."""
    g = m.g if g is None else g
    if g == 0:
        return ComplexRoot(complex(m.lambda0), 1, 0.0, (0.0, 0.0))
    z = friedrichs_expansion(m, g)
    step = np.inf
    for _ in range(maxit):
        h = complex(friedrichs_w(m, z, "continued", g)) - z
        dh = _dw_continued(m, z, g) - 1.0
        delta = h / dh
        z -= delta
        step = abs(delta)
        if not np.isfinite(z) or abs(z - m.lambda0) > 10 * m.lambda0 + 10:
            raise FriedrichsDivergence("Newton iteration left the basin", z)
        if step < tol * max(1.0, abs(z)):
            break
    else:
        raise FriedrichsDivergence("Newton iteration did not converge", z)
    if z.imag > 0:
        raise FriedrichsDivergence("pole left the lower half-plane", z)
    return ComplexRoot(complex(z), 1, float(step), (float(step), float(step)))


def friedrichs_residue(m: FriedrichsModel, zp: complex, g: float | None = None) -> complex:
    """A in r(z) = A/(z_p - z) + regular, i.e. 1/(1 - w'(z_p))."""
    g = m.g if g is None else g
    return complex(1.0 / (1.0 - _dw_continued(m, zp, g)))


def friedrichs_smatrix(m: FriedrichsModel, lam, g: float | None = None):
    """On-shell S(lam) = 1 + 2 pi i g^2 f(lam) / (w(lam + i0) - lam)."""
    g = m.g if g is None else g
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("S-matrix needs lambda > 0")
    w = friedrichs_w(m, lam.astype(complex), "upper", g)
    return 1 + 2j * np.pi * g ** 2 * m.f(lam).real / (w - lam)


def friedrichs_bound_states(m: FriedrichsModel, g: float | None = None,
                            lo: float = -50.0, n: int = 2000) -> list:
    """Real zeros of w(x) - x on (lo, 0) as (location, weight) pairs."""
    g = m.g if g is None else g
    if g == 0:
        return []
    x = -np.geomspace(-lo, 1e-6, n)

    def h(t):
        return float(np.real(friedrichs_w(m, complex(t), "upper", g))) - t
    vals = np.array([h(t) for t in x])
    out = []
    for i in range(n - 1):
        if np.sign(vals[i]) != np.sign(vals[i + 1]) and np.all(np.isfinite(vals[i:i + 2])):
            r = optimize.brentq(h, x[i], x[i + 1], xtol=1e-14)
            wgt = 1.0 / (1.0 - g ** 2 * float(np.real(_dJ_closed(m, complex(r)))))
            out.append((r, wgt))
    return out


def friedrichs_density(m: FriedrichsModel, lam, g: float | None = None):
    """(1/pi) Im r(lam + i0) on lam > 0, r(z) = 1/(w(z) - z)."""
    g = m.g if g is None else g
    lam = np.asarray(lam, dtype=float)
    pos = lam > 0
    out = np.zeros(lam.shape)
    if np.any(pos):
        w = friedrichs_w(m, lam[pos].astype(complex), "upper", g)
        out[pos] = np.imag(1.0 / (w - lam[pos])) / np.pi
    return out
