"""Special functions and quadrature used by the models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "adaptive"
    epsabs: float = 1e-13
    epsrel: float = 1e-11
    limit: int = 400
    transform: str = "algebraic"  # or "exponential"

    def __post_init__(self):
        if self.epsabs <= 0 or self.epsrel <= 0:
            raise ValueError("tolerances must be positive")
        if self.transform not in ("algebraic", "exponential"):
            raise ValueError(f"unknown transform {self.transform!r}")


def erfcx_complex(u):
    """Scaled complementary error function e^{u^2} erfc(u) for complex u.

    Evaluated through the Faddeeva function, erfcx(u) = w(iu).
    """
    u = np.asarray(u, dtype=complex)
    return special.wofz(1j * u)


def quartic_roots(c0, c1, c2, c3, c4):
    """Roots of c4 k^4 + ... + c0, polished by Newton steps."""
    if c4 == 0:
        raise ValueError("leading coefficient vanishes")
    coef = np.array([c4, c3, c2, c1, c0], dtype=complex)
    roots = np.roots(coef)
    dcoef = np.polyder(coef)
    out = []
    for r in roots:
        for _ in range(3):
            d = np.polyval(dcoef, r)
            if d == 0:
                break
            step = np.polyval(coef, r) / d
            if not np.isfinite(step) or abs(step) > 1e-6 * max(1.0, abs(r)):
                break
            r = r - step
        out.append(complex(r))
    return np.array(sorted(out, key=lambda z: (z.real, z.imag)))


def _quad_complex(f, a, b, epsabs, epsrel, limit, **kw):
    re, er = integrate.quad(lambda x: np.real(f(x)), a, b, epsabs=epsabs,
                            epsrel=epsrel, limit=limit, **kw)
    im, ei = integrate.quad(lambda x: np.imag(f(x)), a, b, epsabs=epsabs,
                            epsrel=epsrel, limit=limit, **kw)
    return re + 1j * im, float(np.hypot(er, ei))


def principal_value(f, lam: float, a: float, b: float, *, levels: int = 7,
                    spec: QuadratureSpec = QuadratureSpec()):
    """PV of the integral of f(x)/(x - lam) over [a, b]; b may be inf.

    The symmetric neighbourhood (lam - h, lam + h) is cut down to
    (lam - eps, lam + eps); the excised value I(eps) has an expansion in odd
    powers of eps and is extrapolated to eps -> 0 by Richardson's scheme.
    Returns (value, error estimate).
    """
    if not a < lam < b:
        raise ValueError("singularity must lie inside the interval")
    h = min(lam - a, b - lam) if np.isfinite(b) else min(lam - a, 1.0 + abs(lam))
    h *= 0.5
    ea, er, lim = spec.epsabs, spec.epsrel, spec.limit
    outer, err = 0.0, 0.0
    if lam - h > a:
        v, e = _quad_complex(lambda x: f(x) / (x - lam), a, lam - h, ea, er, lim)
        outer += v
        err += e
    if np.isfinite(b):
        if lam + h < b:
            v, e = _quad_complex(lambda x: f(x) / (x - lam), lam + h, b, ea, er, lim)
            outer += v
            err += e
    else:
        v, e = integrate_semi_infinite(lambda x: f(x) / (x - lam), lam + h, spec)
        outer += v
        err += e

    def sym(t):
        return (f(lam + t) - f(lam - t)) / t

    # I(eps) = integral of sym over [eps, h]
    eps = [h * 2.0 ** -(j + 1) for j in range(levels)]
    vals = []
    for e in eps:
        v, qe = _quad_complex(sym, e, h, ea, er, lim)
        vals.append(v)
        err = max(err, qe)
    # Richardson tableau for odd powers of eps
    table = [vals]
    for m in range(1, levels):
        p = 2 * m - 1
        prev = table[-1]
        table.append([(2 ** p * prev[i + 1] - prev[i]) / (2 ** p - 1)
                      for i in range(len(prev) - 1)])
    best = table[-1][0]
    est = abs(table[-1][0] - table[-2][-1]) + err
    value = outer + best
    if not np.isfinite(value):
        raise QuadratureError("principal value did not converge")
    if np.iscomplexobj(value) and value.imag == 0:
        value = value.real
    return value, float(est)


def integrate_semi_infinite(f, a: float = 0.0, spec: QuadratureSpec = QuadratureSpec()):
    """Integral of f over [a, inf) after mapping to [0, 1).

    algebraic: x = a + t/(1-t); exponential: x = a - log(1-t).
    Returns (value, error estimate).
    """
    if spec.transform == "algebraic":
        def g(t):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(a + t / s) / (s * s)
    else:
        def g(t):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(a - np.log(s)) / s
    with np.errstate(all="ignore"):
        v, e = _quad_complex(g, 0.0, 1.0, spec.epsabs, spec.epsrel, spec.limit)
    if not np.isfinite(v):
        raise QuadratureError("semi-infinite quadrature failed")
    tol = max(spec.epsabs, spec.epsrel * abs(v))
    if e > 1e3 * tol:
        raise QuadratureError(f"semi-infinite quadrature: error {e:.3g} exceeds budget")
    return v, e
