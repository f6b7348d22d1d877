"""Zeros of analytic functions by the argument principle.

Winding numbers come from the phase of f alone, accumulated along the contour
with adaptive steps so that each increment stays below pi/2. Cells with one
zero are polished by Newton's method; cells holding several zeros are tested
for a single multiple zero through the centroid of the zeros, read off the
Fourier series of log f on a circle.

An evaluator is any callable returning complex values for an array of k, or
an object with a ``phase_logmag(k) -> (phase, log|f|)`` method (used for
functions whose magnitude overflows).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * np.pi


class RootFindError(RuntimeError):
    pass


class BoundaryZero(RootFindError):
    def __init__(self, za, zb):
        super().__init__(f"zero on or near the contour segment [{za}, {zb}]")
        self.segment = (za, zb)


class BudgetExhausted(RootFindError):
    pass


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def width(self) -> float:
        return max(self.x1 - self.x0, self.y1 - self.y0)

    def corners(self):
        return (complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1))

    def contains(self, z, margin: float = 0.0) -> bool:
        return (self.x0 - margin <= z.real <= self.x1 + margin
                and self.y0 - margin <= z.imag <= self.y1 + margin)

    def dilate(self, factor: float) -> "Rect":
        c = self.center
        hx = 0.5 * (self.x1 - self.x0) * factor
        hy = 0.5 * (self.y1 - self.y0) * factor
        return Rect(c.real - hx, c.real + hx, c.imag - hy, c.imag + hy)

    def split(self, fx: float = 0.5, fy: float = 0.5):
        xm = self.x0 + fx * (self.x1 - self.x0)
        ym = self.y0 + fy * (self.y1 - self.y0)
        return (Rect(self.x0, xm, self.y0, ym), Rect(xm, self.x1, self.y0, ym),
                Rect(self.x0, xm, ym, self.y1), Rect(xm, self.x1, ym, self.y1))


def as_rect(region) -> Rect:
    if isinstance(region, Rect):
        return region
    x0, x1, y0, y1 = region
    return Rect(float(x0), float(x1), float(y0), float(y1))


@dataclass(frozen=True)
class ComplexRoot:
    location: complex
    multiplicity: int
    residual: float
    enclosure: tuple  # half-widths (re, im)


@dataclass(frozen=True)
class CountingReport:
    radii: tuple
    counts: tuple
    fitted_slope: float
    fitted_W: float
    fit_residual: float


# ---------------------------------------------------------------------------
# evaluation

class PhaseEvaluator:
    """Cached (phase, log|f|) evaluation."""

    def __init__(self, f, budget: int = 2_000_000, rate: float | None = None):
        self.f = f
        self.cache = {}
        self.count = 0
        self.budget = budget
        self._pl = getattr(f, "phase_logmag", None)
        # bound on |d arg f / dk| away from zeros, used for the initial sampling
        self.rate = float(rate if rate is not None else getattr(f, "phase_rate", 0.0) or 0.0)

    def raw(self, z):
        z = np.asarray(z, dtype=complex)
        if self._pl is not None:
            ph, lm = self._pl(z)
            return np.asarray(ph, dtype=complex), np.asarray(lm, dtype=float)
        try:
            v = np.asarray(self.f(z), dtype=complex)
            if v.shape != z.shape:
                raise ValueError
        except (TypeError, ValueError):
            v = np.array([complex(self.f(x)) for x in z])
        a = np.abs(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            ph = np.where(a > 0, v / np.where(a > 0, a, 1), 0)
            lm = np.log(a)
        return ph, lm

    def __call__(self, z):
        z = np.asarray(z, dtype=complex).reshape(-1)
        missing = [x for x in dict.fromkeys(z.tolist()) if x not in self.cache]
        if missing:
            self.count += len(missing)
            if self.count > self.budget:
                raise BudgetExhausted(f"more than {self.budget} function evaluations")
            ph, lm = self.raw(np.array(missing))
            for x, p, m in zip(missing, ph, lm):
                self.cache[x] = (p, m)
        ph = np.array([self.cache[x][0] for x in z.tolist()])
        lm = np.array([self.cache[x][1] for x in z.tolist()])
        return ph, lm


def _check_zero(z, ph, lm):
    bad = (ph == 0) | ~np.isfinite(lm) & (lm < 0) | ~np.isfinite(ph)
    if np.any(bad):
        x = z[np.argmax(bad)]
        raise BoundaryZero(x, x)


def _path_phase(ev, zfun, n0: int, scale: float, length: float,
                max_points: int = 400_000):
    """Phase change of f along z(t), t in [0, 1], with adaptive refinement.

    Once every increment is below pi/2 all segments are halved once more and
    the test repeated, which catches oscillations missed by the first grid.
    """
    n0 = max(n0, int(np.ceil(length * ev.rate / (0.25 * np.pi))))
    t = np.linspace(0.0, 1.0, n0 + 1)
    z = zfun(t)
    ph, lm = ev(z)
    _check_zero(z, ph, lm)
    min_len = max(1e-13 * scale, 1e-7 * length)
    verified = False
    while True:
        d = np.angle(ph[1:] / ph[:-1])
        bad = (np.abs(d) >= HALF_PI) | (np.abs(np.diff(lm)) > 2.0)
        if not np.any(bad):
            if verified:
                return float(d.sum())
            verified = True
            bad = np.ones_like(bad)
        else:
            verified = False
        seglen = np.abs(np.diff(z))
        if np.any(seglen[bad] < min_len):
            i = np.flatnonzero(bad & (seglen < min_len))[0]
            raise BoundaryZero(complex(z[i]), complex(z[i + 1]))
        if t.size > max_points:
            i = np.flatnonzero(bad)[0]
            raise BudgetExhausted(
                f"contour refinement exceeded {max_points} points near {z[i]}")
        tm = 0.5 * (t[:-1][bad] + t[1:][bad])
        zm = zfun(tm)
        pm, lmm = ev(zm)
        _check_zero(zm, pm, lmm)
        t = np.concatenate([t, tm])
        order = np.argsort(t, kind="stable")
        t = t[order]
        z = np.concatenate([z, zm])[order]
        ph = np.concatenate([ph, pm])[order]
        lm = np.concatenate([lm, lmm])[order]


def _segment_phase(ev, za: complex, zb: complex, scale: float, n0: int = 32):
    dz = zb - za
    return _path_phase(ev, lambda t: za + dz * t, n0, scale, abs(dz))


def _to_int(total: float) -> int:
    w = total / (2 * np.pi)
    n = int(round(w))
    if abs(w - n) > 1e-6:
        raise RootFindError(f"non-integer winding {w}")
    return n


def _rect_winding(ev, rect: Rect) -> int:
    c = rect.corners()
    scale = max(1.0, max(abs(x) for x in c))
    total = 0.0
    for a, b in zip(c, c[1:] + c[:1]):
        total += _segment_phase(ev, a, b, scale)
    return _to_int(total)


def _circle_winding(ev, center: complex, radius: float, n0: int = 64) -> int:
    scale = max(1.0, abs(center) + radius)

    def zfun(t):
        return center + radius * np.exp(2j * np.pi * t)
    return _to_int(_path_phase(ev, zfun, n0, scale, 2 * np.pi * radius))


def _evaluator(f, rate=None, budget=2_000_000):
    if isinstance(f, PhaseEvaluator):
        if rate is not None:
            f.rate = float(rate)
        return f
    return PhaseEvaluator(f, budget=budget, rate=rate)


def winding_count(f, rect, max_dilations: int = 5, rate: float | None = None) -> int:
    """Number of zeros (with multiplicity) inside a rectangle."""
    ev = _evaluator(f, rate)
    rect = as_rect(rect)
    for attempt in range(max_dilations + 1):
        try:
            return _rect_winding(ev, rect.dilate((1 + 1e-4) ** attempt))
        except BoundaryZero:
            if attempt == max_dilations:
                raise


# ---------------------------------------------------------------------------
# polishing

def _local_values(ev, z):
    ph, lm = ev.raw(np.asarray(z, dtype=complex))
    ref = np.max(lm[np.isfinite(lm)]) if np.any(np.isfinite(lm)) else 0.0
    with np.errstate(under="ignore"):
        return ph * np.exp(lm - ref)


def newton_polish(ev, z0: complex, tol: float, multiplicity: int = 1,
                  maxit: int = 40, h: float | None = None):
    """Newton iteration with a central-difference derivative.

    Returns (root, last step size, converged flag).
    """
    z = complex(z0)
    step = np.inf
    if h is None:
        h = 1e-6 * max(1.0, abs(z))
    converged = False
    for it in range(maxit):
        f0, fp, fm = _local_values(ev, [z, z + h, z - h])
        if f0 == 0:
            return z, 0.0, True
        d = (fp - fm) / (2 * h)
        if d == 0 or not np.isfinite(d):
            break
        delta = multiplicity * f0 / d
        z -= delta
        step = abs(delta)
        if converged:
            break
        if step < tol:
            converged = True  # one more step for the quadratic gain
        if not np.isfinite(z):
            break
    return z, step, converged


def _centroid(ev, center: complex, radius: float, w: int, n: int = 256):
    """Mean of the w zeros inside the circle, or None if unreliable."""
    th = 2 * np.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * th)
    ph, lm = ev(z)
    if np.any(ph == 0) or not np.all(np.isfinite(lm)):
        return None
    arg = np.unwrap(np.concatenate([np.angle(ph), np.angle(ph[:1])]))
    if abs(arg[-1] - arg[0] - 2 * np.pi * w) > 1e-6:
        return None
    logf = lm + 1j * (arg[:-1] - w * th)
    coef = np.fft.fft(logf) / n
    # log f ~ ... - sum_j (r_j - c)/radius e^{-i th}
    return center - radius * coef[-1] / w


# ---------------------------------------------------------------------------
# root search

_SPLITS = ((0.5, 0.5), (0.4713, 0.5287), (0.5391, 0.4609), (0.4419, 0.4567))


def find_roots(f, region, tol: float = 1e-10, max_depth: int = 64,
               max_dilations: int = 5, cluster_radius: float | None = None,
               rate: float | None = None):
    """All zeros in a rectangle (x0, x1, y0, y1) or Rect, sorted by (Re, Im).

    rate bounds |d arg f/dk| along the contours (the total edge length for a
    secular function); it sets the initial sampling and defaults to
    f.phase_rate when present.
    """
    ev = _evaluator(f, rate)
    rect = as_rect(region)
    total = None
    for attempt in range(max_dilations + 1):
        try:
            r = rect.dilate((1 + 1e-4) ** attempt)
            total = _rect_winding(ev, r)
            rect = r
            break
        except BoundaryZero:
            if attempt == max_dilations:
                raise
    roots = []
    stack = [(rect, total, 0)]
    while stack:
        cell, w, depth = stack.pop()
        if w == 0:
            continue
        scale = max(1.0, abs(cell.center))
        if w == 1:
            z, step, ok = newton_polish(ev, cell.center, tol,
                                        h=min(1e-6 * scale, 0.05 * cell.width))
            if ok and cell.contains(z, margin=tol):
                roots.append(ComplexRoot(z, 1, step, (0.5 * (cell.x1 - cell.x0),
                                                      0.5 * (cell.y1 - cell.y0))))
                continue
        elif cell.width < 1e-2 * scale or depth > 20:
            hit = _try_multiple(ev, cell, w, tol, cluster_radius)
            if hit is not None:
                roots.append(hit)
                continue
        if cell.width <= tol or depth >= max_depth:
            hx, hy = 0.5 * (cell.x1 - cell.x0), 0.5 * (cell.y1 - cell.y0)
            roots.append(ComplexRoot(cell.center, w, max(hx, hy), (hx, hy)))
            continue
        children = None
        for fx, fy in _SPLITS:
            try:
                kids = cell.split(fx, fy)
                ws = [_rect_winding(ev, c) for c in kids]
            except BoundaryZero:
                continue
            if sum(ws) != w:
                raise RootFindError(
                    f"winding not conserved in {cell}: {w} != {sum(ws)}")
            children = list(zip(kids, ws))
            break
        if children is None:
            raise BoundaryZero(cell.center, cell.center)
        for c, wc in reversed(children):
            stack.append((c, wc, depth + 1))
    return sorted(roots, key=lambda r: (r.location.real, r.location.imag))


def _try_multiple(ev, cell, w, tol, cluster_radius):
    c = cell.center
    rho = 0.75 * np.hypot(cell.x1 - cell.x0, cell.y1 - cell.y0)
    try:
        if _circle_winding(ev, c, rho) != w:
            return None
        cen = _centroid(ev, c, rho, w)
        if cen is None or not cell.contains(cen):
            return None
        z, step, ok = newton_polish(ev, cen, tol, multiplicity=w,
                                    h=1e-3 * rho)
        if not (ok and abs(z - cen) < 0.1 * rho):
            z, step = cen, 0.0
        r_s = cluster_radius or max(100 * tol, 1e-8 * max(1.0, abs(z)))
        if _circle_winding(ev, z, r_s, n0=16) != w:
            return None
    except RootFindError:
        return None
    return ComplexRoot(z, w, max(step, 0.0), (r_s, r_s))


# ---------------------------------------------------------------------------
# counting

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RESLAB_THREADS", "1")))
    except ValueError:
        return 1


def disc_count(f, R: float, max_dilations: int = 5, rate: float | None = None,
               center: complex = 0.0) -> int:
    """Number of zeros in |k - center| < R."""
    ev = _evaluator(f, rate, budget=10_000_000)
    n0 = int(max(256, 16 * R))
    for attempt in range(max_dilations + 1):
        try:
            return _circle_winding(ev, complex(center), R * (1 + 1e-4) ** attempt, n0=n0)
        except BoundaryZero:
            if attempt == max_dilations:
                raise


def counting_function(f, R_list, rate: float | None = None) -> CountingReport:
    """N(R) for the discs |k| < R and the least-squares slope fit."""
    R = np.asarray(R_list, dtype=float)
    if R.ndim != 1 or R.size == 0 or np.any(np.diff(R) <= 0):
        raise ValueError("R_list must be ascending")
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        counts = list(pool.map(lambda r: disc_count(f, r, rate=rate), R))
    counts = np.array(counts, dtype=float)
    if R.size >= 2:
        A = np.vstack([R, np.ones_like(R)]).T
        sol, *_ = np.linalg.lstsq(A, counts, rcond=None)
        slope = float(sol[0])
        resid = float(np.max(np.abs(A @ sol - counts)))
    else:
        slope, resid = float(counts[0] / R[0]), 0.0
    return CountingReport(tuple(R.tolist()), tuple(int(c) for c in counts),
                          slope, 0.5 * np.pi * slope, resid)
