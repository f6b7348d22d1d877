"""Two-channel s-wave model with a contact coupling at the origin.

Channel 1 is free (-d^2/dr^2), channel 2 carries the threshold E. The
boundary conditions f1'(0) = a f1(0) + c f2(0), f2'(0) = conj(c) f1(0) + b f2(0)
give the discriminant D(k) = (a - ik)(b - i kappa) - |c|^2, kappa^2 = k^2 - E.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from ..numerics import QuadratureSpec, integrate_semi_infinite, quartic_roots
from ..rootfind import ComplexRoot


@dataclass(frozen=True)
class TwoChannelModel:
    a: float = -1.0
    b: float = -0.5
    c: complex = 0.1
    E: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        if not self.E > 0:
            raise ValueError("threshold E must be positive")

    @property
    def c2(self) -> float:
        return abs(self.c) ** 2

    def with_c(self, c) -> "TwoChannelModel":
        return TwoChannelModel(self.a, self.b, c, self.E)


def kappa(k, E: float, branch: str = "physical"):
    """sqrt(k^2 - E) with Im >= 0 on the physical branch.

    On the cut (real k, |k| > sqrt E) the physical value is the limit from
    Im k > 0, i.e. sign(Re k) sqrt(k^2 - E).
    """
    k = np.asarray(k, dtype=complex)
    s = np.sqrt(E - k * k)
    kap = 1j * s
    on_cut = (kap.imag == 0) & (np.abs(kap.real) > 0)
    if np.any(on_cut):
        kap = np.where(on_cut, np.sign(k.real) * np.abs(kap.real), kap)
    if branch == "second":
        return -kap
    if branch != "physical":
        raise ValueError(f"unknown branch {branch!r}")
    return kap


def twochannel_condition(m: TwoChannelModel, k, branch: str = "physical"):
    """D(k) = (a - ik)(b - i kappa) - |c|^2 with kappa on the named branch."""
    k = np.asarray(k, dtype=complex)
    return (m.a - 1j * k) * (m.b - 1j * kappa(k, m.E, branch)) - m.c2


def twochannel_quartic(m: TwoChannelModel) -> np.ndarray:
    """Ascending coefficients of (E - k^2)(a - ik)^2 - (b(a - ik) - |c|^2)^2.

    Its zeros are the zeros of D on either branch.
    """
    lin = np.array([m.a, -1j])  # a - ik
    sq = npoly.polymul(lin, lin)
    inner = npoly.polyadd(m.b * lin, [-m.c2])
    q = npoly.polysub(npoly.polymul([m.E, 0, -1], sq), npoly.polymul(inner, inner))
    return np.pad(q, (0, 5 - len(q)))


@dataclass(frozen=True)
class TwoChannelPole:
    root: ComplexRoot
    kappa: complex
    energy: complex
    branch: str  # "physical" or "second"
    kind: str  # "bound", "antibound", "resonance" or "unphysical"

    @property
    def k(self) -> complex:
        return self.root.location


class BranchAmbiguity(ValueError):
    pass


def _classify(k: complex, branch: str, tol: float) -> str:
    if branch != "physical":
        return "unphysical"
    if abs(k.real) <= tol and k.imag > tol:
        return "bound"
    if abs(k.real) <= tol and k.imag < -tol:
        return "antibound"
    if k.imag < -tol:
        return "resonance"
    if abs(k.imag) <= tol:
        # real k: a threshold or an embedded eigenvalue left at c = 0
        return "bound" if _real_energy(k) else "unphysical"
    return "unphysical"


def _real_energy(k: complex) -> bool:
    return abs((k * k).imag) <= 1e-12 * max(1.0, abs(k) ** 2)


def twochannel_poles(m: TwoChannelModel, tol: float = 1e-8) -> list:
    """Zeros of D from the quartic, each assigned to the branch it solves."""
    q = twochannel_quartic(m)
    roots = quartic_roots(*q)
    out = []
    used = set()
    for k in roots:
        k = complex(k)
        for branch in ("physical", "second"):
            res = abs(complex(twochannel_condition(m, k, branch)))
            scale = max(1.0, abs(m.a) + abs(k)) * max(1.0, abs(m.b) + abs(k))
            if res > tol * scale:
                continue
            key = (round(k.real, 7), round(k.imag, 7), branch)
            if key in used:
                continue
            used.add(key)
            if abs(k * k - m.E) < 1e-10 * max(1.0, m.E):
                raise BranchAmbiguity(f"zero at the branch point k^2 = E (k = {k})")
            kap = complex(kappa(k, m.E, branch))
            out.append(TwoChannelPole(ComplexRoot(k, 1, res, (0.0, 0.0)), kap, k * k,
                                      branch, _classify(k, branch, 1e-12 * max(1.0, abs(k)))))
    return sorted(out, key=lambda p: (p.k.real, p.k.imag, p.branch))


# ---------------------------------------------------------------------------
# weak-coupling expansions

def e1_expansion(m: TwoChannelModel) -> float:
    """First-channel level -a^2 to order |c|^4."""
    a, b, E, c2 = m.a, m.b, m.E, m.c2
    s = np.sqrt(a * a + E)
    return (-a * a + 2 * a * c2 / (b + s)
            + (a * a - E - b * s) / (s * (b + s) ** 3) * c2 ** 2)


def e2_expansion(m: TwoChannelModel) -> complex:
    """Second-channel level E - b^2 perturbed by |c|.

    Isolated (b < -sqrt E): real, to order |c|^4. Embedded (-sqrt E < b < 0):
    complex, to order |c|^2.
    """
    a, b, E, c2 = m.a, m.b, m.E, m.c2
    if b < -np.sqrt(E):
        s = np.sqrt(b * b - E)
        return (E - b * b + 2 * b * c2 / (a + s)
                + (b * b + E - a * s) / (s * (a + s) ** 3) * c2 ** 2)
    if -np.sqrt(E) < b < 0:
        den = a * a - b * b + E
        return complex(E - b * b + 2 * a * b * c2 / den,
                       2 * b * c2 * np.sqrt(E - b * b) / den)
    raise ValueError("e2 expansion needs b < 0, b != -sqrt E")


def degenerate_split(m: TwoChannelModel) -> tuple:
    """e_{1,2} for b = -sqrt(a^2 + E), to order |c|^2.

    The |c|^2 coefficient is (2a^2 + E) / (2a sqrt(a^2 + E)), obtained by
    expanding D = (a + p)(b + q) - |c|^2 around the double root; with a
    middle term 4a^2 E in the numerator the roots of D are missed at O(|c|^2).
    """
    a, E = m.a, m.E
    c = abs(m.c)
    lin = 2 * np.sqrt(-a) * (a * a + E) ** 0.25 * c
    quad = (2 * a ** 4 + 3 * a * a * E + E * E) / (2 * a * (a * a + E) ** 1.5) * c * c
    return (-a * a - lin + quad, -a * a + lin + quad)


def lifetime(m: TwoChannelModel) -> float:
    a, b, E = m.a, m.b, m.E
    return -(a * a - b * b + E) / (4 * b * m.c2 * np.sqrt(E - b * b))


# ---------------------------------------------------------------------------
# scattering

def twochannel_smatrix(m: TwoChannelModel, k):
    """Reflection A and channel-2 amplitude B for real k > 0."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("scattering amplitudes need k > 0")
    kc = k.astype(complex)
    kap = kappa(kc, m.E)
    D = (m.a - 1j * kc) * (m.b - 1j * kap) - m.c2
    A = ((m.a + 1j * kc) * (m.b - 1j * kap) - m.c2) / D
    B = 2j * kc * np.conj(m.c) / D
    return A, B


def phase_shift(m: TwoChannelModel, k):
    """delta_0(k) mod pi below threshold, from the arctangent formula."""
    k = np.asarray(k, dtype=float)
    if np.any(k * k > m.E):
        raise ValueError("phase shift formula holds below threshold")
    s = np.sqrt(m.E - k * k)
    return np.arctan2(k * (m.b + s), m.a * (m.b + s) - m.c2) % np.pi


# ---------------------------------------------------------------------------
# the resonant state (0, sqrt(-2b) e^{br})

def resolvent_diagonal(m: TwoChannelModel, k):
    """(f, (H - k^2)^{-1} f) for the second-channel state, k on the physical sheet."""
    k = np.asarray(k, dtype=complex)
    kap = kappa(k, m.E)
    a, b, c2 = m.a, m.b, m.c2
    return (c2 + (a - 1j * k) * (b + 1j * kap)) / (
        (b + 1j * kap) ** 2 * (c2 - (a - 1j * k) * (b - 1j * kap)))


def twochannel_density(m: TwoChannelModel, lam):
    """(1/pi) Im of the resolvent diagonal at lam + i0, lam > 0."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape)
    pos = lam > 0
    k = np.sqrt(lam[pos]).astype(complex)
    out[pos] = np.imag(resolvent_diagonal(m, k)) / np.pi
    return out


def twochannel_bound_states(m: TwoChannelModel) -> list:
    """Negative-energy point masses (energy, weight) of the resonant state.

    At x = -p^2 < 0, with q = sqrt(E - x), the resolvent diagonal is
    (|c|^2 + (a + p)(b - q)) / ((b - q)^2 g(x)), g = |c|^2 - (a + p)(b + q),
    so the weight is the residue -(|c|^2 + (a + p)(b - q)) / ((b - q)^2 g'(lam)).
    """
    a, b, E, c2 = m.a, m.b, m.E, m.c2
    out = []
    for pole in twochannel_poles(m):
        if pole.kind != "bound" or pole.energy.real >= 0:
            continue
        lam = pole.energy.real
        for _ in range(3):  # the numerator cancels at small |c|; polish lam on g itself
            p, q = np.sqrt(-lam), np.sqrt(E - lam)
            dg = (b + q) / (2 * p) + (a + p) / (2 * q)
            lam_new = lam - (c2 - (a + p) * (b + q)) / dg
            if not (lam_new < 0 and abs(lam_new - lam) < 1e-6 * abs(lam)):
                break
            lam = lam_new
        p, q = np.sqrt(-lam), np.sqrt(E - lam)
        dg = (b + q) / (2 * p) + (a + p) / (2 * q)
        w = -(c2 + (a + p) * (b - q)) / ((b - q) ** 2 * dg)
        out.append((lam, float(w)))
    return out


def _tail_integral(m: TwoChannelModel, t: float, spec: QuadratureSpec):
    a2, g = m.a ** 2, m.E - m.b ** 2

    def f(z):
        z2 = z * z
        return z2 * np.exp(-z2 * t) / ((z2 + 1j * a2) * (z2 - 1j * g) ** 2)
    return integrate_semi_infinite(f, 0.0, spec)


def twochannel_amplitude(m: TwoChannelModel, t, poles=None,
                         spec: QuadratureSpec = QuadratureSpec()):
    """Leading-order v_A(t) for a != 0, -sqrt E < b < 0.

    The exponentials use the exact pole energies k_1^2 (first-channel level)
    and k_2^2 (resonance). Returns (v, err) arrays.
    """
    a, b, E, c2 = m.a, m.b, m.E, m.c2
    if a == 0 or not -np.sqrt(E) < b < 0:
        raise ValueError("amplitude formula needs a != 0 and -sqrt E < b < 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    e1, e2 = _pole_energies(m) if poles is None else poles
    g = np.sqrt(E - b * b)
    c_first = 2 * (abs(a) - a) * b / (a * a - b * b + E) ** 2
    c_second = 1j * b / (g * (a - 1j * g) ** 2)
    v = np.empty(t.shape, dtype=complex)
    err = np.empty(t.shape)
    for i, ti in enumerate(t):
        tail, te = _tail_integral(m, ti, spec)
        br = (c_first * np.exp(-1j * e1 * ti) + c_second * np.exp(-1j * e2 * ti)
              + 4 * b / np.pi * np.exp(-0.25j * np.pi) * tail)
        v[i] = np.exp(-1j * e2 * ti) - c2 * br
        err[i] = c2 * 4 * abs(b) / np.pi * te
    return v, err


def _pole_energies(m: TwoChannelModel):
    """Exact k_1^2 and k_2^2, falling back on the expansions when c = 0."""
    e1 = -m.a ** 2
    e2 = m.E - m.b ** 2
    if m.c2 == 0:
        return complex(e1), complex(e2)
    poles = [p for p in twochannel_poles(m) if p.branch == "physical"]
    near1 = min(poles, key=lambda p: abs(p.energy - e1_expansion(m)), default=None)
    near2 = [p for p in poles if p.kind == "resonance" and p.k.real > 0]
    if near2:
        e2 = min(near2, key=lambda p: abs(p.energy - e2_expansion(m))).energy
    else:
        e2 = e2_expansion(m)
    if near1 is not None and m.a < 0:
        e1 = near1.energy
    return complex(e1), complex(e2)
