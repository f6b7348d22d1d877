"""Small quantum graphs with explicit resonance conditions.

Each model gives its closed-form condition and the equivalent MetricGraph, so
the generic determinant can be checked against the formula.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph import Edge, MetricGraph, Vertex, coupling_from_conditions


def _matrix_spec(U) -> dict:
    U = np.asarray(U)
    return {"type": "matrix", "re": U.real.tolist(), "im": U.imag.tolist()}


def _sinc_over_k(k, l):
    """sin(kl)/k, regular at k = 0."""
    return l * np.sinc(np.asarray(k) * l / np.pi)


# ---------------------------------------------------------------------------
# line with a stub

@dataclass(frozen=True)
class StubModel:
    """A line with a Dirichlet-ended stub of length l attached at one point.

    Junction conditions: f continuous, u(0) = b f(0) + c u'(0),
    f'(0+) - f'(0-) = d f(0) - b u'(0), and u(l) = 0.
    """
    l: float = 1.0
    b: float = 1.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if not self.l > 0:
            raise ValueError("stub length must be positive")

    def condition(self, k):
        """D(k); 2ik D(k) = b^2 u_l'(0) + (d - 2ik)(c u_l' - u_l)(0), u_l = sin k(l-x)."""
        k = np.asarray(k, dtype=complex)
        cl = np.cos(k * self.l)
        return (-self.b ** 2 * cl
                - (self.d - 2j * k) * (self.c * cl + _sinc_over_k(k, self.l))) / 2j

    def junction_coupling(self):
        b, c, d = self.b, self.c, self.d
        # order: stub end, right half-line, left half-line
        A = [[0, 1, -1], [1, -b, 0], [0, -d, 0]]
        B = [[0, 0, 0], [-c, 0, 0], [b, 1, 1]]
        return coupling_from_conditions(A, B)

    def graph(self) -> MetricGraph:
        return MetricGraph(
            [Vertex("junction", _matrix_spec(self.junction_coupling())),
             Vertex("end", {"type": "dirichlet"})],
            [Edge("junction", "end", self.l)],
            [("junction", 2)])


def stub_condition(m: StubModel, k):
    return m.condition(k)


def stub_free_poles(m: StubModel, n_range) -> list:
    """Explicit poles for c = d = 0; empty when |b| = sqrt 2."""
    if m.c != 0 or m.d != 0:
        raise ValueError("explicit poles need c = d = 0")
    b2 = m.b ** 2
    out = []
    if np.isclose(b2, 2.0, rtol=0, atol=1e-14):
        return out
    for n in n_range:
        if b2 < 2:
            k = n * np.pi / m.l + 0.5j / m.l * np.log((2 - b2) / (2 + b2))
        else:
            k = (2 * n - 1) * np.pi / (2 * m.l) + 0.5j / m.l * np.log((b2 - 2) / (b2 + 2))
        out.append(complex(k))
    return out


# ---------------------------------------------------------------------------
# lasso

@dataclass(frozen=True)
class LassoModel:
    """A loop of perimeter L with one half-line attached, flux 2*pi*phi.

    Junction: u(0) = u(L), f(0) = omega u(0) + mu f'(0),
    u'(0) - u'(L) = alpha u(0) - omega f'(0).
    """
    L: float = 2 * np.pi
    alpha: float = 1.0
    mu: float = 0.0
    omega: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("loop perimeter must be positive")

    def condition(self, k):
        """Denominator of the reflection amplitude, multiplied by sin kL.

        The sign of the omega^2 term puts the zeros in the lower half-plane
        for outgoing waves e^{ikx}.
        """
        k = np.asarray(k, dtype=complex)
        s, c = np.sin(k * self.L), np.cos(k * self.L)
        Phi = 2 * np.pi * self.phi
        return ((1 - 1j * self.mu * k) * (2 * k * (np.cos(Phi) - c) - self.alpha * s)
                + 1j * self.omega ** 2 * k * s)

    def coupling(self):
        a, mu, w = self.alpha, self.mu, self.omega
        # order: loop start, loop end, half-line
        A = [[1, -1, 0], [-w, 0, 1], [-a, 0, 0]]
        B = [[0, 0, 0], [0, 0, -mu], [1, 1, w]]
        return coupling_from_conditions(A, B)

    def graph(self) -> MetricGraph:
        return MetricGraph([Vertex("v", _matrix_spec(self.coupling()))],
                           [Edge("v", "v", self.L, 2 * np.pi * self.phi)],
                           [("v", 1)])


def lasso_condition(m: LassoModel, k):
    return m.condition(k)


def lasso_embedded(m: LassoModel, kmax: float) -> list:
    """Real embedded eigenvalue momenta in (0, kmax].

    Integer flux: k = 2n pi / L; half-integer flux: k = (2n-1) pi / L.
    """
    frac = m.phi - np.floor(m.phi)
    if np.isclose(frac, 0) or np.isclose(frac, 1):
        first, step = 2 * np.pi / m.L, 2 * np.pi / m.L
    elif np.isclose(frac, 0.5):
        first, step = np.pi / m.L, 2 * np.pi / m.L
    else:
        return []
    n = int(np.floor((kmax - first) / step + 1e-12)) + 1
    return [first + j * step for j in range(max(n, 0))]


# ---------------------------------------------------------------------------
# loop with two leads

def _beta_inv(k, a_inv, at_inv, gamma):
    return a_inv + 1j * k * abs(gamma) ** 2 / (1 - 1j * k * at_inv)


@dataclass(frozen=True)
class LoopTwoLeadsModel:
    """Loop of length 2l with two leads.

    variant "general": leads at two points splitting the loop into
    l(1 - lam) and l(1 + lam), vertex parameters (a_inv, at_inv, gamma) each.
    variant "delta": both leads at one point, delta coupling alpha, loop length l.
    variant "magnetic": both leads at one point, Kirchhoff coupling, loop
    length l threaded by flux Phi.
    """
    variant: str = "general"
    l: float = 1.0
    lam: float = 0.0
    a1_inv: float = 1.0
    at1_inv: float = -2.0
    gamma1: float = 1.0
    a2_inv: float = 0.0
    at2_inv: float = 1.0
    gamma2: float = 1.0
    alpha: float = 0.0
    Phi: float = 0.0

    def __post_init__(self):
        if self.variant not in ("general", "delta", "magnetic"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.l > 0:
            raise ValueError("l must be positive")
        if self.variant == "general" and not 0 <= self.lam <= 1:
            raise ValueError("lam must lie in [0, 1]")

    def condition(self, k):
        k = np.asarray(k, dtype=complex)
        l = self.l
        if self.variant == "delta":
            s = np.sin(k * l)
            return -self.alpha * s + 2 * k * (1 + 1j * s - np.cos(k * l))
        if self.variant == "magnetic":
            # at Phi = 0 this is the delta variant with alpha = 0, divided by k
            return -2 * np.cos(self.Phi) + 2 * np.exp(-1j * k * l)
        b1 = _beta_inv(k, self.a1_inv, self.at1_inv, self.gamma1)
        b2 = _beta_inv(k, self.a2_inv, self.at2_inv, self.gamma2)
        val = (np.sin(k * l * (1 - self.lam)) * np.sin(k * l * (1 + self.lam))
               - 4 * k ** 2 * b1 * b2 * np.sin(k * l) ** 2
               + k * (b1 + b2) * np.sin(2 * k * l))
        # clear the poles of the beta functions
        return val * (1 - 1j * k * self.at1_inv) * (1 - 1j * k * self.at2_inv)

    @staticmethod
    def _junction(a_inv, at_inv, gamma):
        # order: first loop end, second loop end, lead
        A = [[1, -1, 0], [1, 0, 0], [0, 0, 1]]
        B = [[0, 0, 0], [-a_inv, -a_inv, -gamma], [-gamma, -gamma, -at_inv]]
        return coupling_from_conditions(A, B)

    def graph(self) -> MetricGraph:
        if self.variant == "general":
            l1, l2 = self.l * (1 - self.lam), self.l * (1 + self.lam)
            if l1 <= 0:
                raise ValueError("lam = 1 merges the vertices")
            return MetricGraph(
                [Vertex("v1", _matrix_spec(self._junction(self.a1_inv, self.at1_inv, self.gamma1))),
                 Vertex("v2", _matrix_spec(self._junction(self.a2_inv, self.at2_inv, self.gamma2)))],
                [Edge("v1", "v2", l1), Edge("v1", "v2", l2)],
                [("v1", 1), ("v2", 1)])
        alpha = self.alpha if self.variant == "delta" else 0.0
        flux = self.Phi if self.variant == "magnetic" else 0.0
        return MetricGraph([Vertex("v", {"type": "delta", "alpha": alpha})],
                           [Edge("v", "v", self.l, flux)], [("v", 2)])


def loop_two_leads_condition(m: LoopTwoLeadsModel, k):
    return m.condition(k)


# ---------------------------------------------------------------------------
# cross

@dataclass(frozen=True)
class CrossModel:
    """Two leads and two Dirichlet-ended edges l(1 -+ lam) at one delta vertex."""
    l: float = 1.0
    lam: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.l > 0:
            raise ValueError("l must be positive")
        if not 0 <= self.lam <= 1:
            raise ValueError("lam must lie in [0, 1]")

    def condition(self, k):
        k = np.asarray(k, dtype=complex)
        l = self.l
        return (2 * k * np.sin(2 * k * l)
                + (self.alpha - 2j * k) * (np.cos(2 * k * l * self.lam) - np.cos(2 * k * l)))

    def graph(self) -> MetricGraph:
        l1, l2 = self.l * (1 - self.lam), self.l * (1 + self.lam)
        if l1 <= 0:
            raise ValueError("lam = 1 leaves an edge of zero length")
        return MetricGraph(
            [Vertex("c", {"type": "delta", "alpha": self.alpha}),
             Vertex("e1", {"type": "dirichlet"}), Vertex("e2", {"type": "dirichlet"})],
            [Edge("c", "e1", l1), Edge("c", "e2", l2)],
            [("c", 2)])


def cross_condition(m: CrossModel, k):
    return m.condition(k)


# ---------------------------------------------------------------------------
# polygon

@dataclass(frozen=True)
class PolygonModel:
    """Regular n-gon of edge length l, two leads and Kirchhoff coupling at each vertex."""
    n: int = 3
    l: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("polygon needs n >= 3")
        if not self.l > 0:
            raise ValueError("l must be positive")

    def omegas(self):
        return np.exp(2j * np.pi * np.arange(self.n) / self.n)

    def floquet_condition(self, omega, k):
        return -2 * (omega ** 2 + 1) + 4 * omega * np.exp(-1j * np.asarray(k) * self.l)

    def graph(self) -> MetricGraph:
        ids = [f"v{j}" for j in range(self.n)]
        return MetricGraph([Vertex(v, {"type": "kirchhoff"}) for v in ids],
                           [Edge(ids[j], ids[(j + 1) % self.n], self.l) for j in range(self.n)],
                           [(v, 2) for v in ids])


def polygon_floquet_poles(m: PolygonModel, m_range) -> dict:
    """Roots k = (i log cos theta + 2 pi m)/l for each omega = e^{i theta}.

    Components with cos theta = 0 have no roots.
    """
    out = {}
    for j in range(m.n):
        theta = 2 * np.pi * j / m.n
        c = np.cos(theta)
        if abs(c) < 1e-14:
            out[j] = []
            continue
        lg = np.log(complex(c))
        out[j] = [complex((1j * lg + 2 * np.pi * mm) / m.l) for mm in m_range]
    return out


def polygon_effective_size(m: PolygonModel) -> float:
    if m.n % 4 == 0:
        return (m.n - 2) * m.l / 2
    return m.n * m.l / 2
