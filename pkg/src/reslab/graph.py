"""Metric graphs with leads, vertex couplings and the single-vertex (flower) form.

A vertex coupling is a unitary matrix U acting on the boundary values Psi and
outward derivatives Psi' of all edge ends meeting at the vertex,

    (U - I) Psi + i (U + I) Psi' = 0.

The outward derivative at the far end x = l of an edge is -f'(l).

Endpoint order at a vertex follows the order of the edges in the graph; for an
edge that starts and ends at the same vertex the x = 0 end comes first. Leads
attached to the vertex follow the edge ends.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

UNITARITY_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph description."""


class SingularInnerMatrix(ArithmeticError):
    """Raised when (1-k)U4 - (1+k)I cannot be inverted."""

    def __init__(self, k):
        super().__init__(f"(1-k)U4 - (1+k)I is singular at k = {k!r}")
        self.k = k


def unitarity_residual(U) -> float:
    U = np.asarray(U, dtype=complex)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])), initial=0.0))


def check_unitary(U, tol: float = UNITARITY_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise GraphError(f"coupling matrix must be square, got shape {U.shape}")
    res = unitarity_residual(U)
    if res > tol:
        raise GraphError(f"coupling matrix is not unitary (residual {res:.3g})")
    return U


# ---------------------------------------------------------------------------
# standard couplings

def delta_coupling(degree: int, alpha: float) -> np.ndarray:
    """Continuity at the vertex, sum of outward derivatives = alpha * value."""
    if degree < 1:
        raise GraphError("degree must be at least 1")
    J = np.ones((degree, degree), dtype=complex)
    return 2.0 / (degree + 1j * alpha) * J - np.eye(degree)


def delta_prime_coupling(degree: int, beta: float) -> np.ndarray:
    """Derivative continuity, sum of values = beta * common derivative."""
    if degree < 1:
        raise GraphError("degree must be at least 1")
    J = np.ones((degree, degree), dtype=complex)
    return -2.0 / (degree - 1j * beta) * J + np.eye(degree)


def kirchhoff_coupling(degree: int) -> np.ndarray:
    return delta_coupling(degree, 0.0)


def anti_kirchhoff_coupling(degree: int) -> np.ndarray:
    return delta_prime_coupling(degree, 0.0)


def dirichlet_coupling(degree: int) -> np.ndarray:
    return -np.eye(degree, dtype=complex)


def coupling_from_conditions(A, B) -> np.ndarray:
    """Unitary U for boundary conditions A Psi + B Psi' = 0.

    Requires rank(A|B) = n and A B^* self-adjoint.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise GraphError("A and B must be square of equal size")
    if np.linalg.matrix_rank(np.hstack([A, B])) < n:
        raise GraphError("rank(A|B) must equal the vertex degree")
    AB = A @ B.conj().T
    if np.max(np.abs(AB - AB.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(AB))):
        raise GraphError("A B^* must be self-adjoint")
    U = -np.linalg.solve(A + 1j * B, A - 1j * B)
    return check_unitary(U, 1e-10)


# ---------------------------------------------------------------------------
# graph data model

@dataclass(frozen=True)
class Vertex:
    id: str
    coupling: dict


@dataclass(frozen=True)
class Edge:
    start: str
    end: str
    length: float
    flux: float = 0.0


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple
    edges: tuple
    leads: tuple = ()  # (vertex id, count) pairs

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "leads", tuple((str(v), int(c)) for v, c in self.leads))
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate vertex id")
        known = set(ids)
        for j, e in enumerate(self.edges):
            if not (np.isfinite(e.length) and e.length > 0):
                raise GraphError(f"edge {j}: length must be positive and finite")
            if not np.isfinite(e.flux):
                raise GraphError(f"edge {j}: flux must be finite")
            for v in (e.start, e.end):
                if v not in known:
                    raise GraphError(f"edge {j}: unknown vertex {v!r}")
        for v, c in self.leads:
            if v not in known:
                raise GraphError(f"lead at unknown vertex {v!r}")
            if c < 0:
                raise GraphError("lead count must be non-negative")
        for v in self.vertices:
            U = vertex_coupling(v.coupling, self.degree(v.id))
            if U.shape[0] != self.degree(v.id):
                raise GraphError(
                    f"vertex {v.id!r}: coupling dimension {U.shape[0]} "
                    f"does not match degree {self.degree(v.id)}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_leads(self) -> int:
        return sum(c for _, c in self.leads)

    @property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def lead_count(self, vid: str) -> int:
        return sum(c for v, c in self.leads if v == vid)

    def endpoints(self, vid: str) -> list:
        """Flower indices (0-based) of the internal edge ends at a vertex."""
        out = []
        for j, e in enumerate(self.edges):
            if e.start == vid:
                out.append(2 * j)
            if e.end == vid:
                out.append(2 * j + 1)
        return out

    def degree(self, vid: str) -> int:
        return len(self.endpoints(vid)) + self.lead_count(vid)


def vertex_coupling(spec: dict, degree: int) -> np.ndarray:
    """Coupling matrix from a named coupling record."""
    kind = spec.get("type")
    if kind == "delta":
        return delta_coupling(degree, float(spec.get("alpha", 0.0)))
    if kind == "delta_prime":
        return delta_prime_coupling(degree, float(spec.get("beta", 0.0)))
    if kind == "kirchhoff":
        return kirchhoff_coupling(degree)
    if kind == "anti_kirchhoff":
        return anti_kirchhoff_coupling(degree)
    if kind == "dirichlet":
        return dirichlet_coupling(degree)
    if kind == "matrix":
        re = np.asarray(spec.get("re", 0.0), dtype=float)
        im = np.asarray(spec.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise GraphError("matrix coupling: re and im shapes differ")
        U = re + 1j * im
        if U.ndim == 1:
            n = int(round(np.sqrt(U.size)))
            if n * n != U.size:
                raise GraphError("matrix coupling: flat entry list is not square")
            U = U.reshape(n, n)
        if U.shape != (degree, degree):
            raise GraphError(
                f"matrix coupling of shape {U.shape} at vertex of degree {degree}")
        return check_unitary(U)
    raise GraphError(f"unknown coupling type {kind!r}")


# ---------------------------------------------------------------------------
# flower form

@dataclass(frozen=True, eq=False)
class FlowerForm:
    """All edge ends joined at one vertex.

    Row 2j is the x = 0 end of edge j and row 2j+1 its x = l_j end
    (0-based); the M lead rows come last.
    """
    big_U: np.ndarray
    edge_lengths: np.ndarray
    fluxes: np.ndarray
    vertex_blocks: tuple = field(default=())  # (vertex id, flower indices)
    order: np.ndarray | None = None  # graph-local index -> flower index

    def __post_init__(self):
        U = check_unitary(self.big_U)
        lengths = np.asarray(self.edge_lengths, dtype=float).reshape(-1)
        fluxes = np.asarray(self.fluxes, dtype=float).reshape(-1)
        if fluxes.size == 0 and lengths.size:
            fluxes = np.zeros_like(lengths)
        if fluxes.shape != lengths.shape:
            raise GraphError("one flux per edge required")
        if U.shape[0] < 2 * lengths.size:
            raise GraphError("coupling dimension smaller than 2N")
        if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
            raise GraphError("edge lengths must be positive and finite")
        U.setflags(write=False)
        lengths.setflags(write=False)
        fluxes.setflags(write=False)
        object.__setattr__(self, "big_U", U)
        object.__setattr__(self, "edge_lengths", lengths)
        object.__setattr__(self, "fluxes", fluxes)
        object.__setattr__(self, "vertex_blocks",
                           tuple((v, tuple(int(i) for i in idx)) for v, idx in self.vertex_blocks))

    @property
    def N(self) -> int:
        return self.edge_lengths.size

    @property
    def M(self) -> int:
        return self.big_U.shape[0] - 2 * self.N

    @property
    def total_length(self) -> float:
        return float(self.edge_lengths.sum())

    def blocks(self) -> "BlockPartition":
        n = 2 * self.N
        U = self.big_U
        return BlockPartition(U[:n, :n], U[:n, n:], U[n:, :n], U[n:, n:])

    def with_coupling(self, U) -> "FlowerForm":
        """Same edges, new coupling; the vertex structure is dropped."""
        return FlowerForm(np.asarray(U, dtype=complex), self.edge_lengths, self.fluxes)

    def with_lengths(self, lengths) -> "FlowerForm":
        return FlowerForm(self.big_U, lengths, self.fluxes, self.vertex_blocks, self.order)

    def with_fluxes(self, fluxes) -> "FlowerForm":
        return FlowerForm(self.big_U, self.edge_lengths, fluxes, self.vertex_blocks, self.order)


@dataclass(frozen=True, eq=False)
class BlockPartition:
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    U4: np.ndarray

    def assemble(self) -> np.ndarray:
        return np.block([[self.U1, self.U2], [self.U3, self.U4]])


def build_flower(graph: MetricGraph) -> FlowerForm:
    """Single-vertex form of a metric graph.

    Loops and parallel edges need no subdivision here: every edge end gets
    its own row, so the per-vertex blocks are simply scattered into place.
    """
    N = graph.n_edges
    M = graph.n_leads
    dim = 2 * N + M
    big = np.zeros((dim, dim), dtype=complex)
    order = []
    blocks = []
    lead_pos = 2 * N
    for v in graph.vertices:
        idx = graph.endpoints(v.id)
        q = graph.lead_count(v.id)
        idx = idx + list(range(lead_pos, lead_pos + q))
        lead_pos += q
        if not idx:
            continue
        U = vertex_coupling(v.coupling, len(idx))
        big[np.ix_(idx, idx)] = U
        order.extend(idx)
        blocks.append((v.id, idx))
    lengths = np.array([e.length for e in graph.edges], dtype=float)
    fluxes = np.array([e.flux for e in graph.edges], dtype=float)
    return FlowerForm(big, lengths, fluxes, tuple(blocks), np.array(order, dtype=int))


def vertex_split(flower: FlowerForm):
    """Per-vertex (internal indices, lead indices) in flower numbering."""
    n = 2 * flower.N
    if not flower.vertex_blocks:
        idx = list(range(flower.big_U.shape[0]))
        return [("flower", [i for i in idx if i < n], [i for i in idx if i >= n])]
    out = []
    for vid, idx in flower.vertex_blocks:
        out.append((vid, [i for i in idx if i < n], [i for i in idx if i >= n]))
    return out


def effective_coupling(flower: FlowerForm, k: complex, internal: Sequence[int] | None = None,
                       leads: Sequence[int] | None = None) -> np.ndarray:
    """Energy dependent coupling on the internal edge ends after removing the leads.

    With optional index lists the reduction is done for a sub-block (one vertex).
    """
    U = flower.big_U
    if internal is None:
        internal = list(range(2 * flower.N))
        leads = list(range(2 * flower.N, U.shape[0]))
    internal = list(internal)
    leads = list(leads or [])
    U1 = U[np.ix_(internal, internal)]
    if not leads:
        return U1.copy()
    U2 = U[np.ix_(internal, leads)]
    U3 = U[np.ix_(leads, internal)]
    U4 = U[np.ix_(leads, leads)]
    inner = (1 - k) * U4 - (k + 1) * np.eye(len(leads))
    if np.linalg.cond(inner) > 1e12:
        raise SingularInnerMatrix(k)
    return U1 - (1 - k) * U2 @ np.linalg.solve(inner, U3)


def apply_magnetic(flower: FlowerForm) -> FlowerForm:
    """Move edge fluxes into the coupling: U_A = F U F^-1, fluxes set to zero."""
    d = np.ones(flower.big_U.shape[0], dtype=complex)
    d[1:2 * flower.N:2] = np.exp(1j * flower.fluxes)
    UA = (d[:, None] * flower.big_U) * d.conj()[None, :]
    return FlowerForm(UA, flower.edge_lengths, np.zeros(flower.N),
                      flower.vertex_blocks, flower.order)


def conjugate_leads(flower: FlowerForm, phi: float, W4) -> FlowerForm:
    """Replace U by W^-1 U W with W = diag(e^{i phi} I_2N, W4).

    W4 is a unitary M x M matrix acting on the lead rows. The effective
    coupling, hence the resonance set, does not change.
    """
    n2, M = 2 * flower.N, flower.M
    W4 = check_unitary(np.asarray(W4, dtype=complex).reshape(M, M))
    W = np.zeros((n2 + M, n2 + M), dtype=complex)
    W[:n2, :n2] = np.exp(1j * phi) * np.eye(n2)
    W[n2:, n2:] = W4
    return FlowerForm(W.conj().T @ flower.big_U @ W, flower.edge_lengths, flower.fluxes,
                      flower.vertex_blocks, flower.order)


def is_permutation_symmetric(U, tol: float = 1e-12) -> bool:
    """U = a J + b I for scalars a, b."""
    U = np.asarray(U)
    n = U.shape[0]
    if n == 1:
        return True
    diag = np.diag(U)
    off = U[~np.eye(n, dtype=bool)]
    return bool(np.ptp(diag.real) + np.ptp(diag.imag) < tol
                and np.ptp(off.real) + np.ptp(off.imag) < tol)
