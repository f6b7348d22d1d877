import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reslab.graph import (Edge, FlowerForm, MetricGraph, Vertex, apply_magnetic, build_flower,
                          delta_coupling, effective_coupling)
from reslab.models import LoopTwoLeadsModel, PolygonModel, StubModel
from reslab.rootfind import find_roots, winding_count
from reslab.secular import (ExpandedSecular, SecularFunction, classify_asymptotics,
                            expanded_value, extremal_coefficients, secular_value)

from conftest import random_unitary


def naive_det(U, lengths, M, k):
    """Brute-force determinant in the amplitudes f_j = A e^{ikx} + B e^{-ikx}, g = C e^{ikx}."""
    N = len(lengths)
    n = 2 * N + M
    P = np.zeros((n, n), dtype=complex)
    D = np.zeros((n, n), dtype=complex)
    for j, l in enumerate(lengths):
        e = np.exp(1j * k * l)
        P[2 * j, 2 * j:2 * j + 2] = [1, 1]
        P[2 * j + 1, 2 * j:2 * j + 2] = [e, 1 / e]
        D[2 * j, 2 * j:2 * j + 2] = [1j * k, -1j * k]
        D[2 * j + 1, 2 * j:2 * j + 2] = [-1j * k * e, 1j * k / e]
    for m in range(M):
        P[2 * N + m, 2 * N + m] = 1
        D[2 * N + m, 2 * N + m] = 1j * k
    I = np.eye(n)
    return np.linalg.det((U - I) @ P + 1j * (U + I) @ D)


def dirichlet_segment(l=1.0):
    return MetricGraph([Vertex("a", {"type": "dirichlet"}), Vertex("b", {"type": "dirichlet"})],
                       [Edge("a", "b", l)])


def test_dirichlet_segment_zeros():
    s = SecularFunction(build_flower(dirichlet_segment()))
    roots = find_roots(s, (0.5, 10 * np.pi + 1, -1, 1))
    assert len(roots) == 10
    for n, r in enumerate(roots, 1):
        assert abs(r.location - n * np.pi) < 1e-10
        assert r.multiplicity == 1


def test_loop_two_leads_kirchhoff_form(rng):
    l = 1.3
    s = SecularFunction(build_flower(LoopTwoLeadsModel("magnetic", l=l).graph()))
    ks = rng.uniform(0.6, 8, 10) + 1j * rng.uniform(-3, 3, 10)
    ratio = s(ks) / (-2 + 2 * np.exp(-1j * ks * l))
    assert np.max(np.abs(ratio / ratio[0] - 1)) < 1e-10


def test_naive_determinant_oracle(rng):
    for trial in range(5):
        U = random_unitary(rng, 5)
        lengths = rng.uniform(0.5, 2.0, 2)
        f = FlowerForm(U, lengths, [0.0, 0.0])
        s = SecularFunction(f)
        for _ in range(20):
            k = rng.uniform(-10, 10) + 1j * rng.uniform(-5, 5)
            if abs(k) < 0.1:
                continue
            ref = naive_det(U, lengths, 1, k) / ((2j) ** 2 * k ** 2)
            ph, lm = secular_value(s, k)
            assert abs(ph * np.exp(lm) - ref) <= 1e-10 * abs(ref)
            assert abs(expanded_value(f, k) - ref) <= 1e-10 * abs(ref)


def test_small_k_branch_continuous(rng):
    U = random_unitary(rng, 5)
    s = SecularFunction(FlowerForm(U, [0.8, 1.4], [0.3, -0.2]))
    for th in np.linspace(0, 2 * np.pi, 7):
        a, b = s(0.4999 * np.exp(1j * th)), s(0.5001 * np.exp(1j * th))
        assert abs(a - b) < 1e-3 * abs(a)


def test_deep_evaluation_stays_finite():
    s = SecularFunction(build_flower(PolygonModel(4).graph()))
    ph, lm = s.phase_logmag(np.array([10 - 800j, 10 + 800j, 3 - 2000j]))
    assert np.all(np.isfinite(lm)) and np.allclose(np.abs(ph), 1)


def test_expansion_matches_direct(rng):
    for g in (PolygonModel(5).graph(), LoopTwoLeadsModel("general", lam=0.3).graph(),
              StubModel(1.3, 0.7, 0.4, -0.6).graph()):
        f = build_flower(g)
        s = SecularFunction(f)
        ex = ExpandedSecular(f)
        ks = rng.uniform(-20, 20, 30) + 1j * rng.uniform(-1.5, 1.5, 30)
        ks = ks[np.abs(ks) > 0.6]
        a, b = s._eval_exp(ks), ex.phase_logmag(ks)
        va, vb = a[0] * np.exp(a[1]), b[0] * np.exp(b[1])
        assert np.max(np.abs(va - vb) / np.abs(va)) < 1e-9


@pytest.mark.parametrize("n,W", [(3, 1.5), (4, 1.0), (5, 2.5), (6, 3.0), (7, 3.5), (8, 3.0)])
def test_polygon_expansion_span(n, W):
    ex = SecularFunction(build_flower(PolygonModel(n).graph())).expansion
    e = ex.exponents
    assert abs((max(e) - min(e)) / 2 - W) < 1e-9


def test_zero_set_symmetry(rng):
    U = random_unitary(rng, 5)
    # time-reversal symmetric coupling: U = U^T
    U = U @ U.T
    s = SecularFunction(FlowerForm(U, [1.0, 1.6], [0.0, 0.0]))
    roots = find_roots(s, (-12, 12, -4, 0.5))
    locs = np.array([r.location for r in roots])
    assert len(locs) > 5
    for z in locs:
        if abs(z.real) > 1e-6:
            assert np.min(np.abs(locs + np.conj(z))) < 1e-9


def test_rese_and_full_determinant_agree(rng):
    U = random_unitary(rng, 6)
    lengths = [1.0, 1.7]
    f = FlowerForm(U, lengths, [0.0, 0.0])
    I2 = np.eye(2)
    U4 = U[4:, 4:]
    for k in rng.uniform(1, 5, 10) + 1j * rng.uniform(-1, 1, 10):
        Ut = effective_coupling(f, k)
        lead_factor = np.linalg.det((1 - k) * U4 - (k + 1) * I2)
        full = naive_det(U, lengths, 2, k)
        assert abs(full / (naive_det(Ut, lengths, 0, k) * lead_factor) - 1) < 1e-10


# extremal coefficients --------------------------------------------------------

def test_extremal_no_leads(rng):
    U = random_unitary(rng, 4)
    sen, jun = extremal_coefficients(SecularFunction(FlowerForm(U, [1.0, 1.5], [0.0, 0.0])))
    for k in (0.3, 1.7 + 0.4j, 2.5):
        assert abs(sen(k)) > 1e-3 and abs(jun(k)) > 1e-3


def test_extremal_balanced_kirchhoff(rng):
    s = SecularFunction(build_flower(LoopTwoLeadsModel("magnetic").graph()))
    sen, jun = extremal_coefficients(s)
    for k in rng.uniform(0.1, 4, 10) + 1j * rng.uniform(-1, 1, 10):
        assert abs(sen(k)) < 1e-12
        assert abs(jun(k)) > 1e-3


def test_stub_sqrt2_effective_size_zero():
    s = SecularFunction(build_flower(StubModel(1.0, np.sqrt(2), 0, 0).graph()))
    sen, jun = extremal_coefficients(s)
    for k in (0.7, 1.3 + 0.2j, 2.9):
        assert abs(sen(k)) < 1e-12
    # a single exponential term survives, so the exponent span is zero
    assert len(s.expansion.exponents) == 1


# classification --------------------------------------------------------------

def balanced(coupling):
    return MetricGraph([Vertex("v", coupling)], [Edge("v", "v", 1.0)], [("v", 2)])


def test_classify_balanced_kirchhoff():
    c = classify_asymptotics(SecularFunction(build_flower(balanced({"type": "kirchhoff"}))))
    assert c.non_weyl and c.vertex == "v"


def test_classify_balanced_anti_kirchhoff():
    c = classify_asymptotics(SecularFunction(build_flower(balanced({"type": "anti_kirchhoff"}))))
    assert c.non_weyl


def test_classify_balanced_delta():
    c = classify_asymptotics(SecularFunction(build_flower(balanced({"type": "delta", "alpha": 0.7}))))
    assert c.kind == "Weyl"


def test_classify_unbalanced_kirchhoff():
    g = MetricGraph([Vertex("v", {"type": "kirchhoff"}), Vertex("w", {"type": "dirichlet"})],
                    [Edge("v", "w", 1.0)], [("v", 2)])
    assert classify_asymptotics(SecularFunction(build_flower(g))).kind == "Weyl"


@pytest.mark.parametrize("g", [balanced({"type": "kirchhoff"}),
                               balanced({"type": "delta", "alpha": 1.0}),
                               PolygonModel(4).graph()])
def test_magnetic_classification_invariance(g, rng):
    f = build_flower(g)
    ref = classify_asymptotics(SecularFunction(f)).kind
    for _ in range(50):
        fl = f.with_fluxes(rng.uniform(-np.pi, np.pi, f.N))
        assert classify_asymptotics(SecularFunction(fl)).kind == ref
        assert classify_asymptotics(SecularFunction(apply_magnetic(fl))).kind == ref


@settings(max_examples=25)
@given(st.floats(0.3, 3.0), st.floats(-3.0, 3.0))
def test_magnetic_gauge_constant_ratio(l, phi):
    # the gauge changes F only by a k-independent unimodular factor
    g = MetricGraph([Vertex("v", {"type": "delta", "alpha": 0.4})],
                    [Edge("v", "v", l, phi)], [("v", 1)])
    f = build_flower(g)
    ks = np.array([1.0 - 0.3j, 2.2 + 0.5j, 5.1 - 1.0j, 0.2j])
    r = SecularFunction(f)(ks) / SecularFunction(apply_magnetic(f))(ks)
    assert np.allclose(np.abs(r), 1, atol=1e-10)
    assert np.max(np.abs(r - r[0])) < 1e-10
