import numpy as np
import pytest
from hypothesis import given, strategies as st

from reslab.numerics import (QuadratureSpec, erfcx_complex, integrate_semi_infinite,
                             principal_value, quartic_roots)

# mpmath at 30 digits
ERFCX_U3 = complex(-0.622706716388411641105142306861, 1.79071165397990662077818231386)
PV_EXP = -0.69717488323506606876547868192  # PV int_0^inf e^{-x}/(x-1) dx = -e^{-1} Ei(1)
SEMI = complex(0.168803646688089097670275430795, -0.205781351540682866221089547706)


def test_erfcx_zero():
    assert erfcx_complex(0.0) == 1.0


def test_erfcx_real_asymptotic():
    u = 20.0
    # leading term 1/(u sqrt pi) is off by about 1/(2u^2); compare with the series
    terms = [1.0]
    for n in range(1, 9):
        terms.append(terms[-1] * -(2 * n - 1) / (2 * u * u))
    series = sum(terms) / (u * np.sqrt(np.pi))
    assert abs(erfcx_complex(u) / series - 1) < 1e-10
    assert abs(erfcx_complex(u) * u * np.sqrt(np.pi) - 1) < 2e-3


def test_erfcx_trapezoid_oracle():
    u = -np.exp(-0.25j * np.pi) * 3 * np.sqrt(0.5)
    # erfcx(u) = 2/sqrt(pi) int_0^inf exp(-2ux - x^2) dx
    x = np.linspace(0.0, 20.0, 1_000_001)
    y = np.exp(-2 * u * x - x * x)
    h = x[1] - x[0]
    trap = 2 / np.sqrt(np.pi) * h * (y.sum() - 0.5 * (y[0] + y[-1]))
    val = erfcx_complex(u)
    assert abs(val - trap) < 1e-8 * abs(val)
    assert abs(val - ERFCX_U3) < 1e-13 * abs(val)


def test_erfcx_against_mpmath(rng):
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    worst = 0.0
    for _ in range(300):
        u = 50 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        U = mp.mpc(u)
        ref = complex(mp.exp(U * U) * mp.erfc(U))
        if not np.isfinite(ref) or abs(ref) > 1e300:
            continue
        worst = max(worst, abs(erfcx_complex(u) - ref) / abs(ref))
    assert worst <= 1e-12


@given(st.floats(-40, 40), st.floats(-40, 40))
def test_erfcx_conjugation(x, y):
    u = complex(x, y)
    a, b = erfcx_complex(u), erfcx_complex(u.conjugate())
    if np.isfinite(a):
        assert abs(b - np.conj(a)) <= 1e-14 * abs(a)


def test_erfcx_vectorized():
    u = np.array([0.5, 1j, -2 + 3j])
    assert np.allclose(erfcx_complex(u), [erfcx_complex(z) for z in u], rtol=0, atol=0)


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4))
def test_quartic_roots_recovered(roots):
    r = np.array(roots)
    # keep the roots apart so the conditioning is tame
    if min(abs(a - b) for i, a in enumerate(r) for b in r[i + 1:]) < 0.05:
        return
    c = np.poly(r)  # c[0] k^4 + ...
    found = quartic_roots(c[4], c[3], c[2], c[1], c[0])
    for a in r:
        assert np.min(np.abs(found - a)) < 1e-9 * max(1.0, abs(a))


def test_quartic_sorted_and_degenerate():
    f = quartic_roots(4, 0, -5, 0, 1)  # (k^2 - 1)(k^2 - 4)
    assert np.allclose(f, [-2, -1, 1, 2])
    with pytest.raises(ValueError):
        quartic_roots(1, 2, 3, 4, 0)


def test_principal_value_exponential():
    v, err = principal_value(lambda x: np.exp(-x), 1.0, 0.0, np.inf)
    assert abs(v - PV_EXP) < 1e-9
    assert err < 1e-7


def test_principal_value_finite_interval():
    # PV int_0^2 x^2/(x - 1) dx = [x^2/2 + x + log|x - 1|]_0^2 = 4
    v, _ = principal_value(lambda x: x * x, 1.0, 0.0, 2.0)
    assert abs(v - 4.0) < 1e-10


def test_principal_value_rejects_outside():
    with pytest.raises(ValueError):
        principal_value(np.exp, 3.0, 0.0, 2.0)


@pytest.mark.parametrize("transform", ["algebraic", "exponential"])
def test_semi_infinite(transform):
    spec = QuadratureSpec(transform=transform)
    v, err = integrate_semi_infinite(lambda z: z * z * np.exp(-z * z) / (z * z + 1j), 0.0, spec)
    assert abs(v - SEMI) < 1e-10


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(epsabs=0)
    with pytest.raises(ValueError):
        QuadratureSpec(transform="tanh")
