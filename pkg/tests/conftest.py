import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("reslab", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("reslab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_polynomial(rng):
    """(roots, multiplicities, evaluator) with degree <= 8, roots in the unit disc."""
    while True:
        n = int(rng.integers(1, 6))
        r = np.sqrt(rng.uniform(0, 0.95, n)) * np.exp(2j * np.pi * rng.uniform(size=n))
        mult = rng.integers(1, 4, n)
        if mult.sum() <= 8:
            break

    def f(z):
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        for a, m in zip(r, mult):
            out = out * (z - a) ** int(m)
        return out

    return r, mult, f


def match_roots(found, roots, mult):
    """Max location error after pairing each true root with the nearest found one."""
    err = 0.0
    for a, m in zip(roots, mult):
        d = [abs(x.location - a) for x in found]
        i = int(np.argmin(d))
        err = max(err, d[i])
    return err


# filled by test_acceptance; summarised after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE, key=lambda c: c.number):
        terminalreporter.write_line(c.line())
        for d in c.details():
            terminalreporter.write_line(d)
