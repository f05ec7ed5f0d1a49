import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confine_sim.pentadiag import IllConditionedSystemError, cyclic_pentadiagonal_solve, pentadiagonal_dense


def _bands(rng, n, dominance=5.0):
    a, b, d, e = (rng.normal(size=n) for _ in range(4))
    c = dominance + np.abs(rng.normal(size=n))
    return a, b, c, d, e


def test_dense_layout():
    n = 6
    a, b, c, d, e = (np.arange(n) + k * 10.0 for k in range(5))
    m = pentadiagonal_dense(a, b, c, d, e)
    for i in range(n):
        assert m[i, (i - 2) % n] == a[i]
        assert m[i, (i - 1) % n] == b[i]
        assert m[i, i] == c[i]
        assert m[i, (i + 1) % n] == d[i]
        assert m[i, (i + 2) % n] == e[i]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(5, 300), seed=st.integers(0, 10**6))
def test_solve_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    bands = _bands(rng, n)
    rhs = rng.normal(size=n)
    x = cyclic_pentadiagonal_solve(*bands, rhs)
    ref = np.linalg.solve(pentadiagonal_dense(*bands), rhs)
    assert np.max(np.abs(x - ref)) <= 1e-10 * max(1.0, np.abs(ref).max())


def test_non_dominant_system():
    rng = np.random.default_rng(0)
    bands = _bands(rng, 50, dominance=0.0)
    rhs = rng.normal(size=50)
    m = pentadiagonal_dense(*bands)
    x = cyclic_pentadiagonal_solve(*bands, rhs)
    assert np.linalg.norm(m @ x - rhs) <= 1e-9 * np.linalg.norm(rhs) * np.linalg.cond(m)


def test_singular_system_detected():
    n = 10
    ones = np.ones(n)
    # circulant second difference: constant vectors are in the kernel
    with pytest.raises(IllConditionedSystemError):
        cyclic_pentadiagonal_solve(0 * ones, -ones, 2 * ones, -ones, 0 * ones, np.arange(n, dtype=float))


def test_requires_five_unknowns():
    with pytest.raises(ValueError):
        cyclic_pentadiagonal_solve(*(np.ones(4),) * 5, np.ones(4))
