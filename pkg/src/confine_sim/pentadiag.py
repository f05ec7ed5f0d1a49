"""Cyclic pentadiagonal linear systems.

Row ``i`` reads ``a_i x_{i-2} + b_i x_{i-1} + c_i x_i + d_i x_{i+1} + e_i x_{i+2} = f_i``
with indices taken modulo ``N``. The banded part is factored with LAPACK and
the six wrap-around entries are absorbed by a rank-4 Woodbury correction.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, solve, solve_banded

COND_LIMIT = 1e14


class IllConditionedSystemError(ArithmeticError):
    pass


def pentadiagonal_dense(a, b, c, d, e) -> np.ndarray:
    """Assemble the full cyclic matrix (used for checks and as a fallback)."""
    n = len(c)
    m = np.zeros((n, n))
    i = np.arange(n)
    for off, band in ((-2, a), (-1, b), (0, c), (1, d), (2, e)):
        np.add.at(m, (i, (i + off) % n), band)
    return m


def _banded(a, b, c, d, e) -> np.ndarray:
    n = len(c)
    ab = np.zeros((5, n))
    # ab[2 + i - j, j] = A[i, j]
    ab[0, 2:] = e[:-2]
    ab[1, 1:] = d[:-1]
    ab[2, :] = c
    ab[3, :-1] = b[1:]
    ab[4, :-2] = a[2:]
    return ab


def _one_norm(a, b, c, d, e) -> float:
    # column sums of |A|: column j collects a_{j+2}, b_{j+1}, c_j, d_{j-1}, e_{j-2}
    return float(
        np.max(
            np.abs(np.roll(a, -2)) + np.abs(np.roll(b, -1)) + np.abs(c) + np.abs(np.roll(d, 1)) + np.abs(np.roll(e, 2))
        )
    )


def cyclic_pentadiagonal_solve(a, b, c, d, e, rhs, check: bool = True) -> np.ndarray:
    """Solve the cyclic pentadiagonal system; ``rhs`` may be ``(N,)`` or ``(N, k)``.

    Raises :class:`IllConditionedSystemError` when the result is not finite or
    the estimated 1-norm condition number exceeds ``COND_LIMIT``.
    """
    a, b, c, d, e = (np.asarray(v, dtype=float) for v in (a, b, c, d, e))
    n = len(c)
    if n < 5:
        raise ValueError("cyclic pentadiagonal solve needs N >= 5")
    f = np.asarray(rhs, dtype=float)
    vec = f.ndim == 1
    f2 = f[:, None] if vec else f
    k = f2.shape[1]

    probe = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    rows = np.array([0, 1, n - 2, n - 1])
    basis = np.zeros((n, 4))
    basis[rows, np.arange(4)] = 1.0
    # V^T: the wrap-around entries of the four boundary rows
    vt = np.zeros((4, n))
    vt[0, n - 2] += a[0]
    vt[0, n - 1] += b[0]
    vt[1, n - 1] += a[1]
    vt[2, 0] += e[n - 2]
    vt[3, 0] += d[n - 1]
    vt[3, 1] += e[n - 1]

    big = np.column_stack([f2, probe, basis])
    try:
        y = solve_banded((2, 2), _banded(a, b, c, d, e), big, check_finite=False)
        z = y[:, k + 1 :]
        cap = np.eye(4) + vt @ z
        if np.linalg.cond(cap) > COND_LIMIT:
            raise np.linalg.LinAlgError("singular capacitance")
        w = y[:, : k + 1]
        sol = w - z @ np.linalg.solve(cap, vt @ w)
    except (np.linalg.LinAlgError, ValueError):
        dense = pentadiagonal_dense(a, b, c, d, e)
        try:
            with warnings.catch_warnings():
                # conditioning is judged below from the probe solution
                warnings.simplefilter("ignore", LinAlgWarning)
                sol = solve(dense, np.column_stack([f2, probe]), check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise IllConditionedSystemError(f"pentadiagonal system is singular: {exc}") from None

    x = sol[:, :k]
    if not np.all(np.isfinite(sol)):
        raise IllConditionedSystemError("non-finite solution of pentadiagonal system")
    if check:
        anorm = _one_norm(a, b, c, d, e)
        ratios = [np.sum(np.abs(sol[:, k])) / n]
        fn = np.sum(np.abs(f2), axis=0)
        nz = fn > 0
        if np.any(nz):
            ratios.append(float(np.max(np.sum(np.abs(x[:, nz]), axis=0) / fn[nz])))
        cond = anorm * max(ratios)
        if not cond < COND_LIMIT:
            raise IllConditionedSystemError(f"pentadiagonal system ill-conditioned (estimate {cond:.3e})")
    return x[:, 0] if vec else x
