"""Short-range repulsion between the nuclear membrane and the cortex.

The pair potential is ``W(d) = k (1 - xi d)^2`` for ``d < 1/xi`` and 0 beyond.
Contact is node-to-segment: every nucleus node ``Y_k`` interacts with every
cortex segment ``[X_i, X_{i+1}]`` through its distance ``d_ki`` to that
segment, and the interaction energy of the two curves is
``E = weight * sum_k sum_i W(d_ki)``.

The nucleus feels ``-grad_Y E`` and the cortex ``-grad_X E``, so the pair
forces cancel exactly. Measuring distances to segments rather than to nodes
keeps the repulsion effective where the cortex is sparsely discretized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContactKernel:
    k: float
    xi: float

    @property
    def cutoff(self) -> float:
        return 1.0 / self.xi

    def value(self, d):
        u = np.maximum(1.0 - self.xi * np.asarray(d, dtype=float), 0.0)
        return self.k * u * u

    def derivative(self, d):
        u = np.maximum(1.0 - self.xi * np.asarray(d, dtype=float), 0.0)
        return -2.0 * self.k * self.xi * u

    def second(self, d):
        d = np.asarray(d, dtype=float)
        return np.where(d < self.cutoff, 2.0 * self.k * self.xi * self.xi, 0.0)


@dataclass(frozen=True)
class ContactPairs:
    """Pairs (nucleus node ``k``, cortex segment ``s``) closer than the cutoff.

    ``lam`` locates the closest point ``X_s + lam (X_{s+1} - X_s)``.
    """

    k: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    diff: np.ndarray  # Y_k - closest point
    dist: np.ndarray

    def __len__(self) -> int:
        return len(self.k)


def _project(y, xa, xb):
    """Closest points of segments ``[xa, xb]`` to points ``y`` (broadcasting)."""
    e = xb - xa
    ee = np.einsum("...j,...j->...", e, e)
    lam = np.clip(np.einsum("...j,...j->...", y - xa, e) / ee, 0.0, 1.0)
    diff = y - (xa + lam[..., None] * e)
    return lam, diff, np.sqrt(np.einsum("...j,...j->...", diff, diff))


def close_pairs(y: np.ndarray, x: np.ndarray, cutoff: float) -> ContactPairs:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(x) == 0 or len(y) == 0:
        e = np.zeros(0, dtype=int)
        return ContactPairs(e, e, np.zeros(0), np.zeros((0, 2)), np.zeros(0))
    xb = np.roll(x, -1, axis=0)
    # cheap rejection: a segment is out of range if both ends are far past its length
    half = 0.5 * np.linalg.norm(xb - x, axis=1)
    mid = 0.5 * (x + xb)
    dm = np.linalg.norm(y[:, None, :] - mid[None, :, :], axis=2)
    kk, ss = np.nonzero(dm < cutoff + half[None, :])
    lam, diff, dist = _project(y[kk], x[ss], xb[ss])
    keep = dist < cutoff
    kk, ss, lam, diff, dist = kk[keep], ss[keep], lam[keep], diff[keep], dist[keep]
    if np.any(dist == 0.0):
        raise FloatingPointError("nucleus node lies on the cortex")
    return ContactPairs(kk, ss, lam, diff, dist)


def interaction_energy(kernel: ContactKernel, y, x, weight: float = 1.0) -> float:
    p = close_pairs(y, x, kernel.cutoff)
    return float(weight * np.sum(kernel.value(p.dist)))


def nucleus_contact_potential(kernel: ContactKernel, y, x, weight: float = 1.0, pairs: ContactPairs | None = None):
    """Potential ``weight sum_i W(d_ki)`` at each nucleus node and its gradient in ``Y_k``."""
    y = np.asarray(y, float)
    p = close_pairs(y, x, kernel.cutoff) if pairs is None else pairs
    w = np.zeros(len(y))
    g = np.zeros((len(y), 2))
    np.add.at(w, p.k, weight * kernel.value(p.dist))
    coef = weight * kernel.derivative(p.dist) / p.dist
    np.add.at(g, p.k, coef[:, None] * p.diff)
    return w, g


def _pair_forces(kernel: ContactKernel, weight: float, xa, xb, y):
    """Forces on the two segment ends, ``-dE/dX_a`` and ``-dE/dX_b``, per pair."""
    lam, diff, dist = _project(y, xa, xb)
    f = (weight * kernel.derivative(dist) / dist)[:, None] * diff
    return (1.0 - lam)[:, None] * f, lam[:, None] * f


def cortex_contact_force(kernel: ContactKernel, x, y, weight: float = 1.0, pairs: ContactPairs | None = None):
    """Force on every cortex node, ``-grad_X E``."""
    x = np.asarray(x, float)
    p = close_pairs(y, x, kernel.cutoff) if pairs is None else pairs
    out = np.zeros((len(x), 2))
    coef = weight * kernel.derivative(p.dist) / p.dist
    f = coef[:, None] * p.diff
    np.add.at(out, p.s, (1.0 - p.lam)[:, None] * f)
    np.add.at(out, (p.s + 1) % len(x), p.lam[:, None] * f)
    return out


def cortex_contact_jacobian(
    kernel: ContactKernel, x, y, weight: float = 1.0, pairs: ContactPairs | None = None, h: float = 1e-7
):
    """Jacobian of :func:`cortex_contact_force` in ``X`` with the nucleus fixed.

    Returned as COO-style node blocks ``(rows, cols, blocks)`` with ``blocks``
    of shape ``(m, 2, 2)``; duplicate entries are meant to be summed. Each
    pair only couples the two ends of its segment, and the blocks are
    obtained by central differences of the analytic pair forces.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    p = close_pairs(y, x, kernel.cutoff) if pairs is None else pairs
    m = len(p)
    ia, ib = p.s, (p.s + 1) % len(x)
    xa, xb, yk = x[ia], x[ib], y[p.k]
    # d[end_row][end_col] blocks: derivative of the force on end_row wrt end_col
    blk = np.zeros((2, 2, m, 2, 2))
    for col_end in range(2):
        for a in range(2):
            e = np.zeros(2)
            e[a] = h
            if col_end == 0:
                fp = _pair_forces(kernel, weight, xa + e, xb, yk)
                fm = _pair_forces(kernel, weight, xa - e, xb, yk)
            else:
                fp = _pair_forces(kernel, weight, xa, xb + e, yk)
                fm = _pair_forces(kernel, weight, xa, xb - e, yk)
            for row_end in range(2):
                blk[row_end, col_end, :, :, a] = (fp[row_end] - fm[row_end]) / (2 * h)
    rows = np.concatenate([ia, ia, ib, ib])
    cols = np.concatenate([ia, ib, ia, ib])
    blocks = np.concatenate([blk[0, 0], blk[0, 1], blk[1, 0], blk[1, 1]])
    return rows, cols, blocks
