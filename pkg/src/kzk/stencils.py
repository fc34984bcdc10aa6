"""Finite-difference stencils on [0, X_max] with the solver's boundary closure.

Nodes are x_i = i h, i = 0..N.  The boundary values u_0 = u_N = 0 are
enforced, and two ghost layers on each side are filled by polynomial
extrapolation that honours the remaining boundary conditions:

    left   u_x(0) = 0         p(x) = a2 x^2 + a3 x^3 + a4 x^4 through u_1..u_3
    right  u_x = u_xx = 0     p(s) = a3 s^3 + a4 s^4 through u_{N-1}, u_{N-2}

All derivative stencils are the standard second-order central ones.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

NGHOST = 2

# interior stencils on offsets -3..3, to be divided by h^order
D1 = np.array([0, 0, -0.5, 0, 0.5, 0, 0])
D2 = np.array([0, 0, 1, -2, 1, 0, 0])
D3 = np.array([0, -0.5, 1, 0, -1, 0.5, 0])
D4 = np.array([0, 1, -4, 6, -4, 1, 0])
D5 = np.array([-0.5, 2, -2.5, 0, 2.5, -2, 0.5])
STENCILS = {1: D1, 2: D2, 3: D3, 4: D4, 5: D5}


@lru_cache(maxsize=None)
def ghost_weights():
    """Dimensionless ghost weights (h cancels in the extrapolation).

    Returns (GL, GR): GL[k] gives u_{-(k+1)} from (u_1, u_2, u_3);
    GR[k] gives u_{N+k+1} from (u_{N-1}, u_{N-2}).
    """
    pw = np.arange(2, 5)
    V = np.array([[float(i) ** k for k in pw] for i in (1, 2, 3)])
    E = np.array([[float(-i) ** k for k in pw] for i in (1, 2)])
    GL = E @ np.linalg.inv(V)
    pw = np.arange(3, 5)
    V = np.array([[float(i) ** k for k in pw] for i in (1, 2)])
    E = np.array([[float(-i) ** k for k in pw] for i in (1, 2)])
    GR = E @ np.linalg.inv(V)
    GL.setflags(write=False)
    GR.setflags(write=False)
    return GL, GR


def extend(u: np.ndarray) -> np.ndarray:
    """Pad axis 0 with two ghost layers per side (boundary rows zeroed)."""
    GL, GR = ghost_weights()
    n = u.shape[0]
    ext = np.zeros((n + 2 * NGHOST,) + u.shape[1:], dtype=u.dtype)
    ext[NGHOST:NGHOST + n] = u
    ext[NGHOST] = 0.0
    ext[NGHOST + n - 1] = 0.0
    inner_l = u[1:4]
    inner_r = u[[n - 2, n - 3]]
    ext[1] = np.tensordot(GL[0], inner_l, axes=1)
    ext[0] = np.tensordot(GL[1], inner_l, axes=1)
    ext[NGHOST + n] = np.tensordot(GR[0], inner_r, axes=1)
    ext[NGHOST + n + 1] = np.tensordot(GR[1], inner_r, axes=1)
    return ext


def apply(ext: np.ndarray, stencil: np.ndarray, h: float, order: int,
          lo: int = 0, hi: int | None = None) -> np.ndarray:
    """Apply a 7-point stencil to the extended array at nodes lo..hi-1.

    Offsets reaching beyond the two ghost layers are dropped, so the 7-point
    fifth-derivative stencil is valid only on interior nodes 1..N-1.
    """
    n = ext.shape[0] - 2 * NGHOST
    hi = n if hi is None else hi
    out = np.zeros((hi - lo,) + ext.shape[1:], dtype=ext.dtype)
    for off, c in zip(range(-3, 4), stencil):
        if c == 0:
            continue
        start = lo + NGHOST + off
        stop = hi + NGHOST + off
        if start < 0 or stop > ext.shape[0]:
            raise ValueError("stencil reaches past the ghost layers")
        out += c * ext[start:stop]
    return out / h ** order


def derivative(u: np.ndarray, h: float, order: int) -> np.ndarray:
    """d^order u / dx^order at every node 0..N (order <= 4)."""
    if order == 0:
        return u.copy()
    if order > 4:
        raise ValueError("full-grid derivatives are available up to order 4")
    return apply(extend(u), STENCILS[order], h, order)


def boundary_uxx(u: np.ndarray, h: float) -> np.ndarray:
    """One-sided u_xx(0) from u_1..u_3, consistent with the left closure."""
    GL, _ = ghost_weights()
    return ((1.0 + GL[0, 0]) * u[1] + GL[0, 1] * u[2] + GL[0, 2] * u[3]) / h ** 2


def linear_operator_stencil(h: float, lam: float, b: float) -> np.ndarray:
    """Coefficients on offsets -3..3 of d5 - d3 + (lam - b) d1."""
    return (D5 / h ** 5) - (D3 / h ** 3) + (lam - b) * (D1 / h)


def banded_operator(nx: int, h: float, lam: float, b: float) -> np.ndarray:
    """Interior matrix of d5 - d3 + (lam - b) d1 in LAPACK band storage.

    Unknowns are u_1..u_{N-1}; ghost values are folded into the first and
    last two rows.  Returns ``ab`` of shape (7, n) with ab[3 + i - j, j] = M[i, j].
    """
    N = nx - 1
    n = N - 1
    if n < 6:
        raise ValueError("grid too small for the 7-point stencil")
    st = linear_operator_stencil(h, lam, b)
    GL, GR = ghost_weights()
    dense_rows = {}

    def add(row, col, val):
        dense_rows.setdefault(row, {}).setdefault(col, 0.0)
        dense_rows[row][col] += val

    ab = np.zeros((7, n))
    for off in range(-3, 4):
        c = st[off + 3]
        # rows whose target column j = i + off lies inside 0..n-1
        i0 = max(0, -off)
        i1 = min(n, n - off)
        ab[3 - off, i0 + off:i1 + off] = c
    # ghost and boundary corrections on the first/last rows
    for r in range(3):
        i = r + 1
        for off in range(-3, 4):
            j = i + off
            if j < 0:
                for k, gk in enumerate(GL[-j - 1]):
                    add(r, k, st[off + 3] * gk)
    for r in range(n - 3, n):
        i = r + 1
        for off in range(-3, 4):
            j = i + off
            if j > N:
                for k, gk in enumerate(GR[j - N - 1]):
                    add(r, n - 1 - k, st[off + 3] * gk)
    for r, cols in dense_rows.items():
        for c, v in cols.items():
            ab[3 + r - c, c] += v
    return ab


def banded_to_dense(ab: np.ndarray) -> np.ndarray:
    n = ab.shape[1]
    M = np.zeros((n, n))
    for d in range(-3, 4):
        row = 3 - d
        for j in range(max(0, d), min(n, n + d)):
            M[j - d, j] = ab[row, j]
    return M
