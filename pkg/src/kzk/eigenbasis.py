"""Trigonometric eigensystems of -d^2/dy^2 on [0, L].

Four boundary-condition families are supported:

    a  psi(0) = psi(L) = 0          sin(pi l y / L),        l >= 1
    b  psi'(0) = psi'(L) = 0        cos(pi l y / L),        l >= 0
    c  psi(0) = psi'(L) = 0         sin((l - 1/2) pi y / L), l >= 1
    d  L-periodic                   1, cos(2 pi k y/L), sin(2 pi k y/L)

Each basis carries quadrature nodes and weights on which the retained modes
are exactly orthonormal, so ``forward``/``inverse`` are plain matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("a", "b", "c", "d")
STEKLOV_KAPPA = {"a": 1.0, "c": 4.0}


def _family(tag: str) -> str:
    t = str(tag).strip().lower()
    aliases = {"a_dirichletdirichlet": "a", "b_neumannneumann": "b",
               "c_dirichletneumann": "c", "d_periodic": "d"}
    t = aliases.get(t, t)
    if t not in FAMILIES:
        raise ValueError(f"unknown boundary-condition family {tag!r}")
    return t


def mode_table(family: str, L: float, count: int):
    """(index, eigenvalue, kind, wavenumber) for the first ``count`` modes."""
    family = _family(family)
    rows = []
    if family == "a":
        for l in range(1, count + 1):
            k = np.pi * l / L
            rows.append((l, k * k, "sin", k))
    elif family == "b":
        for l in range(count):
            k = np.pi * l / L
            rows.append((l, k * k, "cos" if l else "const", k))
    elif family == "c":
        for l in range(1, count + 1):
            k = (l - 0.5) * np.pi / L
            rows.append((l, k * k, "sin", k))
    else:
        rows.append((0, 0.0, "const", 0.0))
        j = 1
        while len(rows) < count:
            k = 2 * np.pi * j / L
            rows.append((2 * j - 1, k * k, "cos", k))
            if len(rows) < count:
                rows.append((2 * j, k * k, "sin", k))
            j += 1
    return rows


def eigenfunction(kind: str, k: float, L: float, y, derivative: int = 0):
    """Normalized eigenfunction (or its derivative) sampled at ``y``."""
    y = np.asarray(y, dtype=float)
    if kind == "const":
        v = np.full_like(y, 1.0 / np.sqrt(L))
        return v if derivative == 0 else np.zeros_like(y)
    amp = np.sqrt(2.0 / L) * k ** derivative
    phase = k * y
    # d/dy cycles sin -> cos -> -sin -> -cos
    if kind == "sin":
        funcs = (np.sin, np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z))
    else:
        funcs = (np.cos, lambda z: -np.sin(z), lambda z: -np.cos(z), np.sin)
    return amp * funcs[derivative % 4](phase)


def _nodes(family: str, L: float, count: int):
    if family == "a":
        n = count
        y = L * np.arange(1, n + 1) / (n + 1)
        w = np.full(n, L / (n + 1))
    elif family == "b":
        # midpoints: DCT-II is exact for cos modes 0..count-1
        n = count
        y = L * (np.arange(n) + 0.5) / n
        w = np.full(n, L / n)
    elif family == "c":
        # midpoints: DST-IV is exact for the quarter-wave modes
        n = count
        y = L * (np.arange(n) + 0.5) / n
        w = np.full(n, L / n)
    else:
        # odd node count keeps every retained cos/sin pair exactly orthogonal
        n = count if count % 2 == 1 else count + 1
        y = L * np.arange(n) / n
        w = np.full(n, L / n)
    return y, w


@dataclass(frozen=True)
class EigenBasis:
    family: str
    L: float
    count: int
    indices: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    kinds: tuple = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)  # (n_nodes, count): psi_l(y_j)

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def kappa(self) -> float:
        return STEKLOV_KAPPA[self.family]

    def sample(self, y, derivative: int = 0) -> np.ndarray:
        """(len(y), count) matrix of psi_l^(derivative)(y)."""
        y = np.asarray(y, dtype=float)
        return np.stack([eigenfunction(kd, k, self.L, y, derivative)
                         for kd, k in zip(self.kinds, self.wavenumbers)], axis=-1)

    def forward(self, samples, axis: int = -1) -> np.ndarray:
        """Coefficients c_l = int f psi_l dy from samples at ``nodes``."""
        f = np.moveaxis(np.asarray(samples, dtype=float), axis, -1)
        if f.shape[-1] != self.n_nodes:
            raise ValueError(f"expected {self.n_nodes} samples along axis {axis}, "
                             f"got {f.shape[-1]}")
        c = (f * self.weights) @ self.matrix
        return np.moveaxis(c, -1, axis)

    def inverse(self, coeffs, axis: int = -1) -> np.ndarray:
        """Samples at ``nodes`` of sum_l c_l psi_l."""
        c = np.moveaxis(np.asarray(coeffs, dtype=float), axis, -1)
        m = c.shape[-1]
        if m > self.count:
            raise ValueError(f"{m} coefficients exceed the basis size {self.count}")
        f = c @ self.matrix[:, :m].T
        return np.moveaxis(f, -1, axis)

    def dealias_mask(self, fraction: float) -> np.ndarray:
        """1 on the lowest ``fraction`` of modes, 0 above."""
        keep = int(np.floor(fraction * self.count + 1e-12))
        if self.family == "d" and keep % 2 == 0:
            keep -= 1  # never split a cos/sin pair
        mask = np.zeros(self.count)
        mask[:max(keep, 1)] = 1.0
        return mask


def build_basis(family, L: float, count: int = 32) -> EigenBasis:
    fam = _family(family)
    if not L > 0:
        raise ValueError("strip width L must be positive")
    if count < 1:
        raise ValueError("mode count must be at least 1")
    if fam == "d" and count < 2:
        raise ValueError("family d needs count >= 2 to include a sine/cosine pair")
    rows = mode_table(fam, L, count)
    idx = np.array([r[0] for r in rows])
    lam = np.array([r[1] for r in rows])
    kinds = tuple(r[2] for r in rows)
    ks = np.array([r[3] for r in rows])
    y, w = _nodes(fam, L, count)
    mat = np.stack([eigenfunction(kd, k, L, y) for kd, k in zip(kinds, ks)], axis=-1)
    for a in (idx, lam, ks, y, w, mat):
        a.setflags(write=False)
    return EigenBasis(fam, float(L), count, idx, lam, kinds, ks, y, w, mat)


def gram_matrix(basis: EigenBasis) -> np.ndarray:
    return basis.matrix.T @ (basis.weights[:, None] * basis.matrix)


def steklov_check(family, L: float, f, count: int = 512, tol: float = 1e-8):
    """Ratio int f^2 / int f'^2 for a callable f in the family's form domain.

    The integrals come from the eigen-expansion: int f^2 = sum c_l^2 and
    int f'^2 = sum lambda_l c_l^2.  Asserts the ratio does not exceed
    kappa L^2 / pi^2.
    """
    fam = _family(family)
    if fam not in STEKLOV_KAPPA:
        raise ValueError("Steklov constants are defined for families a and c only")
    scale = max(1.0, float(np.max(np.abs(f(np.linspace(0, L, 257))))))
    if abs(f(np.array([0.0]))[0]) > tol * scale:
        raise ValueError("f(0) != 0")
    if fam == "a" and abs(f(np.array([L]))[0]) > tol * scale:
        raise ValueError("family a requires f(L) = 0")
    basis = build_basis(fam, L, count)
    c = basis.forward(f(basis.nodes))
    num = float(np.sum(c * c))
    den = float(np.sum(basis.eigenvalues * c * c))
    if den == 0.0:
        raise ValueError("f has no energy in the retained modes")
    r = num / den
    bound = basis.kappa * L * L / np.pi ** 2
    if r > bound * (1 + tol):
        raise AssertionError(f"Steklov bound violated: {r} > {bound}")
    return r
