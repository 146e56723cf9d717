"""Modal Taylor bases in space and time, Gauss quadrature and degree embeddings.

Cells are handled in reference coordinates: ``xi = (x - x_K) / h`` in
``[-1/2, 1/2]`` and ``tau = (t - t_n) / dt`` in ``[0, 1]``.  The space-time
modes are ordered by total degree, so the degree-``p`` basis is always a
prefix of the degree-``M`` basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

MAX_QUADRATURE_POINTS = 16


@dataclass(frozen=True)
class TaylorBasis1D:
    """Scaled Taylor monomials ``((x - center) / scale)**i / i!``, ``i <= degree``."""

    degree: int
    center: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def _check(self, i: int) -> None:
        if not 0 <= i <= self.degree:
            raise IndexError(f"basis index {i} outside 0..{self.degree}")


def eval_basis(basis: TaylorBasis1D, i: int, x):
    basis._check(i)
    xi = (np.asarray(x, dtype=float) - basis.center) / basis.scale
    return xi**i / math.factorial(i)


def eval_basis_dt(basis: TaylorBasis1D, i: int, t):
    """Derivative of mode ``i`` with respect to the physical coordinate."""
    basis._check(i)
    tau = (np.asarray(t, dtype=float) - basis.center) / basis.scale
    if i == 0:
        return np.zeros_like(tau)
    return tau ** (i - 1) / math.factorial(i - 1) / basis.scale


def monomials(xi, degree: int, derivative: int = 0) -> np.ndarray:
    """Table ``T[..., i]`` of the ``derivative``-th derivative of ``xi**i / i!``."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape + (degree + 1,))
    for i in range(derivative, degree + 1):
        k = i - derivative
        out[..., i] = xi**k / math.factorial(k)
    return out


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on the reference interval ``[0, 1]``."""

    nodes: np.ndarray
    weights: np.ndarray

    def shifted(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights mapped to ``[a, b]`` (weights sum to ``b - a``)."""
        return a + (b - a) * self.nodes, (b - a) * self.weights


@lru_cache(maxsize=None)
def gauss_rule(n: int) -> QuadratureRule:
    if not 1 <= n <= MAX_QUADRATURE_POINTS:
        raise ValueError(f"number of Gauss points must be in 1..{MAX_QUADRATURE_POINTS}, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


def n_modes(degree: int) -> int:
    """Number of space-time modes of total degree <= ``degree``."""
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def space_time_index(degree: int) -> tuple[tuple[int, int], ...]:
    """``(space degree, time degree)`` pairs ordered by total degree, then lexicographically."""
    pairs = [(i, m) for i in range(degree + 1) for m in range(degree + 1) if i + m <= degree]
    return tuple(sorted(pairs, key=lambda im: (im[0] + im[1], im[0], im[1])))


class SpaceTimeBasis:
    """Tensor Taylor basis truncated to total degree ``degree`` on a reference cell.

    ``modes`` optionally restricts the basis to a subset of ``(i, m)`` pairs
    of total degree <= ``degree``.  Tables returned by the ``*_table``
    methods have shape ``(n_xi, n_tau, L)``.
    """

    def __init__(self, degree: int, modes=None):
        if degree < 0:
            raise ValueError(f"degree must be >= 0, got {degree}")
        self.degree = degree
        self.index_map = space_time_index(degree) if modes is None else tuple(modes)
        if any(i + m > degree for i, m in self.index_map):
            raise ValueError(f"modes exceed total degree {degree}")
        self.L = len(self.index_map)
        self._space = np.array([i for i, _ in self.index_map])
        self._time = np.array([m for _, m in self.index_map])

    def __repr__(self):
        return f"SpaceTimeBasis(degree={self.degree}, L={self.L})"

    def _table(self, xi, tau, dx: int, dt: int) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        sx = monomials(xi, self.degree, dx)[:, self._space]
        st = monomials(tau, self.degree, dt)[:, self._time]
        return sx[:, None, :] * st[None, :, :]

    def table(self, xi, tau) -> np.ndarray:
        return self._table(xi, tau, 0, 0)

    def dxi_table(self, xi, tau) -> np.ndarray:
        return self._table(xi, tau, 1, 0)

    def dtau_table(self, xi, tau) -> np.ndarray:
        return self._table(xi, tau, 0, 1)

    def evaluate(self, coeffs, xi, tau) -> np.ndarray:
        """Evaluate coefficients ``(..., L, Q)`` at the grid ``xi x tau`` -> ``(..., n_xi, n_tau, Q)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 2:
            return apply_table(self.table(xi, tau), coeffs[None])[0]
        return apply_table(self.table(xi, tau), coeffs)


def apply_table(table, coeffs) -> np.ndarray:
    """``einsum("...l,nlq->n...q")`` through one batched matmul (einsum's loop is slow here)."""
    table = np.asarray(table, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    flat = table.reshape(-1, table.shape[-1])
    out = np.matmul(flat, coeffs)
    return out.reshape(coeffs.shape[:-2] + table.shape[:-1] + coeffs.shape[-1:])


def project_table(table, values) -> np.ndarray:
    """``einsum("...j,n...q->njq")``: integrate point values against a weighted test table."""
    table = np.asarray(table, dtype=float)
    flat = table.reshape(-1, table.shape[-1])
    n_pts = flat.shape[0]
    values = np.asarray(values, dtype=float)
    lead = values.shape[: values.ndim - (table.ndim - 1) - 1]
    vals = values.reshape(lead + (n_pts, values.shape[-1]))
    return np.matmul(flat.T, vals)


def embed_coeffs(coeffs, src_degree: int, dst_degree: int) -> np.ndarray:
    """Zero-pad coefficients ``(..., L_src, Q)`` from degree ``src_degree`` to ``dst_degree``."""
    if dst_degree < src_degree:
        raise ValueError(f"cannot embed degree {src_degree} into lower degree {dst_degree}")
    coeffs = np.asarray(coeffs, dtype=float)
    l_src, l_dst = n_modes(src_degree), n_modes(dst_degree)
    if coeffs.shape[-2] != l_src:
        raise ValueError(f"expected {l_src} modes for degree {src_degree}, got {coeffs.shape[-2]}")
    out = np.zeros(coeffs.shape[:-2] + (l_dst, coeffs.shape[-1]))
    out[..., :l_src, :] = coeffs
    return out


# --- exact rational structures -------------------------------------------------
#
# The Taylor modes are badly scaled (condition numbers grow like 10**(2M)), so
# the small dense operators are built and inverted in exact arithmetic and
# rounded once.


def _centred_moment(k: int) -> Fraction:
    """``int_{-1/2}^{1/2} xi**k dxi``."""
    if k % 2:
        return Fraction(0)
    return Fraction(1, 2**k * (k + 1))


def exact_inverse(A: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(A)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _to_array(A) -> np.ndarray:
    out = np.array([[float(v) for v in row] for row in A])
    out.setflags(write=False)
    return out


def _exact_B(idx) -> list[list[Fraction]]:
    B = []
    for ij, mj in idx:
        row = []
        for il, ml in idx:
            scale = Fraction(1, math.factorial(il) * math.factorial(ml) * math.factorial(ij) * math.factorial(mj))
            s = _centred_moment(il + ij)
            vol = Fraction(mj, ml + mj) if mj > 0 else Fraction(0)
            row.append(scale * s * (1 - vol))
        B.append(row)
    return B


def _exact_T(idx, M: int) -> list[list[Fraction]]:
    return [
        [
            _centred_moment(i + ij) / (math.factorial(i) * math.factorial(ij)) if mj == 0 else Fraction(0)
            for i in range(M + 1)
        ]
        for ij, mj in idx
    ]


@lru_cache(maxsize=None)
def subspace_matrices(modes: tuple, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference ``B``, ``B^{-1}`` and ``B^{-1} T`` on the span of ``modes``.

    ``T[j, i] = int lambda_i(xi) theta_j(xi, 0) dxi`` maps degree-M spatial
    Taylor data to the initial-data vector, so ``B^{-1} T`` sends spatial
    data to the part of the iterate driven by ``u_n``.
    """
    B = _exact_B(modes)
    B_inv = exact_inverse(B)
    T = _exact_T(modes, M)
    n = len(modes)
    BT = [[sum(B_inv[j][k] * T[k][i] for k in range(n)) for i in range(M + 1)] for j in range(n)]
    return _to_array(B), _to_array(B_inv), _to_array(BT)


def predictor_matrices(degree: int, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``subspace_matrices`` for the full total-degree-``degree`` basis."""
    return subspace_matrices(space_time_index(degree), M)


@lru_cache(maxsize=None)
def exact_initial_table(modes: tuple, M: int) -> np.ndarray:
    return _to_array(_exact_T(modes, M))


@lru_cache(maxsize=None)
def mass_matrices(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Spatial mass matrix on the unit reference cell and its inverse."""
    Mm = [
        [_centred_moment(i + j) / (math.factorial(i) * math.factorial(j)) for j in range(degree + 1)]
        for i in range(degree + 1)
    ]
    return _to_array(Mm), _to_array(exact_inverse(Mm))
