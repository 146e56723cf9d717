"""Degree-M spatial reconstruction from degree-N cell data.

Polynomials are expressed in the Taylor basis of the reconstructed cell,
``xi**i / i!`` with ``xi = (x - x_K) / h``.  Neighbor ``k`` of a cell occupies
``[k - 1/2, k + 1/2]`` in these coordinates.

``central`` is the conservative interpolant of the stencil data.  ``cweno``
blends it with the two one-sided linear polynomials (CWENO, linear weights
0.7 / 0.15 / 0.15, Jiang-Shu indicators, power 4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .basis import exact_inverse, gauss_rule, monomials
from .errors import ConfigurationError

MODES = ("central", "cweno")
CWENO_LINEAR_WEIGHTS = (0.7, 0.15, 0.15)  # central, left, right
CWENO_EPSILON = 1e-12
CWENO_POWER = 4


@dataclass(frozen=True)
class ReconstructionStencil:
    center_cell: int
    neighbor_cells: tuple[int, ...]
    mode: str = "cweno"


def stencil_offsets(M: int) -> np.ndarray:
    """Offsets of the width-(M+1) stencil; an even width gets the extra cell on the left."""
    return np.arange(-((M + 1) // 2), M // 2 + 1)


def halo(M: int) -> tuple[int, int]:
    """Ghost cells needed on each side: the stencil, and at least one for the CWENO laterals."""
    offsets = stencil_offsets(M)
    return max(-int(offsets[0]), 1), max(int(offsets[-1]), 1)


def stencil(center_cell: int, M: int, mode: str = "cweno") -> ReconstructionStencil:
    return ReconstructionStencil(center_cell, tuple(center_cell + stencil_offsets(M)), mode)


def _moment(a: Fraction, b: Fraction, r: int, i: int) -> Fraction:
    """``int_a^b (xi - c)**r / r! * xi**i / i! dxi`` with c the centre of [a, b], exactly."""
    c = (a + b) / 2
    total = Fraction(0)
    for k in range(r + 1):
        e = k + i + 1
        total += math.comb(r, k) * (-c) ** (r - k) * (b**e - a**e) / e
    return total / (math.factorial(r) * math.factorial(i))


@lru_cache(maxsize=None)
def _central_operator(N: int, M: int) -> np.ndarray:
    """Linear map from stencil data to degree-M Taylor coefficients.

    Input is the flattened vector ``[centre modes (N+1), neighbour averages]``.
    The centre cell's first N+1 moments are matched exactly, neighbour
    averages in the least-squares sense (exactly when N = 0).  Built in
    rational arithmetic so the centre moments survive rounding.
    """
    half = Fraction(1, 2)
    neighbours = [int(k) for k in stencil_offsets(M) if k != 0]
    C = [[_moment(-half, half, r, i) for i in range(M + 1)] for r in range(N + 1)]
    G = [[_moment(-half, half, r, i) for i in range(N + 1)] for r in range(N + 1)]
    A = [[_moment(k - half, k + half, 0, i) for i in range(M + 1)] for k in neighbours]
    n_c, size = N + 1, M + 1 + N + 1
    # KKT system for min |A c - b|^2 subject to C c = G d
    kkt = [[Fraction(0)] * size for _ in range(size)]
    for i in range(M + 1):
        for j in range(M + 1):
            kkt[i][j] = 2 * sum(A[k][i] * A[k][j] for k in range(len(A)))
        for r in range(n_c):
            kkt[i][M + 1 + r] = C[r][i]
            kkt[M + 1 + r][i] = C[r][i]
    n_in = n_c + len(neighbours)
    rhs = [[Fraction(0)] * n_in for _ in range(size)]
    for i in range(M + 1):
        for k in range(len(neighbours)):
            rhs[i][n_c + k] = 2 * A[k][i]
    for r in range(n_c):
        for j in range(n_c):
            rhs[M + 1 + r][j] = G[r][j]
    inv = exact_inverse(kkt)
    sol = [[sum(inv[i][k] * rhs[k][j] for k in range(size)) for j in range(n_in)] for i in range(M + 1)]
    return np.array([[float(v) for v in row] for row in sol])


@lru_cache(maxsize=None)
def smoothness_matrix(M: int) -> np.ndarray:
    """Quadratic form ``c^T S c = sum_{l>=1} int_{-1/2}^{1/2} (d^l P / dxi^l)^2 dxi``."""
    rule = gauss_rule(M + 1)
    xi = rule.nodes - 0.5
    S = np.zeros((M + 1, M + 1))
    for l in range(1, M + 1):
        D = monomials(xi, M, derivative=l)
        S += np.einsum("q,qi,qj->ij", rule.weights, D, D)
    return S


def cell_average_factors(N: int) -> np.ndarray:
    """Average of each Taylor mode over the unit reference cell."""
    return np.array([0.0 if i % 2 else 0.5**i / math.factorial(i + 1) for i in range(N + 1)])


def cweno_weights(beta_central, beta_left, beta_right):
    d0, dl, dr = CWENO_LINEAR_WEIGHTS
    a0 = d0 / (CWENO_EPSILON + beta_central) ** CWENO_POWER
    al = dl / (CWENO_EPSILON + beta_left) ** CWENO_POWER
    ar = dr / (CWENO_EPSILON + beta_right) ** CWENO_POWER
    total = a0 + al + ar
    return a0 / total, al / total, ar / total


def reconstruct_padded(data: np.ndarray, N: int, M: int, mode: str = "cweno") -> np.ndarray:
    """Reconstruct every interior cell of ghost-padded data.

    ``data`` has shape ``(n + left + right, N + 1, Q)`` with ``left, right``
    given by ``halo(M)``; returns ``(n, M + 1, Q)``.
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown reconstruction mode {mode!r}; expected one of {MODES}")
    if not 0 <= N <= M:
        raise ConfigurationError(f"need 0 <= N <= M, got N={N}, M={M}")
    offsets = stencil_offsets(M)
    n_left, n_right = halo(M)
    n = data.shape[0] - n_left - n_right
    Q = data.shape[2]
    if N == M:
        return data[n_left : n_left + n].copy()
    avg_factors = cell_average_factors(N)
    means = np.einsum("cnq,n->cq", data, avg_factors)
    centre = data[n_left : n_left + n]
    neighbour_means = [means[n_left + k : n_left + k + n] for k in offsets if k != 0]
    stacked = np.concatenate([centre] + [m[:, None, :] for m in neighbour_means], axis=1)
    R = _central_operator(N, M)
    p_opt = np.einsum("ij,cjq->ciq", R, stacked)
    if mode == "central" or M == 0:
        return p_opt
    mean_c = means[n_left : n_left + n]
    mean_l = means[n_left - 1 : n_left - 1 + n]
    mean_r = means[n_left + 1 : n_left + 1 + n]
    slope_l = mean_c - mean_l
    slope_r = mean_r - mean_c
    S = smoothness_matrix(M)
    beta0 = np.einsum("ciq,ij,cjq->cq", p_opt, S, p_opt)
    w0, wl, wr = cweno_weights(beta0, slope_l**2, slope_r**2)
    d0, dl, dr = CWENO_LINEAR_WEIGHTS
    out = p_opt * (w0 / d0)[:, None, :]
    # P0 = (P_opt - dl P_L - dr P_R) / d0, and P_L, P_R share the centre mean in mode 0
    lin = np.zeros((n, M + 1, Q))
    lin[:, 0] = mean_c * (wl + wr - (w0 / d0) * (dl + dr))
    lin[:, 1] = wl * slope_l + wr * slope_r - (w0 / d0) * (dl * slope_l + dr * slope_r)
    return out + lin


def reconstruct(averages, cell: int, M: int, mode: str = "cweno") -> np.ndarray:
    """Reconstruct one cell from periodic per-cell data ``(n_cells, N + 1, Q)``.

    Stencil indices wrap around; pad the data first for other boundaries.
    """
    data = np.asarray(averages, dtype=float)
    if data.ndim == 1:
        data = data[:, None, None]
    elif data.ndim == 2:
        data = data[:, :, None]
    N = data.shape[1] - 1
    left, right = halo(M)
    idx = (cell + np.arange(-left, right + 1)) % data.shape[0]
    out = reconstruct_padded(data[idx], N, M, mode)[0]
    return out


def evaluate(coeffs, xi) -> np.ndarray:
    """Evaluate Taylor coefficients ``(..., M + 1, Q)`` at reference points ``xi``."""
    coeffs = np.asarray(coeffs, dtype=float)
    T = monomials(xi, coeffs.shape[-2] - 1)
    return np.einsum("...i,ciq->c...q", T, coeffs) if coeffs.ndim == 3 else np.einsum("...i,iq->...q", T, coeffs)
