"""Explicit corrector: one space-time integral of the weak form per cell.

Per cell and test mode ``j`` (reference coordinates, unit mass matrix)::

    Mref (c_new - c_old) = dt/h * ( int int F(u_h) lambda_j'  dxi dtau
                                    - [lambda_j F_hat]_{-1/2}^{+1/2}
                                    + h int int S lambda_j dxi dtau )

The finite-volume update is the ``N = 0`` case, where the volume term drops.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .basis import SpaceTimeBasis, apply_table, gauss_rule, mass_matrices, monomials, project_table
from .equations import PdeSystem
from .errors import InadmissibleStateError


@dataclass(frozen=True)
class NumericalFlux:
    evaluate: Callable[[np.ndarray, np.ndarray, PdeSystem], np.ndarray]

    def __call__(self, uL, uR, sys: PdeSystem) -> np.ndarray:
        return self.evaluate(uL, uR, sys)


def _require_admissible(u, sys: PdeSystem, where: str):
    ok = np.asarray(sys.admissible(u), dtype=bool)
    if not ok.all():
        cells = np.nonzero(~ok.reshape(ok.shape[0], -1).all(axis=1))[0] if ok.ndim else None
        raise InadmissibleStateError(f"inadmissible state at {where}", cells=cells)


def rusanov_flux(uL, uR, sys: PdeSystem) -> np.ndarray:
    """Local Lax-Friedrichs flux; states have the component axis last."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    _require_admissible(uL, sys, "interface (left state)")
    _require_admissible(uR, sys, "interface (right state)")
    s = np.maximum(sys.max_abs_eigenvalue(uL), sys.max_abs_eigenvalue(uR))
    return 0.5 * (sys.flux(uL) + sys.flux(uR)) - 0.5 * np.asarray(s)[..., None] * (uR - uL)


RUSANOV = NumericalFlux(rusanov_flux)


@lru_cache(maxsize=None)
def _tables(N: int, M: int):
    """Trace, volume and test tables for data degree ``N`` and predictor degree ``M``."""
    basis = SpaceTimeBasis(M)
    rule = gauss_rule(M + 1)
    tau, w_t = rule.nodes, rule.weights
    trace_left = basis.table([-0.5], tau)[0]  # (n_t, L)
    trace_right = basis.table([0.5], tau)[0]
    xi = rule.nodes - 0.5
    volume = basis.table(xi, tau)  # (n_x, n_t, L)
    w_vol = np.outer(rule.weights, w_t)
    dtest = monomials(xi, N, derivative=1)  # (n_x, N+1)
    test_vol = monomials(xi, N)
    test_left = monomials(-0.5, N)
    test_right = monomials(0.5, N)
    return trace_left, trace_right, w_t, volume, w_vol, dtest, test_vol, test_left, test_right, xi


def interface_fluxes(padded_pred, sys: PdeSystem, M: int, flux: NumericalFlux = RUSANOV) -> np.ndarray:
    """Time-quadrature-node fluxes at the ``n + 1`` interfaces of a one-ghost-padded mesh.

    ``padded_pred`` has shape ``(n + 2, L, Q)``; returns ``(n + 1, n_t, Q)``.
    """
    trace_left, trace_right, *_ = _tables(0, M)
    right_of_cell = apply_table(trace_right, padded_pred[:-1])
    left_of_next = apply_table(trace_left, padded_pred[1:])
    return flux(right_of_cell, left_of_next, sys)


def correct(
    data,
    padded_pred,
    sys: PdeSystem,
    h: float,
    dt: float,
    M: int,
    flux: NumericalFlux = RUSANOV,
    x_centers=None,
) -> np.ndarray:
    """Advance degree-N cell data ``(n, N + 1, Q)`` by one step.

    ``padded_pred`` holds degree-M predictor coefficients of the cells plus
    one ghost on each side.
    """
    data = np.asarray(data, dtype=float)
    padded_pred = np.asarray(padded_pred, dtype=float)
    N = data.shape[1] - 1
    trace_left, trace_right, w_t, volume, w_vol, dtest, test_vol, test_left, test_right, xi = _tables(N, M)
    pred = padded_pred[1:-1]
    fhat = interface_fluxes(padded_pred, sys, M, flux)
    f_int = np.einsum("t,ntq->nq", w_t, fhat)  # time averages at interfaces
    if N == 0:
        return data - (dt / h) * (f_int[1:] - f_int[:-1])[:, None, :]

    # subtract a per-cell constant flux so constant states give an exactly zero update
    f_ref = sys.flux(pred[:, 0, :])
    boundary = (
        test_right[None, :, None] * (f_int[1:] - f_ref)[:, None, :]
        - test_left[None, :, None] * (f_int[:-1] - f_ref)[:, None, :]
    )
    states = apply_table(volume, pred)
    _require_admissible(states, sys, "volume quadrature nodes")
    f_vol = sys.flux(states) - f_ref[:, None, None, :]
    vol = project_table(w_vol[:, :, None] * dtest[:, None, :], f_vol)
    rhs = vol - boundary
    if sys.source is not None:
        x = np.asarray(x_centers, dtype=float)[:, None] + h * xi[None, :]
        x = np.broadcast_to(x[:, :, None], states.shape[:-1])
        rhs = rhs + h * np.einsum("ab,aj,nabq->njq", w_vol, test_vol, sys.source(x, states))
    _, mass_inv = mass_matrices(N)
    return data + (dt / h) * apply_table(mass_inv, rhs)


def corrector_dg(own_pred, left_pred, right_pred, data, sys, h, dt, M, flux: NumericalFlux = RUSANOV):
    """Single-cell form of ``correct``: predictor blocks ``(L, Q)``, data ``(N + 1, Q)``."""
    padded = np.stack([left_pred, own_pred, right_pred])
    return correct(np.asarray(data, dtype=float)[None], padded, sys, h, dt, M, flux)[0]


def corrector_fv(own_pred, left_pred, right_pred, mean, sys, h, dt, M, flux: NumericalFlux = RUSANOV):
    mean = np.asarray(mean, dtype=float).reshape(1, -1)
    return corrector_dg(own_pred, left_pred, right_pred, mean, sys, h, dt, M, flux)[0]
