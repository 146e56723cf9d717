"""Deferred-correction iterations, classic and with growing spaces.

An iteration solves ``L1(u_new) = L1(u_old) - L2(u_old)`` where ``L1`` is a
cheap, explicitly invertible operator and ``L2`` the accurate one.  The
adaptive variant embeds the previous iterate into a larger space before each
update, so iteration ``p`` works in the space that matches its accuracy.

``collocation_pair`` builds the standard ODE instantiation used to check
the order-per-iteration behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DivergedIteration


@dataclass(frozen=True)
class DecOperatorPair:
    solve_l1: Callable[[np.ndarray], np.ndarray]
    apply_l1: Callable[[np.ndarray], np.ndarray]
    apply_l2: Callable[[np.ndarray], np.ndarray]
    delta: float


@dataclass(frozen=True)
class DecAdaptiveStage:
    operators: DecOperatorPair
    embed: Callable[[np.ndarray], np.ndarray]
    space_dim: int


@dataclass(frozen=True)
class DecIterate:
    coeffs: np.ndarray
    iteration_index: int = 0


def _finite_or_raise(values, what: str, p: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DivergedIteration(f"diverged iteration: non-finite {what} at iteration {p}", p)
    return values


def dec_iterate(ops: DecOperatorPair, prev: DecIterate) -> DecIterate:
    p = prev.iteration_index + 1
    l1 = _finite_or_raise(ops.apply_l1(prev.coeffs), "L1", p)
    l2 = _finite_or_raise(ops.apply_l2(prev.coeffs), "L2", p)
    new = _finite_or_raise(ops.solve_l1(l1 - l2), "iterate", p)
    return DecIterate(new, p)


def dec_run_classic(ops: DecOperatorPair, u0: DecIterate, P: int) -> DecIterate:
    if P < 0:
        raise ConfigurationError(f"number of iterations must be >= 0, got {P}")
    u = u0
    for _ in range(P):
        u = dec_iterate(ops, u)
    return u


def dec_run_adaptive(stages: Sequence[DecAdaptiveStage], u0: DecIterate) -> DecIterate:
    u = u0
    for stage in stages:
        embedded = np.asarray(stage.embed(u.coeffs), dtype=float)
        if embedded.shape[0] != stage.space_dim:
            raise ConfigurationError(
                f"embedding produced {embedded.shape[0]} degrees of freedom, "
                f"stage expects {stage.space_dim}"
            )
        u = dec_iterate(stage.operators, DecIterate(embedded, u.iteration_index))
    return u


# --- ODE instantiation -------------------------------------------------------


def equispaced_nodes(n_sub: int) -> np.ndarray:
    if n_sub == 0:
        return np.zeros(1)
    return np.linspace(0.0, 1.0, n_sub + 1)


def integration_matrix(nodes: np.ndarray) -> np.ndarray:
    """``theta[m, r] = int_0^{nodes[m]} ell_r(s) ds`` for the Lagrange basis on ``nodes``."""
    n = len(nodes)
    vander = np.vander(nodes, n, increasing=True)
    # columns of inv(vander) are the monomial coefficients of ell_r
    coeffs = np.linalg.inv(vander)
    powers = np.arange(1, n + 1)
    antider = nodes[:, None] ** powers[None, :] / powers[None, :]
    return antider @ coeffs


def interpolation_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Matrix evaluating the Lagrange interpolant on ``src`` at ``dst``."""
    if len(src) == 1:
        return np.ones((len(dst), 1))
    out = np.ones((len(dst), len(src)))
    for r in range(len(src)):
        for k in range(len(src)):
            if k != r:
                out[:, r] *= (dst - src[k]) / (src[r] - src[k])
    return out


def collocation_pair(f, t0: float, y0, dt: float, n_sub: int) -> DecOperatorPair:
    """DeC pair for ``y' = f(t, y)`` on one step with ``n_sub`` equispaced subintervals.

    Iterates are nodal values of shape ``(n_sub + 1, d)``; node 0 carries the
    initial datum.  ``L1`` is forward Euler from node to node, ``L2`` the
    collocation residual written node to node with the Lagrange
    integration matrix.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    nodes = equispaced_nodes(n_sub)
    times = t0 + dt * nodes
    theta = integration_matrix(nodes)
    steps = np.diff(times)

    def rhs(u):
        return np.stack([np.atleast_1d(f(t, y)) for t, y in zip(times, u)])

    def apply_l1(u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        out[0] = u[0] - y0
        for m in range(1, len(nodes)):
            out[m] = u[m] - u[m - 1] - steps[m - 1] * np.atleast_1d(f(times[m - 1], u[m - 1]))
        return out

    def solve_l1(z):
        z = np.asarray(z, dtype=float)
        u = np.empty_like(z)
        u[0] = z[0] + y0
        for m in range(1, len(nodes)):
            u[m] = z[m] + u[m - 1] + steps[m - 1] * np.atleast_1d(f(times[m - 1], u[m - 1]))
        return u

    # increment form: same zero set as the node-0 form, and L1 - L2 stays O(dt)-Lipschitz
    theta_inc = np.diff(theta, axis=0)

    def apply_l2(u):
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u)
        out[0] = u[0] - y0
        out[1:] = np.diff(u, axis=0) - dt * theta_inc @ rhs(u)
        return out

    return DecOperatorPair(solve_l1=solve_l1, apply_l1=apply_l1, apply_l2=apply_l2, delta=dt)


def dec_ode_step(f, t0: float, y0, dt: float, P: int, adaptive: bool = False) -> np.ndarray:
    """One DeC step of size ``dt``; returns the value at ``t0 + dt``.

    Classic: ``P`` iterations on ``P`` subintervals, starting from the
    constant extension of ``y0``.  Adaptive: stage ``p = 1..P`` works on
    ``p`` subintervals (degree ``p``), embedding by interpolation.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if not adaptive:
        ops = collocation_pair(f, t0, y0, dt, P)
        start = DecIterate(np.tile(y0, (P + 1, 1)), 0)
        return dec_run_classic(ops, start, P).coeffs[-1]
    stages = []
    for p in range(1, P + 1):
        src, dst = equispaced_nodes(p - 1), equispaced_nodes(p)
        interp = interpolation_matrix(src, dst)
        stages.append(
            DecAdaptiveStage(
                operators=collocation_pair(f, t0, y0, dt, p),
                embed=lambda u, A=interp: A @ u,
                space_dim=p + 1,
            )
        )
    return dec_run_adaptive(stages, DecIterate(y0[None, :].copy(), 0)).coeffs[-1]


def dec_ode_solve(f, y0, t0: float, t_final: float, n_steps: int, P: int, adaptive: bool = False):
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    dt = (t_final - t0) / n_steps
    for k in range(n_steps):
        y = dec_ode_step(f, t0 + k * dt, y, dt, P, adaptive)
    return y
