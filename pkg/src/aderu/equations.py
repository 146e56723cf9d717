"""Conservation laws ``u_t + f(u)_x = s(x, u)`` in one space dimension.

All array methods act on the trailing axis of length ``Q`` and broadcast
over leading axes.  They do not validate states; the solvers check
admissibility explicitly where it matters.
"""

from __future__ import annotations

import numpy as np

from .errors import InadmissibleStateError

DEFAULT_GAMMA = 1.4


class PdeSystem:
    name = "system"
    Q = 1
    component_names: tuple[str, ...] = ("u",)
    output_names: tuple[str, ...] = ("u",)
    # source(x, u) -> array like u; None means identically zero
    source = None

    def flux(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def flux_jvp(self, u: np.ndarray, du: np.ndarray) -> np.ndarray:
        """Directional derivative ``f'(u) du``."""
        raise NotImplementedError

    def max_abs_eigenvalue(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def admissible(self, u: np.ndarray) -> np.ndarray:
        return np.all(np.isfinite(u), axis=-1)

    def to_output(self, u: np.ndarray) -> np.ndarray:
        """Variables written to snapshot files."""
        return np.asarray(u, dtype=float)

    def from_output(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w, dtype=float)


class LinearAdvection(PdeSystem):
    name = "advection"

    def __init__(self, a: float = 1.0):
        self.a = float(a)

    def __repr__(self):
        return f"LinearAdvection(a={self.a})"

    def flux(self, u):
        return self.a * np.asarray(u, dtype=float)

    def flux_jvp(self, u, du):
        return self.a * np.asarray(du, dtype=float)

    def max_abs_eigenvalue(self, u):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape[:-1], abs(self.a))


class Burgers(PdeSystem):
    name = "burgers"

    def __repr__(self):
        return "Burgers()"

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * u * u

    def flux_jvp(self, u, du):
        return np.asarray(u, dtype=float) * du

    def max_abs_eigenvalue(self, u):
        return np.abs(np.asarray(u, dtype=float)[..., 0])


class Euler(PdeSystem):
    """Ideal-gas Euler equations, conserved variables ``(rho, rho*u, E)``."""

    name = "euler"
    Q = 3
    component_names = ("rho", "q", "E")
    output_names = ("rho", "u", "p")

    def __init__(self, gamma: float = DEFAULT_GAMMA):
        if not gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {gamma}")
        self.gamma = float(gamma)

    def __repr__(self):
        return f"Euler(gamma={self.gamma})"

    def pressure(self, u):
        u = np.asarray(u, dtype=float)
        rho, q, E = u[..., 0], u[..., 1], u[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.gamma - 1.0) * (E - 0.5 * q * q / rho)

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        rho, q, E = u[..., 0], u[..., 1], u[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            v = q / rho
            p = (self.gamma - 1.0) * (E - 0.5 * q * v)
            return np.stack([q, q * v + p, v * (E + p)], axis=-1)

    def flux_jvp(self, u, du):
        u = np.asarray(u, dtype=float)
        g = self.gamma
        rho, q, E = u[..., 0], u[..., 1], u[..., 2]
        d_rho, d_q, d_E = du[..., 0], du[..., 1], du[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            v = q / rho
            p = (g - 1.0) * (E - 0.5 * q * v)
            # dp = (g-1) (dE - v dq + v^2/2 drho)
            dp = (g - 1.0) * (d_E - v * d_q + 0.5 * v * v * d_rho)
            dv = (d_q - v * d_rho) / rho
            f1 = d_q
            f2 = q * dv + v * d_q + dp
            f3 = dv * (E + p) + v * (d_E + dp)
        return np.stack([f1, f2, f3], axis=-1)

    def sound_speed(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(self.gamma * self.pressure(u) / u[..., 0])

    def max_abs_eigenvalue(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(u[..., 1] / u[..., 0]) + self.sound_speed(u)

    def admissible(self, u):
        u = np.asarray(u, dtype=float)
        finite = np.all(np.isfinite(u), axis=-1)
        with np.errstate(invalid="ignore"):
            return finite & (u[..., 0] > 0.0) & (self.pressure(u) > 0.0)

    def to_output(self, u):
        return conservative_to_primitive(u, self.gamma)

    def from_output(self, w):
        return primitive_to_conservative(w, self.gamma)


def conservative_to_primitive(u, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    rho, q, E = u[..., 0], u[..., 1], u[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = q / rho
        p = (gamma - 1.0) * (E - 0.5 * q * v)
    return np.stack([rho, v, p], axis=-1)


def primitive_to_conservative(w, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    rho, v, p = w[..., 0], w[..., 1], w[..., 2]
    return np.stack([rho, rho * v, p / (gamma - 1.0) + 0.5 * rho * v * v], axis=-1)


def _require_admissible(state, gamma):
    state = np.asarray(state, dtype=float)
    if state.shape[-1] != 3:
        raise ValueError("Euler states have three components (rho, q, E)")
    rho = state[..., 0]
    if np.any(~(rho > 0.0)):
        raise InadmissibleStateError(f"non-positive density in {state.tolist()}")
    return state


def euler_pressure(state, gamma: float = DEFAULT_GAMMA):
    state = _require_admissible(state, gamma)
    rho, q, E = state[..., 0], state[..., 1], state[..., 2]
    return (gamma - 1.0) * (E - 0.5 * q * q / rho)


def euler_flux(state, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    p = euler_pressure(state, gamma)
    if np.any(~(p > 0.0)):
        raise InadmissibleStateError(f"non-positive pressure in {np.asarray(state).tolist()}")
    return Euler(gamma).flux(state)


def euler_max_wavespeed(state, gamma: float = DEFAULT_GAMMA):
    p = euler_pressure(state, gamma)
    if np.any(~(p > 0.0)):
        raise InadmissibleStateError(f"non-positive pressure in {np.asarray(state).tolist()}")
    return Euler(gamma).max_abs_eigenvalue(state)


def advection_system(a: float = 1.0) -> LinearAdvection:
    return LinearAdvection(a)


def burgers_system() -> Burgers:
    return Burgers()


def euler_system(gamma: float = DEFAULT_GAMMA) -> Euler:
    return Euler(gamma)
