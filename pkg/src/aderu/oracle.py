"""Reference solutions: exact 1D Euler Riemann problem, advection translate, smooth contact."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .equations import DEFAULT_GAMMA
from .errors import InadmissibleStateError, VacuumError

PRESSURE_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar solution; ``sample(x, t)`` and ``sample_xi(x / t)`` return primitive ``(..., 3)``."""

    left: tuple[float, float, float]
    right: tuple[float, float, float]
    gamma: float
    p_star: float
    u_star: float
    rho_star_left: float
    rho_star_right: float
    left_wave: str  # "shock" or "rarefaction"
    right_wave: str
    residual: float

    def _c(self, rho, p):
        return math.sqrt(self.gamma * p / rho)

    @property
    def left_shock_speed(self) -> float:
        rho, u, _ = self.left
        return u - self._mass_flux(self.left) / rho

    @property
    def right_shock_speed(self) -> float:
        rho, u, _ = self.right
        return u + self._mass_flux(self.right) / rho

    def _mass_flux(self, state) -> float:
        rho, _, p = state
        g = self.gamma
        return math.sqrt(rho * ((g + 1) / 2 * self.p_star + (g - 1) / 2 * p))

    def sample_xi(self, xi) -> np.ndarray:
        g = self.gamma
        xi = np.asarray(xi, dtype=float)
        out = np.empty(xi.shape + (3,))
        rl, ul, pl = self.left
        rr, ur, pr = self.right
        cl, cr = self._c(rl, pl), self._c(rr, pr)
        us, ps = self.u_star, self.p_star
        left_side = xi <= us

        # left of the contact
        if self.left_wave == "shock":
            s = self.left_shock_speed
            outer = left_side & (xi < s)
            star = left_side & (xi >= s)
            fan = np.zeros_like(left_side)
        else:
            c_star = cl * (ps / pl) ** ((g - 1) / (2 * g))
            head, tail = ul - cl, us - c_star
            outer = left_side & (xi < head)
            star = left_side & (xi >= tail)
            fan = left_side & ~outer & ~star
        out[outer] = (rl, ul, pl)
        out[star] = (self.rho_star_left, us, ps)
        if fan.any():
            x = xi[fan]
            c = 2 / (g + 1) + (g - 1) / ((g + 1) * cl) * (ul - x)
            out[fan, 0] = rl * c ** (2 / (g - 1))
            out[fan, 1] = 2 / (g + 1) * (cl + (g - 1) / 2 * ul + x)
            out[fan, 2] = pl * c ** (2 * g / (g - 1))

        right_side = ~left_side
        if self.right_wave == "shock":
            s = self.right_shock_speed
            outer = right_side & (xi > s)
            star = right_side & (xi <= s)
            fan = np.zeros_like(right_side)
        else:
            c_star = cr * (ps / pr) ** ((g - 1) / (2 * g))
            head, tail = ur + cr, us + c_star
            outer = right_side & (xi > head)
            star = right_side & (xi <= tail)
            fan = right_side & ~outer & ~star
        out[outer] = (rr, ur, pr)
        out[star] = (self.rho_star_right, us, ps)
        if fan.any():
            x = xi[fan]
            c = 2 / (g + 1) - (g - 1) / ((g + 1) * cr) * (ur - x)
            out[fan, 0] = rr * c ** (2 / (g - 1))
            out[fan, 1] = 2 / (g + 1) * (-cr + (g - 1) / 2 * ur + x)
            out[fan, 2] = pr * c ** (2 * g / (g - 1))
        return out

    def sample(self, x, t: float, x0: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if t <= 0:
            out = np.empty(x.shape + (3,))
            out[x < x0] = self.left
            out[x >= x0] = self.right
            return out
        return self.sample_xi((x - x0) / t)


def _wave_function(p, state, g):
    """Pressure function ``f_K(p)`` of one side and its derivative."""
    rho, _, pk = state
    c = math.sqrt(g * pk / rho)
    if p > pk:
        A = 2 / ((g + 1) * rho)
        B = (g - 1) / (g + 1) * pk
        root = math.sqrt(A / (p + B))
        return (p - pk) * root, root * (1 - 0.5 * (p - pk) / (p + B))
    ratio = p / pk
    f = 2 * c / (g - 1) * (ratio ** ((g - 1) / (2 * g)) - 1)
    df = ratio ** (-(g + 1) / (2 * g)) / (rho * c)
    return f, df


def exact_riemann(left, right, gamma: float = DEFAULT_GAMMA) -> RiemannSolution:
    """Exact solution for primitive states ``(rho, u, p)`` on each side of ``x = 0``."""
    g = float(gamma)
    left = tuple(float(v) for v in left)
    right = tuple(float(v) for v in right)
    for name, (rho, _, p) in (("left", left), ("right", right)):
        if not (rho > 0 and p > 0 and math.isfinite(rho) and math.isfinite(p)):
            raise InadmissibleStateError(f"{name} state is not admissible: rho={rho}, p={p}")
    rl, ul, pl = left
    rr, ur, pr = right
    cl, cr = math.sqrt(g * pl / rl), math.sqrt(g * pr / rr)
    du = ur - ul
    if 2 * (cl + cr) / (g - 1) <= du:
        raise VacuumError(f"data generate vacuum: 2(cL + cR)/(gamma - 1) = {2 * (cl + cr) / (g - 1)} <= du = {du}")

    def f(p):
        fl, dl = _wave_function(p, left, g)
        fr, dr = _wave_function(p, right, g)
        return fl + fr + du, dl + dr

    # two-rarefaction guess
    z = (g - 1) / (2 * g)
    p = ((cl + cr - 0.5 * (g - 1) * du) / (cl / pl**z + cr / pr**z)) ** (1 / z)
    p = max(p, 1e-12)
    converged = False
    for _ in range(50):
        val, deriv = f(p)
        if abs(val) <= PRESSURE_RESIDUAL_TOL:
            converged = True
            break
        p_new = p - val / deriv
        if not (p_new > 0 and math.isfinite(p_new)):
            break
        if abs(p_new - p) <= 1e-15 * p:
            p = p_new
            converged = abs(f(p)[0]) <= PRESSURE_RESIDUAL_TOL * 10
            break
        p = p_new
    if not converged:
        rho_bar, c_bar = 0.5 * (rl + rr), 0.5 * (cl + cr)
        hi = 10 * max(pl, pr) + rho_bar * c_bar * abs(du)
        # strong collisions put p* near rho du^2, beyond the linear estimate
        while f(hi)[0] < 0:
            hi *= 2
        p = brentq(lambda q: f(q)[0], 1e-12, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    fl, _ = _wave_function(p, left, g)
    fr, _ = _wave_function(p, right, g)
    u_star = 0.5 * (ul + ur) + 0.5 * (fr - fl)

    def star_density(state):
        rho, _, pk = state
        if p > pk:
            ratio = p / pk
            k = (g - 1) / (g + 1)
            return rho * (ratio + k) / (k * ratio + 1)
        return rho * (p / pk) ** (1 / g)

    return RiemannSolution(
        left=left,
        right=right,
        gamma=g,
        p_star=p,
        u_star=u_star,
        rho_star_left=star_density(left),
        rho_star_right=star_density(right),
        left_wave="shock" if p > pl else "rarefaction",
        right_wave="shock" if p > pr else "rarefaction",
        residual=abs(fl + fr + du),
    )


def exact_advection(profile: Callable, a: float, x, t: float, x_min: float = 0.0, x_max: float = 1.0):
    """``profile(x - a t)`` with the argument wrapped into ``[x_min, x_max)``."""
    length = x_max - x_min
    shifted = np.asarray(x, dtype=float) - a * t
    return profile(x_min + np.mod(shifted - x_min, length))


def exact_euler_contact(rho0: Callable, u0: float, p0: float, x, t: float, x_min=0.0, x_max=1.0) -> np.ndarray:
    """Primitive ``(rho0(x - u0 t), u0, p0)`` on a periodic domain."""
    rho = exact_advection(rho0, u0, x, t, x_min, x_max)
    rho = np.asarray(rho, dtype=float)
    return np.stack([rho, np.full_like(rho, u0), np.full_like(rho, p0)], axis=-1)
