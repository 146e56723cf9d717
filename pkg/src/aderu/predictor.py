"""Local space-time predictor: fixed-point (classic) and degree-adaptive iterations.

Everything is batched over cells.  Per-cell arrays carry a leading cell
axis: spatial data ``(n, M + 1, Q)``, space-time coefficients ``(n, L, Q)``.

In reference coordinates the predictor system reads

    Bref u = rref - (dt / h) * phiref(u),

with ``B = h * Bref``, ``r = h * rref`` and ``phi~ = h * (dt / h) * phiref``,
so one factorization of ``Bref`` per degree serves every cell and step.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .basis import (
    SpaceTimeBasis,
    apply_table,
    exact_initial_table,
    gauss_rule,
    n_modes,
    project_table,
    space_time_index,
    subspace_matrices,
)
from .dec import DecAdaptiveStage, DecOperatorPair
from .equations import PdeSystem
from .errors import ConfigurationError, InadmissibleStateError, NonContractionError, PredictorFailure


# --- reference operators -----------------------------------------------------


class ReferenceOperators:
    """Tables on the reference cell for one set of space-time modes, shared by all cells.

    Flux integrals use ``max i + 1`` Gauss points in space and ``max m + 1``
    in time, so the degree-``p`` basis gets ``p + 1`` points per direction.
    """

    def __init__(self, modes: tuple):
        self.modes = tuple(modes)
        self.degree = max(i + m for i, m in self.modes)
        self.basis = SpaceTimeBasis(self.degree, self.modes)
        self.L = self.basis.L
        rule_x = gauss_rule(max(i for i, _ in self.modes) + 1)
        rule_t = gauss_rule(max(m for _, m in self.modes) + 1)
        self.xi = rule_x.nodes - 0.5
        self.tau = rule_t.nodes.copy()
        self.weights = np.outer(rule_x.weights, rule_t.weights)
        self.values = self.basis.table(self.xi, self.tau)
        self.dxi = self.basis.dxi_table(self.xi, self.tau)
        self.weighted_test = self.weights[:, :, None] * self.values
        self.n_nodes = len(self.xi) * len(self.tau)
        self.B, self.B_inv, _ = subspace_matrices(self.modes, 0)


_cache_lock = threading.Lock()
_operators: dict[tuple, ReferenceOperators] = {}


def reference_operators(modes) -> ReferenceOperators:
    """Cached per-mode-set structures; safe for concurrent readers.

    ``modes`` is a tuple of ``(i, m)`` pairs or an integer total degree.
    """
    if isinstance(modes, (int, np.integer)):
        modes = space_time_index(int(modes))
    ops = _operators.get(modes)
    if ops is None:
        built = ReferenceOperators(modes)
        with _cache_lock:
            ops = _operators.setdefault(modes, built)
    return ops


# --- structures and residual -------------------------------------------------


@dataclass
class PredictorStructures:
    degree: int
    h: float
    dt: float
    r: np.ndarray  # (n, L, Q), physical scaling
    initial_part: np.ndarray  # B^{-1} r, (n, L, Q)
    ops: ReferenceOperators
    x_centers: Optional[np.ndarray] = None

    @property
    def B(self) -> np.ndarray:
        return self.h * self.ops.B

    @property
    def B_inv(self) -> np.ndarray:
        return self.ops.B_inv / self.h

    @property
    def basis(self) -> SpaceTimeBasis:
        return self.ops.basis

    @property
    def modes(self) -> tuple:
        return self.ops.modes

    @property
    def L(self) -> int:
        return self.ops.L

    def subset(self, cells) -> "PredictorStructures":
        xc = None if self.x_centers is None else self.x_centers[cells]
        return PredictorStructures(
            self.degree, self.h, self.dt, self.r[cells], self.initial_part[cells], self.ops, xc
        )


def build_structures(h: float, dt: float, un_poly, p: int, x_centers=None, modes=None) -> PredictorStructures:
    """Degree-``p`` predictor structures for a batch of cells.

    ``un_poly`` holds degree-M spatial Taylor coefficients ``(n, M + 1, Q)``.
    ``modes`` restricts the space-time basis to a subset of the degree-``p``
    modes; by default all of them are used.
    """
    if p < 0:
        raise ConfigurationError(f"predictor degree must be >= 0, got {p}")
    if not (h > 0 and dt > 0):
        raise ConfigurationError(f"need h > 0 and dt > 0, got h={h}, dt={dt}")
    un_poly = np.asarray(un_poly, dtype=float)
    M = un_poly.shape[-2] - 1
    modes = space_time_index(p) if modes is None else tuple(modes)
    ops = reference_operators(modes)
    r = h * apply_table(exact_initial_table(modes, M), un_poly)
    initial = apply_table(subspace_matrices(modes, M)[2], un_poly)
    return PredictorStructures(p, h, dt, r, initial, ops, x_centers)


def _node_states(ops: ReferenceOperators, coeffs: np.ndarray):
    u = apply_table(ops.values, coeffs)
    du = apply_table(ops.dxi, coeffs)
    return u, du


def _phi_reference(structs: PredictorStructures, coeffs: np.ndarray, sys: PdeSystem, strict: bool) -> np.ndarray:
    """``int int (d_xi F(u_h) - h S) theta_j dxi dtau`` per cell, with the chain rule for ``d_xi F``."""
    ops = structs.ops
    u, du = _node_states(ops, coeffs)
    if strict:
        ok = sys.admissible(u).all(axis=(1, 2))
        if not ok.all():
            raise InadmissibleStateError(
                f"inadmissible predictor state at quadrature nodes in {int((~ok).sum())} cell(s)",
                cells=np.nonzero(~ok)[0],
            )
    with np.errstate(all="ignore"):
        g = sys.flux_jvp(u, du)
        if sys.source is not None:
            if structs.x_centers is None:
                raise ConfigurationError("source terms need cell centres")
            x = structs.x_centers[:, None, None] + structs.h * ops.xi[None, :, None]
            x = np.broadcast_to(x, u.shape[:-1])
            g = g - structs.h * sys.source(x, u)
        return project_table(ops.weighted_test, g)


def assemble_phi(structs: PredictorStructures, coeffs, sys: PdeSystem) -> np.ndarray:
    """Physical ``phi~_j = int_{t_n}^{t_n+1} int_K (d_x F(u_h) - S) theta_j dx dt``."""
    coeffs = np.asarray(coeffs, dtype=float)
    return structs.dt * _phi_reference(structs, coeffs, sys, strict=True)


def fixed_point_update(structs: PredictorStructures, coeffs, sys: PdeSystem, strict: bool = True) -> np.ndarray:
    """One application of ``u -> B^{-1} [r - phi~(u)]``."""
    phi = _phi_reference(structs, np.asarray(coeffs, dtype=float), sys, strict)
    return structs.initial_part - (structs.dt / structs.h) * apply_table(structs.ops.B_inv, phi)


def constant_in_time(un_poly) -> np.ndarray:
    """Space-time coefficients of ``u_n(x)`` extended constantly in time (degree M)."""
    un_poly = np.asarray(un_poly, dtype=float)
    M = un_poly.shape[-2] - 1
    out = np.zeros(un_poly.shape[:-2] + (n_modes(M), un_poly.shape[-1]))
    for l, (i, m) in enumerate(SpaceTimeBasis(M).index_map):
        if m == 0:
            out[..., l, :] = un_poly[..., i, :]
    return out


# --- admissibility -----------------------------------------------------------


@lru_cache(maxsize=None)
def check_nodes(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference nodes where DOOM checks iterates.

    Union of every Gauss rule used by flux integrals of degree <= M (space
    and time) and of the cell interfaces used by the corrector.
    """
    xs, ts = [np.array([-0.5, 0.5])], []
    for n in range(1, M + 2):
        nodes = gauss_rule(n).nodes
        xs.append(nodes - 0.5)
        ts.append(nodes)
    xi = np.unique(np.round(np.concatenate(xs), 15))
    tau = np.unique(np.round(np.concatenate(ts), 15))
    return xi, tau


@dataclass(frozen=True)
class AdmissibilityCriterion:
    """Pure predicates on point states ``(..., Q) -> bool mask``, all required."""

    checks: tuple[Callable[[np.ndarray], np.ndarray], ...]

    def point_mask(self, states: np.ndarray) -> np.ndarray:
        ok = np.ones(states.shape[:-1], dtype=bool)
        with np.errstate(all="ignore"):
            for check in self.checks:
                ok &= np.asarray(check(states), dtype=bool)
        return ok

    def satisfied(self, coeffs, degree: int, M: int) -> np.ndarray:
        """Per-cell flag: the degree-``degree`` iterate passes at every check node."""
        xi, tau = check_nodes(M)
        states = SpaceTimeBasis(degree).evaluate(np.asarray(coeffs, dtype=float), xi, tau)
        return self.point_mask(states).all(axis=(-2, -1))


def finite_check(u):
    return np.all(np.isfinite(u), axis=-1)


def positivity_criterion(sys: PdeSystem) -> AdmissibilityCriterion:
    """Finite values and, for Euler, positive density and pressure."""
    return AdmissibilityCriterion((finite_check, sys.admissible))


# --- outcomes and iterations -------------------------------------------------


@dataclass
class PredictorOutcome:
    """Predictor result for a batch of cells, always embedded to the final degree."""

    coeffs: np.ndarray  # (n, L_M, Q)
    degree: int
    achieved_iterations: np.ndarray  # (n,)
    limited: np.ndarray  # (n,) bool
    rejected_at: np.ndarray  # (n,) int, -1 when not limited
    work_units: int = 0
    iterations_total: int = 0

    def cell(self, k: int) -> dict:
        return {
            "coeffs": self.coeffs[k],
            "achieved_iterations": int(self.achieved_iterations[k]),
            "limited": bool(self.limited[k]),
            "rejected_at": None if self.rejected_at[k] < 0 else int(self.rejected_at[k]),
        }


@dataclass(frozen=True)
class IterationMode:
    kind: str  # "fixed" or "tolerance"
    iterations: Optional[int] = None
    tol: Optional[float] = None


def fixed_iterations(n: int) -> IterationMode:
    if n < 1:
        raise ConfigurationError(f"need at least one predictor iteration, got {n}")
    return IterationMode("fixed", iterations=n)


def tolerance(tol: float) -> IterationMode:
    if not tol > 0:
        raise ConfigurationError(f"tolerance must be positive, got {tol}")
    return IterationMode("tolerance", tol=tol)


def iteration_cap(M: int) -> int:
    return 2 * (M + 2)


def predictor_classic(structs: PredictorStructures, u0, sys: PdeSystem, mode: IterationMode) -> PredictorOutcome:
    """Fixed-degree iteration ``u <- B^{-1}[r - phi~(u)]``.

    Tolerance mode stops a cell once ``max|u_p - u_{p-1}| < tol * max(1, max|u_p|)``
    and raises ``NonContractionError`` past ``2(M + 2)`` iterations.
    """
    u = np.array(u0, dtype=float)
    n = u.shape[0]
    M = structs.degree
    per_iter_work = structs.L * structs.ops.n_nodes
    iters = np.zeros(n, dtype=int)
    if mode.kind == "fixed":
        for p in range(1, mode.iterations + 1):
            u = fixed_point_update(structs, u, sys)
            if not np.all(np.isfinite(u)):
                bad = np.nonzero(~np.isfinite(u).all(axis=(1, 2)))[0]
                raise PredictorFailure(f"predictor produced non-finite values at iteration {p}", cells=bad)
        iters[:] = mode.iterations
    elif mode.kind == "tolerance":
        active = np.arange(n)
        cap = iteration_cap(M)
        for p in range(1, cap + 1):
            sub = structs.subset(active)
            new = fixed_point_update(sub, u[active], sys)
            if not np.all(np.isfinite(new)):
                bad = active[~np.isfinite(new).all(axis=(1, 2))]
                raise PredictorFailure(f"predictor produced non-finite values at iteration {p}", cells=bad)
            change = np.abs(new - u[active]).max(axis=(1, 2))
            scale = np.maximum(1.0, np.abs(new).max(axis=(1, 2)))
            u[active] = new
            iters[active] = p
            active = active[change >= mode.tol * scale]
            if active.size == 0:
                break
        else:
            raise NonContractionError(
                f"predictor did not reach tolerance {mode.tol:g} within {cap} iterations "
                f"in {active.size} cell(s); reduce the time step",
                cells=active,
            )
    else:
        raise ConfigurationError(f"unknown iteration mode {mode.kind!r}")
    total = int(iters.sum())
    return PredictorOutcome(
        coeffs=u,
        degree=M,
        achieved_iterations=iters,
        limited=np.zeros(n, dtype=bool),
        rejected_at=np.full(n, -1),
        work_units=total * per_iter_work,
        iterations_total=total,
    )


GROWTH_MODES = ("time", "space_time")


def degree_schedule(M: int) -> list[int]:
    """Degree used by iterations ``p = 1 .. M + 1``: ``1, 2, ..., M, M``."""
    return [min(p, M) for p in range(1, M + 2)]


def iteration_modes(M: int, p: int, growth: str = "time") -> tuple:
    """Space-time modes active in iteration ``p`` (``1 .. M + 1``), final degree ``M``.

    ``"space_time"`` uses every mode of total degree <= ``min(p, M)``.
    ``"time"`` keeps the full degree-M spatial content and caps the time
    degree at ``p - 1``.  Mode ``(i, m)`` is fed by ``(i + 1, m - 1)`` of the
    previous iterate, so a time mode can only be right one iteration after
    its parent; starting from the cell mean the first iteration has nothing
    to offer beyond the data itself.
    """
    if not 1 <= p <= M + 1:
        raise ConfigurationError(f"iteration index must be in 1..{M + 1}, got {p}")
    if growth == "space_time":
        return space_time_index(min(p, M))
    if growth == "time":
        return tuple((i, m) for i, m in space_time_index(M) if m <= p - 1)
    raise ConfigurationError(f"unknown growth {growth!r}; expected one of {GROWTH_MODES}")


def _positions(M: int, modes: tuple) -> np.ndarray:
    lookup = {im: l for l, im in enumerate(space_time_index(M))}
    return np.array([lookup[im] for im in modes])


def predictor_adaptive(
    h: float,
    dt: float,
    un_poly,
    sys: PdeSystem,
    M: int,
    criterion: Optional[AdmissibilityCriterion] = None,
    means=None,
    x_centers=None,
    growth: str = "time",
) -> PredictorOutcome:
    """Degree-increasing predictor with optional DOOM limiting.

    Starts from the cell mean and runs ``M + 1`` iterations whose active
    modes grow as set by ``growth`` (see ``iteration_modes``); the last one
    uses the full degree-M basis.
    Iterates live in the degree-M layout with inactive modes at zero, so
    embedding is zero padding.  With a criterion, a cell whose new iterate
    fails keeps its previous iterate and stops iterating.
    """
    un_poly = np.asarray(un_poly, dtype=float)
    n, Q = un_poly.shape[0], un_poly.shape[-1]
    if means is None:
        from .reconstruction import cell_average_factors

        means = np.einsum("niq,i->nq", un_poly, cell_average_factors(un_poly.shape[1] - 1))
    current = np.zeros((n, n_modes(M), Q))
    current[:, 0] = np.asarray(means, dtype=float).reshape(n, Q)
    accepted = np.zeros(n, dtype=int)
    rejected = np.full(n, -1)
    active = np.arange(n)
    work = 0
    total_iters = 0
    xc = None if x_centers is None else np.asarray(x_centers, dtype=float)
    for p in range(1, M + 2):
        if active.size == 0:
            break
        modes = iteration_modes(M, p, growth)
        pos = _positions(M, modes)
        structs = build_structures(h, dt, un_poly[active], max(i + m for i, m in modes), None if xc is None else xc[active], modes)
        new_sub = fixed_point_update(structs, current[active][:, pos], sys, strict=criterion is None)
        work += active.size * structs.L * structs.ops.n_nodes
        total_iters += active.size
        new = np.zeros((active.size, n_modes(M), Q))
        new[:, pos] = new_sub
        if criterion is None:
            if not np.all(np.isfinite(new)):
                bad = active[~np.isfinite(new).all(axis=(1, 2))]
                raise PredictorFailure(f"predictor produced non-finite values at iteration {p}", cells=bad)
            ok = np.ones(active.size, dtype=bool)
        else:
            ok = criterion.satisfied(new, M, M)
        # rejected cells keep their previous iterate
        current[active[ok]] = new[ok]
        accepted[active[ok]] = p
        rejected[active[~ok]] = p
        active = active[ok]
    return PredictorOutcome(
        coeffs=current,
        degree=M,
        achieved_iterations=accepted,
        limited=rejected >= 0,
        rejected_at=rejected,
        work_units=work,
        iterations_total=total_iters,
    )


# --- the predictor as a deferred-correction iteration -------------------------


def ader_operator_pair(structs: PredictorStructures, sys: PdeSystem) -> DecOperatorPair:
    """``L1``/``L2`` of one cell so that a DeC iteration is the fixed-point update.

    ``L1(u) = u - B^{-1} r`` up to the frozen flux term, which cancels in the
    iteration; ``L2(u) = u - B^{-1}[r - phi~(u)]``.  ``structs`` must describe
    a single cell; iterates have shape ``(L, Q)``.
    """
    base = structs.initial_part[0]

    def update(u):
        return fixed_point_update(structs, np.asarray(u, dtype=float)[None], sys, strict=False)[0]

    return DecOperatorPair(
        solve_l1=lambda z: np.asarray(z) + base,
        apply_l1=lambda u: np.asarray(u) - base,
        apply_l2=lambda u: np.asarray(u) - update(u),
        delta=structs.dt,
    )


def ader_adaptive_stages(
    h: float, dt: float, un_poly, sys: PdeSystem, M: int, growth: str = "time"
) -> list[DecAdaptiveStage]:
    """Stages of the degree-adaptive predictor for one cell, for ``dec_run_adaptive``.

    Stage iterates are coefficient blocks over that stage's active modes.
    """
    un_poly = np.asarray(un_poly, dtype=float)[None]
    stages = []
    prev = ((0, 0),)
    for p in range(1, M + 2):
        modes = iteration_modes(M, p, growth)
        structs = build_structures(h, dt, un_poly, max(i + m for i, m in modes), modes=modes)
        scatter = np.array([modes.index(im) for im in prev])

        def embed(u, idx=scatter, size=len(modes)):
            u = np.asarray(u, dtype=float)
            out = np.zeros((size,) + u.shape[1:])
            out[idx] = u
            return out

        stages.append(DecAdaptiveStage(operators=ader_operator_pair(structs, sys), embed=embed, space_dim=len(modes)))
        prev = modes
    return stages
