"""Scheme loop: reconstruct, predict, correct, repeat until ``t_final``."""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import gauss_rule, mass_matrices, monomials
from .corrector import RUSANOV, NumericalFlux, correct
from .equations import Euler, PdeSystem, advection_system, burgers_system, euler_system
from .errors import AderError, ConfigurationError, InadmissibleStateError, PredictorFailure
from .mesh import Mesh1D
from .oracle import exact_advection, exact_euler_contact, exact_riemann
from .predictor import (
    GROWTH_MODES,
    PredictorOutcome,
    build_structures,
    constant_in_time,
    fixed_iterations,
    positivity_criterion,
    predictor_adaptive,
    predictor_classic,
    tolerance,
)
from .reconstruction import MODES, cell_average_factors, halo, reconstruct_padded

SCHEMES = ("dg", "fv", "pnpm")
VARIANTS = ("classic", "adaptive")
MAX_DEGREE = 5


# --- problems ----------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    """Named initial-boundary value problem; state callables return conservative ``(..., Q)``."""

    name: str
    make_system: Callable[[float], PdeSystem]
    x_min: float
    x_max: float
    bc: str
    initial: Callable[[np.ndarray, PdeSystem], np.ndarray]
    t_final: float
    exact: Optional[Callable[[np.ndarray, float, PdeSystem], np.ndarray]] = None
    left_state: Optional[tuple] = None  # primitive, Dirichlet only
    right_state: Optional[tuple] = None
    smooth: bool = True  # exact solution smooth enough for convergence orders

    def mesh(self, n_cells: int, sys: PdeSystem) -> Mesh1D:
        if self.bc == "periodic":
            return Mesh1D(self.x_min, self.x_max, n_cells)
        left = tuple(sys.from_output(np.array(self.left_state, dtype=float)))
        right = tuple(sys.from_output(np.array(self.right_state, dtype=float)))
        return Mesh1D(self.x_min, self.x_max, n_cells, "dirichlet", left, right)


def _sine(x):
    return np.sin(2 * np.pi * x)


def _contact_density(x):
    return 1.0 + 0.5 * np.sin(2 * np.pi * x)


def _scalar(fn):
    return lambda x, sys: fn(np.asarray(x, dtype=float))[..., None]


def _contact_initial(x, sys):
    return sys.from_output(exact_euler_contact(_contact_density, 1.0, 1.0, x, 0.0))


def _contact_exact(x, t, sys):
    return sys.from_output(exact_euler_contact(_contact_density, 1.0, 1.0, x, t))


def _riemann_problem(name, left, right, t_final) -> Problem:
    def initial(x, sys):
        x = np.asarray(x, dtype=float)
        w = np.where((x < 0.0)[..., None], np.array(left), np.array(right))
        return sys.from_output(w)

    def exact(x, t, sys):
        sol = exact_riemann(left, right, sys.gamma)
        return sys.from_output(sol.sample(x, t))

    return Problem(name, euler_system, -0.5, 0.5, "dirichlet", initial, t_final, exact, left, right, smooth=False)


PROBLEMS: dict[str, Problem] = {
    "advection_sine": Problem(
        "advection_sine",
        lambda gamma: advection_system(1.0),
        0.0,
        1.0,
        "periodic",
        _scalar(_sine),
        1.0,
        lambda x, t, sys: exact_advection(_sine, sys.a, x, t)[..., None],
    ),
    "burgers_sine": Problem(
        "burgers_sine", lambda gamma: burgers_system(), 0.0, 1.0, "periodic", _scalar(_sine), 0.1
    ),
    "euler_contact_sine": Problem(
        "euler_contact_sine", euler_system, 0.0, 1.0, "periodic", _contact_initial, 1.0, _contact_exact
    ),
    "rp1": _riemann_problem("rp1", (0.445, 0.698, 3.528), (0.5, 0.0, 0.571), 0.14),
    "rp2": _riemann_problem("rp2", (1.0, 2.0, 0.1), (1.0, -2.0, 0.1), 0.8),
    "rp3": _riemann_problem("rp3", (1.0, -2.0, 0.4), (1.0, 2.0, 0.4), 0.15),
    "rp4": _riemann_problem("rp4", (1.0, 0.0, 1000.0), (1.0, 0.0, 100.0), 0.012),
}


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(f"unknown initial condition {name!r}; known: {', '.join(PROBLEMS)}") from None


# --- configuration and state -------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Scheme selection and run control.

    ``tol=None`` runs the classic predictor with ``M + 1`` fixed iterations.
    """

    scheme: str = "dg"
    M: int = 2
    N: Optional[int] = None
    variant: str = "adaptive"
    tol: Optional[float] = None
    cfl: float = 0.5
    t_final: Optional[float] = None
    criterion: bool = False
    reconstruction: str = "cweno"
    gamma: float = 1.4
    threads: int = 1
    snapshot_every: int = 0  # steps between snapshots, 0 disables
    growth: str = "time"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.reconstruction not in MODES:
            raise ConfigurationError(f"reconstruction must be one of {MODES}, got {self.reconstruction!r}")
        if not 0 <= self.M <= MAX_DEGREE:
            raise ConfigurationError(f"M must be in 0..{MAX_DEGREE}, got {self.M}")
        if self.scheme == "pnpm" and self.N is None:
            raise ConfigurationError("scheme 'pnpm' needs N")
        if not 0 <= self.data_degree <= self.M:
            raise ConfigurationError(f"need 0 <= N <= M, got N={self.data_degree}, M={self.M}")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.tol is not None and not self.tol > 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tol}")
        if self.t_final is not None and self.t_final < 0:
            raise ConfigurationError(f"t_final must be >= 0, got {self.t_final}")
        if self.gamma <= 1:
            raise ConfigurationError(f"gamma must exceed 1, got {self.gamma}")
        if self.growth not in GROWTH_MODES:
            raise ConfigurationError(f"growth must be one of {GROWTH_MODES}, got {self.growth!r}")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")

    @property
    def data_degree(self) -> int:
        if self.scheme == "dg":
            return self.M
        if self.scheme == "fv":
            return 0
        return int(self.N)


@dataclass
class StepDiagnostics:
    step: int
    time: float
    dt: float
    min_density: Optional[float]
    min_pressure: Optional[float]
    limited_cells: int
    predictor_iterations: int
    work_units: int


@dataclass
class SolutionField:
    """Degree-N Taylor data per cell ``(n, N + 1, Q)`` at ``time``."""

    data: np.ndarray
    time: float = 0.0
    step: int = 0
    diagnostics: list[StepDiagnostics] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.data.shape[1] - 1

    def means(self) -> np.ndarray:
        return np.einsum("niq,i->nq", self.data, cell_average_factors(self.N))


def project(fn, mesh: Mesh1D, N: int, n_points: Optional[int] = None) -> np.ndarray:
    """L2 projection of ``fn(x) -> (..., Q)`` onto degree-N Taylor data per cell."""
    rule = gauss_rule(n_points or max(N + 2, 8))
    xi = rule.nodes - 0.5
    x = mesh.centers[:, None] + mesh.h * xi[None, :]
    values = np.asarray(fn(x), dtype=float)
    moments = np.einsum("a,ai,naq->niq", rule.weights, monomials(xi, N), values)
    _, mass_inv = mass_matrices(N)
    return np.einsum("ij,njq->niq", mass_inv, moments)


def initial_field(problem: Problem, sys: PdeSystem, mesh: Mesh1D, N: int) -> SolutionField:
    return SolutionField(project(lambda x: problem.initial(x, sys), mesh, N))


def _extremes(sys: PdeSystem, means: np.ndarray):
    if isinstance(sys, Euler):
        return float(means[:, 0].min()), float(sys.pressure(means).min())
    return None, None


# --- time step ---------------------------------------------------------------


def compute_dt(
    field_: SolutionField, mesh: Mesh1D, sys: PdeSystem, cfl: float, N: int, t_final: float = math.inf
) -> float:
    """``cfl * h / ((2N + 1) * max |lambda|)`` over cell means, clamped to ``t_final``."""
    remaining = t_final - field_.time
    means = field_.means()
    if not np.all(sys.admissible(means)):
        raise AderError(f"inadmissible cell mean before step {field_.step + 1}")
    lam = float(np.max(sys.max_abs_eigenvalue(means)))
    if lam <= 0:
        return remaining
    return min(cfl * mesh.h / ((2 * N + 1) * lam), remaining)


# --- one step ----------------------------------------------------------------


def _chunks(n: int, threads: int) -> list[slice]:
    if threads <= 1 or n < 2 * threads:
        return [slice(0, n)]
    edges = np.linspace(0, n, threads + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def _predict(un_poly, means, mesh: Mesh1D, sys: PdeSystem, config: RunConfig, dt: float) -> PredictorOutcome:
    M = config.M
    h = mesh.h
    xc = mesh.centers
    criterion = positivity_criterion(sys) if config.criterion else None

    def run_block(sl: slice) -> PredictorOutcome:
        try:
            return _predict_block(sl)
        except (PredictorFailure, InadmissibleStateError) as exc:
            if exc.cells is not None:
                exc.cells = np.atleast_1d(exc.cells) + sl.start
            raise

    def _predict_block(sl: slice) -> PredictorOutcome:
        if config.variant == "adaptive":
            return predictor_adaptive(h, dt, un_poly[sl], sys, M, criterion, means[sl], xc[sl], config.growth)
        structs = build_structures(h, dt, un_poly[sl], M, xc[sl])
        mode = fixed_iterations(M + 1) if config.tol is None else tolerance(config.tol)
        return predictor_classic(structs, constant_in_time(un_poly[sl]), sys, mode)

    blocks = _chunks(un_poly.shape[0], config.threads)
    if len(blocks) == 1:
        return run_block(blocks[0])
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        parts = list(pool.map(run_block, blocks))
    return PredictorOutcome(
        coeffs=np.concatenate([p.coeffs for p in parts]),
        degree=M,
        achieved_iterations=np.concatenate([p.achieved_iterations for p in parts]),
        limited=np.concatenate([p.limited for p in parts]),
        rejected_at=np.concatenate([p.rejected_at for p in parts]),
        work_units=sum(p.work_units for p in parts),
        iterations_total=sum(p.iterations_total for p in parts),
    )


def step(
    field_: SolutionField,
    mesh: Mesh1D,
    sys: PdeSystem,
    config: RunConfig,
    t_final: float = math.inf,
    flux: NumericalFlux = RUSANOV,
    observer: Optional[Callable[[int, PredictorOutcome, np.ndarray], None]] = None,
    dt: Optional[float] = None,
) -> SolutionField:
    """Advance one step; ``observer(step, outcome, un_poly)`` sees every predictor result."""
    N, M = field_.N, config.M
    if N != config.data_degree:
        raise ConfigurationError(f"field has degree {N}, config expects {config.data_degree}")
    if dt is None:
        dt = compute_dt(field_, mesh, sys, config.cfl, N, t_final)
    n_step = field_.step + 1
    if N < M:
        padded = mesh.pad(field_.data, *halo(M))
        un_poly = reconstruct_padded(padded, N, M, config.reconstruction)
    else:
        un_poly = field_.data
    means = field_.means()
    try:
        outcome = _predict(un_poly, means, mesh, sys, config, dt)
    except (PredictorFailure, InadmissibleStateError) as exc:
        cells = "" if exc.cells is None else f" (cells {[int(c) for c in np.atleast_1d(exc.cells)[:5]]})"
        message = f"step {n_step}: {exc}{cells}"
        if isinstance(exc, PredictorFailure):
            raise type(exc)(message, cells=exc.cells, step=n_step) from None
        raise InadmissibleStateError(message, cells=exc.cells) from None
    if observer is not None:
        observer(n_step, outcome, un_poly)
    padded_pred = mesh.pad(outcome.coeffs, 1, 1)
    try:
        new = correct(field_.data, padded_pred, sys, mesh.h, dt, M, flux, mesh.centers)
    except AderError as exc:
        raise AderError(f"step {n_step}: corrector failed: {exc}") from None
    if not np.all(np.isfinite(new)):
        raise AderError(f"step {n_step}: non-finite cell data after the corrector")
    out = SolutionField(new, field_.time + dt, n_step, field_.diagnostics)
    rho_min, p_min = _extremes(sys, out.means())
    out.diagnostics.append(
        StepDiagnostics(
            step=n_step,
            time=out.time,
            dt=dt,
            min_density=rho_min,
            min_pressure=p_min,
            limited_cells=int(outcome.limited.sum()),
            predictor_iterations=int(outcome.iterations_total),
            work_units=int(outcome.work_units),
        )
    )
    return out


# --- full runs -----------------------------------------------------------------


@dataclass
class RunResult:
    field: SolutionField
    initial: SolutionField
    mesh: Mesh1D
    system: PdeSystem
    problem: Problem
    config: RunConfig
    snapshots: list[SolutionField]
    wall_time: float

    def summary(self) -> dict:
        diags = self.field.diagnostics
        rho0, p0 = _extremes(self.system, self.initial.means())
        rhos = [d.min_density for d in diags if d.min_density is not None]
        ps = [d.min_pressure for d in diags if d.min_pressure is not None]
        return {
            "problem": self.problem.name,
            "scheme": self.config.scheme,
            "variant": self.config.variant,
            "M": self.config.M,
            "N": self.config.data_degree,
            "n_cells": self.mesh.n_cells,
            "final_time": self.field.time,
            "steps": self.field.step,
            "limited_cells_total": sum(d.limited_cells for d in diags),
            "min_density": None if rho0 is None else min([rho0] + rhos),
            "min_pressure": None if p0 is None else min([p0] + ps),
            "predictor_iterations": sum(d.predictor_iterations for d in diags),
            "work_units": sum(d.work_units for d in diags),
            "wall_time": self.wall_time,
        }


def run(
    config: RunConfig,
    problem: Problem | str,
    n_cells: int,
    observer=None,
    flux: NumericalFlux = RUSANOV,
) -> RunResult:
    if isinstance(problem, str):
        problem = get_problem(problem)
    if n_cells < 1:
        raise ConfigurationError(f"n_cells must be positive, got {n_cells}")
    sys = problem.make_system(config.gamma)
    mesh = problem.mesh(n_cells, sys)
    t_final = problem.t_final if config.t_final is None else config.t_final
    start = _time.perf_counter()
    field_ = initial_field(problem, sys, mesh, config.data_degree)
    initial = SolutionField(field_.data.copy())
    snapshots = []
    while field_.time < t_final:
        field_ = step(field_, mesh, sys, config, t_final, flux, observer)
        if t_final - field_.time <= 1e-14 * max(1.0, t_final):
            field_.time = t_final
        if config.snapshot_every and field_.step % config.snapshot_every == 0:
            snapshots.append(SolutionField(field_.data.copy(), field_.time, field_.step))
    return RunResult(field_, initial, mesh, sys, problem, config, snapshots, _time.perf_counter() - start)


# --- errors and convergence ----------------------------------------------------


def error_norms(field_: SolutionField, mesh: Mesh1D, exact, t: float, n_points: int, component: int = 0):
    """``(L1, L2, Linf)`` of one conserved component against ``exact(x) -> (..., Q)``.

    Degree-0 data are compared with exact cell averages; higher degrees
    pointwise at ``n_points`` Gauss points per cell.
    """
    rule = gauss_rule(n_points)
    xi = rule.nodes - 0.5
    x = mesh.centers[:, None] + mesh.h * xi[None, :]
    ref = np.asarray(exact(x, t), dtype=float)[..., component]
    if field_.N == 0:
        diff = field_.data[:, 0, component] - ref @ rule.weights
        diff = np.broadcast_to(diff[:, None], x.shape)
    else:
        diff = monomials(xi, field_.N) @ field_.data[:, :, component].T
        diff = diff.T - ref
    diff = np.abs(diff)
    l1 = float(mesh.h * np.sum(diff @ rule.weights))
    l2 = float(math.sqrt(mesh.h * np.sum((diff**2) @ rule.weights)))
    return l1, l2, float(diff.max())


def observed_order(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float:
    if e_coarse == e_fine:
        return 0.0
    if e_coarse <= 0 or e_fine <= 0:
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    l1: float
    l2: float
    linf: float
    order_l1: float = math.nan
    order_l2: float = math.nan
    order_linf: float = math.nan


def convergence_study(
    config: RunConfig, problem: Problem | str, mesh_sizes: Sequence[int], exact=None, component: int = 0
) -> list[ConvergenceRow]:
    if isinstance(problem, str):
        problem = get_problem(problem)
    if len(mesh_sizes) < 3:
        raise ConfigurationError(f"a convergence study needs at least 3 mesh sizes, got {len(mesh_sizes)}")
    if exact is None:
        if problem.exact is None:
            raise ConfigurationError(f"no exact solution available for {problem.name!r}")
        if not problem.smooth:
            raise ConfigurationError(
                f"{problem.name!r} has a discontinuous solution; convergence orders need a smooth problem"
            )
        exact = problem.exact
    rows: list[ConvergenceRow] = []
    for n in mesh_sizes:
        result = run(config, problem, n)
        sys = result.system
        errs = error_norms(
            result.field, result.mesh, lambda x, t: exact(x, t, sys), result.field.time, config.M + 2, component
        )
        row = ConvergenceRow(result.mesh.h, *errs)
        if rows:
            prev = rows[-1]
            orders = [observed_order(a, b, prev.h, row.h) for a, b in zip((prev.l1, prev.l2, prev.linf), errs)]
            row = replace(row, order_l1=orders[0], order_l2=orders[1], order_linf=orders[2])
        rows.append(row)
    return rows
