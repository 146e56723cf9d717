import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aderu.driver import (
    RunConfig,
    SolutionField,
    compute_dt,
    convergence_study,
    error_norms,
    get_problem,
    initial_field,
    observed_order,
    project,
    run,
    step,
)
from aderu.equations import advection_system, burgers_system, euler_system
from aderu.errors import ConfigurationError
from aderu.mesh import Mesh1D


def constant_field(mesh, N, state):
    return SolutionField(project(lambda x: np.broadcast_to(state, x.shape + (len(state),)), mesh, N))


def test_dt_advection_examples():
    mesh = Mesh1D(0.0, 1.0, 100)
    sys = advection_system(1.0)
    f0 = constant_field(mesh, 0, [1.0])
    assert compute_dt(f0, mesh, sys, 0.5, 0) == pytest.approx(5.0e-3, rel=1e-14)
    f2 = constant_field(mesh, 2, [1.0])
    assert compute_dt(f2, mesh, sys, 0.5, 2) == pytest.approx(1.0e-3, rel=1e-14)


def test_dt_rp2_initial_data():
    problem = get_problem("rp2")
    sys = euler_system()
    mesh = problem.mesh(100, sys)
    f = initial_field(problem, sys, mesh, 0)
    expected = 0.5 * 0.01 / (2 + math.sqrt(0.14))
    assert compute_dt(f, mesh, sys, 0.5, 0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(2.1060e-3, abs=1e-7)


def test_dt_is_clamped_to_final_time():
    mesh = Mesh1D(0.0, 1.0, 10)
    f = constant_field(mesh, 0, [1.0])
    assert compute_dt(f, mesh, advection_system(), 0.5, 0, t_final=1e-4) == pytest.approx(1e-4)
    # zero wave speed: the step is the remaining time
    assert compute_dt(constant_field(mesh, 0, [0.0]), mesh, burgers_system(), 0.5, 0, t_final=0.3) == 0.3


SCHEMES = [
    RunConfig(scheme="dg", M=2),
    RunConfig(scheme="dg", M=3, variant="classic"),
    RunConfig(scheme="fv", M=3, criterion=True),
    RunConfig(scheme="fv", M=2, variant="classic", tol=1e-12),
    RunConfig(scheme="pnpm", M=3, N=1),
]


@pytest.mark.parametrize("config", SCHEMES, ids=lambda c: f"{c.scheme}-{c.variant}-M{c.M}")
@pytest.mark.parametrize("sys, state", [
    (advection_system(), [0.7]),
    (burgers_system(), [0.4]),
    (euler_system(), [1.2, 0.36, 2.5]),
])
def test_constant_field_unchanged(config, sys, state):
    mesh = Mesh1D(0.0, 1.0, 12)
    f = constant_field(mesh, config.data_degree, np.array(state))
    new = step(f, mesh, sys, config)
    assert np.abs(new.data - f.data).max() <= 1e-13
    assert new.time > 0 and new.step == 1


def test_dg3_one_step_matches_translate():
    problem = get_problem("advection_sine")
    sys = problem.make_system(1.4)
    mesh = problem.mesh(64, sys)
    config = RunConfig(scheme="dg", M=3)
    f = initial_field(problem, sys, mesh, 3)
    new = step(f, mesh, sys, config)
    _, l2, _ = error_norms(new, mesh, lambda x, t: problem.exact(x, t, sys), new.time, 5)
    assert l2 <= 1e-6


def test_rp3_step_with_criterion():
    problem = get_problem("rp3")
    sys = problem.make_system(1.4)
    mesh = problem.mesh(100, sys)
    f = initial_field(problem, sys, mesh, 0)
    new = step(f, mesh, sys, RunConfig(scheme="fv", M=3, criterion=True))
    d = new.diagnostics[-1]
    assert d.limited_cells >= 0 and d.min_pressure > 0 and d.min_density > 0


def test_zero_final_time_returns_initial_field():
    result = run(RunConfig(scheme="dg", M=2, t_final=0.0), "advection_sine", 16)
    assert result.field.step == 0
    assert np.array_equal(result.field.data, result.initial.data)


def test_rp1_fine_run_beats_first_order_baseline():
    problem = get_problem("rp1")
    def l1(config):
        result = run(config, problem, 400)
        sys = result.system
        return error_norms(result.field, result.mesh, lambda x, t: problem.exact(x, t, sys), result.field.time, 5)[0]

    high = l1(RunConfig(scheme="fv", M=3, criterion=True))
    low = l1(RunConfig(scheme="fv", M=0))
    assert high <= 0.01
    assert low >= 2 * high


def test_mass_conservation_periodic_advection():
    result = run(RunConfig(scheme="dg", M=2), "advection_sine", 32)
    h = result.mesh.h
    m0 = h * result.initial.means().sum(axis=0)
    m1 = h * result.field.means().sum(axis=0)
    # sine has zero mass; scale the drift by the total variation of the data
    scale = h * np.abs(result.initial.means()).sum()
    assert np.abs(m1 - m0).max() / scale <= 1e-11


def test_observed_order_examples():
    assert observed_order(1e-2, 1.25e-3, 0.1, 0.05) == pytest.approx(3.0, rel=1e-12)
    assert observed_order(1e-3, 1e-3, 0.1, 0.05) == 0.0


def test_error_norm_examples():
    mesh = Mesh1D(0.0, 1.0, 8)
    poly = lambda x: (1 + 2 * x - 3 * x**2)[..., None]
    f = SolutionField(project(poly, mesh, 2))
    assert max(error_norms(f, mesh, lambda x, t: poly(x), 0.0, 4)) <= 1e-12

    for N in (0, 2):
        offset = SolutionField(np.zeros((8, N + 1, 1)))
        offset.data[:, 0, 0] = 0.3
        errs = error_norms(offset, mesh, lambda x, t: np.zeros(x.shape + (1,)), 0.0, 3)
        assert errs == pytest.approx((0.3, 0.3, 0.3), rel=1e-14)

    fine = Mesh1D(0.0, 1.0, 64)
    zero = SolutionField(np.zeros((64, 2, 1)))
    _, l2, _ = error_norms(zero, fine, lambda x, t: np.sin(2 * np.pi * x)[..., None], 0.0, 6)
    assert l2 == pytest.approx(math.sqrt(0.5), rel=1e-8)


def test_serial_runs_are_bit_identical():
    config = RunConfig(scheme="fv", M=3, criterion=True, t_final=0.02)
    a = run(config, "rp3", 64)
    b = run(config, "rp3", 64)
    assert np.array_equal(a.field.data, b.field.data)


def test_threads_match_serial():
    config = RunConfig(scheme="fv", M=3, criterion=True, t_final=0.02)
    serial = run(config, "rp1", 64)
    threaded = run(replace(config, threads=4), "rp1", 64)
    rel = np.abs(threaded.field.data - serial.field.data).max() / np.abs(serial.field.data).max()
    assert rel <= 1e-13
    assert threaded.summary()["work_units"] == serial.summary()["work_units"]


def test_convergence_needs_three_meshes_and_smooth_exact_solution():
    config = RunConfig(scheme="dg", M=1)
    with pytest.raises(ConfigurationError, match="at least 3"):
        convergence_study(config, "advection_sine", [8, 16])
    with pytest.raises(ConfigurationError, match="no exact solution"):
        convergence_study(config, "burgers_sine", [8, 16, 32])
    with pytest.raises(ConfigurationError, match="discontinuous"):
        convergence_study(RunConfig(scheme="fv", M=1), "rp1", [8, 16, 32])


def test_convergence_rows():
    rows = convergence_study(RunConfig(scheme="dg", M=1), "advection_sine", [8, 16, 32])
    assert [r.h for r in rows] == pytest.approx([1 / 8, 1 / 16, 1 / 32])
    assert math.isnan(rows[0].order_l2)
    assert rows[-1].order_l2 == pytest.approx(observed_order(rows[1].l2, rows[2].l2, rows[1].h, rows[2].h))


@pytest.mark.parametrize("bad", [
    dict(M=6), dict(scheme="pnpm", M=2), dict(scheme="pnpm", M=2, N=3), dict(cfl=1.5), dict(cfl=0.0),
    dict(scheme="weno"), dict(variant="fast"), dict(tol=-1.0), dict(growth="x"), dict(threads=0),
])
def test_config_validation(bad):
    with pytest.raises(ConfigurationError):
        RunConfig(**bad)


@given(st.floats(-5, 5).filter(lambda c: c == 0 or abs(c) > 1e-100), st.integers(0, 3), st.integers(1, 20))
def test_offset_norms_property(c, N, n):
    mesh = Mesh1D(-1.0, 0.0, n)
    data = np.zeros((n, N + 1, 1))
    data[:, 0, 0] = c
    errs = error_norms(SolutionField(data), mesh, lambda x, t: np.zeros(x.shape + (1,)), 0.0, N + 2)
    assert errs == pytest.approx((abs(c), abs(c), abs(c)), rel=1e-13, abs=1e-300)


@given(st.floats(1e-6, 1.0), st.floats(1.0, 8.0), st.floats(0.01, 1.0))
def test_observed_order_recovers_power_laws(e, ratio, p):
    # e_fine = e * ratio**(-p) on a mesh refined by ratio
    assert observed_order(e, e * ratio**-p, 1.0, 1.0 / ratio) == pytest.approx(p, rel=1e-9) or ratio == 1.0
