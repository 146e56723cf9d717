import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from aderu.equations import Euler, primitive_to_conservative
from aderu.errors import InadmissibleStateError, VacuumError
from aderu.oracle import exact_advection, exact_euler_contact, exact_riemann

GAMMA = 1.4
TABLE = {
    "rp1": ((0.445, 0.698, 3.528), (0.5, 0.0, 0.571)),
    "rp2": ((1.0, 2.0, 0.1), (1.0, -2.0, 0.1)),
    "rp3": ((1.0, -2.0, 0.4), (1.0, 2.0, 0.4)),
    "rp4": ((1.0, 0.0, 1000.0), (1.0, 0.0, 100.0)),
}


def pressure_function_bisection(left, right, g=GAMMA, tol=1e-12):
    """Star pressure by plain bisection on the two-wave pressure function."""

    def side(p, rho, pk):
        c = math.sqrt(g * pk / rho)
        if p > pk:
            return (p - pk) * math.sqrt(2 / ((g + 1) * rho) / (p + (g - 1) / (g + 1) * pk))
        return 2 * c / (g - 1) * ((p / pk) ** ((g - 1) / (2 * g)) - 1)

    def f(p):
        return side(p, left[0], left[2]) + side(p, right[0], right[2]) + right[1] - left[1]

    lo, hi = 1e-14, 1e5
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def residuals(sol, g=GAMMA, eps=1e-9):
    """Largest Rankine-Hugoniot and Riemann-invariant residuals of a solution (relative)."""
    sys = Euler(g)
    worst_rh, worst_ri = 0.0, 0.0
    for side, sign in (("left", -1), ("right", 1)):
        wave = sol.left_wave if side == "left" else sol.right_wave
        if wave == "shock":
            s = sol.left_shock_speed if side == "left" else sol.right_shock_speed
            outer = sol.sample_xi(s + sign * eps * max(1.0, abs(s)))
            inner = sol.sample_xi(s - sign * eps * max(1.0, abs(s)))
            uo, ui = primitive_to_conservative(outer, g), primitive_to_conservative(inner, g)
            jump = sys.flux(ui) - sys.flux(uo) - s * (ui - uo)
            scale = max(np.abs(sys.flux(uo)).max(), np.abs(sys.flux(ui)).max(), 1.0)
            worst_rh = max(worst_rh, np.abs(jump).max() / scale)
        else:
            rho, u, p = sol.left if side == "left" else sol.right
            c = math.sqrt(g * p / rho)
            c_star = c * (sol.p_star / p) ** ((g - 1) / (2 * g))
            u_star = sol.u_star
            head, tail = (u - c, u_star - c_star) if side == "left" else (u_star + c_star, u + c)
            xs = np.linspace(head, tail, 23)[1:-1]
            w = sol.sample_xi(xs)
            entropy = w[:, 2] / w[:, 0] ** g
            cs = np.sqrt(g * w[:, 2] / w[:, 0])
            invariant = w[:, 1] - sign * 2 * cs / (g - 1)
            ref_entropy = p / rho**g
            ref_invariant = u - sign * 2 * c / (g - 1)
            worst_ri = max(
                worst_ri,
                np.abs(entropy / ref_entropy - 1).max(),
                np.abs(invariant - ref_invariant).max() / max(1.0, abs(ref_invariant)),
            )
    # contact: velocity and pressure continuous
    around = sol.sample_xi(np.array([sol.u_star - 1e-9, sol.u_star + 1e-9]))
    worst_ri = max(worst_ri, abs(around[0, 1] - around[1, 1]), abs(around[0, 2] - around[1, 2]) / sol.p_star)
    return worst_rh, worst_ri


def test_identical_states_have_no_waves():
    s = exact_riemann((1.0, 0.3, 2.0), (1.0, 0.3, 2.0))
    assert s.p_star == pytest.approx(2.0, rel=1e-12)
    assert s.u_star == pytest.approx(0.3, abs=1e-12)
    assert np.allclose(s.sample_xi(np.linspace(-5, 5, 11)), [1.0, 0.3, 2.0])


def test_sod_star_pressure_against_bisection():
    left, right = (1.0, 0.0, 1.0), (0.125, 0.0, 0.1)
    s = exact_riemann(left, right)
    assert s.p_star == pytest.approx(0.30313, abs=1e-4)
    assert s.p_star == pytest.approx(pressure_function_bisection(left, right), rel=1e-11)
    assert s.residual <= 1e-12


@pytest.mark.parametrize("name", list(TABLE))
def test_table_problems_against_bisection(name):
    left, right = TABLE[name]
    s = exact_riemann(left, right)
    assert s.p_star == pytest.approx(pressure_function_bisection(left, right), rel=1e-10)
    assert s.residual <= 1e-12


def test_rp2_is_symmetric_with_two_shocks():
    s = exact_riemann(*TABLE["rp2"])
    assert abs(s.u_star) <= 1e-12
    assert s.left_wave == s.right_wave == "shock"


def test_rp3_is_near_vacuum_not_vacuum():
    s = exact_riemann(*TABLE["rp3"])
    assert s.left_wave == s.right_wave == "rarefaction"
    assert 0 < s.p_star < 0.01


def test_mirror_symmetry(rng):
    for _ in range(20):
        left = (rng.uniform(0.1, 5), rng.uniform(-1, 1), rng.uniform(0.1, 5))
        right = (rng.uniform(0.1, 5), rng.uniform(-1, 1), rng.uniform(0.1, 5))
        a = exact_riemann(left, right)
        b = exact_riemann((right[0], -right[1], right[2]), (left[0], -left[1], left[2]))
        assert b.p_star == pytest.approx(a.p_star, rel=1e-12)
        assert b.u_star == pytest.approx(-a.u_star, abs=1e-12 * max(1.0, abs(a.u_star)))


def test_far_field_returns_the_data_exactly():
    for left, right in TABLE.values():
        s = exact_riemann(left, right)
        far = s.sample_xi(np.array([-1e6, 1e6]))
        assert far[0].tolist() == list(left)
        assert far[1].tolist() == list(right)


def test_self_similarity():
    s = exact_riemann(*TABLE["rp1"])
    x = np.linspace(-0.5, 0.5, 41)
    assert np.array_equal(s.sample(x, 0.1), s.sample(2 * x, 0.2))


@pytest.mark.parametrize("name", list(TABLE))
def test_table_problem_residuals(name):
    rh, ri = residuals(exact_riemann(*TABLE[name]))
    assert rh <= 1e-9 and ri <= 1e-9


def random_pairs(rng, count):
    pairs = []
    while len(pairs) < count:
        left = (rng.uniform(0.05, 10), rng.uniform(-3, 3), rng.uniform(0.05, 100))
        right = (rng.uniform(0.05, 10), rng.uniform(-3, 3), rng.uniform(0.05, 100))
        cl, cr = (math.sqrt(GAMMA * p / r) for r, _, p in (left, right))
        if 2 * (cl + cr) / (GAMMA - 1) > (right[1] - left[1]) + 1e-3:
            pairs.append((left, right))
    return pairs


def test_random_pair_residuals(rng):
    for left, right in random_pairs(rng, 100):
        rh, ri = residuals(exact_riemann(left, right))
        assert rh <= 1e-9 and ri <= 1e-9, (left, right, rh, ri)


def test_vacuum_and_inadmissible_data_are_rejected():
    with pytest.raises(VacuumError):
        exact_riemann((1.0, -10.0, 0.4), (1.0, 10.0, 0.4))
    with pytest.raises(InadmissibleStateError):
        exact_riemann((1.0, 0.0, -1.0), (1.0, 0.0, 1.0))


def test_advection_examples():
    x = np.linspace(0, 1, 17)
    prof = lambda y: np.sin(2 * np.pi * y)
    assert np.allclose(exact_advection(prof, 1.0, x, 0.0), prof(x), atol=1e-15)
    assert np.allclose(exact_advection(prof, 1.0, x, 1.0), prof(x), atol=1e-12)
    assert np.allclose(exact_advection(prof, 1.0, x, 0.25), np.sin(2 * np.pi * (x - 0.25)), atol=1e-12)


def test_contact_examples():
    x = np.linspace(0, 1, 17)
    rho0 = lambda y: 1 + 0.5 * np.sin(2 * np.pi * y)
    w0 = exact_euler_contact(rho0, 1.0, 1.0, x, 0.0)
    assert np.allclose(w0, np.stack([rho0(x), np.ones_like(x), np.ones_like(x)], axis=-1))
    assert np.allclose(exact_euler_contact(lambda y: np.ones_like(y), 1.0, 1.0, x, 0.7)[:, 0], 1.0)
    assert np.allclose(exact_euler_contact(rho0, 1.0, 1.0, x, 1.0), w0, atol=1e-12)


density = st.floats(0.05, 10.0)
velocity = st.floats(-3.0, 3.0)
pressure = st.floats(0.05, 100.0)


@given(density, velocity, pressure, density, velocity, pressure)
def test_residuals_property(rl, ul, pl, rr, ur, pr):
    cl, cr = math.sqrt(GAMMA * pl / rl), math.sqrt(GAMMA * pr / rr)
    assume(2 * (cl + cr) / (GAMMA - 1) > ur - ul + 1e-3)
    s = exact_riemann((rl, ul, pl), (rr, ur, pr))
    rh, ri = residuals(s)
    assert rh <= 1e-9 and ri <= 1e-9
    far = s.sample_xi(np.array([-1e6, 1e6]))
    assert far[0].tolist() == [rl, ul, pl] and far[1].tolist() == [rr, ur, pr]
    assert s.p_star > 0


def test_strong_collision_beyond_the_linear_bracket():
    left, right = (1.0, 3.0, 0.0625), (4.0, 0.0, 0.125)
    s = exact_riemann(left, right)
    assert s.p_star == pytest.approx(pressure_function_bisection(left, right), rel=1e-10)
    assert s.left_wave == s.right_wave == "shock"
