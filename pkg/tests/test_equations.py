import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aderu.equations import (
    Euler,
    advection_system,
    burgers_system,
    conservative_to_primitive,
    euler_flux,
    euler_max_wavespeed,
    euler_pressure,
    primitive_to_conservative,
)
from aderu.errors import InadmissibleStateError

primitive = st.tuples(st.floats(1e-3, 1e3), st.floats(-50, 50), st.floats(1e-3, 1e3))


def test_pressure_examples():
    assert euler_pressure([1.0, 0.0, 2.5]) == pytest.approx(1.0)
    assert euler_pressure([1.0, 1.0, 3.0]) == pytest.approx(1.0)
    with pytest.raises(InadmissibleStateError):
        euler_pressure([0.0, 0.0, 1.0])


def test_rp1_left_state_round_trip():
    w = np.array([0.445, 0.698, 3.528])
    back = conservative_to_primitive(primitive_to_conservative(w))
    assert abs(back[2] - 3.528) <= 1e-13 * 3.528
    assert np.allclose(back, w, rtol=1e-13)


def test_flux_examples():
    assert euler_flux([1.0, 0.0, 2.5]).tolist() == pytest.approx([0, 1, 0])
    assert euler_flux([1.0, 1.0, 3.0]).tolist() == pytest.approx([1, 2, 4])


@given(primitive)
def test_flux_at_rest_is_pressure_only(w):
    rho, _, p = w
    u = primitive_to_conservative(np.array([rho, 0.0, p]))
    assert euler_flux(u).tolist() == pytest.approx([0.0, p, 0.0], rel=1e-12, abs=1e-300)


def test_wavespeed_examples():
    assert euler_max_wavespeed(primitive_to_conservative([1.0, 0.0, 1.0])) == pytest.approx(1.18321595, rel=1e-8)
    assert euler_max_wavespeed(primitive_to_conservative([1.0, 2.0, 0.1])) == pytest.approx(2.37416574, rel=1e-8)


@given(primitive, st.floats(1e-2, 1e2))
def test_wavespeed_invariant_under_common_scaling(w, k):
    rho, v, p = w
    a = euler_max_wavespeed(primitive_to_conservative([rho, v, p]))
    b = euler_max_wavespeed(primitive_to_conservative([k * rho, v, k * p]))
    assert b == pytest.approx(a, rel=1e-12)


def test_scalar_systems():
    adv, bur = advection_system(1.0), burgers_system()
    assert adv.flux(np.array([0.3]))[0] == pytest.approx(0.3)
    assert bur.flux(np.array([2.0]))[0] == pytest.approx(2.0)
    assert bur.max_abs_eigenvalue(np.array([-3.0])) == pytest.approx(3.0)
    assert adv.Q == bur.Q == 1
    assert adv.source is None and bur.source is None and Euler().source is None


def test_round_trip_random_states(rng):
    w = np.column_stack([rng.uniform(1e-3, 10, 1000), rng.uniform(-10, 10, 1000), rng.uniform(1e-3, 10, 1000)])
    back = conservative_to_primitive(primitive_to_conservative(w))
    rel = np.abs(back - w) / np.maximum(np.abs(w), 1.0)
    assert rel.max() <= 1e-13


@given(primitive, st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
def test_flux_jvp_matches_central_difference(w, direction):
    sys = Euler()
    u = primitive_to_conservative(np.array(w))
    d = np.array(direction) * (np.abs(u) + 1e-3)
    eps = 1e-6
    fd = (sys.flux(u + eps * d) - sys.flux(u - eps * d)) / (2 * eps)
    scale = max(1.0, np.abs(sys.flux(u)).max(), np.abs(fd).max())
    assert np.abs(sys.flux_jvp(u, d) - fd).max() <= 1e-5 * scale


def test_admissibility_is_strict():
    sys = Euler()
    u = np.array([[1.0, 0.0, 2.5], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [1.0, math.nan, 2.5]])
    assert sys.admissible(u).tolist() == [True, False, False, False]
