import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aderu.basis import monomials
from aderu.reconstruction import (
    cell_average_factors,
    cweno_weights,
    evaluate,
    reconstruct,
    reconstruct_padded,
    stencil,
    stencil_offsets,
)

from conftest import slope


def cell_average_of_mode(i, k):
    """Average of xi**i / i! over [k - 1/2, k + 1/2]."""
    return ((k + 0.5) ** (i + 1) - (k - 0.5) ** (i + 1)) / math.factorial(i + 1)


def reference_cweno(avg, offsets, M, eps=1e-12, power=4, d=(0.7, 0.15, 0.15)):
    """Direct evaluation of the CWENO blend for scalar data; ``avg(k)`` is the average of neighbour k."""
    A = np.array([[cell_average_of_mode(i, k) for i in range(M + 1)] for k in offsets])
    p_opt = np.linalg.solve(A, [avg(k) for k in offsets])
    centre, left, right = avg(0), avg(-1), avg(1)
    p_l = np.zeros(M + 1)
    p_l[:2] = centre, centre - left
    p_r = np.zeros(M + 1)
    p_r[:2] = centre, right - centre
    x, w = np.polynomial.legendre.leggauss(10)
    xs, ws = 0.5 * x, 0.5 * w

    def beta(c):
        return sum(np.sum(ws * (monomials(xs, M, l) @ c) ** 2) for l in range(1, M + 1))

    alphas = np.array([d[0] / (eps + beta(p_opt)) ** power, d[1] / (eps + beta(p_l)) ** power,
                       d[2] / (eps + beta(p_r)) ** power])
    wts = alphas / alphas.sum()
    p0 = (p_opt - d[1] * p_l - d[2] * p_r) / d[0]
    return wts[0] * p0 + wts[1] * p_l + wts[2] * p_r


def test_stencil_width_and_left_bias():
    assert stencil_offsets(2).tolist() == [-1, 0, 1]
    assert stencil_offsets(3).tolist() == [-2, -1, 0, 1]
    assert stencil(5, 3).neighbor_cells == (3, 4, 5, 6)


@pytest.mark.parametrize("mode", ["central", "cweno"])
@pytest.mark.parametrize("M", range(6))
def test_constant_reproduction(mode, M):
    out = reconstruct(np.full(9, 2.75), 4, M, mode)
    expected = np.zeros((M + 1, 1))
    expected[0] = 2.75
    assert np.allclose(out, expected, atol=1e-12)


@pytest.mark.parametrize("M", range(1, 6))
def test_central_recovers_polynomials(M, rng):
    coeffs = rng.normal(size=M + 1)
    n = 12
    # averages of the polynomial centred on cell 5 (unit cells)
    avgs = np.array([sum(c * cell_average_of_mode(i, k - 5) for i, c in enumerate(coeffs)) for k in range(n)])
    out = reconstruct(avgs, 5, M, "central")[:, 0]
    assert np.allclose(out, coeffs, rtol=1e-12, atol=1e-12 * np.abs(coeffs).max())


def test_cweno_matches_reference_and_keeps_step_total_variation():
    data = np.array([1.0, 1.0, 1.0, 0.0, 0.0])
    M = 3
    out = reconstruct(data, 2, M, "cweno")[:, 0]
    offsets = stencil_offsets(M)
    ref = reference_cweno(lambda k: data[2 + k], offsets, M)
    assert np.allclose(out, ref, atol=1e-12)
    xs = np.linspace(-0.5, 0.5, 50)
    values = monomials(xs, M) @ out
    assert np.abs(np.diff(values)).sum() <= 1.05 * np.abs(np.diff(data)).sum()


@given(st.integers(1, 5), st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_cweno_matches_reference_on_random_data(M, values):
    data = np.array(values + values)
    offsets = stencil_offsets(M)
    centre = 6
    out = reconstruct(data, centre, M, "cweno")[:, 0]
    ref = reference_cweno(lambda k: data[(centre + k) % len(data)], offsets, M)
    assert np.allclose(out, ref, atol=1e-9 * max(1.0, np.abs(data).max()))


@given(st.integers(0, 5), st.integers(0, 5), st.sampled_from(["central", "cweno"]), st.data())
def test_centre_average_is_conserved(N, extra, mode, data):
    M = min(N + extra, 5)
    width = 9
    vals = data.draw(st.lists(st.floats(-10, 10), min_size=width * (N + 1), max_size=width * (N + 1)))
    cells = np.array(vals).reshape(width, N + 1, 1)
    out = reconstruct(cells, 4, M, mode)
    mean_in = cells[4, :, 0] @ cell_average_factors(N)
    mean_out = out[:, 0] @ cell_average_factors(M)
    assert abs(mean_out - mean_in) <= 1e-13 * max(1.0, np.abs(cells).max() * 10)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e3))
def test_cweno_weights_form_a_partition_of_unity(b0, bl, br):
    w = np.array(cweno_weights(b0, bl, br))
    assert np.all((w >= 0) & (w <= 1))
    assert w.sum() == pytest.approx(1.0, abs=1e-14)


def test_identity_when_N_equals_M(rng):
    cells = rng.normal(size=(7, 3, 2))
    assert np.array_equal(reconstruct_padded(cells, 2, 2)[0], cells[1])


@pytest.mark.parametrize("M", range(1, 6))
def test_central_midpoint_accuracy(M):
    hs, errs = [], []
    for n in (20, 40, 80, 160):
        h = 1.0 / n
        edges = np.arange(n + 1) * h
        avgs = (np.cos(2 * np.pi * edges[:-1]) - np.cos(2 * np.pi * edges[1:])) / (2 * np.pi * h)
        k = n // 3
        value = evaluate(reconstruct(avgs, k, M, "central"), 0.0)[0]
        hs.append(h)
        errs.append(abs(value - math.sin(2 * np.pi * (k + 0.5) * h)))
    assert slope(hs, errs) >= M + 1 - 0.4
