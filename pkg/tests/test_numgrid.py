import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infbend.numgrid import (ChartGrid, GridError, diff, grad, line_integrate, loop_residual,
                             rectangle_loop, sup, sweep_integrate)
from infbend.scenes import make_scene


def unit_grid(n=64):
    return ChartGrid.uniform([(0.0, 1.0)], n)


def circle_grid(n=32):
    return ChartGrid.uniform([(0.0, 2 * np.pi)], n, (True,))


def test_resolution_floor():
    with pytest.raises(GridError):
        ChartGrid.uniform([(0.0, 1.0)], 7)


def test_spacing_periodic_vs_closed():
    assert circle_grid(32).spacing[0] == pytest.approx(2 * np.pi / 32)
    assert unit_grid(64).spacing[0] == pytest.approx(1 / 63)


def test_derivative_of_constant_vanishes():
    g = ChartGrid.uniform([(0, 1), (0, 2)], 16)
    c = np.full(g.shape + (3,), 4.2)
    for axis in range(2):
        assert np.abs(diff(c, g, axis)).max() == 0.0


def test_quadratic_exact_in_interior():
    g = unit_grid()
    u = g.mesh()[..., 0]
    d = diff(u**2, g, 0)
    assert np.abs(d[1:-1] - 2 * u[1:-1]).max() <= 1e-12


def test_periodic_sine_derivative():
    g = circle_grid(32)
    th = g.mesh()[..., 0]
    err = np.abs(diff(np.sin(th), g, 0) - np.cos(th)).max()
    assert err <= (2 * np.pi / 32) ** 2 * 1.0


def test_axis_out_of_range():
    with pytest.raises(GridError):
        diff(np.zeros(unit_grid().shape), unit_grid(), 1)


def test_line_integrate_zero_rhs():
    g = ChartGrid.uniform([(0, 1), (0, 1)], 10)
    path = [(0, 0), (1, 0), (1, 1), (2, 1)]
    v0 = np.array([1.0, -2.0])
    out = line_integrate(lambda node, axis: np.zeros(2), v0, path, g)
    assert np.array_equal(out, v0)


def test_line_integrate_polynomial_exact():
    g = unit_grid()
    u = g.mesh()[..., 0]
    rate = 2 * u

    def rhs(node, axis):
        return np.array([rate[node]])

    path = [(k,) for k in range(5, 40)]
    out = line_integrate(rhs, np.array([0.3]), path, g)
    assert out[0] == pytest.approx(u[39] ** 2 - u[5] ** 2 + 0.3, abs=1e-10)


def test_periodic_loop_of_cosine():
    g = circle_grid(32)
    th = g.mesh()[..., 0]

    def rhs(node, axis):
        return np.array([np.cos(th[node])])

    loop = [(k % 32,) for k in range(33)]
    res = loop_residual(rhs, np.array([0.0]), loop, g)
    assert res <= (2 * np.pi / 32) ** 2 * 2.0


def test_non_adjacent_path_rejected():
    with pytest.raises(GridError):
        line_integrate(lambda n, a: np.zeros(1), np.zeros(1), [(0, 0), (2, 0)], ChartGrid.uniform([(0, 1)] * 2, 8))


def test_open_loop_rejected():
    g = ChartGrid.uniform([(0, 1)] * 2, 8)
    with pytest.raises(GridError):
        loop_residual(lambda n, a: np.zeros(1), np.zeros(1), [(0, 0), (1, 0)], g)


def test_gradient_field_closed_on_cells():
    g = ChartGrid.uniform([(0, 1), (0, 1)], 32)
    X = g.mesh()
    phi = np.sin(X[..., 0]) * X[..., 1] ** 2
    rates = grad(phi, g)

    def rhs(node, axis):
        return rates[node + (axis,)]

    worst = max(loop_residual(rhs, np.zeros(()), rectangle_loop((i, j), (0, 1)), g)
                for i in range(0, 30, 7) for j in range(0, 30, 7))
    # cell area h^2 times an O(h^2) truncation error
    assert worst <= 2 * g.h**4


def test_exact_polynomial_gradient_loop():
    g = ChartGrid.uniform([(0, 1), (0, 1)], 16)
    X = g.mesh()
    u, v = X[..., 0], X[..., 1]
    rates = np.stack([2 * u * v, u**2], axis=-1)  # gradient of u^2 v, bilinear along edges

    def rhs(node, axis):
        return np.array([rates[node + (axis,)]])

    assert loop_residual(rhs, np.zeros(1), rectangle_loop((3, 4), (0, 1)), g) <= 1e-10


def test_green_theorem_detects_curl():
    g = ChartGrid.uniform([(0, 1), (0, 1)], 64)
    u = g.mesh()[..., 0]

    def rhs(node, axis):  # the 1-form u dv, whose curl is 1
        return np.array([0.0 if axis == 0 else u[node]])

    loop = rectangle_loop((10, 10), (0, 1), (4, 4))
    res = loop_residual(rhs, np.zeros(1), loop, g)
    area = 16 * g.spacing[0] * g.spacing[1]
    assert res == pytest.approx(area, rel=1e-9)
    assert res > 10 * g.h**2


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1))
def test_partial_is_linear(a, b, axis):
    g = ChartGrid.uniform([(0, 1), (0, 2 * np.pi)], (12, 16), (False, True))
    X = g.mesh()
    f1 = np.exp(X[..., 0]) * np.cos(X[..., 1])
    f2 = X[..., 0] ** 3 + np.sin(2 * X[..., 1])
    lhs = diff(a * f1 + b * f2, g, axis)
    rhs = a * diff(f1, g, axis) + b * diff(f2, g, axis)
    assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + abs(a) + abs(b)) * 50


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from([(1, 0), (-1, 0), (0, 1), (0, -1)]), min_size=1, max_size=30))
def test_path_and_reverse_return_base(steps):
    g = ChartGrid.uniform([(0, 1), (0, 1)], 12)
    X = g.mesh()
    rates = np.stack([np.cos(3 * X[..., 1]) * X[..., 0], np.exp(X[..., 0])], -1)[..., None]
    node = (6, 6)
    path = [node]
    for du, dv in steps:
        nxt = (min(max(path[-1][0] + du, 0), 11), min(max(path[-1][1] + dv, 0), 11))
        if nxt != path[-1]:
            path.append(nxt)
    if len(path) < 2:
        return
    full = path + path[-2::-1]

    def rhs(nd, axis):
        return rates[nd + (axis,)]

    base = np.array([0.7])
    out = line_integrate(rhs, base, full, g)
    assert np.abs(out - base).max() <= 1e-13


@pytest.mark.parametrize("token", ["cylinder", "torus", "sphere", "graph", "cylinder_r4"])
def test_mixed_partials_commute_on_catalog(token):
    scene = make_scene(token, 32)
    g = scene.grid
    f = scene.map
    d01 = diff(diff(f, g, 0), g, 1)
    d10 = diff(diff(f, g, 1), g, 0)
    c3 = max(1.0, np.abs(f).max())
    assert sup(d01 - d10, g) <= 10 * g.h**2 * c3


def test_sweep_integrate_recovers_potential_and_is_order_free():
    g = ChartGrid.uniform([(0, 1), (0, 2)], (20, 24))
    X = g.mesh()
    phi = X[..., 0] ** 2 * X[..., 1] + X[..., 1] ** 2
    rates = np.stack([2 * X[..., 0] * X[..., 1], X[..., 0] ** 2 + 2 * X[..., 1]], axis=-1)
    base = (5, 7)
    a = sweep_integrate(rates, g, base)
    b = sweep_integrate(rates, g, base, order=[1, 0])
    ref = phi - phi[base]
    assert np.abs(a - ref).max() <= 1e-12
    assert np.abs(a - b).max() <= 1e-12


def test_sweep_rejects_bad_order():
    g = ChartGrid.uniform([(0, 1)] * 2, 8)
    with pytest.raises(GridError):
        sweep_integrate(np.zeros(g.shape + (2,)), g, (0, 0), order=[0, 0])


def test_grid_dict_round_trip():
    g = ChartGrid.uniform([(0.0, 2 * np.pi), (-1.0, 1.5)], (16, 9), (True, False))
    assert ChartGrid.from_dict(g.to_dict()) == g
