import numpy as np
import pytest
from scipy.integrate import RK45, solve_ivp

from superradiance_timing import integrate as rk
from superradiance_timing.integrate import IntegrationError, continuous_extension, integrate


def run(fun, y0, t, **kw):
    out = {}

    def on_output(i, ti, y):
        out[i] = (ti, np.array(y))

    final, stats = integrate(fun, np.asarray(y0), t, on_output, **kw)
    assert sorted(out) == list(range(len(t)))
    return np.array([out[i][1] for i in range(len(t))]), final, stats


def test_tableau_matches_scipy():
    for s in range(1, 6):
        np.testing.assert_allclose(rk.A[s], RK45.A[s, :s], rtol=0, atol=1e-16)
    np.testing.assert_allclose(rk.B5[:6], RK45.B, atol=1e-16)
    np.testing.assert_allclose(rk.C[:6], RK45.C, atol=1e-16)
    np.testing.assert_allclose(rk.E, -RK45.E, atol=1e-16)  # opposite sign convention
    np.testing.assert_allclose(rk.P, RK45.P, atol=1e-16)


def test_exponential_decay():
    t = np.linspace(0, 10, 101)
    ys, _, _ = run(lambda t, y: -0.7 * y, [1.0], t)
    np.testing.assert_allclose(ys[:, 0], np.exp(-0.7 * t), rtol=1e-7, atol=1e-10)


def test_complex_rotation_dense_output():
    # outputs between steps come from the continuous extension
    t = np.linspace(0, 20, 4001)
    ys, _, stats = run(lambda t, y: 1j * y, np.array([1.0 + 0j]), t)
    assert stats.n_steps < len(t)
    np.testing.assert_allclose(ys[:, 0], np.exp(1j * t), atol=1e-7)


def test_against_scipy_nonlinear():
    def lotka(t, y):
        return np.array([1.1 * y[0] - 0.4 * y[0] * y[1], 0.1 * y[0] * y[1] - 0.4 * y[1]])

    t = np.linspace(0, 15, 61)
    ys, _, _ = run(lotka, [10.0, 5.0], t)
    ref = solve_ivp(lotka, (0, 15), [10.0, 5.0], method="DOP853", t_eval=t, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ys, ref.y.T, rtol=1e-6)


def test_time_dependent():
    t = np.linspace(0, 3, 31)
    ys, _, _ = run(lambda t, y: np.cos(t) * np.ones(1), [0.0], t)
    np.testing.assert_allclose(ys[:, 0], np.sin(t), atol=1e-9)


def test_continuous_extension_endpoints():
    f = lambda t, y: -y
    y0 = np.array([1.0])
    h = 0.3
    k = [f(0, y0)]
    for s in range(1, 7):
        dy = sum(rk.A[s][j] * k[j] for j in range(s))
        k.append(f(rk.C[s] * h, y0 + h * dy))
    y1 = y0 + h * sum(rk.B5[s] * k[s] for s in range(6))
    np.testing.assert_allclose(continuous_extension(0, h, y0, k, 0.0), y0, atol=1e-16)
    np.testing.assert_allclose(continuous_extension(0, h, y0, k, h), y1, atol=1e-15)
    # 4th-order interpolant: local error O(h^5)
    mid = continuous_extension(0, h, y0, k, 0.13)
    assert mid[0] == pytest.approx(np.exp(-0.13), abs=h**5)


def test_post_step_applied_to_outputs():
    seen = []
    t = np.linspace(0, 1, 11)

    def clamp(y):
        seen.append(1)
        return np.round(y, 3)

    ys, _, _ = run(lambda t, y: -y, [1.0], t, post_step=clamp)
    assert seen
    np.testing.assert_array_equal(ys[1:, 0], np.round(ys[1:, 0], 3))


def test_step_underflow_reports_time():
    t = np.linspace(0, 2, 5)
    with pytest.raises(IntegrationError) as err:
        run(lambda t, y: y**2, [1.0], t)  # blows up at t = 1
    assert 0.9 < err.value.t < 1.0 + 1e-6


def test_max_steps():
    with pytest.raises(IntegrationError):
        run(lambda t, y: -y, [1.0], np.linspace(0, 10, 3), max_steps=2)


def test_single_point_grid():
    ys, final, stats = run(lambda t, y: -y, [2.0], np.array([0.0]))
    assert ys[0, 0] == 2.0 and stats.n_steps == 0


@pytest.mark.parametrize("t", [np.array([0.0, 1.0, 1.0]), np.array([1.0, 0.5]), np.array([])])
def test_bad_grid(t):
    with pytest.raises(ValueError):
        integrate(lambda t, y: y, np.ones(1), t, lambda *a: None)
