import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aer.asymptotics import PhysicalSetup, build_cumulative, build_solution
from aer.exceptions import DegenerateSide, MissingGradient, NoLayerDetected, OneSidedData
from aer.inversion import (
    AEROptions,
    LayerWindow,
    Observations,
    add_noise,
    backward_difference_gradient,
    detect_layer_window,
    fit_shape,
    gap_mask,
    interpolate_across_layer,
    pointwise_target,
    reconstruct,
    record_sups,
    relative_source_error,
    run_aer,
    uniform_grid,
)
from aer.smoothing import smooth_field

SETUP = PhysicalSetup(mu=0.01, k=1.0, u_left=-10.0, u_right=5.0, t_final=0.3, x0_init=0.1)


def f_ex1(x):
    return x - x ** 2 + x ** 3


@pytest.fixture(scope="module")
def asymptotic_data():
    """Observations of the outer solution itself, where k u u_x = f exactly."""
    sol = build_solution(SETUP, build_cumulative(f_ex1))
    xs = uniform_grid(20)
    t0 = 0.2
    x0 = float(sol.front.position(t0))
    reg = sol.regular
    u = np.where(xs <= x0, reg.phi_left(xs), reg.phi_right(xs))
    w = np.where(xs <= x0, reg.dphi_left(xs), reg.dphi_right(xs))
    return sol, xs, u, w, t0


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.2))
def test_noise_is_bounded_and_seeded(seed, delta):
    xs = uniform_grid(10)
    u = np.linspace(-3, 3, 11)
    w = np.ones(11)
    a = add_noise(xs, u, w, delta, seed)
    b = add_noise(xs, u, w, delta, seed)
    assert np.array_equal(a.u_noisy, b.u_noisy) and np.array_equal(a.w_noisy, b.w_noisy)
    assert np.all(np.abs(a.u_noisy - u) <= delta * np.abs(u) + 1e-15)
    assert np.all(np.abs(a.w_noisy - w) <= delta + 1e-15)


def test_gap_mask_and_nan():
    xs = uniform_grid(10)
    m = gap_mask(xs, [(0.25, 0.45)])
    assert list(np.flatnonzero(~m)) == [3, 4]
    obs = add_noise(xs, np.ones(11), None, 0.01, 0, mask=m)
    assert np.all(np.isnan(obs.u_noisy[~m]))
    assert obs.w_noisy is None


def test_observation_validation():
    with pytest.raises(ValueError):
        Observations(0.1, np.array([0.0, 0.0, 1.0]), np.zeros(3), None, 0.0, np.ones(3, bool))


def test_oracle_window_contains_front(asymptotic_data):
    sol, xs, u, w, t0 = asymptotic_data
    obs = add_noise(xs, u, w, 0.0, 0, t0)
    win = detect_layer_window(obs, SETUP, sol.front, "oracle")
    x0 = float(sol.front.position(t0))
    assert win.x_lo < x0 < win.x_hi
    nl, nr = win.split_indices(xs)
    assert xs[nl] <= win.x_lo and xs[nr] >= win.x_hi


def test_data_window_and_no_layer():
    xs = uniform_grid(40)
    u = np.where(xs < 0.5, -8.0, 4.0) + 0.01 * xs
    obs = add_noise(xs, u, None, 0.0, 0)
    win = detect_layer_window(obs, SETUP, mode="data")
    assert win.x_lo < 0.5 < win.x_hi
    flat = add_noise(xs, np.sin(xs), None, 0.0, 0)
    with pytest.raises(NoLayerDetected):
        detect_layer_window(flat, SETUP, mode="data")


def test_backward_difference_on_line():
    xs = np.linspace(0, 1, 11)
    sf = smooth_field(xs, 2 * xs + 1, 1e-9)
    assert np.allclose(backward_difference_gradient(xs, sf), 2.0, atol=1e-6)


def test_pointwise_target_requires_gradient():
    with pytest.raises(MissingGradient):
        pointwise_target(np.ones(3), None, 1.0)
    g = pointwise_target(np.ones(3), np.full(3, 2.0), 0.5, mask=[True, False, True])
    assert np.isnan(g[1]) and g[0] == 1.0


@pytest.mark.parametrize("cls", ["monotone", "concave", "convex", "none"])
def test_fit_shape_keeps_admissible_data(cls):
    xs = np.linspace(0, 1, 8)
    g = {"monotone": xs ** 3, "concave": -(xs ** 2), "convex": xs ** 2, "none": np.sin(9 * xs)}[cls]
    assert np.allclose(fit_shape(xs, g, cls).values, g)


def test_interpolate_across_layer():
    from aer.inversion import SourceEstimate

    est = SourceEstimate(np.array([0.0, 0.2, 0.8, 1.0]), np.array([0.0, 0.2, 0.8, 1.0]), "monotone")
    full = interpolate_across_layer(est, np.linspace(0, 1, 6), LayerWindow(0.3, 0.7, "oracle"))
    assert np.allclose(full.values, np.linspace(0, 1, 6))
    assert list(full.used) == [True, True, False, False, True, True]
    with pytest.raises(OneSidedData):
        interpolate_across_layer(est, np.linspace(0, 1, 6), LayerWindow(0.5, 1.5, "oracle"))


def test_noiseless_outer_data_recovers_source(asymptotic_data):
    sol, xs, u, w, t0 = asymptotic_data
    obs = add_noise(xs, u, w, 0.0, 0, t0)
    rec = reconstruct(SETUP, obs, AEROptions(), sol.front)
    used = rec.estimate.used
    assert np.allclose(rec.estimate.values[used], f_ex1(xs[used]), atol=1e-9)
    assert relative_source_error(rec.estimate, f_ex1) < 0.01


def test_noisy_pipeline_contains_truth(asymptotic_data):
    sol, xs, u, w, t0 = asymptotic_data
    for seed in range(5):
        obs = add_noise(xs, u, w, 0.01, seed, t0)
        est, rep, rec = run_aer(SETUP, obs, AEROptions(), sol.front)
        assert rep.feasible
        assert rep.brackets(f_ex1(rep.xs))
        assert np.all(np.diff(rep.f_delta) >= -1e-12)


def test_error_decreases_with_noise(asymptotic_data):
    sol, xs, u, w, t0 = asymptotic_data
    errs = []
    for delta in (0.1, 0.01, 0.001):
        e = [relative_source_error(run_aer(SETUP, add_noise(xs, u, w, delta, s, t0), AEROptions(), sol.front)[0], f_ex1) for s in range(10)]
        errs.append(np.median(e))
    assert errs[0] > errs[1] > errs[2]


def test_smoothing_branch_and_too_few_points(asymptotic_data):
    sol, _, _, _, t0 = asymptotic_data
    xs = uniform_grid(200)
    x0 = float(sol.front.position(t0))
    reg = sol.regular
    u = np.where(xs <= x0, reg.phi_left(xs), reg.phi_right(xs))
    obs = add_noise(xs, u, None, 1e-4, 3, t0)
    rec = reconstruct(SETUP, obs, AEROptions(constraint_class="none"), sol.front)
    assert set(rec.data.smoothed) == {"left", "right"}
    assert record_sups(obs)["w_sup"] > 0
    tiny = add_noise(uniform_grid(6), np.linspace(-10, 5, 7), None, 0.0, 0, t0)
    with pytest.raises(DegenerateSide):
        reconstruct(SETUP, tiny, AEROptions(), sol.front)
