import numpy as np
import pytest

from pyrospread.errors import EmptyVector, SpecMismatch, TooFewFrames
from pyrospread.fields import GridSpec, ScalarField, VectorField
from pyrospread.pde import PhysicalParams
from pyrospread.simulator import Environment, SimConfig, SimState, run_simulation
from pyrospread.source_fit import (
    FitReport,
    SimplexWeights,
    estimate_observed_source,
    estimate_observed_source_series,
    fit_source_weights,
    project_simplex,
)


def sample_simplex(rng, n, count):
    """Uniform (Dirichlet) samples from the probability simplex."""
    e = rng.exponential(size=(count, n))
    return e / e.sum(axis=1, keepdims=True)


class TestProjectSimplex:
    def test_fixed_point(self):
        w = project_simplex([0.2, 0.3, 0.5]).w
        np.testing.assert_array_equal(w, [0.2, 0.3, 0.5])

    def test_dominant_coordinate(self):
        np.testing.assert_array_equal(project_simplex([10.0, 0.0, 0.0]).w, [1.0, 0.0, 0.0])

    def test_single_entry(self):
        np.testing.assert_array_equal(project_simplex([-3.7]).w, [1.0])

    def test_empty_rejected(self):
        with pytest.raises(EmptyVector):
            project_simplex([])

    def test_constraints_hold_for_arbitrary_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            n = int(rng.integers(1, 12))
            v = rng.normal(scale=float(rng.uniform(0.01, 100.0)), size=n)
            w = project_simplex(v).w
            assert np.all(w >= 0)
            assert abs(w.sum() - 1.0) <= 1e-9

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            v = rng.normal(scale=5.0, size=int(rng.integers(1, 9)))
            once = project_simplex(v).w
            twice = project_simplex(once).w
            np.testing.assert_allclose(twice, once, rtol=0, atol=1e-12)

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            v = rng.normal(size=6)
            perm = rng.permutation(6)
            np.testing.assert_array_equal(project_simplex(v[perm]).w, project_simplex(v).w[perm])

    def test_never_beaten_by_dense_simplex_scan(self):
        # brute-force optimality: no sampled simplex point may be closer
        rng = np.random.default_rng(3)
        samples = sample_simplex(rng, 5, 200_000)
        sq_norms = np.einsum("ij,ij->i", samples, samples)
        for _ in range(25):
            v = rng.normal(scale=2.0, size=5)
            w = project_simplex(v).w
            d_proj = float(np.sum((w - v) ** 2))
            d_scan = float(np.min(sq_norms - 2.0 * samples @ v + v @ v))
            assert d_proj <= d_scan + 1e-6


def smooth_field(spec, rng, scale=1.0):
    """Band-limited random field (sum of a few separable cosines)."""
    rows = np.arange(spec.height)[:, None] / spec.height
    cols = np.arange(spec.width)[None, :] / spec.width
    out = np.zeros(spec.shape)
    for _ in range(4):
        fr, fc = rng.integers(1, 4, size=2)
        out += rng.normal() * np.cos(np.pi * fr * rows) * np.cos(np.pi * fc * cols)
    return ScalarField(spec, scale * out)


class TestEstimateObservedSource:
    def test_stationary_history_zero_wind(self):
        spec = GridSpec(8, 8)
        params = PhysicalParams()
        hist = [ScalarField.const(spec, 0.4)] * 5
        s = estimate_observed_source(
            hist, VectorField.const(spec, 0.0, 0.0), ScalarField.zeros(spec), params, 1.0
        )
        assert np.all(s.values == 0.0)

    def test_too_few_frames(self):
        spec = GridSpec(3, 3)
        with pytest.raises(TooFewFrames):
            estimate_observed_source(
                [ScalarField.zeros(spec)] * 2,
                VectorField.const(spec, 0, 0),
                ScalarField.zeros(spec),
                PhysicalParams(),
                1.0,
            )

    def test_forward_simulate_then_invert(self):
        # run the integrator with a known fixed source field, sample every
        # step, and check the inversion recovers it within O(dt)
        rng = np.random.default_rng(4)
        spec = GridSpec(24, 24, 1.0)
        params = PhysicalParams(c=1.3, k=0.3, gamma=0.0, t_ambient=0.0, t_burn=1.0)
        env = Environment(
            ScalarField.zeros(spec),
            [VectorField.const(spec, 0.0, 0.0)],
            ScalarField.const(spec, 1.0),
        )
        dt = 0.05
        star = smooth_field(spec, rng, scale=0.5)

        def src(temp, fuel):
            return star

        cfg = SimConfig(dt=dt, steps_per_frame=1, horizon_frames=1)
        temp0 = smooth_field(spec, rng, scale=0.3)
        state = SimState(temp0, env.fuel0, 0.0)
        _, temps = run_simulation(state, env, params, cfg, 5, src, record_fields=True)
        s_obs = estimate_observed_source(
            temps, env.wind[0], env.terrain, params, dt, frame=2
        )
        err = np.max(np.abs(s_obs.values - star.values))
        assert err <= 10.0 * dt

    def test_heat_capacity_scales_time_derivative(self):
        rng = np.random.default_rng(5)
        spec = GridSpec(10, 10)
        hist = [smooth_field(spec, rng) for _ in range(3)]
        wind = VectorField.const(spec, 0.1, -0.2)
        terrain = smooth_field(spec, rng)
        dt = 2.0
        base = dict(k=0.2, gamma=0.3, t_ambient=0.0, t_burn=1.0)
        s1 = estimate_observed_source(hist, wind, terrain, PhysicalParams(c=1.0, **base), dt)
        s2 = estimate_observed_source(hist, wind, terrain, PhysicalParams(c=2.0, **base), dt)
        dTdt = (hist[2].values - hist[0].values) / (2 * dt)
        np.testing.assert_allclose(s2.values - s1.values, dTdt, rtol=0, atol=1e-12)

    def test_series_has_one_entry_per_frame(self):
        rng = np.random.default_rng(6)
        spec = GridSpec(8, 8)
        hist = [smooth_field(spec, rng) for _ in range(4)]
        series = estimate_observed_source_series(
            hist, VectorField.const(spec, 0, 0), ScalarField.zeros(spec), PhysicalParams(), 1.0
        )
        assert len(series) == 4


class TestFitSourceWeights:
    def test_recovers_first_frame(self):
        rng = np.random.default_rng(7)
        spec = GridSpec(12, 12)
        t0 = smooth_field(spec, rng)
        t1 = ScalarField(spec, rng.normal(size=spec.shape))
        report = fit_source_weights([t0, t1], t0)
        assert report.converged
        np.testing.assert_allclose(report.weights.w, [1.0, 0.0], rtol=0, atol=1e-4)
        assert report.residual_norm <= 1e-4 * np.linalg.norm(t0.values)

    def test_single_frame_history(self):
        rng = np.random.default_rng(8)
        spec = GridSpec(8, 8)
        t0 = smooth_field(spec, rng)
        target = smooth_field(spec, rng)
        report = fit_source_weights([t0], target)
        np.testing.assert_array_equal(report.weights.w, [1.0])
        expected = float(np.linalg.norm(t0.values - target.values))
        assert abs(report.residual_norm - expected) <= 1e-12

    def test_recovers_even_mixture(self):
        rng = np.random.default_rng(9)
        spec = GridSpec(10, 10)
        t0 = ScalarField(spec, rng.normal(size=spec.shape))
        t1 = ScalarField(spec, rng.normal(size=spec.shape))
        target = ScalarField(spec, 0.5 * t0.values + 0.5 * t1.values)
        report = fit_source_weights([t0, t1], target)
        assert np.max(np.abs(report.weights.w - 0.5)) <= 1e-3

    def test_planted_weights_recovered(self):
        rng = np.random.default_rng(10)
        spec = GridSpec(8, 8)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            hist = [ScalarField(spec, rng.normal(size=spec.shape)) for _ in range(n)]
            planted = sample_simplex(rng, n, 1)[0]
            target = ScalarField(
                spec, sum(w * h.values for w, h in zip(planted, hist))
            )
            report = fit_source_weights(hist, target)
            assert np.max(np.abs(report.weights.w - planted)) <= 1e-3

    def test_objective_trace_monotone(self):
        rng = np.random.default_rng(11)
        spec = GridSpec(8, 8)
        hist = [ScalarField(spec, rng.normal(size=spec.shape)) for _ in range(5)]
        target = ScalarField(spec, rng.normal(size=spec.shape))
        report = fit_source_weights(hist, target)
        trace = np.asarray(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_permutation_equivariant(self):
        rng = np.random.default_rng(12)
        spec = GridSpec(8, 8)
        hist = [ScalarField(spec, rng.normal(size=spec.shape)) for _ in range(4)]
        target = ScalarField(spec, rng.normal(size=spec.shape))
        perm = [2, 0, 3, 1]
        base = fit_source_weights(hist, target).weights.w
        permuted = fit_source_weights([hist[i] for i in perm], target).weights.w
        np.testing.assert_allclose(permuted, base[perm], rtol=0, atol=1e-9)

    def test_flat_objective_keeps_uniform_start(self):
        # identical history frames: the projected gradient cannot prefer
        # any frame, so the uniform initialization is already optimal
        spec = GridSpec(8, 8)
        frame = ScalarField.const(spec, 0.7)
        target = ScalarField.const(spec, 0.3)
        report = fit_source_weights([frame] * 4, target)
        assert report.converged
        np.testing.assert_allclose(report.weights.w, 0.25, rtol=0, atol=1e-12)

    def test_spec_mismatch(self):
        with pytest.raises(SpecMismatch):
            fit_source_weights([ScalarField.zeros(GridSpec(3, 3))], ScalarField.zeros(GridSpec(3, 4)))

    def test_weights_valid_even_when_not_converged(self):
        rng = np.random.default_rng(13)
        spec = GridSpec(8, 8)
        hist = [ScalarField(spec, rng.normal(size=spec.shape)) for _ in range(5)]
        target = ScalarField(spec, rng.normal(size=spec.shape))
        report = fit_source_weights(hist, target, tol=0.0, max_iters=3)
        assert not report.converged
        assert report.iterations == 3
        SimplexWeights(report.weights.w)  # revalidates both constraints
