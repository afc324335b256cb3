import numpy as np
import pytest

from pyrospread.errors import (
    BadRange,
    CflViolation,
    NegativeFuel,
    SpecMismatch,
    TooFewFrames,
    UnknownKind,
)
from pyrospread.fields import (
    GridSpec,
    MaskFrame,
    MaskSequence,
    ScalarField,
    VectorField,
    field_from_mask,
)
from pyrospread.pde import PhysicalParams
from pyrospread.simulator import (
    Environment,
    SimConfig,
    SimState,
    cfl_bounds,
    gated_source,
    physical_source,
    run_prior,
    run_simulation,
    step,
    synth_scenario,
)


def flat_env(spec, u=0.0, v=0.0, frames=1, fuel=1.0):
    return Environment(
        ScalarField.zeros(spec),
        [VectorField.const(spec, u, v) for _ in range(frames)],
        ScalarField.const(spec, fuel),
    )


def zero_source(temp, fuel):
    return ScalarField.zeros(temp.spec)


class TestEnvironment:
    def test_needs_wind(self):
        spec = GridSpec(4, 4)
        with pytest.raises(BadRange):
            Environment(ScalarField.zeros(spec), [], ScalarField.const(spec, 1.0))

    def test_rejects_negative_fuel(self):
        spec = GridSpec(4, 4)
        with pytest.raises(NegativeFuel):
            Environment(
                ScalarField.zeros(spec),
                [VectorField.const(spec, 0, 0)],
                ScalarField.const(spec, -1.0),
            )

    def test_wind_holds_at_last_frame(self):
        spec = GridSpec(4, 4)
        env = Environment(
            ScalarField.zeros(spec),
            [VectorField.const(spec, float(i), 0.0) for i in range(3)],
            ScalarField.const(spec, 1.0),
        )
        assert env.wind_at(0).u[0, 0] == 0.0
        assert env.wind_at(99).u[0, 0] == 2.0


class TestSimConfig:
    def test_invariants(self):
        with pytest.raises(BadRange):
            SimConfig(dt=0.0)
        with pytest.raises(BadRange):
            SimConfig(dt=0.1, threshold_theta=1.0)
        with pytest.raises(BadRange):
            SimConfig(dt=0.1, steps_per_frame=0)

    def test_checked_accepts_stable_dt(self):
        spec = GridSpec(8, 8, 1.0)
        params = PhysicalParams(c=1.0, k=0.25)
        env = flat_env(spec, u=0.3)
        diff_bound, adv_bound = cfl_bounds(params, env)
        assert diff_bound == pytest.approx(1.0)
        assert adv_bound == pytest.approx(1.0 / 0.3)
        SimConfig.checked(params, env, dt=0.9 * min(diff_bound, adv_bound))

    def test_checked_rejects_unstable_dt(self):
        spec = GridSpec(8, 8, 1.0)
        params = PhysicalParams(c=1.0, k=0.25)
        env = flat_env(spec, u=0.3)
        with pytest.raises(CflViolation):
            SimConfig.checked(params, env, dt=1.01)  # diffusion bound is 1.0
        fast = flat_env(spec, u=4.0)  # advection bound 0.25 < diffusion bound
        with pytest.raises(CflViolation):
            SimConfig.checked(params, fast, dt=0.3)


class TestStep:
    def test_uniform_ambient_is_fixed_point(self):
        spec = GridSpec(8, 8)
        params = PhysicalParams(t_ambient=0.0, t_burn=1.0)
        env = flat_env(spec)
        state = SimState(ScalarField.zeros(spec), env.fuel0, 0.0)
        out = step(state, env, params, physical_source(params), 0.5)
        assert out.temp == state.temp
        assert out.fuel == state.fuel
        assert out.time == 0.5

    def test_pure_diffusion_conserves_heat(self):
        spec = GridSpec(32, 32)
        params = PhysicalParams(c=2.0, k=0.25)
        env = flat_env(spec)
        temp = np.zeros(spec.shape)
        temp[12:20, 12:20] = 1.0
        state = SimState(ScalarField(spec, temp), env.fuel0, 0.0)
        total0 = params.c * state.temp.values.sum()
        for _ in range(200):
            state = step(state, env, params, zero_source, 0.5)
        total = params.c * state.temp.values.sum()
        assert abs(total - total0) <= 1e-6 * abs(total0)

    def test_richardson_self_consistency(self):
        # halving dt and doubling the step count changes the result by O(dt)
        spec = GridSpec(16, 16)
        params = PhysicalParams(c=1.0, k=0.2, t_ambient=0.0, t_burn=1.0)
        env = flat_env(spec, u=0.2)
        rows = np.arange(16)[:, None]
        cols = np.arange(16)[None, :]
        temp0 = ScalarField(spec, np.exp(-((rows - 8.0) ** 2 + (cols - 8.0) ** 2) / 8.0))
        src = physical_source(params)

        def advance(dt, n):
            state = SimState(temp0, env.fuel0, 0.0)
            for _ in range(n):
                state = step(state, env, params, src, dt)
            return state.temp.values

        dt = 0.4
        coarse = advance(dt, 10)
        fine = advance(dt / 2, 20)
        assert np.max(np.abs(coarse[1:-1, 1:-1] - fine[1:-1, 1:-1])) < 10 * dt

    def test_cfl_violation_raised(self):
        spec = GridSpec(8, 8)
        params = PhysicalParams(c=1.0, k=0.25)
        env = flat_env(spec)
        state = SimState(ScalarField.zeros(spec), env.fuel0, 0.0)
        with pytest.raises(CflViolation):
            step(state, env, params, zero_source, 1.5)

    def test_fuel_depletion_monotone_and_clamped(self):
        spec = GridSpec(8, 8)
        params = PhysicalParams(t_ambient=0.0, t_burn=1.0)
        env = flat_env(spec)
        state = SimState(ScalarField.const(spec, 1.0), env.fuel0, 0.0)
        prev = state.fuel.values
        for _ in range(50):
            state = step(
                state, env, params, zero_source, 0.5, fuel_depletion=True, beta_fuel=0.5
            )
            assert np.all(state.fuel.values <= prev + 1e-15)
            assert np.all(state.fuel.values >= 0.0)
            prev = state.fuel.values

    def test_max_principle_without_source(self):
        rng = np.random.default_rng(0)
        spec = GridSpec(16, 16)
        params = PhysicalParams(c=1.0, k=0.2)
        env = flat_env(spec, u=0.3, v=-0.2)
        temp = rng.uniform(0.0, 5.0, spec.shape)
        cap = temp.max()
        state = SimState(ScalarField(spec, temp), env.fuel0, 0.0)
        for _ in range(100):
            state = step(state, env, params, zero_source, 0.5)
            assert state.temp.values.max() <= cap + 1e-9


class TestRunPrior:
    def test_all_zero_masks_give_all_zero_priors(self):
        spec = GridSpec(16, 16)
        params = PhysicalParams(t_ambient=0.0, t_burn=1.0)
        env = flat_env(spec, frames=5)
        observed = MaskSequence([MaskFrame.zeros(spec)] * 5, 5.0)
        cfg = SimConfig(dt=0.5, steps_per_frame=10, horizon_frames=4)
        priors, fit = run_prior(observed, env, params, cfg)
        assert len(priors) == 4
        assert all(f.area() == 0 for f in priors.frames)

    def test_frame_count_and_spec(self):
        spec = GridSpec(64, 64)
        sc = synth_scenario("circular", spec, seed=1, n_observed=7, n_future=5)
        priors, _ = run_prior(sc.observed, sc.env, sc.params, sc.config)
        assert len(priors) == sc.config.horizon_frames == 5
        assert all(f.spec == spec for f in priors.frames)

    def test_requires_three_frames(self):
        spec = GridSpec(8, 8)
        env = flat_env(spec, frames=2)
        observed = MaskSequence([MaskFrame.zeros(spec)] * 2, 5.0)
        with pytest.raises(TooFewFrames):
            run_prior(observed, env, PhysicalParams(), SimConfig(dt=0.5))

    def test_dt_frame_consistency_enforced(self):
        spec = GridSpec(8, 8)
        env = flat_env(spec, frames=3)
        observed = MaskSequence([MaskFrame.zeros(spec)] * 3, 5.0)
        cfg = SimConfig(dt=0.5, steps_per_frame=3)  # 1.5 s != 5 s
        with pytest.raises(BadRange):
            run_prior(observed, env, PhysicalParams(), cfg)

    def test_centroid_drifts_east_under_eastward_wind(self):
        spec = GridSpec(96, 96)
        sc = synth_scenario("wind_driven", spec, seed=7)
        priors, _ = run_prior(sc.observed, sc.env, sc.params, sc.config)
        cols = [np.nonzero(f.bits)[1].mean() for f in priors.frames]
        assert all(b > a for a, b in zip(cols, cols[1:]))

    def test_no_upwind_ignition_without_diffusion(self):
        spec = GridSpec(96, 96)
        sc = synth_scenario("wind_driven", spec, seed=3)
        params = PhysicalParams(
            c=sc.params.c, k=0.0, gamma=sc.params.gamma,
            t_ambient=sc.params.t_ambient, t_burn=sc.params.t_burn,
        )
        priors, _ = run_prior(sc.observed, sc.env, params, sc.config)
        west_edge = np.nonzero(sc.observed.frames[-1].bits.any(axis=0))[0].min()
        for frame in priors.frames:
            assert not frame.bits[:, :west_edge].any()


class TestSynthScenario:
    def test_deterministic_under_seed(self):
        spec = GridSpec(48, 48)
        a = synth_scenario("wind_driven", spec, seed=11, n_observed=5, n_future=4)
        b = synth_scenario("wind_driven", spec, seed=11, n_observed=5, n_future=4)
        assert a.observed == b.observed
        assert a.future == b.future
        assert a.env.terrain == b.env.terrain
        assert all(x == y for x, y in zip(a.env.wind, b.env.wind))

    def test_circular_has_no_wind(self):
        sc = synth_scenario("circular", GridSpec(48, 48), seed=2, n_observed=4, n_future=3)
        for w in sc.env.wind:
            assert np.all(w.u == 0.0) and np.all(w.v == 0.0)

    def test_wind_driven_seed7_ignition_area(self):
        sc = synth_scenario("wind_driven", GridSpec(128, 128), seed=7)
        assert 5 <= sc.observed.frames[0].area() <= 50

    def test_unknown_kind(self):
        with pytest.raises(UnknownKind):
            synth_scenario("volcanic", GridSpec(16, 16), seed=0)

    def test_counts(self):
        sc = synth_scenario("slope_driven", GridSpec(48, 48), seed=5, n_observed=6, n_future=9)
        assert len(sc.observed) == 6
        assert len(sc.future) == 9
        assert len(sc.env.wind) == 6
        assert len(sc.temps_observed) == 6


class TestClosedLoop:
    def test_self_consistency_one_kind(self):
        # compact version of the acceptance closed loop (one seed, one kind)
        spec = GridSpec(96, 96)
        sc = synth_scenario("circular", spec, seed=4)
        priors, fit = run_prior(sc.observed, sc.env, sc.params, sc.config)
        assert fit.converged
        ious = []
        for p, t in zip(priors.frames, sc.future.frames):
            inter = np.sum((p.bits == 1) & (t.bits == 1))
            union = np.sum((p.bits == 1) | (t.bits == 1))
            ious.append(1.0 if union == 0 else inter / union)
        assert np.mean(ious) >= 0.8
