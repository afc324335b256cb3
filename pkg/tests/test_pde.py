import numpy as np
import pytest

from pyrospread.errors import BadRange, NegativeFuel, SpecMismatch
from pyrospread.fields import GridSpec, ScalarField, VectorField
from pyrospread.pde import (
    PhysicalParams,
    advection,
    diffusion,
    gradient,
    reaction_rate,
    source_term,
    upwind_dot_grad,
)


def coords(spec):
    """x eastward (columns), y northward (row 0 is the north edge)."""
    rows = np.arange(spec.height, dtype=float)[:, None]
    cols = np.arange(spec.width, dtype=float)[None, :]
    x = (cols * spec.dx) * np.ones((spec.height, 1))
    y = ((spec.height - 1 - rows) * spec.dx) * np.ones((1, spec.width))
    return x, y


class TestPhysicalParams:
    def test_defaults_valid(self):
        PhysicalParams()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"c": 0.0},
            {"k": -1.0},
            {"gamma": -0.1},
            {"a_coeff": -1.0},
            {"c_cool": -1.0},
            {"b_arrhenius": 0.0},
            {"t_burn": -1.0, "t_ambient": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(BadRange):
            PhysicalParams(**kwargs)


class TestGradient:
    def test_constant_field_is_flat(self):
        gx, gy = gradient(ScalarField.const(GridSpec(5, 5), 5.0))
        assert np.all(gx.values == 0.0)
        assert np.all(gy.values == 0.0)

    def test_linear_in_x(self):
        spec = GridSpec(6, 7, 1.0)
        x, y = coords(spec)
        gx, gy = gradient(ScalarField(spec, 3.0 * x))
        np.testing.assert_allclose(gx.values, 3.0, rtol=0, atol=0)
        np.testing.assert_allclose(gy.values, 0.0, rtol=0, atol=0)

    def test_linear_in_y_points_north(self):
        spec = GridSpec(6, 7, 0.5)
        x, y = coords(spec)
        gx, gy = gradient(ScalarField(spec, 2.0 * y))
        np.testing.assert_allclose(gy.values, 2.0, rtol=0, atol=1e-14)
        np.testing.assert_allclose(gx.values, 0.0, rtol=0, atol=0)

    def test_quadratic_exact_under_central_difference(self):
        spec = GridSpec(5, 9, 0.25)
        x, y = coords(spec)
        gx, _ = gradient(ScalarField(spec, x * x))
        np.testing.assert_allclose(gx.values[:, 1:-1], 2.0 * x[:, 1:-1], rtol=0, atol=1e-12)


class TestDiffusion:
    def test_constant_field(self):
        out = diffusion(ScalarField.const(GridSpec(5, 5), 3.7), 2.0)
        assert np.all(out.values == 0.0)

    def test_paraboloid_laplacian_is_four(self):
        spec = GridSpec(8, 8, 1.0)
        x, y = coords(spec)
        out = diffusion(ScalarField(spec, x * x + y * y), 1.0)
        np.testing.assert_allclose(out.values[1:-1, 1:-1], 4.0, rtol=0, atol=1e-12)

    def test_zero_conductivity(self):
        rng = np.random.default_rng(0)
        spec = GridSpec(6, 6)
        f = ScalarField(spec, rng.normal(size=spec.shape))
        assert np.all(diffusion(f, 0.0).values == 0.0)

    def test_negative_k_rejected(self):
        with pytest.raises(BadRange):
            diffusion(ScalarField.zeros(GridSpec(3, 3)), -0.1)

    def test_discrete_conservation_random_fields(self):
        rng = np.random.default_rng(3)
        spec = GridSpec(16, 16, 0.7)
        for _ in range(20):
            f = ScalarField(spec, rng.normal(scale=10.0, size=spec.shape))
            total = diffusion(f, 0.9).values.sum()
            assert abs(total) <= 1e-9 * spec.n_cells


class TestAdvection:
    def test_zero_wind_flat_terrain(self):
        rng = np.random.default_rng(1)
        spec = GridSpec(6, 6)
        f = ScalarField(spec, rng.normal(size=spec.shape))
        out = advection(f, VectorField.const(spec, 0.0, 0.0), ScalarField.zeros(spec), 0.5)
        assert np.all(out.values == 0.0)

    def test_eastward_ramp_under_eastward_wind(self):
        spec = GridSpec(6, 8, 1.0)
        x, _ = coords(spec)
        out = advection(
            ScalarField(spec, x),
            VectorField.const(spec, 2.5, 0.0),
            ScalarField.zeros(spec),
            0.0,
        )
        np.testing.assert_allclose(out.values[:, 1:-1], 2.5, rtol=0, atol=1e-12)

    def test_northward_ramp_under_northward_wind(self):
        spec = GridSpec(8, 6, 1.0)
        _, y = coords(spec)
        out = advection(
            ScalarField(spec, y),
            VectorField.const(spec, 0.0, 1.5),
            ScalarField.zeros(spec),
            0.0,
        )
        np.testing.assert_allclose(out.values[1:-1, :], 1.5, rtol=0, atol=1e-12)

    def test_constant_field_any_wind(self):
        spec = GridSpec(5, 5)
        out = advection(
            ScalarField.const(spec, 9.0),
            VectorField.const(spec, -3.0, 2.0),
            ScalarField.zeros(spec),
            0.0,
        )
        assert np.all(out.values == 0.0)

    def test_terrain_slope_contributes(self):
        # flat wind, northward-rising terrain: effective velocity gamma*slope north
        spec = GridSpec(8, 6, 1.0)
        _, y = coords(spec)
        terrain = ScalarField(spec, 0.5 * y)
        out = advection(ScalarField(spec, y), VectorField.const(spec, 0.0, 0.0), terrain, 2.0)
        np.testing.assert_allclose(out.values[1:-1, :], 2.0 * 0.5, rtol=0, atol=1e-12)

    def test_spec_mismatch(self):
        with pytest.raises(SpecMismatch):
            advection(
                ScalarField.zeros(GridSpec(3, 3)),
                VectorField.const(GridSpec(3, 4), 1.0, 0.0),
                ScalarField.zeros(GridSpec(3, 3)),
                0.0,
            )

    def test_upwind_monotone_profile_creates_no_new_extrema(self):
        # advect a monotone step profile; explicit upwind must stay within
        # the initial bounds (max principle on the interior)
        spec = GridSpec(5, 40, 1.0)
        x, _ = coords(spec)
        vals = np.tanh((x - 20.0) / 3.0)
        f = vals.copy()
        u = np.full(spec.shape, 0.8)
        v = np.zeros(spec.shape)
        dt = 0.5  # CFL: u*dt/dx = 0.4
        for _ in range(30):
            f = f - dt * upwind_dot_grad(ScalarField(spec, f), u, v)
        assert f.max() <= vals.max() + 1e-9
        assert f.min() >= vals.min() - 1e-9
        # still monotone along the flow direction
        assert np.all(np.diff(f[2, :]) >= -1e-9)


class TestReactionRate:
    def test_ambient_gives_zero(self):
        p = PhysicalParams(t_ambient=300.0, t_burn=900.0)
        out = reaction_rate(ScalarField.const(GridSpec(4, 4), 300.0), p)
        assert np.all(out.values == 0.0)

    def test_limit_toward_one(self):
        p = PhysicalParams(t_ambient=0.0, t_burn=1.0, b_arrhenius=0.3)
        t = 1e6 * p.b_arrhenius
        out = reaction_rate(ScalarField.const(GridSpec(3, 3), t), p)
        assert out.values[0, 0] > 0.999999

    def test_monotone_spot_check(self):
        p = PhysicalParams(t_ambient=10.0, t_burn=20.0, b_arrhenius=2.0)
        spec = GridSpec(3, 3)
        r1 = reaction_rate(ScalarField.const(spec, 10.0 + 2.0), p).values[0, 0]
        r2 = reaction_rate(ScalarField.const(spec, 10.0 + 4.0), p).values[0, 0]
        assert r1 < r2

    def test_codomain_and_monotonicity_random(self):
        rng = np.random.default_rng(5)
        p = PhysicalParams(t_ambient=0.0, t_burn=1.0)
        spec = GridSpec(8, 8)
        for _ in range(20):
            t = rng.uniform(-1.0, 5.0, size=spec.shape)
            r = reaction_rate(ScalarField(spec, t), p).values
            assert np.all(r >= 0.0) and np.all(r < 1.0)
            hotter = reaction_rate(ScalarField(spec, t + rng.uniform(0, 2)), p).values
            assert np.all(hotter >= r)


class TestSourceTerm:
    def test_ambient_and_no_fuel_terms_vanish(self):
        p = PhysicalParams(t_ambient=300.0, t_burn=900.0, a_coeff=2.0, c_cool=1.0)
        spec = GridSpec(4, 4)
        out = source_term(ScalarField.const(spec, 300.0), ScalarField.const(spec, 5.0), p)
        assert np.all(out.values == 0.0)

    def test_pure_cooling(self):
        p = PhysicalParams(t_ambient=300.0, t_burn=900.0, c_cool=2.0)
        spec = GridSpec(4, 4)
        out = source_term(ScalarField.const(spec, 301.0), ScalarField.zeros(spec), p)
        np.testing.assert_allclose(out.values, -2.0, rtol=0, atol=0)

    def test_all_coefficients_zero(self):
        p = PhysicalParams(t_ambient=0.0, t_burn=1.0, a_coeff=0.0, c_cool=0.0)
        spec = GridSpec(4, 4)
        rng = np.random.default_rng(2)
        out = source_term(
            ScalarField(spec, rng.uniform(0, 2, spec.shape)),
            ScalarField(spec, rng.uniform(0, 1, spec.shape)),
            p,
        )
        assert np.all(out.values == 0.0)

    def test_negative_fuel_rejected(self):
        p = PhysicalParams()
        spec = GridSpec(3, 3)
        with pytest.raises(NegativeFuel):
            source_term(ScalarField.zeros(spec), ScalarField.const(spec, -0.1), p)

    def test_linear_in_fuel(self):
        rng = np.random.default_rng(9)
        p = PhysicalParams(t_ambient=0.0, t_burn=1.0, a_coeff=1.3, c_cool=0.7)
        spec = GridSpec(6, 6)
        t = ScalarField(spec, rng.uniform(0, 2, spec.shape))
        fuel = ScalarField(spec, rng.uniform(0, 1, spec.shape))
        zero = ScalarField.zeros(spec)
        alpha = 2.75
        scaled = ScalarField(spec, alpha * fuel.values)
        lhs = source_term(t, scaled, p).values - source_term(t, zero, p).values
        rhs = alpha * (source_term(t, fuel, p).values - source_term(t, zero, p).values)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)
