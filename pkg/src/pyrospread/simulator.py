"""Explicit time integration and the two-stage prior-mask pipeline.

Stage 1 lifts observed binary masks to temperature-like fields, inverts
the thermal balance equation for the net source at the last frame that
has both neighbors, and fits simplex weights so a convex combination of
the lifted history approximates that source. Stage 2 integrates forward
from the final observed frame with the fitted combination held frozen and
gated by the burning indicator (source active only where T > ambient),
thresholding each frame into a prior mask.

Forward Euler with a hard CFL guard: dt <= dx^2*c/(4k) for diffusion and
dt <= dx*c/max(|u_eff| + |v_eff|) for upwind advection. Violations raise
CflViolation instead of producing garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadRange,
    CflViolation,
    NegativeFuel,
    NonFinite,
    SpecMismatch,
    TooFewFrames,
    UnknownKind,
)
from .fields import (
    GridSpec,
    MaskFrame,
    MaskSequence,
    ScalarField,
    VectorField,
    field_from_mask,
    mask_from_field,
)
from .pde import (
    PhysicalParams,
    diffusion,
    effective_velocity,
    reaction_rate,
    source_term,
    upwind_dot_grad,
)
from .source_fit import FitReport, estimate_observed_source, fit_source_weights


class Environment:
    """Terrain, per-frame wind, and initial fuel on one shared grid."""

    __slots__ = ("terrain", "wind", "fuel0")

    def __init__(self, terrain: ScalarField, wind: list[VectorField], fuel0: ScalarField):
        wind = list(wind)
        if not wind:
            raise BadRange("environment needs at least one wind frame")
        for i, w in enumerate(wind):
            if w.spec != terrain.spec:
                raise SpecMismatch(f"wind frame {i} grid differs from terrain")
        if fuel0.spec != terrain.spec:
            raise SpecMismatch("fuel grid differs from terrain")
        if np.any(fuel0.values < 0):
            raise NegativeFuel("initial fuel must be >= 0 everywhere")
        self.terrain = terrain
        self.wind = wind
        self.fuel0 = fuel0

    @property
    def spec(self) -> GridSpec:
        return self.terrain.spec

    def wind_at(self, frame: int) -> VectorField:
        """Wind for a frame index, held at the last observed frame beyond."""
        return self.wind[min(max(frame, 0), len(self.wind) - 1)]


def cfl_bounds(params: PhysicalParams, env: Environment) -> tuple[float, float]:
    """(diffusion bound, advection bound) on dt; inf when inactive."""
    dx = env.spec.dx
    diff_bound = math.inf if params.k == 0 else dx * dx * params.c / (4.0 * params.k)
    vmax = 0.0
    for w in env.wind:
        u_eff, v_eff = effective_velocity(w, env.terrain, params.gamma)
        vmax = max(vmax, float(np.max(np.abs(u_eff) + np.abs(v_eff))))
    adv_bound = math.inf if vmax == 0 else dx * params.c / vmax
    return diff_bound, adv_bound


@dataclass(frozen=True)
class SimConfig:
    """Integration controls for one run."""

    dt: float
    steps_per_frame: int = 10
    horizon_frames: int = 17
    threshold_theta: float = 0.5
    fuel_depletion: bool = False
    beta_fuel: float = 0.0134
    smooth_radius: float = 1.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise BadRange(f"dt must be > 0, got {self.dt}")
        if self.steps_per_frame < 1:
            raise BadRange("steps_per_frame must be >= 1")
        if self.horizon_frames < 1:
            raise BadRange("horizon_frames must be >= 1")
        if not 0 < self.threshold_theta < 1:
            raise BadRange("threshold_theta must be in (0, 1)")
        if self.beta_fuel < 0:
            raise BadRange("beta_fuel must be >= 0")
        if self.smooth_radius < 0:
            raise BadRange("smooth_radius must be >= 0")

    @classmethod
    def checked(cls, params: PhysicalParams, env: Environment, **kwargs) -> "SimConfig":
        """Construct and verify the CFL condition against params and env."""
        cfg = cls(**kwargs)
        diff_bound, adv_bound = cfl_bounds(params, env)
        if cfg.dt > diff_bound or cfg.dt > adv_bound:
            raise CflViolation(
                f"dt={cfg.dt} exceeds stability bounds "
                f"(diffusion {diff_bound:.6g}, advection {adv_bound:.6g})"
            )
        return cfg

    @property
    def dt_frame(self) -> float:
        return self.dt * self.steps_per_frame

    def mask_threshold(self, params: PhysicalParams) -> float:
        return params.t_ambient + self.threshold_theta * (params.t_burn - params.t_ambient)


@dataclass(frozen=True)
class SimState:
    """Temperature, remaining fuel, and elapsed time of one run."""

    temp: ScalarField
    fuel: ScalarField
    time: float = 0.0

    def __post_init__(self):
        if self.temp.spec != self.fuel.spec:
            raise SpecMismatch("temperature and fuel grids differ")
        if np.any(self.fuel.values < 0):
            raise NegativeFuel("fuel must be >= 0 everywhere")


def physical_source(params: PhysicalParams):
    """Source callable evaluating the net combustion term of the PDE."""

    def src(temp: ScalarField, fuel: ScalarField) -> ScalarField:
        return source_term(temp, fuel, params)

    return src


def gated_source(injection: ScalarField, t_ambient: float):
    """Fixed injection field active only on burning cells (T > ambient)."""

    def src(temp: ScalarField, fuel: ScalarField) -> ScalarField:
        return ScalarField(temp.spec, injection.values * (temp.values > t_ambient))

    return src


def step(
    state: SimState,
    env: Environment,
    params: PhysicalParams,
    src,
    dt: float,
    *,
    wind_frame: int | None = None,
    fuel_depletion: bool = False,
    beta_fuel: float = 0.0,
) -> SimState:
    """One forward-Euler step of the thermal balance equation.

    T' = T + (dt/c) * [diffusion - advection + src(T, F)]; fuel decays as
    F' = F * (1 - dt * beta * r(T)) clamped at zero when depletion is on.
    Raises CflViolation when dt exceeds a stability bound for the current
    wind frame and NonFinite (with the first offending cell) on blow-up.
    """
    if state.temp.spec != env.spec:
        raise SpecMismatch("state grid differs from environment")
    wind = env.wind_at(len(env.wind) - 1 if wind_frame is None else wind_frame)
    u_eff, v_eff = effective_velocity(wind, env.terrain, params.gamma)

    dx = env.spec.dx
    diff_bound = math.inf if params.k == 0 else dx * dx * params.c / (4.0 * params.k)
    vmax = float(np.max(np.abs(u_eff) + np.abs(v_eff)))
    adv_bound = math.inf if vmax == 0 else dx * params.c / vmax
    if dt > diff_bound or dt > adv_bound:
        raise CflViolation(
            f"dt={dt} exceeds stability bounds "
            f"(diffusion {diff_bound:.6g}, advection {adv_bound:.6g})"
        )

    temp = state.temp
    # a diverging run may overflow mid-expression; the explicit finiteness
    # check below turns that into a typed error instead of warnings
    with np.errstate(over="ignore", invalid="ignore"):
        rhs = (
            diffusion(temp, params.k).values
            - upwind_dot_grad(temp, u_eff, v_eff)
            + src(temp, state.fuel).values
        )
        new_temp = temp.values + (dt / params.c) * rhs
    if not np.all(np.isfinite(new_temp)):
        bad = np.argwhere(~np.isfinite(new_temp))[0]
        raise NonFinite(
            f"temperature blow-up at cell ({bad[0]}, {bad[1]}) at t={state.time + dt:.6g} s"
        )
    if fuel_depletion:
        burn = reaction_rate(temp, params).values
        new_fuel = np.maximum(state.fuel.values * (1.0 - dt * beta_fuel * burn), 0.0)
    else:
        new_fuel = state.fuel.values
    return SimState(
        ScalarField(env.spec, new_temp), ScalarField(env.spec, new_fuel), state.time + dt
    )


def run_simulation(
    initial: SimState,
    env: Environment,
    params: PhysicalParams,
    cfg: SimConfig,
    n_frames: int,
    src,
    record_fields: bool = False,
) -> tuple[MaskSequence, list[ScalarField]]:
    """Advance a state n_frames snapshots (the initial state is frame 0).

    The wind frame advances with the snapshot index and holds at the last
    available frame. Returns the thresholded mask per snapshot and, when
    requested, the temperature field per snapshot.
    """
    if n_frames < 1:
        raise BadRange("n_frames must be >= 1")
    thr = cfg.mask_threshold(params)
    state = initial
    masks = [mask_from_field(state.temp, thr)]
    temps = [state.temp] if record_fields else []
    for frame in range(1, n_frames):
        for _ in range(cfg.steps_per_frame):
            state = step(
                state,
                env,
                params,
                src,
                cfg.dt,
                wind_frame=frame - 1,
                fuel_depletion=cfg.fuel_depletion,
                beta_fuel=cfg.beta_fuel,
            )
        masks.append(mask_from_field(state.temp, thr))
        if record_fields:
            temps.append(state.temp)
    return MaskSequence(masks, cfg.dt_frame), temps


def fitted_injection(
    observed: MaskSequence,
    env: Environment,
    params: PhysicalParams,
    cfg: SimConfig,
    fit_tol: float = 1e-8,
    fit_max_iters: int = 10_000,
) -> tuple[ScalarField, FitReport, list[ScalarField]]:
    """Stage 1: lift the observed masks and fit the combination source."""
    n = len(observed)
    if n < 3:
        raise TooFewFrames(f"prior generation needs >= 3 observed frames, got {n}")
    if env.spec != observed.spec:
        raise SpecMismatch("environment grid differs from observed masks")
    lifted = [
        field_from_mask(f, params.t_ambient, params.t_burn, cfg.smooth_radius)
        for f in observed.frames
    ]
    s_obs = estimate_observed_source(
        lifted, env.wind_at(n - 2), env.terrain, params, observed.dt_frame, frame=n - 2
    )
    fit = fit_source_weights(lifted, s_obs, tol=fit_tol, max_iters=fit_max_iters)
    combo = np.zeros(env.spec.shape)
    for w, field in zip(fit.weights.w, lifted):
        combo += w * field.values
    return ScalarField(env.spec, combo), fit, lifted


def run_prior(
    observed: MaskSequence,
    env: Environment,
    params: PhysicalParams,
    cfg: SimConfig,
    fit_tol: float = 1e-8,
    fit_max_iters: int = 10_000,
) -> tuple[MaskSequence, FitReport]:
    """Full two-stage pipeline: observed masks -> prior mask sequence.

    Emits exactly cfg.horizon_frames masks spaced observed.dt_frame apart.
    A non-converged fit is reported through FitReport.converged, not
    raised; the rollout proceeds with the best weights found.
    """
    if abs(cfg.dt * cfg.steps_per_frame - observed.dt_frame) > 1e-6:
        raise BadRange(
            f"dt*steps_per_frame = {cfg.dt * cfg.steps_per_frame} must equal "
            f"dt_frame = {observed.dt_frame} within 1e-6 s"
        )
    diff_bound, adv_bound = cfl_bounds(params, env)
    if cfg.dt > diff_bound or cfg.dt > adv_bound:
        raise CflViolation(
            f"dt={cfg.dt} exceeds stability bounds "
            f"(diffusion {diff_bound:.6g}, advection {adv_bound:.6g})"
        )
    injection, fit, lifted = fitted_injection(
        observed, env, params, cfg, fit_tol=fit_tol, fit_max_iters=fit_max_iters
    )
    src = gated_source(injection, params.t_ambient)
    state = SimState(lifted[-1], env.fuel0, 0.0)
    thr = cfg.mask_threshold(params)
    last_wind = len(env.wind) - 1
    frames = []
    for _ in range(cfg.horizon_frames):
        for _ in range(cfg.steps_per_frame):
            state = step(
                state,
                env,
                params,
                src,
                cfg.dt,
                wind_frame=last_wind,
                fuel_depletion=cfg.fuel_depletion,
                beta_fuel=cfg.beta_fuel,
            )
        frames.append(mask_from_field(state.temp, thr))
    return MaskSequence(frames, observed.dt_frame), fit


SCENARIO_KINDS = ("circular", "wind_driven", "slope_driven")


@dataclass(frozen=True)
class Scenario:
    """Synthetic episode: observed window plus ground-truth continuation."""

    kind: str
    seed: int
    observed: MaskSequence
    future: MaskSequence
    env: Environment
    params: PhysicalParams
    config: SimConfig
    temps_observed: list[ScalarField]
    source_field: ScalarField

    @property
    def spec(self) -> GridSpec:
        return self.observed.spec


def _disk_mask(spec: GridSpec, center_row: float, center_col: float, radius: float) -> MaskFrame:
    rows = np.arange(spec.height)[:, None]
    cols = np.arange(spec.width)[None, :]
    inside = (rows - center_row) ** 2 + (cols - center_col) ** 2 <= radius**2
    return MaskFrame(spec, inside.astype(np.uint8))


def synth_scenario(
    kind: str,
    spec: GridSpec,
    seed: int,
    n_observed: int = 17,
    n_future: int = 17,
    dt_frame: float = 5.0,
    steps_per_frame: int = 10,
) -> Scenario:
    """Deterministic synthetic scenario with attached continuation frames.

    The ground truth is integrated with a known fixed injection source
    (the lifted ignition region, active on burning cells), so the episode
    lies in the class of dynamics the fit-then-solve pipeline represents.
    circular: zero wind, flat terrain, centered ignition. wind_driven:
    constant eastward wind, westward ignition. slope_driven: northward
    inclined plane, zero wind, southern ignition.
    """
    if kind not in SCENARIO_KINDS:
        raise UnknownKind(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    rng = np.random.default_rng(seed)
    h, w = spec.height, spec.width

    gamma = 0.4 if kind == "slope_driven" else 0.0
    params = PhysicalParams(
        c=1.0,
        k=0.25,
        gamma=gamma,
        a_coeff=1.0,
        c_cool=0.82,
        b_arrhenius=0.2,
        t_ambient=0.0,
        t_burn=1.0,
    )
    cfg = SimConfig(
        dt=dt_frame / steps_per_frame,
        steps_per_frame=steps_per_frame,
        horizon_frames=n_future,
        threshold_theta=0.5,
        fuel_depletion=False,
        smooth_radius=1.0,
    )

    zeros = np.zeros(spec.shape)
    if kind == "circular":
        terrain = ScalarField(spec, zeros)
        wind_u, wind_v = 0.0, 0.0
        radius = float(rng.uniform(2.6, 3.4))
        center = ((h - 1) / 2.0, (w - 1) / 2.0)
    elif kind == "wind_driven":
        terrain = ScalarField(spec, zeros)
        wind_u = float(rng.uniform(0.22, 0.34))
        wind_v = float(rng.uniform(-0.04, 0.04))
        radius = float(rng.uniform(2.4, 3.2))
        center = (
            (h - 1) / 2.0 + int(rng.integers(-6, 7)),
            w * 0.3 + int(rng.integers(-4, 5)),
        )
    else:  # slope_driven: z rises northward, fire accelerates upslope
        slope = float(rng.uniform(0.4, 0.6))
        rows = np.arange(h, dtype=np.float64)[:, None]
        z = slope * (h - 1 - rows) * spec.dx * np.ones((1, w))
        terrain = ScalarField(spec, z)
        wind_u, wind_v = 0.0, 0.0
        radius = float(rng.uniform(2.4, 3.2))
        center = (
            h * 0.7 + int(rng.integers(-4, 5)),
            (w - 1) / 2.0 + int(rng.integers(-4, 5)),
        )

    wind = [VectorField.const(spec, wind_u, wind_v) for _ in range(n_observed)]
    fuel0 = ScalarField(spec, np.ones(spec.shape))
    env = Environment(terrain, wind, fuel0)

    ignition = _disk_mask(spec, center[0], center[1], radius)
    lift = field_from_mask(ignition, params.t_ambient, params.t_burn, cfg.smooth_radius)
    src = gated_source(lift, params.t_ambient)

    initial = SimState(lift, fuel0, 0.0)
    total = n_observed + n_future
    all_masks, all_temps = run_simulation(
        initial, env, params, cfg, total, src, record_fields=True
    )
    observed = MaskSequence(all_masks.frames[:n_observed], dt_frame)
    future = MaskSequence(all_masks.frames[n_observed:], dt_frame)
    return Scenario(
        kind=kind,
        seed=seed,
        observed=observed,
        future=future,
        env=env,
        params=params,
        config=cfg,
        temps_observed=all_temps[:n_observed],
        source_field=lift,
    )
