"""Finite-difference operators and the combustion source term.

The thermal field evolves under

    c dT/dt = div(k grad T) - (wind + gamma*grad z) . grad T + S(T)
    S(T) = a_coeff * fuel * r(T) - c_cool * (T - t_ambient)

discretized on a uniform grid: 5-point Laplacian with zero-flux ghost
cells, first-order upwind advection against the local effective velocity,
and an Arrhenius-type burning rate r(T) = exp(-b / (T - t_ambient)) for
T above ambient. x points east (increasing column), y points north
(decreasing row).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadRange, NegativeFuel, SpecMismatch
from .fields import ScalarField, VectorField


@dataclass(frozen=True)
class PhysicalParams:
    """Coefficients of the thermal balance equation.

    c: heat capacity (> 0); k: thermal conductivity (>= 0); gamma: terrain
    coefficient (>= 0); a_coeff: reaction coefficient (>= 0); c_cool:
    cooling coefficient (>= 0); b_arrhenius: activation constant (> 0) of
    the burning-rate curve; t_ambient / t_burn: reference temperatures.
    """

    c: float = 1.0
    k: float = 0.25
    gamma: float = 0.0
    a_coeff: float = 1.0
    c_cool: float = 0.8
    b_arrhenius: float = 0.2
    t_ambient: float = 0.0
    t_burn: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise BadRange(f"c must be > 0, got {self.c}")
        for name in ("k", "gamma", "a_coeff", "c_cool"):
            val = getattr(self, name)
            if not (val >= 0 and math.isfinite(val)):
                raise BadRange(f"{name} must be >= 0, got {val}")
        if not (self.b_arrhenius > 0 and math.isfinite(self.b_arrhenius)):
            raise BadRange(f"b_arrhenius must be > 0, got {self.b_arrhenius}")
        if not (self.t_burn > self.t_ambient):
            raise BadRange(
                f"t_burn ({self.t_burn}) must exceed t_ambient ({self.t_ambient})"
            )


def gradient(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """(df/dx, df/dy): central differences inside, one-sided at edges.

    Exact for fields linear in x and y. df/dy is the northward derivative,
    i.e. minus the derivative along the row index.
    """
    a = f.values
    dx = f.spec.dx
    dfdx = np.empty_like(a)
    dfdx[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2 * dx)
    dfdx[:, 0] = (a[:, 1] - a[:, 0]) / dx
    dfdx[:, -1] = (a[:, -1] - a[:, -2]) / dx
    dfdrow = np.empty_like(a)
    dfdrow[1:-1, :] = (a[2:, :] - a[:-2, :]) / (2 * dx)
    dfdrow[0, :] = (a[1, :] - a[0, :]) / dx
    dfdrow[-1, :] = (a[-1, :] - a[-2, :]) / dx
    return ScalarField(f.spec, dfdx), ScalarField(f.spec, -dfdrow)


def diffusion(f: ScalarField, k: float) -> ScalarField:
    """k times the 5-point Laplacian with zero-flux (Neumann) edges.

    Ghost cells replicate the boundary value, so no heat crosses the grid
    edge and the operator sums to zero over the whole grid.
    """
    if k < 0:
        raise BadRange(f"k must be >= 0, got {k}")
    a = f.values
    p = np.pad(a, 1, mode="edge")
    lap = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4 * a
    return ScalarField(f.spec, (k / f.spec.dx**2) * lap)


def effective_velocity(
    wind: VectorField, terrain: ScalarField, gamma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell transport velocity wind + gamma * grad(terrain)."""
    if wind.spec != terrain.spec:
        raise SpecMismatch("wind and terrain grids differ")
    dzdx, dzdy = gradient(terrain)
    return wind.u + gamma * dzdx.values, wind.v + gamma * dzdy.values


def upwind_dot_grad(f: ScalarField, u_eff: np.ndarray, v_eff: np.ndarray) -> np.ndarray:
    """v_eff . grad f with first-order upwind one-sided differences.

    For each component the difference is taken on the side the flow comes
    from; cells with zero effective velocity contribute zero. Boundary
    ghost cells replicate the edge value, so the one-sided difference
    across the grid edge vanishes.
    """
    a = f.values
    dx = f.spec.dx
    p = np.pad(a, 1, mode="edge")
    center = p[1:-1, 1:-1]
    west = p[1:-1, :-2]
    east = p[1:-1, 2:]
    north = p[:-2, 1:-1]
    south = p[2:, 1:-1]
    # wind from the west (u > 0) uses the west-side difference, and so on
    fx = np.where(u_eff > 0, (center - west) / dx, np.where(u_eff < 0, (east - center) / dx, 0.0))
    fy = np.where(v_eff > 0, (center - south) / dx, np.where(v_eff < 0, (north - center) / dx, 0.0))
    return u_eff * fx + v_eff * fy


def advection(
    f: ScalarField, wind: VectorField, terrain: ScalarField, gamma: float
) -> ScalarField:
    """(wind + gamma * grad z) . grad f, upwind-differenced."""
    if f.spec != wind.spec or f.spec != terrain.spec:
        raise SpecMismatch("field, wind and terrain grids differ")
    u_eff, v_eff = effective_velocity(wind, terrain, gamma)
    return ScalarField(f.spec, upwind_dot_grad(f, u_eff, v_eff))


def reaction_rate(f: ScalarField, params: PhysicalParams) -> ScalarField:
    """Burning rate r(T) = exp(-b / (T - t_ambient)) above ambient, else 0.

    Monotone non-decreasing in T, with values in [0, 1).
    """
    excess = f.values - params.t_ambient
    r = np.zeros_like(excess)
    hot = excess > 0
    r[hot] = np.exp(-params.b_arrhenius / excess[hot])
    return ScalarField(f.spec, r)


def source_term(f: ScalarField, fuel: ScalarField, params: PhysicalParams) -> ScalarField:
    """Net combustion heat: a_coeff*fuel*r(T) - c_cool*(T - t_ambient)."""
    if f.spec != fuel.spec:
        raise SpecMismatch("temperature and fuel grids differ")
    if np.any(fuel.values < 0):
        raise NegativeFuel("fuel concentration must be >= 0 everywhere")
    r = reaction_rate(f, params)
    s = params.a_coeff * fuel.values * r.values - params.c_cool * (
        f.values - params.t_ambient
    )
    return ScalarField(f.spec, s)
