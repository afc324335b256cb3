"""Source-term estimation by simplex-constrained least squares.

The net heat source is recovered from a short history of temperature
fields by rearranging the thermal balance equation, then approximated as
a convex combination (non-negative weights summing to one) of those same
historical fields. The fit is projected gradient descent with the exact
sort-and-threshold simplex projection; step size 1/L where L is the
largest eigenvalue of the history Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyVector, NonFinite, SpecMismatch, TooFewFrames
from .fields import ScalarField, VectorField
from .pde import PhysicalParams, advection, diffusion


@dataclass(frozen=True)
class SimplexWeights:
    """Non-negative weights summing to 1, one per historical frame."""

    w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise EmptyVector("weights must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("weights must be finite")
        if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
            raise NonFinite(
                f"weights must be >= 0 and sum to 1 (sum={arr.sum():.12g})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)

    def __len__(self):
        return self.w.size


@dataclass(frozen=True)
class FitReport:
    """Outcome of one projected-gradient fit."""

    weights: SimplexWeights
    residual_norm: float
    iterations: int
    converged: bool
    objective_trace: tuple = field(default=(), repr=False)


def estimate_observed_source(
    history: list[ScalarField],
    wind: VectorField,
    terrain: ScalarField,
    params: PhysicalParams,
    dt: float,
    frame: int | None = None,
) -> ScalarField:
    """Invert the thermal balance equation for the net source at one frame.

    S_obs = c*(T[f+1] - T[f-1])/(2 dt) - diffusion(T[f]) + advection(T[f])
    with a centered time difference; the first and last frames fall back
    to one-sided differences. `frame` defaults to the middle of the
    history.
    """
    n = len(history)
    if n < 3:
        raise TooFewFrames(f"need at least 3 frames, got {n}")
    spec = history[0].spec
    for i, h in enumerate(history):
        if h.spec != spec:
            raise SpecMismatch(f"history frame {i} grid differs from frame 0")
    if wind.spec != spec or terrain.spec != spec:
        raise SpecMismatch("wind/terrain grid differs from history")
    if dt <= 0:
        raise TooFewFrames(f"dt must be > 0, got {dt}")
    if frame is None:
        frame = n // 2
    if not 0 <= frame < n:
        raise TooFewFrames(f"frame index {frame} outside history of length {n}")

    if frame == 0:
        dTdt = (history[1].values - history[0].values) / dt
    elif frame == n - 1:
        dTdt = (history[-1].values - history[-2].values) / dt
    else:
        dTdt = (history[frame + 1].values - history[frame - 1].values) / (2 * dt)
    cur = history[frame]
    s = (
        params.c * dTdt
        - diffusion(cur, params.k).values
        + advection(cur, wind, terrain, params.gamma).values
    )
    return ScalarField(spec, s)


def estimate_observed_source_series(
    history: list[ScalarField],
    wind: VectorField,
    terrain: ScalarField,
    params: PhysicalParams,
    dt: float,
) -> list[ScalarField]:
    """Per-frame source estimates (one-sided differences at the ends)."""
    return [
        estimate_observed_source(history, wind, terrain, params, dt, frame=i)
        for i in range(len(history))
    ]


def project_simplex(v) -> SimplexWeights:
    """Euclidean projection onto the probability simplex.

    Sort descending, find the largest rho with
    u_rho + (1 - sum_{i<=rho} u_i)/rho > 0, subtract that threshold and
    clamp at zero (Held/Wolfe/Crowder construction).
    """
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyVector("cannot project an empty vector")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("cannot project a non-finite vector")
    u = np.sort(arr)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, arr.size + 1)
    cond = u + (1.0 - css) / idx > 0
    rho = int(idx[cond][-1])
    theta = (css[rho - 1] - 1.0) / rho
    w = np.maximum(arr - theta, 0.0)
    return SimplexWeights(w)


def _power_iteration_lmax(g: np.ndarray, steps: int = 50) -> float:
    """Largest eigenvalue of a PSD matrix, deterministic start vector."""
    n = g.shape[0]
    x = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(steps):
        y = g @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
        lam = float(x @ (g @ x))
    return lam


def fit_source_weights(
    history: list[ScalarField],
    s_target: ScalarField,
    tol: float = 1e-8,
    max_iters: int = 10_000,
) -> FitReport:
    """Least-squares fit of a convex combination of history fields.

    Minimizes ||sum_i w_i * history_i - s_target||^2 over the probability
    simplex by projected gradient descent from the uniform point.
    Convergence is declared when the projected step norm drops below tol;
    otherwise the best-so-far weights are returned with converged=False.
    """
    n = len(history)
    if n == 0:
        raise EmptyVector("history must contain at least one field")
    spec = s_target.spec
    for i, h in enumerate(history):
        if h.spec != spec:
            raise SpecMismatch(f"history frame {i} grid differs from target")

    basis = np.stack([h.values.ravel() for h in history])  # (n, cells)
    target = s_target.values.ravel()
    gram = basis @ basis.T
    rhs = basis @ target

    def objective(w):
        r = basis.T @ w - target
        return float(r @ r)

    w = np.full(n, 1.0 / n)
    trace = [objective(w)]
    lmax = _power_iteration_lmax(gram)
    if lmax <= 0:
        # degenerate all-zero history: objective is constant in w
        return FitReport(SimplexWeights(w), float(np.linalg.norm(target)), 0, True, tuple(trace))
    step = 1.0 / lmax

    iterations = 0
    converged = False
    for iterations in range(1, max_iters + 1):
        grad = gram @ w - rhs
        w_new = project_simplex(w - step * grad).w
        move = float(np.linalg.norm(w_new - w))
        w = w_new
        trace.append(objective(w))
        if move <= tol:
            converged = True
            break
    if not np.all(np.isfinite(w)):
        raise NonFinite("weights became non-finite during the fit")
    residual = float(np.linalg.norm(basis.T @ w - target))
    return FitReport(SimplexWeights(w), residual, iterations, converged, tuple(trace))
