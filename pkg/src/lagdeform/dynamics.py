"""Geodesic integration and trajectory-level checks.

Classical fixed-step RK4 on the first-order system x' = y, y' = -2G(x, y).
The along-trajectory Euler-Lagrange residual differentiates the sampled
momenta by central differences on purpose: it is an independent check that
the flow solves the equations, not a restatement of the symbolic identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import expressions as ex
from .deformation import DeformedLagrangian, OutOfInterval
from .geometry import (
    PhasePoint,
    ScalarField,
    SemiSpray,
    energy,
    homogeneity_degree,
    liouville_apply,
    spray_apply,
    vertical_differential,
)


class GeodesicError(Exception):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} at step {step}")
        self.step = step


class TooShort(Exception):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    step: float
    horizon: float
    initial: PhasePoint

    def __post_init__(self):
        if self.step <= 0 or self.horizon <= 0:
            raise ValueError("step and horizon must be positive")
        ratio = self.horizon / self.step
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("horizon must be a positive integer multiple of the step")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.step))


@dataclass
class Trajectory:
    spray: SemiSpray
    params: Optional[dict]
    step: float
    times: np.ndarray
    states: np.ndarray  # rows (x1..xn, y1..yn)
    truncated: bool = False

    @property
    def n(self) -> int:
        return self.spray.n

    def point(self, k: int) -> PhasePoint:
        n = self.n
        return PhasePoint(self.states[k, :n], self.states[k, n:])

    def binding(self, k: int) -> dict:
        return self.point(k).binding(self.params)


def integrate_geodesic(
    spray: SemiSpray,
    cfg: IntegratorConfig,
    params: Optional[dict] = None,
    box: Optional[dict] = None,
) -> Trajectory:
    """RK4 trajectory of the spray. A trajectory leaving the declared chart
    box is truncated with a warning (conclusions hold on the chart only);
    domain violations and non-finite states raise :class:`GeodesicError`."""
    n = spray.n
    if cfg.initial.n != n:
        raise GeodesicError("initial point dimension mismatch")
    h = cfg.step
    steps = cfg.steps
    names = ex.chart_names(n)

    def rhs(state):
        binding = dict(params) if params else {}
        for i in range(n):
            binding[f"x{i + 1}"] = state[i]
            binding[f"y{i + 1}"] = state[n + i]
        out = np.empty(2 * n)
        out[:n] = state[n:]
        for i, g in enumerate(spray.coefficients):
            out[n + i] = -2.0 * ex.evaluate(g, binding)
        return out

    def inside(state):
        if box is None:
            return True
        return all(
            box[v][0] <= state[k] <= box[v][1] for k, v in enumerate(names)
        )

    state = np.concatenate([cfg.initial.x, cfg.initial.y]).astype(float)
    states = [state.copy()]
    times = [0.0]
    truncated = False
    for k in range(steps):
        try:
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * h * k1)
            k3 = rhs(state + 0.5 * h * k2)
            k4 = rhs(state + h * k3)
        except ex.DomainViolation as exc:
            raise GeodesicError(f"domain violation: {exc}", step=k) from exc
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > 1e100:
            raise GeodesicError("non-finite state (blow-up)", step=k)
        if not inside(state):
            truncated = True
            warnings.warn(
                f"trajectory left the chart box at t = {(k + 1) * h:g}; truncating",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        states.append(state.copy())
        times.append((k + 1) * h)
    return Trajectory(
        spray=spray,
        params=dict(params) if params else None,
        step=h,
        times=np.asarray(times),
        states=np.asarray(states),
        truncated=truncated,
    )


Lagrangianlike = Union[ScalarField, DeformedLagrangian]


def _momentum_and_force_values(traj: Trajectory, lag: Lagrangianlike):
    """Per-state values of dLag/dy_i and dLag/dx_i."""
    n = traj.n
    count = len(traj.times)
    momenta = np.empty((count, n))
    forces = np.empty((count, n))
    if isinstance(lag, DeformedLagrangian):
        composed = lag.composed()
        if composed is not None:
            return _momentum_and_force_values(traj, composed)
        base = lag.base
        vert = vertical_differential(base)
        base_x = [ex.partial(base.expr, f"x{i}") for i in range(1, n + 1)]
        for k in range(count):
            b = traj.binding(k)
            d1, _ = lag.gradient_pair(b)
            for i in range(n):
                momenta[k, i] = d1 * ex.evaluate(vert.components[i], b)
                forces[k, i] = d1 * ex.evaluate(base_x[i], b)
        return momenta, forces
    vert = vertical_differential(lag)
    lag_x = [ex.partial(lag.expr, f"x{i}") for i in range(1, n + 1)]
    for k in range(count):
        b = traj.binding(k)
        for i in range(n):
            momenta[k, i] = ex.evaluate(vert.components[i], b)
            forces[k, i] = ex.evaluate(lag_x[i], b)
    return momenta, forces


def el_residual_along(traj: Trajectory, lag: Lagrangianlike) -> float:
    """max over components and interior times of
    | d/dt(dLag/dy_i) - dLag/dx_i |, with d/dt by central differences."""
    if len(traj.times) - 1 < 3:
        raise TooShort("need at least 3 steps for interior central differences")
    momenta, forces = _momentum_and_force_values(traj, lag)
    h = traj.step
    dpdt = (momenta[2:] - momenta[:-2]) / (2.0 * h)
    residual = np.abs(dpdt - forces[1:-1])
    return float(np.max(residual))


def energy_along(traj: Trajectory, lag: Lagrangianlike):
    """Series E(t_k) = C(Lag) - Lag and the drift max |E(t_k) - E(t_0)|."""
    count = len(traj.times)
    series = np.empty(count)
    if isinstance(lag, DeformedLagrangian):
        base_c = liouville_apply(lag.base)
        for k in range(count):
            b = traj.binding(k)
            d1, _ = lag.gradient_pair(b)
            series[k] = d1 * ex.evaluate(base_c.expr, b) - lag.value(b)
    else:
        e_field = energy(lag)
        for k in range(count):
            series[k] = ex.evaluate(e_field.expr, traj.binding(k))
    drift = float(np.max(np.abs(series - series[0])))
    return series, drift


@dataclass
class DissipationTrace:
    energy_rate: np.ndarray  # S(E_L) along the flow
    dissipation_rate: np.ndarray  # C(D)
    twice_dissipation: np.ndarray  # 2 D
    rate_matches: bool  # S(E_L) = C(D)
    rayleigh: bool  # D fiber-quadratic
    rayleigh_matches: Optional[bool]  # S(E_L) = 2D, when quadratic
    always_negative: bool  # D < 0 wherever y != 0


def dissipation_along(
    traj: Trajectory,
    lagrangian: ScalarField,
    dissipation: ScalarField,
    tol: float = 1e-9,
) -> DissipationTrace:
    rate_field = spray_apply(traj.spray, energy(lagrangian))
    c_of_d = liouville_apply(dissipation)
    count = len(traj.times)
    sel = np.empty(count)
    cd = np.empty(count)
    twice = np.empty(count)
    for k in range(count):
        b = traj.binding(k)
        sel[k] = ex.evaluate(rate_field.expr, b)
        cd[k] = ex.evaluate(c_of_d.expr, b)
        twice[k] = 2.0 * ex.evaluate(dissipation.expr, b)
    rate_matches = bool(np.max(np.abs(sel - cd) / (1.0 + np.abs(cd))) <= tol)
    points = [traj.point(k) for k in range(0, count, max(1, count // 32))]
    deg = homogeneity_degree(dissipation, points, traj.params)
    rayleigh = deg is not None and abs(deg - 2.0) <= 1e-9
    rayleigh_matches = None
    if rayleigh:
        rayleigh_matches = bool(
            np.max(np.abs(sel - twice) / (1.0 + np.abs(twice))) <= tol
        )
    nonzero_y = [
        k for k in range(count) if any(v != 0.0 for v in traj.point(k).y)
    ]
    always_negative = bool(all(twice[k] < 0.0 for k in nonzero_y))
    return DissipationTrace(
        energy_rate=sel,
        dissipation_rate=cd,
        twice_dissipation=twice,
        rate_matches=rate_matches,
        rayleigh=rayleigh,
        rayleigh_matches=rayleigh_matches,
        always_negative=always_negative,
    )


def trajectory_to_csv(
    traj: Trajectory,
    lagrangian: ScalarField,
    deformed: Optional[DeformedLagrangian] = None,
) -> str:
    """CSV text with columns t, x1..xn, y1..yn, E_L, E_PhiL (nan when no
    deformation applies)."""
    n = traj.n
    header = (
        ["t"]
        + [f"x{i}" for i in range(1, n + 1)]
        + [f"y{i}" for i in range(1, n + 1)]
        + ["E_L", "E_PhiL"]
    )
    e_series, _ = energy_along(traj, lagrangian)
    if deformed is not None:
        phi_series, _ = energy_along(traj, deformed)
    else:
        phi_series = np.full(len(traj.times), math.nan)
    lines = [",".join(header)]
    for k, t in enumerate(traj.times):
        row = [repr(float(t))]
        row += [repr(float(v)) for v in traj.states[k]]
        row.append(repr(float(e_series[k])))
        row.append(repr(float(phi_series[k])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
