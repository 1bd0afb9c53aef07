"""Synthesis and verification of scalar deformations Phi.

Each slope family integrates in closed form (Phi' = exp(int f), Phi = int
Phi'); the tabulated fallback integrates the sampled slope cloud with the
trapezoid rule and interpolates monotonically. Deformed Lagrangians compose
symbolically for closed forms, so the verification residuals rest on exact
derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import expressions as ex
from .conditions import ConditionReport, DerivedFields, HessianReport, InsufficientSamples, hessian_report
from .families import (
    Affine,
    Constant,
    HomogeneousRoot,
    Logarithmic,
    Moebius,
    PowerShift,
    Tabulated,
)
from .geometry import (
    PhasePoint,
    ScalarField,
    SemiSpray,
    fiber_hessian,
    lagrange_differential,
    vertical_differential,
)
from .sampling import Guards, SamplePlan, draw_samples


class DomainConflict(Exception):
    pass


class OutOfInterval(ValueError):
    def __init__(self, t: float, interval):
        super().__init__(f"t = {t:g} outside ({interval[0]:g}, {interval[1]:g})")
        self.t = t
        self.interval = interval


@dataclass(frozen=True)
class ClosedForm:
    """Canonical closed-form deformation: Phi = scale * base(t) + shift with
    base fixed by the family. ``interval`` is the maximal open interval on
    which the strictly increasing branch lives."""

    family: object
    interval: tuple
    scale: float = 1.0
    shift: float = 0.0
    numerator: tuple = (1.0, 0.0)  # Moebius only: Phi0 = (alpha t + beta)/(c t + d)

    def triple(self, t: float) -> tuple:
        lo, hi = self.interval
        if not (lo < t < hi):
            raise OutOfInterval(t, self.interval)
        v, d1, d2 = _base_triple(self.family, t, self.numerator)
        return (self.scale * v + self.shift, self.scale * d1, self.scale * d2)

    def compose(self, base_expr: ex.Expr) -> ex.Expr:
        body = _base_compose(self.family, base_expr, self.numerator)
        return ex.add(ex.mul(ex.Const(self.scale), body), ex.Const(self.shift))

    def describe(self) -> str:
        return (
            f"ClosedForm({self.family.describe()}, scale={self.scale:g}, "
            f"shift={self.shift:g})"
        )


@dataclass(frozen=True)
class Numeric:
    """Grid deformation: Phi' = exp(int f) > 0 by construction, interpolated
    with monotone cubic Hermite polynomials; Phi'' differentiates the
    Phi'-interpolant rather than double-differencing Phi."""

    grid: tuple
    values: tuple
    derivatives: tuple
    _phi: PchipInterpolator = field(repr=False, compare=False)
    _dphi: PchipInterpolator = field(repr=False, compare=False)
    _ddphi: object = field(repr=False, compare=False)

    @property
    def interval(self) -> tuple:
        return (self.grid[0], self.grid[-1])

    def triple(self, t: float) -> tuple:
        lo, hi = self.grid[0], self.grid[-1]
        pad = 1e-12 * (hi - lo)
        if not (lo - pad <= t <= hi + pad):
            raise OutOfInterval(t, (lo, hi))
        t = min(max(t, lo), hi)
        return (float(self._phi(t)), float(self._dphi(t)), float(self._ddphi(t)))

    def describe(self) -> str:
        return (
            f"Numeric(grid={len(self.grid)}, range=[{self.grid[0]:g}, "
            f"{self.grid[-1]:g}])"
        )


Deformation = Union[ClosedForm, Numeric]


def _base_triple(family, t, numerator):
    if isinstance(family, Affine):
        return (t, 1.0, 0.0)
    if isinstance(family, Constant):
        g = family.gamma
        e = math.exp(g * t)
        return (e / g, e, g * e)
    if isinstance(family, PowerShift):
        g, a = family.gamma, family.a
        u = t + a
        return (
            math.pow(u, 1.0 + g) / (1.0 + g),
            math.pow(u, g),
            g * math.pow(u, g - 1.0),
        )
    if isinstance(family, Logarithmic):
        u = t + family.a
        return (math.log(u), 1.0 / u, -1.0 / (u * u))
    if isinstance(family, HomogeneousRoot):
        q = 1.0 / family.p
        return (
            math.pow(t, q),
            q * math.pow(t, q - 1.0),
            q * (q - 1.0) * math.pow(t, q - 2.0),
        )
    if isinstance(family, Moebius):
        alpha, beta = numerator
        c, d = family.c, family.d
        den = c * t + d
        det = alpha * d - beta * c
        return (
            (alpha * t + beta) / den,
            det / (den * den),
            -2.0 * c * det / (den * den * den),
        )
    raise TypeError(f"no closed form for {family!r}")


def _base_compose(family, L: ex.Expr, numerator) -> ex.Expr:
    if isinstance(family, Affine):
        return L
    if isinstance(family, Constant):
        g = family.gamma
        return ex.mul(ex.Const(1.0 / g), ex.exp(ex.mul(ex.Const(g), L)))
    if isinstance(family, PowerShift):
        g, a = family.gamma, family.a
        return ex.mul(
            ex.Const(1.0 / (1.0 + g)), ex.pow_(ex.add(L, ex.Const(a)), 1.0 + g)
        )
    if isinstance(family, Logarithmic):
        return ex.ln(ex.add(L, ex.Const(family.a)))
    if isinstance(family, HomogeneousRoot):
        return ex.pow_(L, 1.0 / family.p)
    if isinstance(family, Moebius):
        alpha, beta = numerator
        return ex.div(
            ex.add(ex.mul(ex.Const(alpha), L), ex.Const(beta)),
            ex.add(ex.mul(ex.Const(family.c), L), ex.Const(family.d)),
        )
    raise TypeError(f"no closed form for {family!r}")


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def synthesize(family, data_interval: tuple) -> Deformation:
    """Build the canonical strictly increasing deformation for a family, valid
    on the maximal domain interval containing ``data_interval``. Free affine
    constants never change the verification outcome, so they are pinned to
    scale 1, shift 0."""
    lo, hi = float(data_interval[0]), float(data_interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError("data interval must be finite with lo <= hi")

    if isinstance(family, Tabulated):
        return synthesize_numeric(family.points)
    if isinstance(family, (Affine, Constant)):
        return ClosedForm(family, (-math.inf, math.inf))
    if isinstance(family, (PowerShift, Logarithmic)):
        if lo + family.a <= 0.0:
            raise DomainConflict(
                f"L + a must stay positive: interval [{lo:g}, {hi:g}], a = {family.a:g}"
            )
        return ClosedForm(family, (-family.a, math.inf))
    if isinstance(family, HomogeneousRoot):
        if lo <= 0.0:
            raise DomainConflict("root deformations need positive Lagrangian values")
        return ClosedForm(family, (0.0, math.inf))
    if isinstance(family, Moebius):
        c, d = family.c, family.d
        if c == 0.0:
            # degenerate linear member, increasing for d > 0
            numerator = (1.0, 0.0) if d > 0 else (-1.0, 0.0)
            return ClosedForm(family, (-math.inf, math.inf), numerator=numerator)
        pole = -d / c
        if lo < pole < hi:
            raise DomainConflict(
                f"the sampled interval [{lo:g}, {hi:g}] straddles the pole {pole:g}"
            )
        interval = (pole, math.inf) if lo > pole else (-math.inf, pole)
        if d > 0:
            numerator = (1.0, 0.0)
        elif d < 0:
            numerator = (-1.0, 0.0)
        else:
            numerator = (0.0, -1.0) if lo > pole else (0.0, 1.0)
        return ClosedForm(family, interval, numerator=numerator)
    raise TypeError(f"cannot synthesize from {family!r}")


def synthesize_numeric(cloud: Sequence, grid_size: int = 4096) -> Numeric:
    """Integrate a sampled slope cloud: F = int f (trapezoid on a uniform
    grid), Phi' = exp(F), Phi = int Phi'."""
    pts = sorted((float(l), float(f)) for l, f in cloud)
    if len(pts) < 8:
        raise InsufficientSamples("numeric synthesis needs at least 8 points")
    ls = np.array([l for l, _ in pts])
    fs = np.array([f for _, f in pts])
    if np.any(np.diff(ls) <= 0.0):
        raise ValueError("cloud abscissae must be strictly increasing")
    grid = np.linspace(ls[0], ls[-1], grid_size)
    # shape-preserving interpolation of the slope cloud onto the grid; the
    # integration itself stays trapezoid
    f_grid = PchipInterpolator(ls, fs)(grid)
    dl = np.diff(grid)
    big_f = np.concatenate(([0.0], np.cumsum(0.5 * (f_grid[1:] + f_grid[:-1]) * dl)))
    dphi = np.exp(big_f)
    phi = np.concatenate(([0.0], np.cumsum(0.5 * (dphi[1:] + dphi[:-1]) * dl)))
    interp_phi = PchipInterpolator(grid, phi)
    interp_dphi = PchipInterpolator(grid, dphi)
    return Numeric(
        grid=tuple(grid),
        values=tuple(phi),
        derivatives=tuple(dphi),
        _phi=interp_phi,
        _dphi=interp_dphi,
        _ddphi=interp_dphi.derivative(),
    )


def phi_eval(deformation: Deformation, t: float) -> tuple:
    """(Phi, Phi', Phi'') at ``t``; exact for closed forms, interpolated for
    numeric deformations."""
    return deformation.triple(t)


def affine_rescale(deformation: Deformation, alpha: float, beta: float) -> Deformation:
    """alpha * Phi + beta with alpha > 0: inert for every verdict."""
    if alpha <= 0.0:
        raise ValueError("affine rescaling must keep Phi increasing")
    if isinstance(deformation, ClosedForm):
        return replace(
            deformation,
            scale=alpha * deformation.scale,
            shift=alpha * deformation.shift + beta,
        )
    values = tuple(alpha * v + beta for v in deformation.values)
    derivs = tuple(alpha * v for v in deformation.derivatives)
    grid = np.asarray(deformation.grid)
    interp_phi = PchipInterpolator(grid, np.asarray(values))
    interp_dphi = PchipInterpolator(grid, np.asarray(derivs))
    return Numeric(
        grid=deformation.grid,
        values=values,
        derivatives=derivs,
        _phi=interp_phi,
        _dphi=interp_dphi,
        _ddphi=interp_dphi.derivative(),
    )


# ---------------------------------------------------------------------------
# deformed Lagrangian
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeformedLagrangian:
    """Phi composed with a base Lagrangian; chain rules are symbolic for
    closed forms and pointwise for numeric deformations."""

    base: ScalarField
    deformation: Deformation

    @property
    def n(self) -> int:
        return self.base.n

    def composed(self) -> Optional[ScalarField]:
        if isinstance(self.deformation, ClosedForm):
            return ScalarField(self.base.n, self.deformation.compose(self.base.expr))
        return None

    def value(self, binding) -> float:
        t = ex.evaluate(self.base.expr, binding)
        return self.deformation.triple(t)[0]

    def gradient_pair(self, binding) -> tuple:
        """(Phi'(L), Phi''(L)) at the point."""
        t = ex.evaluate(self.base.expr, binding)
        _, d1, d2 = self.deformation.triple(t)
        return d1, d2


@dataclass
class DeformedELReport:
    direct: ConditionReport
    expansion_max_residual: float
    agreement_max: float
    out_of_interval: int


def verify_deformed_el(
    spray: SemiSpray,
    lagrangian: ScalarField,
    deformation: Deformation,
    plan: SamplePlan,
    params: Optional[dict] = None,
    tol: float = 1e-9,
) -> DeformedELReport:
    """Check that the deformed Lagrangian has vanishing Lagrange differential
    along the spray: the direct form S(dPhi(L)/dy_i) - dPhi(L)/dx_i and the
    expanded form Phi'' S(L) dL/dy_i + Phi' (delta_S L)_i are both evaluated
    and compared; the verdict is on the direct form."""
    derived = DerivedFields(spray, lagrangian)
    deformed = DeformedLagrangian(lagrangian, deformation)
    composed = deformed.composed()
    direct_form = (
        lagrange_differential(spray, composed) if composed is not None else None
    )

    guards = Guards(evaluable=(lagrangian.expr,))
    points = draw_samples(plan, guards, params)
    residuals, kept = [], []
    expansion_max = 0.0
    agreement_max = 0.0
    out_of_interval = 0
    for p in points:
        b = p.binding(params)
        try:
            d1, d2 = deformed.gradient_pair(b)
            sl = ex.evaluate(derived.spray_of_L.expr, b)
            point_worst = 0.0
            point_exp_worst = 0.0
            point_agree = 0.0
            for i in range(spray.n):
                dy_i = ex.evaluate(derived.vertical.components[i], b)
                defect_i = ex.evaluate(derived.defect.components[i], b)
                term1 = d2 * sl * dy_i
                term2 = d1 * defect_i
                expanded = term1 + term2
                scale = 1.0 + abs(term1) + abs(term2)
                if direct_form is not None:
                    direct = ex.evaluate(direct_form.components[i], b)
                else:
                    direct = expanded
                point_worst = max(point_worst, abs(direct) / scale)
                point_exp_worst = max(point_exp_worst, abs(expanded) / scale)
                point_agree = max(point_agree, abs(direct - expanded) / scale)
        except (OutOfInterval, ex.DomainViolation):
            out_of_interval += 1
            continue
        residuals.append(point_worst)
        kept.append(p)
        expansion_max = max(expansion_max, point_exp_worst)
        agreement_max = max(agreement_max, point_agree)
    direct_report = ConditionReport.from_residuals(
        "deformed_euler_lagrange", residuals, kept, plan.count - len(kept), tol
    )
    return DeformedELReport(direct_report, expansion_max, agreement_max, out_of_interval)


def deformed_hessian(
    lagrangian: ScalarField,
    deformation: Deformation,
    plan: SamplePlan,
    params: Optional[dict] = None,
) -> tuple:
    """Fiber Hessian of Phi(L): Phi'' L_y_i L_y_j + Phi' g_ij. Returns the
    field representation (expression matrix for closed forms, a pointwise
    callable otherwise) together with its sampled rank report."""
    deformed = DeformedLagrangian(lagrangian, deformation)
    composed = deformed.composed()
    if composed is not None:
        matrix = fiber_hessian(composed)
        report = hessian_report(
            matrix,
            plan,
            params,
            domain=Guards(evaluable=(lagrangian.expr,)),
        )
        return matrix, report

    vertical = vertical_differential(lagrangian)
    base_hessian = fiber_hessian(lagrangian)
    n = lagrangian.n

    def matrix_at(point: PhasePoint):
        b = point.binding(params)
        d1, d2 = deformed.gradient_pair(b)
        dy = [ex.evaluate(c, b) for c in vertical.components]
        g = np.array([[ex.evaluate(base_hessian[i][j], b) for j in range(n)] for i in range(n)])
        dy_arr = np.array(dy)
        return d2 * np.outer(dy_arr, dy_arr) + d1 * g

    report = hessian_report(
        matrix_at,
        plan,
        params,
        domain=Guards(evaluable=(lagrangian.expr,)),
    )
    return matrix_at, report
