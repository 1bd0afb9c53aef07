"""Coordinate operators on the tangent bundle of a single chart.

Everything lives in one chart with coordinates ``x1..xn`` (base) and
``y1..yn`` (fiber/velocity). Operators compose symbolically and are only
evaluated at sample points, so the tight identity tolerances downstream rest
on exact derivatives rather than finite differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import expressions as ex
from .expressions import Expr


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SemiSpray:
    """Second-order dynamics ``x_i'' + 2 G_i(x, x') = 0``.

    The induced vector field is ``S = y_i d/dx_i - 2 G_i d/dy_i``; the
    semi-spray property holds identically in this representation.
    """

    n: int
    coefficients: tuple

    def __init__(self, n: int, coefficients: Sequence[Expr]):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        if len(coefficients) != n:
            raise DimensionMismatch(
                f"expected {n} spray coefficients, got {len(coefficients)}"
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coefficients", tuple(coefficients))


@dataclass(frozen=True)
class ScalarField:
    """A function on phase space: Lagrangian, energy, dissipation, ..."""

    n: int
    expr: Expr


@dataclass(frozen=True)
class SemiBasicForm:
    """Covariant form with ``dx`` components only: forces, d_J L, the
    Lagrange differential."""

    n: int
    components: tuple

    def __init__(self, n: int, components: Sequence[Expr]):
        if len(components) != n:
            raise DimensionMismatch(
                f"expected {n} form components, got {len(components)}"
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "components", tuple(components))


@dataclass(frozen=True)
class PhasePoint:
    x: tuple
    y: tuple

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        object.__setattr__(self, "x", tuple(float(v) for v in x))
        object.__setattr__(self, "y", tuple(float(v) for v in y))
        if len(self.x) != len(self.y):
            raise DimensionMismatch("x and y lengths differ")
        if not all(math.isfinite(v) for v in self.x + self.y):
            raise ValueError("phase point entries must be finite")

    @property
    def n(self):
        return len(self.x)

    def binding(self, params: Optional[dict] = None) -> dict:
        b = dict(params) if params else {}
        for i, v in enumerate(self.x, start=1):
            b[f"x{i}"] = v
        for i, v in enumerate(self.y, start=1):
            b[f"y{i}"] = v
        return b


def _check_dims(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"dimension mismatch: {a.n} vs {b.n}")


def validate_chart_vars(e: Expr, n: int, params: Sequence[str] = ()) -> None:
    """Reject expressions whose free variables fall outside the chart."""
    allowed = set(ex.chart_names(n)) | set(params)
    extra = ex.free_vars(e) - allowed
    if extra:
        raise ValueError(f"variables outside the chart/parameters: {sorted(extra)}")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def liouville_apply(field_: ScalarField) -> ScalarField:
    """C(F) = y_i dF/dy_i, the fiber Euler operator."""
    n = field_.n
    acc: Expr = ex.Const(0.0)
    for i in range(1, n + 1):
        acc = ex.add(acc, ex.mul(ex.Var(f"y{i}"), ex.partial(field_.expr, f"y{i}")))
    return ScalarField(n, acc)


def spray_apply(spray: SemiSpray, field_: ScalarField) -> ScalarField:
    """S(F) = y_i dF/dx_i - 2 G_i dF/dy_i, the derivative along the flow."""
    _check_dims(spray, field_)
    n = spray.n
    acc: Expr = ex.Const(0.0)
    for i in range(1, n + 1):
        acc = ex.add(acc, ex.mul(ex.Var(f"y{i}"), ex.partial(field_.expr, f"x{i}")))
        acc = ex.sub(
            acc,
            ex.mul(
                ex.mul(ex.Const(2.0), spray.coefficients[i - 1]),
                ex.partial(field_.expr, f"y{i}"),
            ),
        )
    return ScalarField(n, acc)


def energy(lagrangian: ScalarField) -> ScalarField:
    """Lagrangian energy E = C(L) - L."""
    return ScalarField(
        lagrangian.n, ex.sub(liouville_apply(lagrangian).expr, lagrangian.expr)
    )


def vertical_differential(lagrangian: ScalarField) -> SemiBasicForm:
    """d_J L, with components dL/dy_i."""
    n = lagrangian.n
    return SemiBasicForm(
        n, [ex.partial(lagrangian.expr, f"y{i}") for i in range(1, n + 1)]
    )


def lagrange_differential(spray: SemiSpray, lagrangian: ScalarField) -> SemiBasicForm:
    """Lagrange differential: components S(dL/dy_i) - dL/dx_i.

    Vanishes exactly when the spray is the Euler-Lagrange dynamics of L.
    """
    _check_dims(spray, lagrangian)
    n = spray.n
    comps = []
    for i in range(1, n + 1):
        momentum = ScalarField(n, ex.partial(lagrangian.expr, f"y{i}"))
        comps.append(
            ex.sub(
                spray_apply(spray, momentum).expr,
                ex.partial(lagrangian.expr, f"x{i}"),
            )
        )
    return SemiBasicForm(n, comps)


def fiber_hessian(lagrangian: ScalarField) -> list:
    """g_ij = d^2 L / dy_i dy_j as an n x n matrix of expressions."""
    n = lagrangian.n
    firsts = [ex.partial(lagrangian.expr, f"y{i}") for i in range(1, n + 1)]
    return [
        [ex.partial(firsts[i], f"y{j + 1}") for j in range(n)] for i in range(n)
    ]


def contract_with_spray(spray: SemiSpray, form: SemiBasicForm) -> ScalarField:
    """i_S omega = sum omega_i y_i (semi-basic forms only see the dx part)."""
    _check_dims(spray, form)
    acc: Expr = ex.Const(0.0)
    for i, comp in enumerate(form.components, start=1):
        acc = ex.add(acc, ex.mul(comp, ex.Var(f"y{i}")))
    return ScalarField(spray.n, acc)


# ---------------------------------------------------------------------------
# homogeneity
# ---------------------------------------------------------------------------

_HOMOGENEITY_RATIOS = (0.5, 2.0, 3.0)


def _fiber_scaled(binding: dict, n: int, r: float) -> dict:
    scaled = dict(binding)
    for i in range(1, n + 1):
        scaled[f"y{i}"] = r * binding[f"y{i}"]
    return scaled


def homogeneity_degree(
    obj,
    points: Sequence[PhasePoint],
    params: Optional[dict] = None,
    tol: float = 1e-9,
) -> Optional[float]:
    """Fiber-homogeneity degree of a scalar field, or spray degree-2 check.

    For fields, tests ``F(x, r y) = r^p F(x, y)`` at every point for
    ``r in {0.5, 2, 3}`` and returns the common ``p`` if one exists (None
    otherwise). For a :class:`SemiSpray`, returns 2.0 when all coefficients
    scale quadratically, else None. Points must have ``y != 0``.
    """
    if isinstance(obj, SemiSpray):
        for g in obj.coefficients:
            if _field_degree(ScalarField(obj.n, g), points, params, tol) != 2.0:
                if not _is_zero_at(g, obj.n, points, params, tol):
                    return None
        return 2.0
    return _field_degree(obj, points, params, tol)


def _is_zero_at(e: Expr, n, points, params, tol) -> bool:
    for p in points:
        try:
            if abs(ex.evaluate(e, p.binding(params))) > tol:
                return False
        except ex.DomainViolation:
            return False
    return True


def _field_degree(field_: ScalarField, points, params, tol) -> Optional[float]:
    estimate = None
    for p in points:
        if all(v == 0.0 for v in p.y):
            continue
        b = p.binding(params)
        try:
            base = ex.evaluate(field_.expr, b)
        except ex.DomainViolation:
            continue
        if abs(base) < 1e-12:
            continue
        try:
            scaled2 = ex.evaluate(field_.expr, _fiber_scaled(b, field_.n, 2.0))
        except ex.DomainViolation:
            return None
        ratio = scaled2 / base
        if ratio <= 0.0:
            return None
        p_here = math.log(ratio) / math.log(2.0)
        if estimate is None:
            estimate = p_here
        elif abs(p_here - estimate) > tol * (1.0 + abs(estimate)):
            return None
        for r in _HOMOGENEITY_RATIOS:
            try:
                scaled = ex.evaluate(field_.expr, _fiber_scaled(b, field_.n, r))
            except ex.DomainViolation:
                return None
            want = math.pow(r, estimate) * base
            if abs(scaled - want) > tol * (1.0 + abs(scaled) + abs(want)):
                return None
    return estimate
