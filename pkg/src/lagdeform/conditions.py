"""Sampled checks of the deformability conditions and slope classification.

A forced system delta_S L = sigma admits a deformed genuine Lagrangian
Phi(L) exactly when

  (i)   sigma = (S(E_L)/C(L)) d_J L,
  (ii)  Phi''/Phi' = -S(E_L)/(S(L) C(L)) is a function of L alone,
  (iii) the deformed fiber Hessian is non-trivial,

plus the homogeneous shortcut (L, sigma fiber-homogeneous of degree p > 1
with d_J L ^ sigma = 0, giving Phi = a L^(1/p) + b) and the dissipative
refinement sigma = d_J D with S(E_L) = C(D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import expressions as ex
from .expressions import Dual
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
    SemiBasicForm,
    SemiSpray,
    energy,
    fiber_hessian,
    homogeneity_degree,
    liouville_apply,
    spray_apply,
    lagrange_differential,
    vertical_differential,
)
from .sampling import Guards, GuardViolation, SamplePlan, draw_samples


class InsufficientSamples(Exception):
    pass


class NotHomogeneous(Exception):
    def __init__(self, message: str, degrees: dict):
        super().__init__(f"{message}; measured degrees: {degrees}")
        self.degrees = degrees


@dataclass
class ConditionReport:
    condition: str
    accepted: int
    rejected: int
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool
    worst_point: Optional[PhasePoint] = None

    @staticmethod
    def from_residuals(
        condition: str,
        residuals: Sequence[float],
        points: Sequence[PhasePoint],
        rejected: int,
        tolerance: float,
    ) -> "ConditionReport":
        if not residuals:
            return ConditionReport(condition, 0, rejected, 0.0, 0.0, tolerance, True)
        worst = max(range(len(residuals)), key=lambda k: residuals[k])
        return ConditionReport(
            condition=condition,
            accepted=len(residuals),
            rejected=rejected,
            max_residual=float(residuals[worst]),
            mean_residual=float(sum(residuals) / len(residuals)),
            tolerance=float(tolerance),
            passed=bool(residuals[worst] <= tolerance),
            worst_point=points[worst],
        )


@dataclass
class DerivedFields:
    """The handful of composite fields every check needs, built once."""

    spray: SemiSpray
    lagrangian: ScalarField
    spray_of_L: ScalarField = field(init=False)
    liouville_of_L: ScalarField = field(init=False)
    energy_of_L: ScalarField = field(init=False)
    energy_rate: ScalarField = field(init=False)  # S(E_L)
    vertical: SemiBasicForm = field(init=False)  # d_J L
    defect: SemiBasicForm = field(init=False)  # delta_S L

    def __post_init__(self):
        self.spray_of_L = spray_apply(self.spray, self.lagrangian)
        self.liouville_of_L = liouville_apply(self.lagrangian)
        self.energy_of_L = energy(self.lagrangian)
        self.energy_rate = spray_apply(self.spray, self.energy_of_L)
        self.vertical = vertical_differential(self.lagrangian)
        self.defect = lagrange_differential(self.spray, self.lagrangian)

    def theorem_guards(self) -> Guards:
        return Guards(
            nonzero=(self.spray_of_L, self.liouville_of_L),
            evaluable=(self.lagrangian.expr, self.energy_rate.expr),
        )

    def denominator_guards(self, extra_evaluable=()) -> Guards:
        return Guards(
            nonzero=(self.liouville_of_L,),
            evaluable=(self.lagrangian.expr, self.energy_rate.expr) + tuple(extra_evaluable),
        )


# ---------------------------------------------------------------------------
# the slope ratio (condition (ii) pointwise)
# ---------------------------------------------------------------------------


def deformation_ratio(
    spray: SemiSpray,
    lagrangian: ScalarField,
    point: PhasePoint,
    params: Optional[dict] = None,
    guard_eps: float = 1e-6,
    derived: Optional[DerivedFields] = None,
) -> float:
    """-S(E_L) / (S(L) C(L)) at one point: the target value for Phi''/Phi'."""
    d = derived or DerivedFields(spray, lagrangian)
    b = point.binding(params)
    sl = ex.evaluate(d.spray_of_L.expr, b)
    cl = ex.evaluate(d.liouville_of_L.expr, b)
    if abs(sl) <= guard_eps:
        raise GuardViolation("S(L)", sl, guard_eps)
    if abs(cl) <= guard_eps:
        raise GuardViolation("C(L)", cl, guard_eps)
    return -ex.evaluate(d.energy_rate.expr, b) / (sl * cl)


# ---------------------------------------------------------------------------
# condition (i): the force is the aligned multiple of d_J L
# ---------------------------------------------------------------------------


def check_sigma_condition(
    spray: SemiSpray,
    lagrangian: ScalarField,
    sigma: SemiBasicForm,
    plan: SamplePlan,
    params: Optional[dict] = None,
    tol: float = 1e-9,
) -> ConditionReport:
    """Check sigma = (S(E_L)/C(L)) d_J L at sampled points, per component,
    with residuals relative to 1 + |sigma_i|. Only C(L) is guarded (it is the
    denominator); the conservative case passes vacuously."""
    d = DerivedFields(spray, lagrangian)
    guards = d.denominator_guards(extra_evaluable=tuple(c for c in sigma.components))
    points = draw_samples(plan, guards, params)
    residuals, kept = [], []
    rejected = plan.count - len(points)
    for p in points:
        b = p.binding(params)
        scale = ex.evaluate(d.energy_rate.expr, b) / ex.evaluate(d.liouville_of_L.expr, b)
        worst = 0.0
        for i in range(sigma.n):
            s_i = ex.evaluate(sigma.components[i], b)
            rhs = scale * ex.evaluate(d.vertical.components[i], b)
            worst = max(worst, abs(s_i - rhs) / (1.0 + abs(s_i)))
        residuals.append(worst)
        kept.append(p)
    return ConditionReport.from_residuals("sigma_condition", residuals, kept, rejected, tol)


def check_sigma_consistency(
    spray: SemiSpray,
    lagrangian: ScalarField,
    sigma: SemiBasicForm,
    plan: SamplePlan,
    params: Optional[dict] = None,
    tol: float = 1e-9,
) -> ConditionReport:
    """Cross-check a user-supplied sigma against the Lagrange differential:
    the force form is the defect delta_S L by definition, so disagreement
    means the problem data is inconsistent."""
    d = DerivedFields(spray, lagrangian)
    guards = Guards(
        evaluable=(lagrangian.expr,)
        + tuple(sigma.components)
        + tuple(d.defect.components)
    )
    points = draw_samples(plan, guards, params)
    residuals, kept = [], []
    for p in points:
        b = p.binding(params)
        worst = 0.0
        for i in range(sigma.n):
            s_i = ex.evaluate(sigma.components[i], b)
            defect_i = ex.evaluate(d.defect.components[i], b)
            worst = max(worst, abs(s_i - defect_i) / (1.0 + abs(s_i)))
        residuals.append(worst)
        kept.append(p)
    return ConditionReport.from_residuals(
        "sigma_consistency", residuals, kept, plan.count - len(points), tol
    )


# ---------------------------------------------------------------------------
# condition (ii): functional dependence of the ratio on L
# ---------------------------------------------------------------------------


@dataclass
class DependenceResult:
    functional: bool
    cloud: list  # cleaned, sorted (L, f) pairs
    levels_used: int
    max_level_spread: float
    tolerance: float


def _solve_on_level(
    lagrangian: ScalarField,
    plan: SamplePlan,
    params: Optional[dict],
    rng,
    target: float,
    names,
    n: int,
    bisections: int = 80,
) -> Optional[PhasePoint]:
    """Construct a point with L exactly (to rounding) equal to ``target`` by
    bisecting L along a random segment of fiber coordinates."""
    lows = [plan.bounds[v][0] for v in names]
    highs = [plan.bounds[v][1] for v in names]

    def value_at(coords):
        point = PhasePoint(coords[:n], coords[n:])
        return ex.evaluate(lagrangian.expr, point.binding(params)), point

    for _ in range(12):
        a = [rng.uniform(lo, hi) for lo, hi in zip(lows, highs)]
        b = list(a[:n]) + [rng.uniform(plan.bounds[v][0], plan.bounds[v][1]) for v in names[n:]]
        try:
            va, _ = value_at(a)
            vb, _ = value_at(b)
        except ex.DomainViolation:
            continue
        if (va - target) * (vb - target) > 0.0:
            continue
        lo_c, hi_c = a, b
        try:
            for _ in range(bisections):
                mid = [(u + v) / 2.0 for u, v in zip(lo_c, hi_c)]
                vm, pm = value_at(mid)
                if (vm - target) * (va - target) <= 0.0:
                    hi_c = mid
                else:
                    lo_c, va = mid, vm
            vm, pm = value_at([(u + v) / 2.0 for u, v in zip(lo_c, hi_c)])
        except ex.DomainViolation:
            continue
        if abs(vm - target) <= 1e-10 * (1.0 + abs(target)):
            return pm
    return None


def functional_dependence_test(
    spray: SemiSpray,
    lagrangian: ScalarField,
    plan: SamplePlan,
    params: Optional[dict] = None,
    tol_dep: float = 1e-6,
    levels: int = 32,
    per_level: int = 4,
) -> DependenceResult:
    """Decide whether the slope ratio is a function of L alone.

    Collects the (L, f) cloud over guarded samples, then builds groups of
    near-equal L by constructing extra points directly on 32 target levels
    (bisection along fiber segments, level width ~1e-10 relative) and
    compares the ratio within each group. Genuine level-set variation shows
    up as within-group spread far above float noise.
    """
    d = DerivedFields(spray, lagrangian)
    points = draw_samples(plan, d.theorem_guards(), params)
    if len(points) < 8:
        raise InsufficientSamples(f"only {len(points)} accepted points")

    cloud = []
    for p in points:
        b = p.binding(params)
        l_val = ex.evaluate(lagrangian.expr, b)
        f_val = deformation_ratio(spray, lagrangian, p, params, plan.guard_eps, d)
        cloud.append((l_val, f_val))
    cloud.sort(key=lambda t: t[0])
    cleaned = _merge_duplicate_abscissae(cloud)
    if len(cleaned) < 8:
        raise InsufficientSamples("fewer than 8 distinct Lagrangian values")

    f_median = float(np.median([f for _, f in cleaned]))
    tolerance = tol_dep * (1.0 + abs(f_median))

    l_values = np.array([l for l, _ in cleaned])
    rng = np.random.default_rng(plan.seed + 1)
    names = ex.chart_names(spray.n)
    max_spread = 0.0
    used = 0
    functional = True
    for k in range(levels):
        target = float(np.quantile(l_values, (k + 0.5) / levels))
        group = []
        for _ in range(per_level * 3):
            if len(group) >= per_level:
                break
            pt = _solve_on_level(lagrangian, plan, params, rng, target, names, spray.n)
            if pt is None:
                continue
            try:
                f_val = deformation_ratio(spray, lagrangian, pt, params, plan.guard_eps, d)
            except (GuardViolation, ex.DomainViolation):
                continue
            group.append(f_val)
        if len(group) >= 2:
            used += 1
            spread = max(group) - min(group)
            max_spread = max(max_spread, spread)
            if spread > tolerance:
                functional = False
    if used < 8:
        raise InsufficientSamples(
            f"could only build {used} usable equal-level groups"
        )
    return DependenceResult(functional, cleaned, used, max_spread, tolerance)


def _merge_duplicate_abscissae(cloud):
    if not cloud:
        return []
    span = max(cloud[-1][0] - cloud[0][0], 1e-300)
    eps = 1e-12 * span
    merged = []
    bucket_l, bucket_f = [cloud[0][0]], [cloud[0][1]]
    for l, f in cloud[1:]:
        if l - bucket_l[-1] <= eps:
            bucket_l.append(l)
            bucket_f.append(f)
        else:
            merged.append((sum(bucket_l) / len(bucket_l), sum(bucket_f) / len(bucket_f)))
            bucket_l, bucket_f = [l], [f]
    merged.append((sum(bucket_l) / len(bucket_l), sum(bucket_f) / len(bucket_f)))
    return merged


# ---------------------------------------------------------------------------
# classification of the slope cloud into a deformation family
# ---------------------------------------------------------------------------


@dataclass
class FunctionalFit:
    chosen: object
    residual: float
    penalized: float
    competitors: dict
    homogeneous_root: Optional[HomogeneousRoot] = None

    def describe(self) -> str:
        return self.chosen.describe()


def _rms(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(arr * arr))) if arr.size else 0.0


def _gauss_newton(model, theta0, ls, fs, iterations=50):
    """Damped Gauss-Newton with dual-number Jacobians. ``model(l, theta)``
    must accept Dual parameters."""
    theta = [float(t) for t in theta0]
    k = len(theta)

    def cost_of(th):
        try:
            r = [model(l, th) - f for l, f in zip(ls, fs)]
        except (ZeroDivisionError, ValueError, OverflowError):
            return None, math.inf
        return r, _rms(r)

    residuals, cost = cost_of(theta)
    if residuals is None:
        return theta, math.inf
    lam = 1e-3
    for _ in range(iterations):
        jac = np.zeros((len(ls), k))
        try:
            for j in range(k):
                seeded = [
                    Dual(t, 1.0 if i == j else 0.0) for i, t in enumerate(theta)
                ]
                for row, l in enumerate(ls):
                    jac[row, j] = model(l, seeded).dot
        except (ZeroDivisionError, ValueError, OverflowError):
            break
        r = np.asarray(residuals)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        stepped = False
        for _ in range(8):
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(k), -jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = [t + dt for t, dt in zip(theta, delta)]
            cand_res, cand_cost = cost_of(candidate)
            if cand_res is not None and cand_cost < cost:
                theta, residuals, cost = candidate, cand_res, cand_cost
                lam = max(lam * 0.3, 1e-12)
                stepped = True
                break
            lam *= 10.0
        if not stepped:
            break
        if cost < 1e-15:
            break
    return theta, cost


def _model_power_shift(l, theta):
    gamma, a = theta
    return gamma / (l + a)


def _model_moebius(l, theta):
    (t,) = theta
    return -2.0 / (l + t)


def classify(cloud: Sequence, tol_fit: float = 1e-6) -> FunctionalFit:
    """Fit each closed-form slope family to the (L, f) cloud and pick the
    winner by residual plus a parsimony penalty of ``tol_fit`` per free
    parameter. Falls back to :class:`Tabulated` when nothing fits."""
    if len(cloud) < 8:
        raise InsufficientSamples("classification needs at least 8 points")
    ls = np.array([l for l, _ in cloud])
    fs = np.array([f for _, f in cloud])
    candidates = {}  # name -> (class instance, residual, free parameter count)

    gamma_const = float(np.mean(fs))
    resid_const = _rms(fs - gamma_const)
    if abs(gamma_const) < 1e-8:
        candidates["Affine"] = (Affine(), resid_const, 1)
    else:
        candidates["Constant"] = (Constant(gamma_const), resid_const, 1)

    # logarithmic is linear in a through the reciprocal transform
    if np.all(np.abs(fs) > 1e-12):
        a_log = float(np.mean(-1.0 / fs - ls))
        if np.all(np.abs(ls + a_log) > 1e-12):
            resid_log = _rms(fs + 1.0 / (ls + a_log))
            candidates["Logarithmic"] = (Logarithmic(a_log), resid_log, 1)

    best_ps = None
    for a0 in (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0):
        if np.min(np.abs(ls + a0)) < 1e-9:
            continue
        u = 1.0 / (ls + a0)
        gamma0 = float(u @ fs / (u @ u))
        theta, cost = _gauss_newton(_model_power_shift, (gamma0, a0), ls, fs)
        if best_ps is None or cost < best_ps[1]:
            best_ps = (theta, cost)
    if best_ps is not None and math.isfinite(best_ps[1]):
        gamma_ps, a_ps = (float(t) for t in best_ps[0])
        if abs(gamma_ps) > 1e-8 and abs(gamma_ps + 1.0) > 1e-8:
            candidates["PowerShift"] = (
                PowerShift(gamma_ps, a_ps),
                float(best_ps[1]),
                2,
            )

    best_mb = None
    for t0 in (0.5, -0.5, 1.0, -1.0, 2.0, -2.0):
        if np.min(np.abs(ls + t0)) < 1e-9:
            continue
        theta, cost = _gauss_newton(_model_moebius, (t0,), ls, fs)
        if best_mb is None or cost < best_mb[1]:
            best_mb = (theta, cost)
    if best_mb is not None and math.isfinite(best_mb[1]):
        t_mb = float(best_mb[0][0])
        # one identifiable parameter: (c, d) ~ (1, t) up to common scale
        candidates["Moebius"] = (Moebius.normalised(1.0, t_mb), float(best_mb[1]), 1)

    order = ["Affine", "Constant", "PowerShift", "Logarithmic", "Moebius"]
    best_name, best_penalized = None, math.inf
    for name in order:
        if name not in candidates:
            continue
        _, resid, nfree = candidates[name]
        penalized = resid + tol_fit * nfree
        if penalized < best_penalized:
            best_name, best_penalized = name, penalized

    competitors = {
        name: {"class": inst, "residual": resid}
        for name, (inst, resid, _) in candidates.items()
    }
    chosen, resid, _ = candidates[best_name]
    if resid > tol_fit:
        table = Tabulated(tuple((float(l), float(f)) for l, f in cloud))
        return FunctionalFit(table, resid, best_penalized, competitors)

    fit = FunctionalFit(chosen, resid, best_penalized, competitors)
    if isinstance(chosen, PowerShift) and abs(chosen.a) <= 1e-6:
        p = 1.0 / (1.0 + chosen.gamma)
        if p > 1.0 and abs(p - round(p)) <= 1e-6:
            fit.homogeneous_root = HomogeneousRoot(float(round(p)))
    return fit


# ---------------------------------------------------------------------------
# condition (iii): Hessian non-triviality and rank
# ---------------------------------------------------------------------------


@dataclass
class HessianReport:
    nontrivial: bool
    min_rank: int
    max_rank: int
    samples: int
    max_entry: float


def hessian_report(
    matrix,
    plan: SamplePlan,
    params: Optional[dict] = None,
    domain: Guards = Guards(),
    rank_rtol: float = 1e-9,
    nontrivial_tol: float = 1e-10,
) -> HessianReport:
    """Evaluate an expression matrix (or a callable ``point -> ndarray``) at
    sampled points; rank via singular values above ``rank_rtol * s_max``."""
    if isinstance(matrix, ScalarField):
        matrix = fiber_hessian(matrix)
    points = draw_samples(plan, domain, params)
    min_rank, max_rank = None, None
    max_entry = 0.0
    evaluated = 0
    for p in points:
        if callable(matrix):
            try:
                m = np.asarray(matrix(p), dtype=float)
            except (ex.DomainViolation, ValueError):
                continue
        else:
            b = p.binding(params)
            try:
                m = np.array(
                    [[ex.evaluate(cell, b) for cell in row] for row in matrix]
                )
            except ex.DomainViolation:
                continue
        evaluated += 1
        max_entry = max(max_entry, float(np.max(np.abs(m))))
        s = np.linalg.svd(m, compute_uv=False)
        rank = int(np.sum(s > rank_rtol * (s[0] if s[0] > 0 else 1.0)))
        min_rank = rank if min_rank is None else min(min_rank, rank)
        max_rank = rank if max_rank is None else max(max_rank, rank)
    if evaluated == 0:
        raise InsufficientSamples("no evaluable points for the Hessian")
    return HessianReport(
        nontrivial=max_entry > nontrivial_tol,
        min_rank=min_rank,
        max_rank=max_rank,
        samples=evaluated,
        max_entry=max_entry,
    )


# ---------------------------------------------------------------------------
# homogeneous shortcut
# ---------------------------------------------------------------------------


@dataclass
class HomogeneousReport:
    degree: float
    spray_is_spray: bool
    wedge_residual: float
    passed: bool
    nontrivial: bool
    phi_class: Optional[HomogeneousRoot]
    tolerance: float
    samples: int


def check_homogeneous(
    spray: SemiSpray,
    lagrangian: ScalarField,
    sigma: SemiBasicForm,
    plan: SamplePlan,
    params: Optional[dict] = None,
    tol_wedge: float = 1e-10,
    tol_degree: float = 1e-9,
) -> HomogeneousReport:
    """Homogeneous-case test: L and sigma fiber-homogeneous of common degree
    p > 1 on a spray, and d_J L wedge sigma = 0; then Phi = L^(1/p) works and
    the report carries the non-triviality of its Hessian combination."""
    guards = Guards(evaluable=(lagrangian.expr,) + tuple(sigma.components))
    points = draw_samples(plan, guards, params)

    degrees = {}
    p_l = homogeneity_degree(lagrangian, points, params, tol_degree)
    degrees["L"] = p_l
    comp_degrees = []
    for i, comp in enumerate(sigma.components):
        deg = homogeneity_degree(ScalarField(sigma.n, comp), points, params, tol_degree)
        degrees[f"sigma_{i + 1}"] = deg
        if deg is not None:
            comp_degrees.append(deg)
    spray_ok = homogeneity_degree(spray, points, params, tol_degree) == 2.0
    degrees["spray"] = 2.0 if spray_ok else None

    if p_l is None:
        raise NotHomogeneous("Lagrangian is not fiber-homogeneous", degrees)
    if abs(p_l - 1.0) <= tol_degree:
        raise NotHomogeneous(
            "degree 1: the energy vanishes, forcing a zero force form", degrees
        )
    if p_l <= 1.0:
        raise NotHomogeneous("degree must exceed 1", degrees)
    if any(abs(d - p_l) > tol_degree * (1.0 + abs(p_l)) for d in comp_degrees):
        raise NotHomogeneous("force components have a different degree", degrees)
    if not spray_ok:
        raise NotHomogeneous("coefficients are not fiber-quadratic", degrees)
    for p in points:
        b = p.binding(params)
        if ex.evaluate(lagrangian.expr, b) <= 0.0:
            raise NotHomogeneous("Lagrangian must be positive on samples", degrees)

    vertical = vertical_differential(lagrangian)
    wedge = 0.0
    for p in points:
        b = p.binding(params)
        dj = [ex.evaluate(c, b) for c in vertical.components]
        sg = [ex.evaluate(c, b) for c in sigma.components]
        for i in range(sigma.n):
            for j in range(i + 1, sigma.n):
                wedge = max(wedge, abs(dj[i] * sg[j] - dj[j] * sg[i]))
    passed = wedge <= tol_wedge

    p_round = float(round(p_l)) if abs(p_l - round(p_l)) <= 1e-9 else p_l
    phi_class = HomogeneousRoot(p_round) if passed else None

    nontrivial = False
    if passed:
        g = fiber_hessian(lagrangian)
        coeff = ex.Const((1.0 - p_round) / p_round)
        matrix = [
            [
                ex.add(
                    ex.mul(coeff, ex.mul(vertical.components[i], vertical.components[j])),
                    ex.mul(lagrangian.expr, g[i][j]),
                )
                for j in range(sigma.n)
            ]
            for i in range(sigma.n)
        ]
        for p in points:
            b = p.binding(params)
            if any(
                abs(ex.evaluate(cell, b)) > 1e-10 for row in matrix for cell in row
            ):
                nontrivial = True
                break

    return HomogeneousReport(
        degree=p_round,
        spray_is_spray=spray_ok,
        wedge_residual=wedge,
        passed=passed,
        nontrivial=nontrivial,
        phi_class=phi_class,
        tolerance=tol_wedge,
        samples=len(points),
    )


# ---------------------------------------------------------------------------
# dissipative structure
# ---------------------------------------------------------------------------


@dataclass
class DissipativeReport:
    gradient_match: ConditionReport  # delta_S L = d_J D
    energy_rate_match: ConditionReport  # S(E_L) = C(D)
    rayleigh: bool  # D fiber-quadratic
    rayleigh_rate: Optional[ConditionReport]  # S(E_L) = 2D
    dissipation_negative: Optional[bool]


def check_dissipative(
    spray: SemiSpray,
    lagrangian: ScalarField,
    dissipation: ScalarField,
    plan: SamplePlan,
    params: Optional[dict] = None,
    tol: float = 1e-9,
) -> DissipativeReport:
    d = DerivedFields(spray, lagrangian)
    vertical_d = vertical_differential(dissipation)
    liouville_d = liouville_apply(dissipation)
    guards = Guards(evaluable=(lagrangian.expr, dissipation.expr, d.energy_rate.expr))
    points = draw_samples(plan, guards, params)

    grad_res, rate_res, kept = [], [], []
    for p in points:
        b = p.binding(params)
        worst = 0.0
        for i in range(spray.n):
            defect_i = ex.evaluate(d.defect.components[i], b)
            grad_i = ex.evaluate(vertical_d.components[i], b)
            worst = max(worst, abs(defect_i - grad_i) / (1.0 + abs(grad_i)))
        grad_res.append(worst)
        sel = ex.evaluate(d.energy_rate.expr, b)
        cd = ex.evaluate(liouville_d.expr, b)
        rate_res.append(abs(sel - cd) / (1.0 + abs(cd)))
        kept.append(p)
    rejected = plan.count - len(points)
    gradient = ConditionReport.from_residuals("sigma_is_dJD", grad_res, kept, rejected, tol)
    rate = ConditionReport.from_residuals("energy_rate_is_CD", rate_res, kept, rejected, tol)

    deg = homogeneity_degree(dissipation, kept, params)
    rayleigh = deg is not None and abs(deg - 2.0) <= 1e-9
    rayleigh_rate = None
    negative = None
    if rayleigh:
        twice_res = []
        negative = True
        for p in kept:
            b = p.binding(params)
            sel = ex.evaluate(d.energy_rate.expr, b)
            dval = ex.evaluate(dissipation.expr, b)
            twice_res.append(abs(sel - 2.0 * dval) / (1.0 + abs(2.0 * dval)))
            if dval >= 0.0:
                negative = False
        rayleigh_rate = ConditionReport.from_residuals(
            "energy_rate_is_2D", twice_res, kept, rejected, tol
        )
    return DissipativeReport(gradient, rate, rayleigh, rayleigh_rate, negative)
