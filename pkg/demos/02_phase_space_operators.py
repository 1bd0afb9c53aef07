"""Phase-space operator tour on a Lienard system.

The equation x'' + x' - 2x = 0 (g = 1, h = -2x, Chiellini-integrable with
k = -2) encodes as a semi-spray; the operators below are everything the
deformability conditions are built from.
"""

from lagdeform.expressions import evaluate, parse, to_source
from lagdeform.geometry import (
    PhasePoint,
    ScalarField,
    SemiSpray,
    contract_with_spray,
    energy,
    fiber_hessian,
    lagrange_differential,
    liouville_apply,
    spray_apply,
    vertical_differential,
)

names = ("x1", "y1")
spray = SemiSpray(1, [parse("(y1 - 2*x1)/2", names)])  # x'' + y - 2x = 0
L = ScalarField(1, parse("(y1 + 2*x1)^2", names))

point = PhasePoint([1.0], [1.0])
b = point.binding()

CL = liouville_apply(L)  # fiber Euler operator y dL/dy
SL = spray_apply(spray, L)  # derivative along the flow
EL = energy(L)  # C(L) - L
dJL = vertical_differential(L)  # momentum form dL/dy dx
delta = lagrange_differential(spray, L)  # S(dL/dy) - dL/dx

print("C(L)      =", to_source(CL.expr), "->", evaluate(CL.expr, b))
print("S(L)      =", evaluate(SL.expr, b), "(equals 2L =", 2 * evaluate(L.expr, b), ")")
print("E_L       =", evaluate(EL.expr, b))
print("d_J L     =", [evaluate(c, b) for c in dJL.components])
print("delta_S L =", [evaluate(c, b) for c in delta.components])

# the two contraction identities behind the main theorem:
lhs1 = contract_with_spray(spray, dJL)
print(
    "i_S d_J L - C(L)        =",
    evaluate(lhs1.expr, b) - evaluate(CL.expr, b),
)
lhs2 = contract_with_spray(spray, delta)
SEL = spray_apply(spray, EL)
print(
    "i_S delta_S L - S(E_L)  =",
    evaluate(lhs2.expr, b) - evaluate(SEL.expr, b),
)

g = fiber_hessian(L)
print("fiber Hessian [d2L/dy2] =", evaluate(g[0][0], b))
