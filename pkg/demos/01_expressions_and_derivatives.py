"""Expression kernel tour: parsing, evaluation, and three derivative routes.

Every quantity in this package reduces to symbolic expressions in the chart
coordinates x1..xn (positions) and y1..yn (velocities). This script parses a
Lagrangian, differentiates it symbolically, and cross-checks the derivative
against dual-number propagation and a central finite difference.
"""

from lagdeform.expressions import (
    evaluate,
    evaluate_dual,
    parse,
    partial,
    to_source,
)

names = ("x1", "y1", "k")

# a conformally scaled kinetic energy with a parameter k
L = parse("0.5*exp(2*k*x1)*y1^2", names)
print("L            =", to_source(L))

point = {"x1": 0.4, "y1": 1.3, "k": 0.8}
print("L(point)     =", evaluate(L, point))

# exact symbolic partials
dL_dx = partial(L, "x1")
dL_dy = partial(L, "y1")
print("dL/dx1       =", to_source(dL_dx))
print("dL/dy1       =", to_source(dL_dy))

# route 1: evaluate the symbolic derivative
sym = evaluate(dL_dx, point)

# route 2: dual numbers (forward mode), no symbolic tree involved
value, dual = evaluate_dual(L, point, "x1")
print(f"symbolic     = {sym!r}")
print(f"dual number  = {dual!r}   (value check: {value!r})")

# route 3: central finite difference
h = 1e-6
fd = (
    evaluate(L, {**point, "x1": point["x1"] + h})
    - evaluate(L, {**point, "x1": point["x1"] - h})
) / (2 * h)
print(f"finite diff  = {fd!r}")
print(f"sym-vs-dual  = {abs(sym - dual):.2e},  sym-vs-fd = {abs(sym - fd):.2e}")

# domain violations are recoverable per-point outcomes, not crashes:
from lagdeform.expressions import DomainViolation

bad = parse("ln(x1 - 1)", names)
try:
    evaluate(bad, {"x1": 0.5})
except DomainViolation as exc:
    print("domain violation as expected:", exc)
