"""Scale-invariance (Ward) identities and the max-entropy principle.

Every Boltzmann measure of a degree-2n action satisfies
int x^a g dmu = ((d+|a|)/2n) int x^a dmu; the a = 0 case says the mean of
g under the normalized density is exactly d/(2n).  The same density
exp(-g)/Z maximizes differential entropy given its own moment data, and
its entropy has the closed form ln(1/Z) - d/(2n).
"""

import math

from disclab import entropy_report, parse_form, ward_residuals

g = parse_form("x1^4 + 0.3*x1^2*x2^2 + 0.7*x2^4", 2)

print("Ward residuals (relative) for |alpha| <= 4:")
for alpha, r in ward_residuals(g, 4).items():
    print(f"  alpha={alpha}  residual={r:.2e}")

print()
rep = entropy_report(g)
print(f"Z              = {rep.z:.12f}")
print(f"entropy primal = {rep.entropy_primal:.12f}   (quadrature)")
print(f"entropy closed = {rep.entropy_closed:.12f}   (ln c* - d/2n)")
print(f"duality gap    = {rep.gap:.2e}")

print()
print("gaussian check, g = x^2 in d=1:")
rep1 = entropy_report(parse_form("x1^2", 1))
want = -math.log(math.sqrt(math.pi)) - 0.5
print(f"  entropy = {rep1.entropy_primal:.12f}")
print(f"  exact   = {want:.12f}   (N(0, 1/2))")
