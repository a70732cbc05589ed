"""Recovering an action from its own Boltzmann moments.

The moment matrix HM of exp(-g)dx and the degree-2n moment vector pin the
action down through a linear fixed-point identity: solving HM a = c * mu
returns exactly the coefficients of g, where c = 1 + d/(2n).  In the
orthonormal coordinates induced by the Cholesky factor of HM the identity
reads g-tilde = c * mu-tilde componentwise.
"""

import numpy as np

from disclab import (
    moment_ratio_constant,
    mu_moment_matrix,
    mu_moment_vector,
    orthonormalize,
    parse_form,
    recover_form,
    tilde_coeffs,
    tilde_moments,
)

g = parse_form("1.5*x1^4 + 0.8*x1^3*x2 + 2*x1^2*x2^2 - 0.4*x1*x2^3 + x2^4", 2)
print("input  :", g)

hm = mu_moment_matrix(g)
mu = mu_moment_vector(g, g.degree)
rec = recover_form(hm, mu)
print("recovered:", rec)

basis = hm.row_basis
err = np.abs(rec.coeff_vector(basis) - g.coeff_vector(basis)).max()
print(f"max coefficient error: {err:.2e}")

onb = orthonormalize(hm)
c = moment_ratio_constant(g.dim, g.degree)
gt = tilde_coeffs(onb, g)
mt = tilde_moments(onb, mu)
print(f"\nc_2n = 1 + d/2n = {c}")
print("g-tilde / mu-tilde (should all equal c_2n):")
print(np.array2string(gt / mt, precision=12))
