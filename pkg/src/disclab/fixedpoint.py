"""Recovery of the action from its own Boltzmann moments.

The degree-m coefficients of g solve the linear system

    HM(mu) g = c * mu_vec,     c = 1 + d/m,

where HM(mu) is the moment matrix and mu_vec the degree-m moment vector of
exp(-g)dx.  The Cholesky factor of HM(mu) also yields mu-orthonormal forms,
their reproducing kernel, and two closed-form expressions for Z(g):

    Z = m^2 * |g_tilde|^2 / (d*(d+m)) = ((d+m)/d) * |mu_tilde|^2

with g_tilde = L^T g and mu_tilde = L^-1 mu_vec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .boltzmann import mu_moment_matrix, mu_moment_vector, partition_function_direct
from .errors import FactorizationError
from .polyform import HomogeneousForm, enumerate_basis, monomial_matrix

COND_LIMIT = 1e12
RIDGE = 1e-12


def moment_ratio_constant(d, m):
    """The constant c = 1 + d/m tying coefficients to degree-m moments."""
    return 1.0 + d / m


@dataclass(frozen=True)
class OrthonormalBasis:
    """Lower-triangular factor L with HM = L L^T, plus its graded basis.

    The induced forms P_a(x) = (L^-1 v_m(x))_a are orthonormal for the
    underlying measure.
    """

    factor: np.ndarray
    basis: object

    def forms_at(self, x):
        """Values of the orthonormal forms at a point (or (N,d) batch)."""
        v = monomial_matrix(np.atleast_2d(x), self.basis.indices)
        return solve_triangular(self.factor, v.T, lower=True).T


def _factor(hm, allow_ridge=True):
    a = np.asarray(hm.entries, dtype=float)
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise FactorizationError(
            f"moment matrix too ill-conditioned (cond ~ {cond:.3e})",
            condition=cond,
        )
    try:
        return np.linalg.cholesky(a), False
    except np.linalg.LinAlgError:
        if not allow_ridge:
            raise FactorizationError("Cholesky factorization failed")
        ridge = RIDGE * float(np.trace(a))
        try:
            return np.linalg.cholesky(a + ridge * np.eye(len(a))), True
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                f"Cholesky failed even with ridge {ridge:.3e}"
            ) from exc


def orthonormalize(hm):
    """Cholesky-based orthonormal basis for the measure behind hm."""
    ell, _ = _factor(hm)
    return OrthonormalBasis(factor=ell, basis=hm.row_basis)


def _solve_hm(hm, rhs):
    ell, _ = _factor(hm)
    y = solve_triangular(ell, rhs, lower=True)
    return solve_triangular(ell.T, y, lower=False)


def recover_form(hm, mu):
    """Reconstruct the action from its Boltzmann moment data.

    hm: MomentMatrix of exp(-g)dx (degree-m basis, degree-2m entries);
    mu: MomentVector of the degree-m moments.  Returns the form whose
    coefficient vector is c * HM^-1 mu_vec.
    """
    basis = hm.row_basis
    if mu.basis.indices != basis.indices:
        raise ValueError("moment vector and matrix bases do not match")
    d, m = basis.dim, basis.degree
    c = moment_ratio_constant(d, m)
    coeffs = c * _solve_hm(hm, mu.values)
    return HomogeneousForm.from_coefficients(
        d, m, dict(zip(basis.indices, coeffs))
    )


def fixed_point_residual(g, hm, mu):
    """Relative residual |HM g - c mu| / |c mu| of the recovery system."""
    basis = hm.row_basis
    gvec = g.coeff_vector(basis)
    c = moment_ratio_constant(basis.dim, basis.degree)
    rhs = c * mu.values
    return float(np.linalg.norm(hm.entries @ gvec - rhs) / np.linalg.norm(rhs))


def tilde_coeffs(onb, g):
    """Coefficients of g in the orthonormal basis: L^T g."""
    return onb.factor.T @ g.coeff_vector(onb.basis)


def tilde_moments(onb, mu):
    """Degree-m moments in the orthonormal basis: L^-1 mu_vec."""
    return solve_triangular(onb.factor, mu.values, lower=True)


def partition_from_identities(g, hm, mu):
    """The two closed-form partition-function values.

    Returns (z_coeffs, z_moments) =
    (m^2 * g^T HM g / (d*(d+m)), ((d+m)/d) * mu^T HM^-1 mu).
    """
    basis = hm.row_basis
    d, m = basis.dim, basis.degree
    gvec = g.coeff_vector(basis)
    z_coeffs = m * m * float(gvec @ hm.entries @ gvec) / (d * (d + m))
    z_moments = (d + m) / d * float(mu.values @ _solve_hm(hm, mu.values))
    return z_coeffs, z_moments


def cd_kernel(hm, x, y):
    """Reproducing kernel K(x,y) = v_m(x)^T HM^-1 v_m(y)."""
    basis = hm.row_basis
    vx = monomial_matrix(np.atleast_2d(x), basis.indices)[0]
    vy = monomial_matrix(np.atleast_2d(y), basis.indices)[0]
    return float(vx @ _solve_hm(hm, vy))


def cd_identity_residual(g, hm, mu, x):
    """Residual of g(x) = c * v_m(x)^T HM^-1 mu_vec, relative to max(1,|g|)."""
    basis = hm.row_basis
    c = moment_ratio_constant(basis.dim, basis.degree)
    vx = monomial_matrix(np.atleast_2d(x), basis.indices)[0]
    gx = g.evaluate(np.asarray(x, dtype=float))
    pred = c * float(vx @ _solve_hm(hm, mu.values))
    return abs(gx - pred) / max(1.0, abs(gx))


@dataclass(frozen=True)
class FixedPointReport:
    """Summary of the recovery diagnostics for one action."""

    g_recovered: HomogeneousForm
    residual_canonical: float
    residual_tilde: float
    z_direct: float
    z_from_coeffs: float
    z_from_moments: float
    c2n: float


def fixed_point_report(g, rule=None):
    """Run the full recovery suite for one action."""
    d, m = g.dim, g.degree
    hm = mu_moment_matrix(g, rule=rule)
    mu = mu_moment_vector(g, m, rule=rule)
    onb = orthonormalize(hm)
    c = moment_ratio_constant(d, m)
    gt = tilde_coeffs(onb, g)
    mt = tilde_moments(onb, mu)
    z_coeffs, z_moments = partition_from_identities(g, hm, mu)
    return FixedPointReport(
        g_recovered=recover_form(hm, mu),
        residual_canonical=fixed_point_residual(g, hm, mu),
        residual_tilde=float(
            np.linalg.norm(gt - c * mt) / np.linalg.norm(c * mt)
        ),
        z_direct=partition_function_direct(g, rule=rule),
        z_from_coeffs=z_coeffs,
        z_from_moments=z_moments,
        c2n=c,
    )
