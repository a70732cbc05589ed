"""Moments of the measure exp(-g(x))dx and of Lebesgue measure on the
sublevel set G = {g <= 1}, plus the direct partition-function route.

Everything is computed through the polar representation

    int_G x^alpha dx = (d+|a|)^-1 * int_{S^{d-1}} t^a g(t)^(-(d+|a|)/m) ds(t)

(m = deg g), whose integrand is smooth on a compact domain, and the
Boltzmann side follows by the Gamma-factor transfer
int x^a exp(-g) dx = Gamma(1+(d+|a|)/m) * int_G x^a dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError
from .polyform import check_action, enumerate_basis, monomial_matrix
from .spherequad import build_rule

#: adaptive protocol: compare exactness e against 2e, accept below this
#: relative difference, escalate e up to the cap, then error out.
ADAPTIVE_RTOL = 1e-9
ADAPTIVE_CAP = 512


@dataclass(frozen=True)
class MomentVector:
    """Degree-graded moments of a measure in the graded monomial basis."""

    basis: object
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} values, got {v.shape}")
        object.__setattr__(self, "values", v)

    def __getitem__(self, alpha):
        return float(self.values[self.basis.position(alpha)])


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetric moment matrix indexed by a graded monomial basis."""

    row_basis: object
    entries: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        s = self.row_basis.size
        if m.shape != (s, s):
            raise ValueError(f"expected a {s}x{s} matrix, got {m.shape}")
        object.__setattr__(self, "entries", 0.5 * (m + m.T))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.entries)[0])


def _surface_power_vector(g, m, rule):
    """One-shot surface quadrature of t^alpha * g(t)^(-(d+m)/deg) for all
    |alpha| = m, returning the level-set moment vector at that resolution."""
    d = g.dim
    basis = enumerate_basis(d, m)
    gv = g.evaluate(rule.nodes)
    if np.any(gv <= 0.0):
        raise QuadratureError("form non-positive at a quadrature node")
    p = (d + m) / g.degree
    wg = rule.weights * gv ** (-p)
    mono = monomial_matrix(rule.nodes, basis.indices)
    return (mono.T @ wg) / (d + m)


def levelset_moment_vector(g, m, rule=None, rtol=ADAPTIVE_RTOL, start=8):
    """All integrals int_G x^alpha dx with |alpha| = m, as a numpy vector.

    With an explicit rule the integral is evaluated once at that rule's
    resolution; otherwise the adaptive doubling protocol is applied (accept
    when the e vs 2e sup-norm difference is below rtol relative to the
    vector magnitude, escalate up to exactness 512 then 1024, else raise).
    """
    check_action(g)

    def clean(vec):
        basis = enumerate_basis(g.dim, m)
        for i, alpha in enumerate(basis.indices):
            if structural_zero(g, alpha):
                vec[i] = 0.0
        return vec

    if rule is not None:
        return clean(_surface_power_vector(g, m, rule))
    e = start
    prev = _surface_power_vector(g, m, build_rule(g.dim, e))
    while e <= ADAPTIVE_CAP:
        cur = _surface_power_vector(g, m, build_rule(g.dim, 2 * e))
        scale = max(float(np.abs(cur).max()), 1e-300)
        if float(np.abs(cur - prev).max()) <= rtol * scale:
            return clean(cur)
        prev = cur
        e *= 2
    raise QuadratureError(
        f"surface quadrature did not converge below {rtol:g} "
        f"for degree {m} (exactness cap {2 * ADAPTIVE_CAP})"
    )


def structural_zero(g, alpha):
    """True when int x^alpha over any g-symmetric measure vanishes exactly.

    Covers odd total degree (g has even degree, so the measure is centrally
    symmetric) and, coordinate by coordinate, odd alpha_i whenever every
    term of g has even degree in x_i (the measure is then invariant under
    flipping the sign of that coordinate alone).
    """
    if sum(alpha) % 2:
        return True
    for i, a in enumerate(alpha):
        if a % 2 and all(beta[i] % 2 == 0 for beta, _ in g.terms):
            return True
    return False


def levelset_moment(g, alpha, rule=None, rtol=ADAPTIVE_RTOL):
    """int_G x^alpha dx for the sublevel set G = {g <= 1}.

    Structurally zero moments (see structural_zero) are returned as exact
    0.0 without quadrature.
    """
    alpha = tuple(int(a) for a in alpha) if np.ndim(alpha) else (int(alpha),)
    m = sum(alpha)
    if structural_zero(g, alpha):
        check_action(g)
        return 0.0
    basis = enumerate_basis(g.dim, m)
    vec = levelset_moment_vector(g, m, rule=rule, rtol=rtol)
    return float(vec[basis.position(alpha)])


def _transfer_factor(g, m):
    return math.gamma(1.0 + (g.dim + m) / g.degree)


def mu_moment(g, alpha, rule=None, rtol=ADAPTIVE_RTOL):
    """int x^alpha exp(-g) dx, through the level-set route."""
    alpha = tuple(int(a) for a in alpha) if np.ndim(alpha) else (int(alpha),)
    return _transfer_factor(g, sum(alpha)) * levelset_moment(
        g, alpha, rule=rule, rtol=rtol
    )


def mu_moment_vector(g, m, rule=None, rtol=ADAPTIVE_RTOL):
    """MomentVector of all degree-m moments of exp(-g)dx."""
    vec = levelset_moment_vector(g, m, rule=rule, rtol=rtol)
    return MomentVector(
        basis=enumerate_basis(g.dim, m),
        values=_transfer_factor(g, m) * vec,
        provenance=f"exp(-g)dx degree {m} via polar quadrature",
    )


def _matrix_from_degree_vector(basis, vec4, values):
    s = basis.size
    out = np.empty((s, s))
    for i, a in enumerate(basis.indices):
        for j, b in enumerate(basis.indices):
            if j < i:
                continue
            gam = tuple(x + y for x, y in zip(a, b))
            out[i, j] = out[j, i] = values[vec4.position(gam)]
    return out


def mu_moment_matrix(g, rule=None, rtol=ADAPTIVE_RTOL, psd_tol=1e-10):
    """Moment matrix of exp(-g)dx on the degree-(deg/2) monomial basis,
    with entries the degree-deg moments; raises QuadratureError if it comes
    out indefinite beyond tolerance (a sign of quadrature failure)."""
    d, m = g.dim, g.degree
    basis = enumerate_basis(d, m)
    vec = mu_moment_vector(g, 2 * m, rule=rule, rtol=rtol)
    entries = _matrix_from_degree_vector(basis, vec.basis, vec.values)
    hm = MomentMatrix(basis, entries, provenance=vec.provenance)
    lo = hm.min_eigenvalue()
    if lo < -psd_tol * np.trace(hm.entries):
        raise QuadratureError(
            f"moment matrix indefinite (min eigenvalue {lo:.3e}); "
            "quadrature likely failed"
        )
    return hm


def partition_function_direct(g, rule=None, rtol=ADAPTIVE_RTOL):
    """Z(g) = Gamma(1+d/deg) * vol(G) with vol(G) by polar quadrature."""
    zero = (0,) * g.dim
    return math.gamma(1.0 + g.dim / g.degree) * levelset_moment(
        g, zero, rule=rule, rtol=rtol
    )


def lambda_mu_matrix_relation(g, rtol=ADAPTIVE_RTOL):
    """Relative Frobenius residual of the proportionality between the
    sublevel-set moment matrix and the Boltzmann one:

        HM(lebesgue on G) = HM(exp(-g)dx) / Gamma(1+(d+2*deg)/deg).

    The two sides are evaluated on deliberately different node sequences
    (start exactness 8 vs 12) so the identity is checked across independent
    quadratures rather than by construction.
    """
    d, m = g.dim, g.degree
    basis = enumerate_basis(d, m)
    vec4 = enumerate_basis(d, 2 * m)
    lam_vals = levelset_moment_vector(g, 2 * m, rtol=rtol, start=8)
    mu_vals = _transfer_factor(g, 2 * m) * levelset_moment_vector(
        g, 2 * m, rtol=rtol, start=12
    )
    lam = _matrix_from_degree_vector(basis, vec4, lam_vals)
    mu = _matrix_from_degree_vector(basis, vec4, mu_vals)
    ref = mu / _transfer_factor(g, 2 * m)
    return float(np.linalg.norm(lam - ref) / np.linalg.norm(ref))
