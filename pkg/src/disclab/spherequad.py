"""Quadrature on the unit sphere S^{d-1} and closed-form reference moments.

Deterministic rules are antipodally symmetric, so odd integrands cancel to
quadrature noise.  d=1 is the two-point set {-1,+1}; d=2 the periodic
trapezoid; d=3,4 a product of a Gauss rule in the polar cosine with the
lower-dimensional sphere rule; d>=5 falls back to seeded Monte Carlo with
a standard-error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

_MC_SEED = 20240817
_MC_CAP = 2**20


def surface_area(d):
    """Surface area of S^{d-1}: 2*pi^(d/2)/Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def surface_moment(d, alpha):
    """Closed-form value of the surface integral of theta^alpha over S^{d-1}.

    Equals 2*prod_i Gamma((alpha_i+1)/2) / Gamma((|alpha|+d)/2) when every
    alpha_i is even, 0 otherwise.  Serves as the independent oracle against
    which the quadrature rules are validated.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d:
        raise ValueError(f"multi-index length {len(alpha)} != {d}")
    if any(a % 2 for a in alpha):
        return 0.0
    s = sum(alpha)
    lg = sum(math.lgamma((a + 1) / 2.0) for a in alpha)
    return 2.0 * math.exp(lg - math.lgamma((s + d) / 2.0))


def box_moment(d, alpha):
    """Integral of x^alpha over the unit box [-1,1]^d."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d:
        raise ValueError(f"multi-index length {len(alpha)} != {d}")
    if any(a % 2 for a in alpha):
        return 0.0
    out = 1.0
    for a in alpha:
        out *= 2.0 / (a + 1)
    return out


def ball_moment(d, alpha):
    """Integral of x^alpha over the unit ball (radial reduction of the
    surface moment: surface_moment/(d+|alpha|))."""
    s = sum(int(a) for a in alpha)
    return surface_moment(d, alpha) / (d + s)


@dataclass(frozen=True)
class SphereRule:
    """Quadrature nodes/weights on S^{d-1}.

    `exactness` is the monomial degree up to which surface integrals are
    exact; 0 for statistical (Monte Carlo) rules.
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int
    label: str

    @property
    def statistical(self):
        return self.exactness == 0 and self.label == "montecarlo"

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))


def _circle_rule(exactness):
    n = exactness + 1
    if n % 2:
        n += 1  # keep the node set antipodally symmetric
    theta = 2.0 * math.pi * (np.arange(n) + 0.5) / n
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(n, 2.0 * math.pi / n)
    return nodes, weights


def _chebyshev_u_rule(n):
    """Gauss rule for the weight sqrt(1-u^2) on [-1,1] (closed form)."""
    k = np.arange(1, n + 1)
    u = np.cos(k * math.pi / (n + 1))
    w = (math.pi / (n + 1)) * np.sin(k * math.pi / (n + 1)) ** 2
    return u, w


def _product_rule(d, exactness):
    n_u = (exactness + 2) // 2
    if d == 3:
        u, wu = np.polynomial.legendre.leggauss(n_u)
    else:
        u, wu = _chebyshev_u_rule(n_u)
    sub = build_rule(d - 1, exactness)
    r = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    nodes = []
    weights = []
    for ui, ri, wi in zip(u, r, wu):
        nodes.append(np.column_stack([np.full(len(sub.nodes), ui), ri * sub.nodes]))
        weights.append(wi * sub.weights)
    return np.vstack(nodes), np.concatenate(weights)


@lru_cache(maxsize=256)
def build_rule(d, exactness):
    """Build a quadrature rule on S^{d-1} with the requested exactness.

    d=1: the two points +-1 with unit weights; d=2: equally spaced angles;
    d=3,4: Gauss (Legendre / Chebyshev-U) polar cosine x lower sphere rule;
    d>=5: seeded Monte Carlo with 4^ceil(e/2) nodes capped at 2^20,
    reported exactness 0.
    """
    if d < 1:
        raise ValueError(f"unsupported dimension {d}")
    exactness = max(int(exactness), 2)
    if d == 1:
        return SphereRule(1, np.array([[-1.0], [1.0]]), np.array([1.0, 1.0]),
                          exactness, "pair")
    if d == 2:
        nodes, weights = _circle_rule(exactness)
        return SphereRule(2, nodes, weights, exactness, "trapezoid")
    if d in (3, 4):
        nodes, weights = _product_rule(d, exactness)
        return SphereRule(d, nodes, weights, exactness, "product")
    n = min(4 ** math.ceil(exactness / 2), _MC_CAP)
    rng = np.random.default_rng(_MC_SEED)
    pts = rng.standard_normal((n, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    weights = np.full(n, surface_area(d) / n)
    return SphereRule(d, pts, weights, 0, "montecarlo")


def _node_values(rule, f):
    vals = None
    try:
        vals = np.asarray(f(rule.nodes), dtype=float)
    except Exception:
        vals = None
    if vals is None or vals.shape != (len(rule.nodes),):
        vals = np.array([float(f(p)) for p in rule.nodes])
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise QuadratureError(
            f"non-finite integrand value at node {bad}: {rule.nodes[bad]}"
        )
    return vals


def integrate_surface(rule, f, with_stderr=False):
    """Quadrature of a scalar function over S^{d-1}.

    `f` may be vectorized over an (N, d) batch of nodes or accept single
    points.  With with_stderr=True returns (value, stderr); the stderr is 0
    for deterministic rules.
    """
    vals = _node_values(rule, f)
    total = float(np.add.reduce(rule.weights * vals))
    if not with_stderr:
        return total
    if rule.statistical:
        n = len(vals)
        err = surface_area(rule.dim) * float(np.std(vals)) / math.sqrt(n)
    else:
        err = 0.0
    return total, err
