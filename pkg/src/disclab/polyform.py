"""Homogeneous forms and multi-index bookkeeping.

Multi-indices are plain tuples of non-negative ints.  The canonical order
everywhere in this library is graded lexicographic: lower total degree
first, and within a degree the exponent of x1 decreases first, so for
d=2, m=2 the order is x1^2, x1*x2, x2^2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DegenerateActionError, FormParseError, MixedDegreeError


def enumerate_indices(d, m):
    """All multi-indices of length d with |alpha| = m, graded-lex order."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if m < 0:
        raise ValueError(f"degree must be >= 0, got {m}")
    if d == 1:
        return [(m,)]
    out = []
    for k in range(m, -1, -1):
        for rest in enumerate_indices(d - 1, m - k):
            out.append((k,) + rest)
    return out


def enumerate_indices_upto(d, m):
    """All multi-indices with |alpha| <= m, degrees ascending, grlex within."""
    out = []
    for k in range(m + 1):
        out.extend(enumerate_indices(d, k))
    return out


@dataclass(frozen=True)
class GradedBasis:
    """The monomial basis of degree-m forms in d variables."""

    dim: int
    degree: int
    indices: tuple

    @property
    def size(self):
        return len(self.indices)

    @cached_property
    def _positions(self):
        return {alpha: i for i, alpha in enumerate(self.indices)}

    def position(self, alpha):
        return self._positions[tuple(alpha)]

    def __contains__(self, alpha):
        return tuple(alpha) in self._positions


@lru_cache(maxsize=None)
def enumerate_basis(d, m):
    """The full graded basis for degree m in dimension d.

    Size is binomial(d-1+m, m).
    """
    return GradedBasis(dim=d, degree=m, indices=tuple(enumerate_indices(d, m)))


def monomial_matrix(points, indices):
    """Evaluate monomials x^alpha for each point and each multi-index.

    points: array of shape (N, d); returns array of shape (N, len(indices)).
    Uses a per-call power table so each coordinate power is computed once.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    exps = np.asarray(indices, dtype=int)
    if exps.ndim == 1:
        exps = exps[None, :]
    maxp = int(exps.max(initial=0))
    # pows[i, j, k] = points[i, j] ** k
    pows = pts[:, :, None] ** np.arange(maxp + 1)[None, None, :]
    cols = np.arange(d)[None, :]
    return np.prod(pows[:, cols, exps], axis=2)


@dataclass(frozen=True)
class HomogeneousForm:
    """A degree-m form in d variables as a sparse coefficient map.

    `terms` is a tuple of (multi-index, coefficient) pairs in graded-lex
    order with exact zeros dropped; instances are immutable and hashable.
    """

    dim: int
    degree: int
    terms: tuple

    @classmethod
    def from_coefficients(cls, dim, degree, coefficients):
        acc = {}
        for alpha, c in coefficients.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim:
                raise ValueError(f"multi-index {alpha} has length != {dim}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            if sum(alpha) != degree:
                raise ValueError(f"multi-index {alpha} has degree != {degree}")
            c = float(c)
            if c != 0.0:
                acc[alpha] = acc.get(alpha, 0.0) + c
        order = {a: i for i, a in enumerate(enumerate_indices(dim, degree))}
        terms = tuple(sorted(acc.items(), key=lambda kv: order[kv[0]]))
        return cls(dim=dim, degree=degree, terms=terms)

    @cached_property
    def coefficients(self):
        return dict(self.terms)

    def coeff_vector(self, basis=None):
        """Dense coefficient vector in the graded basis."""
        if basis is None:
            basis = enumerate_basis(self.dim, self.degree)
        v = np.zeros(basis.size)
        for alpha, c in self.terms:
            v[basis.position(alpha)] = c
        return v

    def evaluate(self, x):
        """Evaluate at a point of shape (d,) or a batch of shape (N, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise ValueError(f"point dimension {pts.shape[1]} != {self.dim}")
        if not self.terms:
            vals = np.zeros(pts.shape[0])
        else:
            mono = monomial_matrix(pts, [a for a, _ in self.terms])
            vals = mono @ np.array([c for _, c in self.terms])
        return float(vals[0]) if single else vals

    __call__ = evaluate

    def gradient(self, x):
        """Exact term-wise gradient at a single point."""
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.dim)
        for alpha, c in self.terms:
            for i, e in enumerate(alpha):
                if e == 0:
                    continue
                p = c * e
                for j, ej in enumerate(alpha):
                    k = ej - 1 if j == i else ej
                    if k:
                        p *= x[j] ** k
                g[i] += p
        return g

    def scaled(self, s):
        return HomogeneousForm(
            dim=self.dim,
            degree=self.degree,
            terms=tuple((a, float(s) * c) for a, c in self.terms),
        )

    def __mul__(self, s):
        return self.scaled(s)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scaled(-1.0)

    def __str__(self):
        return format_form(self)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x\d+)|(?P<op>[-+*^]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # skip trailing whitespace
            if text[pos:].strip() == "":
                break
            raise FormParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.lastgroup == "var":
            tokens.append(("var", int(m.group("var")[1:]), m.start("var")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


def parse_form(text, d):
    """Parse a homogeneous polynomial in variables x1..xd.

    Grammar: form := term (('+'|'-') term)*
             term := [coeff '*'?] factor ('*'? factor)*
             factor := 'x' INT ('^' INT)?
    Raises FormParseError (with position) on syntax errors, MixedDegreeError
    when terms have different total degrees, and FormParseError on variable
    indices outside 1..d.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    tokens = _tokenize(text)
    if not tokens:
        raise FormParseError("empty input", 0)
    acc = {}
    degree = None
    i = 0
    sign = 1.0
    # optional leading sign
    if tokens[0][0] == "op" and tokens[0][1] in "+-":
        sign = -1.0 if tokens[0][1] == "-" else 1.0
        i = 1
    while i < len(tokens):
        coeff = sign
        exps = [0] * d
        saw_factor = False
        # optional numeric coefficient
        if tokens[i][0] == "num":
            coeff *= tokens[i][1]
            i += 1
            if i < len(tokens) and tokens[i] == ("op", "*", tokens[i][2]):
                i += 1
        # factors
        while i < len(tokens) and (
            tokens[i][0] == "var"
            or (tokens[i][0] == "op" and tokens[i][1] == "*")
        ):
            if tokens[i][0] == "op":
                i += 1
                continue
            _, var, pos = tokens[i]
            if not 1 <= var <= d:
                raise FormParseError(
                    f"variable x{var} outside dimension {d}", pos
                )
            i += 1
            power = 1
            if (
                i < len(tokens)
                and tokens[i][0] == "op"
                and tokens[i][1] == "^"
            ):
                if i + 1 >= len(tokens) or tokens[i + 1][0] != "num":
                    raise FormParseError("expected exponent after '^'", tokens[i][2])
                power = tokens[i + 1][1]
                if power != int(power) or power < 0:
                    raise FormParseError(
                        f"exponent must be a non-negative integer, got {power}",
                        tokens[i + 1][2],
                    )
                power = int(power)
                i += 2
            exps[var - 1] += power
            saw_factor = True
        if not saw_factor:
            pos = tokens[i][2] if i < len(tokens) else len(text)
            raise FormParseError("expected a variable factor", pos)
        term_deg = sum(exps)
        if degree is None:
            degree = term_deg
        elif term_deg != degree:
            raise MixedDegreeError(
                f"mixed degrees: saw both {degree} and {term_deg}"
            )
        key = tuple(exps)
        acc[key] = acc.get(key, 0.0) + coeff
        # term separator
        if i < len(tokens):
            if tokens[i][0] != "op" or tokens[i][1] not in "+-":
                raise FormParseError(
                    f"expected '+' or '-', got {tokens[i][1]!r}", tokens[i][2]
                )
            sign = -1.0 if tokens[i][1] == "-" else 1.0
            i += 1
            if i >= len(tokens):
                raise FormParseError("dangling operator", len(text))
    return HomogeneousForm.from_coefficients(d, degree, acc)


def format_form(f):
    """Canonical text for a form; parse_form(format_form(f)) round-trips."""
    if not f.terms:
        return "0*" + "*".join(f"x{i+1}^0" for i in range(f.dim))
    parts = []
    for alpha, c in f.terms:
        factors = "*".join(
            f"x{i+1}^{e}" for i, e in enumerate(alpha) if e > 0
        )
        mag = abs(c)
        body = f"{mag!r}*{factors}" if factors else f"{mag!r}"
        if not parts:
            parts.append(body if c >= 0 else f"-{body}")
        else:
            parts.append(("+ " if c >= 0 else "- ") + body)
    return " ".join(parts)


def evaluate(f, x):
    return f.evaluate(x)


def gradient(f, x):
    return f.gradient(x)


def _sphere_samples(d, n):
    """Deterministic sample directions on the unit sphere."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        theta = 2.0 * math.pi * golden * np.arange(n)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if d == 3:
        # Fibonacci sphere lattice
        k = np.arange(n) + 0.5
        phi = math.pi * (1.0 + math.sqrt(5.0)) * k
        z = 1.0 - 2.0 * k / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((n, d))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _refine_on_sphere(f, x0, iters):
    """Projected-gradient descent of f restricted to the sphere."""
    x = np.array(x0, dtype=float)
    fx = f.evaluate(x)
    step = 0.1
    for _ in range(iters):
        grad = f.gradient(x)
        tang = grad - np.dot(grad, x) * x
        tnorm = np.linalg.norm(tang)
        if tnorm < 1e-15 * (1.0 + abs(fx)):
            break
        moved = False
        while step > 1e-18:
            y = x - step * tang
            y /= np.linalg.norm(y)
            fy = f.evaluate(y)
            if fy < fx:
                x, fx = y, fy
                step *= 1.5
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return fx


def min_on_sphere(f, coarse_samples=512, refine_iters=80):
    """Estimated minimum of f on the unit sphere (an upper bound on the
    true minimum): low-discrepancy coarse sampling followed by projected-
    gradient refinement from the 8 best starts."""
    if coarse_samples < 2 * f.dim:
        raise ValueError("coarse_samples must be >= 2*d")
    if f.dim == 1:
        return min(f.evaluate(np.array([1.0])), f.evaluate(np.array([-1.0])))
    pts = _sphere_samples(f.dim, coarse_samples)
    vals = f.evaluate(pts)
    best = np.argsort(vals)[:8]
    return min(_refine_on_sphere(f, pts[i], refine_iters) for i in best)


POSITIVITY_TOL = 1e-8


@lru_cache(maxsize=4096)
def sphere_minimum(f):
    """Memoized min_on_sphere (forms are immutable and hashable)."""
    return min_on_sphere(f)


def check_action(g, tol=POSITIVITY_TOL):
    """Validate that g is strictly positive away from the origin.

    Returns the estimated sphere minimum; raises DegenerateActionError when
    it falls at or below `tol` (integrands g^-p then blow up).
    """
    m = sphere_minimum(g)
    if m <= tol:
        raise DegenerateActionError(
            f"form is not positive on the sphere (min ~ {m:.3e})",
            sphere_min=m,
        )
    return m


def normalize_action(g, tol=POSITIVITY_TOL):
    """Rescale g so its sublevel set {g <= 1} fits in the closed unit ball.

    Returns (beta, beta*g) with beta = 1/min_on_sphere(g).  Results map
    back through Z(beta*g) = beta^(-d/deg) * Z(g) and the same power law
    for sublevel-set volumes.
    """
    m = check_action(g, tol)
    beta = 1.0 / m
    return beta, g.scaled(beta)
