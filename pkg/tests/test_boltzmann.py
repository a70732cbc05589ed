import math

import numpy as np
import pytest

from disclab import (
    lambda_mu_matrix_relation,
    levelset_moment,
    mu_moment,
    mu_moment_matrix,
    mu_moment_vector,
    parse_form,
    partition_function_direct,
)
from tests.conftest import quartic_family


def gaussian_moment_1d(k):
    """int x^(2k) exp(-x^2) dx = Gamma(k + 1/2)."""
    return math.gamma(k + 0.5)


def quartic_moment_1d(k):
    """int x^(2k) exp(-x^4) dx = Gamma((2k+1)/4) / 2."""
    return 0.5 * math.gamma((2 * k + 1) / 4.0)


def test_gaussian_moments_d2():
    g = parse_form("x1^2 + x2^2", 2)
    for a in range(0, 5, 2):
        for b in range(0, 5, 2):
            want = gaussian_moment_1d(a // 2) * gaussian_moment_1d(b // 2)
            got = mu_moment(g, (a, b))
            assert abs(got - want) <= 1e-10 * want


def test_quartic_moments_d1():
    g = parse_form("x1^4", 1)
    for k in range(5):
        want = quartic_moment_1d(k)
        got = mu_moment(g, (2 * k,))
        assert abs(got - want) <= 1e-10 * want


def test_odd_moments_are_exactly_zero():
    g = parse_form("x1^4 + x2^4", 2)
    assert mu_moment(g, (1, 0)) == 0.0
    assert mu_moment(g, (3, 2)) == 0.0
    assert levelset_moment(g, (1, 2)) == 0.0


def test_partition_gaussian_is_pi():
    g = parse_form("x1^2 + x2^2", 2)
    z = partition_function_direct(g)
    assert abs(z - math.pi) <= 1e-9 * math.pi


def test_partition_quartic_d1():
    z = partition_function_direct(parse_form("x1^4", 1))
    want = 2.0 * math.gamma(1.25)
    assert abs(z - want) <= 1e-9 * want


def test_superellipse_volume():
    g = parse_form("x1^4 + x2^4", 2)
    want = 4.0 * math.gamma(1.25) ** 2 / math.gamma(1.5)
    got = levelset_moment(g, (0, 0))
    assert abs(got - want) <= 1e-9 * want


def test_transfer_identity_links_measures():
    g = parse_form("x1^4 + 0.3*x1^2*x2^2 + 0.8*x2^4", 2)
    for alpha in [(0, 0), (2, 0), (2, 2), (4, 0)]:
        factor = math.gamma(1.0 + (2 + sum(alpha)) / 4.0)
        lhs = mu_moment(g, alpha)
        rhs = factor * levelset_moment(g, alpha)
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)


def test_moments_against_tensor_grid():
    # brute-force plane quadrature as a fully independent oracle
    g = quartic_family(count=1, seed=99)[0]
    x = np.linspace(-6.0, 6.0, 1201)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    dens = np.exp(-g.evaluate(pts)).reshape(xx.shape)
    h = x[1] - x[0]
    for alpha in [(0, 0), (2, 0), (0, 2), (2, 2), (4, 0)]:
        w = (xx ** alpha[0]) * (yy ** alpha[1]) * dens
        brute = np.trapezoid(np.trapezoid(w, dx=h, axis=1), dx=h)
        got = mu_moment(g, alpha)
        assert abs(got - brute) <= 1e-6 * abs(brute)


def test_moment_vector_consistent_with_scalars():
    g = parse_form("x1^4 + x2^4", 2)
    vec = mu_moment_vector(g, 4)
    for alpha in vec.basis.indices:
        assert abs(vec[alpha] - mu_moment(g, alpha)) <= 1e-12 * (
            abs(vec[alpha]) + 1e-300
        )


def test_moment_matrix_is_psd(quartics):
    for g in quartics[:5]:
        hm = mu_moment_matrix(g)
        assert hm.min_eigenvalue() > 0.0
        np.testing.assert_allclose(hm.entries, hm.entries.T)


def test_matrix_relation_residual(quartics):
    for g in quartics[:5]:
        assert lambda_mu_matrix_relation(g) <= 1e-8


def test_degenerate_action_rejected():
    from disclab import DegenerateActionError

    with pytest.raises(DegenerateActionError):
        partition_function_direct(parse_form("x1^2*x2^2", 2))
