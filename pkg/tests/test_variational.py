import math

import numpy as np

from disclab import (
    best_approx_of_one,
    entropy_report,
    log_partition,
    moment_ratio_constant,
    mu_moment_matrix,
    mu_moment_vector,
    norm_minimality_check,
    parse_form,
    recover_form,
    ward_residuals,
)


def test_ward_mean_of_action():
    # alpha = 0 row: <g>/Z = d/m
    g = parse_form("x1^4 + x2^4", 2)
    res = ward_residuals(g, 0)
    assert res[(0, 0)] <= 1e-9


def test_ward_residuals_family(quartics):
    for g in quartics[:5]:
        res = ward_residuals(g, 4)
        assert max(res.values()) <= 1e-8


def test_ward_odd_rows_exact_zero():
    g = parse_form("x1^4 + x2^4", 2)
    res = ward_residuals(g, 3)
    for alpha, v in res.items():
        if sum(alpha) % 2:
            assert v == 0.0


def test_entropy_gaussian_d1():
    # density exp(-x^2)/sqrt(pi) is N(0, 1/2); entropy -ln sqrt(pi) - 1/2
    rep = entropy_report(parse_form("x1^2", 1))
    want = -math.log(math.sqrt(math.pi)) - 0.5
    assert abs(rep.entropy_primal - want) <= 1e-9
    assert abs(rep.entropy_closed - want) <= 1e-12
    assert rep.gap <= 1e-9


def test_entropy_closed_forms_differ_by_one():
    rep = entropy_report(parse_form("x1^4 + x2^4", 2))
    c2n = moment_ratio_constant(2, 4)
    assert abs(
        (rep.entropy_closed - rep.entropy_closed_c2n) - (c2n - 2.0 / 4.0)
    ) <= 1e-12


def test_entropy_gap_family(quartics):
    for g in quartics[:5]:
        rep = entropy_report(g)
        assert rep.gap <= 1e-8
        assert abs(rep.entropy_primal - rep.entropy_closed) <= 1e-7


def test_log_partition_flags_divergence():
    lp = log_partition(parse_form("x1^4", 1))
    assert lp.diverged
    assert lp.value == math.inf


def test_log_partition_matches_partition():
    g = parse_form("x1^4", 1)
    lp = log_partition(-g)
    assert not lp.diverged
    assert abs(lp.value - math.log(2.0 * math.gamma(1.25))) <= 1e-9


def test_best_approx_is_recovery_over_constant():
    g = parse_form("x1^4 + 0.4*x1^2*x2^2 + x2^4", 2)
    hm = mu_moment_matrix(g)
    mu = mu_moment_vector(g, 4)
    q = best_approx_of_one(hm, mu)
    rec = recover_form(hm, mu)
    c = moment_ratio_constant(2, 4)
    basis = hm.row_basis
    np.testing.assert_allclose(
        q.coeff_vector(basis), rec.coeff_vector(basis) / c,
        rtol=1e-12, atol=1e-14,
    )


def test_norm_minimality_small_run():
    g = parse_form("x1^4 + x2^4", 2)
    worst = norm_minimality_check(g, trials=25, seed=5)
    gnorm = float(np.sum(np.square(g.coeff_vector())))
    assert worst >= -1e-7 * gnorm
