import numpy as np
import pytest

from disclab import HomogeneousForm
from disclab.fixedpoint import fixed_point_report

FAMILY_SEED = 20240817


def square_of_quadratic(a, b, c):
    """Coefficients of (a*x1^2 + b*x1*x2 + c*x2^2)^2 in d=2, degree 4."""
    return {
        (4, 0): a * a,
        (3, 1): 2 * a * b,
        (2, 2): b * b + 2 * a * c,
        (1, 3): 2 * b * c,
        (0, 4): c * c,
    }


def quartic_family(count=20, eps=0.1, seed=FAMILY_SEED):
    """Seeded positive quartics in d=2: eps*|x|^4 plus two squared random
    quadratics.  Strictly positive away from 0 by the eps term."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        coeffs = {
            (4, 0): eps,
            (2, 2): 2 * eps,
            (0, 4): eps,
            (3, 1): 0.0,
            (1, 3): 0.0,
        }
        for _ in range(2):
            a, b, c = rng.standard_normal(3)
            for k, v in square_of_quadratic(a, b, c).items():
                coeffs[k] += v
        out.append(HomogeneousForm.from_coefficients(2, 4, coeffs))
    return out


@pytest.fixture(scope="session")
def quartics():
    return quartic_family()


@pytest.fixture(scope="session")
def quartic_reports(quartics):
    return [fixed_point_report(g) for g in quartics]
