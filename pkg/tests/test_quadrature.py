import math

import numpy as np
import pytest

from cpn_entropy.eigenfunctions import phi_values_batch, special_phi
from cpn_entropy.moments import cpn_volume_closed_form
from cpn_entropy.quadrature import (QuadratureNonConvergence,
                                    adaptive_cpn_integral, chart_nodes,
                                    cpn_average_quad, cpn_integral,
                                    mc_sphere_average, simplex_rule,
                                    torus_grid)


def test_simplex_rule_integrates_to_simplex_volume():
    for N in (1, 2, 3):
        t, w = simplex_rule(N, 6)
        assert abs(np.sum(w) - 1.0 / math.factorial(N)) < 1e-14
        assert np.allclose(np.sum(t, axis=1), 1.0)
        assert np.all(t > 0)


def test_torus_grid_weight():
    pts, weight = torus_grid(2, 5)
    assert pts.shape == (25, 2)
    assert abs(weight * 25 - (2 * math.pi) ** 2) < 1e-12


@pytest.mark.parametrize("N", [1, 2, 3])
def test_unit_integrand_gives_volume(N):
    total = cpn_integral(lambda w: np.ones(w.shape[0]), N, 6, 6)
    assert abs(total - cpn_volume_closed_form(N)) < 1e-12


def test_average_of_one_is_one():
    assert abs(cpn_average_quad(lambda w: np.ones(w.shape[0]), 2, 5, 6) - 1.0) < 1e-13


def test_chunking_does_not_change_the_rule():
    def collect(max_chunk):
        total = 0.0
        count = 0
        for w, wts in chart_nodes(2, 4, 5, max_chunk=max_chunk):
            total += float(np.dot(wts, np.abs(w[:, 0]) ** 2 / (1 + np.abs(w[:, 0]) ** 2)))
            count += w.shape[0]
        return total, count

    t1, c1 = collect(10)
    t2, c2 = collect(100000)
    assert c1 == c2 == (4 ** 2) * (5 ** 2)
    assert abs(t1 - t2) < 1e-13


def test_phi_cubed_integral_matches_exact_value():
    # int phi^3 dV = (1/5) * pi^2/2 at N = 2
    form = special_phi(2)

    def phi3(w):
        return phi_values_batch(form, 0, w) ** 3

    value, err = adaptive_cpn_integral(phi3, 2, tol=1e-8)
    exact = 0.2 * cpn_volume_closed_form(2)
    assert abs(value - exact) / exact < 1e-12
    assert err < 1e-8


def test_adaptive_reports_achieved_error():
    # a needle the coarse levels cannot resolve: convergence fails within
    # the level budget and the achieved estimate is reported
    def needle(w):
        r2 = np.sum(np.abs(w) ** 2, axis=1)
        return np.exp(-4000.0 * (r2 - 0.7) ** 2)

    value, err = adaptive_cpn_integral(needle, 2, tol=1e-12, max_level=2)
    assert err > 1e-12
    with pytest.raises(QuadratureNonConvergence) as exc:
        adaptive_cpn_integral(needle, 2, tol=1e-12, max_level=2,
                              raise_on_failure=True)
    assert exc.value.error > 1e-12
    assert exc.value.value is not None


def test_mc_sphere_average_agrees_with_rule():
    form = special_phi(2)

    def phi2_z(z):
        num = np.einsum("bi,ij,bj->b", np.conj(z), form.matrix, z).real
        return num ** 2  # |z| = 1 on the sphere

    mean, se = mc_sphere_average(phi2_z, 2, 200_000, seed=3)
    assert abs(mean - 0.5) < 3 * se
    assert se < 5e-3
