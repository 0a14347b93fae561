"""Comparison anchors: full-information outcome, no-information equilibrium,
the two critical rates, and the dominance dichotomies."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpersuade.benchmarks import (critical_rate_high, critical_rate_low,
                                  critical_rate_low_lower_bound,
                                  full_info_dominated, full_info_outcome,
                                  no_info_dominated, no_info_distribution,
                                  no_info_equilibrium)
from qpersuade.model import (LinearUtility, TabulatedUtility,
                             full_info_threshold, linear_spec, u_eval)
from qpersuade.steady_state import threshold_distribution

from oracles import brute_g, linear_u, tabulated_u

# Root of 0.5 - 0.5 q - q**2 * (affine tail series) for the two-point table
# below, frozen from a bisection on the brute series: it solves
# q**2 - 3 q + 1 = 0 on (0, 1).
LAMBDA_BAR_H_TABLE = (3.0 - math.sqrt(5.0)) / 2.0


def test_full_info_outcome_examples():
    homog = linear_spec(0.5, 0.0, 0.15)
    out = full_info_outcome(homog)
    assert out.threshold == 6
    assert out.measures.w_l == pytest.approx(0.354331, abs=1e-6)
    assert out.measures.w_h == 0.0

    heavy = linear_spec(0.13, 0.87, 0.15)
    out = full_info_outcome(heavy)
    assert out.threshold == 6
    w_h_empty = full_info_outcome(heavy).measures.w_h
    from qpersuade.measures import threshold_measures
    assert w_h_empty < threshold_measures(heavy, 0.0).w_h

    assert full_info_outcome(linear_spec(0.3, 0.2, 0.45)).threshold == 2


def test_no_info_all_join():
    spec = linear_spec(0.5, 0.0, 0.15)
    ni = no_info_equilibrium(spec)
    assert ni.p_join == 1.0
    assert ni.ratio == pytest.approx(0.5)
    # g(0.5) = 2 - 0.6 = 1.4 > 0 keeps everyone in
    assert brute_g(linear_u(0.15), 0.5) > 0


def test_no_info_all_leave():
    spec = linear_spec(0.13, 0.87, 0.15)
    ni = no_info_equilibrium(spec)
    assert ni.p_join == 0.0
    assert ni.w_l == 0.0
    assert ni.w_h == pytest.approx(-0.13385, abs=5e-6)


def test_no_info_interior():
    spec = linear_spec(0.2, 0.8, 0.15)
    ni = no_info_equilibrium(spec)
    assert ni.p_join == pytest.approx(0.25, abs=1e-10)
    assert ni.ratio == pytest.approx(0.85, abs=1e-11)
    assert ni.w_l == pytest.approx(0.0, abs=1e-10)
    assert ni.w_h == pytest.approx(0.0, abs=1e-10)


def test_no_info_distribution_is_geometric():
    spec = linear_spec(0.2, 0.8, 0.15)
    dense = np.asarray(no_info_distribution(spec).to_dense(50))
    np.testing.assert_allclose(dense, 0.15 * 0.85 ** np.arange(51), atol=1e-11)


def test_critical_rate_high_linear_identity():
    for c in np.arange(0.05, 0.501, 0.05):
        assert critical_rate_high(LinearUtility(float(c))) == \
            pytest.approx(1.0 - float(c), abs=1e-10)


def test_critical_rate_high_tabulated():
    u = TabulatedUtility([0.5, -0.5], 0.5)
    root = critical_rate_high(u)
    assert root == pytest.approx(LAMBDA_BAR_H_TABLE, abs=1e-10)
    # verify against the brute series: sign change straddles the root
    f = tabulated_u([0.5, -0.5], 0.5)
    assert brute_g(f, root - 1e-6) > 0 > brute_g(f, root + 1e-6)


@given(st.floats(min_value=0.05, max_value=0.6),
       st.floats(min_value=0.0, max_value=0.9))
def test_critical_rate_low_properties(c, lam_h):
    u = LinearUtility(c)
    if u_eval(u, full_info_threshold(u) - 1) < 1e-9:
        return  # degenerate boundary, covered separately below
    root = critical_rate_low(u, lam_h)
    assert 0.0 < root <= 1.0 - lam_h + 1e-12
    assert root >= critical_rate_low_lower_bound(u, lam_h) - 1e-9


def test_critical_rate_low_degenerate_marginal_user():
    # u(m_fi - 1) = 0 exactly: the marginal admitted user is worthless, so
    # any positive low-need rate already makes full information dominated
    assert critical_rate_low(LinearUtility(0.5), 0.0) == 0.0
    assert full_info_dominated(linear_spec(0.01, 0.0, 0.5))


def test_critical_rate_low_sign_change():
    u = LinearUtility(0.15)
    root = critical_rate_low(u, 0.0)
    lo = linear_spec(max(root - 1e-4, 1e-6), 0.0, 0.15)
    hi = linear_spec(root + 1e-4, 0.0, 0.15)
    assert not full_info_dominated(lo)
    assert full_info_dominated(hi)


def test_full_info_dominated_examples():
    assert full_info_dominated(linear_spec(0.13, 0.87, 0.15))
    assert not full_info_dominated(linear_spec(0.001, 0.0, 0.15))


def test_no_info_dominated_examples():
    assert not no_info_dominated(linear_spec(0.1, 0.87, 0.15))
    assert no_info_dominated(linear_spec(0.1, 0.8, 0.15))
    assert no_info_dominated(linear_spec(0.5, 0.0, 0.15))


@given(st.floats(min_value=0.05, max_value=0.6),
       st.floats(min_value=0.0, max_value=0.85),
       st.floats(min_value=0.02, max_value=0.9))
def test_dominance_matches_critical_rates(c, lam_h, frac):
    u = LinearUtility(c)
    lam_l = frac * (1.0 - lam_h)
    if lam_l < 1e-6:
        return
    bar_l = critical_rate_low(u, lam_h)
    bar_h = critical_rate_high(u)
    if abs(lam_l - bar_l) < 1e-6 or abs(lam_h - bar_h) < 1e-6:
        return
    spec = linear_spec(lam_l, lam_h, c)
    assert full_info_dominated(spec) == (lam_l > bar_l)
    assert no_info_dominated(spec) == (lam_h < bar_h)


def test_homogeneous_no_info_bound():
    # all-join equilibria stay strictly below the scaled full-info welfare
    for lam_l in (0.3, 0.5, 0.8, 0.95):
        for c in (0.1, 0.15, 0.3):
            spec = linear_spec(lam_l, 0.0, c)
            ni = no_info_equilibrium(spec)
            fi = full_info_outcome(spec)
            if ni.p_join == 1.0:
                bound = (1.0 - lam_l ** (spec.m_fi + 1)) * fi.measures.w_l
                assert ni.w_l < bound + 1e-9
            else:
                # interior root found to 1e-12 in the ratio; welfare inherits
                # a few ulps more
                assert ni.w_l == pytest.approx(0.0, abs=1e-10)
