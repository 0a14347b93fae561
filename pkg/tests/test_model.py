"""Utility families, spec validation, and exactness of the series closed forms."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpersuade.model import (ArrivalRates, LinearUtility, ModelSpec,
                             MultiTypeSpec, TabulatedUtility,
                             full_info_threshold, geometric_partial_sum,
                             geometric_weighted_tail, head_weighted_sum,
                             linear_spec, u_eval, validate_utility)

from oracles import brute_g, brute_series_from, linear_u, tabulated_u


def test_linear_values():
    u = LinearUtility(0.15)
    assert u_eval(u, 0) == pytest.approx(0.85, abs=1e-15)
    assert u_eval(u, 6) == pytest.approx(-0.05, abs=1e-15)


def test_tabulated_extrapolation():
    u = TabulatedUtility([0.8, 0.5], 0.2)
    assert u_eval(u, 0) == 0.8
    assert u_eval(u, 1) == 0.5
    assert u_eval(u, 3) == pytest.approx(0.1, abs=1e-15)


def test_u_eval_rejects_negative_length():
    with pytest.raises(ValueError):
        u_eval(LinearUtility(0.2), -1)


def test_validate_linear_clean():
    assert validate_utility(LinearUtility(0.15)) == []
    assert validate_utility(LinearUtility(0.15), require_diminishing=True) == []


def test_validate_reports_nondecreasing_index():
    out = validate_utility(TabulatedUtility([0.5, 0.6], 0.1))
    assert len(out) == 1
    assert "u(1)" in out[0]


def test_validate_diminishing_cases():
    # increments 0.4, 0.2, then tail 0.1: strictly diminishing, no complaint
    assert validate_utility(TabulatedUtility([0.9, 0.5, 0.3], 0.1),
                            require_diminishing=True) == []
    # increments 0.1 then 0.3: grows, must be flagged only when asked
    grows = TabulatedUtility([0.9, 0.8, 0.5], 0.1)
    assert validate_utility(grows) == []
    assert validate_utility(grows, require_diminishing=True) != []


def test_validate_nonpositive_start():
    out = validate_utility(TabulatedUtility([-0.1, -0.2], 0.1))
    assert any("u(0)" in v for v in out)


def test_full_info_threshold_examples():
    assert full_info_threshold(LinearUtility(0.15)) == 6
    # u(1) = 1 - 0.5 * 2 = 0 exactly, and zero still joins, so the first
    # strictly negative index is 2
    assert full_info_threshold(LinearUtility(0.5)) == 2
    assert full_info_threshold(TabulatedUtility([0.3, 0.1, 0.0], 0.1)) == 3


@given(st.floats(min_value=0.01, max_value=0.99))
def test_full_info_threshold_brackets_sign_change(c):
    u = LinearUtility(c)
    m = full_info_threshold(u)
    assert m >= 1
    assert u_eval(u, m - 1) >= 0.0 > u_eval(u, m)


def test_arrival_rate_validation():
    with pytest.raises(ValueError):
        ArrivalRates(0.0, 0.5)
    with pytest.raises(ValueError):
        ArrivalRates(0.5, -0.1)
    with pytest.raises(ValueError):
        ArrivalRates(0.6, 0.6)
    assert ArrivalRates(0.4, 0.6).total == pytest.approx(1.0)


def test_model_spec_rejects_bad_utilities():
    with pytest.raises(ValueError):
        linear_spec(0.5, 0.0, 1.5)
    with pytest.raises(ValueError):
        ModelSpec(ArrivalRates(0.5, 0.0), TabulatedUtility([0.5, 0.6], 0.1),
                  LinearUtility(0.2))


def test_model_spec_properties():
    spec = linear_spec(0.13, 0.87, 0.15)
    assert spec.lam_l == 0.13
    assert spec.lam_h == 0.87
    assert spec.lam == pytest.approx(1.0)
    assert spec.m_fi == 6


def test_multitype_spec_validation():
    u = LinearUtility(0.15)
    with pytest.raises(ValueError):
        MultiTypeSpec([0.5, 0.6], [0.0, -math.inf], [u, u])
    with pytest.raises(ValueError):
        MultiTypeSpec([0.5], [math.inf], [u])
    with pytest.raises(ValueError):
        MultiTypeSpec([0.2, 0.3], [0.0], [u, u])
    mt = MultiTypeSpec([0.2, 0.7], [0.0, -math.inf], [u, u])
    assert mt.n_types == 2
    assert mt.total_rate == pytest.approx(0.9)


# -- closed-form series against truncated summation -------------------------


@given(st.floats(min_value=0.0, max_value=0.99),
       st.floats(min_value=0.05, max_value=0.6))
def test_linear_tail_series_matches_truncation(q, c):
    u = LinearUtility(c)
    exact = geometric_weighted_tail(u, q, 0)
    brute = brute_g(linear_u(c), q, n_terms=10_000)
    assert exact == pytest.approx(brute, abs=1e-10)


@given(st.floats(min_value=0.0, max_value=0.99),
       st.integers(min_value=0, max_value=9))
def test_tabulated_tail_series_matches_truncation(q, start):
    u = TabulatedUtility([0.9, 0.7, 0.6, 0.55], 0.2)
    exact = geometric_weighted_tail(u, q, start)
    brute = brute_series_from(tabulated_u([0.9, 0.7, 0.6, 0.55], 0.2), q,
                              start, n_terms=10_000)
    assert exact == pytest.approx(brute, abs=1e-10)


def test_series_diverges_at_unit_ratio():
    assert geometric_weighted_tail(LinearUtility(0.3), 1.0, 0) == -math.inf


def test_partial_sums_exact_at_unit_ratio():
    assert geometric_partial_sum(1.0, 4) == 5.0
    assert head_weighted_sum(LinearUtility(0.5), 1.0, 2) == pytest.approx(0.5)


@given(st.floats(min_value=0.0, max_value=0.999),
       st.integers(min_value=0, max_value=30))
def test_partial_sum_closed_form(q, m):
    brute = sum(q ** k for k in range(m + 1))
    assert geometric_partial_sum(q, m) == pytest.approx(brute, rel=1e-12)
