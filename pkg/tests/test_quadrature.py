import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlab.errors import EvaluationError, InvalidParameterError
from hamlab.quadrature import (
    GridFunction,
    constant,
    integrate,
    make_rule,
    sample,
    sup_distance,
    sup_norm,
)


class TestGaussLegendre:
    @pytest.mark.parametrize("m", [2, 3, 5, 8, 16, 33, 64])
    def test_matches_numpy_leggauss(self, m):
        rule = make_rule("gauss_legendre", m)
        x, w = np.polynomial.legendre.leggauss(m)
        np.testing.assert_allclose(rule.nodes, (x + 1) / 2, rtol=0, atol=1e-14)
        np.testing.assert_allclose(rule.weights, w / 2, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("m", [2, 4, 7, 12])
    def test_exact_for_degree_2m_minus_1(self, m):
        rule = make_rule("gauss_legendre", m)
        for d in range(2 * m):
            assert integrate(rule, rule.nodes**d) == pytest.approx(1.0 / (d + 1), rel=1e-13)

    def test_weights_positive_and_sum_to_one(self):
        rule = make_rule("gauss_legendre", 40)
        assert np.all(rule.weights > 0)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)

    def test_nodes_are_interior_and_symmetric(self):
        rule = make_rule("gauss_legendre", 11)
        assert rule.nodes.min() > 0 and rule.nodes.max() < 1
        np.testing.assert_allclose(rule.nodes + rule.nodes[::-1], 1.0, atol=1e-15)

    def test_arrays_are_read_only(self):
        rule = make_rule("gauss_legendre", 6)
        with pytest.raises(ValueError):
            rule.nodes[0] = 0.0


class TestCompositeSimpson:
    @pytest.mark.parametrize("m", [3, 4, 5, 6, 11, 100])
    def test_exact_for_cubics(self, m):
        rule = make_rule("composite_simpson", m)
        for d in range(4):
            assert integrate(rule, rule.nodes**d) == pytest.approx(1.0 / (d + 1), rel=1e-13)

    def test_converges_on_smooth_integrand(self):
        errs = []
        for m in (11, 21, 41):
            rule = make_rule("composite_simpson", m)
            errs.append(abs(integrate(rule, np.exp(rule.nodes)) - (math.e - 1)))
        assert errs[1] < errs[0] / 10 and errs[2] < errs[1] / 10


class TestMakeRule:
    def test_cached_and_equal(self):
        assert make_rule("gauss_legendre", 9) is make_rule("gauss_legendre", 9)
        assert make_rule("gauss_legendre", 9) != make_rule("composite_simpson", 9)

    @pytest.mark.parametrize("m", [0, 1, -3, 2.5])
    def test_rejects_bad_count(self, m):
        with pytest.raises(InvalidParameterError):
            make_rule("gauss_legendre", m)

    def test_rejects_unknown_scheme(self):
        with pytest.raises(InvalidParameterError):
            make_rule("trapezoid", 8)


class TestGridFunction:
    def setup_method(self):
        self.rule = make_rule("gauss_legendre", 8)

    def test_arithmetic(self):
        f = GridFunction(self.rule, self.rule.nodes)
        g = constant(self.rule, 2.0)
        np.testing.assert_allclose((f + g).values, self.rule.nodes + 2)
        np.testing.assert_allclose((f - g).values, self.rule.nodes - 2)
        np.testing.assert_allclose((3 * f * g).values, 6 * self.rule.nodes)
        np.testing.assert_allclose((f**2).values, self.rule.nodes**2)
        assert (f**2).integral() == pytest.approx(1 / 3, rel=1e-14)

    def test_rule_mismatch(self):
        f = constant(self.rule)
        g = constant(make_rule("gauss_legendre", 9))
        with pytest.raises(InvalidParameterError):
            f + g
        with pytest.raises(InvalidParameterError):
            sup_distance(f, g)

    def test_wrong_length(self):
        with pytest.raises(InvalidParameterError):
            GridFunction(self.rule, np.ones(3))

    def test_values_copied_and_frozen(self):
        raw = np.ones(8)
        f = GridFunction(self.rule, raw)
        raw[0] = 5.0
        assert f.values[0] == 1.0
        with pytest.raises(ValueError):
            f.values[0] = 2.0

    def test_sample_reports_bad_node(self):
        with pytest.raises(EvaluationError) as info:
            sample(lambda t: math.nan if t == self.rule.nodes[3] else 1.0, self.rule)
        assert info.value.index == 3

    def test_is_positive(self):
        assert constant(self.rule, 0.5).is_positive()
        assert not GridFunction(self.rule, self.rule.nodes - 0.5).is_positive()

    def test_norms(self):
        f = GridFunction(self.rule, self.rule.nodes - 0.9)
        assert sup_norm(f) == pytest.approx(0.9 - self.rule.nodes[0])
        assert sup_distance(f, f) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
    def test_integrates_polynomials_exactly(self, coeffs):
        rule = make_rule("gauss_legendre", 4)
        poly = np.polynomial.Polynomial(coeffs)
        exact = poly.integ()(1.0) - poly.integ()(0.0)
        assert integrate(rule, poly(rule.nodes)) == pytest.approx(exact, abs=1e-12)
