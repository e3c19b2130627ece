import itertools
import math
import warnings

import numpy as np
import pytest

from hamlab.errors import DomainError, InvalidParameterError
from hamlab.gibbs import (
    FiniteVolume,
    boundary_law_residual,
    brute_force_partition_function,
    compatibility_residual,
    count_ti_gibbs,
    finite_volume_unnorm,
    log_partition_function,
    model_from_constructed,
    model_from_xi,
    partition_function,
    root_law,
    ti_gibbs_solutions,
)
from hamlab.kernel import build_kernel
from hamlab.operators import apply_R
from hamlab.quadrature import GridFunction, constant, make_rule
from hamlab.solver import SolveConfig, picard_R


def xi_tu(t, u):
    return t * u


@pytest.fixture(scope="module")
def model16():
    return model_from_xi(xi_tu, 1.0, 1.0, make_rule("gauss_legendre", 16), order_k=2)


@pytest.fixture(scope="module")
def law16(model16):
    return picard_R(model16.kernel, 2, constant(model16.rule), SolveConfig(tol=1e-13)).f


class TestFiniteVolume:
    def test_sizes(self):
        vol = FiniteVolume(3, 2)
        assert [vol.level_size(m) for m in range(4)] == [1, 3, 6, 12]
        assert vol.size == 22
        assert vol.level_slice(2) == slice(4, 10)

    def test_parents(self):
        vol = FiniteVolume(2, 2)
        assert vol.parents.tolist() == [-1, 0, 0, 0, 1, 1, 2, 2, 3, 3]

    def test_negative_depth(self):
        with pytest.raises(InvalidParameterError):
            FiniteVolume(-1, 2)


class TestModel:
    def test_transfer_matrix(self, model16):
        nodes = model16.rule.nodes
        np.testing.assert_allclose(model16.Q, np.exp(nodes[:, None] * nodes[None, :]), rtol=1e-15)

    @pytest.mark.parametrize("kwargs", [{"J": 0.0}, {"beta": 0.0}, {"order_k": 0}, {"order_k": 1.5}])
    def test_bad_params(self, kwargs):
        args = {"J": 1.0, "beta": 1.0, "order_k": 2}
        args.update(kwargs)
        with pytest.raises(InvalidParameterError):
            model_from_xi(xi_tu, args["J"], args["beta"], make_rule("gauss_legendre", 4), args["order_k"])

    def test_constructed_model(self):
        model = model_from_constructed(1, 1, 107)
        assert model.order_k == 107
        t = np.array([0.2, 0.7])
        np.testing.assert_allclose(np.exp(model.xi(t, t)), build_kernel(1, 1, 107)(t, t), rtol=1e-14)

    def test_constructed_below_threshold(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            with pytest.raises(DomainError):
                model_from_constructed(1, 1, 2)
        assert any("not guaranteed" in str(w.message) for w in caught)


class TestPartitionFunction:
    @pytest.mark.parametrize("depth", [0, 1, 2])
    def test_matches_brute_force(self, depth):
        model = model_from_xi(xi_tu, 1.0, 1.0, make_rule("gauss_legendre", 4), order_k=2)
        f = GridFunction(model.rule, 1 + model.rule.nodes)
        brute = brute_force_partition_function(model, depth, f)
        assert partition_function(model, depth, f) == pytest.approx(brute, rel=1e-12)

    def test_depth1_brute_force_m16(self, model16, law16):
        brute = brute_force_partition_function(model16, 1, law16)
        assert math.log(brute) == pytest.approx(log_partition_function(model16, 1, law16), abs=1e-12)

    def test_single_configuration(self):
        model = model_from_xi(xi_tu, 2.0, 0.5, make_rule("gauss_legendre", 3), order_k=2)
        f = GridFunction(model.rule, [1.0, 2.0, 3.0])
        sigma = np.array([0, 1, 2, 2])
        nodes = model.rule.nodes
        expected = np.exp(nodes[0] * (nodes[1] + 2 * nodes[2])) * 2.0 * 3.0 * 3.0
        assert finite_volume_unnorm(model, 1, sigma, f) == pytest.approx(expected, rel=1e-14)

    def test_bad_configuration(self):
        model = model_from_xi(xi_tu, 1.0, 1.0, make_rule("gauss_legendre", 3), order_k=2)
        with pytest.raises(InvalidParameterError):
            finite_volume_unnorm(model, 1, np.array([0, 1, 2]))
        with pytest.raises(InvalidParameterError):
            finite_volume_unnorm(model, 1, np.array([0, 1, 2, 3]))

    def test_brute_force_limit(self, model16):
        with pytest.raises(InvalidParameterError):
            brute_force_partition_function(model16, 2)


class TestCompatibility:
    def test_solved_law(self, model16, law16):
        assert boundary_law_residual(model16, law16) <= 1e-12
        assert compatibility_residual(model16, law16, 1) <= 1e-12
        assert compatibility_residual(model16, law16, 2) <= 1e-10

    def test_perturbed_law_fails_at_depth_two(self, model16, law16):
        bad = law16 + 0.05
        assert boundary_law_residual(model16, bad) > 1e-3
        assert compatibility_residual(model16, bad, 2) >= 1e-5

    def test_root_law_is_R_k_plus_1(self, model16, law16):
        np.testing.assert_allclose(root_law(model16, law16).values, apply_R(model16.kernel, 3, law16).values)

    def test_depth1_brute_force_marginal(self):
        # Sum mu_1 over the three leaves by enumeration; compare with mu_0.
        model = model_from_xi(xi_tu, 1.0, 1.0, make_rule("gauss_legendre", 4), order_k=2)
        f = picard_R(model.kernel, 2, constant(model.rule), SolveConfig(tol=1e-14)).f
        w = model.rule.weights
        z1 = partition_function(model, 1, f)
        z0 = partition_function(model, 0, f)
        for s in range(4):
            total = sum(
                finite_volume_unnorm(model, 1, np.array((s,) + leaves), f) * np.prod(w[list(leaves)])
                for leaves in itertools.product(range(4), repeat=3)
            )
            mu0 = finite_volume_unnorm(model, 0, np.array([s]), f) / z0
            assert total / z1 == pytest.approx(mu0, abs=1e-12)

    def test_sampled_configurations(self, model16, law16):
        res = compatibility_residual(model16, law16, 2, max_configs=100, n_samples=50)
        assert res <= 1e-10

    def test_depth_zero_rejected(self, model16, law16):
        with pytest.raises(InvalidParameterError):
            compatibility_residual(model16, law16, 0)


class TestTranslationInvariant:
    def test_n1(self):
        model, sols = ti_gibbs_solutions(1, 1, 107, SolveConfig(seeds=(1.0,), n_random=2))
        assert len(sols) >= 1
        for rep in sols:
            assert boundary_law_residual(model, rep.f) <= 1e-9

    def test_count_n2(self):
        assert count_ti_gibbs(2, 1, 47040, SolveConfig(n_random=0)) >= 2
