import math

import numpy as np
import pytest
from conftest import distribution_pairs
from hypothesis import given, settings
from hypothesis import strategies as st

from unimoment.errors import InputError, PreconditionError, SizeCapError
from unimoment.guessing import harmonic
from unimoment.measures import Distribution, OrderParameter, renyi_entropy, sundaresan_divergence
from unimoment.sequences import (
    MAX_PRODUCT_SIZE,
    ProductDistribution,
    convergence_experiment,
    max_block_length,
    product_distribution,
    sequence_functional,
    tilde_keys_sequence,
)

P91 = Distribution.from_probs([0.9, 0.1])
DYADIC = Distribution.from_probs([0.5, 0.25, 0.125, 0.125])
RHO1 = OrderParameter.from_rho(1.0)
H_HALF_91 = 0.67807190511263765  # 50-digit oracle


class TestProduct:
    def test_two_fold(self):
        pn = product_distribution(P91, 2).materialize()
        assert pn.symbols == ("aa", "ab", "ba", "bb")
        np.testing.assert_allclose(pn.probs, [0.81, 0.09, 0.09, 0.01], rtol=1e-14)

    def test_uniform_stays_uniform(self):
        pn = product_distribution(Distribution.uniform(3), 4).materialize()
        np.testing.assert_allclose(pn.probs, 3.0 ** -4, rtol=1e-13)

    def test_multichar_symbols_joined(self):
        p = Distribution.from_probs([0.5, 0.5], ("x1", "x2"))
        assert product_distribution(p, 2).alphabet().symbols == ("x1.x1", "x1.x2", "x2.x1", "x2.x2")

    def test_permutations_tie_exactly(self):
        lp = product_distribution(Distribution.from_probs([0.7, 0.2, 0.1]), 3).log_probs()
        # abc, acb, bac, bca, cab, cba share one probability bit for bit
        idx = [5, 7, 11, 15, 19, 21]
        assert len(set(lp[idx].tolist())) == 1

    def test_size_cap(self):
        assert max_block_length(2) == 20 and max_block_length(4) == 10
        pd = product_distribution(P91, 21)
        assert pd.size == 2 * MAX_PRODUCT_SIZE
        with pytest.raises(SizeCapError):
            pd.materialize()
        # analytic quantities need no materialization
        assert pd.renyi_entropy(RHO1) == pytest.approx(21 * H_HALF_91, abs=1e-12)
        with pytest.raises(InputError):
            ProductDistribution(P91, 0)

    def test_entropy_example(self):
        for n in range(1, 11):
            pn = product_distribution(P91, n).materialize()
            assert renyi_entropy(pn, RHO1) == pytest.approx(n * H_HALF_91, abs=1e-9)

    @settings(max_examples=40)
    @given(distribution_pairs(max_size=3), st.sampled_from([0.5, 2.0, 1.0]), st.integers(1, 8))
    def test_tensorization(self, pq, alpha, n):
        p, q = pq
        o = OrderParameter.from_alpha(alpha)
        pn = product_distribution(p, n).materialize()
        qn = product_distribution(q, n).materialize()
        assert renyi_entropy(pn, o) == pytest.approx(n * renyi_entropy(p, o), abs=1e-8)
        assert sundaresan_divergence(pn, qn, o) == pytest.approx(n * sundaresan_divergence(p, q, o), abs=1e-8)
        assert product_distribution(p, n).log2_normalizer(o) == pytest.approx(
            math.log2(np.sum(pn.probs ** alpha)), abs=1e-8)


class TestFunctionals:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_dyadic_shannon_exact(self, n):
        assert sequence_functional(product_distribution(DYADIC, n), "shannon-code", RHO1) == 1.75

    def test_campbell_sandwich(self):
        rep = convergence_experiment(P91, "campbell-code", RHO1, 12)
        assert rep.limit == pytest.approx(H_HALF_91, abs=1e-14)
        for row in rep.rows:
            assert H_HALF_91 - 1e-9 <= row.value <= H_HALF_91 + 1 / row.n + 1e-9
        assert rep.passed

    def test_guess_sandwich(self):
        rep = convergence_experiment(P91, "optimal-guess", RHO1, 10)
        for row in rep.rows:
            width = math.log2(harmonic(2 ** row.n)) / row.n
            assert row.upper - row.lower == pytest.approx(width, abs=1e-12)
            assert width <= math.log2(2 * row.n) / row.n + 1e-12
            assert abs(row.value - H_HALF_91) <= width + 1e-9
        assert rep.passed

    @pytest.mark.parametrize("rule", ["shannon-code", "campbell-code", "optimal-guess"])
    @pytest.mark.parametrize("rho", [-0.5, 2.0])
    def test_other_orders(self, rule, rho):
        p = Distribution.from_probs([0.6, 0.3, 0.1])
        assert convergence_experiment(p, rule, OrderParameter.from_rho(rho), 6).passed

    def test_unknown_rule(self):
        with pytest.raises(InputError):
            sequence_functional(product_distribution(P91, 2), "huffman", RHO1)

    def test_task_needs_keys(self):
        pd = product_distribution(P91, 2)
        with pytest.raises(InputError):
            sequence_functional(pd, "task-partition", RHO1)
        with pytest.raises(PreconditionError):
            sequence_functional(pd, "task-partition", RHO1, n_keys=2)


class TestTaskSeries:
    def test_below_capacity(self):
        rep = convergence_experiment(P91, "task-partition", RHO1, 16, n_keys=2)
        assert [r.verdict for r in rep.rows[:2]] == ["skip", "skip"]
        done = [r for r in rep.rows if r.value is not None]
        assert rep.passed and len(done) == 14
        assert all(1.0 <= r.value <= r.upper for r in done)
        assert rep.trend["regime"] == "below-capacity"
        assert rep.trend["upper_decreasing"]
        assert rep.trend["envelope_holds_from"] is not None
        assert done[-1].value - 1 < done[0].value - 1

    def test_above_capacity(self):
        rep = convergence_experiment(Distribution.uniform(3), "task-partition", RHO1, 8, n_keys=2)
        assert rep.trend["regime"] == "above-capacity" and rep.trend["lower_increasing"]
        lows = [r.lower for r in rep.rows]
        for n, lo in enumerate(lows, 1):
            assert lo == pytest.approx(2.0 ** (n * (math.log2(3) - 1)), rel=1e-12)
        assert rep.passed

    def test_negative_order(self):
        rep = convergence_experiment(P91, "task-partition", OrderParameter.from_rho(-0.5), 12, n_keys=2)
        assert rep.passed and not rep.trend
        for r in rep.rows:
            if r.value is not None:
                assert r.value <= 1.0 + 1e-12

    def test_block_slack(self):
        assert tilde_keys_sequence(2, 3, 2) == pytest.approx((8 - 3 - 2) / 4)

    @settings(max_examples=60)
    @given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=3), st.sampled_from([0.5, 1.0, 2.0]),
           st.integers(2, 4))
    def test_upper_bound_random(self, w, rho, n_keys):
        p = Distribution.from_probs(np.asarray(w) / sum(w))
        n_max = max_block_length(p.size) if p.size == 2 else 7
        n_max = min(n_max, 10)
        assert convergence_experiment(p, "task-partition", OrderParameter.from_rho(rho), n_max,
                                      n_keys=n_keys).passed

    def test_deterministic(self):
        a = convergence_experiment(P91, "task-partition", RHO1, 10, n_keys=2)
        b = convergence_experiment(P91, "task-partition", RHO1, 10, n_keys=2)
        assert a == b
