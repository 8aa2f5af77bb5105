import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import distributions, nonzero_orders
from hypothesis import given
from hypothesis import strategies as st

from unimoment.errors import AlphabetMismatchError, InputError, PreconditionError
from unimoment.measures import Alphabet, Distribution, OrderParameter, renyi_entropy
from unimoment.oracle import best_partition_exhaustive
from unimoment.tasks import (
    LambdaSpec,
    Partition,
    construct_partition,
    dyadic_partition,
    induced_partition_distribution,
    key_slack,
    lambda_from_distribution,
    load_partition,
    log2_task_moment,
    partition_identity,
    partition_size_bound,
    task_moment,
    tilde_keys,
)

DYADIC = Distribution.from_probs([0.5, 0.25, 0.125, 0.125])
HALF = OrderParameter.from_alpha(0.5)
RHO1 = OrderParameter.from_rho(1.0)
BETA_DYADIC = 0.95710678118654752  # 50-digit oracle, Z_{1/2}/2
LOG2_1P3 = 0.37851162325372981  # best of the four 2-cell partitions of (.7,.2,.1)


def abc():
    return Alphabet.default(3)


class TestPartition:
    def test_identity_examples(self):
        assert partition_identity(Partition.from_symbols(abc(), [["a", "b"], ["c"]])) == 2
        eight = Alphabet.default(8)
        assert partition_identity(Partition(eight, (tuple(range(8)),))) == 1
        assert partition_identity(Partition.singletons(eight)) == 8

    def test_partition_function(self):
        part = Partition.from_symbols(abc(), [["c", "a"], ["b"]])
        assert part.partition_function().tolist() == [2, 1, 2]
        assert part.symbol_cells() == [["c", "a"], ["b"]]

    @pytest.mark.parametrize("cells", [[["a", "b"]], [["a", "b"], ["b", "c"]], [["a"], [], ["b", "c"]],
                                       [["a", "b", "c", "d"]]])
    def test_invalid(self, cells):
        with pytest.raises(PreconditionError):
            Partition.from_symbols(abc(), cells)

    def test_json_round_trip(self, tmp_path):
        part = Partition.from_symbols(abc(), [["a", "c"], ["b"]])
        f = tmp_path / "part.json"
        f.write_text(part.to_json())
        assert load_partition(f, abc()) == part
        f.write_text("{bad")
        with pytest.raises(InputError):
            load_partition(f, abc())
        f.write_text('{"a": 1}')
        with pytest.raises(InputError):
            load_partition(f, abc())

    @given(st.integers(1, 40), st.randoms(use_true_random=False))
    def test_identity_random(self, m, rnd):
        labels = [rnd.randrange(m) for _ in range(m)]
        cells = {}
        for i, c in enumerate(labels):
            cells.setdefault(c, []).append(i)
        part = Partition(Alphabet.default(m), tuple(tuple(v) for v in cells.values()))
        assert partition_identity(part) == len(cells)
        assert sum(Fraction(1, int(a)) for a in part.sizes) == part.n_cells


class TestLambda:
    def test_dyadic_example(self):
        lam = lambda_from_distribution(DYADIC, HALF, 8)
        assert lam.values == (2, 2, 3, 3)
        assert lam.mu == Fraction(5, 3)
        # lambda(x) = ceil(beta p^-1/2) with beta = Z/2
        expected = [math.ceil(BETA_DYADIC * x ** -0.5) for x in DYADIC.probs]
        assert list(lam.values) == expected

    def test_uniform_symmetric(self):
        lam = lambda_from_distribution(Distribution.uniform(4), HALF, 8)
        assert len(set(lam.values)) == 1

    def test_too_few_keys(self):
        with pytest.raises(PreconditionError):
            lambda_from_distribution(DYADIC, HALF, 4)
        assert key_slack(4, 4) == 0.0
        assert tilde_keys(8, 4) == 1.0

    def test_validation(self):
        with pytest.raises(PreconditionError):
            LambdaSpec(abc(), (1, 0, 2))
        with pytest.raises(PreconditionError):
            LambdaSpec(abc(), (1, 2))
        assert LambdaSpec(abc(), (math.inf, 2, 4)).mu == Fraction(3, 4)

    @given(distributions(max_size=16), nonzero_orders(), st.integers(0, 20))
    def test_budget(self, p, order, extra):
        n_keys = math.floor(math.log2(p.size) + 2) + 1 + extra
        lam = lambda_from_distribution(p, order, n_keys)
        assert float(lam.mu) <= key_slack(n_keys, p.size) / 2 * (1 + 1e-12)


class TestDyadicPartition:
    def test_examples(self):
        a4 = Alphabet.default(4)
        part = dyadic_partition(LambdaSpec(a4, (2, 2, 3, 3)), 8)
        assert part.cells == ((0, 1), (2, 3))
        assert part.sizes.tolist() == [2, 2, 2, 2]
        a8 = Alphabet.default(8)
        part = dyadic_partition(LambdaSpec(a8, (4,) * 8), 9)
        assert part.cells == ((0, 1, 2, 3), (4, 5, 6, 7))
        assert partition_size_bound(2.0, 8) <= 9
        # uncapped symbols: free keys become singletons, the rest share a cell
        part = dyadic_partition(LambdaSpec(a8, (math.inf,) * 8), 6)
        assert part.cells == ((0,), (1,), (2,), (3,), (4,), (5, 6, 7))

    def test_overflow_singletons_follow_caps(self):
        # every cap >= M; the seven free keys go to the seven smallest caps
        a16 = Alphabet.default(16)
        lam = LambdaSpec(a16, tuple(31 - i for i in range(15)) + (math.inf,))
        part = dyadic_partition(lam, 8)
        assert part.cells == tuple((i,) for i in range(14, 7, -1)) + ((0, 1, 2, 3, 4, 5, 6, 7, 15),)

    def test_budget_precondition(self):
        with pytest.raises(PreconditionError):
            dyadic_partition(LambdaSpec(Alphabet.default(4), (1, 1, 1, 1)), 8)

    def test_size_bound_diagnostic(self):
        # grid minimum of floor(a mu + log_a M + 2) never exceeds the a=2 value
        for mu in (0.5, 1.0, 5 / 3, 4.0):
            for m in (2, 4, 100):
                assert partition_size_bound(mu, m) <= math.floor(2 * mu + math.log2(m) + 2 + 1e-12)

    @given(st.integers(1, 64), st.data())
    def test_construction_guarantee(self, m, data):
        values = data.draw(st.lists(st.one_of(st.integers(1, 4 * m), st.just(math.inf)),
                                    min_size=m, max_size=m))
        lam = LambdaSpec(Alphabet.default(m), tuple(values))
        n_keys = math.ceil(2 * float(lam.mu) + math.log2(m) + 2 + 1e-9) + data.draw(st.integers(0, 3))
        part = dyadic_partition(lam, n_keys)
        assert part.n_cells <= n_keys
        caps = [min(v, m) for v in lam.values]
        assert all(int(a) <= c for a, c in zip(part.sizes, caps))
        assert partition_identity(part) == part.n_cells


class TestMoments:
    def test_uniform_two_cells(self):
        u = Distribution.uniform(8)
        part = Partition(u.alphabet, ((0, 1, 2, 3), (4, 5, 6, 7)))
        rep = task_moment(u, part, RHO1)
        assert rep.value == pytest.approx(2.0, abs=1e-14)
        assert rep.reports[0].slack == pytest.approx(0.0, abs=1e-12) and rep.passed

    def test_singletons(self):
        p = Distribution.from_probs([0.7, 0.2, 0.1])
        part = Partition.singletons(p.alphabet)
        for rho in (-0.5, 1.0, 2.0):
            rep = task_moment(p, part, OrderParameter.from_rho(rho))
            assert rep.raw_moment == pytest.approx(1.0, abs=1e-15) and rep.passed

    def test_constructed_dyadic(self):
        part = construct_partition(DYADIC, HALF, 8)
        rep = task_moment(DYADIC, part, RHO1, n_keys=8)
        assert rep.raw_moment == pytest.approx(2.0, abs=1e-14)
        assert len(rep.reports) == 3 and rep.passed

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetMismatchError):
            log2_task_moment(DYADIC, Partition.singletons(abc()), RHO1)

    @given(distributions(max_size=16), nonzero_orders(), st.integers(0, 12))
    def test_construction_bounds(self, p, order, extra):
        # with N~ >= 1 every stated bound holds for the construction
        n_keys = math.ceil(math.log2(p.size) + 6) + extra
        part = construct_partition(p, order, n_keys)
        assert part.n_cells <= n_keys
        rep = task_moment(p, part, order, n_keys=n_keys)
        assert rep.passed, [r for r in rep.reports if not r.passed]

    @given(distributions(max_size=16), st.floats(-0.99, -0.01), st.integers(0, 4))
    def test_negative_order_construction_floor(self, p, rho, extra):
        # near the key threshold only the exact N~-dependent floor is guaranteed
        order = OrderParameter.from_rho(rho)
        n_keys = math.floor(math.log2(p.size) + 2) + 1 + extra
        rep = task_moment(p, construct_partition(p, order, n_keys), order, n_keys=n_keys)
        exact = rep.reports[-1]
        assert "N~" in exact.label and exact.passed
        assert rep.raw_moment <= 1.0 + 1e-12

    @given(distributions(max_size=10), nonzero_orders(), st.randoms(use_true_random=False))
    def test_lower_bound_any_partition(self, p, order, rnd):
        labels = [rnd.randrange(p.size) for _ in range(p.size)]
        cells = {}
        for i, c in enumerate(labels):
            cells.setdefault(c, []).append(i)
        part = Partition(p.alphabet, tuple(tuple(v) for v in cells.values()))
        rep = task_moment(p, part, order)
        assert rep.passed

    def test_mismatched_construction(self):
        p = Distribution.from_probs([0.5, 0.5])
        q = Distribution.from_probs([0.9, 0.1])
        part = construct_partition(q, HALF, 4)
        rep = task_moment(p, part, RHO1, n_keys=4, q=q)
        assert rep.passed


class TestInduced:
    def test_example(self):
        part = Partition.from_symbols(abc(), [["a", "b"], ["c"]])
        ind = induced_partition_distribution(part, RHO1)
        np.testing.assert_allclose(ind.q.probs, [1 / 6, 1 / 6, 2 / 3], rtol=1e-14)
        # Z_{Q_A,1/2} / Q_A(a)^{1/2} = A(a) N
        z = np.sum(np.sqrt(ind.q.probs))
        assert z / math.sqrt(ind.q.probs[0]) == pytest.approx(4.0, rel=1e-14)

    def test_singletons_uniform(self):
        part = Partition.singletons(Alphabet.default(5))
        ind = induced_partition_distribution(part, HALF)
        np.testing.assert_allclose(ind.q.probs, 0.2, rtol=1e-14)
        assert abs(ind.identity_slack) <= 1e-12

    @given(distributions(max_size=12), st.sampled_from([0.5, 2.0]), st.randoms(use_true_random=False))
    def test_identity(self, p, alpha, rnd):
        labels = [rnd.randrange(p.size) for _ in range(p.size)]
        cells = {}
        for i, c in enumerate(labels):
            cells.setdefault(c, []).append(i)
        part = Partition(p.alphabet, tuple(tuple(v) for v in cells.values()))
        ind = induced_partition_distribution(part, OrderParameter.from_alpha(alpha), p)
        assert abs(ind.identity_slack) <= 1e-9


class TestExhaustive:
    def test_three_symbols(self):
        p = Distribution.from_probs([0.7, 0.2, 0.1])
        best, value = best_partition_exhaustive(p, 2, RHO1)
        assert value == pytest.approx(LOG2_1P3, abs=1e-14)
        assert best.symbol_cells() == [["a"], ["b", "c"]]

    def test_enough_keys_gives_singletons(self):
        p = Distribution.from_probs([0.4, 0.3, 0.2, 0.1])
        best, value = best_partition_exhaustive(p, 4, RHO1)
        assert best.n_cells == 4 and value == pytest.approx(0.0, abs=1e-12)

    @given(distributions(max_size=6), nonzero_orders(), st.integers(1, 4))
    def test_floor(self, p, order, n_keys):
        _, value = best_partition_exhaustive(p, n_keys, order)
        assert value >= renyi_entropy(p, order) - math.log2(n_keys) - 1e-9
