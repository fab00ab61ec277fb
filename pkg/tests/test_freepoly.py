import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freeholo.errors import DimensionError, FixtureError
from freeholo.freepoly import FreePoly, PolyMatrix, WordCache, eval_many, evaluate, random_poly, variables
from freeholo.matcore import MatrixTuple, blkdiag, opnorm, unit

x1, x2 = variables(2)
seeds = st.integers(0, 2**32 - 1)


def test_non_commutative():
    assert x1 * x2 != x2 * x1
    assert set((x1 * x2).terms) != set((x2 * x1).terms)


def test_hand_expansion():
    expected = FreePoly(2, {(1, 1): 1, (1, 2): -1, (2, 1): 1, (2, 2): -1})
    assert (x1 + x2) * (x1 - x2) == expected


def test_unit_word():
    p = 3 * x1 * x2 + 2j
    assert p * 1 == p
    assert p * FreePoly.constant(1, 2) == p


def test_zero_coefficients_dropped():
    p = x1 + x2 - x1
    assert list(p.terms) == [(2,)]
    assert (p - p).is_zero()


def test_graded_lex_order():
    p = x2 * x1 + x1 * x1 + x2 + 5 + x1
    assert list(p.terms) == [(), (1,), (2,), (1, 1), (2, 1)]


def test_word_out_of_range():
    with pytest.raises(ValueError):
        FreePoly(2, {(3,): 1})


class TestHomogeneousSplit:
    def test_by_degree(self):
        p = 1 + 2 * x1 + 3 * x1 * x2
        assert p.homogeneous_split() == [FreePoly.constant(1, 2), 2 * x1, 3 * x1 * x2]

    def test_zero(self):
        assert FreePoly.zero(2).homogeneous_split() == []

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_homogeneity(self, seed):
        rng = np.random.default_rng(seed)
        p = random_poly(3, 5, 12, rng)
        x = MatrixTuple.random(3, 3, rng).scale(0.5)
        lam = complex(rng.standard_normal(), rng.standard_normal())
        comps = p.homogeneous_split()
        for k, P in enumerate(comps):
            lhs, rhs = evaluate(P, x.scale(lam)), lam ** k * evaluate(P, x)
            assert opnorm(lhs - rhs) <= 1e-10 * max(1.0, opnorm(rhs))
        total = sum(comps, FreePoly.zero(3))
        assert total == p


class TestEvaluate:
    def test_commutator(self):
        x = MatrixTuple((unit(1, 2, 2), unit(2, 1, 2)))
        assert np.array_equal(evaluate(x1 * x2 - x2 * x1, x), np.diag([1, -1]))

    def test_constant(self, rng):
        x = MatrixTuple.random(2, 4, rng)
        assert np.array_equal(evaluate(FreePoly.constant(1, 2), x), np.eye(4))

    def test_direct_sum(self, rng):
        p = random_poly(2, 4, 10, rng)
        x, y = MatrixTuple.random(2, 2, rng), MatrixTuple.random(2, 3, rng)
        from freeholo.matcore import direct_sum
        lhs = evaluate(p, direct_sum([x, y]))
        assert opnorm(lhs - blkdiag(evaluate(p, x), evaluate(p, y))) <= 1e-12 * opnorm(lhs)

    def test_too_few_parts(self, rng):
        with pytest.raises(DimensionError):
            evaluate(x2, MatrixTuple.random(1, 2, rng))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(1, 4), st.integers(1, 16))
    def test_homomorphism(self, seed, d, n):
        rng = np.random.default_rng(seed)
        p, q = random_poly(d, 3, 6, rng), random_poly(d, 3, 6, rng)
        x = MatrixTuple.random(d, n, rng).scale(1 / np.sqrt(n))
        lhs, rhs = evaluate(p * q, x), evaluate(p, x) @ evaluate(q, x)
        scale = max(1.0, opnorm(evaluate(p, x)) * opnorm(evaluate(q, x)))
        assert opnorm(lhs - rhs) <= 1e-10 * scale

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(1, 6))
    def test_intertwining(self, seed, n):
        rng = np.random.default_rng(seed)
        p = random_poly(2, 4, 10, rng)
        x = MatrixTuple.random(2, n, rng).scale(0.5)
        s = np.linalg.qr(rng.standard_normal((n, n)))[0] @ np.diag(np.linspace(1, 3, n))
        y = x.similar(s, np.linalg.inv(s))
        px = evaluate(p, x)
        assert opnorm(s @ px - evaluate(p, y) @ s) <= 1e-9 * opnorm(s) * max(opnorm(px), 1.0)


class TestEvalMany:
    def test_matches_evaluate(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            d, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
            p = random_poly(d, 4, 8, rng)
            x = MatrixTuple.random(d, n, rng)
            cache = WordCache(x)
            got = eval_many(p, x, cache)
            ref = sum((c * np.linalg.multi_dot([np.eye(n)] + [x[i - 1] for i in w] + [np.eye(n)])
                       for w, c in p.terms.items()), np.zeros((n, n), complex))
            assert np.allclose(got, ref, rtol=1e-12, atol=1e-12)

    def test_cache_hits(self, rng):
        p = x1 * x2 + x2
        x = MatrixTuple.random(2, 3, rng)
        cache = WordCache(x)
        eval_many(p, x, cache)
        eval_many(p * p, x, cache)
        assert cache.hits > 0

    def test_empty_polynomial(self, rng):
        x = MatrixTuple.random(2, 3, rng)
        assert not eval_many(FreePoly.zero(2), x, WordCache(x)).any()

    def test_cache_bound_to_point(self, rng):
        x, y = MatrixTuple.random(2, 3, rng), MatrixTuple.random(2, 3, rng)
        with pytest.raises(ValueError):
            eval_many(x1, y, WordCache(x))


class TestSerialization:
    def test_json_round_trip(self, rng):
        p = random_poly(3, 4, 10, rng)
        assert FreePoly.from_json(p.to_json()) == p

    def test_json_shape(self):
        assert (2j * x1 * x2).to_json() == {"nvars": 2, "terms": [{"word": [1, 2], "re": 0.0, "im": 2.0}]}

    def test_bad_json(self):
        with pytest.raises(FixtureError):
            FreePoly.from_json({"nvars": 2, "terms": [{"word": [1]}]})

    def test_polymatrix(self):
        M = PolyMatrix([[x1, FreePoly.zero(2)], [2 * x1, x2]])
        assert M.shape == (2, 2)
        coeffs = M.coefficient_matrices()
        assert np.array_equal(coeffs[(1,)], [[1, 0], [2, 0]])
        assert M.to_json() == {"I": 2, "J": 2, "d": 2, "entries": [["x1", "0"], ["2*x1", "x2"]]}

    def test_ragged_polymatrix(self):
        with pytest.raises(ValueError):
            PolyMatrix([[x1, x2], [x1]])
