import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freeholo.domain import commutator_delta, polydisk, row_ball, sample_point
from freeholo.errors import BudgetError, DivergenceError, DomainError
from freeholo.expand import (approximate_on_finite_set, cauchy_certificate, certified_radius, default_nodes,
                             dft_components, recenter, series_components, symbolic_expand)
from freeholo.freepoly import FreePoly, PolyMatrix, evaluate, random_poly, variables
from freeholo.matcore import MatrixTuple, opnorm
from freeholo.ncharness import Evaluator
from freeholo.realization import Colligation, RealizedFunction, random_colligation

seeds = st.integers(0, 2**32 - 1)
SQ = 1 / np.sqrt(2)


class TestSymbolic:
    def test_identity_function(self, identity_fn):
        (x,) = variables(1)
        comps = symbolic_expand(identity_fn, 5).components
        assert comps[1] == x
        assert all(P.is_zero() for k, P in enumerate(comps) if k != 1)

    def test_scalar_toy(self, scalar_toy):
        comps = symbolic_expand(scalar_toy, 10).components
        assert comps[0].constant_term() == pytest.approx(SQ)
        for m in range(1, 11):
            assert comps[m].terms[(1,) * m] == pytest.approx(0.5 * (-SQ) ** (m - 1), rel=1e-14)

    @settings(max_examples=15, deadline=None)
    @given(seeds, st.sampled_from(["polydisk", "row_ball"]))
    def test_homogeneous_and_convergent(self, seed, kind):
        rng = np.random.default_rng(seed)
        delta = {"polydisk": polydisk(2), "row_ball": row_ball(2)}[kind]
        F = RealizedFunction(random_colligation(delta.I, delta.J, 2, rng), delta)
        series = symbolic_expand(F, 12)
        assert all(P.is_homogeneous(k) for k, P in enumerate(series.components))
        x = sample_point(delta, 3, rng, 0.2)
        err = opnorm(series.partial_sums(x)[-1] - F(x))
        # Cauchy tail with M = 1, r = 1 / ||delta(x)||
        assert err <= 0.2 ** 13 / 0.8 + 1e-13

    def test_components_intertwine(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        x = MatrixTuple.random(2, 3, rng)
        s = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        y = x.similar(s, np.linalg.inv(s))
        for P in symbolic_expand(F, 6).components:
            Px = evaluate(P, x)
            assert opnorm(s @ Px - evaluate(P, y) @ s) <= 1e-9 * opnorm(s) * max(1.0, opnorm(Px))

    def test_budget(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        with pytest.raises(BudgetError, match="complete through degree"):
            symbolic_expand(F, 10, budget=100)

    def test_json(self, identity_fn):
        obj = symbolic_expand(identity_fn, 2).to_json()
        assert obj["K"] == 2 and obj["M"] is None and len(obj["components"]) == 3


class TestRecenter:
    def shifted(self, rng, c=0.2):
        # delta = diag(x1 + c, x2 + c): delta(0) != 0
        x1, x2 = variables(2)
        delta = PolyMatrix([[x1 + c, FreePoly.zero(2)], [FreePoly.zero(2), x2 + c]])
        return RealizedFunction(random_colligation(2, 2, 2, rng), delta)

    def test_same_values(self, rng):
        F = self.shifted(rng)
        G = recenter(F)
        assert not G.delta.constant_matrix().any()
        x = MatrixTuple.random(2, 3, rng).scale(0.1)
        assert opnorm(F(x) - G(x)) <= 1e-12

    def test_series_after_recentering(self, rng):
        F = self.shifted(rng)
        series = symbolic_expand(F, 10)
        assert series.recentered
        x = MatrixTuple.random(2, 2, rng).scale(0.02)
        assert opnorm(series.partial_sums(x)[-1] - F(x)) <= 1e-10

    def test_spectral_failure(self):
        x1 = variables(1)[0]
        delta = PolyMatrix([[x1 + 0.5]])
        F = RealizedFunction(Colligation(0, [[1.0]], [[1.0]], [[2.5]], 1, 1, 1), delta)
        with pytest.raises(DivergenceError):
            recenter(F)


class TestDFT:
    def test_polynomial_components(self, rng):
        p = random_poly(2, 3, 12, rng)
        F = Evaluator.polynomial(p, polydisk(2))
        x = sample_point(polydisk(2), 3, rng, 0.5)
        got = dft_components(F, x, 3, N=8).components
        for k in range(4):
            ref = evaluate(p.component(k), x)
            assert opnorm(got[k] - ref) <= 1e-12 * max(1.0, opnorm(ref))

    def test_zeroth_component(self, rng, delta2):
        F = RealizedFunction(random_colligation(delta2.I, delta2.J, 2, rng), delta2)
        A0 = dft_components(F, sample_point(delta2, 3, rng, 0.6), 6).components[0]
        assert opnorm(A0 - F.alpha * np.eye(3)) <= 1e-12

    def test_constant(self, rng):
        F = Evaluator(lambda x: 0.3 * np.eye(x.dim), polydisk(2))
        comps = dft_components(F, sample_point(polydisk(2), 2, rng, 0.5), 5).components
        assert all(opnorm(A) <= 1e-15 for A in comps[1:])

    @settings(max_examples=10, deadline=None)
    @given(seeds, st.integers(1, 6))
    def test_symbolic_agreement(self, seed, n):
        rng = np.random.default_rng(seed)
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        x = sample_point(polydisk(2), n, rng, 0.8)
        sym = symbolic_expand(F, 8).evaluate(x)
        dft = dft_components(F, x, 8, N=64, r=0.5)
        for A, P in zip(dft.components, sym):
            assert opnorm(A - P) <= 1e-9 * (1 + opnorm(A))
        assert dft.aliasing is not None
        assert all(opnorm(A - P) <= a + 1e-12 for A, P, a in zip(dft.components, sym, dft.aliasing))

    def test_homogeneity(self, rng):
        F = RealizedFunction(random_colligation(1, 2, 2, rng), row_ball(2))
        x = sample_point(row_ball(2), 3, rng, 0.2)
        a = dft_components(F, x, 6, N=64, r=0.5).components
        b = dft_components(F, x.scale(2), 6, N=64, r=0.25).components
        for k in range(7):
            assert opnorm(b[k] - 2 ** k * a[k]) <= 1e-8 * max(1e-300, opnorm(b[k])) + 1e-14

    def test_radius_shrinks(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 1, rng), polydisk(2))
        x = sample_point(polydisk(2), 2, rng, 0.9).scale(3)  # outside, but the ray enters
        assert dft_components(F, x, 4).radius <= 1 / 3

    def test_no_radius(self, rng):
        F = Evaluator(lambda x: np.eye(x.dim), commutator_delta())
        with pytest.raises(DomainError):
            dft_components(F, MatrixTuple.random(2, 2, rng), 3, max_shrinks=5)

    def test_default_nodes(self):
        assert default_nodes(8) == 64 and default_nodes(12) == 64 and default_nodes(0) == 4


class TestCauchy:
    def test_equality_case(self):
        x1 = variables(1)[0]
        F = Evaluator.polynomial(x1, polydisk(1))
        x = MatrixTuple((np.array([[0.9]]),))
        cert = cauchy_certificate(F, x, 1 / 0.9, samples=64, K=3)
        assert cert.M == pytest.approx(1.0)
        assert cert.norms[1] == pytest.approx(0.9) and cert.bounds[1] == pytest.approx(0.9)
        assert cert.passed

    @settings(max_examples=10, deadline=None)
    @given(seeds, st.sampled_from(["polydisk", "row_ball"]))
    def test_realized(self, seed, kind):
        rng = np.random.default_rng(seed)
        delta = {"polydisk": polydisk(2), "row_ball": row_ball(2)}[kind]
        F = RealizedFunction(random_colligation(delta.I, delta.J, 2, rng), delta)
        x = sample_point(delta, 3, rng, 0.4)
        assert cauchy_certificate(F, x, 2.0, K=12).passed

    def test_constant(self, rng):
        F = Evaluator(lambda x: 0.5 * np.eye(x.dim), polydisk(2))
        assert cauchy_certificate(F, sample_point(polydisk(2), 2, rng, 0.4), 2.0).passed

    def test_circle_leaves_domain(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 1, rng), polydisk(2))
        with pytest.raises(DomainError):
            cauchy_certificate(F, sample_point(polydisk(2), 2, rng, 0.6), 2.0)


class TestApproximation:
    def test_realized_points(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        pts = [sample_point(polydisk(2), int(rng.integers(1, 4)), rng, 0.3) for _ in range(5)]
        approx = approximate_on_finite_set(F, pts, 1e-6)
        assert approx.certified and approx.max_error <= 1e-6
        for x in pts:
            assert opnorm(F(x) - approx.poly(x)) <= 1e-6

    def test_polynomial(self, rng):
        p = random_poly(2, 3, 8, rng)
        F = Evaluator.polynomial(p, polydisk(2))
        pts = [sample_point(polydisk(2), 2, rng, 0.4) for _ in range(3)]
        approx = approximate_on_finite_set(F, pts, 1e-8)
        assert approx.max_error <= 1e-12

    def test_origin(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        approx = approximate_on_finite_set(F, [MatrixTuple.zeros(2, 2)], 1e-6)
        assert approx.K == 0 and approx.poly == FreePoly.constant(F.alpha, 2)
        assert approx.radii == [math.inf]

    def test_certified_radius(self, rng):
        F = RealizedFunction(random_colligation(1, 2, 1, rng), row_ball(2))
        x = sample_point(row_ball(2), 2, rng, 0.25)
        assert certified_radius(F, x) == pytest.approx(0.999 / 0.25, rel=1e-5)

    def test_series_components_of_polynomial(self, rng):
        p = random_poly(2, 4, 10, rng)
        comps = series_components(p, 4).components
        assert sum(comps, FreePoly.zero(2)) == p
