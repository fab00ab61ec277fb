import json

import numpy as np
import pytest

from freeholo.domain import commutator_delta, conjugate_tuple, polydisk, row_ball, sample_point
from freeholo.errors import DimensionError, DomainError, NotScalarError
from freeholo.freepoly import random_poly, variables
from freeholo.matcore import MatrixTuple, blkdiag, direct_sum, haar_unitary, opnorm, unit
from freeholo.ncharness import (Evaluator, PropertyReport, as_evaluator, check_algebra_membership,
                                check_direct_sums, check_intertwining, check_projection_lemma,
                                check_series_equivalence, check_ssoc, derive_seed, direct_sum_trial,
                                intertwining_residual, replay)
from freeholo.realization import RealizedFunction, random_colligation, rotate_aux_basis


@pytest.fixture
def realized(rng, delta2):
    return RealizedFunction(random_colligation(delta2.I, delta2.J, 2, rng), delta2)


@pytest.fixture
def poly_eval(rng, delta2):
    return Evaluator.polynomial(random_poly(2, 4, 10, rng), delta2)


class TestEvaluator:
    def test_grading_enforced(self):
        bad = Evaluator(lambda x: np.eye(x.dim + 1), polydisk(1))
        with pytest.raises(DimensionError):
            bad(MatrixTuple.zeros(1, 2))

    def test_flags(self, realized):
        ev = as_evaluator(realized)
        assert ev.claims_ip and ev.claims_schur and ev.realization is realized
        assert not Evaluator.transpose(polydisk(1)).claims_ip

    def test_polynomial_needs_domain(self):
        with pytest.raises(ValueError):
            as_evaluator(variables(1)[0])


class TestIntertwining:
    def test_realized(self, realized):
        rep = check_intertwining(realized, trials=200)
        assert rep.passed, rep.failures[:3]
        assert rep.max_residual <= 1e-8

    def test_polynomial(self, poly_eval):
        assert check_intertwining(poly_eval, trials=100).passed

    def test_transpose_fails(self):
        rep = check_intertwining(Evaluator.transpose(polydisk(2)), trials=60)
        assert not rep.passed and rep.max_residual >= 0.1

    def test_transpose_counterexample(self):
        F = Evaluator.transpose(polydisk(1))
        s = np.diag([1.0, 2.0])
        x = MatrixTuple((unit(1, 2, 2),))
        y = x.similar(s, np.diag([1.0, 0.5]))
        assert intertwining_residual(F, x, y, s) == pytest.approx(0.25, rel=1e-15)

    def test_identity_intertwiner(self, realized, rng):
        x = sample_point(realized.delta, 3, rng, 0.5)
        assert intertwining_residual(realized, x, x, np.eye(3)) <= 1e-16

    def test_replay_is_bit_exact(self):
        F = Evaluator.transpose(polydisk(2))
        rep = check_intertwining(F, trials=30, seed=4)
        for f in rep.failures:
            assert replay("intertwining", F, f.seed) == f.residual

    def test_monotone_in_tolerance(self):
        F = Evaluator.transpose(polydisk(2))
        counts = [len(check_intertwining(F, trials=40, tol=t).failures) for t in (1e-8, 1e-2, 0.05, 1.0)]
        assert counts == sorted(counts, reverse=True) and counts[-1] == 0

    def test_workers_match_serial(self, realized):
        a = check_intertwining(realized, trials=24, seed=9)
        b = check_intertwining(realized, trials=24, seed=9, workers=4)
        assert a.max_residual == b.max_residual

    def test_derived_seeds(self):
        seeds = [derive_seed(1, i) for i in range(100)]
        assert len(set(seeds)) == 100 and seeds == [derive_seed(1, i) for i in range(100)]


class TestDirectSums:
    def test_realized(self, realized):
        rep = check_direct_sums(realized, trials=200)
        assert rep.passed and rep.max_residual <= 1e-8

    def test_polynomial(self, poly_eval):
        rep = check_direct_sums(poly_eval, trials=100)
        assert rep.max_residual <= 1e-10

    def test_single_block_identity(self, realized, rng):
        x = sample_point(realized.delta, 3, rng, 0.5)
        assert np.array_equal(realized(conjugate_tuple(x, np.eye(3), np.eye(3))), realized(x))

    def test_unitary_conjugation(self, realized, rng):
        xs = [sample_point(realized.delta, k, rng, 0.9) for k in (1, 2, 3)]
        u = haar_unitary(6, rng)
        w = direct_sum(xs).map(lambda p: u.conj().T @ p @ u)
        expected = u.conj().T @ blkdiag(*[realized(x) for x in xs]) @ u
        assert opnorm(realized(w) - expected) <= 1e-8

    def test_replay(self, realized):
        rep = check_direct_sums(Evaluator.transpose(realized.delta), trials=10, seed=2)
        for f in rep.failures:
            assert direct_sum_trial(Evaluator.transpose(realized.delta), f.seed)[0] == f.residual


class TestSSOC:
    def test_realized_decay(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        x = sample_point(polydisk(2), 32, rng, 0.5, decay=0.3)
        rep = check_ssoc(F, x, dims=range(4, 33), tol=1e-6)
        assert rep.passed, rep.details["errors"]
        assert rep.details["errors"][-1] <= 1e-6

    def test_polynomial_on_corner(self, rng):
        p = random_poly(2, 3, 8, rng)
        corner = sample_point(polydisk(2), 3, rng, 0.5)
        x = MatrixTuple(tuple(np.pad(q, (0, 3)) for q in corner))
        rep = check_ssoc(Evaluator.polynomial(p, polydisk(2)), x, dims=[3, 4, 5, 6])
        assert rep.details["errors"] == [0.0] * 4

    def test_constant(self, rng):
        F = Evaluator(lambda x: 0.5 * np.eye(x.dim), polydisk(2))
        rep = check_ssoc(F, sample_point(polydisk(2), 5, rng, 0.5))
        assert all(e == 0 for e in rep.details["errors"])

    def test_growing_errors_fail(self):
        # value jumps when exactly one diagonal entry vanishes: errors 0, 1, 0
        def jump(x):
            return float(np.sum(np.diag(x[0]) == 0) == 1) * np.eye(x.dim)
        x = MatrixTuple((np.diag([0.1, 0.2, 0.3]),))
        rep = check_ssoc(Evaluator(jump, polydisk(1)), x, vectors=[np.array([1.0, 0, 0])], dims=[1, 2, 3])
        assert rep.details["errors"] == [0.0, 1.0, 0.0]
        assert not rep.passed


class TestProjectionSuite:
    def test_realized(self, realized):
        rep = check_projection_lemma(realized, trials=100)
        assert rep.passed and rep.details["H(0)"] <= 1e-15

    def test_not_scalar(self):
        F = Evaluator(lambda x: unit(1, 1, x.dim) * 0.5, polydisk(1))
        with pytest.raises(NotScalarError):
            check_projection_lemma(F, trials=5)

    def test_origin_outside(self):
        F = Evaluator(lambda x: np.zeros((x.dim, x.dim)), commutator_delta())
        with pytest.raises(DomainError):
            check_projection_lemma(F, trials=5)


class TestAlgebraMembership:
    def test_polynomial_degree_three(self, rng):
        p = random_poly(2, 3, 10, rng)
        x = sample_point(polydisk(2), 4, rng, 0.5)
        rep = check_algebra_membership(Evaluator.polynomial(p, polydisk(2)), x, degrees=range(4))
        assert rep.details["distances"][3] <= 1e-13 and rep.passed

    def test_realized_decay(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        x = sample_point(polydisk(2), 4, rng, 0.4)
        rep = check_algebra_membership(F, x, degrees=range(6))
        dist = rep.details["distances"]
        assert rep.passed
        assert dist[1] < dist[0] and dist[2] < dist[1]

    def test_scalars(self, rng):
        F = RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))
        x = sample_point(polydisk(2), 1, rng, 0.5)
        rep = check_algebra_membership(F, x, degrees=[0, 1])
        assert min(rep.details["distances"]) <= 1e-15


class TestSeriesEquivalence:
    def test_realized_with_rotation(self, rng, delta2):
        col = random_colligation(delta2.I, delta2.J, 2, rng)
        F = RealizedFunction(col, delta2)
        G = RealizedFunction(rotate_aux_basis(col, haar_unitary(2, rng)), delta2)
        rep = check_series_equivalence(F, trials=8, other=G)
        assert rep.passed and rep.max_residual <= 1e-8

    def test_polynomial(self, poly_eval):
        rep = check_series_equivalence(poly_eval, trials=5)
        assert rep.max_residual <= 1e-12

    def test_needs_balanced(self):
        F = Evaluator(lambda x: np.eye(x.dim), commutator_delta())
        with pytest.raises(ValueError):
            check_series_equivalence(F, trials=1)


def test_report_json(realized):
    rep = check_intertwining(realized, trials=3)
    obj = json.loads(json.dumps(rep.to_json()))
    assert {"suite", "trials", "tolerance", "max_residual", "failures", "verdict"} <= set(obj)
    assert obj["verdict"] == "pass"
    assert PropertyReport("x", 1, 1e-8, 1.0, [object()]).verdict == "fail"


def test_accumulated_trials():
    """10^4 intertwining trials: the IP evaluators never fail, the transpose map does."""
    rng = np.random.default_rng(2024)
    evaluators = [
        (Evaluator.realized(RealizedFunction(random_colligation(2, 2, 2, rng), polydisk(2))), 3500),
        (Evaluator.realized(RealizedFunction(random_colligation(1, 2, 2, rng), row_ball(2))), 3500),
        (Evaluator.polynomial(random_poly(2, 4, 12, rng), polydisk(2)), 3000),
    ]
    for k, (F, trials) in enumerate(evaluators):
        rep = check_intertwining(F, trials=trials, seed=100 + k)
        assert rep.passed, rep.failures[:3]
    assert not check_intertwining(Evaluator.transpose(polydisk(2)), trials=50, seed=7).passed
