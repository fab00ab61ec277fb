"""Randomized property suites for free functions on matrix tuples.

Every suite returns a :class:`PropertyReport`.  Trials draw their randomness
from a seed derived from ``(seed, trial index)``; a failure stores that seed
and :func:`replay` re-runs the trial bit for bit.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import (DEFAULT_MARGIN, conjugate_tuple, inclusion, is_homogeneous_linear, is_member,
                     sample_intertwiner, sample_point, sample_similarity)
from .errors import DimensionError, DomainError, SamplingError
from .expand import approximate_on_finite_set, dft_components
from .freepoly import FreePoly, PolyMatrix, WordCache
from .matcore import MatrixTuple, blkdiag, direct_sum, haar_unitary, opnorm
from .realization import RealizedFunction, alpha_at_origin, compose_mobius

DEFAULT_TRIALS = 200
DEFAULT_COND_CAP = 50.0
DEFAULT_TOL = 1e-8


class Evaluator:
    """A graded map ``x -> F(x)`` together with the domain it claims to live on."""

    def __init__(self, fn: Callable, delta: PolyMatrix, *, claims_ip: bool = True,
                 claims_schur: bool = False, name: str = "F", poly: FreePoly | None = None):
        self.fn = fn
        self.delta = delta
        self.claims_ip = claims_ip
        self.claims_schur = claims_schur
        self.name = name
        self.poly = poly
        self.realization = None

    def __call__(self, x: MatrixTuple) -> np.ndarray:
        out = np.asarray(self.fn(x))
        if out.shape != (x.dim, x.dim):
            raise DimensionError(f"{self.name} is not graded: {x.dim}x{x.dim} input gave {out.shape}")
        return out

    @property
    def nvars(self) -> int:
        return self.delta.nvars

    @classmethod
    def realized(cls, F: RealizedFunction, name: str = "realized") -> "Evaluator":
        ev = cls(F, F.delta, claims_schur=F.isometric, name=name)
        ev.realization = F
        return ev

    @classmethod
    def polynomial(cls, p: FreePoly, delta: PolyMatrix, name: str = "polynomial") -> "Evaluator":
        return cls(p, delta, name=name, poly=p)

    @classmethod
    def transpose(cls, delta: PolyMatrix) -> "Evaluator":
        """``x -> (x^1)^T``: graded and direct-sum compatible but not intertwining preserving."""
        return cls(lambda x: x[0].T.copy(), delta, claims_ip=False, name="transpose")


def as_evaluator(F, delta: PolyMatrix | None = None) -> Evaluator:
    if isinstance(F, Evaluator):
        return F
    if isinstance(F, RealizedFunction):
        return Evaluator.realized(F)
    if isinstance(F, FreePoly):
        if delta is None:
            raise ValueError("a polynomial evaluator needs a declared domain")
        return Evaluator.polynomial(F, delta)
    raise TypeError(f"cannot build an evaluator from {type(F).__name__}")


@dataclass(frozen=True)
class Failure:
    seed: int
    digest: str
    residual: float


@dataclass
class PropertyReport:
    suite: str
    trials: int
    tolerance: float
    max_residual: float
    failures: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if not self.failures else "fail"

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        out = {"suite": self.suite, "trials": self.trials, "tolerance": self.tolerance,
               "max_residual": self.max_residual,
               "failures": [{"seed": f.seed, "digest": f.digest, "residual": f.residual} for f in self.failures],
               "verdict": self.verdict}
        if self.details:
            out["details"] = self.details
        return out


def derive_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint64)[0])


def digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        if isinstance(a, MatrixTuple):
            for p in a:
                h.update(np.ascontiguousarray(p).tobytes())
        else:
            h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


def _run(suite: str, trial: Callable[[int], tuple], trials: int, seed: int, tol: float,
         workers: int = 1) -> PropertyReport:
    seeds = [derive_seed(seed, i) for i in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trial, seeds))
    else:
        results = [trial(s) for s in seeds]
    failures = [Failure(s, dg, res) for s, (res, dg) in zip(seeds, results) if not res <= tol]
    max_res = max((res for res, _ in results), default=0.0)
    return PropertyReport(suite, trials, tol, max_res, failures)


def _fit_inside(delta, make, tries=40):
    """Call ``make(scale)`` with shrinking scale until its point is a member."""
    scale = 1.0
    for _ in range(tries):
        out = make(scale)
        if is_member(delta, out[0], DEFAULT_MARGIN)[0]:
            return out
        scale *= 0.5
    raise SamplingError("conjugated point never landed inside the domain")


# intertwining ---------------------------------------------------------------

def intertwining_residual(F: Callable, x: MatrixTuple, y: MatrixTuple, T) -> float:
    """``||T F(x) - F(y) T|| / ((1 + ||T||)(1 + ||F(x)||))``."""
    Fx = F(x)
    return opnorm(T @ Fx - F(y) @ T) / ((1 + opnorm(T)) * (1 + opnorm(Fx)))


def intertwining_trial(F: Evaluator, seed: int, cond_cap: float = DEFAULT_COND_CAP, max_n: int = 4):
    """One trial; returns ``(residual, digest)``."""
    rng = np.random.default_rng(seed)
    delta = F.delta
    mode = ("similarity", "summand", "solver")[int(rng.integers(3))]
    n = int(rng.integers(1, max_n + 1))
    x0 = sample_point(delta, n, rng, shrink=float(rng.uniform(0.1, 0.8)))
    if mode == "summand":
        m = int(rng.integers(1, max_n + 1))
        z = sample_point(delta, m, rng, shrink=float(rng.uniform(0.1, 0.8)))
        x, y, T = x0, direct_sum([x0, z]), inclusion(n, m)
    else:
        s, s_inv = sample_similarity(n, cond_cap, rng, return_inverse=True)
        x, y = _fit_inside(delta, lambda c: (x0.scale(c).similar(s, s_inv), x0.scale(c)))[::-1]
        T = s
        if mode == "solver":
            m = int(rng.integers(1, max_n + 1))
            z = sample_point(delta, m, rng, shrink=float(rng.uniform(0.1, 0.8)))
            y = direct_sum([y, z])
            T = sample_intertwiner(x, y, rng)
            if T is None:
                T = np.vstack([s, np.zeros((m, n))])
    return intertwining_residual(F, x, y, T), digest(x, y, T)


def check_intertwining(F, trials: int = DEFAULT_TRIALS, seed: int = 0, tol: float = DEFAULT_TOL,
                       cond_cap: float = DEFAULT_COND_CAP, workers: int = 1) -> PropertyReport:
    """``T x = y T  =>  T F(x) = F(y) T`` on similarity, direct-summand and solver-built pairs.

    Residuals are measured by :func:`intertwining_residual`.
    """
    F = as_evaluator(F)
    return _run("intertwining", lambda s: intertwining_trial(F, s, cond_cap), trials, seed, tol, workers)


# direct sums ----------------------------------------------------------------

def direct_sum_trial(F: Evaluator, seed: int, cond_cap: float = DEFAULT_COND_CAP, max_parts: int = 4):
    rng = np.random.default_rng(seed)
    delta = F.delta
    m = int(rng.integers(1, max_parts + 1))
    xs = [sample_point(delta, int(rng.integers(1, 4)), rng, shrink=float(rng.uniform(0.1, 0.8)))
          for _ in range(m)]
    N = sum(x.dim for x in xs)
    if rng.random() < 0.5:
        s = haar_unitary(N, rng)
        s_inv = s.conj().T
    else:
        s, s_inv = sample_similarity(N, cond_cap, rng, return_inverse=True)

    def make(c):
        parts = [x.scale(c) for x in xs]
        return conjugate_tuple(direct_sum(parts), s, s_inv), parts

    w, parts = _fit_inside(delta, make)
    expected = s_inv @ blkdiag(*[F(p) for p in parts]) @ s
    res = opnorm(F(w) - expected)
    return res, digest(w, s)


def check_direct_sums(F, trials: int = DEFAULT_TRIALS, seed: int = 0, tol: float = DEFAULT_TOL,
                      cond_cap: float = DEFAULT_COND_CAP, workers: int = 1) -> PropertyReport:
    """``F(s^{-1} (x_1 + ... + x_m) s) = s^{-1} (F(x_1) + ... + F(x_m)) s`` for m <= 4."""
    F = as_evaluator(F)
    return _run("direct_sums", lambda s: direct_sum_trial(F, s, cond_cap), trials, seed, tol, workers)


# compressions ---------------------------------------------------------------

def check_ssoc(F, x: MatrixTuple, vectors: Sequence | None = None, dims: Sequence[int] | None = None,
               tol: float = 1e-6, seed: int = 0) -> PropertyReport:
    """Strong convergence along leading compressions ``P_k x P_k -> x``.

    Records ``max_v ||(F(P_k x P_k) - F(x)) v||`` for each k; passes when the
    sequence ends below ``tol`` and never grows by more than ``10 tol``.  This is
    evidence of continuity, never a proof of it.
    """
    F = as_evaluator(F)
    n = x.dim
    dims = sorted(dims) if dims is not None else list(range(1, n + 1))
    if vectors is None:
        rng = np.random.default_rng(seed)
        k0 = dims[0]
        vectors = []
        for _ in range(4):
            v = np.zeros(n, dtype=complex)
            v[:k0] = rng.standard_normal(k0) + 1j * rng.standard_normal(k0)
            vectors.append(v / np.linalg.norm(v))
    Fx = F(x)
    errs = []
    for k in dims:
        xk = x.compress(k)
        member, nrm = is_member(F.delta, xk)
        if not member:
            raise DomainError(f"compression to the leading {k} coordinates leaves the domain", norm=nrm)
        Dk = F(xk) - Fx
        errs.append(max(float(np.linalg.norm(Dk @ v)) for v in vectors))
    failures = []
    for i in range(1, len(errs)):
        if errs[i] > errs[i - 1] + 10 * tol:
            failures.append(Failure(seed, f"k={dims[i]}", errs[i] - errs[i - 1]))
    if not errs[-1] <= tol:
        failures.append(Failure(seed, f"k={dims[-1]}", errs[-1]))
    return PropertyReport("ssoc", len(dims), tol, errs[-1], failures,
                          {"dims": list(dims), "errors": errs})


def projection_trial(H: Callable, delta: PolyMatrix, seed: int, max_n: int = 5):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_n + 1))
    k = int(rng.integers(1, n + 1))
    corner = sample_point(delta, k, rng, shrink=float(rng.uniform(0.1, 0.8)))
    a = direct_sum([corner, MatrixTuple.zeros(delta.nvars, n - k)]) if k < n else corner
    Ha = H(a)
    P = np.zeros((n, n))
    P[:k, :k] = np.eye(k)
    return opnorm(Ha - P @ Ha @ P), digest(a)


def check_projection_lemma(F, trials: int = DEFAULT_TRIALS, seed: int = 0, tol: float = DEFAULT_TOL,
                           workers: int = 1) -> PropertyReport:
    """With ``H = phi_alpha o F`` and ``F(0) = alpha I``: ``a = P a P  =>  H(a) = P H(a) P``.

    Raises :class:`~freeholo.errors.NotScalarError` when ``F(0)`` is not scalar.
    """
    F = as_evaluator(F)
    delta = F.delta
    if not is_member(delta, MatrixTuple.zeros(delta.nvars, 1))[0]:
        raise DomainError("the projection lemma needs 0 in the domain")
    alpha = alpha_at_origin(F, delta.nvars, n=3, tol=tol)
    H = compose_mobius(F, alpha)
    report = _run("projection_lemma", lambda s: projection_trial(H, delta, s), trials, seed, tol, workers)
    report.details["alpha"] = [alpha.real, alpha.imag]
    report.details["H(0)"] = opnorm(H(MatrixTuple.zeros(delta.nvars, 3)))
    return report


# algebra membership ---------------------------------------------------------

def _words(d: int, m: int):
    level = [()]
    out = [()]
    for _ in range(m):
        level = [w + (i,) for w in level for i in range(1, d + 1)]
        out.extend(level)
    return out


def algebra_distances(Fx: np.ndarray, x: MatrixTuple, degrees: Sequence[int], max_words: int = 20000):
    """Relative Frobenius distance from ``Fx`` to ``span{x^w : |w| <= m}`` and the span's rank."""
    cache = WordCache(x)
    f = Fx.reshape(-1)
    scale = 1 + np.linalg.norm(f)
    out = []
    for m in degrees:
        words = _words(x.d, m)
        if len(words) > max_words:
            break
        A = np.column_stack([cache.product(w).reshape(-1) for w in words])
        U, sv, _ = np.linalg.svd(A, full_matrices=False)
        rank = int(np.sum(sv > 1e-12 * sv[0]))
        U = U[:, :rank]
        r = f - U @ (U.conj().T @ f)
        out.append((m, float(np.linalg.norm(r) / scale), rank))
    return out


def check_algebra_membership(F, x: MatrixTuple, degrees: Sequence[int] = tuple(range(0, 9)),
                             tol: float = DEFAULT_TOL) -> PropertyReport:
    """Distance from ``F(x)`` to the unital algebra generated by ``x^1..x^d``.

    Least-squares distances to the spans of words of degree <= m are recorded;
    the suite passes once one of them is below ``tol``.  A span whose rank
    stops growing is the whole generated algebra, so a distance that stagnates
    above ``tol`` there is a genuine failure.
    """
    F = as_evaluator(F)
    rows = algebra_distances(F(x), x, degrees)
    best = min(dist for _, dist, _ in rows)
    failures = [] if best <= tol else [Failure(0, digest(x), best)]
    return PropertyReport("algebra_membership", len(rows), tol, best, failures,
                          {"degrees": [m for m, _, _ in rows], "distances": [d for _, d, _ in rows],
                           "ranks": [r for _, _, r in rows]})


# series equivalence ---------------------------------------------------------

def series_trial(F: Evaluator, seed: int, tol: float, other: Callable | None = None, max_n: int = 4):
    rng = np.random.default_rng(seed)
    delta = F.delta
    n = int(rng.integers(1, max_n + 1))
    x = sample_point(delta, n, rng, shrink=float(rng.uniform(0.02, 0.15)))
    target = F.realization if F.realization is not None else F
    approx = approximate_on_finite_set(target, [x], tol / 10)
    K = approx.K
    exact = F(x)
    dft = dft_components(F, x, K, r=0.5)
    series = sum(dft.components)
    legs = [opnorm(exact - approx.poly(x)), opnorm(exact - series), opnorm(series - approx.poly(x))]
    if other is not None:
        legs.append(opnorm(exact - other(x)))
    return max(legs), digest(x)


def check_series_equivalence(F, trials: int = 50, seed: int = 0, tol: float = DEFAULT_TOL,
                             other: Callable | None = None, workers: int = 1) -> PropertyReport:
    """Three-way agreement of exact evaluation, DFT-extracted partial sums and the
    certified polynomial approximant; with ``other`` (a second realization of the
    same function) the two evaluations must agree as well.

    Needs a balanced domain, certified here by every entry of delta being
    homogeneous of degree one.
    """
    F = as_evaluator(F)
    if not is_homogeneous_linear(F.delta):
        raise ValueError("series equivalence needs a balanced-certified domain (degree-one homogeneous delta)")
    return _run("series_equivalence", lambda s: series_trial(F, s, tol, other), trials, seed, tol, workers)


SUITES = {
    "intertwining": check_intertwining,
    "direct_sums": check_direct_sums,
    "projection_lemma": check_projection_lemma,
    "series_equivalence": check_series_equivalence,
}

_TRIAL_FNS = {
    "intertwining": lambda F, s, **kw: intertwining_trial(F, s, **kw),
    "direct_sums": lambda F, s, **kw: direct_sum_trial(F, s, **kw),
}


def replay(suite: str, F, seed: int, **kwargs) -> float:
    """Re-run one stored trial and return its residual."""
    F = as_evaluator(F)
    if suite == "projection_lemma":
        H = compose_mobius(F, alpha_at_origin(F, F.delta.nvars, n=3))
        return projection_trial(H, F.delta, seed)[0]
    if suite == "series_equivalence":
        return series_trial(F, seed, kwargs.get("tol", DEFAULT_TOL), kwargs.get("other"))[0]
    return _TRIAL_FNS[suite](F, seed, **kwargs)[0]
