"""Homogeneous expansions ``F(x) = sum_k P_k(x)``.

Two independent routes produce the components: :func:`symbolic_expand` reads
the free polynomials ``P_k`` off a realization, and :func:`dft_components`
recovers the matrices ``P_k(x)`` at one point from samples of
``lam -> F(lam x)`` on a circle.  :func:`cauchy_certificate` checks the growth
bound ``||P_k(x)|| <= M / r^k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .domain import DEFAULT_MARGIN, delta_norm, is_homogeneous_linear, is_member
from .errors import BudgetError, DivergenceError, DomainError
from .freepoly import FreePoly, PolyMatrix, WordCache, eval_many
from .matcore import MatrixTuple, opnorm, solve
from .realization import PSD_SLACK, Colligation, RealizedFunction

WORD_BUDGET = 10**6


@dataclass(frozen=True)
class SeriesExpansion:
    """Components ``P_0 ... P_K``; ``growth_cert`` is ``(M, r)`` when certified at a point."""

    components: tuple
    K: int
    growth_cert: tuple | None = None
    recentered: bool = False

    def partial_sum(self, K: int | None = None) -> FreePoly:
        K = self.K if K is None else K
        out = FreePoly.zero(self.components[0].nvars)
        for P in self.components[:K + 1]:
            out = out + P
        return out

    def evaluate(self, x: MatrixTuple) -> list:
        """Matrices ``P_k(x)`` for k = 0..K, sharing one word cache."""
        cache = WordCache(x)
        return [eval_many(P, x, cache) for P in self.components]

    def partial_sums(self, x: MatrixTuple) -> list:
        vals = self.evaluate(x)
        return list(np.cumsum(np.array(vals), axis=0))

    def to_json(self) -> dict:
        M, r = self.growth_cert if self.growth_cert else (None, None)
        return {"K": self.K, "components": [P.to_json() for P in self.components], "M": M, "r": r}


def recenter(F: RealizedFunction) -> RealizedFunction:
    """Equivalent realization over ``delta - delta(0)``.

    With ``Delta = delta(0) (x) I_Lam`` and ``R = (I - D Delta)^{-1}``:
    ``D -> R D``, ``C -> R C``, ``alpha -> alpha + B Delta R C`` and
    ``B -> B (I + Delta R D)``.  Needs ``||D Delta|| < 1``; the result is in
    general not isometric.
    """
    col, delta = F.colligation, F.delta
    Delta = np.kron(delta.constant_matrix(), np.eye(col.ell))
    DDelta = col.D @ Delta
    q = opnorm(DDelta)
    if not q < 1:
        raise DivergenceError(f"cannot re-center: ||D delta(0)|| = {q:.6g} >= 1")
    M = np.eye(DDelta.shape[0]) - DDelta
    D2 = solve(M, col.D)
    C2 = solve(M, col.C)
    alpha2 = col.alpha + (col.B @ Delta @ C2)[0, 0]
    B2 = col.B @ (np.eye(col.ell * col.I) + Delta @ D2)
    shifted = delta.map(lambda e: e - e.constant_term())
    return RealizedFunction(Colligation(alpha2, B2, C2, D2, col.ell, col.I, col.J), shifted, F.iso_tol)


def _centered(delta: PolyMatrix) -> bool:
    return not np.any(delta.constant_matrix())


def symbolic_expand(F: RealizedFunction, K: int, budget: int = WORD_BUDGET) -> SeriesExpansion:
    """Free polynomials ``P_0..P_K`` of ``alpha + sum_m B d (D d)^m C``.

    With ``delta(0) = 0`` every factor ``d`` raises the degree, so the row
    coefficients ``g(w)`` of ``sum_m B d (D d)^m`` obey
    ``g(w) = B d_w + sum_{w = u v} g(u) D d_v`` and degree k needs only m <= k.
    A realization with ``delta(0) != 0`` is re-centered first.
    """
    recentered = False
    if not _centered(F.delta):
        F = recenter(F)
        recentered = True
    col, delta = F.colligation, F.delta
    d = delta.nvars
    tilde = {w: np.kron(c, np.eye(col.ell)) for w, c in delta.coefficient_matrices().items()}
    by_deg: dict[int, list] = {}
    for w, t in tilde.items():
        by_deg.setdefault(len(w), []).append((w, t, col.D @ t))

    comps = [FreePoly.constant(col.alpha, d)]
    g: dict[tuple, np.ndarray] = {}
    levels: list[list] = [[]]  # levels[k] = words of degree k with nonzero g
    stored = 0
    for k in range(1, K + 1):
        cur: dict[tuple, np.ndarray] = {}
        for w, t, _ in by_deg.get(k, ()):
            cur[w] = col.B @ t
        for j in range(1, k):
            for v, _, Dt in by_deg.get(k - j, ()):
                for u in levels[j]:
                    w = u + v
                    contrib = g[u] @ Dt
                    cur[w] = cur[w] + contrib if w in cur else contrib
        cur = {w: row for w, row in cur.items() if np.any(row)}
        stored += len(cur)
        if stored > budget:
            raise BudgetError(f"symbolic expansion exceeded {budget} words at degree {k} "
                              f"(complete through degree {k - 1})")
        g.update(cur)
        levels.append(list(cur))
        comps.append(FreePoly(d, {w: (row @ col.C)[0, 0] for w, row in cur.items()}))
    return SeriesExpansion(tuple(comps), K, None, recentered)


def series_components(F, K: int) -> SeriesExpansion:
    """Homogeneous components of a realized or polynomial evaluator."""
    if isinstance(F, RealizedFunction):
        return symbolic_expand(F, K)
    p = F if isinstance(F, FreePoly) else getattr(F, "poly", None)
    if p is None:
        raise TypeError("series components need a RealizedFunction or a polynomial evaluator")
    comps = [p.component(k) for k in range(K + 1)]
    return SeriesExpansion(tuple(comps), K)


def default_nodes(K: int) -> int:
    return 1 << math.ceil(math.log2(4 * (K + 1)))


def _circle_ok(delta, x, radius, N, margin, phase=0.0):
    if delta is None:
        return True
    for j in range(N):
        lam = radius * np.exp(2j * np.pi * (j + phase) / N)
        if not is_member(delta, x.scale(lam), margin)[0]:
            return False
    return True


@dataclass(frozen=True)
class DFTComponents:
    components: list
    radius: float
    nodes: int
    #: per-component aliasing bounds, or None when no outer radius was certified
    aliasing: list | None
    outer_radius: float | None
    M_outer: float | None


def dft_components(F: Callable, x: MatrixTuple, K: int, N: int | None = None, r: float = 1.0,
                   margin: float = DEFAULT_MARGIN, outer_radius: float | None = None,
                   max_shrinks: int = 40) -> DFTComponents:
    """``A_k = r^{-k} (1/N) sum_j F(r w^j x) w^{-jk}``, ``w = exp(2 pi i / N)``.

    ``r`` is halved until every node ``r w^j x`` lies in the domain with the
    given margin.  Aliasing adds ``sum_{p>=1} r^{pN} P_{k+pN}(x)``; it is bounded
    by ``M r'^{-k} rho^N / (1 - rho^N)``, ``rho = r / r'``, when an outer circle
    of radius ``r'`` inside the domain is found.  ``M`` is 1 (plus slack) for an
    isometric realization and the sampled maximum of ``||F||`` otherwise.
    """
    N = default_nodes(K) if N is None else N
    if N <= K:
        raise ValueError("need more nodes than the highest extracted degree")
    if r > 1:
        raise ValueError("extraction radius must be at most 1")
    delta = getattr(F, "delta", None)
    for _ in range(max_shrinks):
        if _circle_ok(delta, x, r, N, margin):
            break
        r *= 0.5
    else:
        raise DomainError("no admissible extraction radius: the scaling ray from 0 leaves the domain")

    nodes = r * np.exp(2j * np.pi * np.arange(N) / N)
    V = np.array([F(x.scale(lam)) for lam in nodes])
    coeffs = np.fft.fft(V, axis=0) / N
    comps = [coeffs[k] / r ** k for k in range(K + 1)]

    aliasing, M_out = None, None
    candidates = [outer_radius] if outer_radius is not None else [r * t for t in (4.0, 2.0, 1.5, 1.2, 1.1)]
    for rp in candidates:
        if rp <= r or not _circle_ok(delta, x, rp, 2 * N, margin):
            continue
        if isinstance(F, RealizedFunction) and F.isometric:
            M_out = 1.0 + PSD_SLACK
        else:
            M_out = max(opnorm(F(x.scale(rp * np.exp(2j * np.pi * j / (2 * N))))) for j in range(2 * N))
        rho_n = (r / rp) ** N
        aliasing = [M_out * rp ** (-k) * rho_n / (1 - rho_n) for k in range(K + 1)]
        outer_radius = rp
        break
    else:
        outer_radius = None
    return DFTComponents(comps, r, N, aliasing, outer_radius, M_out)


@dataclass(frozen=True)
class CauchyCertificate:
    M: float
    r: float
    norms: list
    bounds: list
    tol: float

    @property
    def passed(self) -> bool:
        return all(a <= b + self.tol for a, b in zip(self.norms, self.bounds))


def cauchy_certificate(F: Callable, x: MatrixTuple, r: float, samples: int = 256, K: int = 12,
                       components: Sequence | None = None, tol: float = 1e-8) -> CauchyCertificate:
    """Check ``||P_k(x)|| <= M / r^k`` with ``M`` the sampled max of ``||F(lam x)||`` on ``|lam| = r``.

    Circle points must lie in the closed domain (``||delta|| <= 1``); evaluating
    on the boundary is left to ``F``.  Without ``components`` they are extracted
    by :func:`dft_components`.
    """
    if r <= 1:
        raise ValueError("Cauchy radius must exceed 1")
    delta = getattr(F, "delta", None)
    lams = r * np.exp(2j * np.pi * np.arange(samples) / samples)
    if delta is not None:
        for lam in lams:
            nrm = delta_norm(delta, x.scale(lam))
            if nrm > 1 + 1e-12:
                raise DomainError(f"Cauchy circle of radius {r} leaves the domain", norm=nrm)
    M = max(opnorm(F(x.scale(lam))) for lam in lams)
    if components is None:
        components = dft_components(F, x, K).components
    norms = [opnorm(A) for A in components]
    bounds = [M / r ** k for k in range(len(norms))]
    return CauchyCertificate(M, r, norms, bounds, tol)


def certified_radius(F: Callable, x: MatrixTuple, margin: float = DEFAULT_MARGIN,
                     samples: int = 64) -> float:
    """Largest ``r`` found with ``lam x`` inside the domain for ``|lam| <= r``.

    Exact for degree-one homogeneous delta (balanced domains), where the norm
    scales linearly; otherwise a geometric search checked on sample circles.
    Returns ``inf`` when the whole ray stays inside (e.g. ``x = 0``).
    """
    delta = getattr(F, "delta", None)
    if delta is None:
        return math.inf
    nrm = delta_norm(delta, x)
    if is_homogeneous_linear(delta):
        return math.inf if nrm == 0 else (1 - margin) / nrm
    r = 1.0
    if not _circle_ok(delta, x, r, samples, margin):
        return 0.0
    for _ in range(60):
        if not _circle_ok(delta, x, 2 * r, samples, margin):
            break
        r *= 2
    else:
        return math.inf
    lo, hi = r, 2 * r
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _circle_ok(delta, x, mid, samples, margin):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Approximation:
    poly: FreePoly
    max_error: float
    K: int
    certified: bool
    radii: list


def approximate_on_finite_set(F: Callable, points: Sequence[MatrixTuple], eps: float,
                              K_max: int = 64) -> Approximation:
    """Truncated series ``sum_{k<=K} P_k`` within ``eps`` of F on ``points``.

    K is the smallest degree with ``M r^{-(K+1)} / (1 - 1/r) <= eps`` at every
    point, ``r > 1`` a certified radius along the point's ray.  Points without
    such a radius make the result uncertified and K falls back to ``K_max``.
    """
    radii, K, certified = [], 0, True
    for x in points:
        r = certified_radius(F, x)
        radii.append(r)
        if r == math.inf:
            continue
        if not r > 1:
            certified = False
            K = K_max
            continue
        if isinstance(F, RealizedFunction) and F.isometric:
            M = 1.0 + PSD_SLACK
        else:
            M = max(opnorm(F(x.scale(r * np.exp(2j * np.pi * j / 64)))) for j in range(64))
        need = math.log(M / (eps * (1 - 1 / r))) / math.log(r) - 1
        K = max(K, max(0, math.ceil(need)))
    if K > K_max:
        K = K_max
        certified = False
    poly = series_components(F, K).partial_sum()
    err = max((opnorm(F(x) - poly(x)) for x in points), default=0.0)
    return Approximation(poly, err, K, certified, radii)
