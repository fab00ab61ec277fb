"""Domains ``G = {x : ||delta(x)|| < 1}`` cut out by a matrix of free polynomials.

``delta(x)`` for an I-by-J polynomial matrix and an n-by-n tuple is the
(nI)-by-(nJ) block matrix whose (i, j) block is ``delta_ij(x)``; its norm is
the operator norm from ``(C^n)^J`` to ``(C^n)^I``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SamplingError
from .freepoly import FreePoly, PolyMatrix, WordCache, eval_many
from .matcore import MatrixTuple, complex_gaussian, haar_unitary, opnorm, as_cmatrix

#: margin applied where a point must sit strictly inside for downstream evaluation
DEFAULT_MARGIN = 1e-3
#: relative singular value cutoff for intertwiner nullspaces
NULLSPACE_CUTOFF = 1e-10


def polydisk(d: int) -> PolyMatrix:
    """``diag(x1, ..., xd)``: the domain ``max_r ||x^r|| < 1``."""
    return PolyMatrix([[FreePoly.var(i, d) if i == j else FreePoly.zero(d)
                        for j in range(1, d + 1)] for i in range(1, d + 1)], d)


def row_ball(d: int) -> PolyMatrix:
    """``[x1 ... xd]``: the domain ``x1 x1* + ... + xd xd* < I``."""
    return PolyMatrix([[FreePoly.var(i, d) for i in range(1, d + 1)]], d)


def commutator_delta() -> PolyMatrix:
    """``1 - (x1 x2 - x2 x1)``; its matrix points never lie in the domain."""
    x1, x2 = FreePoly.var(1, 2), FreePoly.var(2, 2)
    return PolyMatrix([[1 - (x1 * x2 - x2 * x1)]], 2)


def delta_eval(delta: PolyMatrix, x: MatrixTuple) -> np.ndarray:
    cache = WordCache(x)
    return np.block([[eval_many(e, x, cache) for e in row] for row in delta.entries])


def delta_norm(delta: PolyMatrix, x: MatrixTuple) -> float:
    return opnorm(delta_eval(delta, x))


def is_member(delta: PolyMatrix, x: MatrixTuple, margin: float = 0.0) -> tuple[bool, float]:
    """Strict membership ``||delta(x)|| < 1 - margin``; returns ``(member, norm)``."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    nrm = delta_norm(delta, x)
    return nrm < 1.0 - margin, nrm


def scale_domain(delta: PolyMatrix, t: float) -> PolyMatrix:
    """``t * delta``, whose domain is ``{x : ||delta(x)|| < 1/t}``."""
    if t <= 0:
        raise ValueError("scale factor must be positive")
    return delta.map(lambda e: e.scale(t))


def is_homogeneous_linear(delta: PolyMatrix) -> bool:
    """True when every entry is homogeneous of degree 1 (or zero).

    For such delta, ``||delta(lam x)|| = |lam| ||delta(x)||`` and the domain is balanced.
    """
    return all(e.is_homogeneous(1) for r in delta.entries for e in r)


@dataclass(frozen=True)
class DomainPoint:
    x: MatrixTuple
    delta_norm: float

    @classmethod
    def at(cls, delta: PolyMatrix, x: MatrixTuple) -> "DomainPoint":
        return cls(x, delta_norm(delta, x))


def sample_point(delta: PolyMatrix, n: int, rng: np.random.Generator, shrink: float = 0.5,
                 max_rejects: int = 10**4, decay: float | None = None) -> MatrixTuple:
    """Random point of size ``n`` with ``||delta(x)|| = shrink`` (to 1e-6).

    A complex Gaussian direction ``g`` is drawn and ``t`` is found by bisection
    so that ``||delta(t g)|| = shrink``.  When ``||delta(0)||`` is not below
    ``shrink`` the sampler falls back to plain rejection and only guarantees
    membership.

    With ``decay`` in (0, 1) entry (i, j) of each part is damped by
    ``decay**(i + j)``, giving points whose leading compressions converge fast.
    """
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    d = delta.nvars
    at_zero = delta_norm(delta, MatrixTuple.zeros(d, n))
    if at_zero >= shrink:
        return _reject_sample(delta, n, rng, max_rejects, at_zero)

    for _ in range(max_rejects):
        g = _direction(d, n, rng, decay)
        f = lambda t: delta_norm(delta, g.scale(t))
        lo, hi = 0.0, 1.0
        for _ in range(60):
            if f(hi) >= shrink:
                break
            lo, hi = hi, 2 * hi
        else:
            continue  # this ray never reaches the target norm
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            val = f(mid)
            if abs(val - shrink) <= 1e-7:
                return g.scale(mid)
            if val < shrink:
                lo = mid
            else:
                hi = mid
        if abs(f(lo) - shrink) <= 1e-6:
            return g.scale(lo)
    raise SamplingError(f"no ray reached ||delta|| = {shrink} after {max_rejects} draws")


def _direction(d, n, rng, decay):
    g = MatrixTuple.random(d, n, rng)
    if decay is None:
        return g
    idx = np.arange(n)
    w = decay ** (idx[:, None] + idx[None, :])
    return g.map(lambda p: p * w)


def _reject_sample(delta, n, rng, max_rejects, at_zero):
    d = delta.nvars
    for _ in range(max_rejects):
        g = MatrixTuple.random(d, n, rng).scale(10 ** rng.uniform(-2, 0.5))
        member, _ = is_member(delta, g)
        if member:
            return g
    raise SamplingError(f"rejection sampling found no member in {max_rejects} draws",
                        norm=at_zero, hint="the scaling ray from 0 never enters the domain")


def sample_similarity(n: int, cond_cap: float, rng: np.random.Generator, return_inverse: bool = False):
    """Random invertible ``s = U diag(sigma) V*`` with ``||s|| = 1`` and ``cond(s) <= cond_cap``."""
    if cond_cap <= 1:
        raise ValueError("cond_cap must exceed 1")
    U, V = haar_unitary(n, rng), haar_unitary(n, rng)
    c = np.exp(rng.uniform(0, np.log(cond_cap)))
    sigma = np.exp(rng.uniform(-np.log(c), 0, size=n))
    sigma[0] = 1.0
    if n > 1:
        sigma[-1] = 1.0 / c
    s = (U * sigma) @ V.conj().T
    if return_inverse:
        return s, (V / sigma) @ U.conj().T
    return s


def inclusion(n: int, m: int) -> np.ndarray:
    """``[I_n; 0]``: intertwines x with ``x + z`` when z is m-by-m."""
    return np.vstack([np.eye(n, dtype=complex), np.zeros((m, n), dtype=complex)])


def intertwiner_space(x: MatrixTuple, y: MatrixTuple, cutoff: float = NULLSPACE_CUTOFF) -> list:
    """Basis of ``{T : T x^r = y^r T for all r}`` from the SVD of the stacked Sylvester system."""
    n, m = x.dim, y.dim
    Im, In = np.eye(m), np.eye(n)
    # column-major vec: vec(T x) = (x^T kron I_m) vec T, vec(y T) = (I_n kron y) vec T
    L = np.vstack([np.kron(xr.T, Im) - np.kron(In, yr) for xr, yr in zip(x, y)])
    _, sv, Vh = np.linalg.svd(L)
    scale = max(1.0, sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > cutoff * scale))
    return [Vh[k].conj().reshape((m, n), order="F") for k in range(rank, m * n)]


def sample_intertwiner(x: MatrixTuple, y: MatrixTuple, rng: np.random.Generator,
                       cutoff: float = NULLSPACE_CUTOFF):
    """A random unit-norm element of the intertwiner space, or ``None`` if it is ``{0}``."""
    basis = intertwiner_space(x, y, cutoff)
    if not basis:
        return None
    coef = complex_gaussian(len(basis), rng)
    T = sum(c * B for c, B in zip(coef, basis))
    return T / opnorm(T)


def conjugate_tuple(x: MatrixTuple, s, s_inv) -> MatrixTuple:
    """``s^{-1} x s`` for a given pair ``(s, s^{-1})``."""
    s, s_inv = as_cmatrix(s), as_cmatrix(s_inv)
    return x.map(lambda p: s_inv @ p @ s)
