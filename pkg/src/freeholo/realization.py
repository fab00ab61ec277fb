"""Transfer-function realizations of Schur-class free functions.

A colligation ``V = [[alpha, B], [C, D]] : C + Lam^I -> C + Lam^J`` with
``dim Lam = ell`` and a polynomial matrix ``delta`` define

    F(x) = alpha I + B' delta'(x) [I - D' delta'(x)]^{-1} C'

where primes denote the tensored operators acting on ``C^n (x) Lam^K``.
Index conventions: ``Lam^K`` is ordered block-major (k in 1..K, then the ell
basis vectors of Lam) and the C^n index is innermost, so ``B' = kron(B, I_n)``,
``D' = kron(D, I_n)``, ``C' = kron(C, I_n)`` and ``delta'(x)`` has (i, j) block
``kron(I_ell, delta_ij(x))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .domain import delta_eval, delta_norm, is_member
from .errors import DimensionError, DivergenceError, DomainError, FixtureError, IsometryError, NotScalarError
from .freepoly import PolyMatrix
from .matcore import (EPS, MatrixTuple, as_cmatrix, complex_gaussian, identity, matrix_from_json,
                      matrix_to_json, min_eig_hermitian, opnorm, solve, upper_block_tuple)

ISO_TOL = 1e-10
PSD_SLACK = 1e-9
NEUMANN_RTOL = 1e-12
NEUMANN_MAX_TERMS = 10**4


@dataclass(frozen=True, eq=False)
class Colligation:
    alpha: complex
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    ell: int
    I: int
    J: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        for name in ("B", "C", "D"):
            M = as_cmatrix(getattr(self, name)).copy()
            M.setflags(write=False)
            object.__setattr__(self, name, M)
        li, lj = self.ell * self.I, self.ell * self.J
        if self.B.shape != (1, li) or self.C.shape != (lj, 1) or self.D.shape != (lj, li):
            raise DimensionError(
                f"colligation blocks must be B 1x{li}, C {lj}x1, D {lj}x{li}; got "
                f"{self.B.shape}, {self.C.shape}, {self.D.shape}")

    @property
    def matrix(self) -> np.ndarray:
        """The full ``(1 + ell J) x (1 + ell I)`` block operator."""
        return np.block([[np.array([[self.alpha]]), self.B], [self.C, self.D]])

    @property
    def defect(self) -> float:
        V = self.matrix
        return opnorm(V.conj().T @ V - np.eye(V.shape[1]))

    @classmethod
    def from_matrix(cls, V, ell: int, I: int, J: int) -> "Colligation":
        V = as_cmatrix(V)
        if V.shape != (1 + ell * J, 1 + ell * I):
            raise DimensionError(f"expected a {(1 + ell * J, 1 + ell * I)} matrix, got {V.shape}")
        return cls(V[0, 0], V[:1, 1:], V[1:, :1], V[1:, 1:], ell, I, J)

    def to_json(self) -> dict:
        return {"alpha": [self.alpha.real, self.alpha.imag], "B": matrix_to_json(self.B),
                "C": matrix_to_json(self.C), "D": matrix_to_json(self.D),
                "ell": self.ell, "I": self.I, "J": self.J}

    @classmethod
    def from_json(cls, obj) -> "Colligation":
        try:
            re, im = obj["alpha"]
            return cls(complex(re, im), matrix_from_json(obj["B"]), matrix_from_json(obj["C"]),
                       matrix_from_json(obj["D"]), int(obj["ell"]), int(obj["I"]), int(obj["J"]))
        except (KeyError, TypeError, ValueError, DimensionError) as exc:
            raise FixtureError(f"bad colligation fixture: {exc}") from exc


def validate_isometry(col: Colligation, iso_tol: float = ISO_TOL) -> float:
    """Return ``||V*V - I||``; raise :class:`IsometryError` above ``iso_tol``."""
    defect = col.defect
    if not defect <= iso_tol:
        raise IsometryError(defect, iso_tol)
    return defect


def random_colligation(I: int, J: int, ell: int, rng: np.random.Generator) -> Colligation:
    """Isometric colligation from the QR factor of a complex Gaussian matrix."""
    if J < I or min(I, J, ell) < 1:
        raise DimensionError(f"no isometry C + Lam^{I} -> C + Lam^{J} with ell = {ell}")
    Z = complex_gaussian((1 + ell * J, 1 + ell * I), rng)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Colligation.from_matrix(Q * (d / np.abs(d)), ell, I, J)


def rotate_aux_basis(col: Colligation, U) -> Colligation:
    """Same transfer function after the change of basis ``U`` (ell x ell unitary) in Lam."""
    U = as_cmatrix(U)
    WI, WJ = np.kron(np.eye(col.I), U), np.kron(np.eye(col.J), U)
    return Colligation(col.alpha, col.B @ WI.conj().T, WJ @ col.C, WJ @ col.D @ WI.conj().T,
                       col.ell, col.I, col.J)


class Dotted(NamedTuple):
    """Tensored operators of the realization at one point."""
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    delta: np.ndarray
    delta_norm: float


def tensor_delta(dx: np.ndarray, I: int, J: int, n: int, ell: int) -> np.ndarray:
    """Rearrange the (nI)x(nJ) block matrix ``delta(x)`` into ``delta(x) (x) I_Lam``."""
    blocks = dx.reshape(I, n, J, n)
    out = np.einsum("ahbg,lm->alhbmg", blocks, np.eye(ell))
    return out.reshape(I * ell * n, J * ell * n)


@dataclass(frozen=True, eq=False)
class RealizedFunction:
    """The free function realized by ``colligation`` over the domain of ``delta``."""

    colligation: Colligation
    delta: PolyMatrix
    iso_tol: float = ISO_TOL
    isometric: bool = field(init=False)

    def __post_init__(self):
        col = self.colligation
        if (self.delta.I, self.delta.J) != (col.I, col.J):
            raise DimensionError(f"delta is {self.delta.I}x{self.delta.J} but the colligation "
                                 f"expects {col.I}x{col.J}")
        # non-isometric colligations are allowed; Schur-bound checks key off this flag
        object.__setattr__(self, "isometric", col.defect <= self.iso_tol)

    @property
    def alpha(self) -> complex:
        return self.colligation.alpha

    def dotted(self, x: MatrixTuple) -> Dotted:
        col, n = self.colligation, x.dim
        dx = delta_eval(self.delta, x)
        In = identity(n)
        return Dotted(np.kron(col.B, In), np.kron(col.C, In), np.kron(col.D, In),
                      tensor_delta(dx, col.I, col.J, n, col.ell), opnorm(dx))

    def __call__(self, x: MatrixTuple) -> np.ndarray:
        return eval_exact(self, x)


def _require_member(F: RealizedFunction, x: MatrixTuple, margin: float):
    member, nrm = is_member(F.delta, x, margin)
    if not member:
        raise DomainError("point is outside the domain", norm=nrm)


def eval_exact(F: RealizedFunction, x: MatrixTuple, margin: float = 0.0) -> np.ndarray:
    """Evaluate the realization with one linear solve for the resolvent."""
    if x.d < F.delta.nvars:
        raise DimensionError(f"delta uses {F.delta.nvars} variables but the point has {x.d}")
    _require_member(F, x, margin)
    dot = F.dotted(x)
    M = np.eye(dot.D.shape[0]) - dot.D @ dot.delta
    Y = solve(M, dot.C)
    return F.alpha * identity(x.dim) + dot.B @ (dot.delta @ Y)


@dataclass(frozen=True)
class NeumannReport:
    terms_used: int
    q: float
    tail_bound: float
    value: np.ndarray
    #: floating point allowance for comparing ``value`` with an independent evaluation
    rounding: float = 0.0


def _neumann_setup(F: RealizedFunction, x: MatrixTuple):
    dot = F.dotted(x)
    K = dot.D @ dot.delta
    q = opnorm(K)
    if not q < 1:
        raise DivergenceError(f"Neumann series diverges: ||D' delta'(x)|| = {q:.6g} >= 1")
    col = F.colligation
    prefactor = opnorm(col.B) * opnorm(dot.delta) * opnorm(col.C)
    return dot, K, q, prefactor


def _rounding(F, dot, k, q, prefactor):
    size = dot.D.shape[0]
    return 8 * EPS * (k + size) * (abs(F.alpha) + prefactor / (1 - q) ** 2)


def eval_neumann(F: RealizedFunction, x: MatrixTuple, m: int | None = None) -> NeumannReport:
    """Truncated Neumann series ``alpha I + sum_{k<m} B' d' (D' d')^k C'``.

    The tail after ``m`` terms is bounded by ``||B|| ||d'|| ||C|| q^m / (1 - q)``
    with ``q = ||D' d'||``.  Without ``m`` the smallest count with
    ``tail <= 1e-12 (1 + ||value||)`` is used (at most 10^4 terms).
    """
    if m is not None:
        return neumann_sequence(F, x, m)[m]
    dot, K, q, prefactor = _neumann_setup(F, x)
    BD = dot.B @ dot.delta
    value = F.alpha * identity(x.dim)
    W = dot.C
    k = 0
    while True:
        tail = prefactor * q ** k / (1 - q)
        if tail <= NEUMANN_RTOL * (1 + opnorm(value)) or k == NEUMANN_MAX_TERMS:
            break
        value = value + BD @ W
        W = K @ W
        k += 1
    return NeumannReport(k, q, tail, value, _rounding(F, dot, k, q, prefactor))


def neumann_sequence(F: RealizedFunction, x: MatrixTuple, m_max: int) -> list[NeumannReport]:
    """Reports for ``m = 0, 1, ..., m_max`` terms, sharing one setup."""
    if m_max < 0:
        raise ValueError("number of Neumann terms must be non-negative")
    dot, K, q, prefactor = _neumann_setup(F, x)
    BD = dot.B @ dot.delta
    value = F.alpha * identity(x.dim)
    W = dot.C
    out = []
    for k in range(m_max + 1):
        out.append(NeumannReport(k, q, prefactor * q ** k / (1 - q), value,
                                 _rounding(F, dot, k, q, prefactor)))
        value = value + BD @ W
        W = K @ W
    return out


def defect_check(F: RealizedFunction, x: MatrixTuple) -> tuple[float, float]:
    """Verify the factorization of ``I - F(x)* F(x)``.

    The left side uses ``F(x)`` computed through the push-through form
    ``alpha + B' [I - d' D']^{-1} d' C'``; the right side is
    ``C'* [I - d'* D'*]^{-1} [I - d'* d'] [I - D' d']^{-1} C'``.
    Returns ``(residual, min_eig)`` where ``min_eig`` is the smallest eigenvalue
    of ``I - F(x)* F(x)``.
    """
    _require_member(F, x, 0.0)
    dot = F.dotted(x)
    n = x.dim
    dI, dJ = dot.delta.shape
    Fx = F.alpha * identity(n) + dot.B @ solve(np.eye(dI) - dot.delta @ dot.D, dot.delta @ dot.C)
    lhs = identity(n) - Fx.conj().T @ Fx
    W = solve(np.eye(dJ) - dot.D @ dot.delta, dot.C)
    rhs = W.conj().T @ ((np.eye(dJ) - dot.delta.conj().T @ dot.delta) @ W)
    residual = opnorm(lhs - rhs)
    return residual, min_eig_hermitian((lhs + lhs.conj().T) / 2)


# Moebius layer -------------------------------------------------------------

def _check_alpha(alpha):
    if not abs(alpha) < 1:
        raise ValueError(f"Moebius parameter must lie in the open unit disk, got |alpha| = {abs(alpha):.6g}")


def mobius_apply(alpha: complex, Z) -> np.ndarray:
    """``phi_alpha(Z) = (Z - alpha I)(I - conj(alpha) Z)^{-1}``.

    Values of Schur-class functions may sit on ``||Z|| = 1`` up to rounding, so
    norms up to ``1 + PSD_SLACK`` are accepted; the resolvent stays invertible
    because ``|alpha| < 1``.
    """
    _check_alpha(alpha)
    Z = as_cmatrix(Z)
    nz = opnorm(Z)
    if nz > 1 + PSD_SLACK:
        raise DomainError("Moebius map needs ||Z|| <= 1", norm=nz)
    I = identity(Z.shape[0])
    # (Z - a)(1 - a* Z)^{-1} = (1 - a* Z)^{-1}(Z - a): the factors commute
    return solve(I - np.conj(alpha) * Z, Z - alpha * I)


def mobius_series(alpha: complex, Z, m: int) -> np.ndarray:
    """Partial sum ``-alpha I + (1 - |alpha|^2) sum_{k=1}^{m} conj(alpha)^{k-1} Z^k``."""
    _check_alpha(alpha)
    Z = as_cmatrix(Z)
    nz = opnorm(Z)
    if not nz < 1:
        raise DomainError("Moebius power series needs ||Z|| < 1", norm=nz)
    I = identity(Z.shape[0])
    out = -alpha * I
    P = I
    ac = np.conj(alpha)
    for k in range(1, m + 1):
        P = P @ Z
        out = out + (1 - abs(alpha) ** 2) * ac ** (k - 1) * P
    return out


def mobius_tail_bound(alpha: complex, znorm: float, m: int) -> float:
    """Bound ``(1 - |alpha|^2) ||Z||^{m+1} / (1 - |alpha| ||Z||)`` on the series tail."""
    return (1 - abs(alpha) ** 2) * znorm ** (m + 1) / (1 - abs(alpha) * znorm)


def alpha_at_origin(F: Callable, d: int, n: int = 2, tol: float = 1e-10) -> complex:
    """Read alpha off ``F(0) = alpha I``; raises :class:`NotScalarError` otherwise."""
    F0 = F(MatrixTuple.zeros(d, n))
    alpha = complex(np.trace(F0) / n)
    off = opnorm(F0 - alpha * identity(n))
    if off > tol:
        raise NotScalarError(f"F(0) is not scalar: ||F(0) - alpha I|| = {off:.3e}")
    return alpha


class MobiusComposite:
    """``H = phi_alpha o F`` as an evaluator."""

    def __init__(self, F: Callable, alpha: complex):
        _check_alpha(alpha)
        self.F = F
        self.alpha = complex(alpha)
        self.delta = getattr(F, "delta", None)

    def __call__(self, x: MatrixTuple) -> np.ndarray:
        return mobius_apply(self.alpha, self.F(x))

    def inverse(self) -> "MobiusComposite":
        """``phi_{-alpha} o H``, which evaluates back to F."""
        return MobiusComposite(self, -self.alpha)


def compose_mobius(F: Callable, alpha: complex | None = None, d: int | None = None) -> MobiusComposite:
    """Compose with the Moebius map that sends ``F(0) = alpha I`` to 0.

    ``alpha`` defaults to the scalar read off ``F(0)``; ``d`` is the number of
    variables (taken from ``F.delta`` when available).
    """
    if alpha is None:
        if d is None:
            d = F.delta.nvars
        alpha = alpha_at_origin(F, d)
    return MobiusComposite(F, alpha)


# Derivatives ---------------------------------------------------------------

def block_derivative(F: Callable, a: MatrixTuple, h: MatrixTuple, eps: float | None = None) -> np.ndarray:
    """``DF(a)[h]`` from the (1, 2) block of ``F([[a, eps h], [0, a]]) / eps``.

    The identity is exact for nc functions, so ``eps`` only has to keep the
    block point inside the domain.  By default
    ``eps = 1e-2 (1 - ||delta(a)||) / max(1, max_r ||h^r||)``.
    """
    delta = getattr(F, "delta", None)
    hn = max(opnorm(p) for p in h)
    if eps is None:
        if delta is None:
            eps = 1.0 / max(1.0, hn)
        else:
            eps = 1e-2 * max(1.0 - delta_norm(delta, a), 0.0) / max(1.0, hn)
            if eps == 0.0:
                raise DomainError("base point is not inside the domain", norm=delta_norm(delta, a))
    block = upper_block_tuple(a, h.scale(eps), a)
    if delta is not None:
        member, nrm = is_member(delta, block)
        if not member:
            raise DomainError("block point [[a, eps h], [0, a]] leaves the domain", norm=nrm,
                              hint=f"retry with eps below {eps / 2:.3e}")
    n = a.dim
    return F(block)[:n, n:] / eps


def richardson_derivative(F: Callable, a: MatrixTuple, h: MatrixTuple, step: float = 1e-4) -> np.ndarray:
    """Central differences with one Richardson extrapolation step (error O(step^4))."""
    def central(t):
        return (F(a + h.scale(t)) - F(a + h.scale(-t))) / (2 * t)
    return (4 * central(step / 2) - central(step)) / 3
