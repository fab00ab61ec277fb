"""Dense complex linear algebra kernel.

Matrices are plain ``numpy`` ``complex128`` arrays.  A point of the domain is a
:class:`MatrixTuple`, a d-tuple of n-by-n matrices acting on the same space.

Resolvents are never formed by explicit inversion; :func:`solve` factors once,
estimates the reciprocal condition number and refuses matrices that are
singular to working precision.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import DimensionError, FixtureError, SingularMatrixError

EPS = np.finfo(float).eps

#: reciprocal condition numbers below this are treated as singular
RCOND_FLOOR = 1e-14
#: full SVD up to this size, power iteration on A^H A above
SVD_MAX_DIM = 256
HERM_TOL = 1e-8


def as_cmatrix(A) -> np.ndarray:
    """Coerce ``A`` to a finite 2-D complex array."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def unit(i: int, j: int, n: int) -> np.ndarray:
    """Matrix unit E_ij (1-based indices)."""
    E = np.zeros((n, n), dtype=complex)
    E[i - 1, j - 1] = 1.0
    return E


def matmul(A, B) -> np.ndarray:
    A, B = as_cmatrix(A), as_cmatrix(B)
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def adjoint(A) -> np.ndarray:
    return as_cmatrix(A).conj().T


def kron(A, B) -> np.ndarray:
    return np.kron(as_cmatrix(A), as_cmatrix(B))


def block_assemble(grid: Sequence[Sequence[np.ndarray]]) -> np.ndarray:
    """Assemble a block matrix from a rectangular grid of conformable blocks."""
    rows = [list(r) for r in grid]
    if not rows or not rows[0]:
        raise DimensionError("empty block grid")
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise DimensionError("ragged block grid")
    rows = [[as_cmatrix(b) for b in r] for r in rows]
    for r in rows:
        if len({b.shape[0] for b in r}) != 1:
            raise DimensionError("blocks in one block-row have different heights")
    for j in range(ncols):
        if len({r[j].shape[1] for r in rows}) != 1:
            raise DimensionError("blocks in one block-column have different widths")
    return np.block(rows)


def blkdiag(*blocks) -> np.ndarray:
    return scipy.linalg.block_diag(*[as_cmatrix(b) for b in blocks]).astype(complex)


def _power_norm(A: np.ndarray, rtol: float = 1e-14, maxiter: int = 20000) -> float:
    # power iteration on A^H A; deterministic start vector
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(maxiter):
        w = A.conj().T @ (A @ v)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        v = w / lam
        new = np.sqrt(lam)
        if abs(new - sigma) <= rtol * new:
            return float(new)
        sigma = new
    # slow convergence (clustered top singular values): fall back to SVD
    return float(np.linalg.svd(A, compute_uv=False)[0])


def opnorm(A) -> float:
    """Operator (spectral) norm, the largest singular value."""
    A = as_cmatrix(A)
    if A.size == 0:
        return 0.0
    if max(A.shape) <= SVD_MAX_DIM:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    return _power_norm(A)


def rcond(A) -> float:
    """LAPACK 1-norm estimate of the reciprocal condition number."""
    A = as_cmatrix(A)
    lu, _ = scipy.linalg.lu_factor(A, check_finite=False)
    return _gecon(A, lu)


def _gecon(A, lu) -> float:
    anorm = np.linalg.norm(A, 1)
    if anorm == 0.0:
        return 0.0
    gecon = lapack.get_lapack_funcs("gecon", (lu,))
    rc, info = gecon(lu, anorm, norm="1")
    return float(rc) if info == 0 else 0.0


def solve(A, B, *, rcond_floor: float = RCOND_FLOOR, return_residual: bool = False):
    """Solve ``A X = B`` by LU with a condition check.

    Raises :class:`SingularMatrixError` when the reciprocal condition estimate
    falls below ``rcond_floor``.  With ``return_residual`` the relative residual
    ``||AX - B|| / ||B||`` is returned alongside ``X``.
    """
    A, B = as_cmatrix(A), as_cmatrix(B)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"solve needs a square matrix, got {A.shape}")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot solve {A.shape} system with right-hand side {B.shape}")
    if A.shape[0] == 0:
        X = np.zeros((0, B.shape[1]), dtype=complex)
        return (X, 0.0) if return_residual else X
    with np.errstate(all="ignore"), warnings.catch_warnings():
        # singularity is reported through the condition estimate below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    rc = _gecon(A, lu)
    if not rc >= rcond_floor:
        raise SingularMatrixError(rc)
    X = scipy.linalg.lu_solve((lu, piv), B, check_finite=False)
    if not return_residual:
        return X
    bn = opnorm(B)
    res = opnorm(A @ X - B) / bn if bn > 0 else opnorm(A @ X - B)
    return X, res


def min_eig_hermitian(A, herm_tol: float = HERM_TOL) -> float:
    """Smallest eigenvalue of the Hermitian part of an (almost) Hermitian matrix."""
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got {A.shape}")
    scale = opnorm(A)
    if opnorm(A - A.conj().T) > herm_tol * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian to tolerance")
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    Z = complex_gaussian((n, n), rng)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    """A d-tuple ``(x^1, ..., x^d)`` of n-by-n complex matrices."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(as_cmatrix(p).copy() for p in self.parts)
        if not parts:
            raise DimensionError("a matrix tuple needs at least one part")
        n = parts[0].shape[0]
        for p in parts:
            if p.shape != (n, n):
                raise DimensionError(f"parts must all be {n}x{n}, got {p.shape}")
            p.setflags(write=False)
        object.__setattr__(self, "parts", parts)

    @property
    def d(self) -> int:
        return len(self.parts)

    @property
    def dim(self) -> int:
        return self.parts[0].shape[0]

    def __getitem__(self, r):
        return self.parts[r]

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    @classmethod
    def zeros(cls, d: int, n: int) -> "MatrixTuple":
        return cls(tuple(np.zeros((n, n), dtype=complex) for _ in range(d)))

    @classmethod
    def random(cls, d: int, n: int, rng: np.random.Generator) -> "MatrixTuple":
        return cls(tuple(complex_gaussian((n, n), rng) for _ in range(d)))

    def map(self, fn) -> "MatrixTuple":
        return MatrixTuple(tuple(fn(p) for p in self.parts))

    def scale(self, lam) -> "MatrixTuple":
        return self.map(lambda p: lam * p)

    def __add__(self, other: "MatrixTuple") -> "MatrixTuple":
        return MatrixTuple(tuple(a + b for a, b in zip(self.parts, other.parts)))

    def similar(self, s, s_inv=None) -> "MatrixTuple":
        """Return ``s x s^{-1}`` (so that ``s`` intertwines ``x`` with the result)."""
        s = as_cmatrix(s)
        if s_inv is None:
            return self.map(lambda p: solve(s.T, (s @ p).T).T)
        return self.map(lambda p: s @ p @ s_inv)

    def compress(self, k: int) -> "MatrixTuple":
        """``P_k x P_k`` kept at full size, P_k the projection on the first k basis vectors."""
        def cut(p):
            q = np.zeros_like(p)
            q[:k, :k] = p[:k, :k]
            return q
        return self.map(cut)

    def allclose(self, other: "MatrixTuple", atol=0.0, rtol=1e-12) -> bool:
        return self.d == other.d and self.dim == other.dim and all(
            np.allclose(a, b, atol=atol, rtol=rtol) for a, b in zip(self.parts, other.parts))

    def to_json(self) -> dict:
        return {"dim": self.dim, "parts": [matrix_to_json(p) for p in self.parts]}

    @classmethod
    def from_json(cls, obj) -> "MatrixTuple":
        try:
            parts = tuple(matrix_from_json(p) for p in obj["parts"])
            t = cls(parts)
        except (KeyError, TypeError, DimensionError, ValueError) as exc:
            raise FixtureError(f"bad matrix tuple fixture: {exc}") from exc
        if "dim" in obj and obj["dim"] != t.dim:
            raise FixtureError(f"declared dim {obj['dim']} but parts are {t.dim}x{t.dim}")
        return t


def direct_sum(tuples: Iterable[MatrixTuple]) -> MatrixTuple:
    """Block-diagonal direct sum of tuples sharing d."""
    tuples = list(tuples)
    if not tuples:
        raise DimensionError("direct sum of nothing")
    d = tuples[0].d
    if any(t.d != d for t in tuples):
        raise DimensionError("direct sum of tuples with different d")
    return MatrixTuple(tuple(blkdiag(*[t[r] for t in tuples]) for r in range(d)))


def upper_block_tuple(a: MatrixTuple, b: MatrixTuple, c: MatrixTuple) -> MatrixTuple:
    """The 2n tuple ``[[a^r, b^r], [0, c^r]]``."""
    z = np.zeros((c.dim, a.dim), dtype=complex)
    return MatrixTuple(tuple(np.block([[a[r], b[r]], [z, c[r]]]) for r in range(a.d)))


def matrix_to_json(A) -> dict:
    A = as_cmatrix(A)
    flat = A.reshape(-1)
    return {"rows": A.shape[0], "cols": A.shape[1],
            "re": [float(v) for v in flat.real], "im": [float(v) for v in flat.imag]}


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * (rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureError(f"bad matrix encoding: {exc}") from exc
    if re.shape != (rows * cols,) or im.shape != (rows * cols,):
        raise FixtureError(f"matrix encoding needs {rows * cols} entries")
    A = (re + 1j * im).reshape(rows, cols)
    if not np.all(np.isfinite(A)):
        raise FixtureError("matrix encoding has non-finite entries")
    return A
