"""Free (non-commutative) polynomials in d variables.

A word is a tuple of 1-based variable indices, read left to right as an
operator product: ``(1, 2)`` is ``x1 x2``.  The empty tuple is the unit word.
"""
from __future__ import annotations

from numbers import Number
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DimensionError, FixtureError
from .matcore import MatrixTuple, identity

Word = tuple


def word_key(w: Word):
    """Graded lexicographic order: by degree, then lexicographically."""
    return (len(w), w)


class FreePoly:
    """Immutable free polynomial with complex coefficients.

    Only exact zeros are dropped from the term map; numerical cleanup is left
    to the caller so that the algebra stays exact.
    """

    __slots__ = ("_nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[Word, complex] | None = None):
        if nvars < 1:
            raise ValueError("a free polynomial needs at least one variable")
        clean = {}
        for w, c in (terms or {}).items():
            w = tuple(int(i) for i in w)
            if any(i < 1 or i > nvars for i in w):
                raise ValueError(f"word {w} uses a variable outside x1..x{nvars}")
            c = complex(c)
            if c != 0:
                clean[w] = c
        self._nvars = int(nvars)
        self._terms = MappingProxyType(dict(sorted(clean.items(), key=lambda kv: word_key(kv[0]))))

    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> Mapping[Word, complex]:
        return self._terms

    @classmethod
    def constant(cls, c, nvars: int = 1) -> "FreePoly":
        return cls(nvars, {(): c})

    @classmethod
    def var(cls, i: int, nvars: int | None = None) -> "FreePoly":
        return cls(nvars or i, {(i,): 1.0})

    @classmethod
    def zero(cls, nvars: int = 1) -> "FreePoly":
        return cls(nvars)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((len(w) for w in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def is_homogeneous(self, k: int | None = None) -> bool:
        degs = {len(w) for w in self._terms}
        if k is None:
            return len(degs) <= 1
        return degs <= {k}

    def constant_term(self) -> complex:
        return self._terms.get((), 0j)

    def with_nvars(self, nvars: int) -> "FreePoly":
        return FreePoly(nvars, self._terms)

    def _coerce(self, other):
        if isinstance(other, FreePoly):
            return other
        if isinstance(other, Number):
            return FreePoly.constant(other, self._nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0) + c
        return FreePoly(max(self._nvars, other._nvars), out)

    __radd__ = __add__

    def __neg__(self):
        return FreePoly(self._nvars, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "FreePoly":
        s = complex(s)
        return FreePoly(self._nvars, {w: s * c for w, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, FreePoly):
            return NotImplemented
        out = {}
        for u, a in self._terms.items():
            for v, b in other._terms.items():
                w = u + v
                out[w] = out.get(w, 0) + a * b
        return FreePoly(max(self._nvars, other._nvars), out)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only natural powers of free polynomials are defined")
        out = FreePoly.constant(1.0, self._nvars)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Number):
            other = FreePoly.constant(other, self._nvars)
        if not isinstance(other, FreePoly):
            return NotImplemented
        return dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        from .polyparse import print_poly
        return f"FreePoly({print_poly(self)!r}, nvars={self._nvars})"

    def homogeneous_split(self) -> list["FreePoly"]:
        """Components indexed by degree; component k holds exactly the degree-k terms."""
        comps = [dict() for _ in range(self.degree() + 1)]
        for w, c in self._terms.items():
            comps[len(w)][w] = c
        return [FreePoly(self._nvars, t) for t in comps]

    def component(self, k: int) -> "FreePoly":
        return FreePoly(self._nvars, {w: c for w, c in self._terms.items() if len(w) == k})

    def truncate(self, K: int) -> "FreePoly":
        return FreePoly(self._nvars, {w: c for w, c in self._terms.items() if len(w) <= K})

    def __call__(self, x: MatrixTuple) -> np.ndarray:
        return evaluate(self, x)

    def to_json(self) -> dict:
        return {"nvars": self._nvars,
                "terms": [{"word": list(w), "re": c.real, "im": c.imag} for w, c in self._terms.items()]}

    @classmethod
    def from_json(cls, obj) -> "FreePoly":
        try:
            terms = {}
            for t in obj["terms"]:
                w = tuple(t["word"])
                terms[w] = terms.get(w, 0) + complex(t["re"], t.get("im", 0.0))
            return cls(int(obj["nvars"]), terms)
        except (KeyError, TypeError, ValueError) as exc:
            raise FixtureError(f"bad polynomial encoding: {exc}") from exc


class PolyMatrix:
    """An I-by-J matrix of free polynomials sharing ``nvars``."""

    def __init__(self, entries, nvars: int | None = None):
        rows = [list(r) for r in entries]
        if not rows or not rows[0]:
            raise ValueError("a polynomial matrix needs at least one entry")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged polynomial matrix")
        d = nvars or max(e.nvars for r in rows for e in r)
        self.entries = tuple(tuple(e.with_nvars(max(d, e.nvars)) for e in r) for r in rows)
        self.nvars = max(e.nvars for r in self.entries for e in r)
        self.I = len(rows)
        self.J = len(rows[0])

    @property
    def shape(self):
        return (self.I, self.J)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def map(self, fn) -> "PolyMatrix":
        return PolyMatrix([[fn(e) for e in r] for r in self.entries], self.nvars)

    def constant_matrix(self):
        return np.array([[e.constant_term() for e in r] for r in self.entries], dtype=complex)

    def degree(self) -> int:
        return max(e.degree() for r in self.entries for e in r)

    def coefficient_matrices(self) -> dict:
        """Map word -> I-by-J complex coefficient matrix."""
        out = {}
        for i, r in enumerate(self.entries):
            for j, e in enumerate(r):
                for w, c in e.terms.items():
                    out.setdefault(w, np.zeros((self.I, self.J), dtype=complex))[i, j] = c
        return out

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.entries == other.entries

    def __repr__(self):
        from .polyparse import print_poly
        body = "; ".join(", ".join(print_poly(e) for e in r) for r in self.entries)
        return f"PolyMatrix([{body}], nvars={self.nvars})"

    def to_json(self) -> dict:
        from .polyparse import print_poly
        return {"I": self.I, "J": self.J, "d": self.nvars,
                "entries": [[print_poly(e) for e in r] for r in self.entries]}


class WordCache:
    """Memoized word products ``x^w`` at one fixed point.

    Products are built by extending the longest cached prefix, so ``p`` and
    ``p*p`` evaluated at the same ``x`` share work.  ``hits`` counts lookups
    that reused a cached non-empty prefix (or the word itself), ``misses`` the
    ones built from scratch.  A cache belongs to one
    evaluation session; it is not thread safe.
    """

    def __init__(self, x: MatrixTuple):
        self.x = x
        self._products = {(): identity(x.dim)}
        self.hits = 0
        self.misses = 0

    def product(self, w: Word) -> np.ndarray:
        got = self._products.get(w)
        if got is not None:
            self.hits += 1
            return got
        k = len(w) - 1
        while w[:k] not in self._products:
            k -= 1
        if k:
            self.hits += 1
        else:
            self.misses += 1
        M = self._products[w[:k]]
        for j in range(k, len(w)):
            M = M @ self.x[w[j] - 1]
            self._products[w[:j + 1]] = M
        return M


def _check_vars(p: FreePoly, x: MatrixTuple):
    if p.degree() > 0:
        top = max(max(w) for w in p.terms if w)
        if top > x.d:
            raise DimensionError(f"polynomial uses x{top} but the point has only {x.d} parts")


def evaluate(p: FreePoly, x: MatrixTuple) -> np.ndarray:
    """``sum_w c_w x^w`` with the unit word mapped to the identity."""
    return eval_many(p, x, WordCache(x))


def eval_many(p: FreePoly, x: MatrixTuple, cache: WordCache | None = None) -> np.ndarray:
    """As :func:`evaluate`, reusing the word products stored in ``cache``."""
    if cache is None:
        cache = WordCache(x)
    elif cache.x is not x:
        raise ValueError("word cache was built for a different point")
    _check_vars(p, x)
    out = np.zeros((x.dim, x.dim), dtype=complex)
    for w, c in p.terms.items():
        out += c * cache.product(w)
    return out


def variables(d: int) -> list[FreePoly]:
    return [FreePoly.var(i, d) for i in range(1, d + 1)]


def random_poly(d: int, max_deg: int, nterms: int, rng: np.random.Generator,
                homogeneous: int | None = None) -> FreePoly:
    """Random polynomial with Gaussian complex coefficients (test data)."""
    terms = {}
    for _ in range(nterms):
        k = homogeneous if homogeneous is not None else int(rng.integers(0, max_deg + 1))
        w = tuple(int(i) for i in rng.integers(1, d + 1, size=k))
        terms[w] = complex(rng.standard_normal(), rng.standard_normal())
    return FreePoly(d, terms)
