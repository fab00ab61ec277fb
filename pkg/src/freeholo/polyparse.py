"""Concrete syntax for free polynomials and delta matrices.

Grammar::

    expr    := ['-' | '+'] term (('+' | '-') term)*
    term    := factor ('*'? factor)*
    factor  := atom ('^' natural)*
    atom    := number | var | '(' expr ')'
    number  := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] ['i']
    var     := 'x' natural

Juxtaposition is the (non-commutative) product, so ``x1x2`` is ``x1*x2``.
``^`` binds tighter than juxtaposition.  A unary sign is only allowed in front
of the first term of an expression (``-x1 + x2``, ``(-1+2i)``), never after a
binary operator.
"""
from __future__ import annotations

import math
import re

from .errors import FixtureError, ParseError
from .freepoly import FreePoly, PolyMatrix, word_key

_NUMBER = re.compile(r"([0-9]+(?:\.[0-9]+)?)(?:[eE][+-]?[0-9]+)?")
_NATURAL = re.compile(r"[0-9]+")
_SPACE = " \t\r\n"

MAX_EXPONENT = 64
MAX_TERMS = 10**6
MAX_DEPTH = 200
MAX_DEGREE = 4096


class _Parser:
    def __init__(self, text: str, d: int | None):
        self.text = text
        self.pos = 0
        self.d = d
        self.top = 1  # largest variable index seen
        self.depth = 0

    def error(self, message, pos=None):
        raise ParseError(message, self.text, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos] in _SPACE:
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> FreePoly:
        if not self.text.strip():
            self.error("empty expression")
        p = self.expr()
        if self.peek():
            c = self.peek()
            self.error("unbalanced ')'" if c == ")" else f"unexpected character {c!r}")
        return p

    def expr(self):
        p = self.term(head=True)
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            q = self.term()
            p = p + q if op == "+" else p - q
            self._budget(p)
        return p

    def term(self, head=False):
        sign = 1
        if head and self.peek() in ("+", "-"):
            sign = -1 if self.text[self.pos] == "-" else 1
            self.pos += 1
        if not self._starts_factor():
            self.error("expected a number, variable or '('")
        p = self.factor()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                if not self._starts_factor():
                    self.error("expected a factor after '*'")
            elif not self._starts_factor():
                break
            p = self._mul(p, self.factor())
        return -p if sign < 0 else p

    def _mul(self, p, q):
        if len(p.terms) * len(q.terms) > MAX_TERMS:
            self.error(f"expression expands to more than {MAX_TERMS} terms")
        if p.degree() + q.degree() > MAX_DEGREE:
            self.error(f"expression degree exceeds the limit {MAX_DEGREE}")
        return p * q

    def _starts_factor(self):
        c = self.peek()
        return bool(c) and (c.isdigit() and c.isascii() or c in "x(")

    def factor(self):
        p = self.atom()
        while self.peek() == "^":
            self.pos += 1
            self.skip()
            m = _NATURAL.match(self.text, self.pos)
            if not m:
                self.error("expected a natural exponent after '^'")
            k = int(m.group())
            if k > MAX_EXPONENT:
                self.error(f"exponent {k} exceeds the limit {MAX_EXPONENT}")
            self.pos = m.end()
            base, p = p, FreePoly.constant(1.0, p.nvars)
            for _ in range(k):
                p = self._mul(p, base)
        return p

    def atom(self):
        c = self.peek()
        start = self.pos
        if c == "(":
            self.depth += 1
            if self.depth > MAX_DEPTH:
                self.error(f"parentheses nested deeper than {MAX_DEPTH}")
            self.pos += 1
            p = self.expr()
            if not self.peek():
                self.error("unbalanced '(' opened here", start)
            if self.peek() != ")":
                self.error(f"expected ')' but found {self.peek()!r}")
            self.pos += 1
            self.depth -= 1
            return p
        if c == "x":
            self.pos += 1
            m = _NATURAL.match(self.text, self.pos)
            if not m or not m.group().isascii():
                self.error("variable needs a 1-based index, e.g. x1", start)
            i = int(m.group())
            if i < 1:
                self.error("variable indices start at 1", start)
            if self.d is not None and i > self.d:
                self.error(f"unknown variable x{i} (only x1..x{self.d})", start)
            self.pos = m.end()
            self.top = max(self.top, i)
            return FreePoly.var(i, self.d or i)
        m = _NUMBER.match(self.text, self.pos)
        if not m or not m.group(1).isascii():
            self.error("malformed number", start)
        end = m.end()
        # a dangling exponent marker or decimal point is malformed, not juxtaposition
        if end < len(self.text) and self.text[end] in "eE.":
            self.error("malformed number", start)
        value = float(m.group())
        if not math.isfinite(value):
            self.error("number out of range", start)
        self.pos = end
        if self.pos < len(self.text) and self.text[self.pos] == "i":
            self.pos += 1
            return FreePoly.constant(complex(0.0, value), self.d or 1)
        return FreePoly.constant(value, self.d or 1)

    def _budget(self, p):
        if len(p.terms) > MAX_TERMS:
            self.error(f"expression expands to more than {MAX_TERMS} terms")


def parse_poly(text: str, d: int | None = None) -> FreePoly:
    """Parse ``text`` into a :class:`FreePoly` over ``d`` variables.

    With ``d=None`` any index is accepted and ``nvars`` is the largest index
    used (at least 1).
    """
    if not isinstance(text, str):
        raise TypeError("polynomial source must be a str")
    parser = _Parser(text, d)
    p = parser.parse()
    return p.with_nvars(d if d is not None else max(parser.top, p.nvars))


def _fmt_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_word(w) -> str:
    out, i = [], 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        out.append(f"x{w[i]}" + (f"^{j - i}" if j - i > 1 else ""))
        i = j
    return "*".join(out)


def _fmt_term(c: complex, w) -> tuple[str, str]:
    """Return (sign, body) for one term."""
    re_, im = c.real, c.imag
    if im == 0:
        sign, mag = ("-" if re_ < 0 else "+"), abs(re_)
        coef = _fmt_real(mag)
    elif re_ == 0:
        sign, mag = ("-" if im < 0 else "+"), abs(im)
        coef = _fmt_real(mag) + "i"
    else:
        isign = "-" if im < 0 else "+"
        sign = "+"
        coef = f"({'-' if re_ < 0 else ''}{_fmt_real(abs(re_))}{isign}{_fmt_real(abs(im))}i)"
        mag = None
    if not w:
        return sign, coef
    body = _fmt_word(w)
    if mag == 1 and im == 0:
        return sign, body
    return sign, f"{coef}*{body}"


def print_poly(p: FreePoly) -> str:
    """Canonical text in graded lexicographic term order; ``0`` for zero."""
    if p.is_zero():
        return "0"
    parts = []
    for k, w in enumerate(sorted(p.terms, key=word_key)):
        sign, body = _fmt_term(p.terms[w], w)
        if k == 0:
            parts.append(body if sign == "+" else "-" + body)
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)


def parse_delta(obj) -> PolyMatrix:
    """Build a :class:`PolyMatrix` from ``{"I":..., "J":..., "entries": [[str, ...], ...]}``.

    An optional ``"d"`` key fixes the number of variables; otherwise it is the
    largest variable index that occurs.
    """
    try:
        I, J, rows = int(obj["I"]), int(obj["J"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureError(f"bad delta fixture: {exc}") from exc
    if len(rows) != I or any(len(r) != J for r in rows):
        raise FixtureError(f"delta fixture declares {I}x{J} but entries have another shape")
    d = obj.get("d")
    polys = []
    for i, r in enumerate(rows):
        row = []
        for j, s in enumerate(r):
            if not isinstance(s, str):
                raise FixtureError(f"delta entry ({i},{j}) is not a string")
            try:
                row.append(parse_poly(s, d))
            except ParseError as exc:
                raise FixtureError(f"delta entry ({i},{j}): {exc}") from exc
        polys.append(row)
    return PolyMatrix(polys, d)
