"""Parser and serializer for the planar family grammar.

A family text holds two statements and a parameter declaration::

    x' = x*(1 + x + x^2 + a*x*y + p*y^2);
    y' = y*(-1 - y + q*x^2 + a*x*y - y^2);
    params a, p, q

Expressions are expanded into polynomials in ``x, y`` whose coefficients are
themselves polynomials in the declared parameters.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping

from .errors import ConfigError, DegreeOverflow, FamilySyntaxError, UnknownSymbol

DEFAULT_DEGREE_CAP = 12

# A monomial is a sorted tuple of (symbol, exponent) pairs; () is the constant.
Monomial = tuple[tuple[str, int], ...]
Poly = dict[Monomial, float]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*^()=;,'])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FamilySyntaxError(
                f"unexpected character {text[pos]!r}", text, line, pos - line_start + 1
            )
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(_Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


# polynomial arithmetic -------------------------------------------------------


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps = dict(a)
    for sym, e in b:
        exps[sym] = exps.get(sym, 0) + e
    return tuple(sorted(exps.items()))


def _add(p: Poly, q: Poly, sign: float = 1.0) -> Poly:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0.0) + sign * c
    return {m: c for m, c in out.items() if c != 0.0}


def _mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            m = _mono_mul(ma, mb)
            out[m] = out.get(m, 0.0) + ca * cb
    return {m: c for m, c in out.items() if c != 0.0}


def _pow(p: Poly, n: int) -> Poly:
    out: Poly = {(): 1.0}
    for _ in range(n):
        out = _mul(out, p)
    return out


class _Parser:
    def __init__(self, text: str, degree_cap: int):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.cap = degree_cap
        self.first_use: dict[str, _Token] = {}

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, msg: str, tok: _Token | None = None) -> FamilySyntaxError:
        tok = tok or self.tok
        return FamilySyntaxError(msg, self.text, tok.line, tok.col)

    def expect(self, text: str) -> _Token:
        tok = self.tok
        if tok.text != text or tok.kind == "eof":
            found = tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        self.i += 1
        return tok

    def statement(self, lhs: str) -> Poly:
        tok = self.tok
        if tok.kind != "ident" or tok.text != lhs:
            raise self.error(f"expected statement for {lhs}'")
        self.i += 1
        self.expect("'")
        self.expect("=")
        poly = self.expr()
        self.expect(";")
        return poly

    def params(self) -> list[str]:
        tok = self.tok
        if tok.kind != "ident" or tok.text != "params":
            raise self.error("expected 'params' declaration")
        self.i += 1
        names: list[str] = []
        if self.tok.kind == "ident":
            names.append(self.tok.text)
            self.i += 1
            while self.tok.text == ",":
                self.i += 1
                if self.tok.kind != "ident":
                    raise self.error("expected parameter name")
                names.append(self.tok.text)
                self.i += 1
        if self.tok.text == ";":
            self.i += 1
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after params")
        return names

    def expr(self) -> Poly:
        poly = self.term()
        while self.tok.text in ("+", "-"):
            sign = 1.0 if self.tok.text == "+" else -1.0
            self.i += 1
            poly = _add(poly, self.term(), sign)
        return poly

    def term(self) -> Poly:
        poly = self.unary()
        while self.tok.text == "*":
            self.i += 1
            poly = _mul(poly, self.unary())
        return poly

    def unary(self) -> Poly:
        if self.tok.text == "-":
            self.i += 1
            return {m: -c for m, c in self.unary().items()}
        if self.tok.text == "+":
            self.i += 1
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.tok.text != "^":
            return base
        self.i += 1
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            raise self.error("exponent must be a non-negative integer literal")
        n = int(tok.text)
        if n > self.cap:
            raise DegreeOverflow(f"exponent {n} exceeds degree cap {self.cap} (line {tok.line})")
        self.i += 1
        return _pow(base, n)

    def atom(self) -> Poly:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            value = float(tok.text)
            return {(): value} if value != 0.0 else {}
        if tok.kind == "ident":
            if tok.text == "params":
                raise self.error("'params' is reserved")
            self.i += 1
            self.first_use.setdefault(tok.text, tok)
            return {((tok.text, 1),): 1.0}
        if tok.text == "(":
            self.i += 1
            poly = self.expr()
            self.expect(")")
            return poly
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r} in expression")


@dataclass(frozen=True)
class CoefficientExpr:
    """Polynomial in the family parameters, stored as ``{exponents: coeff}``.

    ``exponents`` is a tuple aligned with the declared parameter names.
    """

    terms: tuple[tuple[tuple[int, ...], float], ...]

    def evaluate(self, values: tuple[float, ...]) -> float:
        total = 0.0
        for exps, c in self.terms:
            t = c
            for v, e in zip(values, exps):
                if e:
                    t *= v**e
            total += t
        return total

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def render(self, names: tuple[str, ...]) -> list[str]:
        out = []
        for exps, c in self.terms:
            factors = [repr(float(c))]
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            out.append("*".join(factors))
        return out


CoeffTable = Mapping[tuple[int, int], CoefficientExpr]


def _split(poly: Poly, params: tuple[str, ...]) -> dict[tuple[int, int], CoefficientExpr]:
    index = {name: k for k, name in enumerate(params)}
    acc: dict[tuple[int, int], dict[tuple[int, ...], float]] = {}
    for mono, c in poly.items():
        i = j = 0
        pexp = [0] * len(params)
        for sym, e in mono:
            if sym == "x":
                i = e
            elif sym == "y":
                j = e
            else:
                pexp[index[sym]] = e
        slot = acc.setdefault((i, j), {})
        key = tuple(pexp)
        slot[key] = slot.get(key, 0.0) + c
    table = {}
    for ij, terms in acc.items():
        kept = tuple(sorted((k, v) for k, v in terms.items() if v != 0.0))
        if kept:
            table[ij] = CoefficientExpr(kept)
    return table


def _degree(table: CoeffTable) -> int:
    return max((i + j for i, j in table), default=0)


def parse_tables(
    text: str, degree_cap: int = DEFAULT_DEGREE_CAP
) -> tuple[tuple[str, ...], dict, dict]:
    """Parse family text into ``(params, px_table, py_table)``."""
    parser = _Parser(text, degree_cap)
    px = parser.statement("x")
    py = parser.statement("y")
    params = tuple(parser.params())
    if len(set(params)) != len(params):
        raise ConfigError(f"duplicate parameter names in {list(params)}")
    for bad in ("x", "y"):
        if bad in params:
            raise parser.error(f"{bad!r} cannot be a parameter name")
    allowed = {"x", "y", *params}
    for name, tok in parser.first_use.items():
        if name not in allowed:
            raise UnknownSymbol(
                f"unknown symbol {name!r} at line {tok.line}, column {tok.col}"
            )
    px_t, py_t = _split(px, params), _split(py, params)
    d = max(_degree(px_t), _degree(py_t))
    if d > degree_cap:
        raise DegreeOverflow(f"degree {d} exceeds cap {degree_cap}")
    return params, px_t, py_t


def render_poly(table: CoeffTable, params: tuple[str, ...]) -> str:
    """Expanded text form of a coefficient table; parses back to the same table."""
    pieces = []
    for (i, j), coeff in sorted(table.items()):
        mono = []
        if i:
            mono.append("x" if i == 1 else f"x^{i}")
        if j:
            mono.append("y" if j == 1 else f"y^{j}")
        for cterm in coeff.render(params):
            pieces.append("*".join([f"({cterm})", *mono]) if mono else f"({cterm})")
    return " + ".join(pieces) if pieces else "0"


def iter_terms(table: CoeffTable) -> Iterator[tuple[int, int, CoefficientExpr]]:
    for (i, j), c in sorted(table.items()):
        yield i, j, c
