"""Goedel numbering of propositional sentences.

Every natural number is a sentence.  The low residue mod 5 selects the
connective and the quotient carries the payload (an atom index, a single
child code, or a Cantor-paired couple of child codes)::

    0 -> Atom(i)      1 -> Not(a)      2 -> Imp(a, b)
    3 -> And(a, b)    4 -> Or(a, b)
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt
from typing import Iterable, Union

ATOM, NOT, IMP, AND, OR = range(5)


def pair(a: int, b: int) -> int:
    """Cantor pairing, ``(a+b)(a+b+1)/2 + b``."""
    if a < 0 or b < 0:
        raise ValueError("pair is defined on naturals only")
    t = a + b
    return t * (t + 1) // 2 + b


def unpair(n: int) -> tuple[int, int]:
    if n < 0:
        raise ValueError("unpair is defined on naturals only")
    t = (isqrt(8 * n + 1) - 1) // 2
    b = n - t * (t + 1) // 2
    return t - b, b


@dataclass(frozen=True)
class Atom:
    index: int


@dataclass(frozen=True)
class Not:
    a: int


@dataclass(frozen=True)
class Imp:
    a: int
    b: int


@dataclass(frozen=True)
class And:
    a: int
    b: int


@dataclass(frozen=True)
class Or:
    a: int
    b: int


Formula = Union[Atom, Not, Imp, And, Or]


@lru_cache(maxsize=1 << 16)
def decode(n: int) -> Formula:
    if n < 0:
        raise ValueError(f"sentence codes are naturals, got {n}")
    tag, payload = n % 5, n // 5
    if tag == ATOM:
        return Atom(payload)
    if tag == NOT:
        return Not(payload)
    a, b = unpair(payload)
    return (Imp, And, Or)[tag - IMP](a, b)


def encode(f: Formula) -> int:
    if isinstance(f, Atom):
        return 5 * f.index
    if isinstance(f, Not):
        return 5 * f.a + NOT
    if isinstance(f, Imp):
        return 5 * pair(f.a, f.b) + IMP
    if isinstance(f, And):
        return 5 * pair(f.a, f.b) + AND
    if isinstance(f, Or):
        return 5 * pair(f.a, f.b) + OR
    raise TypeError(f"not a formula: {f!r}")


def atom(i: int) -> int:
    return 5 * i


def neg(a: int) -> int:
    return 5 * a + NOT


def imp(a: int, b: int) -> int:
    return 5 * pair(a, b) + IMP


def conj(a: int, b: int) -> int:
    return 5 * pair(a, b) + AND


def disj(a: int, b: int) -> int:
    return 5 * pair(a, b) + OR


# the canonical contradiction p0 & !p0
CONTRADICTION = conj(0, neg(0))


@lru_cache(maxsize=1 << 16)
def atoms_of(n: int) -> frozenset[int]:
    """Atom indices occurring in the sentence coded by ``n``."""
    f = decode(n)
    if isinstance(f, Atom):
        return frozenset((f.index,))
    if isinstance(f, Not):
        return atoms_of(f.a)
    return atoms_of(f.a) | atoms_of(f.b)


def fresh_atom(used: Iterable[int]) -> int:
    """Code of the least atom occurring in none of ``used``."""
    seen: set[int] = set()
    for code in used:
        seen |= atoms_of(code)
    i = 0
    while i in seen:
        i += 1
    return atom(i)


def pretty(n: int) -> str:
    f = decode(n)
    if isinstance(f, Atom):
        return f"p{f.index}"
    if isinstance(f, Not):
        return "!" + pretty(f.a)
    op = {Imp: "->", And: "&", Or: "|"}[type(f)]
    return f"({pretty(f.a)} {op} {pretty(f.b)})"


_TOKEN = re.compile(r"\s*(p\d+|->|[!&|()])")


def parse(text: str) -> int:
    """Inverse of :func:`pretty`; binary connectives must be parenthesised."""
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"unexpected input at column {pos}: {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()

    def expr(i: int) -> tuple[int, int]:
        if i >= len(tokens):
            raise ValueError("unexpected end of formula")
        tok = tokens[i]
        if tok.startswith("p"):
            return atom(int(tok[1:])), i + 1
        if tok == "!":
            a, j = expr(i + 1)
            return neg(a), j
        if tok == "(":
            a, j = expr(i + 1)
            if j >= len(tokens) or tokens[j] not in ("->", "&", "|"):
                raise ValueError("expected a binary connective")
            op = tokens[j]
            b, k = expr(j + 1)
            if k >= len(tokens) or tokens[k] != ")":
                raise ValueError("missing ')'")
            build = {"->": imp, "&": conj, "|": disj}[op]
            return build(a, b), k + 1
        raise ValueError(f"unexpected token {tok!r}")

    code, end = expr(0)
    if end != len(tokens):
        raise ValueError(f"trailing input after formula: {tokens[end:]}")
    return code
