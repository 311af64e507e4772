"""System specifications and budget-bounded validation of their side conditions."""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Optional

from .codec import CONTRADICTION, atom, conj, neg
from .logic import AxiomStream, EntailmentOperator, tautology_chain
from .operators import Approximation, Operator, StarOperator, TableOperator, goodify

KINDS = ("d", "p", "q")


class SchemaError(ValueError):
    """A malformed JSON document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ------------------------------------------------------------- proposing


@dataclass(frozen=True)
class ProposingFunction:
    """``f`` as an explicit table of slots plus a default rule.

    Rules for unassigned slots:

    * ``identity``: ``f_i = i``;
    * ``complement``: the unassigned slots, in increasing order, receive the
      numbers missing from the table values, in increasing order (so a
      injective table always extends to a permutation);
    * ``atoms``: ``f_i`` is the code of ``p_i``.
    """

    rule: str = "identity"
    table: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    RULES = ("identity", "complement", "atoms")

    def __post_init__(self):
        if self.rule not in self.RULES:
            raise ValueError(f"unknown proposing rule {self.rule!r}")

    @classmethod
    def from_table(cls, table: Mapping[int, int], rule: str = "complement") -> "ProposingFunction":
        return cls(rule, tuple(sorted((int(k), int(v)) for k, v in table.items())))

    def _tab(self) -> dict:
        t = self._cache.get("tab")
        if t is None:
            t = self._cache["tab"] = dict(self.table)
        return t

    def __call__(self, i: int) -> int:
        tab = self._tab()
        if i in tab:
            return tab[i]
        if self.rule == "identity":
            return i
        if self.rule == "atoms":
            return atom(i)
        slots = self._cache.get("slots")
        if slots is None:
            slots = self._cache["slots"] = sorted(tab)
            self._cache["values"] = set(tab.values())
            self._cache["free"] = []
            self._cache["next"] = 0
        j = i - bisect.bisect_left(slots, i)
        free, values = self._cache["free"], self._cache["values"]
        n = self._cache["next"]
        while len(free) <= j:
            if n not in values:
                free.append(n)
            n += 1
        self._cache["next"] = n
        return free[j]

    def to_json(self) -> dict:
        out: dict = {"rule": self.rule}
        if self.table:
            out["table"] = [list(p) for p in self.table]
        return out


@dataclass(frozen=True)
class ShiftedProposal:
    """``f*(0) = head`` and ``f*(x) = base(x - 1)``; not injective in general."""

    head: int
    base: Any

    def __call__(self, i: int) -> int:
        return self.head if i == 0 else self.base(i - 1)

    def to_json(self) -> dict:
        return {"rule": "prepend", "head": self.head, "base": self.base.to_json()}


def proposing_from_json(fd: Any, path: str) -> Any:
    if not isinstance(fd, dict):
        raise SchemaError(path, "expected an object")
    rule = fd.get("rule", "identity")
    if rule == "prepend":
        head = _need(fd, "head", path, (int,))
        return ShiftedProposal(head, proposing_from_json(_need(fd, "base", path), f"{path}.base"))
    if rule not in ProposingFunction.RULES:
        raise SchemaError(f"{path}.rule", f"unknown rule {rule!r}")
    return ProposingFunction.from_table(_pairs(fd.get("table", []), f"{path}.table"), rule)


# ------------------------------------------------------------- revising


def _chain_index(chain: list, x: int) -> Optional[int]:
    while chain[-1] < x:
        chain.append(_extend_chain(chain))
    i = bisect.bisect_left(chain, x)
    return i if i < len(chain) and chain[i] == x else None


def _extend_chain(chain: list) -> int:
    return conj(chain[-1], chain[-1])


@dataclass(frozen=True)
class RevisingFunction:
    """``f^-`` in a certified acyclic form, optionally overridden by a table.

    * ``neg``: ``x -> !x`` (the code strictly grows);
    * ``shift``: ``x -> x + k`` with ``k >= 1``;
    * ``chain``: follows a strictly increasing chain ``a_0 < a_1 < ...`` and
      sends every other code to ``a_0``.  The chain is the theorem chain
      ``z_0, z_0 & z_0, ...`` unless ``offset`` is given, in which case
      ``a_i = offset + i``.

    Table entries are not certified; :func:`validate` scans their orbits.
    """

    rule: str = "chain"
    k: int = 1
    table: tuple = ()
    offset: Optional[int] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    RULES = ("neg", "shift", "chain")

    def __post_init__(self):
        if self.rule not in self.RULES:
            raise ValueError(f"unknown revising rule {self.rule!r}")
        if self.rule == "shift" and self.k < 1:
            raise ValueError("shift rule needs k >= 1")

    @classmethod
    def from_table(cls, table: Mapping[int, int], rule: str = "chain") -> "RevisingFunction":
        return cls(rule, 1, tuple(sorted((int(a), int(b)) for a, b in table.items())))

    def _tab(self) -> dict:
        t = self._cache.get("tab")
        if t is None:
            t = self._cache["tab"] = dict(self.table)
        return t

    @property
    def chain(self) -> list:
        ch = self._cache.get("chain")
        if ch is None:
            ch = self._cache["chain"] = tautology_chain(2)
        return ch

    def __call__(self, x: int) -> int:
        tab = self._tab()
        if x in tab:
            return tab[x]
        if self.rule == "neg":
            return neg(x)
        if self.rule == "shift":
            return x + self.k
        if self.offset is not None:
            return x + 1 if x >= self.offset else self.offset
        i = _chain_index(self.chain, x)
        if i is None:
            return self.chain[0]
        if i + 1 >= len(self.chain):
            self.chain.append(_extend_chain(self.chain))
        return self.chain[i + 1]

    def in_chain(self, x: int) -> bool:
        if self.rule != "chain":
            return False
        if self.offset is not None:
            return x >= self.offset
        return _chain_index(self.chain, x) is not None

    def escapes(self, x: int) -> bool:
        """True once the orbit of ``x`` can never re-enter the table."""
        tab = self._tab()
        if x in tab:
            return False
        top = self._cache.get("top")
        if top is None:
            top = self._cache["top"] = max(tab, default=-1)
        if self.rule in ("neg", "shift"):
            return x > top
        if self.in_chain(x):
            return x > top
        first = self.offset if self.offset is not None else self.chain[0]
        return first > top and first not in tab

    def orbit(self, x: int, steps: int) -> Iterator[int]:
        for _ in range(steps):
            yield x
            x = self(x)

    def to_json(self) -> dict:
        out: dict = {"rule": self.rule}
        if self.rule == "shift":
            out["k"] = self.k
        if self.offset is not None:
            out["offset"] = self.offset
        if self.table:
            out["table"] = [list(p) for p in self.table]
        return out


# ------------------------------------------------------------- specs


@dataclass
class SystemSpec:
    kind: str
    operator: Operator
    f: ProposingFunction
    f_minus: Optional[RevisingFunction] = None
    c: int = CONTRADICTION
    c_minus: Optional[int] = None

    def symbols(self) -> tuple:
        if self.kind == "q" and self.c_minus is not None:
            return (self.c, self.c_minus)
        return (self.c,)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "operator": operator_to_json(self.operator), "f": self.f.to_json(), "c": self.c}
        if self.f_minus is not None:
            out["f_minus"] = self.f_minus.to_json()
        if self.c_minus is not None:
            out["c_minus"] = self.c_minus
        return out


def operator_to_json(op: Operator) -> dict:
    return op.describe()


def _need(d: Any, key: str, path: str, kinds: tuple = (dict,)) -> Any:
    if not isinstance(d, dict):
        raise SchemaError(path, "expected an object")
    if key not in d:
        raise SchemaError(f"{path}.{key}", "missing field")
    v = d[key]
    if not isinstance(v, kinds) or isinstance(v, bool) and bool not in kinds:
        names = "/".join(k.__name__ for k in kinds)
        raise SchemaError(f"{path}.{key}", f"expected {names}, got {type(v).__name__}")
    return v


def _pairs(v: Any, path: str) -> dict:
    if not isinstance(v, list):
        raise SchemaError(path, "expected a list of [key, value] pairs")
    out = {}
    for i, p in enumerate(v):
        if not (isinstance(p, list) and len(p) == 2 and all(isinstance(a, int) and a >= 0 for a in p)):
            raise SchemaError(f"{path}[{i}]", "expected a pair of naturals")
        if p[0] in out:
            raise SchemaError(f"{path}[{i}]", f"duplicate key {p[0]}")
        out[p[0]] = p[1]
    return out


def operator_from_json(d: Any, path: str = "operator") -> Operator:
    kind = _need(d, "type", path, (str,))
    try:
        if kind == "entailment":
            return EntailmentOperator(
                AxiomStream.from_json(d),
                atom_cap=int(d.get("atom_cap", 24)),
                premise_cap=d.get("premise_cap"),
            )
        if kind == "table":
            approx = Approximation.from_json(d)
            if d.get("goodify"):
                approx = goodify(approx)
            return TableOperator(approx)
        if kind == "star":
            z0 = _need(d, "z0", path, (int,))
            return StarOperator(operator_from_json(_need(d, "base", path), f"{path}.base"), z0)
    except SchemaError:
        raise
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise SchemaError(path, str(exc)) from exc
    raise SchemaError(f"{path}.type", f"unknown operator type {kind!r}")


def spec_from_json(d: Any, path: str = "spec") -> SystemSpec:
    kind = _need(d, "kind", path, (str,))
    if kind not in KINDS:
        raise SchemaError(f"{path}.kind", f"expected one of {', '.join(KINDS)}, got {kind!r}")
    op = operator_from_json(_need(d, "operator", path), f"{path}.operator")
    f = proposing_from_json(_need(d, "f", path), f"{path}.f")
    f_minus = None
    if "f_minus" in d:
        if kind == "d":
            raise SchemaError(f"{path}.f_minus", "a d-system has no revising function")
        md = _need(d, "f_minus", path)
        rule = md.get("rule", "chain")
        if rule not in RevisingFunction.RULES:
            raise SchemaError(f"{path}.f_minus.rule", f"unknown rule {rule!r}")
        k = md.get("k", 1)
        if not isinstance(k, int) or k < 1:
            raise SchemaError(f"{path}.f_minus.k", "expected a positive integer")
        offset = md.get("offset")
        if offset is not None and (not isinstance(offset, int) or offset < 0):
            raise SchemaError(f"{path}.f_minus.offset", "expected a natural")
        table = tuple(sorted(_pairs(md.get("table", []), f"{path}.f_minus.table").items()))
        f_minus = RevisingFunction(rule, k, table, offset)
    elif kind in ("p", "q"):
        raise SchemaError(f"{path}.f_minus", f"missing field (required for kind {kind})")
    c = d.get("c", CONTRADICTION)
    if not isinstance(c, int) or c < 0:
        raise SchemaError(f"{path}.c", "expected a natural")
    c_minus = d.get("c_minus")
    if kind == "q" and c_minus is None:
        raise SchemaError(f"{path}.c_minus", "missing field (required for kind q)")
    if c_minus is not None and (not isinstance(c_minus, int) or c_minus < 0):
        raise SchemaError(f"{path}.c_minus", "expected a natural")
    return SystemSpec(kind, op, f, f_minus, c, c_minus)


# ------------------------------------------------------------- validation


@dataclass
class Finding:
    status: str  # "invalid" or "unknown"
    prop: str
    detail: str
    witness: Any = None


@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if any(f.status == "invalid" for f in self.findings):
            return "invalid"
        if self.findings:
            return "unknown"
        return "valid"

    @property
    def valid(self) -> bool:
        return self.status == "valid"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "findings": [
                {"status": f.status, "property": f.prop, "detail": f.detail, "witness": f.witness} for f in self.findings
            ],
        }


class InvalidSpec(ValueError):
    def __init__(self, report: ValidationReport):
        first = next(f for f in report.findings if f.status == "invalid")
        super().__init__(f"invalid system ({first.prop}): {first.detail}")
        self.report = report


def settled_after(op: Operator, sym: int) -> Optional[int]:
    """A stage after which ``sym in H_s(emptyset)`` no longer changes, if known."""
    if isinstance(op, EntailmentOperator):
        return max(op.stream.last_change(), sym + 1)
    if isinstance(op, TableOperator):
        return max(op.approx.last_change(), sym + 1)
    if isinstance(op, StarOperator):
        inner = settled_after(op.base, sym)
        return None if inner is None else max(inner, op.z0 + 1)
    return None


def _empty_witness(op: Operator, budget: int) -> Optional[tuple[int, int]]:
    if isinstance(op, TableOperator):
        for s in sorted({d for d, _ in op.approx.deltas if d <= budget} | {budget}):
            got = op.approx.stage_table(s).apply(set())
            if got:
                return s, min(got)
        return None
    sc = op.scanner()
    sc.set_stage(budget)
    sc.set_prefix(())
    for x in range(budget):
        if sc.from_empty(x):
            return budget, x
    return None


def _find_cycle(fm: RevisingFunction, start: int, steps: int) -> Optional[list]:
    orbit: list[int] = []
    visited: set[int] = set()
    for x in fm.orbit(start, steps):
        orbit.append(x)
        if x in visited:
            return orbit
        visited.add(x)
        if fm.escapes(x):
            return None
    return None


def validate(spec: SystemSpec, budget: int) -> ValidationReport:
    rep = ValidationReport()
    if spec.kind not in KINDS:
        rep.findings.append(Finding("invalid", "kind", f"unknown kind {spec.kind!r}"))
        return rep
    if spec.kind in ("p", "q") and spec.f_minus is None:
        rep.findings.append(Finding("invalid", "f_minus", f"kind {spec.kind} needs a revising function"))
    if spec.kind == "q" and spec.c_minus is None:
        rep.findings.append(Finding("invalid", "c_minus", "kind q needs a counterexample"))

    seen: dict[int, int] = {}
    for i in range(budget):
        v = spec.f(i)
        if v in seen:
            rep.findings.append(Finding("invalid", "injectivity", f"f({seen[v]}) = f({i}) = {v}", [seen[v], i]))
            break
        seen[v] = i

    fm = spec.f_minus
    if fm is not None and fm.table:
        for start in sorted(dict(fm.table)):
            cycle = _find_cycle(fm, start, budget + 1)
            if cycle is not None:
                rep.findings.append(Finding("invalid", "acyclicity", f"orbit of {start} repeats {cycle[-1]}", cycle))
                break

    if spec.kind == "q" and fm is not None and spec.c_minus is not None:
        hits = [x for x, y in fm.table if y == spec.c_minus]
        hits += [x for x in range(budget) if x not in dict(fm.table) and fm(x) == spec.c_minus]
        if hits:
            rep.findings.append(Finding("invalid", "counterexample", f"c- = f-({hits[0]})", hits[0]))

    if _empty_witness(spec.operator, budget) is None:
        rep.findings.append(Finding("unknown", "nonempty", f"H(emptyset) not witnessed by stage {budget}"))
    return rep


@dataclass
class Consistency:
    status: str  # "consistent", "inconsistent", "unknown"
    stage: Optional[int] = None
    symbol: Optional[int] = None

    def __str__(self) -> str:
        if self.status == "inconsistent":
            return f"InconsistentAt({self.stage})"
        return "Consistent" if self.status == "consistent" else "UnknownWithinBudget"


def consistency(spec: SystemSpec, budget: int) -> Consistency:
    """Semi-decide ``c in H(emptyset)`` (and ``c-`` for q) over stages ``<= budget``."""
    syms = spec.symbols()
    sc = spec.operator.scanner(syms)
    for s in range(budget + 1):
        sc.set_stage(s)
        sc.set_prefix(())
        for sym in syms:
            if sc.from_empty(sym):
                return Consistency("inconsistent", s, sym)
    horizon = [settled_after(spec.operator, sym) for sym in syms]
    if all(h is not None and h <= budget for h in horizon):
        return Consistency("consistent")
    return Consistency("unknown")
