"""Enumeration operators given by staged axiom tables.

An axiom ``<x, D>`` fires on ``X`` when ``D`` is a subset of ``X``.  An
:class:`Approximation` is a monotone sequence of finite tables ``H_s``; it is
stored as stage deltas, the table at stage ``s`` being the union of every
delta recorded at a stage ``<= s``.

Every operator hands the engine a :class:`Scanner`, which answers the only
questions the staged procedures ask: the least prefix of the current slot
list from which a symbol is derived, and the application of ``H_s`` to a
prefix.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence


class Axiom(NamedTuple):
    conclusion: int
    premises: frozenset

    @classmethod
    def of(cls, conclusion: int, premises: Iterable[int] = ()) -> "Axiom":
        return cls(int(conclusion), frozenset(int(p) for p in premises))


class NonMonotoneError(ValueError):
    pass


def apply(table: Iterable[Axiom], X: Iterable[int]) -> set[int]:
    """Single-pass application of a finite table."""
    xs = X if isinstance(X, (set, frozenset)) else set(X)
    return {ax.conclusion for ax in table if ax.premises <= xs}


def _add_minimal(family: set[frozenset], new: frozenset) -> bool:
    for old in family:
        if old <= new:
            return False
    for old in [o for o in family if new < o]:
        family.discard(old)
    family.add(new)
    return True


def supports(table: Iterable[Axiom], explode: Optional[int] = None) -> dict[int, set[frozenset]]:
    """Minimal hypothesis sets from which each conclusion is derivable.

    A derivation is a tree of axioms whose leaves are hypotheses; its root must
    be an axiom.  With ``explode`` set, a support containing that code is
    collapsed to the singleton of it.
    """
    table = list(table)
    supp: dict[int, set[frozenset]] = {ax.conclusion: set() for ax in table}
    changed = True
    while changed:
        changed = False
        for ax in table:
            options = [[frozenset((d,))] + sorted(supp.get(d, ()), key=sorted) for d in sorted(ax.premises)]
            for choice in itertools.product(*options):
                D = frozenset().union(*choice)
                if explode is not None and explode in D:
                    D = frozenset((explode,))
                if _add_minimal(supp[ax.conclusion], D):
                    changed = True
    return supp


def closure_omega(table: Iterable[Axiom], explode: Optional[int] = None) -> frozenset:
    """The finite closure ``G^omega`` over the codes mentioned in ``G``."""
    supp = supports(table, explode)
    return frozenset(Axiom(x, D) for x, fam in supp.items() for D in fam)


def mentioned(table: Iterable[Axiom]) -> set[int]:
    out: set[int] = set()
    for ax in table:
        out.add(ax.conclusion)
        out |= ax.premises
    return out


_INF = float("inf")


class Scanner:
    """Stage-``s`` queries over a list of slot codes (``None`` = empty slot)."""

    def set_stage(self, s: int) -> None:
        raise NotImplementedError

    def set_prefix(self, codes: Sequence[Optional[int]]) -> None:
        raise NotImplementedError

    def least_level(self, sym: int) -> Optional[int]:
        """Least ``k`` with ``sym`` in ``H_s({codes[0..k]})``."""
        raise NotImplementedError

    def from_empty(self, sym: int) -> bool:
        raise NotImplementedError

    def closure(self, universe: Optional[Iterable[int]] = None) -> set[int]:
        """``H_s`` applied to the whole prefix, optionally cut to ``universe``."""
        raise NotImplementedError


class Operator:
    """Common surface of table, entailment and rewritten operators."""

    symbols_hint: tuple = ()

    def scanner(self, symbols: Iterable[int] = ()) -> Scanner:
        raise NotImplementedError

    def apply(self, s: int, X: Iterable[int], universe: Optional[Iterable[int]] = None) -> set[int]:
        sc = self.scanner()
        sc.set_stage(s)
        sc.set_prefix(sorted(set(X)))
        return sc.closure(universe)

    def derives(self, s: int, X: Iterable[int], x: int) -> bool:
        return x in self.apply(s, X, universe=(x,))

    def derives_from_empty(self, s: int, x: int) -> bool:
        sc = self.scanner((x,))
        sc.set_stage(s)
        sc.set_prefix(())
        return sc.from_empty(x)

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass
class StageTable:
    """The table ``H_s`` indexed by conclusion."""

    s: int
    premises: dict[int, list[frozenset]]
    identity: bool = False
    explode: Optional[int] = None
    closed: bool = False

    def _level(self, sym: int, pos: dict[int, int], depth: int = 0) -> float:
        best = _INF
        for D in self.premises.get(sym, ()):
            k = max((pos.get(d, _INF) for d in D), default=0)
            if k < best:
                best = k
        if self.identity and sym < self.s:
            best = min(best, pos.get(sym, _INF))
        if self.explode is not None and sym < self.s and sym != self.explode:
            best = min(best, pos.get(self.explode, _INF))
            if self.closed and depth == 0:
                best = min(best, self._level(self.explode, pos, 1))
        return best

    def level(self, sym: int, pos: dict[int, int]) -> Optional[int]:
        k = self._level(sym, pos)
        return None if k == _INF else int(k)

    def apply(self, X: set, universe: Optional[Iterable[int]] = None) -> set[int]:
        out = {x for x, fam in self.premises.items() if any(D <= X for D in fam)}
        if self.identity:
            out |= {x for x in X if x < self.s}
        if self.explode is not None:
            c = self.explode
            if c in X or (self.closed and c in out):
                out |= set(range(self.s))
        if universe is not None:
            out &= set(universe)
        return out


@dataclass(frozen=True)
class Approximation:
    """A monotone sequence of finite tables stored as stage deltas.

    ``identity`` adds ``<i, {i}>`` for ``i < s`` at stage ``s``; ``explode``
    adds ``<x, {c}>`` for ``x < s``; ``closed`` means each stage is replaced by
    its omega-closure.  The implicit axioms keep infinite families out of
    memory.
    """

    deltas: tuple = ()
    identity: bool = False
    closed: bool = False
    explode: Optional[int] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_deltas(cls, deltas: Iterable[tuple[int, Iterable]], **kw) -> "Approximation":
        merged: dict[int, set] = {}
        for s, axioms in deltas:
            merged.setdefault(int(s), set()).update(
                ax if isinstance(ax, Axiom) else Axiom.of(ax[0], ax[1]) for ax in axioms
            )
        return cls(tuple((s, frozenset(merged[s])) for s in sorted(merged)), **kw)

    @classmethod
    def constant(cls, axioms: Iterable, from_stage: int = 0, **kw) -> "Approximation":
        return cls.from_deltas([(from_stage, axioms)], **kw)

    @classmethod
    def from_stage_sets(cls, stages: Sequence[Iterable], **kw) -> "Approximation":
        """Build from the full table of every stage; rejects non-monotone input."""
        deltas = []
        prev: frozenset = frozenset()
        for s, table in enumerate(stages):
            cur = frozenset(ax if isinstance(ax, Axiom) else Axiom.of(ax[0], ax[1]) for ax in table)
            if not prev <= cur:
                lost = sorted(prev - cur)[0]
                raise NonMonotoneError(f"H_{s - 1} is not contained in H_{s}: {lost} disappears")
            if cur - prev:
                deltas.append((s, cur - prev))
            prev = cur
        return cls(tuple(deltas), **kw)

    def _index(self, s: int) -> int:
        n = 0
        for stage, _ in self.deltas:
            if stage <= s:
                n += 1
            else:
                break
        return n

    def axioms_at(self, s: int) -> frozenset:
        n = self._index(s)
        key = ("axioms", n)
        if key not in self._cache:
            self._cache[key] = frozenset().union(*(d for _, d in self.deltas[:n]))
        return self._cache[key]

    def stage_table(self, s: int) -> StageTable:
        n = self._index(s)
        key = ("table", n)
        prem = self._cache.get(key)
        if prem is None:
            axioms = self.axioms_at(s)
            if self.closed:
                axioms = closure_omega(axioms, self.explode)
            prem = {}
            for ax in axioms:
                prem.setdefault(ax.conclusion, []).append(ax.premises)
            for fam in prem.values():
                fam.sort(key=lambda D: (len(D), sorted(D)))
            self._cache[key] = prem
        return StageTable(s, prem, self.identity, self.explode, self.closed)

    def last_change(self) -> int:
        return self.deltas[-1][0] if self.deltas else 0

    def mentioned(self) -> set[int]:
        out = mentioned(self.axioms_at(self.last_change()))
        if self.explode is not None:
            out.add(self.explode)
        return out

    def to_json(self) -> dict:
        return {
            "stages": [
                {"s": s, "axioms": [[ax.conclusion, sorted(ax.premises)] for ax in sorted(d, key=_axkey)]}
                for s, d in self.deltas
            ],
            "identity": self.identity,
            "closed": self.closed,
            "explode": self.explode,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Approximation":
        deltas = []
        for i, st in enumerate(data.get("stages", [])):
            if "s" not in st or "axioms" not in st:
                raise ValueError(f"stages[{i}] needs fields 's' and 'axioms'")
            deltas.append((st["s"], [(a[0], a[1]) for a in st["axioms"]]))
        return cls.from_deltas(
            deltas,
            identity=bool(data.get("identity", False)),
            closed=bool(data.get("closed", False)),
            explode=data.get("explode"),
        )


def _axkey(ax: Axiom):
    return (ax.conclusion, sorted(ax.premises))


def goodify(alpha: Approximation) -> Approximation:
    """Delay axioms until their codes are below the stage, add the identity
    axioms and close every stage under omega-closure."""
    delayed: dict[int, set] = {}
    seen: set = set()
    for s, delta in alpha.deltas:
        for ax in delta:
            if ax in seen:
                continue
            seen.add(ax)
            enter = max(s, ax.conclusion + 1, max(ax.premises, default=-1) + 1)
            delayed.setdefault(enter, set()).add(ax)
    return Approximation(
        tuple((s, frozenset(delayed[s])) for s in sorted(delayed)),
        identity=True,
        closed=True,
        explode=alpha.explode,
    )


@dataclass
class GoodnessReport:
    good: bool
    stage: Optional[int] = None
    sample: Optional[frozenset] = None
    kind: Optional[str] = None
    witness: Optional[int] = None


def is_good(op: "Operator", stage_bound: int, samples: Iterable[Iterable[int]]) -> GoodnessReport:
    """Check ``X <= H_s(X)`` (when ``max X < s``) and ``H_s(H_s(X)) <= H_s(X)``."""
    samples = [frozenset(X) for X in samples]
    for s in range(stage_bound + 1):
        for X in samples:
            once = op.apply(s, X)
            if not X or max(X) < s:
                missing = X - once
                if missing:
                    return GoodnessReport(False, s, X, "extensive", min(missing))
            twice = op.apply(s, once)
            extra = twice - once
            if extra:
                return GoodnessReport(False, s, X, "idempotent", min(extra))
    return GoodnessReport(True)


class TableScanner(Scanner):
    def __init__(self, approx: Approximation):
        self.approx = approx
        self.table: Optional[StageTable] = None
        self.codes: list = []
        self.pos: dict[int, int] = {}

    def set_stage(self, s: int) -> None:
        self.table = self.approx.stage_table(s)

    def set_prefix(self, codes: Sequence[Optional[int]]) -> None:
        self.codes = list(codes)
        pos: dict[int, int] = {}
        for k, c in enumerate(self.codes):
            if c is not None and c not in pos:
                pos[c] = k
        self.pos = pos

    def least_level(self, sym: int) -> Optional[int]:
        k = self.table.level(sym, self.pos)
        if k is not None and k >= len(self.codes):
            # an empty-premise axiom on an empty prefix
            return None
        return k

    def from_empty(self, sym: int) -> bool:
        return self.table.level(sym, {}) is not None

    def closure(self, universe: Optional[Iterable[int]] = None) -> set[int]:
        return self.table.apply(set(self.pos), universe)


@dataclass
class TableOperator(Operator):
    approx: Approximation

    def scanner(self, symbols: Iterable[int] = ()) -> Scanner:
        return TableScanner(self.approx)

    def describe(self) -> dict:
        return {"type": "table", **self.approx.to_json()}

    def stage_axioms(self, s: int) -> Iterator[Axiom]:
        return iter(self.approx.axioms_at(s))


class StarScanner(Scanner):
    """Scanner for ``(H minus <z0, D> with z0 not in D) plus <x, {z0}>``."""

    def __init__(self, base: Scanner, z0: int):
        self.base = base
        self.z0 = z0
        self.s = 0
        self.zpos: Optional[int] = None
        self.n = 0

    def set_stage(self, s: int) -> None:
        self.s = s
        self.base.set_stage(s)

    def set_prefix(self, codes: Sequence[Optional[int]]) -> None:
        self.base.set_prefix(codes)
        self.n = len(codes)
        self.zpos = None
        if self.z0 < self.s:
            for k, c in enumerate(codes):
                if c == self.z0:
                    self.zpos = k
                    break

    def least_level(self, sym: int) -> Optional[int]:
        if sym == self.z0:
            return self.zpos
        if sym >= self.s:
            return None
        lb = self.base.least_level(sym)
        cands = [k for k in (lb, self.zpos) if k is not None]
        return min(cands) if cands else None

    def from_empty(self, sym: int) -> bool:
        return sym != self.z0 and self.base.from_empty(sym)

    def closure(self, universe: Optional[Iterable[int]] = None) -> set[int]:
        if self.zpos is not None:
            out = set(range(self.s)) if universe is None else {x for x in universe if x < self.s}
            return out
        out = self.base.closure(universe)
        out.discard(self.z0)
        return out


@dataclass
class StarOperator(Operator):
    """The rewriting that turns ``z0`` into a contradiction derivable only
    from itself."""

    base: Operator
    z0: int

    def scanner(self, symbols: Iterable[int] = ()) -> Scanner:
        return StarScanner(self.base.scanner(tuple(symbols)), self.z0)

    def describe(self) -> dict:
        return {"type": "star", "z0": self.z0, "base": self.base.describe()}
