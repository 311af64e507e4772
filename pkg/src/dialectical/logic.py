"""Classical propositional consequence as an enumeration operator.

Truth tables are Python integers with one bit per assignment.  Premises are
kept in components that share no atoms, so the atom cap applies to each
connected group of premises rather than to the whole base: a satisfiable base
entails ``x`` iff the components touching the atoms of ``x`` do.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .codec import CONTRADICTION, And, Atom, Imp, Not, Or, atom, atoms_of, conj, decode, disj, imp, neg
from .operators import NonMonotoneError, Operator, Scanner

DEFAULT_ATOM_CAP = 24


class AtomCapExceeded(RuntimeError):
    """A truth table would need more atoms than the configured cap."""


@lru_cache(maxsize=None)
def _atom_mask(n: int, j: int) -> int:
    """Bits of the assignments (over ``n`` atoms) that make atom ``j`` true."""
    width = 1 << n
    half = 1 << j
    m = ((1 << half) - 1) << half
    size = half << 1
    while size < width:
        m |= m << size
        size <<= 1
    return m


def truth_table(code: int, pos: Mapping[int, int], n: int, memo: Optional[dict] = None) -> int:
    """Truth table of ``code`` over the atom ordering ``pos`` (index -> bit)."""
    if memo is None:
        memo = {}
    full = (1 << (1 << n)) - 1

    def ev(c: int) -> int:
        t = memo.get(c)
        if t is not None:
            return t
        f = decode(c)
        if isinstance(f, Atom):
            t = _atom_mask(n, pos[f.index])
        elif isinstance(f, Not):
            t = full ^ ev(f.a)
        elif isinstance(f, Imp):
            t = (full ^ ev(f.a)) | ev(f.b)
        elif isinstance(f, And):
            t = ev(f.a) & ev(f.b)
        else:
            t = ev(f.a) | ev(f.b)
        memo[c] = t
        return t

    return ev(code)


def _ordering(atoms: Iterable[int]) -> dict[int, int]:
    return {a: i for i, a in enumerate(atoms)}


@lru_cache(maxsize=1 << 16)
def _table(code: int, atoms: tuple) -> int:
    # component orderings recur across merges, so whole tables are worth keeping
    return truth_table(code, _ordering(atoms), len(atoms))


_serials = itertools.count()


class _Component:
    __slots__ = ("serial", "atoms", "formulas", "table")

    def __init__(self, atoms: tuple, formulas: tuple, table: int):
        self.serial = next(_serials)
        self.atoms = atoms
        self.formulas = formulas
        self.table = table


class PremiseBase:
    """A stack of premise levels with undo, decided by per-component tables."""

    def __init__(self, atom_cap: int = DEFAULT_ATOM_CAP):
        self.atom_cap = atom_cap
        self._comp: dict[int, _Component] = {}
        self._trail: list[list] = []
        self._unsat_level: Optional[int] = None
        self._cache: dict = {}
        # atoms whose component changed since the last take_dirty()
        self.dirty: set[int] = set()

    def take_dirty(self) -> set[int]:
        out, self.dirty = self.dirty, set()
        return out

    @property
    def depth(self) -> int:
        return len(self._trail)

    @property
    def consistent(self) -> bool:
        return self._unsat_level is None

    def _check_cap(self, n: int) -> None:
        if n > self.atom_cap:
            raise AtomCapExceeded(f"{n} atoms in one component exceeds the cap of {self.atom_cap}")

    def _merge(self, code: int, undo: list) -> None:
        xa = atoms_of(code)
        touched: dict[int, _Component] = {}
        for a in xa:
            comp = self._comp.get(a)
            if comp is not None:
                touched[comp.serial] = comp
        if len(touched) == 1:
            (only,) = touched.values()
            if code in only.formulas:
                return
        comps = sorted(touched.values(), key=lambda c: -len(c.atoms))
        atoms: list[int] = []
        for comp in comps:
            atoms.extend(comp.atoms)
        known = set(atoms)
        atoms.extend(sorted(a for a in xa if a not in known))
        n = len(atoms)
        self._check_cap(n)
        key = tuple(atoms)
        if comps:
            head = comps[0]
            table = head.table
            size = 1 << len(head.atoms)
            while size < (1 << n):
                table |= table << size
                size <<= 1
            formulas = list(head.formulas)
            for comp in comps[1:]:
                for f in comp.formulas:
                    table &= _table(f, key)
                formulas.extend(comp.formulas)
        else:
            table = (1 << (1 << n)) - 1
            formulas = []
        table &= _table(code, key)
        formulas.append(code)
        new = _Component(tuple(atoms), tuple(formulas), table)
        self.dirty.update(atoms)
        for a in atoms:
            undo.append((a, self._comp.get(a)))
            self._comp[a] = new
        if table == 0 and self._unsat_level is None:
            self._unsat_level = len(self._trail)

    def push(self, codes: Iterable[int] = ()) -> None:
        undo: list = []
        for code in codes:
            self._merge(code, undo)
        self._trail.append(undo)

    def pop(self) -> None:
        undo = self._trail.pop()
        for a, old in reversed(undo):
            self.dirty.add(a)
            if old is None:
                del self._comp[a]
            else:
                self._comp[a] = old
        if self._unsat_level is not None and self._unsat_level >= len(self._trail):
            self._unsat_level = None

    def truncate(self, depth: int) -> None:
        while len(self._trail) > depth:
            self.pop()

    def entails(self, x: int) -> bool:
        if self._unsat_level is not None:
            return True
        xa = atoms_of(x)
        touched: dict[int, _Component] = {}
        for a in xa:
            comp = self._comp.get(a)
            if comp is not None:
                touched[comp.serial] = comp
        key = (x, tuple(sorted(touched)))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        result = _entails_components(list(touched.values()), x, self.atom_cap)
        self._cache[key] = result
        return result


def _entails_components(comps: list, x: int, cap: int) -> bool:
    comps = sorted(comps, key=lambda c: -len(c.atoms))
    atoms: list[int] = []
    for comp in comps:
        atoms.extend(comp.atoms)
    known = set(atoms)
    atoms.extend(sorted(a for a in atoms_of(x) if a not in known))
    n = len(atoms)
    if n > cap:
        raise AtomCapExceeded(f"{n} atoms needed to decide a query exceeds the cap of {cap}")
    key = tuple(atoms)
    full = (1 << (1 << n)) - 1
    if comps:
        table = comps[0].table
        size = 1 << len(comps[0].atoms)
        while size < (1 << n):
            table |= table << size
            size <<= 1
        for comp in comps[1:]:
            for f in comp.formulas:
                table &= _table(f, key)
    else:
        table = full
    return table & (full ^ _table(x, key)) == 0


def entails(
    premises: Iterable[int], x: int, extra_axioms: Iterable[int] = (), atom_cap: int = DEFAULT_ATOM_CAP
) -> bool:
    """Whether every assignment satisfying premises and extras satisfies ``x``."""
    base = PremiseBase(atom_cap)
    base.push(extra_axioms)
    base.push(premises)
    return base.entails(x)


def satisfiable(codes: Iterable[int], atom_cap: int = DEFAULT_ATOM_CAP) -> bool:
    return not entails(codes, CONTRADICTION, atom_cap=atom_cap)


@dataclass(frozen=True)
class AxiomStream:
    """Extra axioms over the propositional calculus, staged as deltas."""

    deltas: tuple = ()

    @classmethod
    def from_deltas(cls, deltas: Iterable[tuple[int, Iterable[int]]]) -> "AxiomStream":
        merged: dict[int, set] = {}
        for s, codes in deltas:
            merged.setdefault(int(s), set()).update(int(c) for c in codes)
        return cls(tuple((s, frozenset(merged[s])) for s in sorted(merged)))

    @classmethod
    def constant(cls, codes: Iterable[int], from_stage: int = 0) -> "AxiomStream":
        return cls.from_deltas([(from_stage, codes)])

    def version(self, s: int) -> int:
        return sum(1 for stage, _ in self.deltas if stage <= s)

    def extras_at(self, s: int) -> frozenset:
        return frozenset().union(*(d for stage, d in self.deltas if stage <= s))

    def all_extras(self) -> frozenset:
        return frozenset().union(*(d for _, d in self.deltas))

    def last_change(self) -> int:
        return self.deltas[-1][0] if self.deltas else 0

    def to_json(self) -> dict:
        return {"extras": [{"s": s, "codes": sorted(d)} for s, d in self.deltas]}

    @classmethod
    def from_json(cls, data: dict) -> "AxiomStream":
        out = []
        for i, item in enumerate(data.get("extras", [])):
            if "s" not in item or "codes" not in item:
                raise ValueError(f"extras[{i}] needs fields 's' and 'codes'")
            out.append((item["s"], item["codes"]))
        return cls.from_deltas(out)


def theory_TA(A_approx: Sequence[Iterable[int]]) -> AxiomStream:
    """Stream adding the atoms ``p_i`` for ``i`` in the stage-``s`` approximation of ``A``."""
    deltas = []
    prev: frozenset = frozenset()
    for s, members in enumerate(A_approx):
        cur = frozenset(int(i) for i in members)
        if not prev <= cur:
            raise NonMonotoneError(f"A_{s} drops {sorted(prev - cur)}; a c.e. approximation must grow")
        if cur - prev:
            deltas.append((s, [atom(i) for i in cur - prev]))
        prev = cur
    return AxiomStream.from_deltas(deltas)


class EntailmentScanner(Scanner):
    """Incremental scanner: level 0 holds the extras, level ``k+1`` slot ``k``.

    Levels below the first slot that differs from the previous prefix are
    reused, and for each tracked symbol the first level deriving it is kept.
    """

    def __init__(self, op: "EntailmentOperator", symbols: Iterable[int] = ()):
        self.op = op
        self.base = PremiseBase(op.atom_cap)
        self.first: dict[int, Optional[int]] = {sym: None for sym in symbols}
        self.levels: list = []
        self.s = 0
        self.version: Optional[int] = None
        self.n = 0
        # premises only grow within an epoch, so derived codes carry over
        self.epoch = 0
        self._closed: tuple = (-1, frozenset(), frozenset())

    def set_stage(self, s: int) -> None:
        self.s = s
        v = self.op.stream.version(s)
        if v != self.version:
            self.version = v
            self.epoch += 1
            self.base.truncate(0)
            self.levels = []
            self.base.push(self.op.stream.extras_at(s))
            for sym in self.first:
                self.first[sym] = 0 if self.base.entails(sym) else None

    def _push(self, code: Optional[int]) -> None:
        self.base.push(() if code is None else (code,))
        self.levels.append(code)
        level = len(self.levels)
        for sym, lv in self.first.items():
            if lv is None and self.base.entails(sym):
                self.first[sym] = level

    def set_prefix(self, codes: Sequence[Optional[int]]) -> None:
        s = self.s
        eff = [c if c is not None and c < s else None for c in codes]
        k = 0
        for a, b in zip(eff, self.levels):
            if a != b:
                break
            k += 1
        if k < len(self.levels):
            self.epoch += 1
            self.base.truncate(k + 1)
            del self.levels[k:]
            for sym, lv in self.first.items():
                if lv is not None and lv > k:
                    self.first[sym] = None
        rest = eff[k:]
        if rest:
            # derivability only grows with the prefix: push everything, and
            # replay level by level only if an open symbol became derivable
            open_syms = [sym for sym, lv in self.first.items() if lv is None]
            for c in rest:
                self.base.push(() if c is None else (c,))
                self.levels.append(c)
            if any(self.base.entails(sym) for sym in open_syms):
                self.base.truncate(k + 1)
                del self.levels[k:]
                for c in rest:
                    self._push(c)
        self.n = len(eff)

    def _track(self, sym: int) -> None:
        if sym in self.first:
            return
        codes = list(self.levels)
        self.first[sym] = None
        self.version = None
        self.set_stage(self.s)
        self.set_prefix(codes)

    def least_level(self, sym: int) -> Optional[int]:
        if sym >= self.s or self.n == 0:
            return None
        self._track(sym)
        lv = self.first[sym]
        if lv is None:
            return None
        return max(lv - 1, 0)

    def from_empty(self, sym: int) -> bool:
        if sym >= self.s:
            return False
        self._track(sym)
        return self.first[sym] == 0

    def closure(self, universe: Optional[Iterable[int]] = None) -> set[int]:
        cands = range(self.s) if universe is None else [x for x in universe if x < self.s]
        if not self.base.consistent:
            return set(cands)
        epoch, known, missed = self._closed
        dirty = self.base.take_dirty()
        if epoch != self.epoch:
            known = missed = frozenset()
        out, miss = set(), set()
        for x in cands:
            if x in known:
                out.add(x)
            elif x in missed and dirty.isdisjoint(atoms_of(x)):
                miss.add(x)  # none of its atoms' components changed
            elif self.base.entails(x):
                out.add(x)
            else:
                miss.add(x)
        self._closed = (self.epoch, frozenset(out), frozenset(miss))
        return out


class _CappedScanner(Scanner):
    """Premise sets of bounded size; recomputes from scratch."""

    def __init__(self, op: "EntailmentOperator"):
        self.op = op
        self.s = 0
        self.codes: list = []

    def set_stage(self, s: int) -> None:
        self.s = s

    def set_prefix(self, codes: Sequence[Optional[int]]) -> None:
        self.codes = list(codes)

    def _derives(self, X: list, x: int) -> bool:
        extras = self.op.stream.extras_at(self.s)
        X = sorted({c for c in X if c is not None and c < self.s})
        cap = self.op.premise_cap
        for size in range(0, min(cap, len(X)) + 1):
            for D in itertools.combinations(X, size):
                if entails(D, x, extras, self.op.atom_cap):
                    return True
        return False

    def least_level(self, sym: int) -> Optional[int]:
        if sym >= self.s:
            return None
        for k in range(len(self.codes)):
            if self._derives(self.codes[: k + 1], sym):
                return k
        return None

    def from_empty(self, sym: int) -> bool:
        return sym < self.s and self._derives([], sym)

    def closure(self, universe: Optional[Iterable[int]] = None) -> set[int]:
        cands = range(self.s) if universe is None else [x for x in universe if x < self.s]
        return {x for x in cands if self._derives(self.codes, x)}


@dataclass
class EntailmentOperator(Operator):
    """Stage ``s`` derives ``x < s`` from the premises ``< s`` plus the extras of stage ``s``."""

    stream: AxiomStream = field(default_factory=AxiomStream)
    atom_cap: int = DEFAULT_ATOM_CAP
    premise_cap: Optional[int] = None

    def scanner(self, symbols: Iterable[int] = ()) -> Scanner:
        if self.premise_cap is not None:
            return _CappedScanner(self)
        return EntailmentScanner(self, symbols)

    def limit_derives(self, X: Iterable[int], x: int) -> bool:
        """The limit operator: consequence over every extra ever added."""
        return entails(X, x, self.stream.all_extras(), self.atom_cap)

    def describe(self) -> dict:
        return {
            "type": "entailment",
            **self.stream.to_json(),
            "atom_cap": self.atom_cap,
            "premise_cap": self.premise_cap,
        }


def tautology_chain(n: int) -> list[int]:
    """``z_0 = p0 | !p0`` and ``z_{i+1} = z_i & z_i``: strictly increasing theorems."""
    z = [disj(0, neg(0))]
    while len(z) < n:
        z.append(conj(z[-1], z[-1]))
    return z[:n]


# ---------------------------------------------------------------- law checks


@dataclass
class LawViolation:
    law: int
    X: tuple
    x: int
    y: Optional[int]
    query: Optional[int]
    detail: str


@dataclass
class LawsReport:
    samples: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def random_formula(rng: random.Random, atoms: int, depth: int) -> int:
    if depth <= 0 or rng.random() < 0.3:
        return atom(rng.randrange(atoms))
    k = rng.randrange(4)
    if k == 0:
        return neg(random_formula(rng, atoms, depth - 1))
    a = random_formula(rng, atoms, depth - 1)
    b = random_formula(rng, atoms, depth - 1)
    return (imp, conj, disj)[k - 1](a, b)


@dataclass
class LawSample:
    X: tuple
    x: int
    y: int
    queries: tuple


def sample_laws(n: int, seed: int = 0, atoms: int = 6, depth: int = 3) -> list[LawSample]:
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        X = tuple(random_formula(rng, atoms, depth - 1) for _ in range(rng.randrange(3)))
        x = random_formula(rng, atoms, depth)
        y = random_formula(rng, atoms, depth)
        queries = tuple(random_formula(rng, atoms, depth) for _ in range(3))
        out.append(LawSample(X, x, y, queries))
    return out


def connective_laws_check(
    derives: Callable[[Iterable[int], int], bool], samples: Iterable[LawSample], c: int = CONTRADICTION
) -> LawsReport:
    """Check the six connective laws on ``derives(X, x)`` (the limit operator)."""
    samples = list(samples)
    report = LawsReport(len(samples))

    def bad(law, smp, query, detail):
        report.violations.append(LawViolation(law, smp.X, smp.x, smp.y, query, detail))

    for smp in samples:
        X, x, y = list(smp.X), smp.x, smp.y
        if not derives([x, neg(x)], c):
            bad(1, smp, c, "c not derived from {x, !x}")
        for q in smp.queries + (x,):
            if derives([neg(neg(x))], q) != derives([x], q):
                bad(2, smp, q, "H({!!x}) and H({x}) differ")
        if not derives([], disj(x, neg(x))):
            bad(3, smp, None, "x | !x not a theorem")
        for q in smp.queries + (x, y):
            lhs = derives(X + [disj(x, y)], q)
            rhs = derives(X + [x], q) and derives(X + [y], q)
            if lhs != rhs:
                bad(4, smp, q, "H(X+{x|y}) differs from H(X+{x}) & H(X+{y})")
        if derives(X + [x], c) and not derives(X, neg(x)):
            bad(5, smp, None, "c in H(X+{x}) but !x not in H(X)")
        if derives(X + [y], x) != derives(X, imp(y, x)):
            bad(6, smp, None, "deduction theorem fails")
    return report


# ------------------------------------------------------------ completion check


@dataclass
class AtomVerdict:
    index: int
    positive: Optional[bool]
    negative: Optional[bool]

    @property
    def status(self) -> str:
        if self.positive is None or self.negative is None:
            return "unknown"
        return "ok" if self.positive != self.negative else "fail"


@dataclass
class CompletionReport:
    verdicts: list

    @property
    def passed(self) -> bool:
        return all(v.status == "ok" for v in self.verdicts)

    @property
    def witnesses(self) -> list[int]:
        return [atom(v.index) for v in self.verdicts if v.status == "fail"]

    @property
    def unknown(self) -> list[int]:
        return [atom(v.index) for v in self.verdicts if v.status == "unknown"]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "witnesses": self.witnesses,
            "unknown": self.unknown,
            "atoms": [
                {"atom": atom(v.index), "in": v.positive, "neg_in": v.negative, "status": v.status}
                for v in self.verdicts
            ],
        }


def completion_check(candidate: Callable[[int], Optional[bool]] | Mapping[int, Optional[bool]], W: int) -> CompletionReport:
    """Exactly one of ``p_i`` and ``!p_i`` is a final thesis, for ``i < W``.

    ``candidate`` maps a code to its stabilized membership, ``None`` meaning it
    did not settle; a mapping missing a code counts as non-membership.
    """
    if isinstance(candidate, Mapping):
        table = candidate
        member = lambda code: table.get(code, False)  # noqa: E731
    else:
        member = candidate
    verdicts = []
    for i in range(W):
        verdicts.append(AtomVerdict(i, member(atom(i)), member(neg(atom(i)))))
    return CompletionReport(verdicts)
