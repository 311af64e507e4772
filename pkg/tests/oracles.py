"""Independent reference implementations used as test oracles.

Nothing here imports the engine, scanners, supports or the premise base: the
stage simulator recomputes every chi_s(k) by naive fixpoint iteration, and
entailment is decided by enumerating every assignment.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from dialectical.codec import And, Atom, Imp, Not, Or, decode


# ------------------------------------------------------------ truth tables


def atoms_in(code: int, acc: Optional[set] = None) -> set:
    acc = set() if acc is None else acc
    f = decode(code)
    if isinstance(f, Atom):
        acc.add(f.index)
    elif isinstance(f, Not):
        atoms_in(f.a, acc)
    else:
        atoms_in(f.a, acc)
        atoms_in(f.b, acc)
    return acc


def evaluate(code: int, val: dict) -> bool:
    f = decode(code)
    if isinstance(f, Atom):
        return val[f.index]
    if isinstance(f, Not):
        return not evaluate(f.a, val)
    a, b = evaluate(f.a, val), evaluate(f.b, val)
    if isinstance(f, Imp):
        return (not a) or b
    if isinstance(f, And):
        return a and b
    assert isinstance(f, Or)
    return a or b


@functools.lru_cache(maxsize=None)
def _source(code: int) -> str:
    """A Python boolean expression over ``v[atom]``."""
    f = decode(code)
    if isinstance(f, Atom):
        return f"v[{f.index}]"
    if isinstance(f, Not):
        return f"(not {_source(f.a)})"
    a, b = _source(f.a), _source(f.b)
    if isinstance(f, Imp):
        return f"((not {a}) or {b})"
    if isinstance(f, And):
        return f"({a} and {b})"
    return f"({a} or {b})"


@functools.lru_cache(maxsize=100_000)
def _tt_entails(premises: tuple, x: int) -> bool:
    names = set()
    for p in premises + (x,):
        atoms_in(p, names)
    body = " and ".join(_source(p) for p in premises) or "True"
    counter = eval(f"lambda v: ({body}) and not {_source(x)}")  # noqa: S307
    width = max(names, default=0) + 1
    names = sorted(names)
    for bits in itertools.product((False, True), repeat=len(names)):
        v = [False] * width
        for n, b in zip(names, bits):
            v[n] = b
        if counter(v):
            return False
    return True


def tt_entails(premises, x: int) -> bool:
    """Every assignment satisfying the premises satisfies ``x``."""
    return _tt_entails(tuple(sorted(set(premises))), x)


# ----------------------------------------------------- staged table systems


@dataclass
class TinySystem:
    """A staged table system described by plain data."""

    kind: str
    axioms: list  # (stage, conclusion, premises)
    good: bool  # delay + identity + fixpoint closure, as a good approximation
    explode: Optional[int]
    f_table: list  # f_0 .. f_{k-1}; later slots take the missing numbers in order
    fm_table: dict  # explicit f^- values; otherwise x -> x + 1
    c: int
    c_minus: Optional[int] = None
    _fcache: list = field(default_factory=list, repr=False)

    def f(self, u: int) -> int:
        if u < len(self.f_table):
            return self.f_table[u]
        if not self._fcache:
            taken = set(self.f_table)
            self._fcache.extend(n for n in range(10_000) if n not in taken)
        return self._fcache[u - len(self.f_table)]

    def fm(self, x: int) -> int:
        return self.fm_table.get(x, x + 1)

    def active(self, s: int) -> list:
        """The axioms of ``H_s``."""
        out = []
        for t, x, D in self.axioms:
            enter = max(t, x + 1, max(D, default=-1) + 1) if self.good else t
            if enter <= s:
                out.append((x, frozenset(D)))
        return out

    def H(self, s: int, X) -> set:
        X = set(X)
        ax = self.active(s)
        if not self.good:
            out = {x for x, D in ax if D <= X}
            if self.explode is not None and self.explode in X:
                out |= set(range(s))
            return out
        known = set(X)
        fired: set = set()
        while True:
            new = {x for x, D in ax if D <= known} - fired
            if self.explode is not None and self.explode in known:
                new |= set(range(s)) - fired
            if not new:
                break
            fired |= new
            known |= new
        return fired | {x for x in X if x < s}


@dataclass
class OracleStage:
    stage: int
    stacks: tuple
    m: int
    clause: str
    z: Optional[int]
    A: frozenset


def simulate(sys_: TinySystem, budget: int) -> list:
    """Brute-force run: stacks, marker, fired clause and ``A_s`` per stage."""
    stacks: dict[int, list] = {0: [sys_.f(0)]}
    m = 0
    out = [OracleStage(0, _freeze(stacks), 0, "init", None, frozenset())]
    for s in range(budget):
        tops = [stacks[u][-1] if stacks.get(u) else None for u in range(m + 1)]
        chi = []
        for k in range(m + 1):
            L = {t for t in tops[: k + 1] if t is not None}
            chi.append(sys_.H(s, L))
        kc = next((k for k in range(m + 1) if sys_.c in chi[k]), None)
        kcm = None
        if sys_.kind == "q":
            kcm = next((k for k in range(m + 1) if sys_.c_minus in chi[k]), None)
        clause, z = "1", None
        if sys_.kind == "p" and kc is not None:
            clause, z = "2", kc
            old = stacks[z]
            stacks = {u: list(v) for u, v in stacks.items() if u < z}
            stacks[z] = [*old, sys_.fm(old[-1])]
            m = z
        elif kc is not None and (sys_.kind == "d" or kcm is None or kc <= kcm):
            z = kc
            clause, m, stacks = _discard(sys_, s, z, stacks)
        elif kcm is not None:
            z = kcm
            if not stacks.get(z):
                clause, m, stacks = _discard(sys_, s, z, stacks)
            else:
                clause = "3"
                old = stacks[z]
                stacks = {u: list(v) for u, v in stacks.items() if u < z}
                stacks[z] = [*old, sys_.fm(old[-1])]
                m = z
        else:
            stacks = {u: list(v) for u, v in stacks.items() if u <= m}
            stacks[m + 1] = [sys_.f(m + 1)]
            m += 1
        A: set = set()
        tops = [stacks[u][-1] if stacks.get(u) else None for u in range(m)]
        for i in range(m):
            A |= sys_.H(s + 1, {t for t in tops[: i + 1] if t is not None})
        out.append(OracleStage(s + 1, _freeze(stacks), m, clause, z, frozenset(A)))
    return out


def _discard(sys_: TinySystem, s: int, z: int, stacks: dict):
    if sys_.c in sys_.H(s, set()):
        return "2.1", 0, {0: [sys_.f(0)]}
    kept = {u: list(v) for u, v in stacks.items() if u < z}
    kept[z + 1] = [sys_.f(z + 1)]
    return "2.2", z + 1, kept


def _freeze(stacks: dict) -> tuple:
    n = max((u for u, v in stacks.items() if v), default=-1) + 1
    return tuple(tuple(stacks.get(u, ())) for u in range(n))


# -------------------------------------------------------- instance makers


def random_tiny(rng, kind: str, good: bool) -> TinySystem:
    """At most five explicit proposals and twelve axioms over codes below 20."""
    codes = list(range(20))
    c = 13
    nprop = rng.randint(2, 5)
    f_table = rng.sample([x for x in codes if x != c], nprop)
    axioms = []
    for _ in range(rng.randint(1, 10 if kind == "q" else 12)):
        concl = c if rng.random() < 0.4 else rng.choice(codes)
        prem = rng.sample(codes, rng.randint(0, 2))
        axioms.append((rng.randint(0, 25), concl, tuple(sorted(prem))))
    fm_table = {}
    for x in rng.sample(codes, 4):
        fm_table[x] = x + rng.randint(1, 6)
    c_minus = None
    if kind == "q":
        c_minus = rng.choice([x for x in codes if x != c])
        for _ in range(2):
            axioms.append((rng.randint(0, 25), c_minus, (rng.choice(codes),)))
    explode = c if good else None
    return TinySystem(kind, axioms, good, explode, f_table, fm_table, c, c_minus)


def to_spec(t: TinySystem):
    """The same instance as a library SystemSpec."""
    from dialectical.operators import Approximation, TableOperator, goodify
    from dialectical.systems import ProposingFunction, RevisingFunction, SystemSpec

    approx = Approximation.from_deltas([(s, [(x, D)]) for s, x, D in t.axioms], explode=t.explode)
    if t.good:
        approx = goodify(approx)
    f = ProposingFunction.from_table(dict(enumerate(t.f_table)), "complement")
    fm = RevisingFunction("shift", 1, tuple(sorted(t.fm_table.items()))) if t.kind != "d" else None
    return SystemSpec(t.kind, TableOperator(approx), f, fm, t.c, t.c_minus)


def compare_traces(trace, stages: list) -> list:
    """Stage-by-stage differences between an engine trace and an oracle run."""
    diffs = []
    for snap, ref in zip(trace.snapshots, stages):
        mine = (snap.stacks, snap.m, snap.clause, snap.z, frozenset(snap.A))
        theirs = (ref.stacks, ref.m, ref.clause, ref.z, ref.A)
        if mine != theirs:
            diffs.append((ref.stage, mine, theirs))
    if len(trace.snapshots) != len(stages):
        diffs.append(("length", len(trace.snapshots), len(stages)))
    return diffs


Derives = Callable[[list, int], bool]
