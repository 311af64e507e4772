"""The staged d-, p- and q-procedures, traces and budget-bounded limit reports."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .codec import atom, neg, pretty
from .operators import Scanner, TableOperator
from .systems import InvalidSpec, SystemSpec, settled_after, validate

DEFAULT_LOOP_THRESHOLD = 32


@dataclass(frozen=True)
class ProcedureState:
    """Stacks ``r_s(u)`` (trailing empty slots trimmed) and the marker ``m(s)``."""

    stage: int
    stacks: tuple
    m: int

    @classmethod
    def initial(cls, f0: int) -> "ProcedureState":
        return cls(0, ((f0,),), 0)

    def stack(self, u: int) -> tuple:
        return self.stacks[u] if u < len(self.stacks) else ()

    def top(self, u: int) -> Optional[int]:
        st = self.stack(u)
        return st[-1] if st else None

    def tops(self, n: int) -> list:
        out = [st[-1] if st else None for st in self.stacks[:n]]
        out.extend([None] * (n - len(out)))
        return out

    def L(self, x: int) -> frozenset:
        return frozenset(t for t in self.tops(x) if t is not None)

    def check(self) -> None:
        nonempty = [u for u, st in enumerate(self.stacks) if st]
        greatest = nonempty[-1] if nonempty else 0
        if self.stacks and not self.stacks[-1]:
            raise AssertionError(f"stage {self.stage}: trailing empty slot not trimmed")
        if greatest != self.m:
            raise AssertionError(f"stage {self.stage}: m={self.m} but greatest nonempty slot is {greatest}")


def _trim(stacks: list) -> tuple:
    while stacks and not stacks[-1]:
        stacks.pop()
    return tuple(stacks)


@dataclass(frozen=True)
class Step:
    state: ProcedureState
    clause: str
    z: Optional[int]


def _extend(state: ProcedureState, spec: SystemSpec) -> Step:
    m = state.m
    stacks = list(state.stacks[: m + 1])
    while len(stacks) < m + 1:
        stacks.append(())
    stacks.append((spec.f(m + 1),))
    return Step(ProcedureState(state.stage + 1, _trim(stacks), m + 1), "1", None)


def _revise(state: ProcedureState, spec: SystemSpec, z: int, clause: str) -> Step:
    stacks = list(state.stacks[:z])
    st = state.stack(z)
    stacks.append(st + (spec.f_minus(st[-1]),))
    # slot z+1 is left unspecified by the clause; it is emptied
    return Step(ProcedureState(state.stage + 1, _trim(stacks), z), clause, z)


def _discard(state: ProcedureState, spec: SystemSpec, z: int, sc: Scanner, clause: str) -> Step:
    if sc.from_empty(spec.c):
        return Step(ProcedureState(state.stage + 1, ((spec.f(0),),), 0), clause + ".1", z)
    stacks = list(state.stacks[:z])
    while len(stacks) < z:
        stacks.append(())
    stacks.append(())
    stacks.append((spec.f(z + 1),))
    return Step(ProcedureState(state.stage + 1, _trim(stacks), z + 1), clause + ".2", z)


def _scan(state: ProcedureState, sc: Scanner) -> None:
    sc.set_stage(state.stage)
    sc.set_prefix(state.tops(state.m + 1))


def step_p(state: ProcedureState, spec: SystemSpec, sc: Scanner) -> Step:
    _scan(state, sc)
    z = sc.least_level(spec.c)
    if z is None:
        return _extend(state, spec)
    return _revise(state, spec, z, "2")


def step_d(state: ProcedureState, spec: SystemSpec, sc: Scanner) -> Step:
    _scan(state, sc)
    z = sc.least_level(spec.c)
    if z is None:
        return _extend(state, spec)
    return _discard(state, spec, z, sc, "2")


def step_q(state: ProcedureState, spec: SystemSpec, sc: Scanner) -> Step:
    _scan(state, sc)
    kc = sc.least_level(spec.c)
    kcm = sc.least_level(spec.c_minus)
    if kc is None and kcm is None:
        return _extend(state, spec)
    if kc is not None and (kcm is None or kc <= kcm):
        return _discard(state, spec, kc, sc, "2")
    if not state.stack(kcm):
        # only reachable when c- is derived from the empty set below an emptied slot 0
        return _discard(state, spec, kcm, sc, "2")
    return _revise(state, spec, kcm, "3")


STEPS = {"p": step_p, "d": step_d, "q": step_q}


@dataclass(frozen=True)
class Snapshot:
    stage: int
    stacks: tuple
    m: int
    clause: str
    z: Optional[int]
    A: frozenset

    def state(self) -> ProcedureState:
        return ProcedureState(self.stage, self.stacks, self.m)


@dataclass
class Trace:
    kind: str
    budget: int
    snapshots: list
    watch: Optional[frozenset] = None
    proposals: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.snapshots)

    def stack(self, s: int, u: int) -> tuple:
        st = self.snapshots[s].stacks
        return st[u] if u < len(st) else ()

    def top(self, s: int, u: int) -> Optional[int]:
        st = self.stack(s, u)
        return st[-1] if st else None

    def L(self, s: int, x: int) -> frozenset:
        return self.snapshots[s].state().L(x)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def to_tsv(self, use_pretty: bool = False) -> str:
        out = io.StringIO()
        out.write("stage\tclause\tz\tm\tA\n")
        for snap in self.snapshots:
            A = sorted(snap.A)
            a_text = json.dumps([pretty(x) for x in A]) if use_pretty else json.dumps(A)
            z = "" if snap.z is None else str(snap.z)
            out.write(f"{snap.stage}\t{snap.clause}\t{z}\t{snap.m}\t{a_text}\n")
        return out.getvalue()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "budget": self.budget,
            "stages": [
                {
                    "stage": snap.stage,
                    "clause": snap.clause,
                    "z": snap.z,
                    "m": snap.m,
                    "stacks": [list(st) for st in snap.stacks],
                    "A": sorted(snap.A),
                }
                for snap in self.snapshots
            ],
        }


def default_watch(spec: SystemSpec, window: int) -> set:
    watch = {spec.f(u) for u in range(window)}
    for i in range(window):
        watch.add(atom(i))
        watch.add(neg(atom(i)))
    return watch


def run(
    spec: SystemSpec,
    budget: int,
    *,
    window: int = 10,
    watch: Optional[Iterable[int]] = None,
    check: bool = True,
) -> Trace:
    """Stage 0 plus ``budget`` steps of the procedure for ``spec.kind``.

    ``A_s`` is recorded in full for table operators; for other operators it is
    intersected with ``watch`` (by default the first ``window`` proposals and
    the first ``window`` atoms with their negations).
    """
    if check:
        report = validate(spec, max(budget, 1))
        if report.status == "invalid":
            raise InvalidSpec(report)
    exact = isinstance(spec.operator, TableOperator)
    if watch is None and not exact:
        watch = default_watch(spec, window)
    universe = None if watch is None else sorted(set(watch))
    step = STEPS[spec.kind]
    sc = spec.operator.scanner(spec.symbols())
    state = ProcedureState.initial(spec.f(0))
    snaps = [Snapshot(0, state.stacks, 0, "init", None, frozenset())]
    for _ in range(budget):
        result = step(state, spec, sc)
        state = result.state
        A: frozenset = frozenset()
        if state.m > 0:
            sc.set_stage(state.stage)
            sc.set_prefix(state.tops(state.m))
            A = frozenset(sc.closure(universe))
        snaps.append(Snapshot(state.stage, state.stacks, state.m, result.clause, result.z, A))
    return Trace(spec.kind, budget, snaps, None if universe is None else frozenset(universe))


# ------------------------------------------------------------ limit report


@dataclass
class SlotReport:
    u: int
    proposal: int
    last_change_r: int
    last_change_L: int
    stabilized: bool
    final_stack: tuple
    max_depth: int


@dataclass
class LimitReport:
    window: int
    budget: int
    half: int
    slots: list
    candidate: dict  # code -> True / False / None (unsettled)
    loop_warnings: list
    theses_from_L: Optional[list]
    least_unstable: Optional[int]

    @property
    def stabilized(self) -> bool:
        return all(sl.stabilized for sl in self.slots)

    def member(self, code: int) -> Optional[bool]:
        return self.candidate.get(code, False)

    def candidate_A(self) -> list:
        return sorted(x for x, v in self.candidate.items() if v)

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "budget": self.budget,
            "stabilized": self.stabilized,
            "slots": [
                {
                    "u": sl.u,
                    "f_u": sl.proposal,
                    "last_change_r": sl.last_change_r,
                    "last_change_L": sl.last_change_L,
                    "stabilized": sl.stabilized,
                    "stack": list(sl.final_stack),
                    "max_depth": sl.max_depth,
                }
                for sl in self.slots
            ],
            "candidate_A": self.candidate_A(),
            "unsettled": sorted(x for x, v in self.candidate.items() if v is None),
            "loop_warnings": self.loop_warnings,
            "least_unstable_slot": self.least_unstable,
            "theses_from_L": self.theses_from_L,
        }


def limit_report(
    trace: Trace, spec: SystemSpec, window: int, loop_threshold: int = DEFAULT_LOOP_THRESHOLD
) -> LimitReport:
    """Budget heuristics for the limits: a value is taken as settled when it is
    constant over the final half of the run."""
    snaps = trace.snapshots
    half = trace.budget // 2
    width = max(len(sn.stacks) for sn in snaps)
    nslots = max(window, width)
    last_r = [0] * nslots
    last_L = [0] * nslots
    depth = [0] * nslots
    for u, st in enumerate(snaps[0].stacks):
        depth[u] = len(st)
    # stage at which the least slot whose top changed was u
    top_event = [0] * (nslots + 1)
    for s in range(1, len(snaps)):
        prev, cur = snaps[s - 1].stacks, snaps[s].stacks
        n = max(len(prev), len(cur))
        common = min(len(prev), len(cur))
        lo = 0
        # stacks are shared between snapshots, so identity finds the first change fast
        while lo < common and (prev[lo] is cur[lo] or prev[lo] == cur[lo]):
            lo += 1
        first_top = None
        for u in range(lo, n):
            a = prev[u] if u < len(prev) else ()
            b = cur[u] if u < len(cur) else ()
            if a == b:
                continue
            last_r[u] = s
            if len(b) > depth[u]:
                depth[u] = len(b)
            if first_top is None and (a[-1] if a else None) != (b[-1] if b else None):
                first_top = u
        if first_top is not None:
            top_event[first_top] = s
    # L_s(v) changes exactly when some top below v changes
    running = 0
    for v in range(1, nslots):
        running = max(running, top_event[v - 1])
        last_L[v] = running
    final = snaps[-1]
    slots = []
    for u in range(window):
        stable = last_r[u] <= half and last_L[u] <= half
        slots.append(
            SlotReport(u, spec.f(u), last_r[u], last_L[u], stable, final.stacks[u] if u < len(final.stacks) else (), depth[u])
        )
    least_unstable = next((u for u in range(nslots) if last_r[u] > half), None)

    universe = trace.watch
    if universe is None:
        universe = frozenset().union(*(sn.A for sn in snaps[half:])) | {spec.f(u) for u in range(window)}
    candidate = {}
    tail = snaps[half:]
    for x in sorted(universe):
        vals = {x in sn.A for sn in tail}
        candidate[x] = vals.pop() if len(vals) == 1 else None

    loops = [u for u in range(nslots) if depth[u] > loop_threshold]
    theses = None
    if least_unstable is not None and least_unstable > 0:
        L = final.state().L(least_unstable)
        theses = sorted(spec.operator.apply(trace.budget, L, universe=sorted(universe)))
    return LimitReport(window, trace.budget, half, slots, candidate, loops, theses, least_unstable)


# ------------------------------------------------------- characterization


@dataclass
class CharacterizationItem:
    u: int
    proposal: int
    member: Optional[bool]
    blocked: Optional[bool]  # whether c (or c-) is derivable from L(u) + {f_u}
    holds: Optional[bool]

    @property
    def status(self) -> str:
        if self.holds is None:
            return "unknown"
        return "holds" if self.holds else "fails"


def characterization_check(trace: Trace, report: LimitReport, spec: SystemSpec) -> list:
    """``f_u`` is a final thesis iff no contradiction (nor ``c-`` for q) is
    derivable from ``L(u) + {f_u}``, for every slot of the window."""
    final = trace.final.state()
    horizon = trace.budget
    out = []
    for sl in report.slots:
        u, fu = sl.u, sl.proposal
        member = report.member(fu)
        if not sl.stabilized or member is None:
            out.append(CharacterizationItem(u, fu, member, None, None))
            continue
        X = set(final.L(u)) | {fu}
        blocked, settled = False, True
        for sym in spec.symbols():
            known = settled_after(spec.operator, sym)
            if known is None:
                # only a positive answer is conclusive without a horizon
                hit = spec.operator.derives(horizon, X, sym)
                settled = settled and hit
            else:
                hit = spec.operator.derives(max(known, max(X) + 1), X, sym)
            blocked = blocked or hit
        if not (settled or blocked):
            out.append(CharacterizationItem(u, fu, member, None, None))
            continue
        out.append(CharacterizationItem(u, fu, member, blocked, member == (not blocked)))
    return out


# ------------------------------------------------------------ ascii stacks


def render_stacks(snap: Snapshot, use_pretty: bool = False, slots: Optional[int] = None) -> str:
    """Slots as columns, stacks growing upwards, ``^`` under slot ``m``."""
    n = max(len(snap.stacks), snap.m + 2) if slots is None else slots
    cols = [snap.stacks[u] if u < len(snap.stacks) else () for u in range(n)]
    show = (lambda c: pretty(c)) if use_pretty else str
    width = max([len(show(c)) for st in cols for c in st] + [len(str(n - 1)), 1]) + 2
    height = max([len(st) for st in cols] + [1])
    lines = []
    head = f"stage {snap.stage}  clause {snap.clause}"
    if snap.z is not None:
        head += f" at z={snap.z}"
    lines.append(head + f"  m={snap.m}")
    for row in range(height - 1, -1, -1):
        cells = []
        for st in cols:
            cells.append((show(st[row]) if row < len(st) else ("." if row == 0 else "")).center(width))
        lines.append("".join(cells).rstrip())
    lines.append("".join(("-" * (width - 2)).center(width) for _ in cols).rstrip())
    lines.append("".join(str(u).center(width) for u in range(n)).rstrip())
    lines.append("".join(("^" if u == snap.m else "").center(width) for u in range(n)).rstrip())
    return "\n".join(lines) + "\n"


def render_trace(trace: Trace, use_pretty: bool = False, stages: Optional[Iterable[int]] = None) -> str:
    picks = range(len(trace.snapshots)) if stages is None else stages
    return "\n".join(render_stacks(trace.snapshots[s], use_pretty) for s in picks)
