"""Transformations between system kinds and the diagonalization construction."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .codec import CONTRADICTION, atom, atoms_of, conj, neg
from .engine import LimitReport, Trace, default_watch, limit_report, run
from .logic import AxiomStream, EntailmentOperator, completion_check, tautology_chain, theory_TA
from .operators import Approximation, Operator, StarOperator, TableOperator, goodify
from .systems import ProposingFunction, RevisingFunction, ShiftedProposal, SystemSpec, settled_after, validate


class Refused(ValueError):
    """The transform does not apply to this evidence."""


class Unknown(RuntimeError):
    """A parameter of the construction was not witnessed within the budget."""


class BudgetExceeded(RuntimeError):
    pass


class InternalInvariant(AssertionError):
    pass


@dataclass
class TransformReport:
    name: str
    checks: dict = field(default_factory=dict)  # name -> True / False / None
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        vals = list(self.checks.values())
        if any(v is False for v in vals):
            return "fail"
        if any(v is None for v in vals):
            return "unknown"
        return "pass"

    def to_json(self) -> dict:
        return {"transform": self.name, "status": self.status, "checks": self.checks, "details": self.details}


def window_equal(a: LimitReport, b: LimitReport, codes: Iterable[int]) -> tuple[Optional[bool], list]:
    """Compare stabilized membership of ``codes``; ``None`` if any is unsettled."""
    diffs, unknown = [], False
    for x in sorted(set(codes)):
        ma, mb = a.member(x), b.member(x)
        if ma is None or mb is None:
            unknown = True
        elif ma != mb:
            diffs.append(x)
    if diffs:
        return False, diffs
    return (None if unknown else True), []


def check_watch(spec: SystemSpec, window: int, budget: int) -> set:
    """Codes whose final membership the window slots decide: each ``f_u`` and
    ``!f_u`` for ``u < window``, minus codes too large to settle within the
    final half of the budget."""
    codes = set()
    for u in range(window):
        codes.add(spec.f(u))
        codes.add(neg(spec.f(u)))
    return {x for x in codes if x < budget // 2}


def _limit_stage(op: Operator, codes: Iterable[int], budget: int) -> int:
    stage = budget
    for x in codes:
        stage = max(stage, x + 1)
        known = settled_after(op, x)
        if known is not None:
            stage = max(stage, known)
    return stage


def limit_apply(op: Operator, X: Iterable[int], universe: Iterable[int], budget: int) -> set:
    X, universe = set(X), sorted(set(universe))
    return op.apply(_limit_stage(op, X | set(universe), budget), X, universe)


# ---------------------------------------------------------------- d -> p


def d_to_p(d: SystemSpec, budget: int = 200, chain: Optional[RevisingFunction] = None, checks: int = 3) -> SystemSpec:
    """Revise every failed proposal to ``z_0`` and walk up the chain ``Z`` of
    theorems; ``Z`` defaults to the tautology chain."""
    if d.kind != "d":
        raise ValueError("d_to_p expects a d-system")
    fm = chain if chain is not None else RevisingFunction("chain")
    z = fm.chain[0] if fm.offset is None else fm.offset
    for _ in range(checks):
        if not d.operator.derives_from_empty(_limit_stage(d.operator, [z], budget), z):
            raise Refused(f"{z} is not a theorem of the operator; Z must lie inside H(emptyset)")
        z = fm(z)
    return SystemSpec("p", d.operator, d.f, fm, d.c)


def d_to_p_check(d: SystemSpec, budget: int, window: int, watch: Optional[Iterable[int]] = None) -> TransformReport:
    p = d_to_p(d, budget)
    z0 = p.f_minus.chain[0] if p.f_minus.offset is None else p.f_minus.offset
    watch = set(watch) if watch is not None else check_watch(d, window, budget)
    td, tp = run(d, budget, watch=watch), run(p, budget, watch=watch)
    rd, rp = limit_report(td, d, window), limit_report(tp, p, window)
    rep = TransformReport("d2p", details={"z0": z0, "emitted": p.to_json()})
    stable = rd.stabilized and rp.stabilized
    bullets = True
    for u in range(window):
        sd, sp = td.final.state().stack(u), tp.final.state().stack(u)
        fu = d.f(u)
        if sd == (fu,):
            bullets &= sp == (fu,)
        elif sd == ():
            bullets &= sp == (fu, z0)
        else:
            bullets = False
    rep.checks["stacks"] = bullets if stable else None
    Ld = set(td.final.state().L(window))
    Lp = set(tp.final.state().L(window))
    discarded = any(td.final.state().stack(u) == () for u in range(window))
    rep.checks["L_window"] = (Lp == Ld | ({z0} if discarded else set())) if stable else None
    rep.checks["closure"] = (
        limit_apply(d.operator, Lp, watch, budget) == limit_apply(d.operator, Ld, watch, budget) if stable else None
    )
    eq, diffs = window_equal(rd, rp, watch)
    rep.checks["window_equal"] = eq
    rep.details.update(diffs=diffs, A_d=rd.candidate_A(), A_p=rp.candidate_A())
    return rep


# ---------------------------------------------------------------- p -> q


def p_to_q(p: SystemSpec, trace: Trace, report: LimitReport) -> tuple[SystemSpec, dict]:
    """Build ``q = <H*, f*, f^-, z_0, c>`` from the run evidence of ``p``."""
    if p.kind != "p":
        raise ValueError("p_to_q expects a p-system")
    if report.loop_warnings:
        raise Refused(f"p has loops (slots {report.loop_warnings}); the claim is trivial for looping systems")
    if not report.stabilized:
        raise Unknown("the window of p did not stabilize within the budget")
    u0 = None
    for sl in report.slots:
        if sl.proposal != p.c and report.member(sl.proposal) is False:
            u0 = sl.u
            break
    if u0 is None:
        raise Refused("A_p contains every proposal except c on the window; the claim is trivial")
    z0 = p.f(u0)
    z1 = trace.final.state().top(u0)
    q = SystemSpec("q", StarOperator(p.operator, z0), ShiftedProposal(z1, p.f), p.f_minus, z0, p.c)
    return q, {"u0": u0, "z0": z0, "z1": z1}


def star_closure_check(op: StarOperator, stage: int, samples: Iterable[Iterable[int]]) -> dict:
    """Extensive, idempotent, and ``z0`` derivable only from itself, at one stage."""
    ext = idem = z_only = True
    witnesses = []
    for X in samples:
        X = {x for x in X if x < stage}
        once = op.apply(stage, X)
        if not X <= once:
            ext = False
            witnesses.append(("extensive", sorted(X)))
        twice = op.apply(stage, once)
        if not twice <= once:
            idem = False
            witnesses.append(("idempotent", sorted(X)))
        if op.z0 in once and op.z0 not in X:
            z_only = False
            witnesses.append(("z0", sorted(X)))
    return {"extensive": ext, "idempotent": idem, "z0_only_from_itself": z_only, "witnesses": witnesses[:5]}


def p_to_q_check(p: SystemSpec, budget: int, window: int, watch: Optional[Iterable[int]] = None) -> TransformReport:
    watch = set(watch) if watch is not None else check_watch(p, window, budget)
    tp = run(p, budget, watch=watch)
    rp = limit_report(tp, p, window)
    q, params = p_to_q(p, tp, rp)
    # f* repeats z1 = rho_p(u0), so it is not injective; the run skips validation
    tq = run(q, budget, watch=watch, check=False)
    rq = limit_report(tq, q, window + 1)
    rep = TransformReport("p2q", details=dict(params, emitted=q.to_json()))
    eq, diffs = window_equal(rp, rq, watch)
    rep.checks["window_equal"] = eq
    rep.details.update(diffs=diffs, A_p=rp.candidate_A(), A_q=rq.candidate_A())
    return rep


# ---------------------------------------------------------------- q -> d


def _stable_from(trace: Trace, t: int, n: int) -> bool:
    """Tops of slots ``< n`` constant from stage ``t`` on."""
    ref = trace.snapshots[t].state().tops(n)
    return all(sn.state().tops(n) == ref for sn in trace.snapshots[t:])


def q_to_d(q: SystemSpec, trace: Trace, limit: Optional[int] = None) -> tuple[SystemSpec, dict]:
    """The dialectical system ``<H, g, c>`` read off a stabilized q-run."""
    if q.kind != "q":
        raise ValueError("q_to_d expects a q-system")
    budget = trace.budget
    half = budget // 2
    nc = neg(q.c_minus)
    width = max(len(sn.stacks) for sn in trace.snapshots) + 2
    u = next((i for i in range(width) if q.f(i) == nc), None)
    if u is None:
        raise Unknown(f"!c- = {nc} is not proposed on the slots reached by the run")
    pair = {q.c_minus, nc}
    t0 = None
    for t in range(max(nc, q.c_minus) + 1, half + 1):
        if not _stable_from(trace, t, u + 1):
            continue
        if q.operator.derives(t, pair, q.c):
            t0 = t
            break
    if t0 is None:
        raise Unknown("no stage t0 settling the slot of !c- was witnessed within the first half of the budget")
    v = 0
    while v + 1 <= width and _stable_from(trace, t0, v + 1):
        v += 1
    if v >= width:
        raise Unknown("every slot is frozen after t0; v is not witnessed")
    final = trace.final.state()
    zs = tautology_chain(8)
    limit = limit if limit is not None else budget + 2
    g: dict[int, int] = {}
    used: set = set()

    def filler() -> int:
        for z in zs:
            if z not in used:
                return z
        raise Unknown("ran out of padding theorems")

    for w in range(v):
        st = final.stack(w)
        if not st:
            val = q.f(w)
        elif st[-1] not in used:
            val = st[-1]
        else:
            val = filler()
        g[w] = val
        used.add(val)
    early = set(used)
    for w in range(v, limit):
        fw = q.f(w)
        val = fw if fw not in early else filler()
        g[w] = val
        used.add(val)
    d = SystemSpec("d", q.operator, ProposingFunction.from_table(g, "complement"), None, q.c)
    return d, {"u": u, "t0": t0, "v": v}


def q_to_d_check(q: SystemSpec, budget: int, window: int, watch: Optional[Iterable[int]] = None) -> TransformReport:
    watch = set(watch) if watch is not None else check_watch(q, window, budget)
    tq = run(q, budget, watch=watch)
    rq = limit_report(tq, q, window)
    d, params = q_to_d(q, tq)
    td = run(d, budget, watch=watch, check=False)
    rd = limit_report(td, d, window)
    rep = TransformReport("q2d", details=dict(params, emitted=d.to_json()))
    rep.checks["g_injective"] = validate(d, budget).status != "invalid"
    eq, diffs = window_equal(rq, rd, watch)
    rep.checks["window_equal"] = eq
    rep.details.update(diffs=diffs, A_q=rq.candidate_A(), A_d=rd.candidate_A())
    return rep


# ------------------------------------------------------- d completion -> q


def d_completion_to_q(d: SystemSpec) -> SystemSpec:
    """``c- = c & c`` and ``f^- = !``, over a good approximation of ``H``."""
    if d.kind != "d":
        raise ValueError("d_completion_to_q expects a d-system")
    op = d.operator
    if isinstance(op, TableOperator) and not (op.approx.identity and op.approx.closed):
        op = TableOperator(goodify(op.approx))
    return SystemSpec("q", op, d.f, RevisingFunction("neg"), d.c, conj(d.c, d.c))


def d_completion_to_q_check(d: SystemSpec, budget: int, window: int, watch: Optional[Iterable[int]] = None) -> TransformReport:
    watch = set(watch) if watch is not None else check_watch(d, window, budget)
    q = d_completion_to_q(d)
    td, tq = run(d, budget, watch=watch), run(q, budget, watch=watch)
    rd, rq = limit_report(td, d, window), limit_report(tq, q, window)
    rep = TransformReport("dc2q", details={"c_minus": q.c_minus, "emitted": q.to_json()})
    rep.checks["no_revision"] = all(sn.clause != "3" for sn in tq.snapshots)
    eq, diffs = window_equal(rd, rq, watch)
    rep.checks["window_equal"] = eq
    rep.details.update(diffs=diffs, A_d=rd.candidate_A(), A_q=rq.candidate_A())
    return rep


# ------------------------------------------------------------ p with f^- = !


def p_neg_equals_d_check(p: SystemSpec, budget: int, window: int, watch: Optional[Iterable[int]] = None) -> TransformReport:
    if p.f_minus is None or p.f_minus.rule != "neg" or p.f_minus.table:
        raise ValueError("the revising function must be the negation connective")
    d = SystemSpec("d", p.operator, p.f, None, p.c)
    watch = set(watch) if watch is not None else check_watch(p, window, budget)
    tp, td = run(p, budget, watch=watch), run(d, budget, watch=watch)
    rp, rd = limit_report(tp, p, window), limit_report(td, d, window)
    rep = TransformReport("pneg")
    stable = rp.stabilized and rd.stabilized
    bullets, side = True, True
    dfinal, pfinal = td.final.state(), tp.final.state()
    for u in range(window):
        fu = p.f(u)
        sd, sp = dfinal.stack(u), pfinal.stack(u)
        if sd == (fu,):
            bullets &= sp == (fu,)
        elif sd == ():
            bullets &= sp == (fu, neg(fu))
            Ld = dfinal.L(u)
            side &= neg(fu) in limit_apply(p.operator, Ld, [neg(fu)], budget)
        else:
            bullets = False
    rep.checks["stacks"] = bullets if stable else None
    rep.checks["neg_derivable"] = side if stable else None
    eq, diffs = window_equal(rp, rd, watch)
    rep.checks["window_equal"] = eq
    rep.details.update(diffs=diffs, A_p=rp.candidate_A(), A_d=rd.candidate_A())
    return rep


# ---------------------------------------------------------------- T_A


def bernardi_system(A_stages: Sequence[Iterable[int]]) -> SystemSpec:
    """A d-system for ``T_A`` proposing every code in order."""
    return SystemSpec("d", EntailmentOperator(theory_TA(A_stages)), ProposingFunction("identity"), None, CONTRADICTION)


def bernardi_check(A_stages: Sequence[Iterable[int]], budget: int, window: int) -> TransformReport:
    """Checks only ``i in A => p_i in A_d`` on the window."""
    A_stages = [set(s) for s in A_stages]
    d = bernardi_system(A_stages)
    watch = default_watch(d, window) | {atom(i) for i in range(window)}
    tr = run(d, budget, watch=watch)
    rep_l = limit_report(tr, d, window)
    final_A = A_stages[-1] if A_stages else set()
    ok: Optional[bool] = True
    rows = []
    for i in range(window):
        m = rep_l.member(atom(i))
        rows.append({"i": i, "in_A": i in final_A, "p_i_in_A_d": m})
        if i in final_A:
            if m is None:
                ok = None if ok else ok
            elif not m:
                ok = False
    rep = TransformReport("bernardi", {"m_reduction": ok}, {"rows": rows})
    return rep


# ----------------------------------------------------------- diagonalization


@dataclass
class DiagTarget:
    """A stage-indexed 0/1 matrix ``V_{e,s}(x)``.

    Listed columns hold ``(threshold, value)`` pairs; the value at stage ``s``
    is that of the last pair with ``threshold <= s`` (0 before the first).
    Other columns follow the default: a constant, or a seeded rule flipping at
    most ``flips`` times before ``horizon``.
    """

    e: int
    columns: dict = field(default_factory=dict)
    default: object = 0

    def _rule(self, x: int) -> list:
        d = self.default
        if isinstance(d, int):
            return [(0, d)]
        rng = random.Random(f"{d['seed']}:{self.e}:{x}")
        first = rng.randrange(2)
        k = rng.randint(0, d["flips"])
        stages = sorted(rng.sample(range(1, d["horizon"]), k))
        out, v = [(0, first)], first
        for s in stages:
            v = 1 - v
            out.append((s, v))
        return out

    def pairs(self, x: int) -> list:
        return list(self.columns[x]) if x in self.columns else self._rule(x)

    def value(self, x: int, s: int) -> int:
        v = 0
        for t, val in self.pairs(x):
            if t <= s:
                v = val
        return v

    def settles_by(self) -> int:
        out = 0
        for pairs in self.columns.values():
            out = max([out] + [t for t, _ in pairs])
        if isinstance(self.default, dict):
            out = max(out, self.default["horizon"])
        return out

    def to_json(self) -> dict:
        return {
            "e": self.e,
            "columns": [{"x": x, "values": [list(p) for p in pairs]} for x, pairs in sorted(self.columns.items())],
            "default": self.default,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DiagTarget":
        from .systems import SchemaError

        if not isinstance(d, dict) or "e" not in d:
            raise SchemaError("target", "needs field 'e'")
        cols = {}
        for i, col in enumerate(d.get("columns", [])):
            if "x" not in col or "values" not in col:
                raise SchemaError(f"target[e={d['e']}].columns[{i}]", "needs fields 'x' and 'values'")
            cols[int(col["x"])] = [(int(t), int(v)) for t, v in col["values"]]
        default = d.get("default", 0)
        if isinstance(default, dict):
            for key in ("seed", "flips", "horizon"):
                if key not in default:
                    raise SchemaError(f"target[e={d['e']}].default.{key}", "missing field")
        return cls(int(d["e"]), cols, default)


def omega_ce_family(n: int, b: int, seed: int = 0, horizon: int = 60) -> list:
    """``n`` targets whose columns change at most ``b`` times, all before ``horizon``."""
    return [DiagTarget(e, {}, {"seed": seed, "flips": b, "horizon": horizon}) for e in range(n)]


@dataclass
class AddedAxiom:
    stage: int
    code: int
    lead: int
    entry: int


@dataclass
class DiagResult:
    spec: SystemSpec
    trace: Trace
    report: dict
    construction: "Diagonalizer"


class Diagonalizer:
    """Stage-by-stage construction with the fresh-atom independence oracle."""

    def __init__(self, targets: Sequence[DiagTarget]):
        self.targets = sorted(targets, key=lambda t: t.e)
        self.n = len(self.targets)
        self.chain = tautology_chain(2)
        self.a0 = self.chain[0]
        self.f: dict[int, int] = {}
        self.f_range: set = set()
        self.fm: dict[int, int] = {}
        self.ax: list = []
        self.ax_set: set = set()
        self.x: list = [None] * self.n
        self.rhat: dict[int, list] = {}
        self.A: dict[int, int] = {}
        self.entry: dict[int, int] = {self.a0: 0}
        self.atoms: set = set(atoms_of(self.a0)) | set(atoms_of(CONTRADICTION))
        self.fresh_ok = True
        self.actions: list = []
        self.next_f = 0
        self.stage = 0

    # -- bookkeeping

    def mention(self, code: int) -> None:
        self.atoms |= atoms_of(code)

    def gamma(self) -> int:
        i = 0
        while i in self.atoms:
            i += 1
        code = atom(i)
        self.fresh_ok &= not (atoms_of(code) & self.atoms)
        self.mention(code)
        return code

    def enter(self, v: int) -> None:
        self.entry.setdefault(v, self.stage)

    def set_f(self, u: int, v: int) -> None:
        self.f[u] = v
        self.f_range.add(v)
        self.mention(v)
        self.enter(v)

    def set_fm(self, v: int, w: int) -> None:
        self.fm[v] = w
        self.mention(v)
        self.mention(w)
        self.enter(w)

    def fm_of(self, v: int) -> Optional[int]:
        if v in self.fm:
            return self.fm[v]
        i = self._chain_pos(v)
        if i is not None:
            while len(self.chain) <= i + 1:
                self.chain.append(conj(self.chain[-1], self.chain[-1]))
            return self.chain[i + 1]
        return None

    def _chain_pos(self, v: int) -> Optional[int]:
        while self.chain[-1] < v:
            self.chain.append(conj(self.chain[-1], self.chain[-1]))
        return self.chain.index(v) if v in self.chain else None

    def add_axiom(self, code: int, lead: int) -> None:
        if code in self.ax_set:
            return
        self.ax_set.add(code)
        self.ax.append(AddedAxiom(self.stage, code, lead, self.entry.get(lead, self.stage)))
        self.mention(code)

    def top(self, u: int) -> Optional[int]:
        st = self.rhat.get(u)
        return st[-1] if st else None

    def reserved(self, u: int) -> bool:
        return u % 3 != 2 and u // 3 < self.n

    def protected(self) -> set:
        out = set()
        for e in range(self.n):
            for u in (3 * e, 3 * e + 1):
                v = self.f.get(u)
                while v is not None and v not in out and self._chain_pos(v) is None:
                    out.add(v)
                    v = self.fm.get(v)
        return out

    def refuted(self, v: int, y: Optional[int] = None) -> bool:
        if neg(v) in self.ax_set:
            return True
        return y is not None and neg(conj(y, v)) in self.ax_set

    def walk(self, v: int, y: Optional[int] = None) -> int:
        """Where the procedure lands after revising refuted values from ``v`` on."""
        seen = set()
        while self.refuted(v, y):
            if v in seen:
                raise InternalInvariant(f"revision cycle through {v}")
            seen.add(v)
            nxt = self.fm_of(v)
            if nxt is None:
                nxt = self.gamma()
                self.set_fm(v, nxt)
            v = nxt
        return v

    # -- odd stages

    def requires(self, e: int) -> Optional[str]:
        if self.x[e] is None:
            return "r1"
        y, x = self.top(3 * e), self.x[e]
        in_ax = neg(conj(y, x)) in self.ax_set
        val = self.targets[e].value(x, self.stage)
        if (val == 1 and not in_ax) or (val == 0 and in_ax):
            return "r2"
        return None

    def odd(self) -> None:
        for e in range(self.n):
            why = self.requires(e)
            if why is None:
                continue
            if why == "r1":
                self.attack(e)
            elif self.targets[e].value(self.x[e], self.stage) == 1:
                self.a21(e)
            else:
                self.a22(e)
            self.reset(e)
            return

    def attack(self, e: int) -> None:
        u, w = 3 * e, 3 * e + 1
        if u not in self.f:
            x = self.gamma()
            y = self.gamma()
            self.set_f(u, y)
            self.set_f(w, x)
            self.set_fm(x, self.gamma())
            kind = "a1"
        else:
            y = self.walk(self.f[u])
            x = self.walk(self.f[w], y)
            if self.fm_of(x) is None:
                self.set_fm(x, self.gamma())
            kind = "a1*"
        self.x[e] = x
        self.rhat[u] = [y]
        self.rhat[w] = [x]
        self.A[x] = 1
        self.actions.append((self.stage, e, kind))

    def a21(self, e: int) -> None:
        y, x = self.top(3 * e), self.x[e]
        self.add_axiom(neg(conj(y, x)), y)
        nxt = self.fm_of(x)
        if nxt is None:
            nxt = self.gamma()
            self.set_fm(x, nxt)
        self.rhat[3 * e + 1].append(self.walk(nxt, y))
        self.A[x] = 0
        self.actions.append((self.stage, e, "a21"))

    def a22(self, e: int) -> None:
        y, x = self.top(3 * e), self.x[e]
        self.add_axiom(neg(y), y)
        nxt = self.fm_of(y)
        if nxt is None:
            nxt = self.gamma()
            self.set_fm(y, nxt)
        y2 = self.walk(nxt)
        self.rhat[3 * e].append(y2)
        landing = self.walk(self.f[3 * e + 1], y2)
        if landing != x:
            raise InternalInvariant(f"slot {3 * e + 1} would land on {landing}, not x_{e} = {x}")
        self.rhat[3 * e + 1] = [x]
        self.A[x] = 1
        self.actions.append((self.stage, e, "a22"))

    def reset(self, e: int) -> None:
        for e2 in range(e + 1, self.n):
            for u in (3 * e2, 3 * e2 + 1):
                t = self.top(u)
                if t is not None:
                    self.add_axiom(neg(t), t)
                self.rhat.pop(u, None)
            if self.x[e2] is not None:
                self.A[self.x[e2]] = 0
            self.x[e2] = None

    # -- even stages

    def even(self) -> None:
        u = 0
        while u in self.f or self.reserved(u):
            u += 1
        while self.next_f in self.f_range:
            self.next_f += 1
        x = self.next_f
        self.set_f(u, x)
        guard = self.protected()
        v, path = x, []
        while v is not None and self._chain_pos(v) is None:
            path.append(v)
            if v not in self.fm:
                break
            v = self.fm[v]
            if v in path:
                raise InternalInvariant(f"revision cycle through {v}")
        if path and path[-1] not in self.fm and self._chain_pos(path[-1]) is None:
            if not (set(path) & guard):
                self.set_fm(path[-1], self.a0)
        z = 0
        while z in self.fm or self._chain_pos(z) is not None:
            z += 1
        self.set_fm(z, self.gamma())

    def step(self) -> None:
        self.stage += 1
        if self.stage % 2:
            self.odd()
        else:
            self.even()

    # -- output

    def stream(self) -> AxiomStream:
        return AxiomStream.from_deltas([(a.stage, [a.code]) for a in self.ax])

    def spec(self) -> SystemSpec:
        return SystemSpec(
            "p",
            EntailmentOperator(self.stream()),
            ProposingFunction.from_table(self.f, "complement"),
            RevisingFunction.from_table(self.fm, "chain"),
            CONTRADICTION,
        )

    def attention(self) -> list:
        return [e for e in range(self.n) if self.requires(e) is not None]


def diagonalize(
    targets: Sequence[DiagTarget], budget: int, window: int = 10, strict: bool = True
) -> DiagResult:
    """Run the construction for ``budget`` stages, emit the p-system, run it,
    and verify the diagonalization against every target."""
    for t in targets:
        if strict and t.settles_by() > budget // 4:
            raise BudgetExceeded(f"target {t.e} settles at stage {t.settles_by()} > budget/4 = {budget // 4}")
    con = Diagonalizer(targets)
    for _ in range(budget):
        con.step()
    pending = con.attention()
    if pending:
        raise BudgetExceeded(f"requirements {pending} still require attention at stage {budget}")
    spec = con.spec()
    watch = default_watch(spec, window) | {x for x in con.x if x is not None}
    trace = run(spec, budget, window=window, watch=watch)
    nslots = max(window, 3 * con.n)
    rep = limit_report(trace, spec, nslots)
    final = trace.final.state()
    rows = []
    for e, tgt in enumerate(con.targets):
        x = con.x[e]
        V = tgt.value(x, budget)
        ap = rep.member(x)
        rows.append({"e": tgt.e, "x_e": x, "A_hat": con.A.get(x), "A_p": ap, "V_e": V, "diagonalized": None if ap is None else int(ap) != V})
    rho_ok, rho_rows = True, []
    for e in range(con.n):
        for u in (3 * e, 3 * e + 1):
            sl = rep.slots[u]
            hat = con.top(u)
            real = final.top(u)
            if sl.stabilized and hat is not None:
                rho_rows.append({"u": u, "rho_hat": hat, "rho": real})
                rho_ok &= hat == real
    if not rho_ok:
        bad = [r for r in rho_rows if r["rho_hat"] != r["rho"]]
        raise InternalInvariant(f"hat tops disagree with the run on stabilized reserved slots: {bad}")
    comp = completion_check(rep.member, window)
    valid = validate(spec, budget)
    last_action = max((s for s, _, _ in con.actions), default=0)
    surj = set(range(window)) <= {spec.f(u) for u in range(budget)}
    checks = {
        "stabilized": rep.stabilized,
        "diagonalized": all(r["diagonalized"] for r in rows),
        "completion": comp.passed,
        "f_injective_acyclic": valid.status == "valid",
        "f_surjective_on_window": surj,
        "acts_finitely": last_action <= budget // 2,
        "rho_hat_equals_rho": rho_ok,
        "entry_stages": all(a.entry <= a.stage for a in con.ax),
        "fresh_choices": con.fresh_ok,
    }
    report = {
        "checks": checks,
        "passed": all(checks.values()),
        "targets": rows,
        "rho": rho_rows,
        "completion": comp.to_json(),
        "validation": valid.to_json(),
        "axioms": [{"stage": a.stage, "code": a.code, "entry": a.entry} for a in con.ax],
        "actions": [{"stage": s, "e": e, "action": k} for s, e, k in con.actions],
    }
    return DiagResult(spec, trace, report, con)
