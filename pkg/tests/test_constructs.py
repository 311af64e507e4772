import functools

import pytest
from hypothesis import given, settings, strategies as st

from dialectical.codec import CONTRADICTION, atom, conj, neg
from dialectical.constructs import (
    BudgetExceeded,
    DiagTarget,
    Refused,
    bernardi_check,
    d_completion_to_q,
    d_completion_to_q_check,
    d_to_p,
    d_to_p_check,
    diagonalize,
    omega_ce_family,
    p_neg_equals_d_check,
    p_to_q,
    p_to_q_check,
    q_to_d,
    q_to_d_check,
    star_closure_check,
)
from dialectical.engine import limit_report, run
from dialectical.logic import AxiomStream, EntailmentOperator, tautology_chain
from dialectical.operators import Approximation, TableOperator
from dialectical.systems import ProposingFunction, RevisingFunction, SystemSpec
from instances import connective_system

BUDGET, WINDOW = 200, 8


# ------------------------------------------------------------------ d -> p


def test_d_to_p_revising_function():
    d = connective_system(0, "d")
    p = d_to_p(d)
    z = tautology_chain(3)
    assert p.kind == "p" and p.f_minus(7) == z[0] and p.f_minus(z[0]) == z[1]
    chain = p.f_minus.chain
    while len(chain) < 5:
        p.f_minus(chain[-1])
    assert p.f_minus(chain[3]) == chain[4]


def test_d_to_p_refuses_non_theorems():
    d = connective_system(0, "d")
    with pytest.raises(Refused):
        d_to_p(d, chain=RevisingFunction("chain", offset=100))


@pytest.mark.parametrize("seed", range(3))
def test_d_to_p_window(seed):
    rep = d_to_p_check(connective_system(seed, "d"), BUDGET, WINDOW)
    assert rep.status == "pass", rep.to_json()


# ------------------------------------------------------------------ p -> q


def test_p_to_q_shift_and_parameters():
    p = connective_system(1, "p")
    watch = {x for u in range(WINDOW) for x in (p.f(u), neg(p.f(u))) if x < BUDGET // 2}
    tr = run(p, BUDGET, watch=watch)
    q, params = p_to_q(p, tr, limit_report(tr, p, WINDOW))
    assert q.kind == "q" and q.c == params["z0"] and q.c_minus == CONTRADICTION
    assert q.f(0) == params["z1"] and q.f(5) == p.f(4)
    assert params["z1"] == tr.final.state().top(params["u0"])


def test_p_to_q_refuses_loops():
    stages = [(0, [(4, [2])])] + [(k + 1, [(13, [k])]) for k in range(60)]
    approx = Approximation.from_deltas(stages, explode=13)
    from dialectical.operators import goodify

    p = SystemSpec("p", TableOperator(goodify(approx)), ProposingFunction("identity"), RevisingFunction("shift", 1), 13)
    with pytest.raises(Refused):
        p_to_q_check(p, 120, 4)


@functools.lru_cache(maxsize=None)
def star_of(seed):
    p = connective_system(seed, "p")
    tr = run(p, BUDGET, watch=range(60))
    return p_to_q(p, tr, limit_report(tr, p, WINDOW))[0].operator


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=39), max_size=5))
def test_star_operator_is_a_closure(X):
    rep = star_closure_check(star_of(2), 40, [X])
    assert rep["extensive"] and rep["idempotent"] and rep["z0_only_from_itself"], rep


@pytest.mark.parametrize("seed", range(3))
def test_p_to_q_window(seed):
    rep = p_to_q_check(connective_system(seed, "p"), BUDGET, WINDOW)
    assert rep.status == "pass", rep.to_json()


# ------------------------------------------------------------------ q -> d


@pytest.mark.parametrize("seed", range(3))
def test_q_to_d_window(seed):
    rep = q_to_d_check(connective_system(seed, "q"), BUDGET, WINDOW)
    assert rep.status == "pass", rep.to_json()


def test_q_to_d_g_cases():
    q = connective_system(4, "q")
    tr = run(q, BUDGET, window=WINDOW)
    d, params = q_to_d(q, tr)
    final = tr.final.state()
    for w in range(params["v"]):
        st_ = final.stack(w)
        if not st_:
            assert d.f(w) == q.f(w)
        else:
            assert d.f(w) in (st_[-1], *tautology_chain(8))
    assert q.f(params["u"]) == neg(q.c_minus)


# ---------------------------------------------------- completions and f- = !


def test_counterexample_code():
    d = connective_system(0, "d")
    q = d_completion_to_q(d)
    assert q.c_minus == conj(13, 13) == 1823
    assert q.f_minus.rule == "neg"


@pytest.mark.parametrize("seed", range(3))
def test_d_completion_to_q_window(seed):
    rep = d_completion_to_q_check(connective_system(seed, "d"), BUDGET, WINDOW)
    assert rep.status == "pass", rep.to_json()
    assert rep.checks["no_revision"]


@pytest.mark.parametrize("seed", range(3))
def test_p_neg_equals_d(seed):
    rep = p_neg_equals_d_check(connective_system(seed, "p", "neg"), BUDGET, WINDOW)
    assert rep.status == "pass", rep.to_json()


def test_p_neg_requires_negation():
    with pytest.raises(ValueError):
        p_neg_equals_d_check(connective_system(0, "p", "chain"), BUDGET, WINDOW)


def test_bernardi_examples():
    assert bernardi_check([set(), {2}], 120, 4).status == "pass"
    rep = bernardi_check([], 120, 4)
    assert rep.status == "pass"
    assert all(row["in_A"] is False for row in rep.details["rows"])


# ---------------------------------------------------------- diagonalization


def test_diag_target_json():
    t = DiagTarget.from_json({"e": 0, "columns": [{"x": 13, "values": [[0, 1], [7, 0]]}]})
    assert t.value(13, 6) == 1 and t.value(13, 7) == 0 and t.value(5, 100) == 0
    assert t.settles_by() == 7
    assert DiagTarget.from_json(t.to_json()) == t


def test_omega_ce_family_bounds():
    assert all(t.pairs(x) == [(0, t.pairs(x)[0][1])] for t in omega_ce_family(1, 0) for x in range(20))
    for t in omega_ce_family(2, 3, seed=4):
        for x in range(40):
            assert len(t.pairs(x)) - 1 <= 3


def test_diag_constant_one():
    res = diagonalize([DiagTarget(0, {}, 1)], 400)
    kinds = [a["action"] for a in res.report["actions"]]
    assert kinds == ["a1", "a21"]
    con = res.construction
    y0, x0 = con.rhat[0][0], con.x[0]
    assert neg(conj(y0, x0)) in con.ax_set
    row = res.report["targets"][0]
    assert row["A_p"] is False and row["V_e"] == 1
    assert res.report["passed"], res.report["checks"]


def test_diag_constant_zero():
    res = diagonalize([DiagTarget(0, {}, 0)], 400)
    assert [a["action"] for a in res.report["actions"]] == ["a1"]
    row = res.report["targets"][0]
    assert row["A_p"] is True and row["V_e"] == 0
    assert res.report["passed"], res.report["checks"]


def test_diag_flip_one_to_zero():
    x0 = diagonalize([DiagTarget(0, {}, 0)], 40, strict=False).construction.x[0]
    res = diagonalize([DiagTarget(0, {x0: [(0, 1), (7, 0)]})], 400)
    kinds = [a["action"] for a in res.report["actions"]]
    assert kinds == ["a1", "a21", "a22"]
    con = res.construction
    y = con.rhat[0]
    assert len(y) == 2 and y[1] == con.fm_of(y[0])
    assert con.entry[y[1]] > 1  # appointed fresh after the first attack
    row = res.report["targets"][0]
    assert row["A_p"] is True and row["V_e"] == 0
    assert res.report["passed"], res.report["checks"]


def test_diag_empty_targets():
    res = diagonalize([], 300)
    assert res.report["passed"] and res.report["targets"] == []


def test_diag_late_target_exceeds_budget():
    late = DiagTarget(0, {5: [(0, 1), (900, 0)]})
    with pytest.raises(BudgetExceeded):
        diagonalize([late], 2000)


@pytest.mark.parametrize("seed", range(2))
def test_diag_small_family(seed):
    res = diagonalize(omega_ce_family(2, 2, seed=seed), 1000)
    assert res.report["passed"], res.report["checks"]
