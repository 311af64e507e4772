import json
from pathlib import Path

import pytest

from dialectical.logic import EntailmentOperator
from dialectical.operators import Approximation, TableOperator
from dialectical.systems import (
    ProposingFunction,
    RevisingFunction,
    SchemaError,
    ShiftedProposal,
    SystemSpec,
    consistency,
    spec_from_json,
    validate,
)

SPECS = Path(__file__).resolve().parent.parent / "specs"


def identity_spec(**kw):
    args = dict(kind="p", operator=EntailmentOperator(), f=ProposingFunction("identity"),
                f_minus=RevisingFunction("chain", offset=100), c=13)
    args.update(kw)
    return SystemSpec(**args)


def test_validate_identity_chain_is_valid():
    rep = validate(identity_spec(), 100)
    assert rep.status == "valid", rep.to_json()


def test_validate_injectivity_witness():
    f = ProposingFunction.from_table({0: 7, 1: 7})
    rep = validate(identity_spec(f=f), 50)
    assert rep.status == "invalid"
    (finding,) = [x for x in rep.findings if x.prop == "injectivity"]
    assert finding.witness == [0, 1]


def test_validate_acyclicity_orbit():
    fm = RevisingFunction.from_table({4: 4}, rule="shift")
    rep = validate(identity_spec(f_minus=fm), 50)
    (finding,) = [x for x in rep.findings if x.prop == "acyclicity"]
    assert finding.witness == [4, 4]


def test_validate_longer_cycle_through_table():
    fm = RevisingFunction.from_table({3: 9, 9: 3}, rule="neg")
    rep = validate(identity_spec(f_minus=fm), 50)
    (finding,) = [x for x in rep.findings if x.prop == "acyclicity"]
    assert finding.witness == [3, 9, 3]


def test_validate_counterexample_in_revising_range():
    fm = RevisingFunction("shift", 1)
    rep = validate(identity_spec(kind="q", f_minus=fm, c_minus=15), 50)
    assert any(x.prop == "counterexample" and x.witness == 14 for x in rep.findings)


def test_validate_nonempty_unknown_for_empty_table():
    spec = identity_spec(operator=TableOperator(Approximation()))
    rep = validate(spec, 20)
    assert rep.status == "unknown"
    assert [x.prop for x in rep.findings] == ["nonempty"]


def test_consistency_examples():
    assert str(consistency(identity_spec(), 40)) == "Consistent"
    table = TableOperator(Approximation.from_deltas([(14, [(13, [])])]))
    res = consistency(identity_spec(operator=table), 40)
    assert str(res) == "InconsistentAt(14)" and res.symbol == 13
    never = TableOperator(Approximation.from_deltas([(50, [(2, [])])]))
    assert str(consistency(identity_spec(operator=never), 5)) == "UnknownWithinBudget"


def test_consistency_q_watches_counterexample():
    table = TableOperator(Approximation.from_deltas([(3, [(15, [])])]))
    spec = identity_spec(kind="q", operator=table, c_minus=15)
    res = consistency(spec, 10)
    assert res.status == "inconsistent" and res.stage == 3 and res.symbol == 15


def test_proposing_rules():
    comp = ProposingFunction.from_table({0: 3, 2: 0})
    assert [comp(i) for i in range(6)] == [3, 1, 0, 2, 4, 5]
    assert ProposingFunction("atoms")(3) == 15
    shifted = ShiftedProposal(44, ProposingFunction("identity"))
    assert shifted(0) == 44 and shifted(5) == 4


def test_revising_rules():
    chain = RevisingFunction("chain")
    assert chain(3) == 14 and chain(14) == 2103 and chain(2103) == 44247123
    assert RevisingFunction("chain", offset=10)(4) == 10
    assert RevisingFunction("chain", offset=10)(12) == 13
    assert RevisingFunction("neg")(0) == 1
    assert RevisingFunction("shift", 3)(4) == 7
    with pytest.raises(ValueError):
        RevisingFunction("shift", 0)


@pytest.mark.parametrize("name", ["trivial_p", "table_p", "connective_d", "q_connective", "looping_p"])
def test_spec_json_round_trip(name):
    data = json.loads((SPECS / f"{name}.json").read_text())
    spec = spec_from_json(data)
    again = spec_from_json(json.loads(json.dumps(spec.to_json())))
    assert again.to_json() == spec.to_json()
    for i in range(12):
        assert again.f(i) == spec.f(i)


@pytest.mark.parametrize(
    "data,path",
    [
        ({"kind": "p", "operator": {"type": "entailment"}, "f": {"rule": "atoms"}, "c": 13}, "spec.f_minus"),
        ({"kind": "x", "operator": {"type": "entailment"}, "f": {}}, "spec.kind"),
        ({"kind": "d", "operator": {"type": "mystery"}, "f": {}}, "spec.operator.type"),
        ({"kind": "q", "operator": {"type": "entailment"}, "f": {}, "f_minus": {}}, "spec.c_minus"),
        ({"kind": "p", "operator": {"type": "entailment"}, "f": {}, "f_minus": {"rule": "shift", "k": 0}}, "spec.f_minus.k"),
        ({"kind": "d", "operator": {"type": "entailment"}, "f": {}, "f_minus": {}}, "spec.f_minus"),
    ],
)
def test_schema_errors_name_the_field(data, path):
    with pytest.raises(SchemaError) as info:
        spec_from_json(data)
    assert info.value.path == path
