import pytest
from hypothesis import given, strategies as st

from dialectical.codec import (
    CONTRADICTION,
    And,
    Atom,
    Not,
    atom,
    atoms_of,
    conj,
    decode,
    disj,
    encode,
    fresh_atom,
    imp,
    neg,
    pair,
    parse,
    pretty,
    unpair,
)
from oracles import atoms_in

nat = st.integers(min_value=0, max_value=10**6)


def test_pair_examples():
    assert pair(0, 0) == 0
    assert pair(1, 2) == 8
    assert unpair(8) == (1, 2)


def test_decode_examples():
    assert decode(15) == Atom(3)
    assert decode(1) == Not(0)
    assert decode(0) == Atom(0)
    assert encode(And(0, 1)) == 13


def test_connective_examples():
    assert neg(0) == 1
    assert conj(0, 1) == 13 == CONTRADICTION
    assert neg(neg(0)) == 6


def test_fresh_atom_examples():
    assert fresh_atom([]) == 0
    assert fresh_atom({0, 1}) == 5
    # frozen from the subformula-walk oracle: atoms_in(13) == {0}
    assert atoms_in(13) == {0}
    assert fresh_atom({13}) == 5


def test_round_trip_below_1e5():
    for n in range(100_000):
        assert encode(decode(n)) == n


@given(nat, nat)
def test_pairing_bijective(a, b):
    assert unpair(pair(a, b)) == (a, b)


@given(nat)
def test_unpair_inverse(n):
    assert pair(*unpair(n)) == n


@given(nat, nat)
def test_connectives_do_not_collide(a, b):
    codes = {neg(a), imp(a, b), conj(a, b), disj(a, b)}
    assert len(codes) == 4
    assert {c % 5 for c in codes} == {1, 2, 3, 4}


@given(st.sets(st.integers(min_value=0, max_value=5000), max_size=8))
def test_fresh_atom_is_fresh(used):
    a = fresh_atom(used)
    seen = set()
    for u in used:
        atoms_in(u, seen)
    assert decode(a) == Atom(a // 5)
    assert a // 5 not in seen


@given(st.integers(min_value=0, max_value=20_000))
def test_atoms_of_matches_walk(n):
    assert set(atoms_of(n)) == atoms_in(n)


@pytest.mark.parametrize(
    "code,text",
    [(0, "p0"), (1, "!p0"), (13, "(p0 & !p0)"), (imp(5, 0), "(p1 -> p0)"), (disj(0, neg(0)), "(p0 | !p0)")],
)
def test_pretty(code, text):
    assert pretty(code) == text


@given(st.integers(min_value=0, max_value=50_000))
def test_parse_inverts_pretty(n):
    assert parse(pretty(n)) == n


def test_atom_helper():
    assert [atom(i) for i in range(4)] == [0, 5, 10, 15]
