import pytest
from hypothesis import given, strategies as st

from hknet import Atom, Multiset, SetValue, TupleValue, render_value

values = st.recursive(
    st.sampled_from("abcxyz").map(Atom),
    lambda inner: st.one_of(
        st.lists(inner, min_size=2, max_size=3).map(TupleValue),
        st.lists(inner, max_size=3).map(SetValue),
    ),
    max_leaves=6,
)


def test_atoms_compare_by_name():
    assert Atom("a") < Atom("b")
    assert Atom("a") == Atom("a")
    assert Atom("a") != Atom("b")


def test_sets_are_deduplicated_and_sorted():
    s = SetValue([Atom("b"), Atom("a"), Atom("b")])
    assert s.elements == (Atom("a"), Atom("b"))
    assert s == SetValue([Atom("a"), Atom("b"), Atom("a")])


def test_tuples_are_ordered_and_fixed():
    assert TupleValue([Atom("a"), Atom("b")]) != TupleValue([Atom("b"), Atom("a")])


@given(values, values)
def test_order_is_total_and_consistent(u, v):
    assert (u.key() < v.key()) or (v.key() < u.key()) or u == v
    if u == v:
        assert u.key() == v.key()
        assert hash(u) == hash(v)


@given(values, values, values)
def test_order_is_transitive(u, v, w):
    items = sorted([u, v, w], key=lambda x: x.key())
    assert items[0].key() <= items[1].key() <= items[2].key()


def test_render_nested():
    v = TupleValue([Atom("t1"), SetValue([Atom("rice"), Atom("meat")])])
    assert render_value(v) == "(t1, {meat, rice})"


@given(st.lists(values, max_size=6), st.lists(values, max_size=6))
def test_multiset_union_counts(xs, ys):
    total = Multiset(xs) + Multiset(ys)
    for v in xs + ys:
        assert total.count(v) == xs.count(v) + ys.count(v)
    assert total.total() == len(xs) + len(ys)


@given(st.lists(values, max_size=6), st.lists(values, max_size=4))
def test_multiset_difference_inverts_union(xs, ys):
    assert (Multiset(xs) + Multiset(ys)) - Multiset(ys) == Multiset(xs)


def test_multiset_subtraction_requires_containment():
    with pytest.raises(ValueError):
        Multiset([Atom("a")]) - Multiset([Atom("a"), Atom("a")])


def test_multiset_containment():
    big = Multiset([Atom("a"), Atom("a"), Atom("b")])
    assert Multiset([Atom("a"), Atom("b")]) <= big
    assert not big <= Multiset([Atom("a"), Atom("b")])


def test_multiset_keeps_equal_values_apart_by_count():
    two_rice = Multiset([Atom("rice"), Atom("rice")])
    assert two_rice.count(Atom("rice")) == 2
    assert list(two_rice) == [Atom("rice"), Atom("rice")]
