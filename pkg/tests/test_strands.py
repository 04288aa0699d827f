import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strandlab.grammar import parse_signed
from strandlab.strands import (Bundle, BundleError, NodeRef, SignedTerm, Strand, bundle_from_json,
                               bundle_to_dot, bundle_to_json, is_strand_of, originates,
                               uniquely_originates, uniquely_originates_in)
from strandlab.terms import Text

from strategies import bundles

Na = Text("Na")
SI, SR = NodeRef(0, 0), NodeRef(1, 0)


def _strand(sid, lines, label=None):
    return Strand(sid, tuple(parse_signed(x) for x in lines), label)


def _fig1_strands():
    return [_strand(0, ["+ $A . $B . $Na", "- {$Na . $A}sk(A,B)"], "s_i"),
            _strand(1, ["- $A . $B . $Na", "+ {$Na . $A}sk(A,B)"], "s_r")]


def fig1():
    return Bundle(_fig1_strands(), None, [((0, 0), (1, 0)), ((1, 1), (0, 1))])


def test_node_term_examples():
    b = fig1()
    assert str(b.node_term((0, 0))) == "⊕ $A ⋅ $B ⋅ $Na"
    assert str(b.node_term((1, 1))) == "⊕ ⟨ $Na ⋅ $A ⟩_(SK A B)"
    assert str(b.node_term((0, 1))) == "⊖ ⟨ $Na ⋅ $A ⟩_(SK A B)"
    with pytest.raises(KeyError):
        b.node_term((2, 0))


def test_validation_errors():
    with pytest.raises(BundleError) as e:
        Bundle(_fig1_strands(), None, [((1, 1), (0, 1))])
    assert e.value.code == "dangling-negative"
    assert str(e.value) == "dangling negative node at (s_r,0)"
    extra = _strand(2, ["+ {$Na . $A}sk(A,B)"])
    with pytest.raises(BundleError) as e:
        Bundle(_fig1_strands() + [extra], None,
               [((0, 0), (1, 0)), ((1, 1), (0, 1)), ((2, 0), (0, 1))])
    assert e.value.code == "duplicate-incoming"
    with pytest.raises(BundleError) as e:
        Bundle(_fig1_strands(), None, [((0, 0), (1, 0)), ((0, 0), (0, 1))])
    assert e.value.code == "edge-mismatch"
    with pytest.raises(BundleError) as e:
        Bundle(_fig1_strands(), {0: 1, 1: 1}, [((0, 0), (1, 0)), ((1, 1), (0, 1))])
    assert e.value.code == "edge-outside"
    with pytest.raises(BundleError) as e:
        Bundle.from_nodes(_fig1_strands(), [(0, 0), (0, 1), (1, 1)])
    assert e.value.code == "non-prefix"


def test_cycle_rejected():
    s0 = _strand(0, ["- $A", "+ $B"])
    s1 = _strand(1, ["- $B", "+ $A"])
    with pytest.raises(BundleError) as e:
        Bundle([s0, s1], None, [((0, 1), (1, 0)), ((1, 1), (0, 0))])
    assert e.value.code == "cycle"


def test_precedes_examples():
    b = fig1()
    assert b.precedes((0, 0), (1, 1))
    assert b.precedes((0, 1), (0, 1))
    assert not b.precedes((0, 1), (1, 0))


def test_minimal_nodes_examples():
    b = fig1()
    reply = parse_signed("+ {$Na . $A}sk(A,B)").term
    assert b.minimal_nodes(lambda b, n: b.node_term(n).term == reply) == {NodeRef(1, 1)}
    assert b.minimal_nodes(lambda b, n: True) == {NodeRef(0, 0)}
    assert b.minimal_nodes(lambda b, n: False) == set()


def test_originates_examples():
    s_i = _fig1_strands()[0]
    assert originates(s_i, Na, 0)
    assert not originates(s_i, Na, 1)
    assert not originates(_fig1_strands()[1], Na, 0)
    with pytest.raises(IndexError):
        originates(s_i, Na, 2)


def test_uniquely_originates_examples(data_dir):
    assert uniquely_originates(fig1(), Na)
    assert not uniquely_originates(fig1(), Text("Nz"))
    fig2 = bundle_from_json(json.loads((data_dir / "fig2.bundle.json").read_text()))
    assert not uniquely_originates(fig2, Na)
    assert uniquely_originates_in(_fig1_strands(), Na)


def test_is_strand_of_examples():
    b = fig1()
    assert is_strand_of(_fig1_strands()[1], b)
    part = Bundle.from_nodes([_strand(0, ["+ $A", "- $B"])], [(0, 0)])
    assert not is_strand_of(_strand(0, ["+ $A", "- $B"]), part)
    assert not is_strand_of(_strand(7, ["+ $A"]), b)


def test_json_and_dot():
    b = fig1()
    assert bundle_from_json(bundle_to_json(b)) == b
    assert bundle_from_json(json.dumps(bundle_to_json(b))) == b
    dot = bundle_to_dot(b, "fig1")
    assert dot.startswith("digraph")
    assert "s_i" in dot and "s_r" in dot and "penwidth" in dot


# --- structural properties ---------------------------------------------

@settings(max_examples=1000)
@given(bundles())
def test_precedes_is_partial_order(b):
    nodes = list(b.nodes())
    for m in nodes:
        assert b.precedes(m, m)
    for m, n in itertools.permutations(nodes, 2):
        if b.precedes(m, n):
            assert not b.precedes(n, m)
            for k in nodes:
                if b.precedes(n, k):
                    assert b.precedes(m, k)


@settings(max_examples=1000)
@given(bundles(), st.data())
def test_minimal_nonempty_and_minimal(b, data):
    nodes = sorted(b.nodes())
    chosen = set(data.draw(st.lists(st.sampled_from(nodes), unique=True))) if nodes else set()
    mins = b.minimal_nodes(lambda _, n: n in chosen)
    assert bool(mins) == bool(chosen)
    for n in mins:
        assert n in chosen
        assert not any(m != n and b.precedes(m, n) for m in chosen)


@settings(max_examples=1000)
@given(bundles(), st.data())
def test_weak_positivity(b, data):
    nodes = sorted(b.nodes())
    chosen = set(data.draw(st.lists(st.sampled_from(nodes), unique=True))) if nodes else set()

    def covered(n):
        return any(m in chosen and m != n and b.precedes(m, n) and b.node_term(m).positive
                   for m in nodes)

    if all(b.node_term(n).positive or covered(n) for n in chosen):
        for n in b.minimal_nodes(lambda _, n: n in chosen):
            assert b.node_term(n).positive


@settings(max_examples=1000)
@given(bundles())
def test_negative_nodes_have_positive_source(b):
    for n in b.nodes():
        st_ = b.node_term(n)
        if st_.negative:
            src = b.incoming(n)
            assert src is not None and b.node_term(src) == SignedTerm(True, st_.term)
            assert b.precedes(src, n) and src != n


@settings(max_examples=1000)
@given(bundles())
def test_origination_unique_per_strand(b):
    atoms = {Text(a) for a in ("A", "B", "Na")}
    for s in b.strands.values():
        for t in atoms:
            assert sum(originates(s, t, i) for i in range(len(s))) <= 1


@settings(max_examples=300)
@given(bundles())
def test_json_round_trip(b):
    assert bundle_from_json(bundle_to_json(b)) == b
