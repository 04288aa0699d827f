import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strandlab.grammar import parse_term
from strandlab.protected import (ProtectionSpec, first_unprotected, literal_protected, protected,
                                 simple_auth_protection, subterm_condition, unprotected_terms)
from strandlab.protocols import get_scenario
from strandlab.search import enumerate_executions, reconstruct_bundle
from strandlab.search.engine import Explorer
from strandlab.terms import Cipher, KeyLit, Pair, Text, Var, sk, subterm

from strategies import terms

A, B, Na = Text("A"), Text("B"), Text("Na")
SPEC = simple_auth_protection()
REPLY = Cipher(Pair(Na, A), sk("A", "B"))


def test_examples():
    assert protected(SPEC, REPLY)
    assert not protected(SPEC, Na)
    assert not protected(SPEC, Pair(Na, REPLY))
    assert protected(SPEC, Cipher(Pair(Na, A), sk("B", "A")))
    assert not protected(SPEC, Cipher(Pair(Na, B), sk("A", "B")))
    assert unprotected_terms(SPEC, [REPLY, Na, A]) == [Na]


def test_shape_validation():
    with pytest.raises(ValueError):
        ProtectionSpec(Na, ((sk("A", "B"), Pair(A, B)),))
    with pytest.raises(TypeError):
        ProtectionSpec(Na, ((A, Na),))


def test_shapes_with_variables():
    spec = ProtectionSpec(Na, ((sk("A", "B"), Pair(Na, Var("X"))),))
    assert protected(spec, Cipher(Pair(Na, B), sk("A", "B")))
    assert not protected(spec, Cipher(Na, sk("A", "B")))


def test_separating_witness():
    t = Pair(Na, REPLY)
    assert not protected(SPEC, t)
    assert not subterm_condition(Na, REPLY, t)


def _levels(base, keys, depth):
    cur = list(base)
    for _ in range(depth - 1):
        nxt = set(cur)
        nxt.update(Pair(g, h) for g in cur for h in cur)
        nxt.update(Cipher(g, k) for g in cur for k in keys)
        cur = sorted(nxt)
    return cur


def test_matches_literal_fixpoint_exhaustively():
    rich = _levels([A, B, Na, KeyLit(sk("A", "B"))], [sk("A", "B"), sk("A", "E")], 3)
    small = _levels([A, Na, KeyLit(sk("A", "B"))], [sk("A", "B")], 4)
    assert len(small) > 50000
    for t in itertools.chain(rich, small):
        assert protected(SPEC, t) == literal_protected("A", "B", Na, t), t


@settings(max_examples=1000)
@given(terms)
def test_matches_literal_fixpoint_random(t):
    assert protected(SPEC, t) == literal_protected("A", "B", Na, t)


@settings(max_examples=1000)
@given(terms, terms)
def test_pair_anti_monotone(g, h):
    if not protected(SPEC, g) or not protected(SPEC, h):
        assert not protected(SPEC, Pair(g, h))
    assert protected(SPEC, Pair(g, h)) == (protected(SPEC, g) and protected(SPEC, h))


@settings(max_examples=1000)
@given(terms)
def test_weaker_than_subterm_condition(t):
    if subterm_condition(Na, REPLY, t):
        assert not protected(SPEC, t)
    if not subterm(Na, t):
        assert protected(SPEC, t)


@settings(max_examples=1000)
@given(terms, terms)
def test_composite_secret(secret, t):
    spec = ProtectionSpec(secret)
    assert protected(spec, t) == (not subterm(secret, t))


def test_dual_b_first_unprotected_is_decrypting_responder():
    sc = get_scenario("simple-auth-dual-b")
    for sessions in ((("init", 1), ("resp", 1)), (("init", 1), ("resp", 2))):
        spec, cfg = sc.configure((), sessions)
        ex = Explorer(spec, cfg)
        checked = 0
        for e in enumerate_executions(spec, cfg):
            inits = [v for v in e.slots if v.role == "init" and v.pc
                     and v.env["A"] == A and v.env["B"] == B]
            if not inits:
                continue
            na = inits[0].env["Na"]
            spec_p = ProtectionSpec(na, ((sk("A", "B"), Pair(na, A)),))
            b = reconstruct_bundle(e, ex.model)
            mins = first_unprotected(b, spec_p)
            for n in mins:
                s = b.strands[n.strand]
                assert s.name.startswith("resp"), s
                assert b.node_term(n).positive and n.index == 1
                assert s.trace[0].term.right == Cipher(Pair(na, A), sk("A", "B"))
            checked += bool(mins)
        assert checked > 0
