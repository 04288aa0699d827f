import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from strandlab.grammar import parse_signed, parse_term
from strandlab.penetrator import (DYModel, DYStrandKind, KeySet, Knowledge, MaximalModel, all_except,
                                  analz, analz_synth_close, classify_dy, derivable,
                                  enumerate_dy_strands, is_maximal_penetrator_strand,
                                  no_forge_cipher, role_subsumed_by_maximal)
from strandlab.protocols import make_role
from strandlab.search.roles import ExcludePair
from strandlab.strands import Strand
from strandlab.terms import Cipher, KeyLit, Pair, Text, depth, inverse, pk, pvk, sk

from strategies import terms

SKAB = sk("A", "B")
KP_AB = DYModel(all_except({SKAB}, [sk("A", "A"), sk("B", "B"), sk("A", "E")]),
                frozenset({"A", "B"}), 3)
MAX = MaximalModel("A", "B")


def tr(*lines):
    return tuple(parse_signed(x) for x in lines)


def test_classify_examples():
    enc = tr("- #sk(A,B)", "- $Na . $A", "+ {$Na . $A}sk(A,B)")
    assert classify_dy(enc, KP_AB) is DYStrandKind.Encryption
    assert classify_dy(tr("- $Na", "+ $Na", "+ $Na"), KP_AB) is DYStrandKind.Tee
    assert classify_dy(tr("+ #sk(A,B)"), KP_AB) is None
    assert classify_dy(tr("+ #sk(A,E)"), KP_AB) is DYStrandKind.KeyEmit


def test_classify_all_eight_forms():
    m = DYModel(KeySet("only", frozenset({pk("A"), pvk("A")})), frozenset(), 2)
    cases = {
        DYStrandKind.TextMsg: tr("+ $A"),
        DYStrandKind.Flushing: tr("- $A . $B"),
        DYStrandKind.Tee: tr("- $A . $B", "+ $A . $B", "+ $A . $B"),
        DYStrandKind.Concatenation: tr("- $A", "- $B", "+ $A . $B"),
        DYStrandKind.Separation: tr("- $A . $B", "+ $A", "+ $B"),
        DYStrandKind.KeyEmit: tr("+ #pk(A)"),
        DYStrandKind.Encryption: tr("- #pk(A)", "- $B", "+ {$B}pk(A)"),
        DYStrandKind.Decryption: tr("- #pk-1(A)", "- {$B}pk(A)", "+ $B"),
    }
    for kind, trace in cases.items():
        assert classify_dy(trace, m) is kind
    assert len(DYStrandKind) == 8
    assert classify_dy(tr("- #pk(A)", "- {$B}pk(A)", "+ $B"), m) is None
    assert classify_dy(tr("+ $A . $B"), m) is None


def test_analysis_examples():
    m = DYModel(KeySet("only", frozenset()), frozenset(), 2)
    c = Cipher(Text("M"), pk("A"))
    assert derivable([c, KeyLit(pvk("A"))], Text("M"), m)
    assert not derivable([c], Text("M"), m)
    assert derivable([Text("G"), Text("H")], Pair(Text("G"), Text("H")), m)
    assert not derivable([Text("G")], Pair(Text("G"), Pair(Text("G"), Text("G"))), m)


def test_key_analysed_later_unblocks_cipher():
    m = DYModel(KeySet("only", frozenset()), frozenset(), 2)
    facts = analz([Cipher(Text("M"), sk("A", "B")), Pair(Text("X"), KeyLit(sk("A", "B")))], m)
    assert Text("M") in facts


def test_explicit_closure_agrees_with_derivable():
    m = DYModel(KeySet("only", frozenset({sk("A", "B")})), frozenset({"A"}), 2)
    k0 = [Pair(Text("Na"), Cipher(Text("Nb"), sk("A", "E")))]
    close = analz_synth_close(k0, m)
    kn = Knowledge(k0, m)
    assert all(kn.derivable(t) for t in close)
    assert Cipher(Text("Na"), sk("A", "B")) in close
    assert Text("Nb") not in close


def test_maximal_examples():
    assert no_forge_cipher(Strand(0, tr("- #sk(A,B)", "- $M", "+ {$M}sk(A,B)")), SKAB)
    assert not no_forge_cipher(Strand(0, tr("+ {$P}sk(A,B)")), SKAB)
    open_ = tr("- {$M}sk(A,B)", "+ $M")
    assert no_forge_cipher(Strand(0, open_), SKAB)
    assert is_maximal_penetrator_strand(open_, MAX)
    assert classify_dy(open_, KP_AB) is None
    assert not is_maximal_penetrator_strand(tr("+ #sk(A,B)"), MAX)


def _dy_universe():
    base = [Text("A"), Text("Na"), KeyLit(SKAB), KeyLit(sk("A", "E"))]
    keys = [SKAB, sk("A", "E")]
    level = list(base)
    level += [Pair(a, b) for a in base for b in base]
    level += [Cipher(a, k) for a in base for k in keys]
    return level


def test_dy_subsumed_by_maximal_exhaustive():
    universe = _dy_universe()
    accepted = 0
    for trace in enumerate_dy_strands(universe, KP_AB):
        if classify_dy(trace, KP_AB) is None:
            continue
        assert max(depth(x.term) for x in trace) <= 3
        accepted += 1
        assert is_maximal_penetrator_strand(trace, MAX), trace
    assert accepted > 1000


def _sa_roles(reply):
    init = make_role("init", "A:agent B:agent Na:nonce", ["+ $A . $B . $Na", f"- {reply}"],
                     fresh=("Na",))
    resp = make_role("resp", "A:agent B:agent Na:nonce", ["- $A . $B . $Na", f"+ {reply}"])
    return init, resp


def test_role_subsumption():
    agents = ("A", "B", "E")
    init, resp = _sa_roles("{$Na . $B}sk(A,B)")
    assert role_subsumed_by_maximal(init, MAX, agents)
    res = role_subsumed_by_maximal(resp, MAX, agents)
    assert not res and res.counterexample == {"A": "A", "B": "B", "Na": "Na"}
    p2 = ExcludePair(("A", "B"), ("A", "B"))
    res = role_subsumed_by_maximal(resp, MAX, agents, admission=p2)
    assert res and res.checked == 9 - 2


@settings(max_examples=1000)
@given(st.lists(terms, max_size=4), st.lists(terms, max_size=3))
def test_analysis_monotone_idempotent(k0, extra):
    m = DYModel(KeySet("only", frozenset({pk("A"), sk("A", "B")})), frozenset(), 2)
    a = analz(k0, m)
    assert analz(a, m) == a
    assert a <= analz(list(k0) + list(extra), m)
    assert analz(k0, m.replace(synth_depth=5)) == a
    kn, kn2 = Knowledge(k0, m), Knowledge(list(k0) + list(extra), m)
    for t in list(a)[:10] + list(extra):
        if kn.derivable(t):
            assert kn2.derivable(t)


@settings(max_examples=1000)
@given(terms)
def test_decryption_needs_inverse(t):
    m = DYModel(KeySet("only", frozenset()), frozenset(), 1)
    for k in (pk("A"), sk("A", "B")):
        facts = analz([Cipher(t, k)], m)
        assert (t in facts) == (KeyLit(inverse(k)) in facts)
