import pytest

from strandlab.grammar import render_signed
from strandlab.protocols import (builtin_scenarios, get_scenario, nsl_initiator_secrecy_predicate,
                                 simple_auth_maximal_scenarios)
from strandlab.search import enumerate_executions, reconstruct_bundle
from strandlab.search.engine import Explorer
from strandlab.terms import Cipher, Pair, Text, pk

from conftest import verdict

A, B, Na, Nb = Text("A"), Text("B"), Text("Na"), Text("Nb")


def _trace(scenario, role):
    return [render_signed(x) for x in get_scenario(scenario).spec.role(role).trace]


def test_registry_names():
    assert set(builtin_scenarios()) >= {
        "simple-auth", "simple-auth-withb", "simple-auth-flawed", "simple-auth-untyped",
        "simple-auth-dual", "simple-auth-dual-b", "simple-auth-maximal", "simple-auth-composed",
        "nsl", "ns-original", "kmp-secure-templates"}
    with pytest.raises(KeyError):
        get_scenario("nope")


def test_traces():
    assert _trace("simple-auth", "init") == ["+ $A . $B . $Na", "- {$Na . $A}sk(A,B)"]
    assert _trace("simple-auth-dual", "init") == ["+ {$Na . $A}sk(A,B)", "- $Na"]
    assert _trace("simple-auth-dual-b", "init") == ["+ $B . {$Na . $A}sk(A,B)", "- $Na"]
    assert _trace("nsl", "resp") == ["- {$Na . $A}pk(B)", "+ {$Na . $Nb . $B}pk(A)",
                                     "- {$Nb}pk(B)"]
    assert _trace("ns-original", "resp")[1] == "+ {$Na . $Nb}pk(A)"


def test_assumption_bookkeeping():
    assert "b-neq-na" in get_scenario("simple-auth-dual-b").row("injective-agreement").assumptions
    assert get_scenario("nsl").row("resp-noninjective-agreement").assumptions == ("uoNb", "privA")
    for name in ("simple-auth-maximal", "simple-auth-composed"):
        sc = get_scenario(name)
        assert "kp" not in sc.row("noninjective-agreement").assumptions
        assert sc.row("injectivity").assumptions == ("uo",)


def test_composed_scenario_built_from_composition():
    roles = [r.name for r in simple_auth_maximal_scenarios()["simple-auth-composed"].spec.roles]
    assert roles == ["init", "resp", "init_2", "resp_2"]


def _rows():
    for name, sc in builtin_scenarios().items():
        if name == "kmp-secure-templates":
            continue
        for row in sc.expected:
            yield name, row


BASELINES = [pytest.param(n, r, id=f"{n}:{r.prop}") for n, r in _rows()]
FLIPS = [pytest.param(n, r, a, id=f"{n}:{r.prop}:without-{a}")
         for n, r in _rows() if r.verdict == "no-attack" for a in r.assumptions]


@pytest.mark.parametrize("name,row", BASELINES)
def test_expected_row(name, row):
    v, _ = verdict(name, row.prop, (), row.sessions)
    assert v.result == row.verdict


@pytest.mark.parametrize("name,row,assumption", FLIPS)
def test_assumption_flip(name, row, assumption):
    v, _ = verdict(name, row.prop, (assumption,), row.sessions)
    assert v.attack, f"dropping {assumption} left {name}/{row.prop} without attack"
    assert v.witness is not None


def test_flip_count():
    assert len(FLIPS) >= 12


# --- corrected initiator secrecy predicate ----------------------------------

def _two_disjunct(t, nb):
    from strandlab.terms import subterm
    return (not subterm(Na, t) or subterm(Cipher(Pair(Na, A), pk("B")), t)
            or subterm(Cipher(Pair(Na, Pair(nb, B)), pk("A")), t))


def test_secrecy_predicate_examples():
    pred = nsl_initiator_secrecy_predicate("A", "B", "Na")
    third = Cipher(Na, pk("B"))
    assert pred.holds_term(third) and not _two_disjunct(third, Nb)
    other = Cipher(Pair(Na, Pair(Text("Nb2"), B)), pk("A"))
    assert pred.holds_term(other) and not _two_disjunct(other, Nb)
    assert pred.holds_term(Pair(A, B))
    assert not pred.holds_term(Na)
    assert not pred.holds_term(Cipher(Pair(Na, A), pk("E")))


def test_secrecy_predicate_holds_on_nsl_runs():
    sc = get_scenario("nsl")
    spec, cfg = sc.configure()
    ex = Explorer(spec, cfg)
    runs = 0
    for e in enumerate_executions(spec, cfg):
        ini = [v for v in e.slots if v.role == "init" and v.pc and v.env["B"] == B
               and v.env["A"] == A]
        if not ini:
            continue
        pred = nsl_initiator_secrecy_predicate("A", "B", ini[0].env["Na"].name)
        b = reconstruct_bundle(e, ex.model)
        assert all(pred(b, n) for n in b.nodes())
        runs += 1
    assert runs > 50
