import pytest

from strandlab.penetrator import DYModel, KeySet, MaximalModel, classify_dy
from strandlab.protocols import get_scenario, make_role
from strandlab.search import (ProtocolSpec, SearchBudgetExceeded, SearchConfig, check_composition,
                              check_property, enumerate_executions, reconstruct_bundle)
from strandlab.search.engine import Explorer
from strandlab.search.roles import ExcludePair
from strandlab.strands import NodeRef, uniquely_originates
from strandlab.terms import Text

from conftest import verdict


def _sa(name="simple-auth", **sessions):
    sc = get_scenario(name)
    spec, cfg = sc.configure((), tuple(sessions.items()))
    return sc, spec, cfg


def _pen_kinds(bundle):
    return sorted(s.name.split(":")[1] for s in bundle.strands.values() if ":" in s.name)


def test_zero_sessions_only_empty_execution():
    _, spec, cfg = _sa(init=0, resp=0)
    execs = list(enumerate_executions(spec, cfg))
    assert len(execs) == 1 and execs[0].events == ()


def test_honest_run_reconstructs_without_penetrator():
    sc, spec, cfg = _sa(init=1, resp=1)
    ex = Explorer(spec, cfg)
    found = None
    for e in enumerate_executions(spec, cfg):
        if len(e.events) == 4 and {v.env["A"] for v in e.slots} == {Text("A")} and \
                all(v.env["B"] == Text("B") for v in e.slots) and \
                e.events[0].slot == 0 and e.events[1].slot == 1:
            b = reconstruct_bundle(e, ex.model)
            if len(b.strands) == 2:
                found = b
                break
    assert found is not None
    assert found.edges == {(NodeRef(0, 0), NodeRef(1, 0)), (NodeRef(1, 1), NodeRef(0, 1))}
    assert found.minimal_nodes(lambda b, n: True) == {NodeRef(0, 0)}


def test_separation_and_flushing():
    s = make_role("s", "A:agent B:agent", ["+ $A . $B"])
    r = make_role("r", "A:agent", ["- $A"])
    spec = ProtocolSpec("split", (s, r))
    cfg = SearchConfig((("s", 1), ("r", 1)), ("A", "B"),
                       DYModel(KeySet("only", frozenset()), frozenset(), 1))
    ex = Explorer(spec, cfg)
    for e in enumerate_executions(spec, cfg):
        if len(e.events) == 2 and e.events[0].slot == 0 and \
                e.slots[1].env["A"] == e.slots[0].env["A"] != e.slots[0].env["B"]:
            b = reconstruct_bundle(e, ex.model)
            assert _pen_kinds(b) == ["flush", "separate"]
            return
    pytest.fail("no split execution")


def test_reflection_attack_small_universe():
    sc, spec, cfg = _sa("simple-auth-flawed", init=1, resp=1)
    cfg = cfg.replace(agents=("A", "B"))
    v = check_property(spec, sc.property("noninjective-agreement"), cfg)
    assert v.attack
    assert v.bindings["resp0"] == {"A": "$B", "B": "$A", "Na": v.bindings["init0"]["Na"]}


def test_witness_invariants():
    for name, prop, dis in [("simple-auth-flawed", "noninjective-agreement", ()),
                            ("simple-auth", "injectivity", ("uo",)),
                            ("ns-original", "resp-secrecy-nb", ())]:
        v, _ = verdict(name, prop, dis)
        assert v.attack
        b = v.witness
        model = get_scenario(name).config.penetrator_model()
        honest = [s for s in b.strands.values() if ":" not in s.name]
        assert honest
        for s in b.strands.values():
            if ":" in s.name:
                assert classify_dy(s, model) is not None, s
        if not dis:
            # unique origination on: every fresh value has one origin
            fresh = {Text(val.strip("$")) for env in v.bindings.values()
                     for val in env.values() if val.startswith("$n")}
            assert fresh
            for t in fresh:
                assert uniquely_originates(b, t)


def test_determinism():
    sc, spec, cfg = _sa("simple-auth-flawed")
    a = check_property(spec, sc.property("noninjective-agreement"), cfg)
    b = check_property(spec, sc.property("noninjective-agreement"), cfg)
    assert a.to_json() == b.to_json()


def test_monotone_in_bounds():
    sc, spec, cfg = _sa("simple-auth-flawed", init=1, resp=1)
    small = check_property(spec, sc.property("noninjective-agreement"), cfg)
    big = check_property(spec, sc.property("noninjective-agreement"),
                         cfg.with_sessions(init=2, resp=2))
    assert small.attack and big.attack


def test_parallel_matches_sequential():
    sc, spec, cfg = _sa("simple-auth-flawed")
    seq = check_property(spec, sc.property("noninjective-agreement"), cfg)
    par = check_property(spec, sc.property("noninjective-agreement"), cfg.replace(workers=2))
    assert par.result == seq.result
    assert par.witness == seq.witness


def test_atomic_mode_same_verdicts():
    for name, prop in [("simple-auth-flawed", "noninjective-agreement"),
                       ("simple-auth", "noninjective-agreement")]:
        sc, spec, cfg = _sa(name, init=1, resp=1)
        a = check_property(spec, sc.property(prop), cfg)
        b = check_property(spec, sc.property(prop), cfg.replace(atomic=True))
        assert a.result == b.result


def test_budget_is_explicit():
    sc, spec, cfg = _sa("simple-auth")
    with pytest.raises(SearchBudgetExceeded) as e:
        check_property(spec, sc.property("injectivity"), cfg.replace(max_states=50))
    assert e.value.states_explored >= 50


def test_budget_env(monkeypatch):
    from strandlab.search.engine import default_budget
    monkeypatch.setenv("STRANDLAB_BUDGET_STATES", "123")
    assert default_budget() == 123
    assert get_scenario("simple-auth").config.budget() == 123


def _sa_spec(name, reply, adm=None):
    init = make_role("init", "A:agent B:agent Na:nonce", ["+ $A . $B . $Na", f"- {reply}"],
                     fresh=("Na",))
    resp = make_role("resp", "A:agent B:agent Na:nonce", ["- $A . $B . $Na", f"+ {reply}"])
    return ProtocolSpec(name, (init, resp), adm or {})


def test_composition():
    p2 = ExcludePair(("A", "B"), ("A", "B"))
    sa = _sa_spec("sa", "{$Na . $A}sk(A,B)")
    wb = _sa_spec("wb", "{$Na . $B}sk(A,B)", {"init": p2, "resp": p2})
    agents = ("A", "B", "E")
    res = check_composition(sa, wb, MaximalModel("A", "B"), agents)
    assert res.ok and [r.name for r in res.combined.roles] == ["init", "resp", "init_2", "resp_2"]
    bad = check_composition(sa, _sa_spec("wb", "{$Na . $B}sk(A,B)"), MaximalModel("A", "B"), agents)
    assert not bad.ok and bad.role == "resp" and bad.counterexample["A"] == "A"
    sa_p2 = _sa_spec("sa", "{$Na . $A}sk(A,B)", {"init": p2, "resp": p2})
    swapped = check_composition(_sa_spec("wb", "{$Na . $B}sk(A,B)"), sa_p2,
                                MaximalModel("A", "B"), agents)
    assert swapped.ok
