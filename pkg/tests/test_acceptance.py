"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (with its runtime and limit) that the
conftest hook prints at the end of the run.
"""

import contextlib
import json
import time

import numpy as np
import pytest

from strandlab.cli import main
from strandlab.kmp import (ClosureKind, check_kmp_soundness_bounded, closure, kmp_config,
                           load_policy, secure_templates, secure_types)
from strandlab.kmp.sweep import codes_to_policy, item5_sweep, random_policy_codes
from strandlab.penetrator import (MaximalModel, classify_dy, enumerate_dy_strands,
                                  is_maximal_penetrator_strand, role_subsumed_by_maximal)
from strandlab.protocols import builtin_scenarios, get_scenario, make_role
from strandlab.search import check_composition
from strandlab.search.roles import ExcludePair
from strandlab.strands import NodeRef, bundle_from_json
from strandlab.terms import Cipher, subterms

from conftest import ACCEPTANCE, verdict


@contextlib.contextmanager
def criterion(n, title, limit):
    info = {}
    t0 = time.perf_counter()
    ok = False
    try:
        yield info
        ok = True
    finally:
        dt = time.perf_counter() - t0
        in_time = dt < limit
        status = "PASS" if ok and in_time else "FAIL"
        extra = f"; {info['detail']}" if "detail" in info else ""
        line = f"[{status}] C{n:<2} {title} ({dt:.2f}s, limit {limit:g}s{extra})"
        ACCEPTANCE[n] = (status == "PASS", line)
        print(line)
    assert in_time, line


def _honest(bundle):
    return sorted((s.name, tuple(str(x) for x in s.trace))
                  for s in bundle.strands.values() if ":" not in s.name)


def test_c01_two_strand_bundle(data_dir):
    with criterion(1, "shipped fig1 bundle: terms verbatim, minimal cipher node", 1) as info:
        b = bundle_from_json(json.loads((data_dir / "fig1.bundle.json").read_text()))
        si, sr = (next(s.id for s in b.strands.values() if s.name == n) for n in ("s_i", "s_r"))
        terms = {n: str(b.node_term(n)) for n in b.nodes()}
        assert terms == {
            NodeRef(si, 0): "⊕ $A ⋅ $B ⋅ $Na",
            NodeRef(si, 1): "⊖ ⟨ $Na ⋅ $A ⟩_(SK A B)",
            NodeRef(sr, 0): "⊖ $A ⋅ $B ⋅ $Na",
            NodeRef(sr, 1): "⊕ ⟨ $Na ⋅ $A ⟩_(SK A B)",
        }
        mins = b.minimal_nodes(lambda b, n: any(isinstance(u, Cipher)
                                                for u in subterms(b.node_term(n).term)))
        assert mins == {NodeRef(sr, 1)}
        info["detail"] = "minimal = {(s_r,1)}"


def test_c02_replay(capsys):
    with criterion(2, "replay without unique origination; none with it", 30) as info:
        code = main(["check", "simple-auth", "--no-unique-origination", "--property",
                     "injectivity"])
        out = json.loads(capsys.readouterr().out)["properties"]["injectivity"]
        assert code == 2
        strands = out["witness"]["strands"]
        labels = [s.get("label", "") for s in strands]
        inits = [s for s in strands if s.get("label", "").startswith("init")]
        assert len(inits) == 2
        assert inits[0]["trace"][0] == inits[1]["trace"][0]  # same A, B and Na
        assert sum(l.endswith(":tee") for l in labels) == 1
        assert sum(l.endswith(":flush") for l in labels) == 1
        sc = get_scenario("simple-auth")
        assert dict(sc.config.sessions) == {"init": 2, "resp": 2}
        assert sc.config.penetrator.synth_depth == 3
        v, _ = verdict("simple-auth", "injectivity")
        assert v.result == "no-attack"
        info["detail"] = f"2 init + tee + flush; {v.states_explored} states with uo"


def test_c03_reflection():
    with criterion(3, "reflection attack on the flawed variant only", 90) as info:
        times = {}
        v, times["flawed"] = verdict("simple-auth-flawed", "noninjective-agreement")
        assert v.attack
        b = v.bindings
        na = b["init0"]["Na"]
        assert (b["init0"]["A"], b["init0"]["B"]) == ("$A", "$B")
        assert (b["resp0"]["A"], b["resp0"]["B"], b["resp0"]["Na"]) == ("$B", "$A", na)
        for name in ("simple-auth", "simple-auth-withb"):
            w, times[name] = verdict(name, "noninjective-agreement")
            assert w.result == "no-attack"
            assert get_scenario(name).config == get_scenario("simple-auth-flawed").config
        assert max(times.values()) < 30
        info["detail"] = ", ".join(f"{k} {t:.1f}s" for k, t in times.items())


LOWE = [
    ("init0", ("⊕ ⟨ $n0 ⋅ $A ⟩_(PK E)", "⊖ ⟨ $n0 ⋅ $n1 ⟩_(PK A)", "⊕ ⟨ $n1 ⟩_(PK E)")),
    ("resp0", ("⊖ ⟨ $n0 ⋅ $A ⟩_(PK B)", "⊕ ⟨ $n0 ⋅ $n1 ⟩_(PK A)", "⊖ ⟨ $n1 ⟩_(PK B)")),
]

NSL_CHECKS = ("init-noninjective-agreement", "init-injective-agreement",
              "resp-noninjective-agreement", "resp-injective-agreement",
              "init-secrecy-na", "resp-secrecy-nb")


def test_c04_ns_vs_nsl():
    with criterion(4, "NS man-in-the-middle found; NSL agreement and secrecy hold", 300) as info:
        ns = get_scenario("ns-original")
        assert dict(ns.config.sessions) == {"init": 1, "resp": 1}
        assert ns.config.penetrator.synth_depth == 4
        v, _ = verdict("ns-original", "resp-secrecy-nb")
        assert v.attack
        assert _honest(v.witness) == LOWE
        for prop in NSL_CHECKS:
            w, _ = verdict("nsl", prop)
            assert w.result == "no-attack", prop
        assert get_scenario("nsl").config == ns.config
        info["detail"] = f"witness = oracle interleaving; {len(NSL_CHECKS)} NSL checks pass"


def test_c05_assumption_matrix():
    with criterion(5, "assumption matrices: baselines and named flips", 900) as info:
        flips = rows = 0
        bad = []
        for name, sc in builtin_scenarios().items():
            if name == "kmp-secure-templates":
                continue
            for row in sc.expected:
                v, _ = verdict(name, row.prop, (), row.sessions)
                rows += 1
                if v.result != row.verdict:
                    bad.append(f"{name}/{row.prop}")
                if row.verdict != "no-attack":
                    continue
                for a in row.assumptions:
                    w, _ = verdict(name, row.prop, (a,), row.sessions)
                    flips += 1
                    if not w.attack:
                        bad.append(f"{name}/{row.prop}-{a}")
        assert not bad, bad
        assert flips >= 12
        info["detail"] = f"{rows} rows, {flips} flips"


def test_c06_kmp_closures(data_dir):
    with criterion(6, "closure reach sets on secure templates", 1) as info:
        p = load_policy(data_dir / "secure-templates.pol")
        r = closure(p, ClosureKind.REFINED)
        assert r.reach == {"K1": {"K1", "K2"}, "K2": {"K2"}, "K3": {"K2", "K3"},
                           "D": {"K2", "D"}}
        assert secure_types(r) == {"K1", "K2", "K3"}
        o = closure(p, ClosureKind.ORIGINAL)
        assert all("D" in o.reach[k] for k in p.types)
        assert secure_types(o) == set()
        info["detail"] = "refined secure {K1,K2,K3}, original {}"


def test_c07_item5_sweep():
    with criterion(7, "item-5 redundancy sweep (<=4 types, <=6 edges, up to iso)", 300) as info:
        res = item5_sweep(4, 6)
        assert res.agree
        info["detail"] = (f"{res.policies} classes / {res.labelled} policies, reach differs on "
                          f"{res.reach_divergent}, implied relation on {res.implied_divergent} "
                          f"[{res.backend}]")


def test_c08_kmp_soundness():
    with criterion(8, "bounded KMP soundness, secure templates + random policies", 600) as info:
        p = secure_templates()
        cfg = kmp_config(p, sessions=1, creates=2, synth_depth=3, atomic=True)
        v = check_kmp_soundness_bounded(p, "refined", cfg)
        assert not v.attack
        rng = np.random.default_rng(2024)
        checked = 0
        for row in random_policy_codes(rng, 100, 4, 5):
            q = codes_to_policy(row, 4)
            qcfg = kmp_config(q, sessions=1, creates=2, synth_depth=3, atomic=True)
            for kind in ("refined", "original"):
                w = check_kmp_soundness_bounded(q, kind, qcfg)
                assert not w.attack, (q, kind, w.violation)
            checked += 1
        info["detail"] = (f"secure templates {v.states_explored} states; {checked} random "
                          "policies x 2 closures")


def test_c09_penetrator_relations():
    from test_penetrator import KP_AB, _dy_universe
    with criterion(9, "DY within maximal, strictness, role lemmas, composition", 60) as info:
        mx = MaximalModel("A", "B")
        n = 0
        for trace in enumerate_dy_strands(_dy_universe(), KP_AB):
            if classify_dy(trace, KP_AB) is not None:
                n += 1
                assert is_maximal_penetrator_strand(trace, mx)
        from strandlab.grammar import parse_signed
        open_ = tuple(parse_signed(x) for x in ("- {$M}sk(A,B)", "+ $M"))
        assert is_maximal_penetrator_strand(open_, mx) and classify_dy(open_, KP_AB) is None
        agents = ("A", "B", "E")
        ini = make_role("init", "A:agent B:agent Na:nonce",
                        ["+ $A . $B . $Na", "- {$Na . $B}sk(A,B)"], fresh=("Na",))
        res = make_role("resp", "A:agent B:agent Na:nonce",
                        ["- $A . $B . $Na", "+ {$Na . $B}sk(A,B)"])
        p2 = ExcludePair(("A", "B"), ("A", "B"))
        assert role_subsumed_by_maximal(ini, mx, agents)
        assert not role_subsumed_by_maximal(res, mx, agents)
        assert role_subsumed_by_maximal(res, mx, agents, admission=p2)
        comp = get_scenario("simple-auth-composed")
        sa_roles = tuple(r for r in comp.spec.roles if not r.name.endswith("_2"))
        wb_roles = tuple(r for r in comp.spec.roles if r.name.endswith("_2"))
        from strandlab.search import ProtocolSpec
        sa = ProtocolSpec("sa", sa_roles)
        wb = ProtocolSpec("wb", wb_roles, {r.name: comp.spec.admission_for(r.name)
                                           for r in wb_roles})
        assert check_composition(sa, wb, mx, agents).ok
        info["detail"] = f"{n} DY instances, 0 counterexamples"


def test_c10_structural_suites():
    import test_protected as tp
    import test_strands as ts
    import test_terms as tt
    suites = [ts.test_precedes_is_partial_order, ts.test_minimal_nonempty_and_minimal,
              ts.test_weak_positivity, ts.test_origination_unique_per_strand,
              tp.test_pair_anti_monotone, tp.test_weaker_than_subterm_condition,
              tt.test_unify_instantiate_round_trip]
    with criterion(10, "structural property suites (>=1000 cases each)", 120) as info:
        for fn in suites:
            assert fn.hypothesis.inner_test is not None
            assert fn._hypothesis_internal_use_settings.max_examples >= 1000
            fn()
        tp.test_separating_witness()
        info["detail"] = f"{len(suites)} randomized suites + separating witness"
