"""Built-in protocol scenarios and their assumption matrices.

Every scenario carries named assumptions.  An assumption is a config
toggle: turning it off weakens the setting (a nonce is no longer fresh, a
key becomes known to the penetrator, ...).  ``expected`` rows list, per
property, which assumptions the guarantee needs; with all of them on the
property holds at the default bounds, and dropping any one of them yields
an attack.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

from .grammar import parse_signed, parse_term
from .penetrator import DYModel, KeySet, MaximalModel, all_except
from .search import (ExcludePair, ForbidSubterm, InjectiveAgreement, Injectivity,
                     NonInjectiveAgreement, ParamFilter, ProtocolSpec, RoleTemplate,
                     SearchConfig, Secrecy)
from .search.check import check_composition
from .terms import AGENT, KEY, NONCE, TERM, Key, KeyLit, Text, Var, pk, pvk, sk

__all__ = ["Toggle", "ExpectedRow", "NamedScenario", "make_role", "simple_auth_family",
           "simple_auth_maximal_scenarios", "nsl_scenarios", "builtin_scenarios",
           "kmp_scenarios", "get_scenario", "SCENARIO_NAMES", "nsl_initiator_secrecy_predicate"]

_KINDS = {"agent": AGENT, "nonce": NONCE, "term": TERM, "key": KEY}


def make_role(name: str, params: str, lines, fresh=(), side=()) -> RoleTemplate:
    """Role from text: ``params`` like ``"A:agent B:agent Na:nonce"``,
    ``lines`` signed terms, ``side`` pairs ``(param, pattern text)``."""
    pv = []
    for item in params.split():
        pname, _, kind = item.partition(":")
        pv.append(Var(pname, _KINDS[kind or "nonce"]))
    env = {v.name: v for v in pv}
    trace = tuple(parse_signed(line, env) for line in lines)
    conds = tuple(ForbidSubterm(p, parse_term(pat, env)) for p, pat in side)
    return RoleTemplate(name, tuple(pv), trace, frozenset(fresh), conds)


@dataclass(frozen=True)
class Toggle:
    """How to drop one assumption.

    kinds: ``unique-origination`` (every fresh param reuses the nonce
    universe), ``fresh`` (args: param names), ``alias`` (args: role, param,
    other), ``key`` (args: keys added to K_P), ``unrestricted`` (the
    maximal penetrator also forges the protected key's ciphertexts),
    ``admission`` (args: role whose admission predicate is dropped).
    Toggles may combine several effects through ``also``.
    """

    name: str
    kind: str
    args: tuple = ()
    description: str = ""
    also: tuple = ()

    def apply(self, spec: ProtocolSpec, cfg: SearchConfig):
        if self.kind == "unique-origination":
            cfg = cfg.replace(unique_origination=False)
        elif self.kind == "fresh":
            cfg = cfg.replace(relaxed=cfg.relaxed | set(self.args))
        elif self.kind == "alias":
            cfg = cfg.replace(nonce_aliases=cfg.nonce_aliases + (tuple(self.args),))
        elif self.kind == "key":
            ks = cfg.penetrator.known_keys
            for k in self.args:
                ks = ks.with_key(k)
            cfg = cfg.replace(penetrator=cfg.penetrator.replace(known_keys=ks))
        elif self.kind == "unrestricted":
            ks = cfg.penetrator.known_keys
            for k in self.args:
                ks = ks.with_key(k)
            cfg = cfg.replace(penetrator=cfg.penetrator.replace(known_keys=ks))
        elif self.kind == "admission":
            for role in self.args:
                spec = spec.with_admission(role, None)
        else:
            raise ValueError(f"unknown toggle kind {self.kind!r}")
        for sub in self.also:
            spec, cfg = sub.apply(spec, cfg)
        return spec, cfg


@dataclass(frozen=True)
class ExpectedRow:
    prop: str
    assumptions: tuple = ()
    verdict: str = "no-attack"
    sessions: tuple = ()  # ((role, n), ...) overriding the default bounds


@dataclass(frozen=True)
class NamedScenario:
    name: str
    spec: ProtocolSpec
    config: SearchConfig
    properties: tuple  # ((name, property), ...)
    expected: tuple = ()
    toggles: tuple = ()
    description: str = ""

    def property(self, name: str):
        for n, p in self.properties:
            if n == name:
                return p
        raise KeyError(f"scenario {self.name} has no property {name!r}; "
                       f"known: {', '.join(n for n, _ in self.properties)}")

    def toggle(self, name: str) -> Toggle:
        for t in self.toggles:
            if t.name == name:
                return t
        raise KeyError(f"scenario {self.name} has no assumption {name!r}")

    def configure(self, disabled=(), sessions=()):
        """(spec, config) with the named assumptions dropped."""
        spec, cfg = self.spec, self.config
        if sessions:
            cfg = cfg.with_sessions(**dict(sessions))
        for name in disabled:
            spec, cfg = self.toggle(name).apply(spec, cfg)
        return spec, cfg

    def row(self, prop: str) -> ExpectedRow:
        for r in self.expected:
            if r.prop == prop:
                return r
        raise KeyError(prop)


# --- simple authentication family ----------------------------------------

AB = ParamFilter.of(A=("A",), B=("B",))
_SA_AGENTS = ("A", "B")


def _sa_penetrator(synth=3) -> DYModel:
    emit = [sk(a, b) for i, a in enumerate(_SA_AGENTS) for b in _SA_AGENTS[i:]]
    return DYModel(all_except({sk("A", "B")}, emit), frozenset(_SA_AGENTS), synth)


def _sa_config(**kw) -> SearchConfig:
    args = dict(sessions=(("init", 2), ("resp", 2)), agents=_SA_AGENTS,
                penetrator=_sa_penetrator(), nonces=(Text("N0"),))
    args.update(kw)
    return SearchConfig(**args)


def _sa_properties(partner_height=None):
    agree = ("A", "B", "Na")
    return (
        ("noninjective-agreement", NonInjectiveAgreement("init", "resp", agree, AB.allowed,
                                                         None, partner_height)),
        ("injectivity", Injectivity("init", "Na", AB.allowed)),
        ("injective-agreement", InjectiveAgreement("init", "resp", agree, AB.allowed,
                                                   None, partner_height)),
    )


UO = Toggle("uo", "unique-origination", (), "uniquely_originates Na")
KP = Toggle("kp", "key", (sk("A", "B"),), "SK A B unknown to the penetrator")
MAX = Toggle("max", "unrestricted", (sk("A", "B"),),
             "penetrator strands are maximal (no forging under SK A B)")
B_NEQ_NA = Toggle("b-neq-na", "alias", ("init", "Na", "B"), "B <> Na")

def _sa_rows(noninj, inj, injag):
    return (ExpectedRow("noninjective-agreement", noninj),
            ExpectedRow("injectivity", inj),
            ExpectedRow("injective-agreement", injag))


def _sa_roles(reply: str, typed=True, side=()):
    kind = "nonce"
    init = make_role("init", f"A:agent B:agent Na:{kind}",
                     ["+ $A . $B . $Na", f"- {reply}"], fresh=("Na",), side=side)
    resp = make_role("resp", f"A:agent B:agent Na:{kind}",
                     ["- $A . $B . $Na", f"+ {reply}"], side=side)
    return init, resp


def simple_auth_family() -> dict[str, NamedScenario]:
    out = {}
    variants = [
        ("simple-auth", "{$Na . $A}sk(A,B)", "responder encrypts the challenge with A"),
        ("simple-auth-withb", "{$Na . $B}sk(A,B)", "responder encrypts the challenge with B"),
        ("simple-auth-flawed", "{$Na}sk(A,B)", "no identity in the ciphertext (reflection)"),
    ]
    for name, reply, desc in variants:
        init, resp = _sa_roles(reply)
        spec = ProtocolSpec(name, (init, resp))
        expected = _sa_rows(("kp",), ("uo",), ("uo", "kp"))
        if name == "simple-auth-flawed":
            expected = (ExpectedRow("noninjective-agreement", ("kp",), "attack"),)
        out[name] = NamedScenario(name, spec, _sa_config(), _sa_properties(), expected,
                                  (UO, KP), desc)

    side = (("Na", "#sk(?U,?V)"), ("Na", "{?N . ?U}sk(?U,?V)"))
    init, resp = _sa_roles("{$Na . $A}sk(A,B)", side=side)
    spec = ProtocolSpec("simple-auth-untyped", (init, resp))
    nonces = (Text("N0"), parse_term("$N0 . $A"), parse_term("{$N0 . $A}sk(A,B)"),
              parse_term("#sk(A,B)"))
    out["simple-auth-untyped"] = NamedScenario(
        "simple-auth-untyped", spec, _sa_config(typed=False, nonces=nonces), _sa_properties(),
        _sa_rows(("kp",), ("uo",), ("uo", "kp")), (UO, KP),
        "nonce is an arbitrary term, restricted by subterm side conditions")

    dual_i = make_role("init", "A:agent B:agent Na:nonce",
                       ["+ {$Na . $A}sk(A,B)", "- $Na"], fresh=("Na",))
    dual_r = make_role("resp", "A:agent B:agent Na:nonce",
                       ["- {$Na . $A}sk(A,B)", "+ $Na"])
    out["simple-auth-dual"] = NamedScenario(
        "simple-auth-dual", ProtocolSpec("simple-auth-dual", (dual_i, dual_r)), _sa_config(),
        _sa_properties(), _sa_rows(("uo", "kp"), ("uo",), ("uo", "kp")), (UO, KP),
        "initiator sends the encrypted challenge, responder answers in clear")

    db_i = make_role("init", "A:agent B:agent Na:nonce",
                     ["+ $B . {$Na . $A}sk(A,B)", "- $Na"], fresh=("Na",))
    db_r = make_role("resp", "A:agent B:agent Na:nonce",
                     ["- $B . {$Na . $A}sk(A,B)", "+ $Na"])
    out["simple-auth-dual-b"] = NamedScenario(
        "simple-auth-dual-b", ProtocolSpec("simple-auth-dual-b", (db_i, db_r)), _sa_config(),
        _sa_properties(), _sa_rows(("uo", "kp"), ("uo",), ("uo", "kp", "b-neq-na")),
        (UO, KP, B_NEQ_NA), "dual protocol with B in clear next to the challenge")
    return out


def _maximal_config(**kw) -> SearchConfig:
    emit = [sk(a, b) for i, a in enumerate(_SA_AGENTS) for b in _SA_AGENTS[i:]]
    pen = MaximalModel("A", "B").as_dy(_SA_AGENTS, 3, emit)
    return _sa_config(penetrator=pen, **kw)


def simple_auth_maximal_scenarios() -> dict[str, NamedScenario]:
    out = {}
    for name, reply in (("simple-auth-maximal", "{$Na . $A}sk(A,B)"),
                        ("simple-auth-withb-maximal", "{$Na . $B}sk(A,B)")):
        init, resp = _sa_roles(reply)
        out[name] = NamedScenario(
            name, ProtocolSpec(name, (init, resp)), _maximal_config(), _sa_properties(),
            _sa_rows(("max",), ("uo",), ("uo", "max")), (UO, MAX),
            "checked against the maximal penetrator for SK A B")
    sa = ProtocolSpec("simple-auth", _sa_roles("{$Na . $A}sk(A,B)"))
    wb = ProtocolSpec("simple-auth-withb", _sa_roles("{$Na . $B}sk(A,B)"),
                      {"init": ExcludePair(("A", "B"), ("A", "B")),
                       "resp": ExcludePair(("A", "B"), ("A", "B"))})
    comp = check_composition(sa, wb, MaximalModel("A", "B"), _SA_AGENTS, ("Na",))
    assert comp.ok, comp
    spec = replace(comp.combined, name="simple-auth-composed")
    cfg = _maximal_config(sessions=(("init", 2), ("resp", 1), ("init_2", 0), ("resp_2", 1)))
    p2 = Toggle("p2", "admission", ("init_2", "resp_2"),
                "second protocol runs only between other agent pairs")
    out["simple-auth-composed"] = NamedScenario(
        "simple-auth-composed", spec, cfg, _sa_properties(),
        _sa_rows(("max",), ("uo",), ("uo", "max")), (UO, MAX, p2),
        "simple-auth composed with simple-auth-withb restricted by p2")
    return out


# --- Needham-Schroeder(-Lowe) ---------------------------------------------

_NS_AGENTS = ("A", "B", "E")


def _nsl_roles(msg2: str):
    init = make_role("init", "A:agent B:agent Na:nonce Nb:nonce",
                     ["+ {$Na . $A}pk(B)", f"- {msg2}", "+ {$Nb}pk(B)"], fresh=("Na",))
    resp = make_role("resp", "A:agent B:agent Na:nonce Nb:nonce",
                     ["- {$Na . $A}pk(B)", f"+ {msg2}", "- {$Nb}pk(B)"], fresh=("Nb",))
    return init, resp


def _ns_config(**kw) -> SearchConfig:
    kp = KeySet("only", frozenset({pk("A"), pk("B"), pk("E"), pvk("E")}))
    args = dict(sessions=(("init", 1), ("resp", 1)), agents=_NS_AGENTS,
                penetrator=DYModel(kp, frozenset(_NS_AGENTS), 4), nonces=(Text("N0"),))
    args.update(kw)
    return SearchConfig(**args)


def _ns_properties():
    agree = ("A", "B", "Na", "Nb")
    f = AB.allowed
    return (
        ("init-noninjective-agreement", NonInjectiveAgreement("init", "resp", agree, f, None, 2)),
        ("init-injective-agreement-orig",
         InjectiveAgreement("init", "resp", agree, f, None, 2, orig=True)),
        ("init-injectivity", Injectivity("init", "Na", f)),
        ("init-injective-agreement", InjectiveAgreement("init", "resp", agree, f, None, 2)),
        ("resp-noninjective-agreement", NonInjectiveAgreement("resp", "init", agree, f)),
        ("resp-injective-agreement-orig",
         InjectiveAgreement("resp", "init", agree, f, orig=True)),
        ("resp-injectivity", Injectivity("resp", "Nb", f)),
        ("resp-injective-agreement", InjectiveAgreement("resp", "init", agree, f)),
        ("init-secrecy-na", Secrecy("init", Var("Na", NONCE), f)),
        ("resp-secrecy-nb", Secrecy("resp", Var("Nb", NONCE), f)),
    )


UO_NA = Toggle("uoNa", "fresh", ("Na",), "uniquely_originates Na")
UO_NB = Toggle("uoNb", "fresh", ("Nb",), "uniquely_originates Nb and Na <> Nb",
               also=(Toggle("na-neq-nb", "alias", ("resp", "Nb", "Na")),))
PRIV_A = Toggle("privA", "key", (pvk("A"),), "inv (PK A) unknown to the penetrator")
PRIV_B = Toggle("privB", "key", (pvk("B"),), "inv (PK B) unknown to the penetrator")

_TABLE2 = (
    ExpectedRow("init-noninjective-agreement", ("uoNa", "privA", "privB")),
    ExpectedRow("init-injective-agreement-orig", ("uoNa", "uoNb", "privA", "privB"),
                sessions=(("init", 1), ("resp", 2))),
    ExpectedRow("init-injectivity", ("uoNa",), sessions=(("init", 2), ("resp", 0))),
    ExpectedRow("init-injective-agreement", ("uoNa", "privA", "privB")),
    ExpectedRow("resp-noninjective-agreement", ("uoNb", "privA")),
    ExpectedRow("resp-injective-agreement-orig", ("uoNa", "uoNb", "privA"),
                sessions=(("init", 2), ("resp", 1))),
    ExpectedRow("resp-injectivity", ("uoNb",), sessions=(("init", 0), ("resp", 2))),
    ExpectedRow("resp-injective-agreement", ("uoNb", "privA")),
    ExpectedRow("init-secrecy-na", ("uoNa", "privA", "privB")),
    ExpectedRow("resp-secrecy-nb", ("uoNb", "privA", "privB")),
)


def nsl_scenarios() -> dict[str, NamedScenario]:
    toggles = (UO_NA, UO_NB, PRIV_A, PRIV_B)
    # Honest roles are run by honest agents only; the penetrator holds E's
    # keys and plays E's part itself.
    owners = {"init": ParamFilter.of(A=("A", "B")), "resp": ParamFilter.of(B=("A", "B"))}
    nsl = NamedScenario("nsl", ProtocolSpec("nsl", _nsl_roles("{$Na . $Nb . $B}pk(A)"), owners),
                        _ns_config(), _ns_properties(), _TABLE2, toggles,
                        "Needham-Schroeder-Lowe public-key protocol")
    ns = NamedScenario("ns-original", ProtocolSpec("ns-original", _nsl_roles("{$Na . $Nb}pk(A)"), owners),
                       _ns_config(), _ns_properties(),
                       (ExpectedRow("resp-secrecy-nb", ("uoNb", "privA", "privB"), "attack"),),
                       toggles, "original Needham-Schroeder, B absent from message 2")
    return {"nsl": nsl, "ns-original": ns}


def nsl_initiator_secrecy_predicate(a: str, b: str, na: str) -> Callable:
    """Node predicate: whenever ``na`` occurs in the term, one of the three
    cipher shapes carrying it occurs too (responder nonce left free)."""
    from .terms import Cipher, Pair, subterm, subterms
    A, B, Na = Text(a), Text(b), Text(na)
    first = Cipher(Pair(Na, A), pk(b))
    third = Cipher(Na, pk(b))

    def holds_term(t) -> bool:
        if not subterm(Na, t):
            return True
        for u in subterms(t):
            if u == first or u == third:
                return True
            if (isinstance(u, Cipher) and u.key == pk(a) and isinstance(u.payload, Pair)
                    and u.payload.left == Na and isinstance(u.payload.right, Pair)
                    and u.payload.right.right == B):
                return True
        return False

    def pred(bundle, node) -> bool:
        return holds_term(bundle.node_term(node).term)

    pred.holds_term = holds_term
    return pred


# --- registry -------------------------------------------------------------

SCENARIO_NAMES = (
    "simple-auth", "simple-auth-withb", "simple-auth-flawed", "simple-auth-untyped",
    "simple-auth-dual", "simple-auth-dual-b", "simple-auth-maximal", "simple-auth-composed",
    "nsl", "ns-original", "kmp-secure-templates",
)

_CACHE: dict = {}


def kmp_scenarios() -> dict[str, NamedScenario]:
    from .kmp import (ClosureKind, KmpSoundness, api_strand_templates, closure, kmp_config,
                      secure_templates)
    pol = secure_templates()
    props = tuple((f"soundness-{k.value}", KmpSoundness(closure(pol, k), pol))
                  for k in (ClosureKind.REFINED, ClosureKind.ORIGINAL))
    sc = NamedScenario("kmp-secure-templates", api_strand_templates(pol),
                       kmp_config(pol, atomic=True), props,
                       tuple(ExpectedRow(n) for n, _ in props), (),
                       "key-management API under the secure templates policy")
    return {sc.name: sc}


def builtin_scenarios() -> dict[str, NamedScenario]:
    if not _CACHE:
        _CACHE.update(simple_auth_family())
        _CACHE.update(simple_auth_maximal_scenarios())
        _CACHE.update(nsl_scenarios())
        _CACHE.update(kmp_scenarios())
    return dict(_CACHE)


def get_scenario(name: str) -> NamedScenario:
    sc = builtin_scenarios().get(name)
    if sc is None:
        raise KeyError(f"unknown scenario {name!r}")
    return sc
