"""Property checking with witness minimisation and bundle certificates."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..grammar import render
from ..penetrator import MaximalModel, role_subsumed_by_maximal
from ..strands import Bundle, SignedTerm, bundle_to_json
from ..terms import Cipher, Key, KeyLit, Pair, Text, subterms
from .engine import (Event, Execution, Explorer, SearchBudgetExceeded, SearchConfig,
                     parallel_search)
from .properties import Violation
from .reconstruct import reconstruct_bundle
from .roles import ProtocolSpec, RoleTemplate

__all__ = ["Verdict", "check_property", "minimize_events", "check_composition",
           "CompositionResult"]

NO_ATTACK = "no-attack"
ATTACK = "attack"


@dataclass
class Verdict:
    result: str
    states_explored: int
    prop: object = None
    violation: Violation | None = None
    execution: Execution | None = None
    witness: Bundle | None = None
    bindings: dict | None = None

    @property
    def attack(self) -> bool:
        return self.result == ATTACK

    def to_json(self) -> dict:
        out = {"result": self.result, "states_explored": self.states_explored}
        if self.violation is not None:
            out["violation"] = self.violation.message
        if self.witness is not None:
            out["witness"] = bundle_to_json(self.witness)
        if self.bindings is not None:
            out["bindings"] = self.bindings
        return out


def minimize_events(ex: Explorer, events: list, prop) -> list:
    """Greedily truncate sessions (last slot first) while the attack replays."""
    events = list(events)
    slots = sorted({e.slot for e in events}, reverse=True)
    for s in slots:
        n = sum(1 for e in events if e.slot == s)
        for keep in range(n):
            cand = [e for e in events if e.slot != s or e.index < keep]
            state = ex.replay(cand)
            if state is None:
                continue
            if prop.check(ex.views(state), ex.knowledge(state.emitted)) is not None:
                events = cand
                break
    return events


def check_property(spec: ProtocolSpec, prop, cfg: SearchConfig,
                   minimize: bool = True) -> Verdict:
    """Exhaustive bounded check of ``prop``.

    Raises :class:`SearchBudgetExceeded` when the bounds cannot be
    exhausted within the budget; that is never reported as no attack.
    """
    ex = Explorer(spec, cfg)
    if cfg.workers > 1:
        found, count = parallel_search(spec, cfg, prop)
    else:
        found = ex.search(prop)
        count = ex.count
    if found is None:
        return Verdict(NO_ATTACK, count, prop)
    events, state, violation = found
    if minimize:
        events = minimize_events(ex, events, prop)
        state = ex.replay(events)
        violation = prop.check(ex.views(state), ex.knowledge(state.emitted))
    if minimize:
        events = rename_fresh(events)
        state = ex.replay(events)
        violation = prop.check(ex.views(state), ex.knowledge(state.emitted))
    execution = ex.execution(events, state)
    labels = session_labels(execution)
    witness = reconstruct_bundle(execution, ex.model, labels)
    bindings = {}
    for v in execution.slots:
        if v.pc:
            bindings[labels[v.index]] = {k: render(t) for k, t in sorted(v.env.items())}
    return Verdict(ATTACK, count, prop, violation, execution, witness, bindings)


_FRESH = re.compile(r"n\d+$")


def rename_fresh(events: list) -> list:
    """Renumber generated nonces n0, n1, ... by first appearance."""
    mapping: dict = {}

    def visit(t):
        if isinstance(t, Text) and _FRESH.match(t.name) and t not in mapping:
            mapping[t] = Text(f"n{len(mapping)}")
        for u in subterms(t):
            if u is not t:
                visit(u)

    for ev in events:
        visit(ev.node.term)
        for t in ev.env:
            if t is not None:
                visit(t)
    if all(k == v for k, v in mapping.items()):
        return list(events)

    def sub(t):
        return _rename_term(t, mapping)

    return [Event(ev.slot, ev.index, SignedTerm(ev.node.positive, sub(ev.node.term)),
                  tuple(None if t is None else sub(t) for t in ev.env)) for ev in events]


def _rename_term(t, mapping):
    if isinstance(t, Text):
        return mapping.get(t, t)
    if isinstance(t, Pair):
        return Pair(_rename_term(t.left, mapping), _rename_term(t.right, mapping))
    if isinstance(t, Cipher):
        return Cipher(_rename_term(t.payload, mapping), _rename_key(t.key, mapping))
    if isinstance(t, KeyLit):
        return KeyLit(_rename_key(t.key, mapping))
    return t


def _rename_key(k, mapping):
    if isinstance(k, Key) and k.kind in ("sk", "pk", "pvk"):
        return Key(k.kind, tuple(mapping.get(Text(a), Text(a)).name for a in k.args))
    return k


def session_labels(execution) -> dict:
    """``role<k>`` where k numbers the role's started sessions from 0
    (``role.<k>`` when the role name already ends in a digit)."""
    seen: dict[str, int] = {}
    out = {}
    for v in execution.slots:
        if v.pc:
            sep = "." if v.role[-1:].isdigit() else ""
            out[v.index] = f"{v.role}{sep}{seen.get(v.role, 0)}"
            seen[v.role] = seen.get(v.role, 0) + 1
    return out


@dataclass
class CompositionResult:
    ok: bool
    combined: ProtocolSpec | None = None
    counterexample: dict | None = None
    role: str | None = None
    checked: int = 0

    def __bool__(self):
        return self.ok


def _rename(role: RoleTemplate, name: str) -> RoleTemplate:
    return RoleTemplate(name, role.params, role.trace, role.fresh, role.side_conditions)


def check_composition(spec1: ProtocolSpec, spec2: ProtocolSpec, model: MaximalModel,
                      agents, nonces=("Na",), suffix: str = "_2") -> CompositionResult:
    """Every admitted role instance of ``spec2`` must be a maximal-penetrator
    strand for ``model``; then ``spec2`` cannot break what ``spec1`` proved
    under that penetrator.  On success returns the combined specification
    (``spec2``'s roles renamed with ``suffix``)."""
    checked = 0
    for role in spec2.roles:
        res = role_subsumed_by_maximal(role, model, agents, nonces, spec2.admission_for(role.name))
        checked += res.checked
        if not res.ok:
            return CompositionResult(False, None, res.counterexample, role.name, checked)
    roles = list(spec1.roles) + [_rename(r, r.name + suffix) for r in spec2.roles]
    adm = dict(spec1.admission)
    for rn, pred in spec2.admission:
        adm[rn + suffix] = pred
    combined = ProtocolSpec(f"{spec1.name}+{spec2.name}", roles, adm)
    return CompositionResult(True, combined, None, None, checked)
