"""Bounded forward exploration of protocol executions.

A state records, for every honest session slot, how many nodes it has
executed and the parameter values bound so far.  The penetrator's
knowledge is the set of terms the honest slots have sent; every received
term must be derivable from it.  States are explored depth first in a
canonical order (slot order, then candidate terms in structural order)
with an explored-state set, so verdicts and witnesses are reproducible.
"""

from __future__ import annotations

import itertools
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple, Sequence

from ..penetrator import DYModel, Knowledge
from ..strands import SignedTerm
from ..terms import (AGENT, KEY, Cipher, Key, KeyLit, Pair, Text, Var, dev, instantiate,
                     variables)
from .properties import SlotView, Violation
from .roles import ProtocolSpec, RoleTemplate

__all__ = ["SearchConfig", "SearchBudgetExceeded", "Event", "Execution", "Explorer",
           "enumerate_executions", "default_budget"]

DEFAULT_MAX_STATES = 10 ** 6


def default_budget() -> int:
    env = os.environ.get("STRANDLAB_BUDGET_STATES")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"STRANDLAB_BUDGET_STATES must be an integer, got {env!r}") from None
    return DEFAULT_MAX_STATES


class SearchBudgetExceeded(RuntimeError):
    """The search hit its state or time budget; the result is inconclusive."""

    def __init__(self, message: str, states_explored: int):
        super().__init__(message)
        self.states_explored = states_explored


@dataclass(frozen=True)
class SearchConfig:
    sessions: tuple  # ((role name, count), ...)
    agents: tuple
    penetrator: DYModel
    # Values a relaxed (non-fresh) parameter may take; text atoms among
    # them are also known to the penetrator.
    nonces: tuple = (Text("N0"),)
    typed: bool = True
    unique_origination: bool = True
    # Fresh parameters drawn from ``nonces`` even when unique origination
    # is enforced for the rest.
    relaxed: frozenset = frozenset()
    # (role, fresh param, other param): the fresh param may also take the
    # value of the other one (drops a "B <> Na" style assumption).
    nonce_aliases: tuple = ()
    # fuse receives with the following send (see Explorer.moves)
    atomic: bool = False
    max_states: int | None = None
    time_limit: float | None = None
    workers: int = 1

    def __post_init__(self):
        sessions = self.sessions.items() if isinstance(self.sessions, dict) else self.sessions
        object.__setattr__(self, "sessions", tuple((str(r), int(n)) for r, n in sessions))
        object.__setattr__(self, "agents", tuple(a.name if isinstance(a, Text) else str(a)
                                                 for a in self.agents))
        object.__setattr__(self, "nonces", tuple(Text(n) if isinstance(n, str) else n
                                                 for n in self.nonces))
        object.__setattr__(self, "relaxed", frozenset(self.relaxed))
        object.__setattr__(self, "nonce_aliases", tuple(tuple(x) for x in self.nonce_aliases))
        if any(n < 0 for _, n in self.sessions):
            raise ValueError("session counts must be non-negative")
        if not self.agents:
            raise ValueError("agent universe must be nonempty")

    def replace(self, **kw) -> "SearchConfig":
        return replace(self, **kw)

    def session_count(self, role: str) -> int:
        return dict(self.sessions).get(role, 0)

    def with_sessions(self, **counts) -> "SearchConfig":
        s = dict(self.sessions)
        s.update(counts)
        return self.replace(sessions=tuple(s.items()))

    def is_relaxed(self, param: str) -> bool:
        return not self.unique_origination or param in self.relaxed

    def budget(self) -> int:
        return self.max_states if self.max_states is not None else default_budget()

    def penetrator_model(self) -> DYModel:
        extra = {n for n in self.nonces if isinstance(n, Text)}
        return self.penetrator.replace(text_universe=self.penetrator.text_universe | extra)


class Event(NamedTuple):
    slot: int
    index: int
    node: SignedTerm  # ground
    env: tuple  # slot bindings after the step, in param order


class Execution(NamedTuple):
    events: tuple
    slots: tuple  # SlotView per slot

    def strands_by_slot(self) -> dict:
        out: dict[int, list] = {}
        for ev in self.events:
            out.setdefault(ev.slot, []).append(ev.node)
        return out


class _State(NamedTuple):
    slots: tuple  # ((pc, env tuple), ...)
    emitted: frozenset


class Explorer:
    """Successor generation and depth-first search for one (spec, config)."""

    def __init__(self, spec: ProtocolSpec, cfg: SearchConfig):
        self.spec = spec
        self.cfg = cfg
        self.model = cfg.penetrator_model()
        self.layout: list[tuple[RoleTemplate, int]] = []
        for role in spec.roles:
            for k in range(cfg.session_count(role.name)):
                self.layout.append((role, k))
        unknown = {r for r, _ in cfg.sessions} - {r.name for r in spec.roles}
        if unknown:
            raise ValueError(f"sessions given for unknown roles: {sorted(unknown)}")
        self.agents = tuple(Text(a) for a in cfg.agents)
        self._kcache: dict = {}
        self.explored: set = set()
        self.count = 0
        self.budget = cfg.budget()
        self.deadline = time.monotonic() + cfg.time_limit if cfg.time_limit else None
        self.aliases = {(r, p): q for r, p, q in cfg.nonce_aliases}
        self._inst: dict = {}
        self._ren_cache: dict = {}
        self._perms = self._symmetries()

    def _symmetries(self):
        """Slot permutations within each role, with the matching renaming of
        slot-generated fresh values.  Identity excluded."""
        groups: dict[str, list[int]] = {}
        for i, (role, _) in enumerate(self.layout):
            groups.setdefault(role.name, []).append(i)
        choices = [list(itertools.permutations(g)) for g in groups.values() if len(g) > 1]
        if not choices:
            return []
        total = 1
        for c in choices:
            total *= len(c)
        if total > 24:
            return []
        out = []
        for combo in itertools.product(*choices):
            perm = list(range(len(self.layout)))
            for g_perm, g in zip(combo, [g for g in groups.values() if len(g) > 1]):
                for src, dst in zip(g, g_perm):
                    perm[src] = dst
            if perm == list(range(len(self.layout))):
                continue
            ren = {}
            for src, dst in enumerate(perm):
                role = self.layout[src][0]
                for j, v in enumerate(role.params):
                    if v.name in role.fresh:
                        a, b = src * len(role.params) + j, dst * len(role.params) + j
                        ren[Text(f"n{a}")] = Text(f"n{b}")
                        ren[dev(a)] = dev(b)
            out.append((tuple(perm), ren))
        return out

    def state_key(self, slots):
        if not self._perms:
            return slots
        best, best_h = slots, hash(slots)
        cache = self._ren_cache
        if len(cache) > 200000:
            cache.clear()
        for k, (perm, ren) in enumerate(self._perms):
            new = [None] * len(slots)
            for i, cfg in enumerate(slots):
                r = cache.get((k, cfg))
                if r is None:
                    pc, env = cfg
                    r = cache[(k, cfg)] = (pc, tuple(None if t is None else _rename(t, ren)
                                                     for t in env))
                new[perm[i]] = r
            cand = tuple(new)
            h = hash(cand)
            if h < best_h:
                best, best_h = cand, h
        return best

    # --- state helpers --------------------------------------------------

    def initial(self) -> _State:
        slots = tuple((0, (None,) * len(role.params)) for role, _ in self.layout)
        return _State(slots, frozenset())

    def knowledge(self, emitted: frozenset) -> Knowledge:
        kn = self._kcache.get(emitted)
        if kn is None:
            if len(self._kcache) > 20000:
                self._kcache.clear()
            kn = self._kcache[emitted] = Knowledge(emitted, self.model)
        return kn

    def views(self, state: _State) -> list[SlotView]:
        out = []
        for i, ((role, k), (pc, env)) in enumerate(zip(self.layout, state.slots)):
            named = {v.name: t for v, t in zip(role.params, env) if t is not None}
            out.append(SlotView(i, role.name, k, pc, len(role.trace), named))
        return out

    def _admitted(self, role: RoleTemplate, env: dict) -> bool:
        if not role.side_conditions_ok(env):
            return False
        pred = self.spec.admission_for(role.name)
        if pred is None:
            return True
        return pred({v.name: t for v, t in env.items()})

    def _domain(self, role: RoleTemplate, v: Var, env: dict, slot: int):
        """Candidate values for a parameter first bound on a positive node."""
        other = self.aliases.get((role.name, v.name))
        alias = env.get(role.param(other)) if other is not None else None
        if v.name in role.fresh and not self.cfg.is_relaxed(v.name):
            # one value per (slot, param), so the name does not depend on
            # the order in which sessions ran
            idx = slot * len(role.params) + role.params.index(v)
            vals = [dev(idx)] if v.kind == KEY else [Text(f"n{idx}")]
            if alias is not None:
                vals.append(alias)
            return vals
        if v.kind == AGENT:
            return list(self.agents)
        if v.kind == KEY:
            return list(self.model.known_keys.emit)
        vals = list(self.cfg.nonces)
        if alias is not None and alias not in vals:
            vals.append(alias)
        return vals

    def successors(self, state: _State) -> Iterator[tuple[Event, _State]]:
        for i in range(len(self.layout)):
            yield from self._slot_successors(state, i)

    def moves(self, state: _State) -> Iterator[tuple[tuple, _State]]:
        """Successor steps as event tuples.

        With ``cfg.atomic`` a slot's receives are fused with the send that
        follows them.  Knowledge only grows, so postponing a receive to just
        before the next send never disables it; this is exact for
        properties that only look at knowledge and completed sends.
        """
        if not self.cfg.atomic:
            for ev, nxt in self.successors(state):
                yield (ev,), nxt
            return
        for i in range(len(self.layout)):
            pc = state.slots[i][0]
            trace = self.layout[i][0].trace
            if pc < len(trace) and trace[pc].positive:
                only = list(self._block(state, i, ()))
                if len(only) == 1:
                    # a send with no choice left commutes with everything
                    yield only[0]
                    return
        for i in range(len(self.layout)):
            yield from self._block(state, i, ())

    def _block(self, state, i, done):
        n = len(self.layout[i][0].trace)
        for ev, nxt in self._slot_successors(state, i):
            evs = done + (ev,)
            if ev.node.negative and nxt.slots[i][0] < n:
                yield from self._block(nxt, i, evs)
            else:
                yield evs, nxt

    def _slot_successors(self, state: _State, i: int) -> Iterator[tuple[Event, _State]]:
        (role, k), (pc, env_t) = self.layout[i], state.slots[i]
        if pc >= len(role.trace):
            return
        if pc == 0 and k > 0 and state.slots[i - 1][0] == 0:
            return  # sessions of one role start in order
        env = {v: t for v, t in zip(role.params, env_t) if t is not None}
        node = role.trace[pc]
        if node.positive:
            todo = sorted((v for v in variables(node.term) if not v.local and v not in env),
                          key=role.params.index)
            for e in self._bindings(role, todo, env, i):
                if not self._admitted(role, e):
                    continue
                yield self._step(state, i, role, pc, node, e)
        else:
            kn = self.knowledge(state.emitted)
            for e in kn.matches(node.term, env, self.cfg.typed, self.agents):
                if any(v.local for v in e):
                    e = {v: t for v, t in e.items() if not v.local}
                if not self._admitted(role, e):
                    continue
                yield self._step(state, i, role, pc, node, e)

    def _bindings(self, role, todo, env, slot):
        # sequential so an alias sees parameters bound on the same node
        envs = [dict(env)]
        for v in todo:
            nxt = []
            for e in envs:
                for val in self._domain(role, v, e, slot):
                    e2 = dict(e)
                    e2[v] = val
                    nxt.append(e2)
            envs = nxt
        return envs

    def _step(self, state, i, role, pc, node, env):
        env_t = tuple(env.get(v) for v in role.params)
        ck = (i, pc, env_t)
        term = self._inst.get(ck)
        if term is None:
            if len(self._inst) > 200000:
                self._inst.clear()
            term = self._inst[ck] = instantiate(node.term, env)
        slots = list(state.slots)
        slots[i] = (pc + 1, env_t)
        emitted = state.emitted | {term} if node.positive else state.emitted
        ev = Event(i, pc, SignedTerm(node.positive, term), env_t)
        return ev, _State(tuple(slots), emitted)

    # --- search ---------------------------------------------------------

    def _visit(self, state) -> bool:
        key = self.state_key(state.slots)
        if key in self.explored:
            return False
        self.explored.add(key)
        self.count += 1
        if self.count > self.budget:
            raise SearchBudgetExceeded(f"state budget of {self.budget} exceeded", self.count)
        if self.deadline is not None and self.count % 256 == 0 and time.monotonic() > self.deadline:
            raise SearchBudgetExceeded("time limit exceeded", self.count)
        return True

    def search(self, prop, start=None, path=None):
        """Depth-first search for a state violating ``prop``.

        Returns (events, state, violation) or None.
        """
        state = start or self.initial()
        path = list(path or [])
        limit = sys.getrecursionlimit()
        need = sum(len(r.trace) for r, _ in self.layout) * 3 + 200
        if limit < need:
            sys.setrecursionlimit(need)
        return self._dfs(state, path, prop)

    def _dfs(self, state, path, prop):
        if not self._visit(state):
            return None
        if prop is not None:
            v = prop.check(self.views(state), self.knowledge(state.emitted))
            if v is not None:
                return list(path), state, v
        for evs, nxt in self.moves(state):
            path.extend(evs)
            found = self._dfs(nxt, path, prop)
            del path[len(path) - len(evs):]
            if found is not None:
                return found
        return None

    def walk(self) -> Iterator[tuple[list, _State]]:
        """Every reachable state once, depth first, with the path to it."""
        stack = [(self.initial(), [])]
        while stack:
            state, path = stack.pop()
            if not self._visit(state):
                continue
            yield path, state
            succ = list(self.moves(state))
            for evs, nxt in reversed(succ):
                stack.append((nxt, path + list(evs)))

    def execution(self, events, state=None) -> Execution:
        if state is None:
            state = self.replay(events)
        return Execution(tuple(events), tuple(self.views(state)))

    def replay(self, events) -> "_State | None":
        """Re-run ``events`` checking every receive is derivable; None if not."""
        slots = list(self.initial().slots)
        emitted = set()
        for ev in events:
            role, _ = self.layout[ev.slot]
            pc, _ = slots[ev.slot]
            if pc != ev.index:
                return None
            if ev.node.positive:
                emitted.add(ev.node.term)
            elif not self.knowledge(frozenset(emitted)).derivable(ev.node.term):
                return None
            slots[ev.slot] = (pc + 1, ev.env)
        return _State(tuple(slots), frozenset(emitted))


def _rename(t, ren):
    """Apply an atom/key renaming throughout a term or key."""
    if isinstance(t, Text):
        return ren.get(t, t)
    if isinstance(t, Key):
        if t.kind == "dev":
            return ren.get(t, t)
        return t
    if isinstance(t, Pair):
        return Pair(_rename(t.left, ren), _rename(t.right, ren))
    if isinstance(t, Cipher):
        return Cipher(_rename(t.payload, ren), _rename(t.key, ren))
    if isinstance(t, KeyLit):
        return KeyLit(_rename(t.key, ren))
    return t


def enumerate_executions(spec: ProtocolSpec, cfg: SearchConfig) -> Iterator[Execution]:
    """All reachable executions (one per distinct state), canonical order."""
    ex = Explorer(spec, cfg)
    for path, state in ex.walk():
        yield Execution(tuple(path), tuple(ex.views(state)))


# --- parallel driver -------------------------------------------------------

def _branch_worker(args):
    spec, cfg, prop, branch = args
    ex = Explorer(spec, cfg)
    root = ex.initial()
    ex._visit(root)
    succ = list(ex.moves(root))
    evs, nxt = succ[branch]
    try:
        found = ex.search(prop, nxt, list(evs))
    except SearchBudgetExceeded as e:
        return ("budget", None, e.states_explored)
    if found is None:
        return ("clear", None, ex.count)
    events, _state, violation = found
    return ("attack", (events, violation), ex.count)


def parallel_search(spec, cfg, prop):
    """Split the root's successors across worker processes.

    The lowest-numbered branch with an attack wins, which is the attack a
    single-process search would report: earlier branches were fully
    explored without one.  Each worker keeps its own explored set.
    """
    ex = Explorer(spec, cfg)
    root = ex.initial()
    ex._visit(root)
    v = prop.check(ex.views(root), ex.knowledge(root.emitted))
    if v is not None:
        return ([], root, v), 1
    n = len(list(ex.moves(root)))
    total = 1
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(_branch_worker, [(spec, cfg, prop, b) for b in range(n)]))
    for status, payload, count in results:
        total += count
        if status == "budget":
            raise SearchBudgetExceeded("state budget exceeded in a worker", total)
        if status == "attack":
            events, violation = payload
            state = ex.replay(events)
            return (events, state, violation), total
    return None, total
