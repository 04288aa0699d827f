"""Dolev-Yao and maximal penetrators.

The Dolev-Yao penetrator shows up twice: as the eight strand shapes used in
bundles (``classify_dy``) and as a knowledge engine used by the search
(:class:`Knowledge`).  Witness reconstruction in :mod:`strandlab.search`
turns derivations of the second kind back into strands of the first.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .strands import SignedTerm, Strand, originates
from .terms import (AGENT, KEY, NONCE, TERM, Cipher, Key, KeyLit, Pair, Text, Var,
                    _bind, _unify_key, inverse, instantiate, sk, subterms)

__all__ = [
    "KeySet", "DYModel", "DYStrandKind", "classify_dy", "Knowledge", "analz",
    "analz_synth_close", "derivable", "MaximalModel", "no_forge_cipher",
    "is_maximal_penetrator_strand", "role_subsumed_by_maximal", "SubsumptionResult",
    "enumerate_dy_strands",
]


@dataclass(frozen=True)
class KeySet:
    """K_P: a key predicate plus a finite list of keys the penetrator may emit.

    ``mode='only'`` knows exactly ``keys``; ``mode='all-except'`` knows every
    key except ``keys`` (the ``k <> SK A B`` style).  ``emit`` is the explicit
    enumeration used when the penetrator sends keys; it defaults to ``keys``
    in ``only`` mode.
    """

    mode: str = "only"
    keys: frozenset = frozenset()
    emit: tuple = ()

    def __post_init__(self):
        if self.mode not in ("only", "all-except"):
            raise ValueError(f"unknown key set mode {self.mode!r}")
        object.__setattr__(self, "keys", frozenset(self.keys))
        emit = tuple(self.emit) if self.emit else (
            tuple(sorted(self.keys)) if self.mode == "only" else ())
        object.__setattr__(self, "emit", tuple(k for k in emit if self.contains_key(k)))

    def contains_key(self, k) -> bool:
        if not isinstance(k, Key):
            return False
        return (k in self.keys) == (self.mode == "only")

    __contains__ = contains_key

    def with_key(self, k: Key) -> "KeySet":
        """The same set with ``k`` added (used by assumption toggles)."""
        if self.mode == "only":
            return KeySet("only", self.keys | {k}, tuple(self.emit) + (k,))
        return KeySet("all-except", self.keys - {k}, tuple(self.emit) + (k,))


def all_except(excluded: Iterable[Key], emit: Iterable[Key]) -> KeySet:
    return KeySet("all-except", frozenset(excluded), tuple(emit))


@dataclass(frozen=True)
class DYModel:
    known_keys: KeySet = field(default_factory=KeySet)
    text_universe: frozenset = frozenset()
    synth_depth: int = 2
    # Relaxation used for the maximal penetrator: every ciphertext can be
    # opened without the key.
    decrypt_without_key: bool = False

    def __post_init__(self):
        if self.synth_depth < 1:
            raise ValueError("synth_depth must be at least 1")
        object.__setattr__(self, "text_universe", frozenset(
            t if isinstance(t, Text) else Text(t) for t in self.text_universe))

    def replace(self, **kw) -> "DYModel":
        args = dict(known_keys=self.known_keys, text_universe=self.text_universe,
                    synth_depth=self.synth_depth, decrypt_without_key=self.decrypt_without_key)
        args.update(kw)
        return DYModel(**args)


class DYStrandKind(enum.Enum):
    TextMsg = "text"
    Flushing = "flush"
    Tee = "tee"
    Concatenation = "concat"
    Separation = "separate"
    KeyEmit = "key"
    Encryption = "encrypt"
    Decryption = "decrypt"


def _signs(trace):
    return "".join("+" if x.positive else "-" for x in trace)


def classify_dy(trace: Sequence[SignedTerm], model: DYModel) -> DYStrandKind | None:
    tr = list(trace.trace if isinstance(trace, Strand) else trace)
    sg = _signs(tr)
    ts = [x.term for x in tr]
    if sg == "+":
        t = ts[0]
        if isinstance(t, Text):
            return DYStrandKind.TextMsg
        if isinstance(t, KeyLit) and model.known_keys.contains_key(t.key):
            return DYStrandKind.KeyEmit
        return None
    if sg == "-":
        return DYStrandKind.Flushing
    if sg == "-++":
        g, a, b = ts
        if a == g and b == g:
            return DYStrandKind.Tee
        if isinstance(g, Pair) and a == g.left and b == g.right:
            return DYStrandKind.Separation
        return None
    if sg == "--+":
        x, y, out = ts
        if isinstance(out, Pair) and out.left == x and out.right == y:
            return DYStrandKind.Concatenation
        if (isinstance(out, Cipher) and isinstance(x, KeyLit) and out.key == x.key
                and out.payload == y):
            return DYStrandKind.Encryption
        if (isinstance(y, Cipher) and isinstance(x, KeyLit) and x.key == inverse(y.key)
                and out == y.payload):
            return DYStrandKind.Decryption
    return None


# --- knowledge ------------------------------------------------------------

# Provenance tags for analysed terms.
EMITTED, LEFT, RIGHT, DECRYPT, DECRYPT_NOKEY = "emitted", "left", "right", "decrypt", "nokey"


def _key_available(k, facts, model: DYModel) -> bool:
    return model.known_keys.contains_key(k) or KeyLit(k) in facts


def analz(emitted: Iterable, model: DYModel, provenance: dict | None = None) -> frozenset:
    """Closure of ``emitted`` under pair splitting and decryption.

    Independent of ``synth_depth``: keys are atomic, so a decryption key is
    available only if emitted, analysed out, or in K_P.  When ``provenance``
    is a dict it is filled with ``term -> (tag, source...)`` for the first
    derivation found.
    """
    facts: set = set()
    prov = provenance if provenance is not None else {}
    work = []
    for t in emitted:
        if t not in facts:
            facts.add(t)
            prov.setdefault(t, (EMITTED,))
            work.append(t)
    blocked: list[Cipher] = []
    while work:
        t = work.pop()
        new = []
        if isinstance(t, Pair):
            new.append((t.left, (LEFT, t)))
            new.append((t.right, (RIGHT, t)))
        elif isinstance(t, Cipher):
            if model.decrypt_without_key:
                new.append((t.payload, (DECRYPT_NOKEY, t)))
            elif _key_available(inverse(t.key), facts, model):
                new.append((t.payload, (DECRYPT, t)))
            else:
                blocked.append(t)
        elif isinstance(t, KeyLit) and blocked:
            still = []
            for c in blocked:
                if inverse(c.key) == t.key:
                    new.append((c.payload, (DECRYPT, c)))
                else:
                    still.append(c)
            blocked = still
        for u, how in new:
            if u not in facts:
                facts.add(u)
                prov.setdefault(u, how)
                work.append(u)
    return frozenset(facts)


class Knowledge:
    """Penetrator knowledge derived from a finite set of intercepted terms.

    ``derivable(t)`` holds iff the synthesis depth of ``t`` is at most
    ``model.synth_depth``, where analysed terms, universe texts and K_P keys
    have depth 1 and each Concatenation or Encryption step adds one.
    """

    def __init__(self, emitted: Iterable, model: DYModel):
        self.emitted = frozenset(emitted)
        self.model = model
        self.provenance: dict = {}
        self.facts = analz(self.emitted, model, self.provenance)
        self._sdepth: dict = {}

    @property
    def sorted_facts(self) -> list:
        sf = getattr(self, "_sorted_facts", None)
        if sf is None:
            sf = self._sorted_facts = sorted(self.facts)
        return sf

    def base(self, t) -> bool:
        if t in self.facts:
            return True
        if isinstance(t, Text):
            return t in self.model.text_universe
        if isinstance(t, KeyLit):
            return self.model.known_keys.contains_key(t.key)
        return False

    def key_available(self, k) -> bool:
        return isinstance(k, Key) and (self.model.known_keys.contains_key(k)
                                       or KeyLit(k) in self.facts)

    def sdepth(self, t) -> float:
        d = self._sdepth.get(t)
        if d is not None:
            return d
        if self.base(t):
            d = 1
        elif isinstance(t, Pair):
            d = 1 + max(self.sdepth(t.left), self.sdepth(t.right))
        elif isinstance(t, Cipher) and self.key_available(t.key):
            d = 1 + self.sdepth(t.payload)
        else:
            d = float("inf")
        self._sdepth[t] = d
        return d

    def derivable(self, t, depth: int | None = None) -> bool:
        return self.sdepth(t) <= (self.model.synth_depth if depth is None else depth)

    def atoms(self) -> list:
        """Text atoms the penetrator can say, sorted."""
        out = {t for t in self.facts if isinstance(t, Text)} | set(self.model.text_universe)
        return sorted(out)

    def base_terms(self) -> list:
        out = set(self.facts) | set(self.model.text_universe)
        out |= {KeyLit(k) for k in self.model.known_keys.emit}
        return sorted(out)

    def available_keys(self) -> list:
        ks = set(self.model.known_keys.emit)
        ks |= {t.key for t in self.facts if isinstance(t, KeyLit)}
        return sorted(ks)

    # --- pattern-directed enumeration ---------------------------------

    def matches(self, pattern, env: dict, typed: bool = True,
                agents: Sequence | None = None) -> Iterator[dict]:
        """All extensions of ``env`` under which ``pattern`` becomes derivable.

        Variables bind to base terms only: agent variables to ``agents``
        (default: all text atoms), typed nonces to text atoms, untyped
        variables to any base term.  Composite structure is either matched
        against a base term or synthesised within the depth budget.
        Results are deduplicated and produced in a canonical order.
        """
        ck = (pattern, frozenset(env.items()), typed,
              None if agents is None else tuple(agents))
        memo = self.__dict__.setdefault("_matches", {})
        hit = memo.get(ck)
        if hit is not None:
            return (dict(e) for e in hit)
        seen = set()
        out = []
        for e in self._match(pattern, env, self.model.synth_depth, typed, agents):
            key = frozenset(e.items())
            if key not in seen:
                seen.add(key)
                out.append(e)
        out.sort(key=lambda e: sorted((v.name, str(x)) for v, x in e.items() if v not in env))
        memo[ck] = out
        return (dict(e) for e in out)

    def _var_candidates(self, v: Var, typed, agents):
        if v.kind == AGENT:
            pool = [a if isinstance(a, Text) else Text(a) for a in agents] if agents is not None \
                else self.atoms()
            return [a for a in pool if self.base(a)]
        if v.kind == KEY:
            return self.available_keys()
        if v.kind == NONCE and typed:
            return self.atoms()
        return self.base_terms()

    def _match(self, p, env, budget, typed, agents):
        if budget < 1:
            return
        if isinstance(p, Var):
            cur = env.get(p)
            if cur is not None:
                if self.derivable(cur, budget):
                    yield env
                return
            for c in self._var_candidates(p, typed, agents):
                e = _bind(p, c, env, typed)
                if e is not None:
                    yield e
            return
        g = instantiate(p, env)
        if not _has_vars(g):
            if self.derivable(g, budget):
                yield env
            return
        if isinstance(p, KeyLit):
            yield from self._key_options(p.key, env, agents)
        # match against analysed terms of the same constructor
        for b in self.sorted_facts:
            if b.tag == p.tag:
                yield from _unify_gen(p, b, env, typed, agents)
        if budget < 2:
            return
        if isinstance(p, Pair):
            for e1 in self._match(p.left, env, budget - 1, typed, agents):
                yield from self._match(p.right, e1, budget - 1, typed, agents)
        elif isinstance(p, Cipher):
            for e1 in self._match(p.payload, env, budget - 1, typed, agents):
                for e2 in self._key_options(p.key, e1, agents):
                    yield e2

    def _key_options(self, kp, env, agents):
        k = kp if isinstance(kp, Key) and kp.is_ground else None
        if isinstance(kp, Var):
            k = env.get(kp)
            if k is None:
                for cand in self.available_keys():
                    e = _bind(kp, cand, env, True)
                    if e is not None:
                        yield e
                return
        if k is None:
            k = instantiate(kp, env)
        if isinstance(k, Key) and k.is_ground:
            if self.key_available(k):
                yield env
            return
        # unbound agent arguments: try every agent
        pool = [a if isinstance(a, Text) else Text(a) for a in agents] if agents is not None \
            else self.atoms()
        free = [a for a in k.args if isinstance(a, Var)]
        for combo in itertools.product(pool, repeat=len(free)):
            e = env
            for v, val in zip(free, combo):
                e = _bind(v, val, e, True)
                if e is None:
                    break
            if e is None:
                continue
            kk = instantiate(kp, e)
            if self.key_available(kk):
                yield e


def _has_vars(t) -> bool:
    if isinstance(t, Var):
        return True
    if isinstance(t, Pair):
        return _has_vars(t.left) or _has_vars(t.right)
    if isinstance(t, Cipher):
        return _has_vars(t.payload) or isinstance(t.key, Var) or not t.key.is_ground
    if isinstance(t, KeyLit):
        return isinstance(t.key, Var) or not t.key.is_ground
    return False


def _unify_gen(p, t, env, typed, agents):
    from .terms import unify_all
    agent_set = None if agents is None else {a if isinstance(a, Text) else Text(a) for a in agents}
    for e in unify_all(p, t, env, typed):
        if agent_set is not None and any(
                v.kind == AGENT and v not in env and val not in agent_set for v, val in e.items()):
            continue
        yield e


def derivable(k0: Iterable, t, model: DYModel) -> bool:
    return Knowledge(k0, model).derivable(t)


def analz_synth_close(k0: Iterable, model: DYModel) -> frozenset:
    """Explicit closure: layered synthesis over the analysed base.

    Layer 1 is the analysed knowledge plus universe texts and emittable
    keys; each further layer adds all pairs and all encryptions (under
    available keys) of the previous one.  Exponential; meant for small
    inputs and as a cross-check of :meth:`Knowledge.derivable`.
    """
    kn = Knowledge(k0, model)
    layer = set(kn.base_terms())
    keys = kn.available_keys()
    for _ in range(model.synth_depth - 1):
        cur = sorted(layer)
        nxt = set(layer)
        for a in cur:
            for b in cur:
                nxt.add(Pair(a, b))
            for k in keys:
                nxt.add(Cipher(a, k))
        layer = nxt
    return frozenset(layer)


def enumerate_dy_strands(terms: Iterable, model: DYModel) -> Iterator[tuple]:
    """Every instance of the eight penetrator shapes over ``terms``.

    Keys for KeyEmit, Encryption and Decryption come from ``model``'s
    emission list plus the keys occurring in ``terms``.
    """
    terms = sorted(set(terms))
    keys = set(model.known_keys.emit)
    for t in terms:
        for u in subterms(t):
            if isinstance(u, Cipher):
                keys.add(u.key)
                keys.add(inverse(u.key))
            elif isinstance(u, KeyLit):
                keys.add(u.key)
    keys = sorted(keys)
    P, M = (lambda t: SignedTerm(True, t)), (lambda t: SignedTerm(False, t))
    for t in terms:
        if isinstance(t, Text):
            yield (P(t),)
        yield (M(t),)
        yield (M(t), P(t), P(t))
        if isinstance(t, Pair):
            yield (M(t), P(t.left), P(t.right))
    for k in model.known_keys.emit:
        yield (P(KeyLit(k)),)
    for g in terms:
        for h in terms:
            yield (M(g), M(h), P(Pair(g, h)))
    for k in keys:
        for m in terms:
            yield (M(KeyLit(k)), M(m), P(Cipher(m, k)))
            yield (M(KeyLit(inverse(k))), M(Cipher(m, k)), P(m))


# --- maximal penetrator ---------------------------------------------------

@dataclass(frozen=True)
class MaximalModel:
    """Any strand that neither originates ``#SK(a,b)`` nor forges its ciphertexts."""

    a: str
    b: str

    @property
    def key(self) -> Key:
        return sk(self.a, self.b)

    def as_dy(self, text_universe=(), synth_depth: int = 2, emit: Iterable[Key] = ()) -> DYModel:
        """Operational form for search: K_P = every key but the protected one,
        and every ciphertext opens without its key."""
        return DYModel(all_except({self.key}, emit), frozenset(text_universe), synth_depth,
                       decrypt_without_key=True)


def no_forge_cipher(s: Strand, key: Key) -> bool:
    tr = s.trace if isinstance(s, Strand) else tuple(s)
    st = s if isinstance(s, Strand) else Strand(0, tr)
    want = SignedTerm(False, KeyLit(key))
    for i, x in enumerate(tr):
        if not x.positive:
            continue
        for c in subterms(x.term):
            if isinstance(c, Cipher) and c.key == key and originates(st, c, i):
                if want not in tr[:i]:
                    return False
    return True


def is_maximal_penetrator_strand(s, model: MaximalModel) -> bool:
    st = s if isinstance(s, Strand) else Strand(0, tuple(s))
    k = KeyLit(model.key)
    if any(originates(st, k, i) for i in range(len(st.trace))):
        return False
    return no_forge_cipher(st, model.key)


@dataclass
class SubsumptionResult:
    ok: bool
    checked: int
    counterexample: dict | None = None

    def __bool__(self):
        return self.ok


def role_subsumed_by_maximal(template, model: MaximalModel, agents: Sequence,
                             nonces: Sequence = ("Na",), admission=None) -> SubsumptionResult:
    """Check every instantiation of ``template`` over the finite universe.

    Agent parameters range over ``agents``, every other parameter over
    ``nonces``.  ``admission(env)`` may exclude instantiations (the p1/p2
    predicates).  Returns the first failing instantiation, in canonical
    order, as a counterexample.
    """
    params = list(template.params)
    pools = []
    for v in params:
        pool = agents if v.kind == AGENT else nonces
        pools.append([x if isinstance(x, Text) else Text(x) for x in pool])
    checked = 0
    for combo in itertools.product(*pools):
        env = dict(zip(params, combo))
        if admission is not None and not admission({v.name: t for v, t in env.items()}):
            continue
        if not template.side_conditions_ok(env):
            continue
        trace = tuple(SignedTerm(x.positive, instantiate(x.term, env)) for x in template.trace)
        checked += 1
        if not is_maximal_penetrator_strand(Strand(0, trace), model):
            return SubsumptionResult(False, checked, {v.name: t.name for v, t in env.items()})
    return SubsumptionResult(True, checked)
