"""Key-management API strands and bounded soundness checking.

A device key ``k`` of type ``T`` is held as the handle ``{#k . $T}master``.
The master key never leaves the device and is not known to the
penetrator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..penetrator import DYModel, KeySet
from ..protocols import make_role
from ..search import ProtocolSpec, SearchConfig, Violation, check_property
from ..terms import Cipher, Key, KeyLit, Pair, Text, master, raw
from .closure import ClosureKind, ClosureResult, closure, secure_types
from .policy import DATA, DEC, ENC, Policy

__all__ = ["DeviceState", "api_strand_templates", "handles_in", "KmpSoundness",
           "kmp_config", "check_kmp_soundness_bounded", "role_guard"]


@dataclass(frozen=True)
class DeviceState:
    handles: frozenset  # (Key, type name)

    def __post_init__(self):
        for k, _ in self.handles:
            if k == master():
                raise ValueError("the master key cannot be held as a handle")

    def types_of(self, k: Key) -> frozenset[str]:
        return frozenset(t for kk, t in self.handles if kk == k)


def handles_in(terms) -> DeviceState:
    out = set()
    for t in terms:
        if (isinstance(t, Cipher) and t.key == master() and isinstance(t.payload, Pair)
                and isinstance(t.payload.left, KeyLit) and isinstance(t.payload.right, Text)):
            out.add((t.payload.left.key, t.payload.right.name))
    return DeviceState(frozenset(out))


def _handle(var: str, ty: str) -> str:
    return f"{{#{var} . ${ty}}}master"


def api_strand_templates(p: Policy) -> ProtocolSpec:
    """One role per API operation the policy enables."""
    roles = []
    for t in p.types:
        roles.append(make_role(f"create-{t}", "k:key", [f"+ {_handle('k', t)}"], fresh=("k",)))
    for t in p.types:
        if p.allows(t, ENC, DATA):
            roles.append(make_role(f"encrypt-{t}", "m:nonce k:key",
                                   ["- $m", f"- {_handle('k', t)}", "+ {$m}k"]))
    for t in p.types:
        if p.allows(t, DEC, DATA):
            roles.append(make_role(f"decrypt-{t}", "m:term k:key",
                                   ["- {$m}k", f"- {_handle('k', t)}", "+ $m"]))
    for e in sorted(p.edges):
        if e.dst == DATA:
            continue
        # wrapping key type e.src, wrapped key type e.dst
        if e.op == ENC:
            roles.append(make_role(f"wrap-{e.src}-{e.dst}", "k1:key k2:key",
                                   [f"- {_handle('k1', e.dst)}", f"- {_handle('k2', e.src)}",
                                    "+ {#k1}k2"]))
        else:
            roles.append(make_role(f"unwrap-{e.src}-{e.dst}", "k1:key k2:key",
                                   ["- {#k1}k2", f"- {_handle('k2', e.src)}",
                                    f"+ {_handle('k1', e.dst)}"]))
    return ProtocolSpec(f"kmp-{len(p.types)}-types", tuple(roles))


def role_guard(role_name: str):
    """The policy directive enabling a role, or None for create."""
    op, _, rest = role_name.partition("-")
    if op == "create":
        return None
    if op in ("encrypt", "decrypt"):
        return (rest, ENC if op == "encrypt" else DEC, DATA)
    src, dst = rest.split("-")
    return (src, ENC if op == "wrap" else DEC, dst)


@dataclass(frozen=True)
class KmpSoundness:
    """Every handle type lies in the reach set of the key's creation type,
    and no key created with a secure type becomes known to the penetrator."""

    result: ClosureResult
    policy: Policy | None = None
    kind = "kmp-soundness"

    @property
    def secure(self) -> frozenset[str]:
        return secure_types(self.result)

    def check(self, slots, knowledge) -> Violation | None:
        created = {}
        for s in slots:
            if s.role.startswith("create-") and s.pc >= 1:
                created[s.env["k"]] = (s.role[len("create-"):], s.index)
        state = handles_in(knowledge.facts)
        for k, ty in sorted(state.handles, key=lambda h: (str(h[0]), h[1])):
            origin = created.get(k)
            if origin is not None and ty not in self.result.reach[origin[0]]:
                return Violation(f"key {k} created as {origin[0]} holds type {ty}, outside "
                                 f"R_{origin[0]} = {sorted(self.result.reach[origin[0]])}",
                                 (origin[1],))
        for k, (ty, idx) in sorted(created.items(), key=lambda kv: kv[1][1]):
            if ty in self.secure and knowledge.derivable(KeyLit(k)):
                return Violation(f"key {k} of secure type {ty} is known to the penetrator", (idx,))
        return None


def kmp_config(p: Policy, sessions: int = 1, synth_depth: int = 3, creates: int | None = None,
               **kw) -> SearchConfig:
    """Every API role runs ``sessions`` times, create roles ``creates`` times."""
    spec = api_strand_templates(p)
    creates = sessions if creates is None else creates
    counts = tuple((r.name, creates if r.name.startswith("create-") else sessions)
                   for r in spec.roles)
    pen = DYModel(KeySet("only", frozenset({raw("e")}), (raw("e"),)),
                  frozenset(p.types), synth_depth)
    args = dict(sessions=counts, agents=tuple(p.types), penetrator=pen, nonces=(Text("N0"),))
    args.update(kw)
    return SearchConfig(**args)


def check_kmp_soundness_bounded(p: Policy, kind=ClosureKind.REFINED, cfg: SearchConfig | None = None,
                                closure_fn: Callable | None = None):
    """Bounded search for a run contradicting the closure's predictions.

    ``closure_fn(policy, kind)`` replaces the closure, so a deliberately
    wrong one can be shown to be caught.
    """
    result = (closure_fn or closure)(p, ClosureKind.parse(kind))
    cfg = cfg or kmp_config(p)
    return check_property(api_strand_templates(p), KmpSoundness(result, p), cfg)
