"""Policy closures: the implied relation => and the reachable sets R_K."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .policy import DATA, DEC, ENC, Edge, Policy

__all__ = ["ClosureKind", "ClosureResult", "closure", "secure_types", "closure_sets",
           "closure_report", "RULES"]


class ClosureKind(enum.Enum):
    ORIGINAL = "original"
    ORIGINAL5 = "original5"  # original plus the redundant decryption rule
    REFINED = "refined"

    @property
    def code(self) -> int:
        return {"original": _kernel.ORIGINAL, "original5": _kernel.ORIGINAL5,
                "refined": _kernel.REFINED}[self.value]

    @classmethod
    def parse(cls, s) -> "ClosureKind":
        if isinstance(s, ClosureKind):
            return s
        try:
            return cls(str(s).lower())
        except ValueError:
            raise ValueError(f"unknown closure kind {s!r}; expected one of "
                             f"{', '.join(k.value for k in cls)}") from None


@dataclass(frozen=True)
class ClosureResult:
    kind: ClosureKind
    types: tuple[str, ...]
    implied: frozenset[Edge]
    reach: dict

    def reachable(self, t: str) -> frozenset[str]:
        return self.reach[t]

    def implies(self, src, op, dst) -> bool:
        return Edge(src, op, dst) in self.implied

    def __eq__(self, other):
        return (isinstance(other, ClosureResult) and self.implied == other.implied
                and self.reach == other.reach)

    __hash__ = None


def _matrices(p: Policy):
    n = len(p.types)
    enc = np.zeros((n, n), dtype=np.uint8)
    dec = np.zeros((n, n), dtype=np.uint8)
    for e in p.edges:
        (enc if e.op == ENC else dec)[p.index(e.src), p.index(e.dst)] = 1
    pdec = dec.copy()
    d = p.index(DATA)
    enc[d, d] = dec[d, d] = 1
    return enc, dec, pdec


def _result(p: Policy, kind: ClosureKind, enc, dec, reach) -> ClosureResult:
    ts = p.types
    implied = set()
    for op, m in ((ENC, enc), (DEC, dec)):
        for i, j in zip(*np.nonzero(m)):
            implied.add(Edge(ts[i], op, ts[j]))
    rsets = {ts[i]: frozenset(ts[j] for j in np.nonzero(reach[i])[0]) for i in range(len(ts))}
    return ClosureResult(kind, ts, frozenset(implied), rsets)


def closure(p: Policy, kind=ClosureKind.REFINED) -> ClosureResult:
    kind = ClosureKind.parse(kind)
    enc, dec, pdec = _matrices(p)
    e, d, r = _kernel.closure_batch(enc[None], dec[None], pdec[None], kind.code)
    return _result(p, kind, e[0], d[0], r[0])


def secure_types(c: ClosureResult) -> frozenset[str]:
    """Types whose reachable set avoids the data type."""
    return frozenset(t for t, r in c.reach.items() if DATA not in r)


# --- rule-at-a-time engine --------------------------------------------------
#
# Each rule is a function of the current facts returning new facts; the
# engine applies them in a caller-chosen order until nothing changes.  Used
# to check that the result does not depend on rule order.

def _r4(enc, dec, reach, pol, types):
    return set(), set(), {(j, z) for (k, j) in enc for (k2, z) in dec if k == k2}


def _r5(enc, dec, reach, pol, types):
    return set(), {(z, j) for (k, j) in pol for (z, k2) in reach if k == k2}, set()


def _r6(enc, dec, reach, pol, types):
    return {(z, j) for (k, j) in enc for z in types
            if (z, k) in reach or (k, z) in reach}, set(), set()


def _r7(enc, dec, reach, pol, types):
    return {(j, z) for (j, k) in enc for z in types
            if (z, k) in reach or (k, z) in reach}, set(), set()


def _r5b(enc, dec, reach, pol, types):
    return {(z, w) for (k, j) in enc for (z, k2) in reach if k2 == k
            for (w, j2) in reach if j2 == j}, set(), set()


def _r6b(enc, dec, reach, pol, types):
    return set(), {(z, j) for (k, j) in dec for (z, k2) in reach if k2 == k}, set()


RULES = {
    ClosureKind.ORIGINAL: (_r4, _r6, _r7),
    ClosureKind.ORIGINAL5: (_r4, _r5, _r6, _r7),
    ClosureKind.REFINED: (_r4, _r5b, _r6b),
}


def closure_sets(p: Policy, kind=ClosureKind.REFINED, order=None, seed=None) -> ClosureResult:
    """Same fixpoint, one rule at a time.  ``order`` permutes the rules;
    ``seed`` shuffles them afresh on every round."""
    kind = ClosureKind.parse(kind)
    rules = list(RULES[kind])
    if order is not None:
        rules = [rules[i] for i in order]
    rng = random.Random(seed) if seed is not None else None
    enc = {(e.src, e.dst) for e in p.edges if e.op == ENC} | {(DATA, DATA)}
    pol = {(e.src, e.dst) for e in p.edges if e.op == DEC}
    dec = pol | {(DATA, DATA)}
    reach = {(t, t) for t in p.types}
    changed = True
    while changed:
        changed = False
        if rng is not None:
            rng.shuffle(rules)
        for rule in rules:
            ne, nd, nr = rule(enc, dec, reach, pol, p.types)
            if not (ne <= enc and nd <= dec and nr <= reach):
                enc |= ne
                dec |= nd
                reach |= nr
                changed = True
    implied = frozenset({Edge(a, ENC, b) for a, b in enc} | {Edge(a, DEC, b) for a, b in dec})
    rsets = {t: frozenset(y for x, y in reach if x == t) for t in p.types}
    return ClosureResult(kind, p.types, implied, rsets)


def closure_report(p: Policy, kind=ClosureKind.REFINED) -> dict:
    c = closure(p, kind)
    return {
        "kind": c.kind.value,
        "implied": [str(e) for e in sorted(c.implied)],
        "reach": {t: sorted(c.reach[t], key=p.types.index) for t in p.types},
        "secure": sorted(secure_types(c), key=p.types.index),
    }
