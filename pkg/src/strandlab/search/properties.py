"""Security properties evaluated on execution states.

A state is summarised as a list of :class:`SlotView` (one per honest
session slot).  Claimants and partners count only once they have executed
at least ``*_height`` nodes; by default the claimant must have finished.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

from ..terms import Text, instantiate, variables

__all__ = ["SlotView", "NonInjectiveAgreement", "InjectiveAgreement", "Injectivity",
           "Secrecy", "Violation", "PROPERTY_KINDS"]


class SlotView(NamedTuple):
    index: int
    role: str
    session: int
    pc: int
    length: int
    env: Mapping[str, object]  # param name -> ground term


@dataclass(frozen=True)
class Violation:
    message: str
    claimants: tuple[int, ...]
    partners: tuple[int, ...] = ()


def _passes(filt, env) -> bool:
    for name, vals in filt:
        t = env.get(name)
        if t is None or not (isinstance(t, Text) and t.name in vals):
            return False
    return True


def _filter_str(filt):
    return ", ".join(f"{k} in {{{','.join(v)}}}" for k, v in filt)


@dataclass(frozen=True)
class _Agreement:
    claimant: str
    partner: str
    params: tuple[str, ...]
    claimant_filter: tuple = ()
    claimant_height: int | None = None
    partner_height: int | None = None

    def _claimants(self, slots):
        out = []
        for s in slots:
            h = self.claimant_height or s.length
            if s.role == self.claimant and s.pc >= h and _passes(self.claimant_filter, s.env):
                out.append(s)
        return out

    def _agrees(self, c, p) -> bool:
        h = self.partner_height or p.length
        if p.role != self.partner or p.pc < h or p.index == c.index:
            return False
        return all(c.env.get(x) is not None and c.env.get(x) == p.env.get(x)
                   for x in self.params)

    def _desc(self, c):
        return ", ".join(f"{x}={c.env.get(x)}" for x in self.params)


@dataclass(frozen=True)
class NonInjectiveAgreement(_Agreement):
    kind = "noninjective-agreement"

    def check(self, slots, knowledge) -> Violation | None:
        for c in self._claimants(slots):
            if not any(self._agrees(c, p) for p in slots):
                return Violation(f"{self.claimant} session {c.session} completed with "
                                 f"{self._desc(c)} but no {self.partner} agrees", (c.index,))
        return None


@dataclass(frozen=True)
class InjectiveAgreement(_Agreement):
    """Standard form: an injective map from completed claimants to agreeing
    partners.  ``orig=True`` gives the dual form: every completed claimant has
    exactly one agreeing partner."""

    orig: bool = False
    kind = "injective-agreement"

    def check(self, slots, knowledge) -> Violation | None:
        claimants = self._claimants(slots)
        options = {c.index: [p.index for p in slots if self._agrees(c, p)] for c in claimants}
        for c in claimants:
            if not options[c.index]:
                return Violation(f"{self.claimant} session {c.session} completed with "
                                 f"{self._desc(c)} but no {self.partner} agrees", (c.index,))
        if self.orig:
            for c in claimants:
                if len(options[c.index]) > 1:
                    return Violation(f"{self.claimant} session {c.session} ({self._desc(c)}) "
                                     f"is matched by {len(options[c.index])} {self.partner} "
                                     "sessions", (c.index,), tuple(options[c.index]))
            return None
        match: dict[int, int] = {}

        def augment(ci, seen):
            for pi in options[ci]:
                if pi in seen:
                    continue
                seen.add(pi)
                if pi not in match or augment(match[pi], seen):
                    match[pi] = ci
                    return True
            return False

        for c in claimants:
            if not augment(c.index, set()):
                involved = tuple(sorted({c.index} | {match[p] for p in options[c.index]}))
                return Violation(f"{len(involved)} {self.claimant} sessions share "
                                 f"{len(options[c.index])} agreeing {self.partner} session(s)",
                                 involved, tuple(options[c.index]))
        return None

    @property
    def name(self):
        return "injective-agreement-orig" if self.orig else "injective-agreement"


@dataclass(frozen=True)
class Injectivity:
    """Two distinct completed sessions of ``role`` never share ``param``."""

    role: str
    param: str
    claimant_filter: tuple = ()
    claimant_height: int | None = None
    kind = "injectivity"

    def check(self, slots, knowledge) -> Violation | None:
        seen = {}
        for s in slots:
            h = self.claimant_height or s.length
            if s.role != self.role or s.pc < h or not _passes(self.claimant_filter, s.env):
                continue
            v = s.env.get(self.param)
            if v in seen:
                return Violation(f"two {self.role} sessions share {self.param}={v}",
                                 (seen[v], s.index))
            seen[v] = s.index
        return None


@dataclass(frozen=True)
class Secrecy:
    """The value of ``secret`` (a pattern over ``role``'s params) never
    becomes derivable once a filtered session of ``role`` has reached the
    claimant height."""

    role: str
    secret: object  # pattern over the role's parameters
    claimant_filter: tuple = ()
    claimant_height: int | None = None
    kind = "secrecy"

    def check(self, slots, knowledge) -> Violation | None:
        for s in slots:
            h = self.claimant_height or s.length
            if s.role != self.role or s.pc < h or not _passes(self.claimant_filter, s.env):
                continue
            val = _instantiate_by_name(self.secret, s.env)
            if val is not None and knowledge.derivable(val):
                return Violation(f"secret {val} of {self.role} session {s.session} "
                                 "is derivable by the penetrator", (s.index,))
        return None


def _instantiate_by_name(pattern, env_by_name):
    env = {}
    for v in variables(pattern):
        t = env_by_name.get(v.name)
        if t is None:
            return None
        env[v] = t
    return instantiate(pattern, env)


PROPERTY_KINDS = {
    "noninjective-agreement": NonInjectiveAgreement,
    "injective-agreement": InjectiveAgreement,
    "injectivity": Injectivity,
    "secrecy": Secrecy,
}
