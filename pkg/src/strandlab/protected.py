"""Protected occurrences of a secret.

A secret is *protected* in a term when every occurrence of it sits inside a
ciphertext of an allowed shape.  The first node of a bundle carrying an
unprotected occurrence is what an agreement proof inspects: for a challenge
sent under a shared key it must be the responder that decrypted it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .terms import Cipher, Key, KeyLit, Pair, Text, Var, sk, subterm, unify

__all__ = ["ProtectionSpec", "protected", "literal_protected", "simple_auth_protection",
           "subterm_condition", "first_unprotected", "unprotected_terms"]


@dataclass(frozen=True)
class ProtectionSpec:
    """``secret`` may only appear inside ``{payload}key`` for an allowed shape.

    Shapes may contain variables; a cipher is allowed when it is an instance
    of some shape.
    """

    secret: object
    allowed_shapes: tuple = ()

    def __post_init__(self):
        shapes = tuple((k, p) for k, p in self.allowed_shapes)
        for k, p in shapes:
            if not isinstance(k, (Key, Var)):
                raise TypeError(f"shape key must be a key, got {k!r}")
            if not subterm(self.secret, p):
                raise ValueError(f"shape payload {p} does not contain the secret {self.secret}")
        object.__setattr__(self, "allowed_shapes", shapes)

    def allows(self, c: Cipher) -> bool:
        return any(unify(Cipher(p, k), c, typed=False) is not None
                   for k, p in self.allowed_shapes)


def protected(spec: ProtectionSpec, t) -> bool:
    if t == spec.secret:
        return False
    if isinstance(t, (Text, KeyLit)):
        return True
    if isinstance(t, Pair):
        return protected(spec, t.left) and protected(spec, t.right)
    if isinstance(t, Cipher):
        return spec.allows(t) or protected(spec, t.payload)
    raise TypeError(f"not a ground term: {t!r}")


def simple_auth_protection(a="A", b="B", na=Text("Na")) -> ProtectionSpec:
    """The shape ``{Na . A}sk(A,B)`` and nothing else."""
    return ProtectionSpec(na, ((sk(a, b), Pair(na, Text(a))),))


def literal_protected(a, b, na, t) -> bool:
    """Direct transcription of the hand-written fixpoint, kept as an oracle.

    Each branch mirrors one match arm; ``na`` must be a text atom.
    """
    if isinstance(t, Text):
        return t != na
    if isinstance(t, KeyLit):
        return True
    if isinstance(t, Cipher) and isinstance(t.payload, Pair):
        g, h = t.payload.left, t.payload.right
        return ((t.key == sk(a, b) and g == na and h == Text(a))
                or (literal_protected(a, b, na, g) and literal_protected(a, b, na, h)))
    if isinstance(t, Cipher):
        return literal_protected(a, b, na, t.payload)
    if isinstance(t, Pair):
        return literal_protected(a, b, na, t.left) and literal_protected(a, b, na, t.right)
    raise TypeError(f"not a ground term: {t!r}")


def subterm_condition(secret, allowed: Cipher, t) -> bool:
    """The older predicate: the secret occurs and the allowed cipher does not."""
    return subterm(secret, t) and not subterm(allowed, t)


def first_unprotected(bundle, spec: ProtectionSpec) -> set:
    """Minimal bundle nodes whose term leaves the secret unprotected."""
    return bundle.minimal_nodes(lambda b, n: not protected(spec, b.node_term(n).term))


def unprotected_terms(spec: ProtectionSpec, terms: Iterable) -> list:
    return [t for t in terms if not protected(spec, t)]
