"""Symbolic terms: text atoms, keys, concatenation and encryption.

Terms are immutable and hash-consed by value (the hash is computed once at
construction).  Patterns reuse the same classes with :class:`Var` leaves;
a pattern without variables is a ground term.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Union

__all__ = [
    "Key", "Term", "Text", "KeyLit", "Pair", "Cipher", "Var",
    "sk", "pk", "pvk", "master", "dev", "raw",
    "inverse", "subterm", "subterms", "depth", "is_ground", "variables",
    "instantiate", "unify", "unify_all", "sort_key", "pair_all",
    "AGENT", "NONCE", "TERM", "KEY",
]

AGENT = "agent"
NONCE = "nonce"
TERM = "term"
KEY = "key"
VAR_KINDS = (AGENT, NONCE, TERM, KEY)

# Key constructors.  sk is the shared symmetric key, pk/pvk the public and
# private halves of an agent's key pair.
KEY_KINDS = ("sk", "pk", "pvk", "master", "dev", "raw")
_KEY_ARITY = {"sk": 2, "pk": 1, "pvk": 1, "master": 0, "dev": 1, "raw": 1}


class Var:
    """Pattern variable.  ``local`` marks variables scoped to a side condition."""

    __slots__ = ("name", "kind", "local", "_h")

    def __init__(self, name: str, kind: str = TERM, local: bool = False):
        if kind not in VAR_KINDS:
            raise ValueError(f"unknown variable kind {kind!r}")
        self.name = name
        self.kind = kind
        self.local = local
        self._h = hash(("var", name, kind, local))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (isinstance(other, Var) and self.name == other.name
                and self.kind == other.kind and self.local == other.local)

    def __reduce__(self):
        return (Var, (self.name, self.kind, self.local))

    def __repr__(self):
        return f"Var({self.name!r}, {self.kind!r})"

    def __str__(self):
        return ("?" if self.local else "$") + self.name


KeyArg = Union[str, int, Var]


class Key:
    """A key built from one of the fixed constructors.

    ``sk`` normalises its two agents into sorted order, so the shared key of
    A and B is the same object whichever way round it was written.
    """

    __slots__ = ("kind", "args", "_h")

    def __init__(self, kind: str, args: tuple = ()):
        if kind not in _KEY_ARITY:
            raise ValueError(f"unknown key constructor {kind!r}")
        args = tuple(args)
        if len(args) != _KEY_ARITY[kind]:
            raise ValueError(f"{kind} takes {_KEY_ARITY[kind]} argument(s)")
        if kind == "sk" and not any(isinstance(a, Var) for a in args):
            args = tuple(sorted(args))
        self.kind = kind
        self.args = args
        self._h = hash(("key", kind, args))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (self is other or isinstance(other, Key) and self._h == other._h
                and self.kind == other.kind and self.args == other.args)

    def __lt__(self, other):
        return _key_sort(self) < _key_sort(other)

    def __reduce__(self):
        return (Key, (self.kind, self.args))

    def __repr__(self):
        return f"Key({self.kind!r}, {self.args!r})"

    def __str__(self):
        from .grammar import render_key
        return render_key(self, pretty=True)

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)


def sk(a, b) -> Key:
    return Key("sk", (a, b))


def pk(a) -> Key:
    return Key("pk", (a,))


def pvk(a) -> Key:
    return Key("pvk", (a,))


def master() -> Key:
    return Key("master")


def dev(i: int) -> Key:
    return Key("dev", (i,))


def raw(name: str) -> Key:
    return Key("raw", (name,))


def inverse(k: Key) -> Key:
    """Inverse key: swaps the halves of a key pair, identity otherwise."""
    if k.kind == "pk":
        return Key("pvk", k.args)
    if k.kind == "pvk":
        return Key("pk", k.args)
    return k


class Term:
    __slots__ = ()
    tag = -1

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)

    def __str__(self):
        from .grammar import render
        return render(self, pretty=True)


class Text(Term):
    __slots__ = ("name", "_h")
    tag = 0

    def __init__(self, name: str):
        self.name = name
        self._h = hash(("text", name))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return self is other or isinstance(other, Text) and self.name == other.name

    def __reduce__(self):
        return (Text, (self.name,))

    def __repr__(self):
        return f"Text({self.name!r})"


class KeyLit(Term):
    """A key sent as a message (``#k``).  ``key`` may be a key variable."""

    __slots__ = ("key", "_h")
    tag = 1

    def __init__(self, key: Key | Var):
        self.key = key
        self._h = hash(("keylit", key))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return self is other or isinstance(other, KeyLit) and self.key == other.key

    def __reduce__(self):
        return (KeyLit, (self.key,))

    def __repr__(self):
        return f"KeyLit({self.key!r})"


class Pair(Term):
    __slots__ = ("left", "right", "_h")
    tag = 2

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self._h = hash(("pair", left, right))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (self is other or isinstance(other, Pair) and self._h == other._h
                and self.left == other.left and self.right == other.right)

    def __reduce__(self):
        return (Pair, (self.left, self.right))

    def __repr__(self):
        return f"Pair({self.left!r}, {self.right!r})"


class Cipher(Term):
    __slots__ = ("payload", "key", "_h")
    tag = 3

    def __init__(self, payload, key: Key | Var):
        self.payload = payload
        self.key = key
        self._h = hash(("enc", payload, key))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return (self is other or isinstance(other, Cipher) and self._h == other._h
                and self.payload == other.payload and self.key == other.key)

    def __reduce__(self):
        return (Cipher, (self.payload, self.key))

    def __repr__(self):
        return f"Cipher({self.payload!r}, {self.key!r})"


def pair_all(*parts):
    """Right-associated concatenation ``a . (b . (c ...))``."""
    if not parts:
        raise ValueError("pair_all needs at least one term")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Pair(p, out)
    return out


# --- structural queries ---------------------------------------------------

def subterm(t, u) -> bool:
    """True iff ``t`` occurs in ``u``.  Encryption keys are not searched."""
    while True:
        if t == u:
            return True
        if isinstance(u, Pair):
            if subterm(t, u.left):
                return True
            u = u.right
        elif isinstance(u, Cipher):
            u = u.payload
        else:
            return False


def subterms(u) -> Iterator:
    """All subterms of ``u`` (pre-order, keys excluded)."""
    yield u
    if isinstance(u, Pair):
        yield from subterms(u.left)
        yield from subterms(u.right)
    elif isinstance(u, Cipher):
        yield from subterms(u.payload)


def depth(t) -> int:
    if isinstance(t, Pair):
        return 1 + max(depth(t.left), depth(t.right))
    if isinstance(t, Cipher):
        return 1 + depth(t.payload)
    return 1


def variables(p) -> set[Var]:
    out: set[Var] = set()
    _collect(p, out)
    return out


def _collect(p, out):
    if isinstance(p, Var):
        out.add(p)
    elif isinstance(p, Pair):
        _collect(p.left, out)
        _collect(p.right, out)
    elif isinstance(p, Cipher):
        _collect(p.payload, out)
        _collect(p.key, out)
    elif isinstance(p, KeyLit):
        _collect(p.key, out)
    elif isinstance(p, Key):
        out.update(a for a in p.args if isinstance(a, Var))


def is_ground(p) -> bool:
    return not variables(p)


# --- ordering -------------------------------------------------------------

def _key_sort(k):
    if isinstance(k, Var):
        return (-1, k.name)
    return (KEY_KINDS.index(k.kind),
            tuple((0, a) if isinstance(a, int) else (1, str(a)) for a in k.args))


def sort_key(t):
    """Canonical structural order: constructor first, then children."""
    if isinstance(t, Text):
        return (0, t.name)
    if isinstance(t, KeyLit):
        return (1, _key_sort(t.key))
    if isinstance(t, Pair):
        return (2, sort_key(t.left), sort_key(t.right))
    if isinstance(t, Cipher):
        return (3, sort_key(t.payload), _key_sort(t.key))
    if isinstance(t, Var):
        return (-1, t.name)
    raise TypeError(f"not a term: {t!r}")


# --- substitution and matching -------------------------------------------

Bindings = Mapping[Var, object]


def _inst_key(k, env):
    if isinstance(k, Var):
        v = env.get(k, k)
        return v
    if k.is_ground:
        return k
    args = []
    for a in k.args:
        if isinstance(a, Var):
            v = env.get(a)
            if v is None:
                args.append(a)
            elif isinstance(v, Text):
                args.append(v.name)
            else:
                raise TypeError(f"key argument {a} bound to non-atom {v!r}")
        else:
            args.append(a)
    return Key(k.kind, tuple(args))


def instantiate(p, env: Bindings):
    """Substitute bound variables; unbound ones stay in place."""
    if isinstance(p, Var):
        return env.get(p, p)
    if isinstance(p, Text):
        return p
    if isinstance(p, KeyLit):
        return KeyLit(_inst_key(p.key, env))
    if isinstance(p, Pair):
        return Pair(instantiate(p.left, env), instantiate(p.right, env))
    if isinstance(p, Cipher):
        return Cipher(instantiate(p.payload, env), _inst_key(p.key, env))
    if isinstance(p, Key):
        return _inst_key(p, env)
    raise TypeError(f"not a pattern: {p!r}")


def _bind(v: Var, t, env: dict, typed: bool):
    cur = env.get(v)
    if cur is not None:
        return env if cur == t else None
    if v.kind == KEY:
        if not isinstance(t, Key):
            return None
    elif isinstance(t, Key):
        return None
    elif v.kind == AGENT or (v.kind == NONCE and typed):
        if not isinstance(t, Text):
            return None
    out = dict(env)
    out[v] = t
    return out


def _unify_key(kp, k: Key, env: dict, typed: bool) -> Iterator[dict]:
    if isinstance(kp, Var):
        e = _bind(kp, k, env, typed)
        if e is not None:
            yield e
        return
    if kp.kind != k.kind:
        return
    orders = [k.args]
    if kp.kind == "sk" and k.args[0] != k.args[1]:
        orders.append((k.args[1], k.args[0]))
    for args in orders:
        e = env
        for a, b in zip(kp.args, args):
            if isinstance(a, Var):
                e = _bind(a, Text(b), e, typed)
            elif a != b:
                e = None
            if e is None:
                break
        if e is not None:
            yield e
            if kp.is_ground:
                return


def unify_all(p, t, env: Bindings | None = None, typed: bool = True) -> Iterator[dict]:
    """All least extensions of ``env`` under which ``p`` instantiates to ``t``.

    ``t`` must be ground.  More than one result is possible only when a
    shared-key pattern with unbound agents meets a key between two distinct
    agents.
    """
    env = dict(env) if env else {}
    yield from _unify(p, t, env, typed)


def _unify(p, t, env, typed):
    if isinstance(p, Var):
        e = _bind(p, t, env, typed)
        if e is not None:
            yield e
        return
    if p.tag != t.tag:
        return
    if isinstance(p, Text):
        if p == t:
            yield env
    elif isinstance(p, KeyLit):
        yield from _unify_key(p.key, t.key, env, typed)
    elif isinstance(p, Pair):
        for e in _unify(p.left, t.left, env, typed):
            yield from _unify(p.right, t.right, e, typed)
    elif isinstance(p, Cipher):
        for e in _unify(p.payload, t.payload, env, typed):
            yield from _unify_key(p.key, t.key, e, typed)


def unify(p, t, env: Bindings | None = None, typed: bool = True) -> dict | None:
    """First (canonical) unifier of ``p`` against ground ``t``, or None."""
    return next(unify_all(p, t, env, typed), None)
