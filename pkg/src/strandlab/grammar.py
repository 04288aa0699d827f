"""Text syntax for terms and signed terms.

ASCII form (the interchange format)::

    $name            text atom
    #key             key sent as a message
    t1 . t2          concatenation, right-associative
    {t}key           encryption
    sk(A,B) pk(A) pk-1(A) master dev(3) raw(e)

The pretty form used in diagnostics (``$A ⋅ $B``, ``⟨ t ⟩_(SK A B)``,
``#(SK A B)``, ``inv(PK A)``) parses as well.
"""

from __future__ import annotations

import re
from typing import Mapping

from .terms import (AGENT, KEY, TERM, Cipher, Key, KeyLit, Pair, Text, Var)

__all__ = ["GrammarError", "parse_term", "parse_signed", "parse_key",
           "render", "render_key", "render_signed"]


class GrammarError(ValueError):
    def __init__(self, message: str, text: str = "", col: int = 0, line: int | None = None):
        self.text = text
        self.col = col
        self.line = line
        self.reason = message
        where = f"line {line}, column {col + 1}" if line is not None else f"column {col + 1}"
        super().__init__(f"{where}: {message}")


_TOKEN = re.compile(r"""
    \s*(?:
      (?P<pkinv>pk-1)
    | (?P<close>⟩_)
    | (?P<name>[A-Za-z0-9_']+)
    | (?P<punct>[$#?.⋅{}(),⟨])
    )""", re.VERBOSE)


def _tokenize(text: str):
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise GrammarError(f"unexpected character {text[col]!r}", text, col)
        kind = m.lastgroup
        val = m.group(kind)
        start = m.start(kind)
        if kind == "punct" and val == "⋅":
            val = "."
        toks.append((kind, val, start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, params: Mapping[str, Var] | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.params = dict(params or {})
        self.locals: dict[str, Var] = {}

    def local(self, name, kind):
        # one variable per name, whatever position introduced it first
        v = self.locals.get(name)
        if v is None:
            v = self.locals[name] = Var(name, kind, local=True)
        return v

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise GrammarError(msg, self.text, tok[2])

    def expect(self, val):
        tok = self.next()
        if tok[1] != val:
            self.i -= 1
            self.fail(f"expected {val!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def term(self):
        left = self.atom()
        if self.peek()[1] == ".":
            self.next()
            return Pair(left, self.term())
        return left

    def atom(self):
        tok = self.next()
        kind, val, _ = tok
        if val == "$":
            name = self.name()
            var = self.params.get(name)
            if var is not None and var.kind != KEY:
                return var
            return Text(name)
        if val == "?":
            return self.local(self.name(), TERM)
        if val == "#":
            return KeyLit(self.key())
        if val == "{":
            payload = self.term()
            self.expect("}")
            return Cipher(payload, self.key())
        if val == "⟨":
            payload = self.term()
            if self.next()[0] != "close":
                self.i -= 1
                self.fail("expected '⟩_'")
            self.expect("(")
            k = self.key()
            self.expect(")")
            return Cipher(payload, k)
        if val == "(":
            inner = self.term()
            self.expect(")")
            return inner
        self.i -= 1
        self.fail(f"unexpected {val or 'end of input'!r}", tok)

    def name(self):
        tok = self.next()
        if tok[0] != "name":
            self.i -= 1
            self.fail("expected a name", tok)
        return tok[1]

    def key_arg(self):
        if self.peek()[1] == "?":
            self.next()
            return self.local(self.name(), AGENT)
        if self.peek()[1] == "$":
            self.next()
        name = self.name()
        var = self.params.get(name)
        if var is not None:
            return var
        return name

    def key(self):
        tok = self.next()
        kind, val, _ = tok
        if val == "(":
            k = self.key()
            self.expect(")")
            return k
        if val == "?":
            return self.local(self.name(), KEY)
        if kind == "pkinv":
            self.expect("(")
            a = self.key_arg()
            self.expect(")")
            return Key("pvk", (a,))
        if kind != "name":
            self.i -= 1
            self.fail("expected a key", tok)
        if val in ("sk", "pk", "dev", "raw") and self.peek()[1] == "(":
            self.next()
            if val == "sk":
                a = self.key_arg()
                self.expect(",")
                b = self.key_arg()
                self.expect(")")
                return Key("sk", (a, b))
            if val == "dev":
                idx = self.name()
                self.expect(")")
                if not idx.isdigit():
                    self.fail("device index must be a number")
                return Key("dev", (int(idx),))
            if val == "raw":
                nm = self.name()
                self.expect(")")
                return Key("raw", (nm,))
            a = self.key_arg()
            self.expect(")")
            return Key("pk", (a,))
        if val in ("master", "M"):
            return Key("master")
        if val == "SK":
            return Key("sk", (self.key_arg(), self.key_arg()))
        if val == "PK":
            return Key("pk", (self.key_arg(),))
        if val == "inv":
            self.expect("(")
            inner = self.key()
            self.expect(")")
            from .terms import inverse
            if isinstance(inner, Var):
                self.fail("cannot invert a key variable")
            return inverse(inner)
        var = self.params.get(val)
        if var is not None and var.kind == KEY:
            return var
        self.i -= 1
        self.fail(f"unknown key constructor {val!r}", tok)

    def done(self):
        if self.peek()[0] != "end":
            self.fail(f"trailing input {self.peek()[1]!r}")


def parse_term(text: str, params: Mapping[str, Var] | None = None):
    p = _Parser(text, params)
    t = p.term()
    p.done()
    return t


def parse_key(text: str, params: Mapping[str, Var] | None = None):
    p = _Parser(text, params)
    k = p.key()
    p.done()
    return k


def parse_signed(text: str, params: Mapping[str, Var] | None = None):
    """``+ t`` / ``- t`` (also ``⊕``/``⊖``)."""
    from .strands import SignedTerm
    s = text.lstrip()
    if not s:
        raise GrammarError("empty signed term", text, 0)
    off = len(text) - len(s)
    if s[0] in "+⊕":
        pos = True
    elif s[0] in "-⊖":
        pos = False
    else:
        raise GrammarError("signed term must start with '+' or '-'", text, off)
    try:
        t = parse_term(s[1:], params)
    except GrammarError as e:
        raise GrammarError(e.reason, text, e.col + off + 1) from None
    return SignedTerm(pos, t)


# --- rendering ------------------------------------------------------------

def _arg(a, pretty):
    if isinstance(a, Var):
        return ("?" if a.local else "") + a.name
    return str(a)


def render_key(k, pretty: bool = False) -> str:
    if isinstance(k, Var):
        return ("?" if k.local else "") + k.name
    a = [_arg(x, pretty) for x in k.args]
    if pretty:
        return {"sk": lambda: f"SK {a[0]} {a[1]}" if a else "",
                "pk": lambda: f"PK {a[0]}",
                "pvk": lambda: f"inv(PK {a[0]})",
                "master": lambda: "M",
                "dev": lambda: f"dev({a[0]})",
                "raw": lambda: f"raw({a[0]})"}[k.kind]()
    return {"sk": lambda: f"sk({a[0]},{a[1]})",
            "pk": lambda: f"pk({a[0]})",
            "pvk": lambda: f"pk-1({a[0]})",
            "master": lambda: "master",
            "dev": lambda: f"dev({a[0]})",
            "raw": lambda: f"raw({a[0]})"}[k.kind]()


def render(t, pretty: bool = False) -> str:
    if isinstance(t, Var):
        return ("?" if t.local else "$") + t.name
    if isinstance(t, Text):
        return "$" + t.name
    if isinstance(t, KeyLit):
        k = render_key(t.key, pretty)
        if pretty and not isinstance(t.key, Var) and " " in k:
            return f"#({k})"
        return "#" + k
    if isinstance(t, Pair):
        left = render(t.left, pretty)
        if isinstance(t.left, Pair):
            left = f"({left})"
        dot = " ⋅ " if pretty else " . "
        return left + dot + render(t.right, pretty)
    if isinstance(t, Cipher):
        if pretty:
            return f"⟨ {render(t.payload, True)} ⟩_({render_key(t.key, True)})"
        return "{" + render(t.payload) + "}" + render_key(t.key)
    if isinstance(t, Key):
        return render_key(t, pretty)
    raise TypeError(f"not a term: {t!r}")


def render_signed(st, pretty: bool = False) -> str:
    if pretty:
        return ("⊕ " if st.positive else "⊖ ") + render(st.term, True)
    return ("+ " if st.positive else "- ") + render(st.term)
