"""Typed key-management policies and their text format.

A policy file declares the types on one line and then one directive per
line::

    types: K1 K2 K3 D
    K1 -enc-> K2
    K1 -dec-> K2

``#`` starts a comment.  ``D`` is the generic data type and is always
present.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = ["DATA", "ENC", "DEC", "Edge", "Policy", "PolicyError", "parse_policy",
           "format_policy", "secure_templates", "load_policy"]

DATA = "D"
ENC = "enc"
DEC = "dec"
OPS = (ENC, DEC)


class PolicyError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int = 0):
        self.line = line
        self.col = col
        self.reason = message
        where = f"line {line}, column {col + 1}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True, order=True)
class Edge:
    src: str
    op: str
    dst: str

    def __str__(self):
        return f"{self.src} -{self.op}-> {self.dst}"


@dataclass(frozen=True)
class Policy:
    types: tuple[str, ...]
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        types = tuple(dict.fromkeys(self.types))
        if DATA not in types:
            types = types + (DATA,)
        object.__setattr__(self, "types", types)
        edges = frozenset(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        for e in edges:
            if e.op not in OPS:
                raise PolicyError(f"unknown operation {e.op!r} in {e}")
            for t in (e.src, e.dst):
                if t not in types:
                    raise PolicyError(f"edge {e} uses undeclared type {t!r}")
        object.__setattr__(self, "edges", edges)

    def index(self, t: str) -> int:
        return self.types.index(t)

    def allows(self, src: str, op: str, dst: str) -> bool:
        return Edge(src, op, dst) in self.edges

    def with_edge(self, src: str, op: str, dst: str) -> "Policy":
        return Policy(self.types, self.edges | {Edge(src, op, dst)})


_EDGE = re.compile(r"^(\S+)\s*-(enc|dec)->\s*(\S+)$")


def parse_policy(text: str) -> Policy:
    types = None
    edges = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip())
        if line.startswith("types:"):
            if types is not None:
                raise PolicyError("types declared twice", n, col)
            types = line[len("types:"):].split()
            continue
        m = _EDGE.match(line)
        if not m:
            raise PolicyError(f"expected 'types: ...' or 'K1 -enc-> K2', got {line!r}", n, col)
        if types is None:
            raise PolicyError("directive before the types declaration", n, col)
        src, op, dst = m.groups()
        for name, off in ((src, m.start(1)), (dst, m.start(3))):
            if name not in types and name != DATA:
                raise PolicyError(f"undeclared type {name!r}", n, col + off)
        edges.append(Edge(src, op, dst))
    if types is None:
        raise PolicyError("missing 'types:' declaration")
    return Policy(tuple(types), frozenset(edges))


def format_policy(p: Policy) -> str:
    lines = ["types: " + " ".join(p.types)]
    lines += [str(e) for e in sorted(p.edges)]
    return "\n".join(lines) + "\n"


def load_policy(path) -> Policy:
    with open(path, encoding="utf-8") as fh:
        return parse_policy(fh.read())


def secure_templates() -> Policy:
    """The secure templates policy: K1 wraps, K2 holds unwrapped keys."""
    return parse_policy(
        """types: K1 K2 K3 D
K1 -enc-> K1
K1 -enc-> K2
K1 -dec-> K2
K1 -enc-> K3
K2 -enc-> D
K2 -dec-> K2
K3 -enc-> D
K3 -dec-> D
""")
