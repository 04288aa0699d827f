"""Strands, bundles and the causal order on bundle nodes."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

from .grammar import parse_signed, render_signed
from .terms import subterm

__all__ = [
    "SignedTerm", "Strand", "NodeRef", "Bundle", "BundleError",
    "originates", "origination_points", "uniquely_originates",
    "uniquely_originates_in", "is_strand_of", "bundle_from_json",
    "bundle_to_json", "bundle_to_dot",
]


@dataclass(frozen=True)
class SignedTerm:
    positive: bool
    term: object

    def __str__(self):
        return render_signed(self, pretty=True)

    @property
    def negative(self) -> bool:
        return not self.positive


def plus(t) -> SignedTerm:
    return SignedTerm(True, t)


def minus(t) -> SignedTerm:
    return SignedTerm(False, t)


@dataclass(frozen=True)
class Strand:
    id: int
    trace: tuple[SignedTerm, ...]
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trace", tuple(self.trace))
        if not self.trace:
            raise ValueError(f"strand {self.id} has an empty trace")

    def __len__(self):
        return len(self.trace)

    @property
    def name(self) -> str:
        return self.label if self.label is not None else str(self.id)


class NodeRef(NamedTuple):
    strand: int
    index: int


class BundleError(ValueError):
    """Bundle validation failure.  ``code`` is one of:

    dangling-negative, duplicate-incoming, edge-mismatch, edge-outside,
    cycle, non-prefix, unknown-node
    """

    def __init__(self, code: str, message: str, node: NodeRef | None = None):
        super().__init__(message)
        self.code = code
        self.node = node


Predicate = Callable[["Bundle", NodeRef], bool]


class Bundle:
    """A validated bundle.  Construction raises :class:`BundleError`."""

    def __init__(self, strands: Iterable[Strand], included: Mapping[int, int] | None = None,
                 edges: Iterable[tuple] = ()):
        self.strands: dict[int, Strand] = {}
        for s in strands:
            if s.id in self.strands:
                raise BundleError("unknown-node", f"duplicate strand id {s.id}")
            self.strands[s.id] = s
        if included is None:
            included = {sid: len(s) for sid, s in self.strands.items()}
        self.included: dict[int, int] = {}
        for sid, n in included.items():
            if sid not in self.strands:
                raise BundleError("unknown-node", f"inclusion refers to unknown strand {sid}")
            if not 0 <= n <= len(self.strands[sid]):
                raise BundleError("non-prefix", f"strand {self._sname(sid)} has "
                                  f"{len(self.strands[sid])} nodes, cannot include {n}")
            if n:
                self.included[sid] = n
        self.edges: frozenset[tuple[NodeRef, NodeRef]] = frozenset(
            (NodeRef(*a), NodeRef(*b)) for a, b in edges)
        self._validate()

    @classmethod
    def from_nodes(cls, strands: Iterable[Strand], nodes: Iterable[tuple], edges=()):
        """Build from an explicit node set, which must be prefix-closed per strand."""
        strands = list(strands)
        by_strand: dict[int, set[int]] = {}
        for sid, idx in nodes:
            by_strand.setdefault(sid, set()).add(idx)
        included = {}
        for sid, idxs in by_strand.items():
            n = max(idxs) + 1
            if idxs != set(range(n)):
                missing = min(set(range(n)) - idxs)
                label = next((s.name for s in strands if s.id == sid), str(sid))
                raise BundleError("non-prefix", f"node ({label},{max(idxs)}) included "
                                  f"without its predecessor ({label},{missing})",
                                  NodeRef(sid, missing))
            included[sid] = n
        return cls(strands, included, edges)

    def _sname(self, sid):
        s = self.strands.get(sid)
        return s.name if s else str(sid)

    def fmt(self, n: NodeRef) -> str:
        return f"({self._sname(n.strand)},{n.index})"

    def _validate(self):
        incoming: dict[NodeRef, NodeRef] = {}
        for a, b in sorted(self.edges):
            for n in (a, b):
                if n.strand not in self.strands or not 0 <= n.index < len(self.strands[n.strand]):
                    raise BundleError("unknown-node", f"edge endpoint {n} is not a node", n)
                if n not in self:
                    raise BundleError("edge-outside", f"edge endpoint {self.fmt(n)} "
                                      "is not included in the bundle", n)
            ta, tb = self.node_term(a), self.node_term(b)
            if not ta.positive or tb.positive:
                raise BundleError("edge-mismatch", f"edge {self.fmt(a)} -> {self.fmt(b)} "
                                  "must go from a positive to a negative node", b)
            if ta.term != tb.term:
                raise BundleError("edge-mismatch", f"edge {self.fmt(a)} -> {self.fmt(b)} "
                                  f"carries {ta.term} but {tb.term} is received", b)
            if b in incoming:
                raise BundleError("duplicate-incoming", f"negative node {self.fmt(b)} has "
                                  f"two incoming edges (from {self.fmt(incoming[b])} "
                                  f"and {self.fmt(a)})", b)
            incoming[b] = a
        for n in self.nodes():
            if self.node_term(n).negative and n not in incoming:
                raise BundleError("dangling-negative", f"dangling negative node at {self.fmt(n)}", n)
        order = self._topological()
        if order is None:
            raise BundleError("cycle", "communication and strand edges form a cycle")
        self._incoming = incoming

    # --- graph ----------------------------------------------------------

    def __contains__(self, n) -> bool:
        sid, idx = n
        return 0 <= idx < self.included.get(sid, 0)

    def nodes(self) -> Iterator[NodeRef]:
        for sid in sorted(self.included):
            for i in range(self.included[sid]):
                yield NodeRef(sid, i)

    def successors(self, n: NodeRef) -> list[NodeRef]:
        out = list(self._out.get(n, ()))
        if n.index + 1 < self.included.get(n.strand, 0):
            out.append(NodeRef(n.strand, n.index + 1))
        return out

    @cached_property
    def _out(self) -> dict[NodeRef, list[NodeRef]]:
        out: dict[NodeRef, list[NodeRef]] = {}
        for a, b in sorted(self.edges):
            out.setdefault(a, []).append(b)
        return out

    def _topological(self):
        indeg = {n: 0 for n in self.nodes()}
        for n in indeg:
            for m in self.successors(n):
                indeg[m] += 1
        queue = deque(n for n, d in indeg.items() if d == 0)
        order = []
        while queue:
            n = queue.popleft()
            order.append(n)
            for m in self.successors(n):
                indeg[m] -= 1
                if indeg[m] == 0:
                    queue.append(m)
        return order if len(order) == len(indeg) else None

    @cached_property
    def _reach(self) -> dict[NodeRef, frozenset[NodeRef]]:
        reach: dict[NodeRef, frozenset[NodeRef]] = {}
        for n in reversed(self._topological()):
            acc = {n}
            for m in self.successors(n):
                acc |= reach[m]
            reach[n] = frozenset(acc)
        return reach

    def _check(self, n):
        if n not in self:
            raise KeyError(f"node {n} is not in the bundle")
        return NodeRef(*n)

    def node_term(self, n) -> SignedTerm:
        sid, idx = n
        if n not in self:
            raise KeyError(f"node {tuple(n)} is not in the bundle")
        return self.strands[sid].trace[idx]

    def strand(self, sid: int) -> Strand:
        return self.strands[sid]

    def precedes(self, m, n) -> bool:
        """Reflexive-transitive closure of communication and strand edges."""
        m, n = self._check(m), self._check(n)
        return n in self._reach[m]

    def incoming(self, n) -> NodeRef | None:
        return self._incoming.get(NodeRef(*n))

    def minimal_nodes(self, pred: Predicate) -> set[NodeRef]:
        chosen = [n for n in self.nodes() if pred(self, n)]
        out = set()
        for n in chosen:
            if not any(m != n and n in self._reach[m] for m in chosen):
                out.add(n)
        return out

    def __len__(self):
        return sum(self.included.values())

    def __eq__(self, other):
        return (isinstance(other, Bundle) and self.included == other.included
                and self.edges == other.edges
                and {k: v.trace for k, v in self.strands.items()}
                == {k: v.trace for k, v in other.strands.items()})

    def __repr__(self):
        return f"<Bundle {len(self.strands)} strands, {len(self)} nodes, {len(self.edges)} edges>"


# --- origination ----------------------------------------------------------

def originates(s: Strand, t, i: int) -> bool:
    """``t`` originates at node i of ``s``: positive, contains t, first occurrence."""
    if not 0 <= i < len(s.trace):
        raise IndexError(f"node index {i} out of range for strand {s.name}")
    st = s.trace[i]
    if not st.positive or not subterm(t, st.term):
        return False
    return not any(subterm(t, s.trace[j].term) for j in range(i))


def origination_points(b: Bundle, t) -> list[NodeRef]:
    out = []
    for sid, n in sorted(b.included.items()):
        s = b.strands[sid]
        for i in range(n):
            if originates(s, t, i):
                out.append(NodeRef(sid, i))
                break
    return out


def uniquely_originates(b: Bundle, t) -> bool:
    """Exactly one bundle node originates ``t``."""
    return len(origination_points(b, t)) == 1


def uniquely_originates_in(strands: Iterable[Strand], t) -> bool:
    """Same check over whole strands rather than their included prefixes."""
    count = 0
    for s in strands:
        if any(originates(s, t, i) for i in range(len(s.trace))):
            count += 1
    return count == 1


def is_strand_of(s: Strand, b: Bundle) -> bool:
    other = b.strands.get(s.id)
    return (other is not None and other.trace == s.trace
            and b.included.get(s.id, 0) == len(s.trace))


# --- serialisation --------------------------------------------------------

def bundle_to_json(b: Bundle) -> dict:
    strands = []
    for sid in sorted(b.strands):
        s = b.strands[sid]
        entry = {"id": sid, "trace": [render_signed(x) for x in s.trace]}
        if s.label is not None:
            entry["label"] = s.label
        strands.append(entry)
    return {
        "strands": strands,
        "included": {str(k): v for k, v in sorted(b.included.items())},
        "edges": [[a.strand, a.index, c.strand, c.index] for a, c in sorted(b.edges)],
    }


def bundle_from_json(data: dict | str) -> Bundle:
    if isinstance(data, str):
        data = json.loads(data)
    strands = [Strand(int(e["id"]), tuple(parse_signed(x) for x in e["trace"]), e.get("label"))
               for e in data["strands"]]
    included = data.get("included")
    if included is not None:
        included = {int(k): int(v) for k, v in included.items()}
    edges = [((a, i), (c, j)) for a, i, c, j in data.get("edges", [])]
    return Bundle(strands, included, edges)


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def bundle_to_dot(b: Bundle, name: str = "bundle") -> str:
    """Graphviz rendering: one column per strand, => bold, -> labelled."""
    lines = [f'digraph "{_dot_escape(name)}" {{', "  rankdir=TB;", "  newrank=true;",
             '  node [shape=box, fontname="Helvetica"];']
    for sid in sorted(b.included):
        s = b.strands[sid]
        lines.append(f'  subgraph "cluster_{sid}" {{')
        lines.append(f'    label="{_dot_escape(s.name)}";')
        for i in range(b.included[sid]):
            lines.append(f'    n{sid}_{i} [label="{_dot_escape(str(s.trace[i]))}"];')
        for i in range(b.included[sid] - 1):
            lines.append(f"    n{sid}_{i} -> n{sid}_{i + 1} [style=bold, penwidth=2, weight=100];")
        lines.append("  }")
    for a, c in sorted(b.edges):
        label = _dot_escape(str(b.node_term(a).term))
        lines.append(f'  n{a.strand}_{a.index} -> n{c.strand}_{c.index} '
                     f'[label="{label}", constraint=false];')
    lines.append("}")
    return "\n".join(lines) + "\n"
