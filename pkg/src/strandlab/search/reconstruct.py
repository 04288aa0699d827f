"""Turn an execution into a bundle with explicit penetrator strands."""

from __future__ import annotations

from ..penetrator import DECRYPT, DECRYPT_NOKEY, EMITTED, LEFT, RIGHT, DYModel, Knowledge
from ..strands import Bundle, NodeRef, SignedTerm, Strand
from ..terms import Cipher, KeyLit, Pair, Text, inverse

__all__ = ["reconstruct_bundle", "ReconstructionError"]


class ReconstructionError(RuntimeError):
    pass


def _p(t):
    return SignedTerm(True, t)


def _m(t):
    return SignedTerm(False, t)


class _Builder:
    def __init__(self, model: DYModel):
        self.model = model
        self.traces: list[list[SignedTerm]] = []
        self.labels: list[str] = []
        self.cache: dict = {}  # term -> positive NodeRef producing it
        self.consumers: dict[NodeRef, list[NodeRef]] = {}
        self.emitted: set = set()
        self.kn = Knowledge((), model)
        self.pen_count = 0

    def new_strand(self, label, trace) -> int:
        self.traces.append(list(trace))
        self.labels.append(label)
        return len(self.traces) - 1

    def pen(self, kind, trace) -> int:
        sid = self.new_strand(f"pen{self.pen_count}:{kind}", trace)
        self.pen_count += 1
        return sid

    def feed(self, src: NodeRef, dst: NodeRef):
        self.consumers.setdefault(src, []).append(dst)

    def offer(self, t, node: NodeRef):
        self.cache.setdefault(t, node)

    def supply(self, t) -> NodeRef:
        got = self.cache.get(t)
        if got is not None:
            return got
        if isinstance(t, Text) and t in self.model.text_universe and t not in self.kn.facts:
            sid = self.pen("text", [_p(t)])
            return self._done(t, NodeRef(sid, 0))
        if isinstance(t, KeyLit) and self.model.known_keys.contains_key(t.key) \
                and t not in self.kn.facts:
            sid = self.pen("key", [_p(t)])
            return self._done(t, NodeRef(sid, 0))
        prov = self.kn.provenance.get(t)
        if prov is not None:
            tag = prov[0]
            if tag == EMITTED:
                raise ReconstructionError(f"emitted term {t} has no producer")
            if tag in (LEFT, RIGHT):
                whole = prov[1]
                src = self.supply(whole)
                sid = self.pen("separate", [_m(whole), _p(whole.left), _p(whole.right)])
                self.feed(src, NodeRef(sid, 0))
                self.offer(whole.left, NodeRef(sid, 1))
                self.offer(whole.right, NodeRef(sid, 2))
                return self.cache[t]
            if tag == DECRYPT:
                c = prov[1]
                ksrc = self.supply(KeyLit(inverse(c.key)))
                csrc = self.supply(c)
                sid = self.pen("decrypt", [_m(KeyLit(inverse(c.key))), _m(c), _p(c.payload)])
                self.feed(ksrc, NodeRef(sid, 0))
                self.feed(csrc, NodeRef(sid, 1))
                return self._done(t, NodeRef(sid, 2))
            if tag == DECRYPT_NOKEY:
                c = prov[1]
                csrc = self.supply(c)
                sid = self.pen("open", [_m(c), _p(c.payload)])
                self.feed(csrc, NodeRef(sid, 0))
                return self._done(t, NodeRef(sid, 1))
        if isinstance(t, Text) and t in self.model.text_universe:
            sid = self.pen("text", [_p(t)])
            return self._done(t, NodeRef(sid, 0))
        if isinstance(t, KeyLit) and self.model.known_keys.contains_key(t.key):
            sid = self.pen("key", [_p(t)])
            return self._done(t, NodeRef(sid, 0))
        if isinstance(t, Pair):
            a = self.supply(t.left)
            b = self.supply(t.right)
            sid = self.pen("concat", [_m(t.left), _m(t.right), _p(t)])
            self.feed(a, NodeRef(sid, 0))
            self.feed(b, NodeRef(sid, 1))
            return self._done(t, NodeRef(sid, 2))
        if isinstance(t, Cipher) and self.kn.key_available(t.key):
            k = self.supply(KeyLit(t.key))
            m = self.supply(t.payload)
            sid = self.pen("encrypt", [_m(KeyLit(t.key)), _m(t.payload), _p(t)])
            self.feed(k, NodeRef(sid, 0))
            self.feed(m, NodeRef(sid, 1))
            return self._done(t, NodeRef(sid, 2))
        raise ReconstructionError(f"penetrator cannot produce {t}")

    def _done(self, t, node):
        self.offer(t, node)
        return node

    def honest_emit(self, t):
        self.emitted.add(t)
        self.kn = Knowledge(self.emitted, self.model)


def reconstruct_bundle(execution, model: DYModel, labels=None) -> Bundle:
    """Bundle for ``execution``.

    Honest strands come first (one per started slot, holding the executed
    prefix) with ids in slot order.  Each received term is routed from the
    earliest producer of exactly that term, else derived: universe texts
    and K_P keys are emitted, analysed terms are split or decrypted out of
    their source, anything else is concatenated or encrypted.  A producer
    feeding several receivers goes through a chain of Tee strands; positive
    nodes nobody consumes end in a Flushing strand.
    """
    b = _Builder(model)
    events = list(execution.events)
    slot_ids: dict[int, int] = {}
    for ev in events:
        if ev.slot not in slot_ids:
            view = execution.slots[ev.slot] if execution.slots else None
            label = (labels or {}).get(ev.slot) or (
                f"{view.role}{view.session}" if view is not None else f"slot{ev.slot}")
            slot_ids[ev.slot] = b.new_strand(label, [])
    for ev in events:
        sid = slot_ids[ev.slot]
        b.traces[sid].append(ev.node)
        node = NodeRef(sid, ev.index)
        if ev.node.positive:
            b.offer(ev.node.term, node)
            b.honest_emit(ev.node.term)
        else:
            b.feed(b.supply(ev.node.term), node)

    edges = []
    for src in sorted(b.consumers):
        dsts = b.consumers[src]
        term = b.traces[src.strand][src.index].term
        cur = src
        for d in dsts[:-1]:
            tee = b.pen("tee", [_m(term), _p(term), _p(term)])
            edges.append((cur, NodeRef(tee, 0)))
            edges.append((NodeRef(tee, 1), d))
            cur = NodeRef(tee, 2)
        edges.append((cur, dsts[-1]))
    used = {a for a, _ in edges}
    for sid in range(len(b.traces)):
        for i, st in enumerate(b.traces[sid]):
            n = NodeRef(sid, i)
            if st.positive and n not in used:
                fl = b.pen("flush", [_m(st.term)])
                edges.append((n, NodeRef(fl, 0)))
    strands = [Strand(i, tuple(tr), lab) for i, (tr, lab) in enumerate(zip(b.traces, b.labels))]
    return Bundle(strands, None, edges)
