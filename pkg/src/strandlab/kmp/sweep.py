"""Exhaustive small-policy sweep comparing Original with OriginalWithItem5."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .policy import DATA, DEC, ENC, Edge, Policy

__all__ = ["SweepResult", "item5_sweep", "enumerate_policy_codes", "canonical_masks",
           "codes_to_policy", "random_policy_codes"]


@dataclass
class SweepResult:
    max_types: int
    max_edges: int
    policies: int = 0      # isomorphism classes compared
    labelled: int = 0      # labelled policies they stand for
    reach_divergent: int = 0
    implied_divergent: int = 0
    examples: list = field(default_factory=list)
    seconds: float = 0.0
    backend: str = ""

    @property
    def agree(self) -> bool:
        return self.reach_divergent == 0

    def summary(self) -> str:
        return (f"{self.policies} policies ({self.labelled} labelled) up to {self.max_types} "
                f"types / {self.max_edges} edges: reach differs on {self.reach_divergent}, "
                f"implied relation differs on {self.implied_divergent} "
                f"[{self.backend}, {self.seconds:.1f}s]")


def _n_slots(n):
    return 2 * n * n


def enumerate_policy_codes(n: int, max_edges: int) -> np.ndarray:
    """Every edge set of size <= max_edges over n types, -1 padded."""
    slots = _n_slots(n)
    rows = []
    for k in range(min(max_edges, slots) + 1):
        for combo in itertools.combinations(range(slots), k):
            rows.append(combo + (-1,) * (max_edges - k))
    return np.array(rows, dtype=np.int64).reshape(len(rows), max_edges)


def _masks(codes):
    valid = codes >= 0
    bits = np.where(valid, np.left_shift(np.int64(1), np.where(valid, codes, 0)), 0)
    return bits.sum(axis=1).astype(np.int64)


def canonical_masks(codes: np.ndarray, n: int) -> np.ndarray:
    """Edge-set bitmasks minimised over renamings of the non-data types.

    The data type sits at index n - 1 and stays fixed.
    """
    masks = _masks(codes)
    slots = _n_slots(n)
    best = masks.copy()
    for perm in itertools.permutations(range(n - 1)):
        perm = perm + (n - 1,)
        out = np.zeros_like(masks)
        for c in range(slots):
            dst, rest = c % n, c // n
            op, src = rest % 2, rest // 2
            pc = (perm[src] * 2 + op) * n + perm[dst]
            out |= ((masks >> c) & 1) << pc
        best = np.minimum(best, out)
    return best


def _mask_to_codes(masks, n, width):
    out = np.full((len(masks), width), -1, dtype=np.int64)
    for i, m in enumerate(masks.tolist()):
        bits = [c for c in range(_n_slots(n)) if (m >> c) & 1]
        out[i, :len(bits)] = bits
    return out


def codes_to_policy(codes, n: int) -> Policy:
    types = tuple(f"K{i + 1}" for i in range(n - 1)) + (DATA,)
    edges = []
    for c in codes:
        c = int(c)
        if c < 0:
            continue
        dst, rest = c % n, c // n
        op, src = rest % 2, rest // 2
        edges.append(Edge(types[src], (ENC, DEC)[op], types[dst]))
    return Policy(types, frozenset(edges))


def random_policy_codes(rng: np.random.Generator, count: int, n: int, max_edges: int):
    slots = _n_slots(n)
    out = np.full((count, max_edges), -1, dtype=np.int64)
    for i in range(count):
        k = int(rng.integers(0, max_edges + 1))
        out[i, :k] = rng.choice(slots, size=k, replace=False)
    return out


def item5_sweep(max_types: int = 4, max_edges: int = 6, keep_examples: int = 5) -> SweepResult:
    """Compare both closures on every policy with 1..max_types types (data
    type included) and at most max_edges directives, up to renaming."""
    res = SweepResult(max_types, max_edges, backend=_kernel.backend())
    t0 = time.perf_counter()
    for n in range(1, max_types + 1):
        codes = enumerate_policy_codes(n, max_edges)
        masks = canonical_masks(codes, n)
        reps = np.unique(masks)
        res.labelled += len(codes)
        res.policies += len(reps)
        rep_codes = _mask_to_codes(reps, n, max_edges)
        flags = _kernel.item5_flags(rep_codes, n, n - 1)
        res.reach_divergent += int(((flags & 1) != 0).sum())
        res.implied_divergent += int(((flags & 2) != 0).sum())
        for i in np.nonzero(flags)[0][:max(0, keep_examples - len(res.examples))]:
            res.examples.append((int(flags[i]), codes_to_policy(rep_codes[i], n)))
    res.seconds = time.perf_counter() - t0
    return res
