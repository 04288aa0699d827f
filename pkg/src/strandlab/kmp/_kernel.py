"""Boolean-matrix fixpoint for policy closures.

Matrices are ``uint8`` and indexed by type position: ``enc[k, j]`` is
K =>enc J, ``dec[k, j]`` is K =>dec J and ``reach[x, y]`` means Y is in R_X.
Two backends compute the same fixpoint: numba loops over a batch of
policies, and a batched numpy version used when numba is missing or
``STRANDLAB_DISABLE_NUMBA`` is set.
"""

from __future__ import annotations

import os

import numpy as np

ORIGINAL, ORIGINAL5, REFINED = 0, 1, 2

_disabled = os.environ.get("STRANDLAB_DISABLE_NUMBA", "").strip() not in ("", "0")
try:
    if _disabled:
        raise ImportError
    import numba
    njit = numba.njit(cache=True, nogil=True)
    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# --- numpy ----------------------------------------------------------------

def _bmm(a, b):
    return (a[:, :, :, None] & b[:, None, :, :]).any(axis=2)


def closure_batch_numpy(enc, dec, pdec, kind: int):
    """In-place fixpoint over a batch ``[B, n, n]``; returns reach."""
    enc = enc.astype(bool)
    dec = dec.astype(bool)
    pdec = pdec.astype(bool)
    b, n, _ = enc.shape
    reach = np.broadcast_to(np.eye(n, dtype=bool), (b, n, n)).copy()
    while True:
        before = (enc.copy(), dec.copy(), reach.copy())
        # rule 4: K =>enc J and K =>dec Z give Z in R_J
        reach |= _bmm(enc.transpose(0, 2, 1), dec)
        if kind == REFINED:
            enc |= _bmm(_bmm(reach, enc), reach.transpose(0, 2, 1))
            dec |= _bmm(reach, dec)
        else:
            s = reach | reach.transpose(0, 2, 1)
            enc |= _bmm(s, enc)
            enc |= _bmm(enc, s)
            if kind == ORIGINAL5:
                dec |= _bmm(reach, pdec)
        if (np.array_equal(before[0], enc) and np.array_equal(before[1], dec)
                and np.array_equal(before[2], reach)):
            return enc.astype(np.uint8), dec.astype(np.uint8), reach.astype(np.uint8)


# --- numba ----------------------------------------------------------------

def _closure_one(enc, dec, pdec, reach, kind):
    n = enc.shape[0]
    for i in range(n):
        reach[i, i] = 1
    changed = True
    while changed:
        changed = False
        for j in range(n):
            for z in range(n):
                if reach[j, z] == 0:
                    for k in range(n):
                        if enc[k, j] and dec[k, z]:
                            reach[j, z] = 1
                            changed = True
                            break
        if kind == REFINED:
            for k in range(n):
                for j in range(n):
                    if enc[k, j] == 0:
                        continue
                    for z in range(n):
                        if reach[z, k] == 0:
                            continue
                        for w in range(n):
                            if reach[w, j] and enc[z, w] == 0:
                                enc[z, w] = 1
                                changed = True
            for k in range(n):
                for j in range(n):
                    if dec[k, j] == 0:
                        continue
                    for z in range(n):
                        if reach[z, k] and dec[z, j] == 0:
                            dec[z, j] = 1
                            changed = True
        else:
            # rule 6: K =>enc J and K~Z give Z =>enc J
            for k in range(n):
                for j in range(n):
                    if enc[k, j] == 0:
                        continue
                    for z in range(n):
                        if (reach[z, k] or reach[k, z]) and enc[z, j] == 0:
                            enc[z, j] = 1
                            changed = True
            # rule 7: J =>enc K and K~Z give J =>enc Z
            for j in range(n):
                for k in range(n):
                    if enc[j, k] == 0:
                        continue
                    for z in range(n):
                        if (reach[z, k] or reach[k, z]) and enc[j, z] == 0:
                            enc[j, z] = 1
                            changed = True
            if kind == ORIGINAL5:
                for k in range(n):
                    for j in range(n):
                        if pdec[k, j] == 0:
                            continue
                        for z in range(n):
                            if reach[z, k] and dec[z, j] == 0:
                                dec[z, j] = 1
                                changed = True


def _closure_batch(enc, dec, pdec, reach, kind):
    for b in range(enc.shape[0]):
        _closure_one(enc[b], dec[b], pdec[b], reach[b], kind)


def _decode(codes, n, enc, dec):
    # edge code: (src * 2 + op) * n + dst, op 0 = enc, 1 = dec; -1 pads
    for b in range(codes.shape[0]):
        for e in range(codes.shape[1]):
            c = codes[b, e]
            if c < 0:
                continue
            dst = c % n
            rest = c // n
            op = rest % 2
            src = rest // 2
            if op == 0:
                enc[b, src, dst] = 1
            else:
                dec[b, src, dst] = 1


def _item5_sweep(codes, n, d):
    """Per policy: bit 0 reach differs, bit 1 implied differs."""
    m = codes.shape[0]
    out = np.zeros(m, dtype=np.uint8)
    pd = np.zeros((n, n), dtype=np.uint8)
    e0 = np.zeros((n, n), dtype=np.uint8)
    ea = np.zeros((n, n), dtype=np.uint8)
    da = np.zeros((n, n), dtype=np.uint8)
    ra = np.zeros((n, n), dtype=np.uint8)
    eb = np.zeros((n, n), dtype=np.uint8)
    db = np.zeros((n, n), dtype=np.uint8)
    rb = np.zeros((n, n), dtype=np.uint8)
    for b in range(m):
        e0[:] = 0
        pd[:] = 0
        for e in range(codes.shape[1]):
            c = codes[b, e]
            if c < 0:
                continue
            dst = c % n
            rest = c // n
            if rest % 2 == 0:
                e0[rest // 2, dst] = 1
            else:
                pd[rest // 2, dst] = 1
        e0[d, d] = 1
        for i in range(n):
            for j in range(n):
                ea[i, j] = e0[i, j]
                eb[i, j] = e0[i, j]
                da[i, j] = pd[i, j]
                db[i, j] = pd[i, j]
                ra[i, j] = 0
                rb[i, j] = 0
        da[d, d] = 1
        db[d, d] = 1
        _closure_one(ea, da, pd, ra, ORIGINAL)
        _closure_one(eb, db, pd, rb, ORIGINAL5)
        flag = 0
        for i in range(n):
            for j in range(n):
                if ra[i, j] != rb[i, j]:
                    flag |= 1
                if ea[i, j] != eb[i, j] or da[i, j] != db[i, j]:
                    flag |= 2
        out[b] = flag
    return out


if HAVE_NUMBA:
    _closure_one = njit(_closure_one)
    _closure_batch = njit(_closure_batch)
    _decode = njit(_decode)
    _item5_sweep = njit(_item5_sweep)


def closure_batch(enc, dec, pdec, kind: int):
    """Fixpoint for a batch of policies.  Inputs are not modified."""
    if not HAVE_NUMBA:
        return closure_batch_numpy(enc, dec, pdec, kind)
    enc = np.ascontiguousarray(enc, dtype=np.uint8).copy()
    dec = np.ascontiguousarray(dec, dtype=np.uint8).copy()
    pdec = np.ascontiguousarray(pdec, dtype=np.uint8)
    reach = np.zeros_like(enc)
    _closure_batch(enc, dec, pdec, reach, kind)
    return enc, dec, reach


def decode_codes(codes, n):
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    enc = np.zeros((codes.shape[0], n, n), dtype=np.uint8)
    dec = np.zeros_like(enc)
    if HAVE_NUMBA:
        _decode(codes, n, enc, dec)
    else:
        valid = codes >= 0
        b = np.nonzero(valid)[0]
        c = codes[valid]
        dst, rest = c % n, c // n
        op, src = rest % 2, rest // 2
        enc[b[op == 0], src[op == 0], dst[op == 0]] = 1
        dec[b[op == 1], src[op == 1], dst[op == 1]] = 1
    return enc, dec


def item5_flags(codes, n: int, d: int):
    """Compare Original and OriginalWithItem5 on every encoded policy."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if HAVE_NUMBA:
        return _item5_sweep(codes, n, d)
    enc, dec = decode_codes(codes, n)
    pdec = dec.copy()
    enc[:, d, d] = 1
    dec[:, d, d] = 1
    ea, da, ra = closure_batch_numpy(enc, dec, pdec, ORIGINAL)
    eb, db, rb = closure_batch_numpy(enc, dec, pdec, ORIGINAL5)
    flags = (ra != rb).any(axis=(1, 2)).astype(np.uint8)
    flags |= (((ea != eb) | (da != db)).any(axis=(1, 2)).astype(np.uint8) << 1)
    return flags
