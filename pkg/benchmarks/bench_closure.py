"""Closure kernel timings: numba loop kernel vs batched numpy.

    python benchmarks/bench_closure.py [--batch 20000] [--types 4] [--edges 6]

Both backends run on the same random policies and the script checks that
their reach matrices agree before reporting times.
"""

import argparse
import time

import numpy as np

from strandlab.kmp import _kernel
from strandlab.kmp.sweep import item5_sweep, random_policy_codes


def _timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=20000)
    ap.add_argument("--types", type=int, default=4)
    ap.add_argument("--edges", type=int, default=6)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--sweep", action="store_true", help="also time the full item-5 sweep")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    codes = random_policy_codes(rng, args.batch, args.types, args.edges)
    enc, dec = _kernel.decode_codes(codes, args.types)
    d = args.types - 1
    enc[:, d, d] = 1
    dec[:, d, d] = 1

    print(f"backend available: {_kernel.backend()}")
    print(f"{args.batch} policies, {args.types} types, <= {args.edges} edges")
    results = {}
    for name, kind in (("original", _kernel.ORIGINAL), ("refined", _kernel.REFINED)):
        t_np, (_, _, r_np) = _timed(_kernel.closure_batch_numpy, enc, dec, dec, kind)
        line = f"  {name:9s} numpy {t_np * 1e3:8.1f} ms"
        if _kernel.HAVE_NUMBA:
            _kernel.closure_batch(enc[:1], dec[:1], dec[:1], kind)  # compile
            t_nb, (_, _, r_nb) = _timed(_kernel.closure_batch, enc, dec, dec, kind)
            same = np.array_equal(r_np.astype(bool), r_nb.astype(bool))
            line += f"   numba {t_nb * 1e3:8.1f} ms   speedup {t_np / t_nb:6.1f}x   agree={same}"
            results[name] = same
        print(line)
    if args.sweep:
        res = item5_sweep()
        print(res.summary())
    return 0 if all(results.values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
