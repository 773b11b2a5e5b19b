"""Compare the numba and numpy kernels of the product-word search.

    python3 benchmarks/bench_search.py [--repeat 5] [--json out.json]

Times ``expand`` on random letter stacks and a full ``search_words`` run for
both backends. Set SINGSTAB_NO_JIT=1 to check the fallback on its own.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from singstab import _kernels
from singstab.exponents import WeightedSet, search_words


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_expand(repeat: int) -> list[dict]:
    rng = np.random.default_rng(0)
    rows = []
    for d, P, L in [(2, 300, 200), (2, 2000, 200), (3, 300, 100), (4, 300, 100)]:
        parents = rng.normal(size=(P, d, d))
        letters = rng.normal(size=(L, d, d)) / np.sqrt(d)
        row = {"kernel": "expand", "d": d, "parents": P, "letters": L}
        row["numpy_s"] = _best(lambda: _kernels.expand(parents, letters, "numpy"), repeat)
        if _kernels.HAVE_JIT:
            _kernels.expand(parents[:2], letters[:2], "jit")  # compile / load cache
            row["jit_s"] = _best(lambda: _kernels.expand(parents, letters, "jit"), repeat)
            a = _kernels.expand(parents, letters, "numpy")
            b = _kernels.expand(parents, letters, "jit")
            row["max_abs_diff"] = float(np.nanmax(np.abs(np.nan_to_num(a[0] - b[0], posinf=0, neginf=0))))
        rows.append(row)
    return rows


def bench_search(repeat: int) -> list[dict]:
    rng = np.random.default_rng(1)
    rows = []
    for d, n in [(2, 60), (3, 40)]:
        mats = rng.normal(size=(n, d, d)) / np.sqrt(d)
        ws = WeightedSet(mats, rng.uniform(0.1, 2.0, size=n), np.zeros(n), np.zeros(n))
        row = {"kernel": "search_words", "d": d, "letters": n, "depth": 8, "budget": 400_000}
        for backend in ("numpy", "jit") if _kernels.HAVE_JIT else ("numpy",):
            search_words(ws, 2, 1000, backend=backend)
            row[f"{backend}_s"] = _best(lambda: search_words(ws, 8, 400_000, backend=backend), repeat)
            row[f"{backend}_lower"] = search_words(ws, 8, 400_000, backend=backend).lower
        rows.append(row)
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write results to this file")
    args = ap.parse_args()
    rows = bench_expand(args.repeat) + bench_search(max(1, args.repeat // 2))
    for r in rows:
        speed = f"  speedup {r['numpy_s'] / r['jit_s']:.2f}x" if "jit_s" in r else ""
        print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()) + speed)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
