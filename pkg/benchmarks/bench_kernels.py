"""Compare the numba and pure-numpy kernel paths.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 5]

Each numba kernel is called once before timing so JIT compilation is
excluded.  The last section times a full DRC run on the tiled NAND4 in two
subprocesses, one per backend, since the backend is chosen at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit
from pathlib import Path

import numpy as np

from finverify import kernels

ROOT = Path(__file__).resolve().parents[1]


def random_rects(rng, n, span=50_000, size=(20, 400)):
    x0 = rng.integers(0, span, n)
    y0 = rng.integers(0, span, n)
    w = rng.integers(*size, n)
    h = rng.integers(*size, n)
    return np.stack([x0, y0, x0 + w, y0 + h], axis=1).astype(np.int64)


def cases(rng, n):
    a, b = random_rects(rng, n), random_rects(rng, n)
    r = random_rects(rng, n)
    order = np.argsort(r[:, 0], kind="stable").astype(np.int64)
    lo = rng.integers(0, 290, (n, 2))
    idx = np.concatenate([lo, lo + rng.integers(1, 10, (n, 2))], axis=1).astype(np.int64)
    grid = (kernels._np_paint(idx[: n // 10], 301, 301) > 0).astype(np.int32)
    xs = np.cumsum(rng.integers(1, 20, 302)).astype(np.int64)
    return {
        "paint": (idx, 301, 301),
        "min_gap2": (a[: n // 4], b[: n // 4]),
        "min_cheb_gap": (a[: n // 4], b[: n // 4]),
        "min_run": (grid, xs, xs),
        "self_pairs": (r, order, np.int64(200)),
    }


def bench(n, repeat):
    rng = np.random.default_rng(7)
    args = cases(rng, n)
    print(f"{'kernel':<14}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, (nb, npy) in kernels.IMPLEMENTATIONS.items():
        a = args[name]
        ra, rb = nb(*a), npy(*a)  # warm-up (JIT compile) and cross-check
        if name == "self_pairs":
            ra, rb = kernels._sorted_pairs(ra), kernels._sorted_pairs(rb)
        if not np.array_equal(np.asarray(ra), np.asarray(rb)):
            raise SystemExit(f"{name}: backends disagree")
        t_nb = min(timeit.repeat(lambda: nb(*a), number=1, repeat=repeat)) * 1e3
        t_np = min(timeit.repeat(lambda: npy(*a), number=1, repeat=repeat)) * 1e3
        print(f"{name:<14}{t_nb:>12.3f}{t_np:>12.3f}{t_np / t_nb:>10.2f}")


DRC_SNIPPET = """
import time
from finverify.techdb import load_tech
from finverify.layoutio import load_layout
from finverify.drc import run_drc
tech = load_tech()
flat = load_layout({path!r}, tech).flatten("NAND4_2X2")
run_drc(flat, tech)  # warm-up
t = time.perf_counter()
for _ in range({repeat}):
    run_drc(flat, tech)
print((time.perf_counter() - t) / {repeat} * 1e3)
"""


def bench_drc(repeat):
    code = DRC_SNIPPET.format(path=str(ROOT / "fixtures" / "nand4_tiled.json"), repeat=repeat)
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, FINVERIFY_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[flag] = float(res.stdout.strip())
    print(f"DRC tiled NAND4: numba {out['1']:.1f} ms, numpy {out['0']:.1f} ms")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    bench(args.n, args.repeat)
    bench_drc(args.repeat)


if __name__ == "__main__":
    main()
