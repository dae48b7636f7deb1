"""Compare the compiled and numpy sparse mat-vec backends.

    python3 benchmarks/bench_kernels.py [--sizes 10000 100000] [--repeat 20]

Both backends must produce bitwise-identical output; the script checks
this before timing.
"""
import argparse
import timeit

import numpy as np

from asyncrank.kernels import _pykernels
from asyncrank.webgraph import build_all_blocks, generate_synthetic, partition_rows

try:
    from asyncrank.kernels import _ckernels
except ImportError:
    _ckernels = None


def bench(n, avg, repeat):
    g = generate_synthetic(n, avg, 0.1, seed=0)
    block = build_all_blocks(g, partition_rows(n, 1))[0]
    x = np.random.default_rng(0).random(n)
    out = np.empty(block.nrows)
    row_ids = block.row_ids
    args = (block.indptr, block.indices, block.data, x, out)

    py = min(timeit.repeat(lambda: _pykernels.csr_matvec(*args, row_ids),
                           number=1, repeat=repeat))
    ref = out.copy()
    row = {"n": n, "nnz": g.nnz, "python_ms": py * 1e3}
    if _ckernels is not None:
        cy = min(timeit.repeat(lambda: _ckernels.csr_matvec(*args), number=1, repeat=repeat))
        if out.tobytes() != ref.tobytes():
            raise SystemExit(f"backends disagree at n={n}")
        row.update(cython_ms=cy * 1e3, ratio=py / cy)
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000, 500_000])
    ap.add_argument("--avg-degree", type=float, default=8.0)
    ap.add_argument("--repeat", type=int, default=15)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'n':>9} {'nnz':>10} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n in args.sizes:
        r = bench(n, args.avg_degree, args.repeat)
        cy = f"{r['cython_ms']:10.3f} {r['ratio']:7.2f}x" if "cython_ms" in r else ""
        print(f"{r['n']:>9} {r['nnz']:>10} {r['python_ms']:10.3f} {cy}")


if __name__ == "__main__":
    main()
