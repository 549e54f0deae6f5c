"""Compare the compiled and numpy kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from junctionsim import _backend


def cases(rng):
    word = (np.array([3, 9, 14, 20], dtype=np.int64), np.array([1, 1, 0, 0], dtype=np.int8))
    yield "apply_word  4 ops, 16 modes", lambda k: k.apply_word(*word, 16)
    yield "apply_word  4 ops, 20 modes", lambda k: k.apply_word(*word, 20)
    for n, batch in ((4, 50_000), (6, 20_000), (8, 2_000)):
        X = rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))
        A = X - np.swapaxes(X, 1, 2)
        yield f"pfaffian_batch {batch} x {n}x{n}", lambda k, A=A: k.pfaffian_batch(A)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    names = _backend.available()
    rng = np.random.default_rng(0)
    print(f"{'case':34s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for label, fn in cases(rng):
        times = {}
        for name in names:
            k = _backend.get(name)
            fn(k)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        row = f"{label:34s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
