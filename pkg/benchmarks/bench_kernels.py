"""Compare the compiled and pure-Python kernel backends.

Run: python3 benchmarks/bench_kernels.py [--repeat N] [--sizes small,paper]
"""
import argparse
import timeit

import numpy as np

from relqa.numeric import available_backends, get_backend

SIZES = {
    # (depth, length, filters, width)
    "small": (18, 12, 16, 5),
    "paper": (55, 40, 100, 5),
    "long": (55, 120, 100, 5),
}


def workload(depth, length, n, m, seed=0):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((depth, length))
    F = rng.standard_normal((n, depth, m)) * 0.1
    b = rng.standard_normal(n) * 0.1
    dx = rng.standard_normal(n)
    return S, F, b, dx


def bench(backend, args, repeat, number):
    S, F, b, dx = args
    x, am, C = backend.encode_forward(S, F, b, True)
    cases = {
        "encode_forward": lambda: backend.encode_forward(S, F, b, True),
        "encode_backward": lambda: backend.encode_backward(S, F, C, am, dx, True),
        "conv1d_forward": lambda: backend.conv1d_forward(S, F, b, True),
        "conv1d_backward": lambda: backend.conv1d_backward(S, F, True, C),
    }
    return {name: min(timeit.repeat(fn, repeat=repeat, number=number)) / number
            for name, fn in cases.items()}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=200)
    parser.add_argument("--sizes", default="small,paper,long")
    args = parser.parse_args(argv)

    names = available_backends()
    print(f"backends: {', '.join(names)}")
    for size in args.sizes.split(","):
        data = workload(*SIZES[size])
        results = {name: bench(get_backend(name), data, args.repeat, args.number) for name in names}
        print(f"\n[{size}] depth={SIZES[size][0]} L={SIZES[size][1]} n={SIZES[size][2]} m={SIZES[size][3]}")
        print(f"{'kernel':<18s}" + "".join(f"{n:>14s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
        for op in results[names[0]]:
            row = f"{op:<18s}" + "".join(f"{results[n][op] * 1e6:>12.1f}us" for n in names)
            if "cython" in results and "python" in results:
                row += f"   {results['python'][op] / results['cython'][op]:6.2f}x"
            print(row)


if __name__ == "__main__":
    main()
