"""Compare the compiled and pure-Python kernel backends.

Run from the repository root::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are timed on the same inputs and their outputs are checked
for agreement before timings are reported.
"""
import argparse
import timeit

import numpy as np

from articukit import kernels


def _dbscan_inputs(rng, n):
    centers = rng.random((4, 6)) * 4
    X = centers[rng.integers(0, 4, n)] + rng.normal(scale=0.05, size=(n, 6))
    return np.ascontiguousarray(X), 0.1, 10


def _assignment_inputs(rng, h, l, count):
    return [rng.random((h, l)) for _ in range(count)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the Python fallback only")
    rng = np.random.default_rng(args.seed)
    cases = []
    for n in (1000, 4000):
        X, eps, m = _dbscan_inputs(rng, n)
        cases.append((f"dbscan n={n}", "dbscan_labels", (X, eps, m), 1))
    for h, l in ((3, 10), (20, 20), (50, 80)):
        mats = _assignment_inputs(rng, h, l, 50)
        cases.append((f"assignment {h}x{l} x50", "solve_assignment", mats, 50))

    print(f"{'case':<26}" + "".join(f"{name:>12}" for name in backends) + "     speedup")
    for label, fn_name, data, _ in cases:
        results, times = {}, {}
        for name, mod in backends.items():
            fn = getattr(mod, fn_name)
            if fn_name == "dbscan_labels":
                call = lambda fn=fn: fn(*data)  # noqa: E731
            else:
                call = lambda fn=fn: [fn(C) for C in data]  # noqa: E731
            results[name] = call()
            times[name] = min(timeit.repeat(call, number=1, repeat=args.repeat))
        ref = results["python"]
        for name, out in results.items():
            if fn_name == "dbscan_labels":
                same = np.array_equal(out, ref)
            else:
                same = all(np.array_equal(a, b) for a, b in zip(out, ref))
            if not same:
                raise SystemExit(f"{label}: {name} disagrees with the Python backend")
        row = f"{label:<26}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
