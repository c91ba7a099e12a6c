"""Compare the compiled and pure-Python denotation kernels.

Usage: python3 benchmarks/bench_denote.py [--types N] [--repeat R] [--seed S]

Each row times the same batch of postfix programs under both backends. The
batch mixes random terms with products of optional headers, which are the
shape that blows up in real parsers (k optional headers give 2**k sets).
"""

import argparse
import random
import statistics
import time

from hdrsafe import htypes, kernels
from hdrsafe._kernel_py import eval_code as py_eval


def random_term(rng, depth, names):
    if depth == 0 or rng.random() < 0.2:
        return htypes.Inst(rng.choice(names)) if rng.random() < 0.85 else htypes.ONE
    node = htypes.Cat if rng.random() < 0.5 else htypes.Alt
    return node(random_term(rng, depth - 1, names), random_term(rng, depth - 1, names))


def optional_chain(k):
    return htypes.product(htypes.Alt(htypes.ONE, htypes.Inst(f"h{i}")) for i in range(k))


def batch(rng, n, depth, width):
    names = [f"h{i}" for i in range(width)]
    index = {h: i for i, h in enumerate(names)}
    return [htypes._compile(random_term(rng, depth, names), index) for _ in range(n)]


def agreeing(codes, native, cap):
    """Codes both kernels evaluate to the same sets; overflow must agree too."""
    kept = []
    for code in codes:
        results = []
        for fn in (native, py_eval):
            try:
                results.append(fn(code, cap))
            except htypes.DenotationTooLarge:
                results.append(None)
        assert results[0] == results[1], "kernels disagree"
        if results[0] is not None:
            kept.append(code)
    return kept


def timed(fn, codes, cap, repeat):
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        for code in codes:
            fn(code, cap)
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--types", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not kernels.NATIVE_AVAILABLE:
        raise SystemExit("native kernel not built; run: pip install -e . --no-build-isolation")
    native = kernels._denote_ext.eval_code
    cap = 1 << 20
    rng = random.Random(args.seed)
    rows = []
    for depth, width in ((4, 5), (6, 8), (8, 12)):
        codes = batch(rng, args.types, depth, width)
        rows.append((f"random depth {depth}, {width} instances", codes))
    for k in (8, 12, 16):
        code = htypes._compile(optional_chain(k), {f"h{i}": i for i in range(k)})
        rows.append((f"{k} optional headers ({1 << k} sets)", [code] * 5))

    print(f"{'workload':<36} {'python ms':>10} {'native ms':>10} {'speedup':>8}")
    for label, codes in rows:
        codes = agreeing(codes, native, cap)
        tp = timed(py_eval, codes, cap, args.repeat)
        tn = timed(native, codes, cap, args.repeat)
        print(f"{label:<36} {tp * 1e3:>10.2f} {tn * 1e3:>10.2f} {tp / tn:>7.1f}x")


if __name__ == "__main__":
    main()
