"""Compare the compiled and pure-Python matching kernels.

    python benchmarks/bench_match.py --pairs 300 --facts 24 --entities 6
"""

import argparse
import random
import time

from aileen import kernel, sme
from aileen.randcase import random_case, random_weighted


def make_problems(n, facts, entities, seed):
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        base = random_weighted(rng, facts, entities, "b")
        target = random_case(rng, facts, entities, "c")
        enc = sme._Encoding(base, target.facts)
        out.append((len(enc.target_ents), enc.kernel_args(), enc.order, enc.ecand_ptr, enc.ecand_t,
                    enc.fixed(None)))
    return out


def time_kernel(mod, problems, repeat):
    best = float("inf")
    results = None
    for _ in range(repeat):
        t = time.perf_counter()
        results = [mod.search(n, *args, order, ptr, cand, fixed) for n, args, order, ptr, cand, fixed in problems]
        best = min(best, time.perf_counter() - t)
    return best, results


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pairs", type=int, default=300)
    p.add_argument("--facts", type=int, default=24)
    p.add_argument("--entities", type=int, default=6)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    problems = make_problems(args.pairs, args.facts, args.entities, args.seed)
    timings, outputs = {}, {}
    for name, mod in kernel.backends().items():
        timings[name], outputs[name] = time_kernel(mod, problems, args.repeat)
    print(f"{args.pairs} problems, {args.facts} facts, {args.entities} entities per side")
    for name, t in timings.items():
        print(f"{name:>8}: {t * 1000:9.1f} ms  ({t / args.pairs * 1e6:8.1f} us/problem)")
    if "cython" in timings:
        agree = all(abs(a[1] - b[1]) < 1e-9 and list(a[0]) == list(b[0])
                    for a, b in zip(outputs["python"], outputs["cython"]))
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x, identical results: {agree}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
