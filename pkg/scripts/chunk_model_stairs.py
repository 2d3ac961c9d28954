"""Print the chunk-granularity staircase: analytic LB and speedup vs workers.

With few chunks the static split leaves some workers a chunk short, and the
predicted load balance N / (T * ceil(N/T)) drops in stairs; with many chunks
the same formula hugs 1.0.  Pass --measure to overlay a synthetic measurement
(equal-cost sleeping chunks) next to the model at each worker count.

Usage:
    python3 scripts/chunk_model_stairs.py
    python3 scripts/chunk_model_stairs.py --chunks 75 --max-workers 16 --measure
"""

import argparse

from cellbench import (
    chunk_lb_model,
    chunk_speedup_model,
    load_balance,
    uniform_chunk_benchmark,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chunks", type=int, nargs="+", default=[75, 5625],
                    help="chunk counts to tabulate (default: 75 and 5625)")
    ap.add_argument("--max-workers", type=int, default=48)
    ap.add_argument("--measure", action="store_true",
                    help="also run the synthetic benchmark at each T")
    ap.add_argument("--chunk-seconds", type=float, default=0.002)
    args = ap.parse_args()

    for n in args.chunks:
        print(f"\n# N = {n} chunks")
        header = "T\tmodel_lb\tmodel_speedup"
        if args.measure:
            header += "\tmeasured_lb\tdiff"
        print(header)
        for t in range(1, args.max_workers + 1):
            lb = chunk_lb_model(n, t)
            sp = chunk_speedup_model(n, t)
            row = f"{t}\t{lb:.6f}\t{sp:.4f}"
            if args.measure:
                timing = uniform_chunk_benchmark(n, t, args.chunk_seconds)
                measured = load_balance(timing)
                row += f"\t{measured:.6f}\t{measured - lb:+.4f}"
            print(row)
        # point out where the stairs flatten: consecutive T with one ceiling
        flats = [t for t in range(2, args.max_workers + 1)
                 if -(-n // t) == -(-n // (t - 1))]
        if flats:
            print(f"# plateau at T in {flats[:8]}{'...' if len(flats) > 8 else ''}"
                  f" (same ceil(N/T) as the worker count before)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
