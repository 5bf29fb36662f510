"""Wall-clock comparison of the compiled and pure-Python simulation kernels.

    python3 benchmarks/bench_kernel.py [--duration 5] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from vsslab.sim import Scenario
from vsslab.sim.engine import _kernel_c, compile_program, run_program

KINDS = ("smc1", "smc2", "smmm1", "smmm2", "smmm-multi")


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=5.0, help="simulated seconds per run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = ["python"] + (["cython"] if _kernel_c is not None else [])
    print(f"{'controller':12s} {'steps':>7s} " + " ".join(f"{b + ' [s]':>12s}" for b in backends) + "  speedup  identical")
    for kind in KINDS:
        prog, _ = compile_program(Scenario(controller_kind=kind, duration=args.duration))
        times = {b: best_of(lambda b=b: run_program(prog, b), args.repeat) for b in backends}
        same = ""
        speed = ""
        if "cython" in times:
            a, c = run_program(prog, "python"), run_program(prog, "cython")
            same = "yes" if all(np.array_equal(x, y) for x, y in zip(a[1:], c[1:])) else "no"
            speed = f"{times['python'] / times['cython']:7.1f}x"
        print(f"{kind:12s} {prog.nsteps + 1:7d} " + " ".join(f"{times[b]:12.4f}" for b in backends)
              + f"  {speed:>7s}  {same}")
    if _kernel_c is None:
        print("compiled kernel not built; only the Python fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
