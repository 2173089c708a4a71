"""Time the integration kernels on both backends.

    python benchmarks/bench_kernels.py [--ns 1.0] [--repeat 3]

Runs a noisy 3-input majority gate and one XNOR cell for ``--ns``
nanoseconds of simulated time and reports wall seconds per simulated
nanosecond for the numba and numpy backends, plus the largest difference in
the recorded trajectories (same seed, so they should agree to round-off).
"""
import argparse
import time

import numpy as np

from spinpat._accel import HAVE_NUMBA, use_backend
from spinpat.config import default_params
from spinpat.engine import SupplySchedule, compile_circuit, simulate
from spinpat.netlist import build_majority_gate, build_xnor_cell


def cases(params):
    maj = build_majority_gate(3, params)
    xnor = build_xnor_cell(params)
    return {
        "maj3": (maj, {"in1": 1, "in2": 1, "in3": 0, "out": 0}),
        "xnor": (xnor, {"A": 1, "B": 1, "C": 0, "carry": 0, "out": 0}),
    }


def run(backend, net, states, params, t_end, repeat):
    with use_backend(backend):
        cc = compile_circuit(net, params)
        sched = SupplySchedule.staged(net, params["supply.V"])
        # warm-up compiles the numba kernels
        simulate(cc, sched, states, params.thermal(seed=1), t_end=20e-12)
        best, tr = float("inf"), None
        for _ in range(repeat):
            t0 = time.perf_counter()
            tr = simulate(cc, sched, states, params.thermal(seed=1), t_end=t_end)
            best = min(best, time.perf_counter() - t0)
    return best, tr


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ns", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    params = default_params()
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    print(f"{'case':<6} {'backend':<7} {'s per sim-ns':>12} {'speedup':>8} {'max |dm|':>10}")
    for name, (net, states) in cases(params).items():
        res = {b: run(b, net, states, params, args.ns * 1e-9, args.repeat) for b in backends}
        ref = res["numpy"][0]
        for b in backends:
            wall, tr = res[b]
            dm = float(np.max(np.abs(tr.data - res["numpy"][1].data)))
            print(f"{name:<6} {b:<7} {wall / args.ns:12.3f} {ref / wall:8.1f} {dm:10.2e}")


if __name__ == "__main__":
    main()
