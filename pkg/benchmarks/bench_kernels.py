"""Compare the numba and pure-numpy statevector kernels.

Each backend runs in its own interpreter because the choice is made at import
time from SPECEIG_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py            # default sizes
    python benchmarks/bench_kernels.py --qubits 4 8 12 --steps 30
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from speceig import _accel
from speceig.pauli import KitaevParams, kitaev_chain
from speceig.statevector import initial_state, resonance_program

sites, steps, repeats = (int(a) for a in sys.argv[1:4])
h = kitaev_chain(KitaevParams.from_couplings(sites, 1.5, 0.4, 0.2, 1.0))
prog = resonance_program(h, 0.3, 5.0 / steps, steps, 2)
psi = initial_state(h, 0).amplitudes
prog.run(psi, 1.0)  # warm-up (compilation for numba)
best = float("inf")
for _ in range(repeats):
    t0 = time.perf_counter()
    out = prog.run(psi, 1.0)
    best = min(best, time.perf_counter() - t0)
print(json.dumps({"backend": _accel.BACKEND, "seconds": best, "z0": _accel.expectation_z(out, 0),
                  "gates": int(prog.xmasks.size)}))
"""


def run(backend: str, sites: int, steps: int, repeats: int) -> dict:
    env = dict(os.environ)
    if backend == "numpy":
        env["SPECEIG_DISABLE_NUMBA"] = "1"
    else:
        env.pop("SPECEIG_DISABLE_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(sites), str(steps), str(repeats)],
        env=env,
        check=True,
        capture_output=True,
        text=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--qubits", type=int, nargs="+", default=[3, 6, 9, 12], help="system sizes (chain sites)")
    ap.add_argument("--steps", type=int, default=7)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"{'sites':>5} {'gates':>6} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'|dz|':>9}")
    for n in args.qubits:
        a = run("numpy", n, args.steps, args.repeats)
        b = run("numba", n, args.steps, args.repeats)
        if b["backend"] != "numba":
            print("numba is not importable; only the numpy path was measured")
        print(
            f"{n:>5} {a['gates']:>6} {a['seconds'] * 1e3:>10.2f} {b['seconds'] * 1e3:>10.2f}"
            f" {a['seconds'] / b['seconds']:>7.1f}x {abs(a['z0'] - b['z0']):>9.1e}"
        )


if __name__ == "__main__":
    main()
