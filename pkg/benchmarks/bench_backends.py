"""Compare the compiled and pure-numpy integration backends.

The backend is chosen at import time from FINSTAB_NUMBA, so each backend is
timed in its own subprocess: a small driver builds the scenario, warms up
once (the compiled path loads its JIT cache there), then times repeated
closed-loop integrations.  The driver also hashes the trajectory so the two
backends can be checked for bit-identical results.

    python3 benchmarks/bench_backends.py [--repeats N] [--t-max T]
"""
import argparse
import json
import os
import subprocess
import sys

SCENARIO = {
    "name": "bench-heat",
    "frontend": {"kind": "Heat1D", "n_modes": 16},
    "controller": {"variant": "BilinearPhi", "mu": 0.25},
    "initial_state": "mode2+0.5*mode3",
    "integration": {"t_max": 3.0, "sample_dt": 0.001},
    "plot": False,
    "seed": 0,
}

DRIVER = r"""
import hashlib, json, sys, time
from finstab import build_scenario, scenario_from_json, simulate
from finstab.backend import USING_NUMBA

doc = json.loads(sys.argv[1])
repeats = int(sys.argv[2])
built = build_scenario(scenario_from_json(doc))
args = (built.model, built.dec, built.spec, built.y0, built.opts)
traj = simulate(*args)  # warm-up; first compiled call loads the JIT cache
digest = hashlib.sha256(traj.states.tobytes() + traj.times.tobytes()).hexdigest()
times = []
for _ in range(repeats):
    start = time.perf_counter()
    simulate(*args)
    times.append(time.perf_counter() - start)
print(json.dumps({"times": times, "digest": digest, "using_numba": USING_NUMBA}))
"""


def run_backend(doc: dict, repeats: int, numba_flag: str) -> dict:
    env = dict(os.environ, FINSTAB_NUMBA=numba_flag)
    cmd = [sys.executable, "-c", DRIVER, json.dumps(doc), str(repeats)]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        raise SystemExit(f"driver failed (exit {proc.returncode}):\n{proc.stderr}")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed integrations per backend (default 5)")
    parser.add_argument("--t-max", type=float, default=None,
                        help="override the scenario horizon")
    args = parser.parse_args()
    doc = dict(SCENARIO)
    if args.t_max is not None:
        doc = {**SCENARIO, "integration": {**SCENARIO["integration"],
                                           "t_max": args.t_max}}
    results = {label: run_backend(doc, args.repeats, flag)
               for label, flag in (("numba", "1"), ("numpy", "0"))}
    if results["numba"]["using_numba"] is not True:
        print("warning: compiled backend unavailable, comparing numpy to itself")
    print(f"scenario: {doc['name']} (t_max={doc['integration']['t_max']}, "
          f"{args.repeats} repeats, warm)")
    print(f"{'backend':<8} {'best':>9} {'mean':>9}  per-run integration time [s]")
    for label, res in results.items():
        times = res["times"]
        runs = " ".join(f"{t:.4f}" for t in times)
        print(f"{label:<8} {min(times):>9.4f} {sum(times) / len(times):>9.4f}  {runs}")
    speedup = min(results["numpy"]["times"]) / min(results["numba"]["times"])
    identical = results["numba"]["digest"] == results["numpy"]["digest"]
    print(f"speedup (best/best): {speedup:.2f}x")
    print(f"trajectories bit-identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
