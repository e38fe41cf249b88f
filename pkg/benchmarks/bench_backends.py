"""Compare the JIT and pure-NumPy backends on the two hot workloads.

The backend is chosen at import time from the ``MRTPOWER_NUMBA`` environment
variable, so each (backend, workload) pair runs in a fresh subprocess.  Two
workloads cover the compiled kernels:

* ``sizing``: the full 24-cell sample-size grid (42-day design, four
  availability levels x six effect sizes) - dominated by the incomplete-beta
  and noncentral-F series in the distribution kernel;
* ``mc``: a Monte Carlo power run (42 subjects, default 200 replicates) -
  dominated by the error-process recursions and the per-replicate fits.

Each worker times a cold pass (first call, including any JIT compilation)
and the best of three warm passes, and reports a digest of the numeric
output so the parent can verify both backends produce identical results.

Usage::

    python3 benchmarks/bench_backends.py [--mc-reps N]
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time


def _run_sizing():
    from mrtpower.design import (
        TrialDesign,
        build_quadratic_features,
        elicit_quadratic_effect,
        make_availability,
    )
    from mrtpower.samplesize import SizingInputs, solve_sample_size

    design = TrialDesign(days=42, decisions_per_day=5, rho=0.4)
    features = build_quadratic_features(design)
    cells = []
    for average in (0.4, 0.5, 0.6, 0.7):
        tau = make_availability("constant", average, design)
        for dbar in (0.05, 0.06, 0.07, 0.08, 0.09, 0.10):
            result = solve_sample_size(
                SizingInputs(
                    design=design,
                    features=features,
                    tau=tau,
                    effect=elicit_quadratic_effect(0.0, dbar, 29, design),
                    alpha0=0.05,
                    power_target=0.80,
                )
            )
            cells.append((result.n, result.achieved_power))
    return cells


def _run_mc(reps):
    from mrtpower.design import (
        TrialDesign,
        elicit_quadratic_effect,
        make_availability,
    )
    from mrtpower.simulate import ErrorProcess, GenerativeModel, monte_carlo

    design = TrialDesign(days=42, decisions_per_day=5, rho=0.4)
    model = GenerativeModel.working_true(
        design,
        elicit_quadratic_effect(0.0, 0.10, 29, design),
        make_availability("constant", 0.5, design),
        ErrorProcess("ar1", 0.6),
    )
    report = monte_carlo(model, 42, reps, 0.05, seed=20260816)
    return report.to_dict()


def _worker(workload, mc_reps):
    from mrtpower import backend_name

    run = _run_sizing if workload == "sizing" else lambda: _run_mc(mc_reps)
    start = time.perf_counter()
    result = run()
    cold = time.perf_counter() - start
    warm = min(_timed(run) for _ in range(3))
    digest = hashlib.sha256(
        json.dumps(result, sort_keys=True, default=str).encode()
    ).hexdigest()
    print(json.dumps({
        "backend": backend_name(),
        "cold_s": cold,
        "warm_s": warm,
        "digest": digest,
    }))


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mc-reps", type=int, default=200,
                        help="Monte Carlo replicates for the mc workload")
    parser.add_argument("--worker", choices=("sizing", "mc"),
                        help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        _worker(args.worker, args.mc_reps)
        return

    rows = []
    digests = {}
    for workload in ("sizing", "mc"):
        for flag in ("1", "0"):
            env = dict(os.environ, MRTPOWER_NUMBA=flag)
            proc = subprocess.run(
                [sys.executable, __file__, "--worker", workload,
                 "--mc-reps", str(args.mc_reps)],
                capture_output=True, text=True, env=env, check=True,
            )
            stats = json.loads(proc.stdout)
            rows.append((workload, stats))
            digests.setdefault(workload, set()).add(stats["digest"])

    label = {"sizing": "sizing-table-24", "mc": f"monte-carlo-{args.mc_reps}"}
    print(f"{'workload':<18}{'backend':<10}{'cold (s)':>10}{'warm (s)':>10}")
    for workload, stats in rows:
        print(f"{label[workload]:<18}{stats['backend']:<10}"
              f"{stats['cold_s']:>10.3f}{stats['warm_s']:>10.3f}")
    for workload in ("sizing", "mc"):
        warm = {s["backend"]: s["warm_s"] for w, s in rows if w == workload}
        if len(warm) == 2:
            print(f"{label[workload]}: numba is "
                  f"{warm['python'] / warm['numba']:.1f}x the python "
                  f"backend on warm passes")
    mismatch = [w for w, seen in digests.items() if len(seen) != 1]
    if mismatch:
        print(f"ERROR: backends disagree on {mismatch}")
        raise SystemExit(1)
    print("backends produced bit-identical results on both workloads")


if __name__ == "__main__":
    main()
