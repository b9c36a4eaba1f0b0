"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Runs the same two workloads in two subprocesses, one with
SWARMSO3_DISABLE_NUMBA=1, and prints a comparison table. JIT compilation
is excluded by a warm-up run in each child.

Usage: python benchmarks/bench_backends.py [--steps-scale S]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads(scale):
    import numpy as np

    import swarmso3 as sw

    field = sw.FieldSpec(
        kind="gaussian", source=[90.0, 60.0, 30.0], amplitude=100.0,
        width=[60.0, 70.0, 55.0],
    )
    stiff = sw.SimConfig(
        n_agents=4, speed=0.6, dt=1e-4, t_end=max(2e-4, 2.0 * scale), seed=323,
        controller=sw.ControllerConfig(k_w=417.33, delta_star=0.4),
        trajectory=sw.DesiredAttitudeTrajectory(
            mode="prescribed", r_d=np.eye(3),
            omega_known=[np.pi / 2, 0, 0], omega_unknown=[0, 0, -np.pi / 20],
            omega_max_declared=np.pi / 20,
        ),
        placement=sw.PlacementSpec(kind="ball", radius=3.0),
        attitudes=sw.AttitudeInitSpec(kind="ball", radius=2.5),
        name="bench-stiff",
    )
    seek = sw.SimConfig(
        n_agents=10, speed=15.0, dt=0.005, t_end=max(0.01, 10.0 * scale), seed=3,
        controller=sw.ControllerConfig(k_w=2.7768, delta_star=0.4),
        trajectory=sw.DesiredAttitudeTrajectory(
            mode="source-seeking", r_d=np.eye(3),
            omega_known=[np.pi, 0, 0], omega_unknown=[0, 0, 0],
            omega_max_declared=np.pi / 4,
        ),
        placement=sw.PlacementSpec(kind="ball", radius=3.5),
        attitudes=sw.AttitudeInitSpec(kind="ball", radius=1.5),
        field=field, rate_frame="body", name="bench-seek",
    )
    return [("stiff tracking (N=4, dt=1e-4)", stiff), ("source seeking (N=10)", seek)]


def child(scale):
    import swarmso3 as sw
    from swarmso3 import run

    results = {"numba": sw.NUMBA_ENABLED, "workloads": {}}
    for name, cfg in _workloads(scale):
        run(cfg)  # warm-up: JIT compile, caches
        t0 = time.perf_counter()
        log = run(cfg)
        elapsed = time.perf_counter() - t0
        steps = len(log) - 1
        results["workloads"][name] = {
            "steps": steps,
            "seconds": elapsed,
            "steps_per_sec": steps / elapsed,
        }
    print(json.dumps(results))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps-scale", type=float, default=1.0)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.child:
        child(args.steps_scale)
        return

    outputs = {}
    for label, disable in (("numba", "0"), ("numpy fallback", "1")):
        env = dict(os.environ, SWARMSO3_DISABLE_NUMBA=disable)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--child",
             "--steps-scale", str(args.steps_scale)],
            env=env, capture_output=True, text=True, check=True,
        )
        outputs[label] = json.loads(proc.stdout.strip().splitlines()[-1])
        print(f"{label}: numba enabled = {outputs[label]['numba']}")

    print()
    print(f"{'workload':<32} {'backend':<16} {'steps':>8} {'seconds':>9} {'steps/s':>10}")
    for name in outputs["numba"]["workloads"]:
        for label in outputs:
            w = outputs[label]["workloads"][name]
            print(f"{name:<32} {label:<16} {w['steps']:>8} {w['seconds']:>9.3f} {w['steps_per_sec']:>10.0f}")
        ratio = (outputs["numba"]["workloads"][name]["steps_per_sec"]
                 / outputs["numpy fallback"]["workloads"][name]["steps_per_sec"])
        print(f"{'':<32} speedup: {ratio:.1f}x")


if __name__ == "__main__":
    main()
