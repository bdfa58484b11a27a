"""Fog compute offloading: standalone vs collaborating fleet.

Each tagged vehicle issues 1-TFLOP jobs as a Poisson stream. Standalone it
owns 5 TFLOPS (200 ms per job, queueing under bursts); in the fog its radio
neighbors within the 50 ms response window share the work, and with
infrastructure participation the base station's 3 TFLOPS join over the
sector link.
"""

import numpy as np

from fogfleet import ScenarioConfig
from fogfleet.engine import run_round

cfg = ScenarioConfig(rounds=1, round_duration_s=60.0, experiment="compute")
density = cfg.compute_density_veh_per_100m

results = {}
for fog, infra, label in ((0.0, False, "standalone"),
                          (1.0, False, "fog, vehicles only"),
                          (1.0, True, "fog + infrastructure")):
    row, traces = run_round(cfg, density, fog, infra, round_index=0, collect_traces=True)
    jobs = traces[1]
    durations = np.array([j["duration_s"] for j in jobs if j["duration_s"] == j["duration_s"]])
    on_time = sum(j["on_time"] for j in jobs)
    results[label] = (row, durations, on_time)
    print(f"{label}:")
    print(f"  jobs {row['jobs_issued']}, completed {row['jobs_completed']}, "
          f"on time (<= {cfg.job_deadline_s * 1000:.0f} ms): {on_time}")
    print(f"  completion mean {durations.mean() * 1000:6.1f} ms, "
          f"p50 {np.percentile(durations, 50) * 1000:6.1f}, "
          f"p90 {np.percentile(durations, 90) * 1000:6.1f}")
    print(f"  responders per job {row['mean_responders']:.2f}, "
          f"dispatch {row['mean_dispatch_s'] * 1000:.1f} ms")
    print()

base_on_time = results["standalone"][2]
fog_on_time = results["fog, vehicles only"][2]
print(f"on-time processing rate vs standalone: {100 * fog_on_time / base_on_time:.0f}%")
off = results["fog, vehicles only"][1].mean()
on = results["fog + infrastructure"][1].mean()
print(f"infrastructure participation trims mean completion another "
      f"{100 * (off - on) / off:.1f}% ({off * 1000:.1f} -> {on * 1000:.1f} ms)")
