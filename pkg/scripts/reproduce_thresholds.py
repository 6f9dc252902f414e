"""Sharp thresholds, their minimizing parameters, and the balance-point surfaces."""

import sys
import time

from sharplad import harness
from sharplad.harness import ExperimentConfig

out = sys.argv[1] if len(sys.argv) > 1 else "out/thresholds"
cfg = ExperimentConfig(experiment="threshold", output_dir=out, grid_step=0.05)

for kind in cfg.kinds:
    t0 = time.perf_counter()
    res = harness.run_threshold(cfg, kinds=(kind,))[kind]
    print(f"{kind:9s}  s* = {res.threshold:.5f} +- {res.tolerance:.1e}  "
          f"argmin = {tuple(round(v, 5) for v in res.argmin_params)}  ({time.perf_counter() - t0:.1f} s)")
harness.run_threshold(cfg)  # both kinds in one file, served from the cache

surf = harness.run_surface(cfg)
for kind, v in surf.items():
    print(f"{kind:9s}  surface minimum {v['min_row']}  -> {v['csv']}")
