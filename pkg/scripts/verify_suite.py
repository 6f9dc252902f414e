"""Stability corridors, ROB margins around the thresholds, and DKW repetitions."""

import json
import sys

from sharplad import harness
from sharplad.harness import ExperimentConfig

out = sys.argv[1] if len(sys.argv) > 1 else "out/verify"

stab = harness.run_verify_stability(ExperimentConfig(experiment="verify_stability", m=5000, seeds=[0, 1],
                                                     num_pairs=500, output_dir=out))
for r in stab["reports"]:
    print(f"stability {r['kind']:9s} seed {r['seed']}: [{r['min_ratio']:.4f}, {r['max_ratio']:.4f}] "
          f"within [{r['lower'] - r['slack']:.3f}, {r['upper'] + r['slack']:.3f}]: {r['passed']}")

th = harness.load_thresholds(ExperimentConfig(output_dir=out))
for kind, t in th.items():
    s_vals = [round(t.threshold - 0.06, 4), round(t.threshold + 0.06, 4)]
    rob = harness.run_verify_rob(ExperimentConfig(experiment="verify_rob", kind=kind, m=5000, seeds=[0],
                                                  num_pairs=300, s_values=s_vals, output_dir=out), th)
    for c in rob["checks"]:
        print(f"rob {kind:9s} s={c['s']:.4f}: min margin {c['min_margin']:+.4f} (expect {c['expect']}) ok={c['ok']}")

dkw = harness.run_dkw(ExperimentConfig(experiment="dkw", output_dir=out))
print("dkw", json.dumps({k: dkw[k] for k in ("failures", "allowed_failures", "repetitions", "passed")}))
