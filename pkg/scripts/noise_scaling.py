"""Recovery error against dense uniform noise at a fixed adversarial fraction."""

import sys

from sharplad.harness import noise_scaling

kind = sys.argv[1] if len(sys.argv) > 1 else "amplitude"
rep = noise_scaling(kind, sigmas=(0.0003, 0.001, 0.003, 0.01, 0.03), seeds=range(10), s=0.1)
print(f"{kind}, s = 0.1, 10 seeds")
print("   sigma   |w|_1/m    dist1     ratio")
for sig, lvl, err, r in zip(rep["sigmas"], rep["mean_noise_level"], rep["mean_dist1"], rep["ratios"]):
    print(f"{sig:8.4f}  {lvl:.2e}  {err:.2e}  {r:.3f}")
print(f"ratio spread {rep['spread']:.3f}")
