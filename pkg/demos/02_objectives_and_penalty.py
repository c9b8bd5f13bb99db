"""
The two objectives
==================

The search minimizes a pair: f1 = -entropy (more detail is better) and
f2 = feature distance to the original plus a weighted brightness
penalty (stay recognizable, land in a sane exposure band). This script
maps both objectives over a 2-D slice of the parameter space so you can
see the tension the Pareto front negotiates.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from evolight import (
    EnhanceParams,
    FallbackFeatureExtractor,
    FitnessEvaluator,
    PenaltyConfig,
    brightness_penalty,
    mean_brightness,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(11)
dark = np.clip(rng.random((64, 64, 3)) * 0.25, 0, 1)

#%%
# The penalty alone: a two-sided hinge around [0.35, 0.7], scaled by 30
# in f2. Inside the band it is exactly zero.

cfg = PenaltyConfig()
m = np.linspace(0, 1, 401)
pen = [brightness_penalty(v, cfg) for v in m]

fig, ax = plt.subplots(figsize=(6, 3))
ax.plot(m, pen)
ax.axvspan(cfg.low, cfg.high, color="tab:green", alpha=0.15,
           label=f"band [{cfg.low}, {cfg.high}]")
ax.set_xlabel("mean brightness")
ax.set_ylabel("penalty (unweighted)")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "brightness_penalty.png", dpi=110)
plt.close(fig)

#%%
# Both objectives over a brightness x gamma grid (contrast fixed at 1.2).
# f1 keeps improving as the image brightens and spreads; f2 eventually
# punishes drifting too far from the original.

evaluator = FitnessEvaluator(dark, FallbackFeatureExtractor(), cfg)
b_axis = np.linspace(-10, 60, 29)
g_axis = np.linspace(1, 2, 21)
f1 = np.empty((len(g_axis), len(b_axis)))
f2 = np.empty_like(f1)
for i, g in enumerate(g_axis):
    for j, b in enumerate(b_axis):
        ev = evaluator(EnhanceParams(float(b), 1.2, float(g)))
        f1[i, j], f2[i, j] = ev.fitness.f1, ev.fitness.f2

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
for ax, grid, label in ((axes[0], f1, "f1 = -entropy"),
                        (axes[1], f2, "f2 = distance + 30*penalty")):
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=(b_axis[0], b_axis[-1], g_axis[0], g_axis[-1]))
    ax.set_xlabel("brightness shift")
    ax.set_ylabel("gamma")
    ax.set_title(label)
    fig.colorbar(im, ax=ax)
fig.tight_layout()
fig.savefig(OUT / "objective_landscape.png", dpi=110)
plt.close(fig)

#%%
# A slice along brightness shows the trade-off directly: once the mean
# leaves the band, f2 climbs steeply while f1 flattens out.

print(f"{'b':>6} {'mean':>7} {'f1':>8} {'f2':>8}")
for b in (0, 15, 30, 45, 60):
    ev = evaluator(EnhanceParams(float(b), 1.2, 1.5))
    print(f"{b:>6} {ev.mean_brightness:>7.3f} "
          f"{ev.fitness.f1:>8.3f} {ev.fitness.f2:>8.3f}")
print("figures written to", OUT)
