"""
Anatomy of one search
=====================

Runs the full NSGA-II search on a single dark image and looks inside:
the final Pareto front in objective space, the per-generation history,
and the representative the engine actually returns (the front member
with the highest entropy, which by construction is never worse than
the untouched input).
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from evolight import (
    EvolutionConfig,
    FallbackFeatureExtractor,
    ParamBounds,
    PenaltyConfig,
    enhance,
    evolve,
    image_entropy,
    mean_brightness,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(21)
dark = np.clip(rng.random((96, 96, 3)) * 0.2
               + np.linspace(0, 0.06, 96)[:, None, None], 0, 1)

#%%
# Default budget: population 50, 5 generations, hill climbing on the top
# 10% each generation. Seeded, so this cell is reproducible.

cfg = EvolutionConfig(rng_seed=3)
rep, front, history = evolve(dark, FallbackFeatureExtractor(),
                             ParamBounds(), PenaltyConfig(), cfg)

p = rep.params
print(f"representative: b={p.brightness:.2f} c={p.contrast:.3f} "
      f"gamma={p.gamma:.3f}")
print(f"entropy {image_entropy(dark):.3f} -> {rep.evaluation.entropy:.3f} bits")
print(f"brightness {mean_brightness(dark):.3f} -> "
      f"{rep.evaluation.mean_brightness:.3f}")
print(f"front size {len(front)}")

#%%
# The front: each point is a non-dominated parameter setting. The
# representative (marked) sits at the low-f1 end; other members trade
# entropy for staying closer to the original.

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
f1s = [ind.fitness.f1 for ind in front]
f2s = [ind.fitness.f2 for ind in front]
axes[0].scatter(f1s, f2s, s=30)
axes[0].scatter([rep.fitness.f1], [rep.fitness.f2], s=120, marker="*",
                color="tab:red", label="representative")
axes[0].set_xlabel("f1 = -entropy")
axes[0].set_ylabel("f2 = distance + penalty")
axes[0].set_title("final Pareto front")
axes[0].legend()

gens = [h.generation for h in history]
axes[1].plot(gens, [h.best_entropy for h in history], "o-",
             label="best entropy")
ax2 = axes[1].twinx()
ax2.plot(gens, [h.mutation_rate for h in history], "s--",
         color="tab:orange", label="mutation rate")
axes[1].set_xlabel("generation")
axes[1].set_ylabel("bits")
ax2.set_ylabel("rate")
axes[1].set_title("history")
fig.tight_layout()
fig.savefig(OUT / "search_front_history.png", dpi=110)
plt.close(fig)

#%%
# Before / after.

fig, axes = plt.subplots(1, 2, figsize=(9, 4))
axes[0].imshow(dark)
axes[0].set_title("input")
axes[1].imshow(enhance(dark, rep.params))
axes[1].set_title("enhanced")
for ax in axes:
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "search_before_after.png", dpi=110)
plt.close(fig)

for h in history:
    print(f"gen {h.generation}: best entropy {h.best_entropy:.3f}, "
          f"mean f2 {h.mean_f2:.3f}, rate {h.mutation_rate:.2f}, "
          f"front {h.front_size}")
print("figures written to", OUT)
