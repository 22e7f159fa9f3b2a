"""Streaming covariance 101: the incremental update tracks the batch
definition exactly, and the decay factor controls how fast old frames fade.

Run with: python demos/streaming_covariance.py
"""
import numpy as np

import covstream as cs

rng = np.random.default_rng(0)

# ---------------------------------------------------------------------------
# A weighted stream: 200 noisy 4-D frames whose relevance weights vary.
# ---------------------------------------------------------------------------
d = 4
frames = [
    cs.WeightedFrame(rng.standard_normal(d) + 2.0, float(w))
    for w in rng.uniform(0.2, 1.0, size=200)
]

state = cs.initialize_state(frames[:30], decay=0.95)
worst = 0.0
for t in range(30, len(frames)):
    state = cs.incremental_update(state, frames[t])
    cov, mean, _, _ = cs.batch_weighted_covariance(frames[: t + 1], 0.95)
    worst = max(worst, np.abs(state.cov - cov).max())
print(f"incremental vs batch over {len(frames)} frames: "
      f"largest entry gap {worst:.3e}")

# ---------------------------------------------------------------------------
# Forgetting. Halfway through, the stream jumps to a different regime; the
# running mean converges to the new regime faster when decay is smaller.
# ---------------------------------------------------------------------------
before = rng.standard_normal((100, 1)) + 0.0
after = rng.standard_normal((100, 1)) + 5.0
jumpy = [cs.WeightedFrame(f, 1.0) for f in np.vstack([before, after])]

print("\nrunning mean 30 frames after a 0 -> 5 regime change:")
for decay in (1.0, 0.95, 0.85):
    state = cs.initialize_state(jumpy[:30], decay)
    for frame in jumpy[30:130]:
        state = cs.incremental_update(state, frame)
    print(f"  decay {decay:4.2f}: mean {state.mean[0]:6.3f}")
print("(decay 1 never forgets, so the old regime drags the mean down)")
