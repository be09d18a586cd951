"""The curriculum schedule: bin probabilities decay from 'smallest only'
toward uniform, opening one new bin per update, entropy never decreasing."""

import numpy as np

from wavegraph.training import CurriculumState, curriculum_update, entropy

state = CurriculumState.initial(6)
print("bins are example sizes, smallest first; updates every 1500 iterations\n")
print("update  probabilities                                entropy")
for step in range(12):
    p = state.probabilities
    bar = "  ".join(f"{x:.3f}" for x in p)
    print(f"{step:4d}    [{bar}]  {entropy(p):.4f}")
    state = curriculum_update(state)

for _ in range(200):
    state = curriculum_update(state)
print(f"\nafter 200 more updates, max |p - 1/6| = "
      f"{np.abs(state.probabilities - 1 / 6).max():.2e}")
print("the fixed point is the uniform distribution over bins")
