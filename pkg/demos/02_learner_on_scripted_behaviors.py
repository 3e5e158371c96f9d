"""
The learner on scripted behaviors
=================================

Square-wave intention/CoS traces stand in for the closed loop, so the
learning chain can be watched in isolation: the eligibility memory holds a
recency gradient, rewarded chains gain value, and each weight change lines
up with a tabular SARSA(lambda) backup.
"""

import numpy as np

from dnsarsa.oracle import compare
from dnsarsa.scripted import random_walk, scripted_run

# three behaviors visited in the rewarded order 0 -> 1 -> 2 -> 0, twenty times
log = scripted_run([0] + [1, 2, 0] * 20, k=3, target=(0, 1, 2, 0))
print("weights after 20 rewarded cycles (row = action, column = state):")
print(np.round(log.W_final, 3))

# the memory just before the last completion: newest transition highest
u = log.onset_u[-1]
print("\neligibility memory at the last completion:")
print(np.round(u, 3))

# a random walk over three behaviors, compared with the tabular oracle
walk = random_walk(3, 202, np.random.default_rng(0))
report = compare(scripted_run(walk, k=3))
print("\nfirst rows of the comparison table:")
print("\n".join(report.table().splitlines()[:8]))
print("\n".join(report.table().splitlines()[-2:]))
