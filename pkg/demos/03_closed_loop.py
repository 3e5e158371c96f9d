"""
Closed loop on the ring
=======================

A short exploitation run with a hand-made chain of weights
(R->G->B->Y->R) plus an over-valued shortcut B->R. With learning on, the
shortcut loses value each time it is taken until the agent settles on the
rewarded cycle. Pass ``--full`` for a complete 100k-step run from scratch
(about a minute).
"""

import sys

import numpy as np

from dnsarsa.environment import format_sequence
from dnsarsa.experiment import ExperimentConfig, run_experiment, summary_dict

R, G, B, Y = 0, 1, 2, 3

if "--full" in sys.argv:
    log = run_experiment(ExperimentConfig(seed=1))
    print(summary_dict(log))
    sys.exit()

W = np.zeros((4, 4))
W[G, R], W[B, G], W[Y, B], W[R, Y] = 0.4, 0.15, 0.2, 0.3
W[R, B] = 0.4
cfg = ExperimentConfig(seed=7, total_steps=20_000, exploration_steps=0)
log = run_experiment(cfg, W)

c = list(log.onset_behavior)
print("last completions:", format_sequence(c[-24:]))
shortcut = [log.onset_W[k][R, B] for k in range(1, len(c)) if (c[k - 1], c[k]) == (B, R)]
print("B->R weight each time it is taken:", np.round(shortcut, 3))
print("reward episodes:", len(log.reward_episode_steps()))
