"""
Fields, nodes and one behavior
==============================

A single colored block in front of the agent, one intention switched on by
hand. The percept field forms a peak on the block's hue row, the CoS field
lights up once the block is centred, and the CoS node switches the
intention off.
"""

import numpy as np

from dnsarsa import behavior as bh
from dnsarsa.dnf import DT
from dnsarsa.environment import RingWorld, WorldParams, apply_motor, render_percept

# one green block 25 degrees to the left of the heading
world = RingWorld(WorldParams(), 0.0, np.array([np.deg2rad(25)]), np.array([1]))
pp = bh.PerceptionParams()
perc = bh.Perception(pp)
mp = bh.MotorParams(k_p=1.0, omega_max=np.pi / 8)

# value input favours "search green"
eb = bh.EBSet.at_rest(4)
eb.d_val = np.array([0.0, 1.0, 0.0, 0.0])

for k in range(int(6 / DT)):
    inp = render_percept(world, pp.n_hue, pp.n_pos)
    ci = bh.cos_field_input(perc)
    perc = bh.step_percept_and_cos_fields(inp, eb, perc)
    ni, nc = bh.step_intention_nodes(eb), bh.step_cos_nodes(eb, ci)
    ni.d_cos = nc.d_cos
    eb = ni
    omega = bh.motor_command(perc, eb, mp)
    apply_motor(world, omega, DT)
    if k % 16 == 0:
        # block bearing relative to the heading, in degrees
        bearing = np.rad2deg(np.angle(np.exp(1j * (world.angles[0] - world.heading))))
        print(f"t={k * DT:4.1f}s  bearing {bearing:6.1f}  int {np.round(eb.int_out(), 2)}  "
              f"cos {np.round(eb.cos_out(), 2)}  omega {omega:+.3f}")

# The intention node for green wins, the agent turns until the block sits in
# the central window, the green CoS node fires and the intention is released.
