"""
Ring world: an agent turning on the spot among colored blocks.

Blocks sit at evenly spaced angles around the agent. The camera image is
replaced by an analytic renderer that places one Gaussian bump per visible
block on a (hue x pixel-column) grid. Rewards follow a five-item target
sequence of completed behaviors.
"""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

COLOR_NAMES = ("R", "G", "B", "Y")
TWO_PI = 2.0 * np.pi


def parse_sequence(text, names=COLOR_NAMES):
    """``"G,B,Y,R,G"`` -> ``(1, 2, 3, 0, 1)``."""
    if isinstance(text, str):
        items = [s.strip() for s in text.replace("->", ",").split(",") if s.strip()]
    else:
        items = list(text)
    out = []
    for item in items:
        if isinstance(item, str) and not item.lstrip("-").isdigit():
            try:
                out.append(names.index(item.upper()))
            except ValueError:
                raise ConfigurationError(f"unknown color {item!r}") from None
        else:
            out.append(int(item))
    return tuple(out)


def format_sequence(seq, names=COLOR_NAMES):
    return ",".join(names[i] if 0 <= i < len(names) else str(i) for i in seq)


def wrap_angle(a):
    """Map to [0, 2*pi)."""
    return np.mod(a, TWO_PI)


def wrap_bearing(a):
    """Map to [-pi, pi)."""
    return np.mod(a + np.pi, TWO_PI) - np.pi


def hue_rows(n_colors, n_hue):
    if n_hue < n_colors:
        raise ConfigurationError("need at least one hue bin per color")
    return tuple(int((c + 0.5) * n_hue / n_colors) for c in range(n_colors))


@dataclass(frozen=True)
class WorldParams:
    n_blocks: int = 16
    n_colors: int = 4
    fov: float = np.deg2rad(120.0)
    max_omega: float = np.pi / 2
    block_width: float = np.deg2rad(8.0)
    sigma_bearing: float = np.deg2rad(4.0)
    sigma_hue: float = 1.0
    amplitude: float = 4.0


@dataclass
class RingWorld:
    params: WorldParams
    heading: float
    angles: np.ndarray
    colors: np.ndarray

    def layout(self):
        return [{"angle_deg": float(np.rad2deg(a)), "color": COLOR_NAMES[c] if c < len(COLOR_NAMES) else int(c)}
                for a, c in zip(self.angles, self.colors)]


def reset(params: WorldParams = WorldParams(), seed=0) -> RingWorld:
    """Place blocks on an even ring and randomize the heading.

    Colors are interleaved: every run of ``n_colors`` consecutive slots holds
    each color once, in an order drawn from the seeded generator.
    """
    n, k = params.n_blocks, params.n_colors
    if k < 1 or n < k or n % k:
        raise ConfigurationError(f"{n} blocks cannot be split evenly into {k} colors")
    spacing = TWO_PI / n
    if spacing < params.block_width:
        raise ConfigurationError(
            f"block spacing {np.rad2deg(spacing):.2f} deg < block width "
            f"{np.rad2deg(params.block_width):.2f} deg")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    colors = np.concatenate([rng.permutation(k) for _ in range(n // k)])
    angles = np.arange(n) * spacing
    heading = float(rng.uniform(0.0, TWO_PI))
    return RingWorld(params, heading, angles, colors)


def dump_layout(world: RingWorld, path):
    with open(path, "w") as fh:
        json.dump(world.layout(), fh, indent=1)


def render_percept(world: RingWorld, n_hue: int, n_pos: int) -> np.ndarray:
    """Hue x position input map with one Gaussian bump per block in view."""
    p = world.params
    if n_pos < 8:
        raise ConfigurationError("need at least 8 position bins")
    bearing = wrap_bearing(world.angles - world.heading)
    visible = np.abs(bearing) <= p.fov / 2
    if not visible.any():
        return np.zeros((n_hue, n_pos))
    sig_pos = p.sigma_bearing / (p.fov / n_pos)
    centres = (bearing[visible] / p.fov + 0.5) * n_pos - 0.5
    gp = np.exp(-(np.arange(n_pos)[None, :] - centres[:, None]) ** 2 / (2 * sig_pos ** 2))
    gh = _hue_profiles(p.n_colors, n_hue, p.sigma_hue)[world.colors[visible]]
    return p.amplitude * (gh.T @ gp)


@lru_cache(maxsize=16)
def _hue_profiles(n_colors, n_hue, sigma):
    h = np.arange(n_hue)
    out = np.empty((n_colors, n_hue))
    for c, r in enumerate(hue_rows(n_colors, n_hue)):
        d = np.abs(h - r)
        d = np.minimum(d, n_hue - d)
        out[c] = np.exp(-d ** 2 / (2 * sigma ** 2))
    return out


def apply_motor(world: RingWorld, omega: float, dt: float) -> RingWorld:
    m = world.params.max_omega
    omega = min(max(float(omega), -m), m)
    world.heading = float(wrap_angle(world.heading + omega * dt))
    return world


@dataclass
class RewardSchedule:
    target: tuple = (1, 2, 3, 0, 1)
    reward_value: float = 1.0
    reward_duration: int = 16
    history: List[int] = field(default_factory=list)
    remaining: int = 0
    episodes: int = 0

    def __post_init__(self):
        self.target = tuple(int(x) for x in self.target)
        if not self.target:
            raise ConfigurationError("empty target sequence")


def step_reward(rs: RewardSchedule, completed: Optional[int] = None):
    """Advance one tick; ``completed`` is set on CoS-onset ticks only.

    After a match the history keeps only its last entry, so consecutive
    targets may share a boundary item but one completion never triggers two
    episodes.
    """
    if completed is not None:
        rs.history.append(int(completed))
        n = len(rs.target)
        if len(rs.history) > n:
            del rs.history[:-n]
        if tuple(rs.history) == rs.target:
            rs.remaining = rs.reward_duration
            rs.episodes += 1
            rs.history = rs.history[-1:]
    r = 0.0
    if rs.remaining > 0:
        r = rs.reward_value
        rs.remaining -= 1
    return rs, r


def count_reward_episodes(completions: Sequence[int], target) -> int:
    """Episodes the schedule would emit for a stream of completions."""
    rs = RewardSchedule(target=tuple(target))
    for c in completions:
        step_reward(rs, c)
    return rs.episodes
