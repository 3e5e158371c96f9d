"""
Scripted behavior streams for driving the learner without the world.

Node outputs are square waves: each behavior's intention is on for
``t_exec`` seconds, then its CoS switches on (the previous CoS goes off)
and, after ``t_gap`` seconds, the next intention starts. This isolates the
learner from perception and motor timing while keeping the same tick order
as the closed loop (reward, then learner).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dnf import DT
from .environment import RewardSchedule, step_reward
from .experiment import ExperimentConfig, RunLog
from .learner import LearnerParams, LearnerState, step_learner


@dataclass
class SquareNodes:
    """Stand-in for an EBSet with prescribed node outputs."""
    f_int: np.ndarray
    f_cos: np.ndarray

    @property
    def k(self):
        return len(self.f_int)

    # activations only matter for the "others" coincidence prefactor
    @property
    def d_int(self):
        return np.where(self.f_int > 0.5, 5.0, -5.0)

    @property
    def d_cos(self):
        return np.where(self.f_cos > 0.5, 5.0, -5.0)

    def int_out(self):
        return self.f_int

    def cos_out(self):
        return self.f_cos


def random_walk(k, n, rng, start=0):
    """``n + 1`` completions, no behavior following itself."""
    seq = [start]
    for _ in range(n):
        seq.append(int((seq[-1] + rng.integers(1, k)) % k))
    return seq


def square_waves(sequence, k, t_exec=3.0, t_gap=0.5, dt=DT):
    """Intention/CoS output traces for a completion sequence.

    ``sequence[0]`` is the starting state (its CoS is on from t = 0); each
    later item is executed then completed.
    """
    n_exec, n_gap = int(round(t_exec / dt)), int(round(t_gap / dt))
    per = n_exec + n_gap
    T = n_gap + per * (len(sequence) - 1) + n_gap
    f_int, f_cos = np.zeros((T, k)), np.zeros((T, k))
    f_cos[:, sequence[0]] = 1.0
    onsets = []
    t = n_gap
    for prev, b in zip(sequence[:-1], sequence[1:]):
        f_int[t:t + n_exec, b] = 1.0
        t += n_exec
        f_cos[t:, :] = 0.0
        f_cos[t:, b] = 1.0
        onsets.append(t)
        t += n_gap
    return f_int, f_cos, np.array(onsets, dtype=int)


def scripted_run(sequence, k=3, W=None, lp: LearnerParams = LearnerParams(), target=None,
                 reward_value=1.0, reward_duration=16, t_exec=3.0, t_gap=0.5, dt=DT) -> RunLog:
    """Run the learner over a scripted completion sequence; returns a RunLog."""
    f_int, f_cos, onsets = square_waves(sequence, k, t_exec, t_gap, dt)
    T = len(f_int)
    if target is None:
        target = tuple(range(k)) + (0,)
    names = ",".join(str(x) for x in target)
    cfg = ExperimentConfig(K=k, target=names, total_steps=T, exploration_steps=0, dt=dt,
                           reward_value=reward_value, reward_duration=reward_duration,
                           alpha_w=lp.alpha_w, gamma=lp.gamma)
    rs = RewardSchedule(tuple(target), reward_value, reward_duration)
    state = LearnerState.zeros(k, W)
    onset_at = {int(s): b for s, b in zip(onsets, sequence[1:])}
    r_arr, v_arr, dw = np.zeros(T), np.zeros(T), np.zeros(T)
    on_W, on_u = [], []
    for t in range(T):
        completed = onset_at.get(t)
        _, r = step_reward(rs, completed)
        if completed is not None:
            on_W.append(state.W.copy())
            on_u.append(state.u.copy())
        W0 = state.W
        state = step_learner(state, SquareNodes(f_int[t], f_cos[t]), r, dt, lp)
        r_arr[t], v_arr[t] = r, state.v
        dw[t] = np.abs(state.W - W0).sum()
    active = lambda f: np.where(f.max(axis=1) > 0.5, f.argmax(axis=1), -1)
    return RunLog(
        config=cfg, t=np.arange(T) * dt, r=r_arr, v=v_arr, dW=dw,
        intention=active(f_int), cos=active(f_cos), int_out=f_int, cos_out=f_cos,
        heading=np.zeros(T), noise_steps=np.zeros(0, dtype=int),
        onset_step=onsets, onset_behavior=np.array(sequence[1:], dtype=int),
        onset_W=np.array(on_W).reshape(-1, k, k), onset_u=np.array(on_u).reshape(-1, k, k),
        W_final=state.W.copy())
