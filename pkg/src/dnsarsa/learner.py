"""
Neural-dynamic SARSA(lambda) learner.

All matrices are K x K with row i = action (intention) and column
j = state (CoS). One tick runs, in order:

    state/action coincidence  I
    transient pulse cells     TP+ / TP-   (onset and offset detectors)
    item-and-order memory     u           (eligibility trace)
    value opposition field    O           (gamma W(s',a') - W(s,a) at a transition)
    value cell                v           (sum of O)
    Q-weights                 W           (dW/dt = alpha G (r + v) u)

The state/action cell of a pair stays on for as long as the chosen behavior
runs (its intention and the previous CoS are both active), so consecutive
pairs hand over back to back: the new pair's TP+ pulses positive exactly
when the previous pair's TP+ pulses negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dnf import DT, check_dt
from .errors import ConfigurationError

SA_MODES = ("gain", "others")
WEIGHT_GATES = ("sa", "none", "bounded")


@dataclass(frozen=True)
class LearnerParams:
    gain: float = 1.0
    theta_sa: float = 0.25
    sa_mode: str = "gain"
    # an intention coinciding with its own CoS is a completion, not a transition
    exclude_completion: bool = True
    tau_tp: float = 0.5
    # Euler sub-steps per tick for the pulse cells (one step overshoots the peak by 3%)
    tp_substeps: int = 8
    alpha_et: float = 1.1
    beta_et: float = 0.8
    tau_u: float = 0.5
    tau_o: float = 0.1
    gamma: float = 0.8
    tp_gate: float = 0.05
    tau_v: float = 0.2
    alpha_w: float = 0.05
    weight_gate: str = "sa"
    w_max: float = 2.0

    def __post_init__(self):
        if self.sa_mode not in SA_MODES:
            raise ConfigurationError(f"sa_mode must be one of {SA_MODES}")
        if self.weight_gate not in WEIGHT_GATES:
            raise ConfigurationError(f"weight_gate must be one of {WEIGHT_GATES}")
        if min(self.tau_tp, self.tau_u, self.tau_o, self.tau_v) <= 0:
            raise ConfigurationError("time constants must be > 0")
        if self.tp_substeps < 1:
            raise ConfigurationError("tp_substeps must be >= 1")

    def min_tau(self):
        return min(self.tau_tp, self.tau_u, self.tau_o, self.tau_v)


@dataclass
class LearnerState:
    I: np.ndarray
    tp_plus: np.ndarray
    tp_minus: np.ndarray
    u: np.ndarray
    O: np.ndarray
    v: float
    W: np.ndarray

    @classmethod
    def zeros(cls, k, W=None):
        z = lambda: np.zeros((k, k))
        W = z() if W is None else np.array(W, dtype=float)
        if W.shape != (k, k):
            raise ConfigurationError(f"W must be {k}x{k}, got {W.shape}")
        return cls(z(), z(), z(), z(), z(), 0.0, W)

    def copy(self):
        return LearnerState(self.I.copy(), self.tp_plus.copy(), self.tp_minus.copy(),
                            self.u.copy(), self.O.copy(), self.v, self.W.copy())


def compute_sa(eb, lp: LearnerParams = LearnerParams()):
    """Coincidence of intention i and CoS j, ``g * H(f(int_i) f(cos_j) - theta)``."""
    coinc = np.outer(eb.int_out(), eb.cos_out())
    I = lp.gain * (coinc > lp.theta_sa)
    if lp.sa_mode == "others":
        # prefactor = summed activation of all *other* intention and CoS nodes
        others_int = eb.d_int.sum() - eb.d_int
        others_cos = eb.d_cos.sum() - eb.d_cos
        I = np.outer(others_int, others_cos) * (coinc > lp.theta_sa)
    if lp.exclude_completion:
        np.fill_diagonal(I, 0.0)
    return I


def step_tp(tp_plus, tp_minus, I, dt=DT, tau=0.5, substeps=8):
    check_dt(dt, tau, "TP cells")
    k = dt / tau / substeps
    for _ in range(substeps):
        tp_plus, tp_minus = (tp_plus + k * (-tp_plus + I - tp_minus),
                             tp_minus + k * (-tp_minus + I))
    return tp_plus, tp_minus


def step_et(u, tp_plus, dt=DT, lp: LearnerParams = LearnerParams()):
    """Shunting on-center off-surround working memory driven by TP+ onsets."""
    check_dt(dt, lp.tau_u, "eligibility trace")
    p = np.maximum(tp_plus, 0.0)
    a, b = lp.alpha_et, lp.beta_et
    drift = (1.0 - u) * (a * p + b * u) - u * (a * (p.sum() - p) + b * (u.sum() - u))
    # Euler can step past the shunting bounds for very large inputs
    return np.clip(u + (dt / lp.tau_u) * drift, 0.0, 1.0)


def step_vo(O, u, tp_plus, W, dt=DT, lp: LearnerParams = LearnerParams()):
    check_dt(dt, lp.tau_o, "value opposition field")
    held = (u > 0) * W
    onset = tp_plus > lp.tp_gate
    offset = -tp_plus > lp.tp_gate
    drive = lp.gamma * held * onset - held * offset
    return O + (dt / lp.tau_o) * (-O + drive)


def step_value_cell(v, O, dt=DT, tau=0.2):
    check_dt(dt, tau, "value cell")
    return v + (dt / tau) * (-v + O.sum())


def weight_gate(W, I, lp: LearnerParams):
    if lp.weight_gate == "sa":
        return 1.0 - np.clip(I / lp.gain, 0.0, 1.0)
    if lp.weight_gate == "bounded":
        return 1.0 - W / lp.w_max
    return 1.0


def update_weights(W, u, v, r, dt=DT, lp: LearnerParams = LearnerParams(), I=None):
    if lp.alpha_w == 0:
        return W
    if I is None:
        I = np.zeros_like(W)
    return W + dt * lp.alpha_w * weight_gate(W, I, lp) * (r + v) * u


def step_learner(state: LearnerState, eb, r, dt=DT, lp: LearnerParams = LearnerParams()) -> LearnerState:
    """One tick of the whole chain, in fixed order; ``eb`` must already be stepped."""
    I = compute_sa(eb, lp)
    tp_plus, tp_minus = step_tp(state.tp_plus, state.tp_minus, I, dt, lp.tau_tp, lp.tp_substeps)
    u = step_et(state.u, tp_plus, dt, lp)
    O = step_vo(state.O, u, tp_plus, state.W, dt, lp)
    v = step_value_cell(state.v, O, dt, lp.tau_v)
    W = update_weights(state.W, u, v, r, dt, lp, I)
    return LearnerState(I, tp_plus, tp_minus, u, O, float(v), W)


def reset_traces(state: LearnerState) -> LearnerState:
    state.u = np.zeros_like(state.u)
    return state


# closed-form TP responses, used as oracles

def tp_onset_response(t, i0=1.0, tau=0.5):
    """(TP+, TP-) from rest under a constant input switched on at t=0."""
    t = np.asarray(t, dtype=float)
    return i0 * (t / tau) * np.exp(-t / tau), i0 * (1.0 - np.exp(-t / tau))


def tp_offset_response(t, i0=1.0, tau=0.5):
    """(TP+, TP-) after removing an equilibrated input at t=0."""
    t = np.asarray(t, dtype=float)
    return -i0 * (t / tau) * np.exp(-t / tau), i0 * np.exp(-t / tau)
