"""
Elementary behaviors: intention / CoS / value nodes, perceptual and CoS
fields, motor read-out and event segmentation.

One behavior per color. An active intention node puts a ridge of input on
its hue row in both fields; the perceptual field then carries a peak for
each block of that color in view, the motor read-out turns toward the
nearest one, and the CoS field lights up once that block sits inside the
central window. The CoS node then shuts its intention down and the value
nodes, reading the Q-weights of the newly reached state, bias which
intention wins the next competition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional

import numpy as np

from .dnf import (DT, FieldGrid, FieldParams, KernelParams, SigmoidParams,
                  check_dt, sigmoid, step_field)
from .environment import hue_rows
from .errors import WTAViolation


@dataclass(frozen=True)
class NodeCoefficients:
    tau_int: float = 0.3
    tau_cos: float = 0.3
    h_node: float = -5.0
    c_plus_int: float = 10.0
    c_minus_int: float = 20.0
    c_cos_int: float = 30.0
    c_val_int: float = 20.0
    c_plus_cos: float = 10.0
    c_minus_cos: float = 10.0
    c_int_cos: float = 2.0
    c_input_cos: float = 5.0
    # deterministic tie-break, favors low indices
    tie_bias: float = 0.01


@dataclass
class EBSet:
    d_int: np.ndarray
    d_cos: np.ndarray
    d_val: np.ndarray
    coeffs: NodeCoefficients = NodeCoefficients()
    sigmoid: SigmoidParams = SigmoidParams()

    @classmethod
    def at_rest(cls, k, coeffs=NodeCoefficients(), sig=SigmoidParams()):
        h = coeffs.h_node
        return cls(np.full(k, h), np.full(k, h), np.full(k, 1.0 / k), coeffs, sig)

    @property
    def k(self):
        return len(self.d_int)

    def int_out(self):
        return sigmoid(self.d_int, self.sigmoid)

    def cos_out(self):
        return sigmoid(self.d_cos, self.sigmoid)

    def active_intention(self, threshold=0.5):
        f = self.int_out()
        i = int(np.argmax(f))
        return i if f[i] > threshold else None


def _tie_bias(eb):
    k = eb.k
    if k < 2 or not eb.coeffs.tie_bias:
        return 0.0
    return eb.coeffs.tie_bias * (k - 1 - np.arange(k)) / (k - 1)


def step_intention_nodes(eb: EBSet, dt=DT) -> EBSet:
    c = eb.coeffs
    check_dt(dt, c.tau_int, "intention nodes")
    f = eb.int_out()
    drift = (-eb.d_int + c.h_node + c.c_plus_int * f + c.c_val_int * eb.d_val
             - c.c_minus_int * (f.sum() - f) - c.c_cos_int * eb.cos_out()
             + _tie_bias(eb))
    return replace(eb, d_int=eb.d_int + (dt / c.tau_int) * drift)


def step_cos_nodes(eb: EBSet, cos_field_input, dt=DT) -> EBSet:
    """CoS nodes; ``cos_field_input[i]`` is the supra-threshold CoS-field sum for behavior i.

    Besides the terms of the published node equation the CoS nodes inhibit
    each other (``c_minus_cos``): the last completed behavior stays the
    active state until the next one completes.
    """
    c = eb.coeffs
    check_dt(dt, c.tau_cos, "CoS nodes")
    f = eb.cos_out()
    fi = eb.int_out()
    drift = (-eb.d_cos + c.h_node + c.c_plus_cos * f
             - c.c_int_cos * (fi.sum() - fi)
             - c.c_minus_cos * (f.sum() - f)
             + c.c_input_cos * np.asarray(cos_field_input, dtype=float))
    return replace(eb, d_cos=eb.d_cos + (dt / c.tau_cos) * drift)


def read_value_nodes(eb: EBSet, W, noise=None, eps=1e-6):
    """Value read-out ``sum_j f(cos_j) W[i, j] + noise_i``, divisively normalized.

    Negative entries are clamped to zero first; when nothing positive is
    left (cold start) the result is uniform.
    """
    raw = np.asarray(W, dtype=float) @ eb.cos_out()
    if noise is not None:
        raw = raw + noise
    raw = np.maximum(raw, 0.0)
    total = raw.sum()
    if total < eps:
        return np.full(eb.k, 1.0 / eb.k)
    return raw / total


@dataclass(frozen=True)
class MotorParams:
    k_p: float = 3.0
    omega_max: float = np.pi / 2
    omega_search: float = np.pi / 3


def default_field_params(n_hue, n_pos, tau=0.1):
    # weak local excitation: peaks follow the input instead of latching
    kernel = KernelParams(amp_exc=0.6, sigma_exc=1.0, amp_inh=0.15, sigma_inh=3.0,
                          amp_global=0.0)
    return FieldParams(shape=(n_hue, n_pos), tau=tau, h=-5.0, kernel=kernel,
                       sigmoid=SigmoidParams(5.0, 0.0), circular=(True, False))


@dataclass(frozen=True)
class PerceptionParams:
    n_colors: int = 4
    n_hue: int = 16
    n_pos: int = 40
    fov: float = np.deg2rad(120.0)
    ridge_amp: float = 3.0
    ridge_sigma: float = 1.0
    percept_to_cos: float = 4.0
    center_fraction: float = 0.2
    field_tau: float = 0.1

    @property
    def rows(self):
        return hue_rows(self.n_colors, self.n_hue)

    def field_params(self):
        return default_field_params(self.n_hue, self.n_pos, self.field_tau)

    def ridge_profiles(self):
        """K x H hue profiles of the intention ridges."""
        h = np.arange(self.n_hue)
        out = np.empty((self.n_colors, self.n_hue))
        for i, r in enumerate(self.rows):
            d = np.abs(h - r)
            d = np.minimum(d, self.n_hue - d)
            out[i] = np.exp(-d ** 2 / (2 * self.ridge_sigma ** 2))
        return out

    def center_mask(self):
        p = self.n_pos
        half = self.center_fraction * p / 2
        centres = np.arange(p) + 0.5 - p / 2
        return (np.abs(centres) <= half).astype(float)

    def column_bearing(self, col):
        """Bearing (rad) of a fractional column index."""
        return ((np.asarray(col, dtype=float) + 0.5) / self.n_pos - 0.5) * self.fov


@dataclass
class Perception:
    """Perceptual field and CoS field over the same hue x position grid."""
    params: PerceptionParams
    percept: FieldGrid = None
    cos: FieldGrid = None
    _ridges: np.ndarray = field(default=None, repr=False)
    _mask: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        fp = self.params.field_params()
        if self.percept is None:
            self.percept = FieldGrid(fp)
        if self.cos is None:
            self.cos = FieldGrid(fp)
        if self._ridges is None:
            self._ridges = self.params.ridge_profiles()
        if self._mask is None:
            self._mask = self.params.center_mask()

    def ridge(self, eb: EBSet):
        return (self.params.ridge_amp * eb.int_out()) @ self._ridges


def step_percept_and_cos_fields(percept_input, eb: EBSet, perc: Perception, dt=DT) -> Perception:
    ridge = perc.ridge(eb)[:, None]
    p_out = perc.percept.output()
    pf = step_field(perc.percept, percept_input + ridge, dt)
    cos_in = perc.params.percept_to_cos * p_out * perc._mask[None, :] + ridge
    cf = step_field(perc.cos, cos_in, dt)
    return Perception(perc.params, pf, cf, perc._ridges, perc._mask)


def cos_field_input(perc: Perception):
    """Per-behavior sum of the CoS-field output over supra-threshold cells of its hue row."""
    u = perc.cos.u[list(perc.params.rows)]
    out = sigmoid(u, perc.cos.params.sigmoid)
    return np.where(u > 0, out, 0.0).sum(axis=1)


def _segments(mask):
    edges = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def peak_bearings(perc: Perception, behavior: int):
    """Bearings of the supra-threshold peaks on a behavior's hue row.

    The row is the one-dimensional heading representation used by the
    motor read-out; each contiguous supra-threshold stretch counts as one
    peak, located at its output-weighted centroid.
    """
    row = perc.params.rows[behavior]
    u = perc.percept.u[row]
    f = sigmoid(u, perc.percept.params.sigmoid)
    out = []
    for a, b in _segments(u > 0):
        w = f[a:b]
        centroid = float((w * np.arange(a, b)).sum() / w.sum())
        out.append(float(perc.params.column_bearing(centroid)))
    return out


def motor_command(perc: Perception, eb: EBSet, mp: MotorParams = MotorParams()) -> float:
    """Angular velocity (rad/s): servo onto the nearest peak of the intended color."""
    i = eb.active_intention()
    if i is None:
        return 0.0
    peaks = peak_bearings(perc, i)
    if not peaks:
        return mp.omega_search
    b = min(peaks, key=abs)
    return float(np.clip(mp.k_p * b, -mp.omega_max, mp.omega_max))


class Event(NamedTuple):
    behavior: int
    t_on: float
    t_off: Optional[float]
    cos_time: Optional[float]


def _onsets(x, threshold):
    above = x > threshold
    prev = np.concatenate(([False], above[:-1]))
    return np.flatnonzero(above & ~prev)


def extract_events(int_trace, cos_trace, dt=DT, threshold=0.5) -> List[Event]:
    """Segment node-output traces (T x K) into behavior events.

    Raises WTAViolation if two intentions are ever supra-threshold on the
    same step. ``t_off`` and ``cos_time`` are None for an event still running
    at the end of the trace or one that ended without its CoS.
    """
    int_trace = np.asarray(int_trace, dtype=float)
    cos_trace = np.asarray(cos_trace, dtype=float)
    if int_trace.size == 0:
        return []
    active = int_trace > threshold
    n_active = active.sum(axis=1)
    if (n_active > 1).any():
        step = int(np.flatnonzero(n_active > 1)[0])
        who = np.flatnonzero(active[step]).tolist()
        raise WTAViolation(f"intentions {who} simultaneously active at step {step}")
    n = len(int_trace)
    events = []
    for k in range(int_trace.shape[1]):
        cos_on = _onsets(cos_trace[:, k], threshold)
        for a, b in _segments(active[:, k]):
            end = b if b < n else None
            hits = cos_on[(cos_on >= a) & (cos_on <= b)]
            ct = float(hits[0] * dt) if len(hits) else None
            events.append(Event(k, a * dt, None if end is None else end * dt, ct))
    events.sort(key=lambda e: e.t_on)
    return events
