"""
Experiment configuration, the closed-loop simulation, batches and exports.

A run couples the ring world, the behavior engine and the learner at a
fixed tick of ``dt`` seconds. Per tick the order is fixed: render percept,
step behavior dynamics, motor command, move, reward, learner, log.
Exploration noise perturbs the value read-out during the first
``exploration_steps`` ticks; learning stays on in both phases.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import behavior as bh
from .dnf import DT, SigmoidParams
from .environment import (COLOR_NAMES, RewardSchedule, WorldParams, apply_motor,
                          format_sequence, parse_sequence, render_percept, reset,
                          step_reward)
from .errors import ConfigurationError, SimulationDivergence, WTAViolation
from .learner import LearnerParams, LearnerState, reset_traces, step_learner

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    seed: int = 0
    total_steps: int = 100_000
    exploration_steps: int = 50_000
    dt: float = DT
    K: int = 4
    target: str = "G,B,Y,R,G"
    noise_amp: float = 1.0
    learning: bool = True
    reset_trace_on_reward: bool = False
    out_dir: str = ""
    # world
    n_blocks: int = 16
    fov_deg: float = 120.0
    max_omega: float = np.pi / 2
    block_width_deg: float = 8.0
    sigma_bearing_deg: float = 4.0
    sigma_hue: float = 1.0
    percept_amp: float = 4.0
    # perception
    n_hue: int = 16
    n_pos: int = 40
    ridge_amp: float = 3.0
    ridge_sigma: float = 1.0
    percept_to_cos: float = 4.0
    # narrow window + slow turning: roughly 5 s per behavior
    center_fraction: float = 0.1
    field_tau: float = 0.1
    # nodes
    sigmoid_beta: float = 5.0
    sigmoid_mu: float = 0.0
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
    tie_bias: float = 0.01
    value_eps: float = 1e-6
    # motor
    k_p: float = 1.0
    omega_max: float = np.pi / 16
    omega_search: float = np.pi / 16
    # reward
    reward_value: float = 1.0
    reward_duration: int = 16
    # learner
    sa_gain: float = 1.0
    theta_sa: float = 0.25
    sa_mode: str = "gain"
    exclude_completion: bool = True
    tau_tp: float = 0.5
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
        if self.exploration_steps > self.total_steps:
            # a short run simply never leaves exploration
            self.exploration_steps = self.total_steps
        if self.total_steps < 0:
            raise ConfigurationError("total_steps must be >= 0")
        taus = [self.tau_int, self.tau_cos, self.field_tau, self.learner_params().min_tau()]
        if self.dt > min(taus) / 3 + 1e-12:
            raise ConfigurationError(f"dt={self.dt} exceeds min tau/3 ({min(taus) / 3:.4f})")
        seq = parse_sequence(self.target)
        if any(not 0 <= s < self.K for s in seq):
            raise ConfigurationError(f"target {self.target!r} uses colors outside K={self.K}")

    # -- derived parameter blocks -------------------------------------------------

    @property
    def target_seq(self):
        return parse_sequence(self.target)

    def sigmoid_params(self):
        return SigmoidParams(self.sigmoid_beta, self.sigmoid_mu)

    def world_params(self):
        return WorldParams(n_blocks=self.n_blocks, n_colors=self.K,
                           fov=np.deg2rad(self.fov_deg), max_omega=self.max_omega,
                           block_width=np.deg2rad(self.block_width_deg),
                           sigma_bearing=np.deg2rad(self.sigma_bearing_deg),
                           sigma_hue=self.sigma_hue, amplitude=self.percept_amp)

    def perception_params(self):
        return bh.PerceptionParams(n_colors=self.K, n_hue=self.n_hue, n_pos=self.n_pos,
                                   fov=np.deg2rad(self.fov_deg), ridge_amp=self.ridge_amp,
                                   ridge_sigma=self.ridge_sigma,
                                   percept_to_cos=self.percept_to_cos,
                                   center_fraction=self.center_fraction,
                                   field_tau=self.field_tau)

    def node_coefficients(self):
        return bh.NodeCoefficients(
            tau_int=self.tau_int, tau_cos=self.tau_cos, h_node=self.h_node,
            c_plus_int=self.c_plus_int, c_minus_int=self.c_minus_int,
            c_cos_int=self.c_cos_int, c_val_int=self.c_val_int,
            c_plus_cos=self.c_plus_cos, c_minus_cos=self.c_minus_cos,
            c_int_cos=self.c_int_cos, c_input_cos=self.c_input_cos,
            tie_bias=self.tie_bias)

    def motor_params(self):
        return bh.MotorParams(self.k_p, self.omega_max, self.omega_search)

    def learner_params(self):
        return LearnerParams(
            gain=self.sa_gain, theta_sa=self.theta_sa, sa_mode=self.sa_mode,
            exclude_completion=self.exclude_completion, tau_tp=self.tau_tp,
            tp_substeps=self.tp_substeps,
            alpha_et=self.alpha_et, beta_et=self.beta_et, tau_u=self.tau_u,
            tau_o=self.tau_o, gamma=self.gamma, tp_gate=self.tp_gate, tau_v=self.tau_v,
            alpha_w=self.alpha_w if self.learning else 0.0,
            weight_gate=self.weight_gate, w_max=self.w_max)


# -- config files ---------------------------------------------------------------

def _coerce(ftype, text, key):
    ftype = ftype if isinstance(ftype, str) else ftype.__name__
    try:
        if ftype == "bool":
            low = text.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if ftype == "int":
            return int(float(text)) if "e" in text.lower() else int(text.replace("_", ""))
        if ftype == "float":
            return float(text)
        return text.strip()
    except ValueError:
        raise ConfigurationError(f"bad value for {key}: {text!r}") from None


def parse_config_text(text, **overrides) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(types[key], val, key)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path=None, **overrides) -> ExperimentConfig:
    text = Path(path).read_text() if path else ""
    return parse_config_text(text, **overrides)


def format_config(cfg: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)!r}\n".replace("'", "")
                   for f in fields(cfg))


# -- run log --------------------------------------------------------------------

@dataclass
class RunLog:
    config: ExperimentConfig
    t: np.ndarray
    r: np.ndarray
    v: np.ndarray
    dW: np.ndarray
    intention: np.ndarray
    cos: np.ndarray
    int_out: np.ndarray
    cos_out: np.ndarray
    heading: np.ndarray
    noise_steps: np.ndarray
    # per CoS onset: step index, behavior, and W, u at the start of that tick
    onset_step: np.ndarray
    onset_behavior: np.ndarray
    onset_W: np.ndarray
    onset_u: np.ndarray
    W_final: np.ndarray
    world_layout: list = field(default_factory=list)

    @property
    def n_steps(self):
        return len(self.t)

    @property
    def cumulative_reward(self):
        return np.cumsum(self.r) * self.config.dt

    def events(self):
        return bh.extract_events(self.int_out, self.cos_out, self.config.dt)

    def completions(self):
        """Completed behaviors in order (CoS onsets)."""
        return self.onset_behavior.tolist()

    def reward_episode_steps(self):
        r = self.r > 0
        prev = np.concatenate(([False], r[:-1]))
        return np.flatnonzero(r & ~prev)

    def discovery_step(self):
        eps = self.reward_episode_steps()
        return int(eps[0]) if len(eps) else None

    def td_per_event(self):
        """Integrated (r + v) between consecutive CoS onsets: (start steps, values)."""
        s = self.onset_step
        if len(s) < 2:
            return s[:0], np.zeros(0)
        c = np.concatenate(([0.0], np.cumsum((self.r + self.v) * self.config.dt)))
        return s[:-1], c[s[1:]] - c[s[:-1]]

    def policy(self):
        """Greedy action per state from the final weights (row = action)."""
        W = self.W_final.copy()
        np.fill_diagonal(W, -np.inf)
        return {j: int(np.argmax(W[:, j])) for j in range(W.shape[1])}

    def exploration_completions(self):
        return int((self.onset_step < self.config.exploration_steps).sum())


# -- simulation -----------------------------------------------------------------

class Simulation:
    """Closed-loop ring-world run; call :meth:`step` or :meth:`run`."""

    def __init__(self, cfg: ExperimentConfig, W=None):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.world = reset(cfg.world_params(), self.rng)
        self.pp = cfg.perception_params()
        self.perc = bh.Perception(self.pp)
        self.eb = bh.EBSet.at_rest(cfg.K, cfg.node_coefficients(), cfg.sigmoid_params())
        self.mp = cfg.motor_params()
        self.lp = cfg.learner_params()
        self.learner = LearnerState.zeros(cfg.K, W)
        self.rs = RewardSchedule(cfg.target_seq, cfg.reward_value, cfg.reward_duration)
        self.step_index = 0
        self.noise = self._draw_noise(None) if cfg.exploration_steps > 0 else np.zeros(cfg.K)
        self.noise_draws = []
        self._cos_on = np.zeros(cfg.K, dtype=bool)

    def exploring(self):
        return self.step_index < self.cfg.exploration_steps

    def _draw_noise(self, completed):
        n = self.rng.uniform(0.0, self.cfg.noise_amp, self.cfg.K)
        if completed is not None:
            # the behavior just satisfied cannot be chosen again; no point perturbing it
            n[completed] = 0.0
        return n

    def step(self):
        cfg, dt = self.cfg, self.cfg.dt
        if not self.exploring():
            self.noise = np.zeros(cfg.K)
        eb = self.eb
        eb.d_val = bh.read_value_nodes(eb, self.learner.W, self.noise, cfg.value_eps)
        percept_in = render_percept(self.world, self.pp.n_hue, self.pp.n_pos)
        ci = bh.cos_field_input(self.perc)
        self.perc = bh.step_percept_and_cos_fields(percept_in, eb, self.perc, dt)
        new_int = bh.step_intention_nodes(eb, dt)
        new_cos = bh.step_cos_nodes(eb, ci, dt)
        self.eb = eb = replace(new_int, d_cos=new_cos.d_cos)
        omega = bh.motor_command(self.perc, eb, self.mp)
        apply_motor(self.world, omega, dt)

        cos_on = eb.cos_out() > 0.5
        onsets = np.flatnonzero(cos_on & ~self._cos_on)
        self._cos_on = cos_on
        completed = None
        if len(onsets):
            completed = int(onsets[np.argmax(eb.d_cos[onsets])])
        ending = self.rs.remaining == 1
        _, r = step_reward(self.rs, completed)
        self.learner = step_learner(self.learner, eb, r, dt, self.lp)
        if ending and cfg.reset_trace_on_reward:
            reset_traces(self.learner)
        if completed is not None and self.exploring():
            self.noise = self._draw_noise(completed)
            self.noise_draws.append(self.step_index)
        self.step_index += 1
        return r, omega, completed

    def state_dump(self):
        return {
            "d_int": self.eb.d_int.copy(), "d_cos": self.eb.d_cos.copy(),
            "d_val": self.eb.d_val.copy(), "v": self.learner.v,
            "W": self.learner.W.copy(), "u": self.learner.u.copy(),
            "O": self.learner.O.copy(), "heading": self.world.heading,
        }

    def _finite(self):
        L, eb = self.learner, self.eb
        s = (L.v + L.W.sum() + L.u.sum() + L.O.sum() + L.tp_plus.sum()
             + eb.d_int.sum() + eb.d_cos.sum() + self.perc.percept.u.sum() + self.perc.cos.u.sum())
        return np.isfinite(s)

    def run(self, n_steps=None) -> RunLog:
        cfg = self.cfg
        n = cfg.total_steps - self.step_index if n_steps is None else n_steps
        K = cfg.K
        r_arr, v_arr, dw_arr = np.zeros(n), np.zeros(n), np.zeros(n)
        intent, cos = np.full(n, -1, dtype=int), np.full(n, -1, dtype=int)
        int_out, cos_out = np.zeros((n, K)), np.zeros((n, K))
        heading = np.zeros(n)
        on_step, on_beh, on_W, on_u = [], [], [], []
        start = self.step_index
        for k in range(n):
            W_before, u_before = self.learner.W, self.learner.u
            r, _, completed = self.step()
            if not self._finite():
                raise SimulationDivergence(self.step_index - 1, self.state_dump())
            fi, fc = self.eb.int_out(), self.eb.cos_out()
            int_out[k], cos_out[k] = fi, fc
            i = int(np.argmax(fi))
            intent[k] = i if fi[i] > 0.5 else -1
            j = int(np.argmax(fc))
            cos[k] = j if fc[j] > 0.5 else -1
            r_arr[k] = r
            v_arr[k] = self.learner.v
            dw_arr[k] = np.abs(self.learner.W - W_before).sum()
            heading[k] = self.world.heading
            if completed is not None:
                on_step.append(k)
                on_beh.append(completed)
                on_W.append(W_before.copy())
                on_u.append(u_before.copy())
        noise_steps = np.array([s - start for s in self.noise_draws if s >= start], dtype=int)
        return RunLog(
            config=cfg, t=(start + np.arange(n)) * cfg.dt, r=r_arr, v=v_arr, dW=dw_arr,
            intention=intent, cos=cos, int_out=int_out, cos_out=cos_out, heading=heading,
            noise_steps=noise_steps,
            onset_step=np.array(on_step, dtype=int), onset_behavior=np.array(on_beh, dtype=int),
            onset_W=np.array(on_W).reshape(-1, K, K), onset_u=np.array(on_u).reshape(-1, K, K),
            W_final=self.learner.W.copy(), world_layout=self.world.layout())


def run_experiment(cfg: ExperimentConfig, W=None) -> RunLog:
    return Simulation(cfg, W).run()


# -- sequence checks ------------------------------------------------------------

def target_period(target):
    """Repeating unit of a target whose first and last items coincide."""
    t = tuple(target)
    return t[:-1] if len(t) > 1 and t[0] == t[-1] else t


def periodic_suffix(completions, target):
    """Length of the longest suffix of ``completions`` that follows the target cycle."""
    period = target_period(target)
    nxt = {period[i]: period[(i + 1) % len(period)] for i in range(len(period))}
    if len(nxt) != len(period):
        raise ConfigurationError("target cycle visits a behavior twice")
    c = list(completions)
    n = 0
    for k in range(len(c) - 1, -1, -1):
        if c[k] not in nxt or (n and nxt[c[k]] != c[k + 1]):
            break
        n += 1
    return n


def converged(log: RunLog, min_periods=3):
    """Exploitation ends in an uninterrupted run of at least ``min_periods`` target cycles."""
    ex = log.onset_step >= log.config.exploration_steps
    comp = log.onset_behavior[ex]
    return periodic_suffix(comp, log.config.target_seq) >= min_periods * len(
        target_period(log.config.target_seq))


def td_magnitudes(log: RunLog):
    """|integrated r + v| per transition, split into (exploration, exploitation) arrays."""
    start, td = log.td_per_event()
    explore = start < log.config.exploration_steps
    return np.abs(td[explore]), np.abs(td[~explore])


def td_trend_ratio(log: RunLog):
    """Mean |TD| over the last quarter of exploitation transitions over the exploration mean."""
    explore, exploit = td_magnitudes(log)
    if not len(explore) or len(exploit) < 4:
        return float("nan")
    tail = exploit[-(len(exploit) // 4):]
    return float(tail.mean() / explore.mean())


def wta_violations(int_out, dt, window=0.3, threshold=0.5):
    """Steps with more than one supra-threshold intention, ignoring steps within
    ``window`` seconds of any intention crossing threshold."""
    active = np.asarray(int_out) > threshold
    multi = active.sum(axis=1) > 1
    if not multi.any():
        return 0
    flips = np.flatnonzero((np.diff(active.astype(np.int8), axis=0) != 0).any(axis=1)) + 1
    near = np.zeros(len(active), dtype=bool)
    w = int(round(window / dt))
    for f in flips:
        near[max(f - w, 0):f + w + 1] = True
    return int((multi & ~near).sum())


# -- batches --------------------------------------------------------------------

@dataclass
class RunSummary:
    seed: int
    discovery_step: Optional[int]
    exploration_completions: int
    total_reward: float
    converged: bool
    policy: dict
    td_ratio: float
    cumulative_reward: np.ndarray
    td_start: np.ndarray
    td: np.ndarray
    W_final: np.ndarray
    exploration_steps: int = 0
    multi_active_steps: int = 0
    wta_violations: int = 0
    event_error: Optional[str] = None
    n_events: int = 0
    error: Optional[str] = None

    @property
    def discovered(self):
        """At least one reward episode during exploration."""
        return self.discovery_step is not None and self.discovery_step < self.exploration_steps


def summarize(log: RunLog) -> RunSummary:
    start, td = log.td_per_event()
    cfg = log.config
    try:
        n_events, event_error = len(log.events()), None
    except WTAViolation as exc:
        n_events, event_error = 0, str(exc)
    return RunSummary(
        seed=cfg.seed, discovery_step=log.discovery_step(),
        exploration_completions=log.exploration_completions(),
        total_reward=float(log.r.sum() * cfg.dt), converged=converged(log),
        policy=log.policy(), td_ratio=td_trend_ratio(log),
        cumulative_reward=log.cumulative_reward, td_start=start, td=td,
        W_final=log.W_final, exploration_steps=cfg.exploration_steps,
        multi_active_steps=int(((log.int_out > 0.5).sum(axis=1) > 1).sum()),
        wta_violations=wta_violations(log.int_out, cfg.dt), event_error=event_error,
        n_events=n_events)


def _run_one(cfg):
    try:
        return summarize(run_experiment(cfg))
    except Exception as exc:  # reported per seed, the batch carries on
        log.warning("seed %d failed: %s", cfg.seed, exc)
        return RunSummary(cfg.seed, None, 0, 0.0, False, {}, float("nan"),
                          np.zeros(0), np.zeros(0, int), np.zeros(0),
                          np.zeros((cfg.K, cfg.K)), error=f"{type(exc).__name__}: {exc}",
                          exploration_steps=cfg.exploration_steps)


@dataclass
class BatchResult:
    runs: List[RunSummary]

    @property
    def ok(self):
        return [r for r in self.runs if r.error is None]

    @property
    def failures(self):
        return {r.seed: r.error for r in self.runs if r.error is not None}

    def discovery_steps(self):
        return {r.seed: r.discovery_step for r in self.runs}

    def mean_cumulative_reward(self):
        curves = [r.cumulative_reward for r in self.ok]
        return np.mean(curves, axis=0) if curves else np.zeros(0)

    def mean_td_curve(self, n_bins=50):
        """Mean |TD| per time bin across runs (bins over the run length)."""
        runs = self.ok
        if not runs:
            return np.zeros(n_bins)
        total = len(runs[0].cumulative_reward)
        edges = np.linspace(0, total, n_bins + 1)
        out = np.full((len(runs), n_bins), np.nan)
        for k, r in enumerate(runs):
            idx = np.digitize(r.td_start, edges) - 1
            for b in range(n_bins):
                sel = np.abs(r.td[idx == b])
                if len(sel):
                    out[k, b] = sel.mean()
        with warnings.catch_warnings():
            # bins without any transition stay NaN
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(out, axis=0)


def run_batch(cfg: ExperimentConfig, n_seeds: int, first_seed=None, workers=None) -> BatchResult:
    """Run ``n_seeds`` independent seeds (``cfg.seed``, ``cfg.seed + 1``, ...)."""
    if n_seeds < 1:
        raise ConfigurationError("n_seeds must be >= 1")
    s0 = cfg.seed if first_seed is None else first_seed
    cfgs = [replace(cfg, seed=s0 + i) for i in range(n_seeds)]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or n_seeds == 1:
        runs = [_run_one(c) for c in cfgs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_seeds)) as pool:
            runs = list(pool.map(_run_one, cfgs))
    return BatchResult(runs)


# -- exports --------------------------------------------------------------------

STEP_HEADER = ("t", "r", "v", "dW", "intention", "cos")
EVENT_HEADER = ("behavior", "t_on", "t_off", "cos_time")


def _fmt(x):
    return "" if x is None else repr(float(x))


def summary_dict(log: RunLog):
    names = COLOR_NAMES if log.config.K <= len(COLOR_NAMES) else None
    name = (lambda i: names[i]) if names else str
    return {
        "seed": log.config.seed,
        "total_steps": log.n_steps,
        "exploration_steps": log.config.exploration_steps,
        "discovery_step": log.discovery_step(),
        "total_reward": float(log.r.sum() * log.config.dt),
        "exploration_completions": log.exploration_completions(),
        "target": format_sequence(log.config.target_seq),
        "final_policy": {name(s): name(a) for s, a in log.policy().items()},
        "converged": bool(converged(log)),
    }


def export_metrics(log: RunLog, out_dir) -> dict:
    """Write steps.csv, events.csv and summary.json; returns the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {k: out / n for k, n in
                 (("steps", "steps.csv"), ("events", "events.csv"), ("summary", "summary.json"))}
        with open(paths["steps"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(STEP_HEADER)
            for row in zip(log.t, log.r, log.v, log.dW, log.intention, log.cos):
                w.writerow((repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            repr(float(row[3])), int(row[4]), int(row[5])))
        with open(paths["events"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(EVENT_HEADER)
            for e in log.events():
                w.writerow((e.behavior, _fmt(e.t_on), _fmt(e.t_off), _fmt(e.cos_time)))
        with open(paths["summary"], "w") as fh:
            json.dump(summary_dict(log), fh, indent=1)
    except OSError as exc:
        raise OSError(f"{exc.filename or out}: {exc.strerror or exc}") from exc
    return paths


def read_steps_csv(path):
    """Parse a steps.csv back into a dict of arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [()] * len(header)
    out = {}
    for name, col in zip(header, cols):
        dtype = int if name in ("intention", "cos") else float
        out[name] = np.array([dtype(x) for x in col], dtype=dtype)
    return out
