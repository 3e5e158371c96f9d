"""
Tabular SARSA(lambda) reference and DN-vs-tabular comparison.

States and actions are behavior indices: being in state s means behavior s
was the last one completed, and taking action a means executing behavior a
next. ``Q[s, a]`` here corresponds to ``W[a, s]`` in the neural learner.

The comparison calibrates the tabular model to a DN run instead of assuming
unit conversions. Three quantities are read off the run:

* lambda_hat - from the ratio between successive items held in the
  eligibility memory (tabular traces decay by gamma*lambda per transition);
* value gain kappa - least-squares slope of the integrated value signal per
  transition against gamma W(s', a') - W(s, a); Q lives in units of kappa W;
* step size - alpha_w * kappa * (newest-item trace level).

With these the tabular update alpha * delta * e and the DN weight change
over the same transition can be compared row by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional

import numpy as np

from .errors import AlignmentError


@dataclass
class TabularSarsa:
    n_states: int
    n_actions: int
    alpha: float = 0.1
    gamma: float = 0.8
    lam: float = 0.8
    replacing: bool = False
    Q: np.ndarray = None
    e: np.ndarray = None

    def __post_init__(self):
        shape = (self.n_states, self.n_actions)
        self.Q = np.zeros(shape) if self.Q is None else np.array(self.Q, dtype=float)
        self.e = np.zeros(shape) if self.e is None else np.array(self.e, dtype=float)

    def copy(self):
        return replace(self, Q=self.Q.copy(), e=self.e.copy())

    def greedy(self, s, exclude_self=True):
        q = self.Q[s].copy()
        if exclude_self and self.n_states == self.n_actions:
            q[s] = -np.inf
        return int(np.argmax(q))

    def policy(self, exclude_self=True):
        return {s: self.greedy(s, exclude_self) for s in range(self.n_states)}


def td_error(m: TabularSarsa, s, a, r, s2, a2, terminal=False):
    nxt = 0.0 if terminal else m.Q[s2, a2]
    return r + m.gamma * nxt - m.Q[s, a]


def sarsa_update(m: TabularSarsa, s, a, r, s2, a2, terminal=False):
    """One SARSA(lambda) backup; returns ``(new model, delta)``."""
    m = m.copy()
    delta = td_error(m, s, a, r, s2, a2, terminal)
    if m.replacing:
        m.e[s, a] = 1.0
    else:
        m.e[s, a] += 1.0
    m.Q += m.alpha * delta * m.e
    m.e *= m.gamma * m.lam
    if terminal:
        m.e[:] = 0.0
    return m, delta


class Transition(NamedTuple):
    state: int
    action: int
    reward: float
    # step index at which the action was completed (CoS onset)
    step: int


@dataclass
class EventStream:
    transitions: List[Transition] = field(default_factory=list)

    def __len__(self):
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)

    @classmethod
    def from_completions(cls, completions, rewards=None, steps=None):
        c = list(completions)
        n = max(len(c) - 1, 0)
        rewards = [0.0] * n if rewards is None else list(rewards)
        steps = list(range(1, n + 1)) if steps is None else list(steps)
        return cls([Transition(c[k], c[k + 1], float(rewards[k]), int(steps[k]))
                    for k in range(n)])

    @classmethod
    def from_log(cls, log):
        """Transitions between successive CoS onsets of a run.

        A reward pulse train is credited to the transition whose completion
        started it, i.e. to the latest completion at or before its first tick.
        """
        steps = np.asarray(log.onset_step)
        comp = list(log.onset_behavior)
        n = max(len(comp) - 1, 0)
        rewards = np.zeros(n)
        dt = log.config.dt
        r = np.asarray(log.r)
        starts = log.reward_episode_steps()
        for s0 in starts:
            k = int(np.searchsorted(steps, s0, side="right")) - 2
            if 0 <= k < n:
                end = s0
                while end < len(r) and r[end] > 0:
                    end += 1
                rewards[k] += r[s0:end].sum() * dt
        return cls.from_completions(comp, rewards, steps[1:])


def replay(events: EventStream, m: TabularSarsa):
    """Apply SARSA over consecutive transition pairs.

    Returns ``(Q history, delta history, model)``; entry k is the state
    after backing up transition k with transition k+1 as its successor. The
    last transition has no successor and is not backed up.
    """
    qs, ds = [], []
    tr = events.transitions
    for cur, nxt in zip(tr[:-1], tr[1:]):
        m, d = sarsa_update(m, cur.state, cur.action, cur.reward, nxt.state, nxt.action)
        qs.append(m.Q.copy())
        ds.append(d)
    return qs, ds, m


# -- calibration ----------------------------------------------------------------

def et_ratios(u_snapshots, min_items=2):
    """Ratios of successive stored items (older / newer) in ET snapshots."""
    out = []
    for u in u_snapshots:
        vals = np.sort(np.asarray(u).ravel())[::-1]
        vals = vals[vals > 1e-6]
        if len(vals) >= min_items:
            out.extend(vals[1:] / vals[:-1])
    return np.array(out)


def fit_lambda(u_snapshots, gamma=0.8):
    """lambda_hat = (median successive-item ratio) / gamma, or None if no ratios."""
    r = et_ratios(u_snapshots)
    if not len(r):
        return None
    return float(np.median(r) / gamma)


def newest_trace_level(u_snapshots):
    vals = [np.max(u) for u in u_snapshots if np.max(u) > 1e-6]
    return float(np.median(vals)) if vals else 0.0


def _window_integral(x, steps, dt):
    c = np.concatenate(([0.0], np.cumsum(x) * dt))
    return c[steps[1:]] - c[steps[:-1]]


@dataclass
class Calibration:
    lambda_hat: Optional[float]
    kappa: float
    alpha: float
    trace_level: float


def calibrate(log, gamma=0.8, alpha_w=None) -> Calibration:
    """Fit lambda_hat, the value gain kappa and the equivalent tabular step size."""
    alpha_w = log.config.alpha_w if alpha_w is None else alpha_w
    steps = np.asarray(log.onset_step)
    comp = np.asarray(log.onset_behavior)
    lam = fit_lambda(log.onset_u, gamma)
    level = newest_trace_level(log.onset_u)
    kappa = 0.0
    if len(steps) >= 3:
        v_int = _window_integral(log.v, steps, log.config.dt)[1:]
        W = log.onset_W
        # window k runs from completion k+1 to k+2: pair (c_k -> c_{k+1}) hands over to (c_{k+1} -> c_{k+2})
        x = np.array([gamma * W[k + 1][comp[k + 2], comp[k + 1]] - W[k + 1][comp[k + 1], comp[k]]
                      for k in range(len(steps) - 2)])
        denom = float(x @ x)
        if denom > 0:
            kappa = float(x @ v_int[:len(x)] / denom)
    return Calibration(lam, kappa, alpha_w * kappa * level, level)


# -- comparison -----------------------------------------------------------------

class CompareRow(NamedTuple):
    t: float
    s: int
    a: int
    r: float
    delta: float
    update: float
    dw_dn: float
    sign_match: Optional[bool]


@dataclass
class CompareReport:
    rows: List[CompareRow]
    calibration: Calibration
    sign_agreement: float
    magnitude_corr: float
    degenerate: bool
    min_agreement: float = 0.99
    min_corr: float = 0.95

    @property
    def passed(self):
        return (not self.degenerate and self.sign_agreement >= self.min_agreement
                and self.magnitude_corr >= self.min_corr)

    def table(self):
        head = f"{'t':>10} {'s':>2} {'a':>2} {'r':>7} {'delta_oracle':>13} {'dW_dn':>13} sign_match"
        lines = [head]
        for row in self.rows:
            m = "-" if row.sign_match is None else ("yes" if row.sign_match else "NO")
            lines.append(f"{row.t:10.3f} {row.s:2d} {row.a:2d} {row.r:7.3f} "
                         f"{row.delta:13.6g} {row.dw_dn:13.6g} {m}")
        c = self.calibration
        lam = "n/a" if c.lambda_hat is None else f"{c.lambda_hat:.4f}"
        lines.append(f"# lambda_hat={lam} kappa={c.kappa:.4g} alpha={c.alpha:.4g}")
        verdict = "DEGENERATE" if self.degenerate else ("PASS" if self.passed else "FAIL")
        lines.append(f"# sign agreement {self.sign_agreement:.4f} (>= {self.min_agreement}), "
                     f"magnitude corr {self.magnitude_corr:.4f} (>= {self.min_corr}): {verdict}")
        return "\n".join(lines) + "\n"


def compare(log, lambda_hat=None, m: TabularSarsa = None, gamma=0.8, tol=1e-9,
            min_agreement=0.99, min_corr=0.95, sync=True) -> CompareReport:
    """Per-transition comparison of DN weight changes with tabular SARSA(lambda_hat).

    The DN change for transition k is the summed weight change between
    completion k+1 and completion k+2, the window in which the pair
    (c_k -> c_{k+1}) hands over to its successor. The oracle value is the
    summed tabular update ``alpha * delta * e`` of the same backup. Rows whose
    updates are both below ``tol`` carry no sign.

    With ``sync`` the table is reset to ``kappa * W`` before every backup, so
    each row compares one update rule applied to the same values; without it
    the table evolves on its own from the first snapshot.
    """
    events = EventStream.from_log(log)
    steps = np.asarray(log.onset_step)
    n_w = max(len(steps) - 2, 0)
    if len(log.onset_W) != len(steps):
        raise AlignmentError(
            "weight snapshots do not match completions",
            f"completions={len(steps)} snapshots={len(log.onset_W)}")
    if len(events) - 1 != n_w:
        raise AlignmentError(
            "transition count does not match DN windows",
            f"transitions={len(events)} windows={n_w} onset_steps={steps.tolist()[:20]}")
    cal = calibrate(log, gamma)
    if lambda_hat is not None:
        cal = replace(cal, lambda_hat=lambda_hat)
    K = log.config.K
    if m is None:
        lam = cal.lambda_hat if cal.lambda_hat is not None else 0.0
        W0 = log.onset_W[1] if len(log.onset_W) > 1 else np.zeros((K, K))
        m = TabularSarsa(K, K, alpha=cal.alpha, gamma=gamma, lam=lam, Q=cal.kappa * W0.T)
    rows = []
    tr = events.transitions
    W = log.onset_W
    for k, (cur, nxt) in enumerate(zip(tr[:-1], tr[1:])):
        if sync:
            m.Q = cal.kappa * W[k + 1].T
        m2, d = sarsa_update(m, cur.state, cur.action, cur.reward, nxt.state, nxt.action)
        upd = float((m2.Q - m.Q).sum())
        m = m2
        dw = float((W[k + 2] - W[k + 1]).sum())
        big = abs(upd) > tol or abs(dw) > tol
        sm = bool(np.sign(upd) == np.sign(dw)) if big else None
        rows.append(CompareRow(log.t[steps[k + 1]] if len(log.t) else 0.0,
                               cur.state, cur.action, cur.reward, float(d), upd, dw, sm))
    signed = [r for r in rows if r.sign_match is not None]
    degenerate = not signed or all(abs(r.dw_dn) <= tol for r in rows)
    agree = float(np.mean([r.sign_match for r in signed])) if signed else float("nan")
    a = np.abs([r.update for r in rows])
    b = np.abs([r.dw_dn for r in rows])
    corr = float("nan")
    if len(rows) > 2 and a.std() > 0 and b.std() > 0:
        corr = float(np.corrcoef(a, b)[0, 1])
    return CompareReport(rows, cal, agree, corr, degenerate, min_agreement, min_corr)
