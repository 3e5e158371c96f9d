"""
Amari field primitives: sigmoid, lateral kernel, fixed-step integration.

Field dynamics
--------------
    tau * du/dt = -u + h + S + dx^d * sum_x' w(x - x') f(u(x'))

f is the soft-ramp sigmoid

    f(x) = 0.5 * (1 + beta (x - mu) / (1 + beta |x - mu|))

and w is a difference of Gaussians with an optional global inhibition term.
All integration is forward Euler at a fixed dt (default 1/32 s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import ConfigurationError

DT = 1.0 / 32.0


@dataclass(frozen=True)
class SigmoidParams:
    beta: float = 5.0
    mu: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError(f"sigmoid beta must be > 0, got {self.beta}")


def sigmoid(x, p: SigmoidParams = SigmoidParams()):
    """Soft-ramp sigmoid; 0.5 at ``mu``, strictly inside (0, 1) for finite x."""
    if isinstance(x, np.ndarray):
        z = p.beta * (x - p.mu)
        return 0.5 * (1.0 + z / (1.0 + np.abs(z)))
    z = p.beta * (float(x) - p.mu)
    return 0.5 * (1.0 + z / (1.0 + abs(z)))


@dataclass(frozen=True)
class KernelParams:
    amp_exc: float = 1.0
    sigma_exc: float = 1.5
    amp_inh: float = 0.5
    sigma_inh: float = 4.0
    amp_global: float = 0.0

    def __post_init__(self):
        if self.sigma_exc <= 0 or self.sigma_inh <= 0:
            raise ConfigurationError("kernel widths must be > 0")
        if self.sigma_inh <= self.sigma_exc:
            raise ConfigurationError("sigma_inh must exceed sigma_exc")
        if min(self.amp_exc, self.amp_inh, self.amp_global) < 0:
            raise ConfigurationError("kernel amplitudes must be >= 0")


def kernel_weight(delta_x, k: KernelParams):
    d2 = np.square(np.asarray(delta_x, dtype=float))
    w = (k.amp_exc * np.exp(-d2 / (2 * k.sigma_exc ** 2))
         - k.amp_inh * np.exp(-d2 / (2 * k.sigma_inh ** 2))
         - k.amp_global)
    return w if w.ndim else float(w)


@dataclass(frozen=True)
class FieldParams:
    shape: Tuple[int, ...]
    tau: float = 0.1
    h: float = -5.0
    kernel: KernelParams = KernelParams()
    sigmoid: SigmoidParams = SigmoidParams()
    dx: float = 1.0
    circular: Tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if not self.circular:
            object.__setattr__(self, "circular", (False,) * len(self.shape))
        if len(self.circular) != len(self.shape):
            raise ConfigurationError("one circular flag per field dimension")
        if len(self.shape) not in (1, 2):
            raise ConfigurationError("fields are 1D or 2D")
        if self.tau <= 0:
            raise ConfigurationError("tau must be > 0")
        if self.h >= 0:
            raise ConfigurationError("resting level h must be negative")


def _axis_gaussian(n, sigma, circular):
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :]).astype(float)
    if circular:
        d = np.minimum(d, n - d)
    g = np.exp(-d ** 2 / (2 * sigma ** 2))
    # truncated at 3 sigma
    g[d > 3 * sigma] = 0.0
    return g


@lru_cache(maxsize=64)
def _interaction_mats(shape, kernel, circular):
    exc = tuple(_axis_gaussian(n, kernel.sigma_exc, c) for n, c in zip(shape, circular))
    inh = tuple(_axis_gaussian(n, kernel.sigma_inh, c) for n, c in zip(shape, circular))
    return exc, inh


def lateral_interaction(out, params: FieldParams):
    """Kernel convolution of the field output ``out`` (already sigmoided)."""
    k = params.kernel
    exc, inh = _interaction_mats(params.shape, k, params.circular)
    scale = params.dx ** len(params.shape)
    if out.ndim == 1:
        conv = k.amp_exc * (exc[0] @ out) - k.amp_inh * (inh[0] @ out)
    else:
        conv = (k.amp_exc * (exc[0] @ out @ exc[1].T)
                - k.amp_inh * (inh[0] @ out @ inh[1].T))
    if k.amp_global:
        conv = conv - k.amp_global * out.sum()
    return scale * conv


@dataclass
class FieldGrid:
    params: FieldParams
    u: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.u is None:
            self.u = np.full(self.params.shape, self.params.h, dtype=float)
        else:
            self.u = np.asarray(self.u, dtype=float)
            if self.u.shape != self.params.shape:
                raise ConfigurationError(
                    f"activation shape {self.u.shape} != field shape {self.params.shape}")

    def output(self):
        return sigmoid(self.u, self.params.sigmoid)


def check_dt(dt, tau, what="integrator"):
    if dt > tau / 3 + 1e-12:
        raise ConfigurationError(f"{what}: dt={dt} exceeds tau/3 with tau={tau}")


def step_field(f: FieldGrid, inp, dt=DT) -> FieldGrid:
    """One forward-Euler step of the field equation; returns a new FieldGrid."""
    p = f.params
    inp = np.asarray(inp, dtype=float)
    if inp.shape != p.shape:
        raise ConfigurationError(f"input shape {inp.shape} != field shape {p.shape}")
    check_dt(dt, p.tau, "step_field")
    drift = -f.u + p.h + inp + lateral_interaction(f.output(), p)
    return FieldGrid(p, f.u + (dt / p.tau) * drift)


def euler_step_node(x, rhs, tau, dt=DT):
    return x + (dt / tau) * rhs
