"""Discretized Feynman-Kac walks, plain and importance-sampled.

One replication moves every coordinate by eps / sqrt(n) per step (eps = +/-1
from its own Superduper stream), with n = scale**2 steps per unit time. In
GFK mode the Euler-Maruyama drift grad(phi)/phi * dt is added first. The
path accumulates (1/n) * sum of the potential at post-step positions and
reports Z = exp(-that) at each checkpoint time.

All functions work on a batch of independent replications at once: walker
arrays have shape ``(R, *system.shape)`` and rng states are a uint32 vector
of length R. Each replication only ever touches its own state and row, so
results do not depend on how replications are grouped.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import GuardExhaustedError, ParameterError

FK = "FK"
GFK = "GFK"
MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class PathConfig:
    """Step size 1/scale Bohr, n = scale**2 steps per atomic time unit."""

    scale: int
    checkpoint_times: tuple = (8, 16, 24, 32, 40, 48)
    mode: str = GFK

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 1:
            raise ParameterError("scale must be a positive integer")
        if self.mode not in (FK, GFK):
            raise ParameterError(f"mode must be {FK!r} or {GFK!r}")
        times = tuple(self.checkpoint_times)
        if not times:
            raise ParameterError("checkpoint_times must be non-empty")
        if any(b <= a for a, b in zip(times, times[1:])) or times[0] <= 0:
            raise ParameterError("checkpoint_times must be positive and strictly ascending")
        for t in times:
            steps = t * self.n
            if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
                raise ParameterError(f"checkpoint time {t} is not a whole number of steps")
        object.__setattr__(self, "checkpoint_times", times)

    @property
    def n(self):
        return self.scale * self.scale

    @property
    def dt(self):
        return 1.0 / self.n

    @property
    def step(self):
        return 1.0 / self.scale

    @property
    def delta(self):
        """Minimum admissible electron-nucleus / electron-electron distance."""
        return 1.0 / (10 * self.scale)

    @property
    def checkpoint_steps(self):
        return tuple(int(round(t * self.n)) for t in self.checkpoint_times)


@dataclass
class PathAccumulator:
    walker: np.ndarray
    potential_sum: np.ndarray
    step_index: int = 0
    # trial-function value and drift at `walker` (GFK only)
    value: np.ndarray = field(default=None, repr=False)
    drift: np.ndarray = field(default=None, repr=False)


def start_accumulator(walker, trial=None):
    walker = np.array(walker, dtype=float)
    acc = PathAccumulator(walker, np.zeros(walker.shape[0]))
    if trial is not None:
        ev = trial.evaluate(walker)
        if np.any(ev.value == 0) or not np.all(np.isfinite(ev.value)):
            raise ParameterError("start walker lies on a node of the trial function")
        acc.value = ev.value
        acc.drift = ev.gradient / ev.value.reshape(ev.value.shape + (1,) * (walker.ndim - 1))
    return acc


def _draw(states, shape):
    """One eps per coordinate, drawn in flattened coordinate order."""
    k = math.prod(shape)
    eps = np.empty((states.shape[0], k))
    for j in range(k):
        eps[:, j], states = rng.bernoulli_array(states)
    return eps.reshape((states.shape[0],) + tuple(shape)), states


def singularity_guard(proposed, system, cfg):
    """True where the proposal must be resampled (too close to a Coulomb singularity)."""
    return system.too_close(proposed, cfg.delta)


def node_guard(trial, before_value, proposed_value):
    """True where the proposal left the nodal cell of the current position."""
    return (np.sign(before_value) != np.sign(proposed_value)) | (proposed_value == 0) | ~np.isfinite(proposed_value)


def fk_step(acc, states, cfg, system):
    """Advance every replication by one plain Brownian lattice step."""
    shape = acc.walker.shape[1:]
    h = cfg.step
    new = np.empty_like(acc.walker)
    pending = np.arange(acc.walker.shape[0])
    for _ in range(MAX_ATTEMPTS):
        eps, states[pending] = _draw(states[pending], shape)
        prop = acc.walker[pending] + eps * h
        bad = singularity_guard(prop, system, cfg)
        new[pending[~bad]] = prop[~bad]
        pending = pending[bad]
        if pending.size == 0:
            break
    else:
        raise GuardExhaustedError(f"{pending.size} walkers could not leave a singular region")
    acc.walker = new
    acc.potential_sum = acc.potential_sum + system.potential(new)
    acc.step_index += 1
    return acc, states


def gfk_step(acc, states, cfg, system, trial, lam0):
    """Advance every replication by one drifted Euler-Maruyama step.

    Proposals that land too close to a singularity or cross a node of the
    trial function are redrawn with fresh eps (the drift is kept).
    """
    shape = acc.walker.shape[1:]
    h = cfg.step
    base = acc.walker + acc.drift * cfg.dt
    R = acc.walker.shape[0]
    new = np.empty_like(acc.walker)
    value = np.empty(R)
    grad = np.empty_like(acc.walker)
    lap = np.empty(R)
    pending = np.arange(R)
    for _ in range(MAX_ATTEMPTS):
        eps, states[pending] = _draw(states[pending], shape)
        prop = base[pending] + eps * h
        bad = singularity_guard(prop, system, cfg)
        ok_idx = np.flatnonzero(~bad)
        if ok_idx.size:
            with np.errstate(all="ignore"):
                ev = trial.evaluate(prop[ok_idx])
            crossed = node_guard(trial, acc.value[pending[ok_idx]], ev.value)
            keep = ok_idx[~crossed]
            rows = pending[keep]
            new[rows] = prop[keep]
            value[rows] = ev.value[~crossed]
            grad[rows] = ev.gradient[~crossed]
            lap[rows] = ev.laplacian[~crossed]
            bad[ok_idx[crossed]] = True
        pending = pending[bad]
        if pending.size == 0:
            break
    else:
        raise GuardExhaustedError(f"{pending.size} walkers found no admissible step in {MAX_ATTEMPTS} attempts")
    expand = (1,) * len(shape)
    acc.walker = new
    acc.value = value
    acc.drift = grad / value.reshape((R,) + expand)
    vp = (system.potential(new) - lam0) - lap / (2.0 * value)
    acc.potential_sum = acc.potential_sum + vp
    acc.step_index += 1
    return acc, states


def initial_walkers(states, n_electrons):
    """Electron k placed uniformly on a sphere of radius 1 + k/2 Bohr.

    Consumes two uniforms per electron (cos theta, then azimuth) from each
    replication's stream. Distinct radii keep the start off the r1 = r2 node.
    """
    R = states.shape[0]
    out = np.empty((R, n_electrons, 3))
    for k in range(n_electrons):
        u1, states = rng.uniform_array(states)
        u2, states = rng.uniform_array(states)
        cos_t = 2.0 * u1 - 1.0
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t * cos_t))
        phi = 2.0 * np.pi * u2
        radius = 1.0 + 0.5 * k
        out[:, k, 0] = radius * sin_t * np.cos(phi)
        out[:, k, 1] = radius * sin_t * np.sin(phi)
        out[:, k, 2] = radius * cos_t
    return out, states


def run_batch(system, cfg, states, start, trial=None, lam0=0.0):
    """Run R replications from ``start`` (shape ``(R, *system.shape)``).

    Returns ``(Z, log_Z, states)`` where Z and log_Z have shape
    ``(R, len(cfg.checkpoint_times))``.
    """
    states = np.array(states, dtype=np.uint32)
    start = np.asarray(start, dtype=float)
    if start.shape[1:] != tuple(system.shape):
        raise ParameterError(f"start walkers have shape {start.shape[1:]}, expected {system.shape}")
    if cfg.mode == GFK:
        if trial is None:
            raise ParameterError("GFK mode requires a trial function")
        acc = start_accumulator(start, trial)
    else:
        acc = start_accumulator(start)
    ckpts = cfg.checkpoint_steps
    log_z = np.empty((start.shape[0], len(ckpts)))
    j = 0
    for _ in range(ckpts[-1]):
        if cfg.mode == GFK:
            acc, states = gfk_step(acc, states, cfg, system, trial, lam0)
        else:
            acc, states = fk_step(acc, states, cfg, system)
        if acc.step_index == ckpts[j]:
            log_z[:, j] = -acc.potential_sum / cfg.n
            j += 1
    if not np.all(np.isfinite(log_z)):
        raise GuardExhaustedError("non-finite path weight; singularity guard failed to bound the potential")
    return np.exp(log_z), log_z, states


def run_replication(trial, lam0, system, cfg, start, state):
    """Single-path convenience wrapper: list of ``(t, Z_m(t))``."""
    states = np.array([state], dtype=np.uint32)
    z, _, _ = run_batch(system, cfg, states, np.asarray(start, dtype=float)[None], trial, lam0)
    return list(zip(cfg.checkpoint_times, z[0].tolist()))
