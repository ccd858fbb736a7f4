"""Sensor motion models inside the unit square with a static fence.

Mobile sensors live in S = [-0.5, 0.5]^2 and reflect elastically off its
boundary; fence sensors sit on the boundary of S, evenly spaced at arc gaps of
at most r so their balls cover the boundary of the slightly larger domain
D = (1 + r/2) S.  All step functions are pure: state in, state out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import pairwise_accel

HALF = 0.5


class InvalidRadius(ValueError):
    """Sensing radius too large for the fence construction."""


@dataclass(frozen=True)
class BrownianParams:
    sigma: float = 0.5


@dataclass(frozen=True)
class BilliardParams:
    speed: float = 1.0


@dataclass(frozen=True)
class DOrsognaParams:
    alpha: float = 1.0
    beta: float = 1.0
    c_a: float = 0.45
    c_r: float = 0.5
    l_a: float = 1.0
    l_r: float = 0.1
    mass: float = 1.0


@dataclass(frozen=True)
class MotionState:
    """Positions (N, 2) and optional velocities of mobile sensors, plus the
    immutable fence layout.  Mobile ids are 0..N-1, fence ids follow."""

    time: float
    positions: np.ndarray
    velocities: np.ndarray  # None for Brownian motion
    fence: np.ndarray
    mobile_ids: tuple
    fence_ids: tuple

    def position_map(self):
        pm = {i: (float(x), float(y))
              for i, (x, y) in zip(self.mobile_ids, self.positions)}
        for i, (x, y) in zip(self.fence_ids, self.fence):
            pm[i] = (float(x), float(y))
        return pm


def fence_positions(r):
    """Evenly spaced fence sensors along the boundary of S, gap <= r."""
    if r >= HALF:
        raise InvalidRadius(f"fence construction degenerates for r={r} >= 0.5")
    if r <= 0:
        raise InvalidRadius("sensing radius must be positive")
    per_side = math.ceil(1.0 / r)
    n = 4 * per_side
    s = np.arange(n) * (4.0 / n)  # arc length from corner (-0.5, -0.5), CCW
    pts = np.empty((n, 2))
    for k, a in enumerate(s):
        side, frac = divmod(a, 1.0)
        if side == 0:
            pts[k] = (-HALF + frac, -HALF)
        elif side == 1:
            pts[k] = (HALF, -HALF + frac)
        elif side == 2:
            pts[k] = (HALF - frac, HALF)
        else:
            pts[k] = (-HALF, HALF - frac)
    return pts


def init_network(n_mobile, r, rng, with_velocities=False):
    """Uniform random mobile positions in S; headings uniform on the circle
    at unit speed when the model carries velocities."""
    fence = fence_positions(r)
    pos = rng.uniform(-HALF, HALF, size=(n_mobile, 2))
    vel = None
    if with_velocities:
        theta = rng.uniform(0.0, 2.0 * math.pi, size=n_mobile)
        vel = np.column_stack([np.cos(theta), np.sin(theta)])
    mobile_ids = tuple(range(n_mobile))
    fence_ids = tuple(range(n_mobile, n_mobile + len(fence)))
    return MotionState(time=0.0, positions=pos, velocities=vel, fence=fence,
                       mobile_ids=mobile_ids, fence_ids=fence_ids)


def _fold(x):
    """Mirror-fold coordinates into [-0.5, 0.5]; returns (folded, flip sign)."""
    y = np.mod(x + HALF, 2.0)
    over = y > 1.0
    y = np.where(over, 2.0 - y, y)
    sign = np.where(over, -1.0, 1.0)
    return y - HALF, sign


class BrownianMotion:
    """Driftless diffusion with elastic reflection at the walls.

    The Gaussian increment for a step is drawn up front as the step's plan;
    when the evasion stepper bisects, the plan is split into two conditioned
    half-increments that sum exactly to the original, so coarse and bisected
    endpoints agree.
    """

    stochastic = True

    def __init__(self, params):
        self.params = params

    def make_plan(self, state, dt, rng):
        sigma = self.params.sigma
        return sigma * math.sqrt(dt) * rng.standard_normal(state.positions.shape)

    def apply(self, state, dt, plan):
        pos, _ = _fold(state.positions + plan)
        return replace(state, time=state.time + dt, positions=pos)

    def split_plan(self, state, dt, plan, rng):
        # midpoint of a Brownian path conditioned on its endpoint
        half_var = self.params.sigma * math.sqrt(dt / 4.0)
        bridge = half_var * rng.standard_normal(plan.shape)
        first = 0.5 * plan + bridge
        return first, plan - first


class BilliardMotion:
    """Straight-line unit-speed motion with specular wall reflections,
    handled exactly within a step by ray folding."""

    stochastic = False

    def __init__(self, params):
        self.params = params

    def make_plan(self, state, dt, rng):
        return None

    def apply(self, state, dt, plan):
        raw = state.positions + self.params.speed * dt * state.velocities
        pos, sign = _fold(raw)
        vel = state.velocities * sign
        return replace(state, time=state.time + dt, positions=pos, velocities=vel)

    def split_plan(self, state, dt, plan, rng):
        return None, None


class DOrsognaMotion:
    """Self-propelled particles with a localized Morse interaction.

    One classical RK4 step of the second-order system per call; the pairwise
    force acts only between mobile sensors whose sensing balls overlap
    (separation below 2r).  Walls reflect position and reverse the normal
    velocity component.
    """

    stochastic = False

    def __init__(self, params, r):
        self.params = params
        self.cutoff = 2.0 * r

    def _accel(self, pos, vel):
        p = self.params
        acc = pairwise_accel(pos, vel, p.alpha, p.beta, p.c_r, p.c_a,
                             p.l_r, p.l_a, self.cutoff)
        return acc / p.mass

    def make_plan(self, state, dt, rng):
        return None

    def apply(self, state, dt, plan):
        x0, v0 = state.positions, state.velocities
        k1x, k1v = v0, self._accel(x0, v0)
        k2x, k2v = v0 + 0.5 * dt * k1v, self._accel(x0 + 0.5 * dt * k1x, v0 + 0.5 * dt * k1v)
        k3x, k3v = v0 + 0.5 * dt * k2v, self._accel(x0 + 0.5 * dt * k2x, v0 + 0.5 * dt * k2v)
        k4x, k4v = v0 + dt * k3v, self._accel(x0 + dt * k3x, v0 + dt * k3v)
        x1 = x0 + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v1 = v0 + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        pos, sign = _fold(x1)
        return replace(state, time=state.time + dt, positions=pos,
                       velocities=v1 * sign)

    def split_plan(self, state, dt, plan, rng):
        return None, None


class ScriptedMotion:
    """Positions prescribed as a function of absolute time (test harness)."""

    stochastic = False

    def __init__(self, fn):
        self.fn = fn

    def make_plan(self, state, dt, rng):
        return None

    def apply(self, state, dt, plan):
        t = state.time + dt
        pos = np.asarray(self.fn(t), dtype=float)
        return replace(state, time=t, positions=pos)

    def split_plan(self, state, dt, plan, rng):
        return None, None


def brownian_step(state, params, dt, rng):
    model = BrownianMotion(params)
    return model.apply(state, dt, model.make_plan(state, dt, rng))


def billiard_step(state, params, dt):
    return BilliardMotion(params).apply(state, dt, None)


def dorsogna_step(state, params, dt, r):
    return DOrsognaMotion(params, r).apply(state, dt, None)


def make_model(params, r):
    if isinstance(params, BrownianParams):
        return BrownianMotion(params)
    if isinstance(params, BilliardParams):
        return BilliardMotion(params)
    if isinstance(params, DOrsognaParams):
        return DOrsognaMotion(params, r)
    raise TypeError(f"unknown motion params {params!r}")
